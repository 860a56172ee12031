"""Experiment report: CSV tables with a matching PNG figure for each.

Tables:

* ``genericity.csv`` - verifier failures of generic builds by task budget.
* ``product.csv`` - verifier failures of product towers by level count.
* ``schedule.csv`` - certified bound and actual measure of an embedding's
  image trace by level.
* ``weights.csv`` - atom weights of the deepest level of a generic build.

Exact values are written as ``num/den``; a float column beside each is for
plotting only.
"""

from __future__ import annotations

import csv
import io
import os
from fractions import Fraction
from typing import Dict, List

from .generic import Scheduler, build_generic, product_tower, verify_generic
from .homeo import build_generic_embedding
from .rat import format_rat
from .serialize import write_atomic
from .space import ProbSpace
from .tower import Tower


def _csv_text(header: List[str], rows: List[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def genericity_rows(depth: int, bound: int, points: int = 8):
    full = Scheduler(bound).coverage_index(depth, bound)
    budgets = sorted({max(1, full * i // points) for i in range(points + 1)})
    rows = []
    for b in budgets:
        t = build_generic(b, bound)
        rep = verify_generic(t, depth, bound)
        rows.append([b, len(t) - 1, len(rep.failures), rep.checked])
    return ["budget", "levels_built", "failures", "checks"], rows


def product_rows(depth: int, bound: int, max_levels: int = 8):
    rows = []
    for n in range(1, max_levels + 1):
        rep = verify_generic(product_tower(n), depth, bound)
        rows.append([n, len(rep.failures), rep.checked])
    return ["levels", "failures", "checks"], rows


def schedule_rows(budget: int):
    k = Tower.single(ProbSpace([("x", Fraction(1, 3)), ("y", Fraction(2, 3))]))
    w = build_generic_embedding(k, budget)
    tr = w.trace()
    bounds = dict(w.schedule)
    rows = []
    for n in range(len(w.base)):
        mu = tr.measure(w.base, n)
        b = bounds.get(n)
        rows.append([n, format_rat(mu), float(mu),
                     format_rat(b) if b is not None else "", float(b) if b is not None else ""])
    return ["level", "measure", "measure_float", "bound", "bound_float"], rows


def weight_rows(budget: int, bound: int):
    t = build_generic(budget, bound)
    return (["atom", "weight", "weight_float"],
            [[a, format_rat(w), float(w)] for a, w in t.deepest.items()])


def write_report(out_dir, depth: int = 3, bound: int = 6, budget: int = 60,
                 product_levels: int = 8) -> Dict[str, str]:
    """Compute every table, write CSV + PNG pairs into ``out_dir``."""
    from . import plotting

    os.makedirs(out_dir, exist_ok=True)
    written = {}

    def emit(name, header, rows):
        path = os.path.join(out_dir, name + ".csv")
        write_atomic(path, _csv_text(header, rows))
        written[name + ".csv"] = path
        png = os.path.join(out_dir, name + ".png")
        written[name + ".png"] = png
        return png

    h, rows = genericity_rows(depth, bound)
    png = emit("genericity", h, rows)
    plotting.line_plot(png, [r[0] for r in rows], {"failures": [r[2] for r in rows]},
                       f"verifier failures (depth {depth}, bound {bound})",
                       "task budget", "failures", steps=True)

    h, rows = product_rows(depth, bound, product_levels)
    png = emit("product", h, rows)
    plotting.line_plot(png, [r[0] for r in rows], {"failures": [r[1] for r in rows]},
                       "product tower", "levels", "failures")

    h, rows = schedule_rows(budget)
    png = emit("schedule", h, rows)
    xs = [r[0] for r in rows]
    bxs = [r[0] for r in rows if r[4] != ""]
    with plotting.figure(png, "embedding image trace", "base level", "mass") as ax:
        ax.plot(xs, [r[2] for r in rows], marker="o", label="measure")
        ax.step(bxs, [r[4] for r in rows if r[4] != ""], where="post", label="certified bound")
        ax.set_yscale("log", base=2)

    h, rows = weight_rows(Scheduler(bound).coverage_index(depth, bound), bound)
    png = emit("weights", h, rows)
    plotting.bar_plot(png, [r[0] for r in rows], [r[2] for r in rows],
                      "deepest-level atom weights", "atom", "weight")
    return written
