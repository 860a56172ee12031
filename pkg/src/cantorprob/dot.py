"""Layered Graphviz DOT text for towers, traces and level-map families."""

from __future__ import annotations

from typing import Iterable, Optional

from .rat import format_rat
from .tower import ClosedTrace, LevelMapFamily, Tower


def _q(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node(prefix: str, n: int, atom: str) -> str:
    return _q(f"{prefix}{n}:{atom}")


def _tower_lines(t: Tower, prefix: str, marked) -> list:
    lines = []
    for n, space in enumerate(t.levels):
        lines.append(f"  subgraph {_q('cluster_' + prefix + str(n))} {{")
        lines.append(f"    label={_q(f'{prefix} level {n}')};")
        lines.append("    rank=same;")
        for a, w in space.items():
            extra = ", style=filled, fillcolor=gold" if a in marked.get(n, ()) else ""
            label = _q(a)[:-1] + "\\n" + format_rat(w) + '"'
            lines.append(f"    {_node(prefix, n, a)} [label={label}{extra}];")
        lines.append("  }")
    for n, bond in enumerate(t.bonds):
        dom = bond.domain
        for a in dom.atoms:
            lines.append(f"  {_node(prefix, n + 1, a)} -> {_node(prefix, n, bond.map[a])}"
                         f" [label={_q(format_rat(dom.weight(a)))}];")
    return lines


def _marks(traces: Iterable[ClosedTrace]) -> dict:
    out: dict = {}
    for tr in traces:
        for n, s in enumerate(tr.levels):
            out.setdefault(n, set()).update(s)
    return out


def export_dot(t: Tower, traces: Iterable[ClosedTrace] = (),
               family: Optional[LevelMapFamily] = None) -> str:
    """Deterministic DOT: one cluster per level, bonds point to the coarser level.

    Trace atoms are filled.  With ``family`` its target tower is drawn as
    well (prefix ``B``) and each paired bijection becomes dashed edges; when
    ``t`` is a prefix of the family's source the source is drawn instead.
    """
    if family is not None and family.source.levels[:len(t)] == t.levels:
        t = family.source  # draw the extension the family actually pairs
    lines = ["digraph tower {", "  rankdir=BT;", "  node [shape=box];"]
    lines += _tower_lines(t, "A", _marks(traces))
    if family is not None:
        tgt_marks = _marks([family.target_trace] if family.target_trace else [])
        lines += _tower_lines(family.target, "B", tgt_marks)
        for (n, m), mp in zip(family.pairs, family.maps):
            if n > t.last:
                continue
            for a in t.levels[n].atoms:
                if a in mp:
                    lines.append(f"  {_node('A', n, a)} -> {_node('B', m, mp[a])}"
                                 " [style=dashed, constraint=false];")
    lines.append("}")
    return "\n".join(lines) + "\n"
