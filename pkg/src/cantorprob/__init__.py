"""Exact finite shadows of the generic probability measure on the Cantor set.

Finite rational probability spaces, towers of measure preserving surjections,
a fair-scheduler construction of a generic tower with a bounded genericity
verifier, extension engines for homeomorphism families, and value-set
policies.  All arithmetic is exact (:class:`fractions.Fraction`).
"""

from .errors import *  # noqa: F401,F403
from .rat import Rat, format_rat, parse_rat, rat
from .space import (Morphism, ProbSpace, Pullback, compose_all, identity, iso_check,
                    new_space, prime_decompose, pullback, pullback_mediator, terminal,
                    to_terminal, validate_morphism)
from .tower import (ClosedTrace, Clopen, LevelMapFamily, Tower, canonical, clopen,
                    clopen_algebra_op, complement, cylinder_measure, empty_trace,
                    equip_measure, factor_through, lift_clopen, split_atom,
                    trace_from_deepest, whole)
from .generic import (GenericityReport, Scheduler, SplitTask, build_generic, conditional,
                      deepen_traces, enumerate_spaces, los_split, product_tower,
                      split_avoiding, verify_generic)
from .homeo import (AnchoredTower, EmbeddingWitness, Retraction, build_generic_embedding,
                    build_retraction, extend_along_prime, extend_homeomorphism,
                    homogeneity_map, remeasure)
from .valueset import (ValueSet, all_rationals, check_closure_star, check_h_conditions,
                       classify_finite, custom, finite, madic, madic_pullback_guard,
                       rationals_with_zero, support, uniform_space)
from .dot import export_dot

__version__ = "0.1.0"
