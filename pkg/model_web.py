"""
Model Legendrian web for Legweb
The d-web y'' = q^a with distinct constants q^a on J^1(R, R), its universal
first integrals u^{m+1}_j and the weight / depth gradings.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Optional

try:
    from .exact_algebra import (
        ExactMatrix, IndexRangeError, MultiPoly, Scalar, VariableError, WebSpecError,
        coefficient_rows, format_rational, parse_rational, X, Y, P, Q,
    )
except ImportError:
    from exact_algebra import (
        ExactMatrix, IndexRangeError, MultiPoly, Scalar, VariableError, WebSpecError,
        coefficient_rows, format_rational, parse_rational, X, Y, P, Q,
    )

logger = logging.getLogger(__name__)

# grading with weight(x, y, p, q) = (-1, 0, 1, 2); each u^{m+1}_j is homogeneous of weight j
GRADED_WEIGHTS = (-1, 0, 1, 2)


@dataclass(frozen=True)
class WebSpec:
    """The model web y'' = q^a, a = 1..d, with pairwise distinct rational q^a."""

    q_values: Tuple[Fraction, ...]

    def __post_init__(self):
        values = tuple(parse_rational(v) for v in self.q_values)
        object.__setattr__(self, 'q_values', values)
        if len(values) < 3:
            raise WebSpecError(f"A Legendrian web needs d >= 3 leaves, got d = {len(values)}")
        if len(set(values)) != len(values):
            duplicates = sorted({format_rational(v) for v in values if values.count(v) > 1})
            raise WebSpecError(f"q-values must be pairwise distinct; repeated: {', '.join(duplicates)}")

    @property
    def d(self) -> int:
        return len(self.q_values)

    @classmethod
    def default(cls, d: int) -> 'WebSpec':
        """q = (0, 1, ..., d-1)."""
        if d < 3:
            raise WebSpecError(f"A Legendrian web needs d >= 3 leaves, got d = {d}")
        return cls(tuple(Fraction(a) for a in range(d)))

    def to_json(self) -> Dict:
        return {"d": self.d, "q": [format_rational(v) for v in self.q_values]}

    @classmethod
    def from_json(cls, data: Dict) -> 'WebSpec':
        if not isinstance(data, dict) or not isinstance(data.get("q"), list):
            raise WebSpecError(f"Web description needs a list 'q': {data!r}")
        q_values = tuple(parse_rational(v) for v in data["q"])
        declared = data.get("d")
        if declared is not None and (isinstance(declared, bool) or not isinstance(declared, int)):
            raise WebSpecError(f"Web declares a non-integer d = {declared!r}")
        if declared is not None and declared != len(q_values):
            raise WebSpecError(f"Web declares d = {data['d']} but lists {len(q_values)} q-values")
        return cls(q_values)


def _check_mj(m: int, j: int) -> None:
    if not isinstance(m, int) or not isinstance(j, int):
        raise IndexRangeError(f"(m, j) must be integers, got ({m!r}, {j!r})")
    if m < 2 or j < 0 or j > 2 * m - 2:
        raise IndexRangeError(f"(m, j) = ({m}, {j}) out of range: need m >= 2 and 0 <= j <= 2m-2")


def index_decompose(m: int, j: int) -> Tuple[int, int, int]:
    """The unique (j0, j1, j2) with j0+j1+j2 = m-1, j1 in {0, 1} and j = j1 + 2*j2."""
    _check_mj(m, j)
    j1 = j % 2
    j2 = j // 2
    j0 = m - 1 - j1 - j2
    return j0, j1, j2


def u_basic() -> Tuple[MultiPoly, MultiPoly, MultiPoly]:
    """The three first integrals of y'' = q that are linear in q."""
    half = Fraction(1, 2)
    u0 = Y - P * X + Q * X * X * half
    u1 = P - Q * X
    u2 = P * P * half - Q * Y
    return u0, u1, u2


@lru_cache(maxsize=None)
def u_universal(m: int, j: int) -> MultiPoly:
    """u^{m+1}_j = (u^3_0)^j0 (u^3_1)^j1 (u^3_2)^j2."""
    j0, j1, j2 = index_decompose(m, j)
    u0, u1, u2 = u_basic()
    return (u0 ** j0) * (u1 ** j1) * (u2 ** j2)


def u_universal_inductive(m: int, j: int) -> MultiPoly:
    """The recursive definition, kept separate from the closed form for cross-checking."""
    _check_mj(m, j)
    u0, _, u2 = u_basic()
    if m == 2:
        return u_basic()[j]
    if j <= 2 * m - 4:
        return u0 * u_universal_inductive(m - 1, j)
    if j == 2 * m - 3:
        return u2 * u_universal_inductive(m - 1, 2 * m - 5)
    return u2 * u_universal_inductive(m - 1, 2 * m - 4)


def u_family(m_max: int) -> List[Tuple[int, int, MultiPoly]]:
    """All (m, j, u^{m+1}_j) with 2 <= m <= m_max."""
    return [(m, j, u_universal(m, j)) for m in range(2, m_max + 1) for j in range(2 * m - 1)]


def _require_nonzero(h: MultiPoly, what: str) -> None:
    if h.is_zero():
        raise VariableError(f"{what} of the zero polynomial is undefined")


def weight_of(h: MultiPoly) -> int:
    """Max over monomials of deg_p + deg_y."""
    _require_nonzero(h, "weight")
    return max(mono[2] + mono[1] for mono in h.terms)


def depth_of(h: MultiPoly) -> int:
    """Max over monomials of deg_p + 2 deg_y."""
    _require_nonzero(h, "depth")
    return max(mono[2] + 2 * mono[1] for mono in h.terms)


def derivative_depth(h: MultiPoly) -> int:
    """Max of i + 2j over the nonzero derivatives d_p^i d_y^j h.

    Agrees with depth_of on every polynomial: d_p^i d_y^j maps distinct
    monomials to distinct monomials, so no leading term can cancel.
    """
    _require_nonzero(h, "depth")
    best = 0
    for j in range(h.degree_in('y') + 1):
        along_y = h.partial_n('y', j)
        if along_y.is_zero():
            break
        for i in range(along_y.degree_in('p') + 1):
            if not along_y.partial_n('p', i).is_zero():
                best = max(best, i + 2 * j)
    return best


def graded_weight(h: MultiPoly) -> Optional[int]:
    """Common weight under weight(x, y, p, q) = (-1, 0, 1, 2), or None if h is not homogeneous."""
    _require_nonzero(h, "graded weight")
    weights = {sum(w * e for w, e in zip(GRADED_WEIGHTS, mono)) for mono in h.terms}
    if len(weights) != 1:
        return None
    return weights.pop()


def vanishes_at_basepoint(h: MultiPoly) -> bool:
    """True iff h(0, 0, 0) = 0 identically in q."""
    return all(mono[0] + mono[1] + mono[2] > 0 for mono in h.terms)


def q_coefficient_matrix(polys: Sequence[MultiPoly]) -> ExactMatrix:
    """Rows are the coefficient vectors of polys over their common (x, y, p, q) support."""
    rows = coefficient_rows([(poly,) for poly in polys])
    width = len(rows[0]) if rows else 0
    return ExactMatrix.from_rows(rows, width)


def specialization_preserves_rank(polys: Sequence[MultiPoly], q0: Scalar) -> bool:
    """True iff substituting q = q0 keeps the span dimension of polys.

    Equivalent to: every linear combination u of polys with u(q0) = 0 is zero.
    """
    before = q_coefficient_matrix(polys).rank()
    after = q_coefficient_matrix([poly.substitute_q(q0) for poly in polys]).rank()
    return before == after


__all__ = [
    'WebSpec', 'index_decompose', 'u_basic', 'u_universal', 'u_universal_inductive', 'u_family',
    'weight_of', 'depth_of', 'derivative_depth', 'graded_weight', 'vanishes_at_basepoint',
    'q_coefficient_matrix', 'specialization_preserves_rank',
]
