"""
Prolongation symbol for Legweb
Depth-graded symbol matrices of the compatibility equations of the model web,
the integer coefficients c^I_J that enter them, the per-depth counting table
and the total-sum identity that ties the counts to rho_d.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

try:
    from .exact_algebra import ExactMatrix, IndexRangeError, MultiPoly, WebSpecError
    from .model_web import WebSpec
    from .abelian_relations import AbelianRelation, rho, worker_count
except ImportError:
    from exact_algebra import ExactMatrix, IndexRangeError, MultiPoly, WebSpecError
    from model_web import WebSpec
    from abelian_relations import AbelianRelation, rho, worker_count

logger = logging.getLogger(__name__)


def c_coeff(I: int, J: int) -> int:
    """c^I_J = I! / (2^J (I-2J)! J!) for 0 <= J <= I/2, else 0."""
    if I < 0:
        raise IndexRangeError(f"c^I_J needs I >= 0, got I = {I}")
    if J < 0 or 2 * J > I:
        return 0
    return factorial(I) // (2 ** J * factorial(I - 2 * J) * factorial(J))


@lru_cache(maxsize=None)
def c_coeff_recursive(I: int, J: int) -> int:
    """c^I_J from c^I_0 = 1 and c^I_J = (I-2J+1) c^(I-1)_(J-1) + c^(I-1)_J."""
    if I < 0:
        raise IndexRangeError(f"c^I_J needs I >= 0, got I = {I}")
    if J < 0 or 2 * J > I:
        return 0
    if J == 0:
        return 1
    return (I - 2 * J + 1) * c_coeff_recursive(I - 1, J - 1) + c_coeff_recursive(I - 1, J)


@dataclass(frozen=True)
class CCoeffTable:
    values: Dict[Tuple[int, int], int]
    I_max: int

    def __getitem__(self, key: Tuple[int, int]) -> int:
        I, J = key
        if I > self.I_max:
            return c_coeff(I, J)
        return self.values.get((I, J), 0)

    def row(self, I: int) -> List[int]:
        return [self[I, J] for J in range(I // 2 + 1)]


def c_table(I_max: int) -> CCoeffTable:
    values = {(I, J): c_coeff(I, J) for I in range(I_max + 1) for J in range(I // 2 + 1)}
    return CCoeffTable(values, I_max)


def _depth_pairs(depth: int) -> List[Tuple[int, int]]:
    """(i, j) with i + 2j = depth, i descending."""
    return [(depth - 2 * j, j) for j in range(depth // 2 + 1)]


@dataclass
class DepthBlock:
    """Symbol matrix of the depth-delta compatibility equations.

    Columns are the unknowns f^a_ij (a is 1-based), rows are the equations
    E^I_ij. Both orderings are deterministic: i descending first.
    """

    d: int
    depth: int
    variables: List[Tuple[int, int, int]]
    equations: List[Tuple[int, int, int]]
    matrix: ExactMatrix
    _rank: Optional[int] = field(default=None, repr=False)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_equations(self) -> int:
        return len(self.equations)

    def rank(self) -> int:
        if self._rank is None:
            self._rank = self.matrix.rank()
            logger.debug(f"Depth block d={self.d} depth={self.depth}: "
                         f"{self.n_equations}x{self.n_variables}, rank {self._rank}")
        return self._rank

    def is_full_rank(self) -> bool:
        return self.rank() == min(self.n_equations, self.n_variables)

    def nullspace(self) -> List[List[Fraction]]:
        return self.matrix.nullspace()

    @property
    def nullity(self) -> int:
        return self.n_variables - self.rank()


def depth_block(web: WebSpec, depth: int) -> DepthBlock:
    """Build the exact symbol block of the given depth.

    Args:
        web: Model web supplying the q-values
        depth: delta >= 1

    Returns:
        DepthBlock whose entry at row (I, i, j), column (a, i-2k, j+k) is c^I_k (q^a)^(I-k)

    Raises:
        IndexRangeError: If depth < 1
    """
    if depth < 1:
        raise IndexRangeError(f"Depth must be >= 1, got {depth}")
    pairs = _depth_pairs(depth)
    variables = [(a, i, j) for i, j in pairs for a in range(1, web.d + 1)]
    equations = [(I, i, j) for i, j in pairs for I in range(i + 1)]
    column = {var: col for col, var in enumerate(variables)}
    rows = []
    for I, i, j in equations:
        row = [Fraction(0)] * len(variables)
        for k in range(i // 2 + 1):
            coeff = c_coeff(I, k)
            if coeff == 0:
                continue
            for a, q in enumerate(web.q_values, start=1):
                row[column[(a, i - 2 * k, j + k)]] += coeff * q ** (I - k)
        rows.append(row)
    return DepthBlock(web.d, depth, variables, equations, ExactMatrix(len(rows), len(variables), rows))


def check_full_rank(web: WebSpec, depth: int) -> bool:
    """True iff the depth block has rank min(#equations, #variables)."""
    return depth_block(web, depth).is_full_rank()


def depth_counts(d: int, depth: int) -> Tuple[int, int]:
    """Closed-form (variables, equations) at one depth."""
    if depth < 1:
        raise IndexRangeError(f"Depth must be >= 1, got {depth}")
    variables = d * (depth // 2 + 1)
    equations = sum(i + 1 for i, _ in _depth_pairs(depth))
    return variables, equations


def counting_table(d: int) -> List[Tuple[int, int, int]]:
    """[(depth, variables, equations)] for depth = 1..2d-3."""
    if d < 3:
        raise IndexRangeError(f"Counting table needs d >= 3, got d = {d}")
    return [(depth,) + depth_counts(d, depth) for depth in range(1, 2 * d - 2)]


def total_sum_check(d: int) -> bool:
    """(sum of variables) - (sum of equations) over depths 1..2d-3 equals rho_d.

    Also checks the same totals against the closed sums
    d + sum_k 2kd and 2 + sum_k (k^2 + k(k+1)), k = 2..d-1.
    """
    table = counting_table(d)
    total_vars = sum(row[1] for row in table)
    total_eqs = sum(row[2] for row in table)
    closed_vars = d + sum(2 * k * d for k in range(2, d))
    closed_eqs = 2 + sum(k * k + k * (k + 1) for k in range(2, d))
    return (total_vars, total_eqs) == (closed_vars, closed_eqs) and total_vars - total_eqs == rho(d)


@dataclass
class SymbolSummary:
    web: WebSpec
    rows: List[Dict]
    total_variables: int
    total_ranks: int
    rho: int

    @property
    def solution_count(self) -> int:
        return self.total_variables - self.total_ranks

    @property
    def all_full_rank(self) -> bool:
        return all(row["full_rank"] for row in self.rows)

    @property
    def passed(self) -> bool:
        return self.all_full_rank and self.solution_count == self.rho

    def to_json(self) -> Dict:
        return {
            "d": self.web.d,
            "q": self.web.to_json()["q"],
            "rows": self.rows,
            "total_variables": self.total_variables,
            "total_ranks": self.total_ranks,
            "solution_count": self.solution_count,
            "rho": self.rho,
            "pass": self.passed,
        }


def symbol_summary(web: WebSpec, workers: Optional[int] = None) -> SymbolSummary:
    """Rank every depth block for depth = 1..2d-3 and compare the solution count with rho_d."""
    depths = list(range(1, 2 * web.d - 2))

    def summarize(depth: int) -> Dict:
        block = depth_block(web, depth)
        return {
            "depth": depth,
            "vars": block.n_variables,
            "eqs": block.n_equations,
            "rank": block.rank(),
            "full_rank": block.is_full_rank(),
        }

    workers = worker_count(workers)
    if workers == 1:
        rows = [summarize(depth) for depth in depths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(summarize, depths))
    return SymbolSummary(
        web, rows,
        sum(row["vars"] for row in rows),
        sum(row["rank"] for row in rows),
        rho(web.d),
    )


def relations_satisfy_symbol(web: WebSpec, rels: Sequence[AbelianRelation], depth_max: int) -> bool:
    """Exact check that every relation solves every equation E^I_ij of depth <= depth_max.

    With f^a_ij = d_p^i d_y^j h^a, each equation reads
    sum_k c^I_k sum_a (q^a)^(I-k) f^a_(i-2k)(j+k) = 0.
    """
    for rel in rels:
        if rel.d != web.d:
            raise WebSpecError(f"Relation has {rel.d} components but the web has d = {web.d}")
        cache: Dict[Tuple[int, int, int], MultiPoly] = {}

        def f(a: int, i: int, j: int) -> MultiPoly:
            key = (a, i, j)
            if key not in cache:
                if i > 0:
                    cache[key] = f(a, i - 1, j).partial('p')
                elif j > 0:
                    cache[key] = f(a, 0, j - 1).partial('y')
                else:
                    cache[key] = rel.components[a]
            return cache[key]

        for depth in range(1, depth_max + 1):
            for i, j in _depth_pairs(depth):
                for I in range(i + 1):
                    total = MultiPoly.zero()
                    for k in range(i // 2 + 1):
                        coeff = c_coeff(I, k)
                        if coeff == 0:
                            continue
                        for a, q in enumerate(web.q_values):
                            total = total + f(a, i - 2 * k, j + k).scale(coeff * q ** (I - k))
                    if not total.is_zero():
                        logger.debug(f"E^{I}_{i}{j} fails for relation {rel.label}")
                        return False
    return True


__all__ = [
    'c_coeff', 'c_coeff_recursive', 'CCoeffTable', 'c_table', 'DepthBlock', 'depth_block',
    'check_full_rank', 'depth_counts', 'counting_table', 'total_sum_check',
    'SymbolSummary', 'symbol_summary', 'relations_satisfy_symbol',
]
