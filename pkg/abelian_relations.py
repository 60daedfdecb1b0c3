"""
Abelian relations for Legweb
Construction of the rho_d Abelian relations of the model web y'' = q^a from the
universal first integrals and Vandermonde complement vectors, their exact
verification, and the exact rank of a list of relations.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

try:
    from .exact_algebra import (
        ExactMatrix, IndexRangeError, LegwebError, MultiPoly, WebSpecError,
        coefficient_rows, format_rational, in_span, parse_rational, vandermonde,
    )
    from .contact_forms import d_of_function, exterior_derivative, in_web_ideal
    from .model_web import WebSpec, depth_of, u_universal, vanishes_at_basepoint
except ImportError:
    from exact_algebra import (
        ExactMatrix, IndexRangeError, LegwebError, MultiPoly, WebSpecError,
        coefficient_rows, format_rational, in_span, parse_rational, vandermonde,
    )
    from contact_forms import d_of_function, exterior_derivative, in_web_ideal
    from model_web import WebSpec, depth_of, u_universal, vanishes_at_basepoint

logger = logging.getLogger(__name__)


def worker_count(requested: Optional[int] = None) -> int:
    """Thread pool size: an explicit request, else LEGWEB_THREADS, else 1."""
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get('LEGWEB_THREADS', '1')
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring LEGWEB_THREADS={raw!r}: not an integer")
        return 1
    if value < 1:
        logger.warning(f"Ignoring LEGWEB_THREADS={raw!r}: must be positive")
        return 1
    return value


def rho(d: int) -> int:
    """Maximum rank (d-1)(d-2)(2d+3)/6 of a Legendrian d-web."""
    if d < 3:
        raise IndexRangeError(f"rho_d is defined for d >= 3, got d = {d}")
    return (d - 1) * (d - 2) * (2 * d + 3) // 6


def rho_decomposition(d: int) -> List[Tuple[int, int]]:
    """[(d-2, 3), (d-3, 5), ..., (1, 2d-3)]; sum of count * odd is rho_d."""
    if d < 3:
        raise IndexRangeError(f"rho_d is defined for d >= 3, got d = {d}")
    return [(d - m, 2 * m - 1) for m in range(2, d)]


@dataclass(frozen=True)
class ComplementVectors:
    """v^1, ..., v^(d-1); v^mu is orthogonal to (q^a)^l for l <= d-mu-1."""

    vectors: Tuple[Tuple[Fraction, ...], ...]

    @property
    def d(self) -> int:
        return len(self.vectors) + 1

    def vector(self, mu: int) -> Tuple[Fraction, ...]:
        if mu < 1 or mu > len(self.vectors):
            raise IndexRangeError(f"mu = {mu} out of range 1..{len(self.vectors)}")
        return self.vectors[mu - 1]

    def check(self, web: WebSpec) -> bool:
        """Exact check of the orthogonality relations and linear independence."""
        for mu, vector in enumerate(self.vectors, start=1):
            for l in range(web.d - mu):
                if sum(v * q ** l for v, q in zip(vector, web.q_values)) != 0:
                    return False
        return ExactMatrix.from_rows(self.vectors, web.d).rank() == len(self.vectors)

    def to_json(self) -> List[List[str]]:
        return [[format_rational(v) for v in vector] for vector in self.vectors]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[str]]) -> 'ComplementVectors':
        return cls(tuple(tuple(parse_rational(v) for v in vector) for vector in data))


def vandermonde_complement(web: WebSpec) -> ComplementVectors:
    """Nested greedy choice of complement vectors.

    N_mu, the nullspace of the first d-mu Vandermonde rows, grows with mu;
    v^mu is the first RREF basis vector of N_mu outside span(v^1..v^(mu-1)).
    """
    chosen: List[List[Fraction]] = []
    for mu in range(1, web.d):
        basis = vandermonde(web.q_values, web.d - mu).nullspace()
        pick = next((vec for vec in basis if not in_span(chosen, vec)), None)
        if pick is None:
            # unreachable for distinct q-values
            raise WebSpecError(f"No complement vector for mu = {mu}; are the q-values distinct?")
        chosen.append(pick)
    logger.debug(f"Complement vectors for d = {web.d}: {chosen}")
    return ComplementVectors(tuple(tuple(vec) for vec in chosen))


@dataclass(frozen=True)
class AbelianRelation:
    """Un-differentiated Abelian relation (h^1, ..., h^d) with its (m, j, mu) label."""

    components: Tuple[MultiPoly, ...]
    m: Optional[int] = None
    j: Optional[int] = None
    mu: Optional[int] = None

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def label(self) -> Optional[Tuple[int, int, int]]:
        if self.m is None:
            return None
        return (self.m, self.j, self.mu)

    def to_json(self) -> Dict:
        return {
            "m": self.m,
            "j": self.j,
            "mu": self.mu,
            "components": [h.to_json() for h in self.components],
        }

    @classmethod
    def from_json(cls, data: Dict) -> 'AbelianRelation':
        try:
            components = tuple(MultiPoly.from_json(h) for h in data["components"])
        except (KeyError, TypeError) as exc:
            raise LegwebError(f"Malformed relation: {data!r}") from exc
        return cls(components, data.get("m"), data.get("j"), data.get("mu"))


def build_relations(web: WebSpec, complement: Optional[ComplementVectors] = None) -> List[AbelianRelation]:
    """The rho_d relations h^a = v^mu_a * u^{m+1}_j(q = q^a), ordered by (m, j, mu)."""
    complement = complement or vandermonde_complement(web)
    relations = []
    for m in range(2, web.d):
        for j in range(2 * m - 1):
            u = u_universal(m, j)
            specialized = [u.substitute_q(q) for q in web.q_values]
            for mu in range(1, web.d - m + 1):
                vector = complement.vector(mu)
                components = tuple(h.scale(v) for h, v in zip(specialized, vector))
                relations.append(AbelianRelation(components, m, j, mu))
    logger.debug(f"Built {len(relations)} relations for d = {web.d}")
    return relations


@dataclass(frozen=True)
class RelationReport:
    label: Optional[Tuple[int, int, int]]
    sum_zero: bool
    basepoint_vanishing: bool
    ideal_membership: Tuple[bool, ...]
    closed: bool
    failing_components: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.sum_zero and self.basepoint_vanishing and all(self.ideal_membership) and self.closed

    def to_json(self) -> Dict:
        return {
            "label": list(self.label) if self.label else None,
            "sum_zero": self.sum_zero,
            "basepoint_vanishing": self.basepoint_vanishing,
            "ideal_membership": list(self.ideal_membership),
            "closed": self.closed,
            "failing_components": list(self.failing_components),
            "passed": self.passed,
        }


def verify_relation(rel: AbelianRelation, web: WebSpec) -> RelationReport:
    """Exact check of the Abelian relation axioms for one relation.

    Args:
        rel: The relation to check
        web: The model web it should belong to

    Returns:
        RelationReport with the sum, basepoint and ideal-membership checks

    Raises:
        WebSpecError: If the relation has a different number of components than the web has leaves
    """
    if rel.d != web.d:
        raise WebSpecError(f"Relation has {rel.d} components but the web has d = {web.d}")
    total = MultiPoly.zero()
    for h in rel.components:
        total = total + h
    basepoint = all(vanishes_at_basepoint(h) for h in rel.components)
    membership = []
    closed = True
    for h, q in zip(rel.components, web.q_values):
        omega = d_of_function(h)
        membership.append(in_web_ideal(omega, q))
        closed = closed and exterior_derivative(omega).is_zero()
    failing = tuple(a for a, ok in enumerate(membership, start=1) if not ok)
    return RelationReport(rel.label, total.is_zero(), basepoint, tuple(membership), closed, failing)


def rank_of_relations(rels: Sequence[AbelianRelation]) -> int:
    """Exact rank of the flattened coefficient vectors of the relations."""
    if not rels:
        return 0
    d = rels[0].d
    if any(rel.d != d for rel in rels):
        raise WebSpecError("All relations must have the same number of components")
    rows = coefficient_rows([rel.components for rel in rels])
    matrix = ExactMatrix.from_rows(rows, len(rows[0]))
    rank = matrix.rank()
    logger.debug(f"Relation matrix {matrix.rows}x{matrix.cols} has rank {rank}")
    return rank


@dataclass
class VerificationReport:
    web: WebSpec
    reports: List[RelationReport]
    rank: int
    rho: int

    @property
    def all_relations_pass(self) -> bool:
        return all(report.passed for report in self.reports)

    @property
    def rank_matches(self) -> bool:
        return self.rank == self.rho

    @property
    def passed(self) -> bool:
        return self.all_relations_pass and self.rank_matches

    def to_json(self) -> Dict:
        return {
            "web": self.web.to_json(),
            "relations": [report.to_json() for report in self.reports],
            "rank": self.rank,
            "rho": self.rho,
            "pass": self.passed,
        }


def verify_all(rels: Sequence[AbelianRelation], web: WebSpec,
               workers: Optional[int] = None) -> VerificationReport:
    """Verify every relation (in a thread pool) and compute the exact rank."""
    workers = worker_count(workers)
    if workers == 1:
        reports = [verify_relation(rel, web) for rel in rels]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda rel: verify_relation(rel, web), rels))
    failed = sum(1 for report in reports if not report.passed)
    if failed:
        logger.info(f"{failed} of {len(reports)} relations failed verification")
    return VerificationReport(web, reports, rank_of_relations(rels), rho(web.d))


def relation_depth(rel: AbelianRelation) -> int:
    """Largest depth deg_p + 2 deg_y over the nonzero components (0 for the zero relation)."""
    depths = [depth_of(h) for h in rel.components if not h.is_zero()]
    return max(depths, default=0)


def _derivative_table(h: MultiPoly, depth_max: int) -> Dict[Tuple[int, int], MultiPoly]:
    """f_ij = d_p^i d_y^j h for i + 2j <= depth_max + 2."""
    table: Dict[Tuple[int, int], MultiPoly] = {}
    j = 0
    along_y = h
    while 2 * j <= depth_max + 2:
        along = along_y
        i = 0
        while i + 2 * j <= depth_max + 2:
            table[(i, j)] = along
            along = along.partial('p')
            i += 1
        along_y = along_y.partial('y')
        j += 1
    return table


def relations_satisfy_prolongation(web: WebSpec, rels: Sequence[AbelianRelation], depth_max: int) -> bool:
    """Exact check of d_x f_ij = -q f_(i+1)j - p f_i(j+1) - i f_(i-1)(j+1) for i + 2j <= depth_max."""
    p = MultiPoly.variable('p')
    for rel in rels:
        if rel.d != web.d:
            raise WebSpecError(f"Relation has {rel.d} components but the web has d = {web.d}")
        for h, q in zip(rel.components, web.q_values):
            f = _derivative_table(h, depth_max)
            for (i, j), fij in f.items():
                if i + 2 * j > depth_max:
                    continue
                rhs = -(f[(i + 1, j)].scale(q)) - p * f[(i, j + 1)]
                if i > 0:
                    rhs = rhs - f[(i - 1, j + 1)].scale(i)
                if fij.partial('x') != rhs:
                    logger.debug(f"Prolongation fails at (i, j) = ({i}, {j}) for relation {rel.label}")
                    return False
    return True


__all__ = [
    'worker_count', 'rho', 'rho_decomposition', 'ComplementVectors', 'vandermonde_complement',
    'AbelianRelation', 'build_relations', 'RelationReport', 'verify_relation', 'rank_of_relations',
    'VerificationReport', 'verify_all', 'relation_depth', 'relations_satisfy_prolongation',
]
