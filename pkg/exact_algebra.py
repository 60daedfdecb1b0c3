"""
Exact algebra for Legweb
Rational numbers, sparse polynomials over Q in (x, y, p, q) and fraction-free
exact linear algebra. Everything here is an immutable value.
"""

import logging
from fractions import Fraction
from math import lcm
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

Rational = Fraction
Monomial = Tuple[int, int, int, int]
Scalar = Union[int, Fraction]

VARIABLES = ('x', 'y', 'p', 'q')
VAR_INDEX = {name: idx for idx, name in enumerate(VARIABLES)}
ONE: Monomial = (0, 0, 0, 0)


class LegwebError(ValueError):
    """Base class for invalid input to any Legweb operation."""


class IndexRangeError(LegwebError):
    """Raised when an index such as (m, j), d or a depth is out of range."""


class WebSpecError(LegwebError):
    """Raised for duplicated or missing q-values and web size mismatches."""


class VariableError(LegwebError):
    """Raised when a polynomial uses a variable the operation does not allow."""


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse "a", "a/b", "-a/b" or a decimal string into an exact rational.

    Args:
        text: String (or int/Fraction) to parse

    Returns:
        The normalized Fraction

    Raises:
        LegwebError: If the text is not a rational literal
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise LegwebError(f"Not a rational literal: {text!r}")
    cleaned = text.strip()
    try:
        value = Fraction(cleaned)
    except (ValueError, ZeroDivisionError) as exc:
        raise LegwebError(f"Not a rational literal: {text!r}") from exc
    return value


def format_rational(value: Scalar) -> str:
    """Serialize a rational as "numerator/denominator" (denominator omitted when 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_exponent(value) -> int:
    """A non-negative integer exponent from JSON; floats, strings and booleans are rejected."""
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise LegwebError(f"Exponent must be a non-negative integer, got {value!r}")
    return value


def grlex_key(mono: Monomial) -> Tuple[int, Monomial]:
    """Graded-lex sort key: total degree, then exponents in variable order x < y < p < q."""
    return (sum(mono), mono)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


class MultiPoly:
    """Sparse polynomial over Q in the variables (x, y, p, q).

    The term map never stores a zero coefficient, so structural equality is
    polynomial equality.
    """

    __slots__ = ('_terms', '_hash')

    def __init__(self, terms: Optional[Dict[Monomial, Scalar]] = None):
        cleaned: Dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                if len(mono) != 4 or any(e < 0 for e in mono):
                    raise LegwebError(f"Invalid monomial exponents: {mono!r}")
                coeff = Fraction(coeff)
                if coeff != 0:
                    cleaned[tuple(int(e) for e in mono)] = coeff
        self._terms = cleaned
        self._hash = None

    # Constructors

    @classmethod
    def zero(cls) -> 'MultiPoly':
        return cls()

    @classmethod
    def constant(cls, value: Scalar) -> 'MultiPoly':
        return cls({ONE: value})

    @classmethod
    def variable(cls, name: str) -> 'MultiPoly':
        if name not in VAR_INDEX:
            raise VariableError(f"Unknown variable {name!r}; expected one of {VARIABLES}")
        exps = [0, 0, 0, 0]
        exps[VAR_INDEX[name]] = 1
        return cls({tuple(exps): 1})

    @classmethod
    def from_terms(cls, terms: Dict[Monomial, Scalar]) -> 'MultiPoly':
        return cls(terms)

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> 'MultiPoly':
        # terms must already be free of zero coefficients
        poly = cls.__new__(cls)
        poly._terms = terms
        poly._hash = None
        return poly

    # Inspection

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def terms_sorted(self) -> List[Tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda item: grlex_key(item[0]))

    def monomials(self) -> List[Monomial]:
        return [mono for mono, _ in self.terms_sorted()]

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def degree_in(self, var: str) -> int:
        """Largest exponent of var; -1 for the zero polynomial."""
        idx = VAR_INDEX[var]
        if not self._terms:
            return -1
        return max(mono[idx] for mono in self._terms)

    def uses(self, var: str) -> bool:
        idx = VAR_INDEX[var]
        return any(mono[idx] > 0 for mono in self._terms)

    # Arithmetic

    def _coerce(self, other) -> Optional['MultiPoly']:
        if isinstance(other, MultiPoly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return MultiPoly.constant(other)
        return None

    def __add__(self, other) -> 'MultiPoly':
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        result = dict(self._terms)
        for mono, coeff in other._terms.items():
            total = result.get(mono, 0) + coeff
            if total == 0:
                result.pop(mono, None)
            else:
                result[mono] = total
        return MultiPoly._raw(result)

    __radd__ = __add__

    def __neg__(self) -> 'MultiPoly':
        return MultiPoly._raw({mono: -coeff for mono, coeff in self._terms.items()})

    def __sub__(self, other) -> 'MultiPoly':
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> 'MultiPoly':
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, factor: Scalar) -> 'MultiPoly':
        factor = Fraction(factor)
        if factor == 0:
            return MultiPoly()
        return MultiPoly._raw({mono: coeff * factor for mono, coeff in self._terms.items()})

    def __mul__(self, other) -> 'MultiPoly':
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        result: Dict[Monomial, Fraction] = {}
        for mono_a, coeff_a in self._terms.items():
            for mono_b, coeff_b in other._terms.items():
                mono = _mono_mul(mono_a, mono_b)
                result[mono] = result.get(mono, 0) + coeff_a * coeff_b
        return MultiPoly._raw({mono: c for mono, c in result.items() if c != 0})

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> 'MultiPoly':
        if not isinstance(exponent, int) or exponent < 0:
            raise LegwebError("MultiPoly powers must be non-negative integers")
        result = MultiPoly.constant(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    # Calculus and substitution

    def partial(self, var: str) -> 'MultiPoly':
        """Formal partial derivative with respect to one of x, y, p, q."""
        if var not in VAR_INDEX:
            raise VariableError(f"Unknown variable {var!r}")
        idx = VAR_INDEX[var]
        result: Dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            power = mono[idx]
            if power == 0:
                continue
            lowered = list(mono)
            lowered[idx] = power - 1
            result[tuple(lowered)] = coeff * power
        return MultiPoly._raw(result)

    def partial_n(self, var: str, times: int) -> 'MultiPoly':
        poly = self
        for _ in range(times):
            if poly.is_zero():
                break
            poly = poly.partial(var)
        return poly

    def substitute_q(self, value: Scalar) -> 'MultiPoly':
        """Replace q by an exact rational; the result is free of q."""
        value = Fraction(value)
        result: Dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            reduced = (mono[0], mono[1], mono[2], 0)
            result[reduced] = result.get(reduced, 0) + coeff * value ** mono[3]
        return MultiPoly._raw({mono: c for mono, c in result.items() if c != 0})

    def evaluate(self, x: Scalar = 0, y: Scalar = 0, p: Scalar = 0, q: Scalar = 0) -> Fraction:
        point = (Fraction(x), Fraction(y), Fraction(p), Fraction(q))
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            term = coeff
            for base, exp in zip(point, mono):
                if exp:
                    term *= base ** exp
            total += term
        return total

    def coefficients_in_q(self) -> List['MultiPoly']:
        """Split into [h_0, h_1, ...] with self = sum h_k q^k and h_k free of q."""
        if not self._terms:
            return []
        parts: List[Dict[Monomial, Fraction]] = [dict() for _ in range(self.degree_in('q') + 1)]
        for mono, coeff in self._terms.items():
            parts[mono[3]][(mono[0], mono[1], mono[2], 0)] = coeff
        return [MultiPoly._raw(part) for part in parts]

    # Comparison, hashing, serialization

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def to_json(self) -> List[Dict]:
        return [
            {"exps": list(mono), "coeff": format_rational(coeff)}
            for mono, coeff in self.terms_sorted()
        ]

    @classmethod
    def from_json(cls, data: Iterable[Dict]) -> 'MultiPoly':
        terms: Dict[Monomial, Fraction] = {}
        for entry in data:
            try:
                exps = tuple(parse_exponent(e) for e in entry["exps"])
                coeff = parse_rational(entry["coeff"])
            except (KeyError, TypeError) as exc:
                raise LegwebError(f"Malformed polynomial term: {entry!r}") from exc
            if len(exps) != 4:
                raise LegwebError(f"Monomial must have 4 exponents: {entry!r}")
            terms[exps] = terms.get(exps, 0) + coeff
        return cls(terms)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for mono, coeff in self.terms_sorted():
            factors = []
            for name, exp in zip(VARIABLES, mono):
                if exp == 1:
                    factors.append(name)
                elif exp > 1:
                    factors.append(f"{name}^{exp}")
            if not factors:
                pieces.append(format_rational(coeff))
            elif coeff == 1:
                pieces.append("*".join(factors))
            elif coeff == -1:
                pieces.append("-" + "*".join(factors))
            else:
                pieces.append(format_rational(coeff) + "*" + "*".join(factors))
        return " + ".join(pieces).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"MultiPoly({self})"


X = MultiPoly.variable('x')
Y = MultiPoly.variable('y')
P = MultiPoly.variable('p')
Q = MultiPoly.variable('q')


def common_support(polys: Iterable[MultiPoly]) -> List[Monomial]:
    """Union of monomial supports, in graded-lex order."""
    support = set()
    for poly in polys:
        support.update(poly.terms.keys())
    return sorted(support, key=grlex_key)


def coefficient_rows(polys: Sequence[Sequence[MultiPoly]]) -> List[List[Fraction]]:
    """Flatten tuples of polynomials into coefficient rows over a shared support.

    Each row concatenates the coefficient vectors of its polynomials, slot by
    slot, so that rows from different tuples are comparable.
    """
    if not polys:
        return []
    width = len(polys[0])
    supports = [common_support(row[slot] for row in polys) for slot in range(width)]
    rows = []
    for row in polys:
        flat: List[Fraction] = []
        for slot, poly in enumerate(row):
            flat.extend(poly.coefficient(mono) for mono in supports[slot])
        rows.append(flat)
    return rows


class ExactMatrix:
    """Dense matrix over Q."""

    __slots__ = ('_rows', 'rows', 'cols')

    def __init__(self, rows: int, cols: int, entries: Optional[Sequence[Sequence[Scalar]]] = None):
        if rows < 0 or cols < 0:
            raise LegwebError("Matrix dimensions must be non-negative")
        self.rows = rows
        self.cols = cols
        if entries is None:
            self._rows = tuple(tuple(Fraction(0) for _ in range(cols)) for _ in range(rows))
        else:
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise LegwebError(f"Entries do not match a {rows}x{cols} shape")
            self._rows = tuple(tuple(Fraction(v) for v in r) for r in entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]], cols: Optional[int] = None) -> 'ExactMatrix':
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, rows)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'ExactMatrix':
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> 'ExactMatrix':
        return cls(n, n, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def entry(self, i: int, j: int) -> Fraction:
        return self._rows[i][j]

    def row(self, i: int) -> Tuple[Fraction, ...]:
        return self._rows[i]

    def to_lists(self) -> List[List[Fraction]]:
        return [list(r) for r in self._rows]

    def transpose(self) -> 'ExactMatrix':
        return ExactMatrix(self.cols, self.rows, [list(col) for col in zip(*self._rows)] if self.rows else
                           [[] for _ in range(self.cols)])

    def permute_rows(self, order: Sequence[int]) -> 'ExactMatrix':
        return ExactMatrix(self.rows, self.cols, [self._rows[i] for i in order])

    def permute_cols(self, order: Sequence[int]) -> 'ExactMatrix':
        return ExactMatrix(self.rows, self.cols, [[r[j] for j in order] for r in self._rows])

    def stack(self, other: 'ExactMatrix') -> 'ExactMatrix':
        if other.cols != self.cols:
            raise LegwebError("Cannot stack matrices with different column counts")
        return ExactMatrix(self.rows + other.rows, self.cols, list(self._rows) + list(other._rows))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.rows, self.cols, self._rows) == (other.rows, other.cols, other._rows)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._rows))

    def __repr__(self) -> str:
        return f"ExactMatrix({self.rows}x{self.cols})"

    def _integer_rows(self) -> List[List[int]]:
        # scale each row by the lcm of its denominators; rank is unchanged
        int_rows = []
        for r in self._rows:
            scale = 1
            for v in r:
                scale = lcm(scale, v.denominator)
            int_rows.append([int(v * scale) for v in r])
        return int_rows

    def rank(self) -> int:
        """Exact rank by fraction-free Bareiss elimination."""
        matrix = self._integer_rows()
        n_rows, n_cols = self.rows, self.cols
        rank = 0
        previous = 1
        for col in range(n_cols):
            if rank == n_rows:
                break
            pivot = next((r for r in range(rank, n_rows) if matrix[r][col] != 0), None)
            if pivot is None:
                continue
            if pivot != rank:
                matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
            pivot_row = matrix[rank]
            pivot_val = pivot_row[col]
            for r in range(rank + 1, n_rows):
                current = matrix[r]
                lead = current[col]
                tail = [
                    (a * pivot_val - lead * b) // previous
                    for a, b in zip(current[col + 1:], pivot_row[col + 1:])
                ]
                matrix[r] = [0] * (col + 1) + tail
            previous = pivot_val
            rank += 1
        return rank

    def rref(self) -> Tuple['ExactMatrix', List[int]]:
        """Reduced row echelon form over Q and the pivot columns."""
        matrix = [list(r) for r in self._rows]
        pivots: List[int] = []
        row = 0
        for col in range(self.cols):
            if row == self.rows:
                break
            pivot = next((r for r in range(row, self.rows) if matrix[r][col] != 0), None)
            if pivot is None:
                continue
            matrix[row], matrix[pivot] = matrix[pivot], matrix[row]
            inverse = 1 / matrix[row][col]
            matrix[row] = [v * inverse for v in matrix[row]]
            for r in range(self.rows):
                if r != row and matrix[r][col] != 0:
                    factor = matrix[r][col]
                    matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[row])]
            pivots.append(col)
            row += 1
        return ExactMatrix(self.rows, self.cols, matrix), pivots

    def nullspace(self) -> List[List[Fraction]]:
        """Deterministic RREF nullspace basis, one vector per free column in increasing order."""
        reduced, pivots = self.rref()
        pivot_set = set(pivots)
        basis = []
        for free in range(self.cols):
            if free in pivot_set:
                continue
            vector = [Fraction(0)] * self.cols
            vector[free] = Fraction(1)
            for r, pc in enumerate(pivots):
                vector[pc] = -reduced.entry(r, free)
            basis.append(vector)
        return basis

    def rank_nullspace(self) -> Tuple[int, List[List[Fraction]]]:
        rank = self.rank()
        basis = self.nullspace()
        if rank + len(basis) != self.cols:
            # the two eliminations are independent; they must agree
            raise ArithmeticError(f"Rank {rank} and nullity {len(basis)} disagree for {self!r}")
        return rank, basis


def rank_nullspace(matrix: ExactMatrix) -> Tuple[int, List[List[Fraction]]]:
    """Exact rank and deterministic RREF nullspace basis of a matrix."""
    return matrix.rank_nullspace()


def vandermonde(values: Sequence[Scalar], n_rows: int) -> ExactMatrix:
    """Rows (q^a)^l for l = 0..n_rows-1, one column per value."""
    values = [Fraction(v) for v in values]
    return ExactMatrix(n_rows, len(values), [[v ** l for v in values] for l in range(n_rows)])


def in_span(vectors: Sequence[Sequence[Scalar]], candidate: Sequence[Scalar]) -> bool:
    """Exact test whether candidate lies in the span of vectors."""
    if not vectors:
        return all(Fraction(v) == 0 for v in candidate)
    base = ExactMatrix.from_rows(vectors, len(candidate))
    extended = base.stack(ExactMatrix.from_rows([candidate], len(candidate)))
    return base.rank() == extended.rank()
