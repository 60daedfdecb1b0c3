"""
Numeric webs for Legweb
Floating-point verification of Legendrian 3-webs on J^1(R, R): second-order
forward automatic differentiation, the maximal-rank normal-form coframes,
structure-equation residuals, torsion extraction for a general 3-web,
Frobenius integration of the rank-3 Abelian system and the Darboux example.

Conventions:
    Coordinates (x, y, p); covectors are arrays in the basis (dx, dy, dp).
    A 2-form is an antisymmetric 3x3 array W with form = sum_{i<j} W[i, j] dx^i ^ dx^j.
    A coframe is the 3x3 array E whose rows are theta, theta^1, theta^2.
    Structure equations with pseudo-connection alpha:
        d theta   = theta^1 ^ theta^2 + 2 theta ^ alpha
        d theta^1 = theta^1 ^ alpha + theta ^ (R theta^1 + S theta^2)
        d theta^2 = theta^2 ^ alpha + theta ^ (T theta^1 - R theta^2)
        d alpha   = theta ^ (N theta^1 + L theta^2)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

try:
    from .exact_algebra import LegwebError
except ImportError:
    from exact_algebra import LegwebError

logger = logging.getLogger(__name__)

# Tolerances and numeric defaults
DETERMINANT_MARGIN = 1e-6
FD_STEP = 1e-4
TOL_NL = 1e-5
TOL_RST = 1e-4
STRUCTURE_TOL = 1e-7
DARBOUX_TOL = 1e-9
HOLONOMY_TOL = 1e-6
P_MARGIN = 1e-3

NORMAL_FORM_CASES = ('zero_disc', 'positive_disc', 'negative_disc')
SECTION_CONVENTION = 'cyclic-det/lemma-rescale/translation-thirds'


class DomainError(LegwebError):
    """Raised when a point is outside the domain of a coframe or web, or a pointwise solve is singular."""


# Second-order forward automatic differentiation

class Jet2Scalar:
    """Value, gradient and (optionally) Hessian of a function of (x, y, p) at one point."""

    __slots__ = ('value', 'grad', 'hess')

    def __init__(self, value: float, grad=None, hess=None):
        self.value = float(value)
        self.grad = np.zeros(3) if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)

    @classmethod
    def constant(cls, value: float) -> 'Jet2Scalar':
        return cls(value, np.zeros(3), np.zeros((3, 3)))

    @classmethod
    def variable(cls, value: float, index: int) -> 'Jet2Scalar':
        grad = np.zeros(3)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((3, 3)))

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    def partial(self, k: int) -> 'Jet2Scalar':
        """First-order jet of the k-th partial derivative."""
        if self.hess is None:
            raise DomainError("Partial of a first-order jet needs second derivatives")
        return Jet2Scalar(self.grad[k], self.hess[k].copy(), None)

    def _lift(self, other) -> 'Jet2Scalar':
        if isinstance(other, Jet2Scalar):
            return other
        return Jet2Scalar.constant(other)

    def _unary(self, f0: float, f1: float, f2: float) -> 'Jet2Scalar':
        grad = f1 * self.grad
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet2Scalar(f0, grad, hess)

    def __add__(self, other) -> 'Jet2Scalar':
        other = self._lift(other)
        hess = None if self.hess is None or other.hess is None else self.hess + other.hess
        return Jet2Scalar(self.value + other.value, self.grad + other.grad, hess)

    __radd__ = __add__

    def __neg__(self) -> 'Jet2Scalar':
        return Jet2Scalar(-self.value, -self.grad, None if self.hess is None else -self.hess)

    def __sub__(self, other) -> 'Jet2Scalar':
        return self + (-self._lift(other))

    def __rsub__(self, other) -> 'Jet2Scalar':
        return self._lift(other) - self

    def __mul__(self, other) -> 'Jet2Scalar':
        other = self._lift(other)
        grad = self.grad * other.value + self.value * other.grad
        hess = None
        if self.hess is not None and other.hess is not None:
            cross = np.outer(self.grad, other.grad)
            hess = self.hess * other.value + other.hess * self.value + cross + cross.T
        return Jet2Scalar(self.value * other.value, grad, hess)

    __rmul__ = __mul__

    def reciprocal(self) -> 'Jet2Scalar':
        if self.value == 0.0:
            raise DomainError("Division by a jet with zero value")
        v = self.value
        return self._unary(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def __truediv__(self, other) -> 'Jet2Scalar':
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other) -> 'Jet2Scalar':
        return self._lift(other) * self.reciprocal()

    def __pow__(self, exponent: float) -> 'Jet2Scalar':
        if isinstance(exponent, int) and exponent >= 0:
            if exponent == 0:
                return Jet2Scalar.constant(1.0)
            result = self
            for _ in range(exponent - 1):
                result = result * self
            return result
        v = self.value
        if v <= 0.0 and not float(exponent).is_integer():
            raise DomainError(f"Real power {exponent} of non-positive value {v}")
        r = float(exponent)
        return self._unary(v ** r, r * v ** (r - 1), r * (r - 1) * v ** (r - 2))

    def __repr__(self) -> str:
        return f"Jet2Scalar({self.value!r}, grad={self.grad.tolist()!r}, order={self.order})"


def jexp(u: Jet2Scalar) -> Jet2Scalar:
    e = math.exp(u.value)
    return u._unary(e, e, e)


def jsqrt(u: Jet2Scalar) -> Jet2Scalar:
    if u.value <= 0.0:
        raise DomainError(f"sqrt of non-positive value {u.value}")
    s = math.sqrt(u.value)
    return u._unary(s, 0.5 / s, -0.25 / s ** 3)


def jsin(u: Jet2Scalar) -> Jet2Scalar:
    return u._unary(math.sin(u.value), math.cos(u.value), -math.sin(u.value))


def jcos(u: Jet2Scalar) -> Jet2Scalar:
    return u._unary(math.cos(u.value), -math.sin(u.value), -math.cos(u.value))


def jtan(u: Jet2Scalar) -> Jet2Scalar:
    t = math.tan(u.value)
    return u._unary(t, 1.0 + t * t, 2.0 * t * (1.0 + t * t))


def jtanh(u: Jet2Scalar) -> Jet2Scalar:
    t = math.tanh(u.value)
    return u._unary(t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    p: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.p)):
            raise DomainError(f"Non-finite point {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.p])

    @classmethod
    def from_array(cls, values) -> 'Point3':
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def shifted(self, k: int, h: float) -> 'Point3':
        values = self.as_array()
        values[k] += h
        return Point3.from_array(values)

    def to_json(self) -> List[float]:
        return [self.x, self.y, self.p]


def variables(pt: Point3) -> Tuple[Jet2Scalar, Jet2Scalar, Jet2Scalar]:
    """Seed jets for x, y, p at pt."""
    return (Jet2Scalar.variable(pt.x, 0), Jet2Scalar.variable(pt.y, 1), Jet2Scalar.variable(pt.p, 2))


# Numeric exterior algebra

JetForm = Tuple[Jet2Scalar, Jet2Scalar, Jet2Scalar]
FormFn = Callable[[Jet2Scalar, Jet2Scalar, Jet2Scalar], JetForm]


def form_values(form: JetForm) -> np.ndarray:
    return np.array([c.value for c in form])


def form_differential(form: JetForm) -> np.ndarray:
    """d of a 1-form with jet coefficients, as an antisymmetric matrix."""
    jac = np.array([c.grad for c in form])  # jac[j, i] = d_i c_j
    return jac.T - jac


def wedge(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.outer(u, v) - np.outer(v, u)


def _lift_form(form) -> JetForm:
    return tuple(c if isinstance(c, Jet2Scalar) else Jet2Scalar.constant(c) for c in form)


def _scale_form(factor: Jet2Scalar, form: JetForm) -> JetForm:
    return tuple(factor * c for c in form)


def _sub_forms(a: JetForm, b: JetForm) -> JetForm:
    return tuple(u - v for u, v in zip(a, b))


def _frame_inverse(E: np.ndarray) -> np.ndarray:
    det = linalg.det(E)
    if abs(det) < DETERMINANT_MARGIN:
        raise DomainError(f"Coframe determinant {det:.3e} below margin {DETERMINANT_MARGIN}")
    return linalg.inv(E)


def to_coframe_basis(W: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Components of a 2-form in the coframe whose inverse matrix is F."""
    return F.T @ W @ F


def theta_form(x: Jet2Scalar, y: Jet2Scalar, p: Jet2Scalar) -> JetForm:
    """Contact form dy - p dx."""
    return (-p, Jet2Scalar.constant(1.0), Jet2Scalar.constant(0.0))


# Normal-form coframes

@dataclass(frozen=True)
class Coframe3:
    """theta = dy - p dx together with theta^1, theta^2 and constant torsions (alpha = 0)."""

    case: str
    params: Dict[str, float]
    theta1: FormFn
    theta2: FormFn
    R: float
    S: float
    T: float
    domain: Callable[[Point3], bool] = field(default=lambda pt: True)

    def check_point(self, pt: Point3) -> None:
        if not self.domain(pt):
            raise DomainError(f"{pt!r} is outside the domain of the {self.case} coframe")

    def evaluate(self, pt: Point3) -> Tuple[List[JetForm], np.ndarray]:
        """Jet forms (theta, theta^1, theta^2) and the coframe matrix at pt."""
        self.check_point(pt)
        x, y, p = variables(pt)
        forms = [theta_form(x, y, p), _lift_form(self.theta1(x, y, p)), _lift_form(self.theta2(x, y, p))]
        E = np.array([form_values(f) for f in forms])
        _frame_inverse(E)
        return forms, E

    def scaled(self, factor: float) -> 'Coframe3':
        """Copy with theta^1 multiplied by a constant factor."""
        theta1 = self.theta1
        return Coframe3(self.case, dict(self.params), lambda x, y, p: tuple(factor * c for c in theta1(x, y, p)),
                        self.theta2, self.R, self.S, self.T, self.domain)


def _require_param(params: Dict[str, float], name: str, case: str) -> float:
    if name not in params:
        raise LegwebError(f"Case {case} needs parameter {name}")
    value = float(params[name])
    if value == 0.0:
        raise LegwebError(f"Case {case} needs {name} != 0")
    return value


def normal_form_coframe(case: str, params: Dict[str, float]) -> Coframe3:
    """The maximal-rank 3-web normal form of the given discriminant case.

    Args:
        case: 'zero_disc', 'positive_disc' or 'negative_disc'
        params: {'T': ...} for zero_disc and negative_disc, {'R': ...} (R > 0) for positive_disc

    Returns:
        Coframe3 with constants (0, 0, T), (R, 0, 0) or (0, -T, T) respectively

    Raises:
        LegwebError: If the case is unknown or a parameter is missing or invalid
    """
    if case == 'zero_disc':
        T = _require_param(params, 'T', case)
        return Coframe3(
            case, {'T': T},
            lambda x, y, p: (1.0, 0.0, 0.0),
            lambda x, y, p: (T * y, 0.0, 1.0),
            0.0, 0.0, T,
        )
    if case == 'positive_disc':
        R = _require_param(params, 'R', case)
        if R < 0:
            raise LegwebError(f"Case {case} needs R > 0, got {R}")
        k = 1.0 / math.sqrt(2.0 * R)

        def theta1(x, y, p):
            scale = k * jexp(R * y) / p
            return (scale * (R * p * p), 0.0, scale)

        def theta2(x, y, p):
            scale = k * jexp(-R * y) / p
            return (scale * (-R * p * p), 0.0, scale)

        return Coframe3(case, {'R': R}, theta1, theta2, R, 0.0, 0.0,
                        lambda pt: abs(pt.p) > P_MARGIN)
    if case == 'negative_disc':
        T = _require_param(params, 'T', case)

        def theta1(x, y, p):
            w2 = 1.0 - T * p * p
            w = jsqrt(w2)
            return (jsin(T * y) * w2 / w, 0.0, jcos(T * y) / w)

        def theta2(x, y, p):
            w2 = 1.0 - T * p * p
            w = jsqrt(w2)
            return (-(jcos(T * y) * w2) / w, 0.0, jsin(T * y) / w)

        def domain(pt: Point3) -> bool:
            c, s = math.cos(T * pt.y), math.sin(T * pt.y)
            return (1.0 - T * pt.p ** 2 > DETERMINANT_MARGIN and abs(c) > DETERMINANT_MARGIN
                    and abs(s) > DETERMINANT_MARGIN and abs(c + s) > DETERMINANT_MARGIN)

        return Coframe3(case, {'T': T}, theta1, theta2, 0.0, -T, T, domain)
    raise LegwebError(f"Unknown normal-form case {case!r}; expected one of {', '.join(NORMAL_FORM_CASES)}")


def structure_residuals(cf: Coframe3, pt: Point3) -> Tuple[float, float, float]:
    """Max-norm residuals of the three structure equations with alpha = 0."""
    forms, E = cf.evaluate(pt)
    th, th1, th2 = E
    d_th, d_th1, d_th2 = (form_differential(f) for f in forms)
    r0 = np.max(np.abs(d_th - wedge(th1, th2)))
    r1 = np.max(np.abs(d_th1 - wedge(th, cf.R * th1 + cf.S * th2)))
    r2 = np.max(np.abs(d_th2 - wedge(th, cf.T * th1 - cf.R * th2)))
    return float(r0), float(r1), float(r2)


def structure_residual(cf: Coframe3, pt: Point3) -> float:
    return max(structure_residuals(cf, pt))


def normal_form_box(case: str, params: Dict[str, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Sampling box for (x, y, p) inside the admissible domain of a normal form."""
    if case == 'zero_disc':
        return np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0])
    if case == 'positive_disc':
        return np.array([-1.0, -0.5, 0.5]), np.array([1.0, 0.5, 2.0])
    if case == 'negative_disc':
        T = float(params['T'])
        ys = sorted((0.1 / T, 0.6 / T))
        p_max = 0.9 / math.sqrt(T) if T > 0 else 1.0
        return np.array([-1.0, ys[0], -p_max]), np.array([1.0, ys[1], p_max])
    raise LegwebError(f"Unknown normal-form case {case!r}")


def sample_points(domain: Callable[[Point3], bool], n: int, rng: np.random.Generator,
                  low: Sequence[float], high: Sequence[float]) -> List[Point3]:
    """n uniform samples in the box [low, high] that satisfy the domain predicate."""
    points: List[Point3] = []
    attempts = 0
    while len(points) < n:
        attempts += 1
        if attempts > 100 * max(n, 1):
            raise DomainError("Sampling box hardly meets the domain")
        pt = Point3.from_array(rng.uniform(low, high))
        if domain(pt):
            points.append(pt)
    return points


# Webs given by second-order ODEs and the fiber foliation

MemberFn = Callable[[Jet2Scalar, Jet2Scalar, Jet2Scalar], Tuple[Jet2Scalar, Jet2Scalar]]


@dataclass(frozen=True)
class WebMember:
    """A leaf ideal generator dp_coeff dp + dx_coeff dx modulo theta."""

    name: str
    coeffs: MemberFn

    @classmethod
    def ode(cls, q: Callable[[Jet2Scalar, Jet2Scalar, Jet2Scalar], Jet2Scalar], name: str = "ode") -> 'WebMember':
        """The ODE y'' = q(x, y, y'), i.e. dp - q dx."""
        def coeffs(x, y, p):
            value = q(x, y, p)
            if not isinstance(value, Jet2Scalar):
                value = Jet2Scalar.constant(value)
            return Jet2Scalar.constant(1.0), -value
        return cls(name, coeffs)

    @classmethod
    def fiber(cls) -> 'WebMember':
        """Fibers of J^1 -> J^0, i.e. dx."""
        return cls("fiber", lambda x, y, p: (Jet2Scalar.constant(0.0), Jet2Scalar.constant(1.0)))


@dataclass(frozen=True)
class Web3Numeric:
    members: Tuple[WebMember, WebMember, WebMember]
    domain: Callable[[Point3], bool] = field(default=lambda pt: True)
    name: str = "web"

    def permuted(self, order: Sequence[int]) -> 'Web3Numeric':
        """Members reordered; order is a permutation of (0, 1, 2)."""
        return Web3Numeric(tuple(self.members[i] for i in order), self.domain, self.name)


def model_web_numeric(q_values: Sequence[float]) -> Web3Numeric:
    if len(q_values) != 3:
        raise LegwebError(f"A numeric 3-web needs 3 q-values, got {len(q_values)}")
    members = tuple(WebMember.ode(lambda x, y, p, q=float(q): q, f"y''={q}") for q in q_values)
    return Web3Numeric(members, name=f"model{tuple(q_values)}")


def normal_form_web(case: str, params: Dict[str, float]) -> Web3Numeric:
    """The web whose leaf ideals are spanned by theta and theta^a of the normal-form coframe."""
    cf = normal_form_coframe(case, params)
    if case == 'zero_disc':
        T = cf.T
        members = (
            WebMember.fiber(),
            WebMember.ode(lambda x, y, p: -T * y, "y''=-Ty"),
            WebMember.ode(lambda x, y, p: -T * y - 1.0, "y''=-Ty-1"),
        )
    elif case == 'positive_disc':
        R = cf.R
        members = (
            WebMember.ode(lambda x, y, p: -R * p * p, "y''=-Rp^2"),
            WebMember.ode(lambda x, y, p: R * p * p, "y''=Rp^2"),
            WebMember.ode(lambda x, y, p: -R * jtanh(R * y) * p * p, "y''=-R tanh(Ry) p^2"),
        )
    else:
        T = cf.T

        def ratio(y):
            c, s = jcos(T * y), jsin(T * y)
            return (c - s) / (c + s)

        members = (
            WebMember.ode(lambda x, y, p: -jtan(T * y) * (1.0 - T * p * p), "y''=-tan(Ty)(1-Tp^2)"),
            WebMember.ode(lambda x, y, p: (1.0 - T * p * p) / jtan(T * y), "y''=cot(Ty)(1-Tp^2)"),
            WebMember.ode(lambda x, y, p: ratio(y) * (1.0 - T * p * p), "y''=(cos-sin)/(cos+sin)(Ty)(1-Tp^2)"),
        )
    return Web3Numeric(members, cf.domain, f"{case}{cf.params}")


def darboux_web(D_plus: float, D: float) -> Web3Numeric:
    """Fibers and the geodesic ODEs y'' = p/2 + D e^{-2x} p^3 for D = D_plus and D."""
    if D_plus == D:
        raise DomainError("The Darboux web needs D != D_plus")

    def geodesic(constant: float):
        return lambda x, y, p: 0.5 * p + constant * jexp(-2.0 * x) * p * p * p

    members = (
        WebMember.ode(geodesic(D_plus), "geodesic(D_plus)"),
        WebMember.ode(geodesic(D), "geodesic(D)"),
        WebMember.fiber(),
    )
    return Web3Numeric(members, lambda pt: abs(pt.p) > P_MARGIN, f"darboux({D_plus}, {D})")


# Torsion extraction

@dataclass(frozen=True)
class TorsionRecord:
    R: float
    S: float
    T: float
    N: float
    L: float
    convention: str = SECTION_CONVENTION

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.R, self.S, self.T, self.N, self.L)

    def to_json(self) -> Dict:
        return {"R": self.R, "S": self.S, "T": self.T, "N": self.N, "L": self.L,
                "convention": self.convention}


@dataclass
class _Section:
    """Normalized coframe at one point, before the translation by t."""

    theta: np.ndarray
    theta_a: Tuple[np.ndarray, np.ndarray]
    d_theta: np.ndarray
    d_theta_a: Tuple[np.ndarray, np.ndarray]
    a: Jet2Scalar
    b: Jet2Scalar

    @property
    def t(self) -> np.ndarray:
        return np.array([self.b.value / 3.0, -self.a.value / 3.0])

    @property
    def dt(self) -> np.ndarray:
        """dt[k, a] = d_k t^a."""
        return np.column_stack([self.b.grad / 3.0, -self.a.grad / 3.0])


def _jet_inverse(rows: Sequence[JetForm]) -> List[List[Jet2Scalar]]:
    """Inverse of the 3x3 jet matrix with the given rows, by the adjugate."""
    det = sum((rows[0][k] * (rows[1][(k + 1) % 3] * rows[2][(k + 2) % 3]
                             - rows[1][(k + 2) % 3] * rows[2][(k + 1) % 3]) for k in range(3)),
              Jet2Scalar.constant(0.0))
    inv_det = det.reciprocal()
    inverse = []
    for i in range(3):
        row = []
        for j in range(3):
            j1, j2, i1, i2 = (j + 1) % 3, (j + 2) % 3, (i + 1) % 3, (i + 2) % 3
            row.append((rows[j1][i1] * rows[j2][i2] - rows[j1][i2] * rows[j2][i1]) * inv_det)
        inverse.append(row)
    return inverse


def _jet_component(form: JetForm, F: List[List[Jet2Scalar]], a: int, b: int) -> Jet2Scalar:
    """Component (a, b) of d(form) in the coframe whose inverse is F; one derivative order is spent."""
    total = Jet2Scalar.constant(0.0)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        w = form[j].partial(i) - form[i].partial(j)
        total = total + w * (F[i][a] * F[j][b] - F[j][a] * F[i][b])
    return total


def _section(web: Web3Numeric, pt: Point3) -> _Section:
    if not web.domain(pt):
        raise DomainError(f"{pt!r} is outside the domain of {web.name}")
    x, y, p = variables(pt)
    # v_a = (dp_coeff, dx_coeff); c_a = det(v_{a+1}, v_{a+2}) makes sum c_a v_a = 0
    v = [member.coeffs(x, y, p) for member in web.members]
    c = []
    for a in range(3):
        (p1, x1), (p2, x2) = v[(a + 1) % 3], v[(a + 2) % 3]
        c.append(p1 * x2 - x1 * p2)
    if min(abs(ca.value) for ca in c) < DETERMINANT_MARGIN:
        raise DomainError(f"Web members are not transversal at {pt!r}")
    A = [c[a] * v[a][1] for a in range(3)]
    B = [c[a] * v[a][0] for a in range(3)]
    theta = theta_form(x, y, p)
    delta = A[0] * B[1] - B[0] * A[1]
    theta_prime = _scale_form(delta, theta)
    forms = []
    for a in range(2):
        shift = B[a].partial(0) + p * B[a].partial(1) - A[a].partial(2)
        leaf = (A[a], Jet2Scalar.constant(0.0), B[a])
        forms.append(_sub_forms(leaf, _scale_form(shift, theta)))
    rows = [theta_prime, forms[0], forms[1]]
    E = np.array([form_values(f) for f in rows])
    _frame_inverse(E)
    # a, b keep first derivatives so that dt needs no differencing
    F = _jet_inverse(rows)
    top = _jet_component(theta_prime, F, 1, 2)
    if abs(top.value - 1.0) > 1e-6:
        raise DomainError(f"Coframe normalization failed at {pt!r}: theta1^theta2 component {top.value}")
    return _Section(
        E[0], (E[1], E[2]), form_differential(theta_prime),
        (form_differential(forms[0]), form_differential(forms[1])),
        _jet_component(theta_prime, F, 0, 1), _jet_component(theta_prime, F, 0, 2),
    )


def _stencil_gradient(fn: Callable[[Point3], np.ndarray], pt: Point3, h: float) -> np.ndarray:
    """Rows k: d/dx^k of the vector fn, by the five-point central stencil."""
    rows = []
    for k in range(3):
        f2p, f1p, f1m, f2m = (fn(pt.shifted(k, s * h)) for s in (2.0, 1.0, -1.0, -2.0))
        rows.append((f2m - f2p + 8.0 * (f1p - f1m)) / (12.0 * h))
    return np.array(rows)


@dataclass
class _FirstOrder:
    E: np.ndarray
    F: np.ndarray
    alpha: np.ndarray
    R: float
    S: float
    T: float


def _first_order(web: Web3Numeric, pt: Point3) -> _FirstOrder:
    sec = _section(web, pt)
    t = sec.t
    dt = sec.dt
    tilde = [sec.theta_a[a] + t[a] * sec.theta for a in range(2)]
    E = np.array([sec.theta, tilde[0], tilde[1]])
    F = _frame_inverse(E)
    d_tilde = [
        to_coframe_basis(sec.d_theta_a[a] + wedge(dt[:, a], sec.theta) + t[a] * sec.d_theta, F)
        for a in range(2)
    ]
    e1, S = d_tilde[0][0, 1], d_tilde[0][0, 2]
    T, e2 = d_tilde[1][0, 1], d_tilde[1][0, 2]
    R = 0.5 * (e1 - e2)
    alpha0 = -0.5 * (e1 + e2)
    alpha = (sec.a.value / 3.0) * tilde[0] + (sec.b.value / 3.0) * tilde[1] + alpha0 * sec.theta
    return _FirstOrder(E, F, alpha, float(R), float(S), float(T))


@dataclass
class _Extraction:
    first: _FirstOrder
    record: TorsionRecord
    covariant: np.ndarray


def _extract(web: Web3Numeric, pt: Point3, h: float) -> _Extraction:
    if h <= 0.0:
        raise LegwebError(f"Stencil step must be > 0, got {h}")
    first = _first_order(web, pt)

    def outputs(q: Point3) -> np.ndarray:
        fo = _first_order(web, q)
        return np.concatenate([fo.alpha, [fo.R, fo.S, fo.T]])

    grad = _stencil_gradient(outputs, pt, h)  # grad[k, j]
    jac = grad[:, :3]  # jac[i, j] = d_i alpha_j
    d_alpha = to_coframe_basis(jac - jac.T, first.F)
    record = TorsionRecord(first.R, first.S, first.T, float(d_alpha[0, 1]), float(d_alpha[0, 2]))
    values = np.array([first.R, first.S, first.T])
    covariant = (grad[:, 3:].T - 2.0 * np.outer(values, first.alpha)) @ first.F
    logger.debug(f"Torsion of {web.name} at {pt}: {record.as_tuple()}")
    return _Extraction(first, record, covariant)


def torsion_extract(web: Web3Numeric, pt: Point3, h: float = FD_STEP) -> TorsionRecord:
    """Torsions R, S, T, N, L of a 3-web at pt in the fixed section.

    The section: theta^a = c_a (dp_coeff dp + dx_coeff dx) with cyclic
    determinants c_a; theta -> theta/s and theta^a -> theta^a - (s^a/s) theta
    so that d theta = theta^1^theta^2 mod theta; finally the translation
    theta^a -> theta^a + t^a theta that makes the structure equations hold.
    R, S, T and alpha are exact up to rounding (dt is carried by the jets);
    N and L come from a five-point stencil of alpha with step h.
    """
    return _extract(web, pt, h).record


def covariant_derivatives(web: Web3Numeric, pt: Point3, h: float = FD_STEP) -> np.ndarray:
    """Coframe components of dR - 2R alpha, dS - 2S alpha, dT - 2T alpha (rows)."""
    return _extract(web, pt, h).covariant


def permute_torsion(record: TorsionRecord, swap: Tuple[int, int] = (1, 2)) -> TorsionRecord:
    """Torsions after exchanging web members 1 and 2: (R, S, T, N, L) -> (R, -T, -S, L, N)."""
    if tuple(sorted(swap)) != (1, 2):
        raise LegwebError(f"Only the transposition (1 2) acts on (R, S, T); got {swap}")
    return TorsionRecord(record.R, -record.T, -record.S, record.L, record.N, record.convention)


@dataclass
class MaximalRankReport:
    max_NL: float
    max_covariant: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_NL < TOL_NL and self.max_covariant < TOL_RST

    def to_json(self) -> Dict:
        return {"max_NL": self.max_NL, "max_covariant": self.max_covariant,
                "samples": self.samples, "pass": self.passed}


def maximal_rank_report(web: Web3Numeric, samples: Sequence[Point3], h: float = FD_STEP) -> MaximalRankReport:
    if not samples:
        raise LegwebError("The maximal-rank test needs at least one sample")
    max_nl = 0.0
    max_cov = 0.0
    for pt in samples:
        extraction = _extract(web, pt, h)
        max_nl = max(max_nl, abs(extraction.record.N), abs(extraction.record.L))
        max_cov = max(max_cov, float(np.max(np.abs(extraction.covariant))))
    logger.debug(f"{web.name}: max |N|,|L| = {max_nl:.3e}, max covariant derivative = {max_cov:.3e}")
    return MaximalRankReport(max_nl, max_cov, len(samples))


def maximal_rank_test(web: Web3Numeric, samples: Sequence[Point3], h: float = FD_STEP) -> bool:
    """N = L = 0 and R, S, T covariantly constant at every sample."""
    return maximal_rank_report(web, samples, h).passed


# Frobenius integration of the Abelian system

@dataclass
class FrameData:
    E: np.ndarray
    alpha: np.ndarray
    R: float
    S: float
    T: float
    N: float = 0.0
    L: float = 0.0


class FrameField:
    """Coframe, pseudo-connection and torsions as a function of the point."""

    def at(self, pt: Point3) -> FrameData:
        raise NotImplementedError


class NormalFormField(FrameField):
    def __init__(self, cf: Coframe3):
        self.cf = cf

    def at(self, pt: Point3) -> FrameData:
        _, E = self.cf.evaluate(pt)
        return FrameData(E, np.zeros(3), self.cf.R, self.cf.S, self.cf.T)


class ExtractedField(FrameField):
    def __init__(self, web: Web3Numeric, h: float = FD_STEP):
        self.web = web
        self.h = h

    def at(self, pt: Point3) -> FrameData:
        extraction = _extract(self.web, pt, self.h)
        first, record = extraction.first, extraction.record
        return FrameData(first.E, first.alpha, first.R, first.S, first.T, record.N, record.L)


def _system_matrix(frame: FrameData, velocity: np.ndarray) -> np.ndarray:
    """du/dtau = M u for u = (f, g1, g2) along a curve with the given velocity."""
    w0, w1, w2 = frame.E @ velocity
    wa = float(frame.alpha @ velocity)
    R, S, T, N, L = frame.R, frame.S, frame.T, frame.N, frame.L
    return np.array([
        [wa, w2, -w1],
        [R * w1 + S * w2 - L * w0, 2.0 * wa + R * w0, S * w0],
        [T * w1 - R * w2 + N * w0, T * w0, 2.0 * wa - R * w0],
    ])


@dataclass
class FrobeniusResult:
    endpoint: np.ndarray
    steps: int


def frobenius_solve(field: FrameField, path: Sequence[Point3], step: float = 1e-3,
                    initial: Optional[np.ndarray] = None) -> FrobeniusResult:
    """Integrate (f, g1, g2) along a polyline with fixed-step RK4.

    Args:
        field: Frame field supplying coframe, alpha and torsions
        path: Polyline vertices; path[0] is the basepoint
        step: Maximal parameter step per segment
        initial: 3-vector or 3xk matrix of initial values (identity by default)

    Returns:
        FrobeniusResult with the endpoint values (columns follow the initial columns)

    Raises:
        DomainError: If the coframe degenerates along the path
    """
    if not step > 0.0:
        raise LegwebError(f"RK4 step must be > 0, got {step}")
    u = np.eye(3) if initial is None else np.array(initial, dtype=float)
    steps = 0
    for start, end in zip(path[:-1], path[1:]):
        a, b = start.as_array(), end.as_array()
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        n = max(1, int(math.ceil(length / step)))
        velocity = b - a
        dtau = 1.0 / n

        def rhs(tau: float, state: np.ndarray) -> np.ndarray:
            frame = field.at(Point3.from_array(a + tau * velocity))
            return _system_matrix(frame, velocity) @ state

        for i in range(n):
            tau = i * dtau
            k1 = rhs(tau, u)
            k2 = rhs(tau + 0.5 * dtau, u + 0.5 * dtau * k1)
            k3 = rhs(tau + 0.5 * dtau, u + 0.5 * dtau * k2)
            k4 = rhs(tau + dtau, u + dtau * k3)
            u = u + (dtau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        steps += n
    logger.debug(f"RK4 took {steps} steps along {len(path)} vertices")
    return FrobeniusResult(u, steps)


def loop_holonomy(field: FrameField, loop: Sequence[Point3], step: float = 1e-3) -> float:
    """Max deviation from the identity after transporting the basis around a closed polyline."""
    vertices = list(loop)
    if vertices[0] != vertices[-1]:
        vertices.append(vertices[0])
    result = frobenius_solve(field, vertices, step)
    return float(np.max(np.abs(result.endpoint - np.eye(3))))


def rectangle_loop(center: Point3, axes: Tuple[int, int], half_width: float) -> List[Point3]:
    """Closed square in the plane of two coordinate axes."""
    base = center.as_array()
    i, j = axes
    corners = []
    for si, sj in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)):
        values = base.copy()
        values[i] += si * half_width
        values[j] += sj * half_width
        corners.append(Point3.from_array(values))
    return corners


# Negative control: y'' = 0, y'' = 1, y'' = y on 0 < y < 1

def negative_control_web() -> Web3Numeric:
    members = (
        WebMember.ode(lambda x, y, p: 0.0, "y''=0"),
        WebMember.ode(lambda x, y, p: 1.0, "y''=1"),
        WebMember.ode(lambda x, y, p: y, "y''=y"),
    )
    return Web3Numeric(members, lambda pt: 0.0 < pt.y < 1.0, "negative-control")


# Darboux super-integrable example

def darboux_triples(D_plus: float, D: float, x: Jet2Scalar, y: Jet2Scalar,
                    p: Jet2Scalar) -> List[Tuple[Jet2Scalar, Jet2Scalar, Jet2Scalar]]:
    """The three explicit Abelian relations (h1, h2, h3) of the Darboux web."""
    ex, emx = jexp(x), jexp(-x)
    denominator = 2.0 * p * p * (D - D_plus)
    first = (
        (-2.0 * D_plus * emx * y * y * p * p + 4.0 * p * p * ex + ex * y * y - 4.0 * p * ex * y) / denominator,
        (2.0 * D * emx * y * y * p * p - 4.0 * p * p * ex - ex * y * y + 4.0 * p * ex * y) / denominator,
        -(emx * y * y),
    )
    second = (
        (-2.0 * D_plus * emx * y * p * p - 2.0 * p * ex + ex * y) / denominator,
        (2.0 * D * emx * y * p * p + 2.0 * p * ex - ex * y) / denominator,
        -(emx * y),
    )
    third = (
        (-2.0 * D_plus * emx * p * p + ex) / denominator,
        (2.0 * D * emx * p * p - ex) / denominator,
        -emx,
    )
    return [first, second, third]


def _relative_annihilation(h: Jet2Scalar, pt: Point3, drift: float) -> float:
    gx, gy, gp = h.grad
    value = gx + pt.p * gy + drift * gp
    scale = abs(gx) + abs(pt.p * gy) + abs(drift * gp) + 1e-300
    return abs(value) / scale


@dataclass
class DarbouxReport:
    D_plus: float
    D: float
    samples: int
    max_sum_residual: float
    max_annihilation_residual: float
    max_fiber_residual: float

    @property
    def passed(self) -> bool:
        return max(self.max_sum_residual, self.max_annihilation_residual, self.max_fiber_residual) < DARBOUX_TOL

    def to_json(self) -> Dict:
        return {
            "D_plus": self.D_plus,
            "D": self.D,
            "samples": self.samples,
            "max_sum_residual": self.max_sum_residual,
            "max_annihilation_residual": self.max_annihilation_residual,
            "max_fiber_residual": self.max_fiber_residual,
            "pass": self.passed,
        }


def darboux_check(D_plus: float, D: float, samples: Sequence[Point3]) -> DarbouxReport:
    """Check the three Darboux relations at every sample.

    Raises:
        DomainError: If D == D_plus or a sample has |p| too small
    """
    if D == D_plus:
        raise DomainError("The Darboux relations need D != D_plus")
    if not samples:
        raise LegwebError("The Darboux check needs at least one sample")
    max_sum = max_ann = max_fiber = 0.0
    for pt in samples:
        if abs(pt.p) <= P_MARGIN:
            raise DomainError(f"Darboux components are singular at p = {pt.p}")
        x, y, p = variables(pt)
        drift_plus = pt.p / 2.0 + D_plus * math.exp(-2.0 * pt.x) * pt.p ** 3
        drift_minus = pt.p / 2.0 + D * math.exp(-2.0 * pt.x) * pt.p ** 3
        for h1, h2, h3 in darboux_triples(D_plus, D, x, y, p):
            total = abs(h1.value + h2.value + h3.value)
            size = abs(h1.value) + abs(h2.value) + abs(h3.value) + 1e-300
            max_sum = max(max_sum, total / size)
            max_ann = max(max_ann, _relative_annihilation(h1, pt, drift_plus),
                          _relative_annihilation(h2, pt, drift_minus))
            max_fiber = max(max_fiber, abs(h3.grad[2]))
    logger.debug(f"Darboux residuals: sum {max_sum:.3e}, annihilation {max_ann:.3e}")
    return DarbouxReport(D_plus, D, len(samples), max_sum, max_ann, max_fiber)


__all__ = [
    'DomainError', 'Jet2Scalar', 'jexp', 'jsqrt', 'jsin', 'jcos', 'jtan', 'jtanh',
    'Point3', 'variables', 'form_values', 'form_differential', 'wedge', 'to_coframe_basis',
    'Coframe3', 'normal_form_coframe', 'structure_residuals', 'structure_residual', 'normal_form_box',
    'sample_points', 'WebMember', 'Web3Numeric', 'model_web_numeric', 'normal_form_web', 'darboux_web',
    'TorsionRecord', 'torsion_extract', 'covariant_derivatives', 'permute_torsion',
    'MaximalRankReport', 'maximal_rank_report', 'maximal_rank_test', 'FrameData', 'FrameField',
    'NormalFormField', 'ExtractedField', 'FrobeniusResult', 'frobenius_solve', 'loop_holonomy',
    'rectangle_loop', 'negative_control_web', 'darboux_triples', 'DarbouxReport', 'darboux_check',
]
