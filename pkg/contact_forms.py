"""
Contact forms for Legweb
Differential forms on the 1-jet space J^1(R, R) with polynomial coefficients in
(x, y, p): exterior derivative, wedge products and the ideal test for the
leaves of a Legendrian web.

Basis conventions are fixed: 1-forms in (dx, dy, dp), 2-forms in
(dx^dy, dx^dp, dy^dp), 3-forms as a multiple of dx^dy^dp.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Union

try:
    from .exact_algebra import MultiPoly, Scalar, VariableError, P
except ImportError:
    from exact_algebra import MultiPoly, Scalar, VariableError, P

logger = logging.getLogger(__name__)

ZERO = MultiPoly.zero()


def _poly(value: Union[MultiPoly, Scalar]) -> MultiPoly:
    if isinstance(value, MultiPoly):
        return value
    return MultiPoly.constant(value)


@dataclass(frozen=True)
class OneForm:
    """a dx + b dy + c dp"""

    coeff_dx: MultiPoly = field(default_factory=MultiPoly.zero)
    coeff_dy: MultiPoly = field(default_factory=MultiPoly.zero)
    coeff_dp: MultiPoly = field(default_factory=MultiPoly.zero)

    @classmethod
    def dx(cls) -> 'OneForm':
        return cls(MultiPoly.constant(1), ZERO, ZERO)

    @classmethod
    def dy(cls) -> 'OneForm':
        return cls(ZERO, MultiPoly.constant(1), ZERO)

    @classmethod
    def dp(cls) -> 'OneForm':
        return cls(ZERO, ZERO, MultiPoly.constant(1))

    @classmethod
    def theta(cls) -> 'OneForm':
        """Canonical contact form dy - p dx."""
        return cls(-P, MultiPoly.constant(1), ZERO)

    @classmethod
    def theta_leaf(cls, q_value: Scalar) -> 'OneForm':
        """dp - q dx, the second generator of the leaf ideal of y'' = q."""
        return cls(MultiPoly.constant(-q_value), ZERO, MultiPoly.constant(1))

    def components(self):
        return (self.coeff_dx, self.coeff_dy, self.coeff_dp)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components())

    def __add__(self, other: 'OneForm') -> 'OneForm':
        return OneForm(*(a + b for a, b in zip(self.components(), other.components())))

    def __sub__(self, other: 'OneForm') -> 'OneForm':
        return OneForm(*(a - b for a, b in zip(self.components(), other.components())))

    def __neg__(self) -> 'OneForm':
        return OneForm(*(-a for a in self.components()))

    def times(self, factor: Union[MultiPoly, Scalar]) -> 'OneForm':
        factor = _poly(factor)
        return OneForm(*(factor * a for a in self.components()))

    def to_json(self) -> Dict:
        return {
            "dx": self.coeff_dx.to_json(),
            "dy": self.coeff_dy.to_json(),
            "dp": self.coeff_dp.to_json(),
        }


@dataclass(frozen=True)
class TwoForm:
    """A dx^dy + B dx^dp + C dy^dp"""

    coeff_dxdy: MultiPoly = field(default_factory=MultiPoly.zero)
    coeff_dxdp: MultiPoly = field(default_factory=MultiPoly.zero)
    coeff_dydp: MultiPoly = field(default_factory=MultiPoly.zero)

    def components(self):
        return (self.coeff_dxdy, self.coeff_dxdp, self.coeff_dydp)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components())

    def __add__(self, other: 'TwoForm') -> 'TwoForm':
        return TwoForm(*(a + b for a, b in zip(self.components(), other.components())))

    def __sub__(self, other: 'TwoForm') -> 'TwoForm':
        return TwoForm(*(a - b for a, b in zip(self.components(), other.components())))

    def __neg__(self) -> 'TwoForm':
        return TwoForm(*(-a for a in self.components()))

    def to_json(self) -> Dict:
        return {
            "dxdy": self.coeff_dxdy.to_json(),
            "dxdp": self.coeff_dxdp.to_json(),
            "dydp": self.coeff_dydp.to_json(),
        }


@dataclass(frozen=True)
class ThreeForm:
    """coeff dx^dy^dp"""

    coeff: MultiPoly = field(default_factory=MultiPoly.zero)

    def is_zero(self) -> bool:
        return self.coeff.is_zero()

    def __add__(self, other: 'ThreeForm') -> 'ThreeForm':
        return ThreeForm(self.coeff + other.coeff)

    def __neg__(self) -> 'ThreeForm':
        return ThreeForm(-self.coeff)

    def to_json(self) -> Dict:
        return {"dxdydp": self.coeff.to_json()}


def d_of_function(h: MultiPoly) -> OneForm:
    """dh = h_x dx + h_y dy + h_p dp.

    Raises:
        VariableError: If h still depends on the indeterminate q
    """
    if h.uses('q'):
        raise VariableError("d_of_function expects a polynomial in (x, y, p); substitute q first")
    return OneForm(h.partial('x'), h.partial('y'), h.partial('p'))


def exterior_derivative(omega: OneForm) -> TwoForm:
    a, b, c = omega.components()
    return TwoForm(
        b.partial('x') - a.partial('y'),
        c.partial('x') - a.partial('p'),
        c.partial('y') - b.partial('p'),
    )


def exterior_derivative_2(omega: TwoForm) -> ThreeForm:
    a12, a13, a23 = omega.components()
    return ThreeForm(a12.partial('p') - a13.partial('y') + a23.partial('x'))


def wedge11(a: OneForm, b: OneForm) -> TwoForm:
    a1, a2, a3 = a.components()
    b1, b2, b3 = b.components()
    return TwoForm(a1 * b2 - a2 * b1, a1 * b3 - a3 * b1, a2 * b3 - a3 * b2)


def wedge21(a: TwoForm, b: OneForm) -> ThreeForm:
    a12, a13, a23 = a.components()
    b1, b2, b3 = b.components()
    return ThreeForm(a12 * b3 - a13 * b2 + a23 * b1)


def in_web_ideal(omega: OneForm, q_value: Scalar) -> bool:
    """True iff omega lies in span{theta, dp - q dx}, tested by omega^theta^theta_a = 0."""
    witness = wedge21(wedge11(omega, OneForm.theta()), OneForm.theta_leaf(q_value))
    return witness.is_zero()


def contact_nondegeneracy() -> ThreeForm:
    """d(theta) ^ theta = dx^dp^dy = -dx^dy^dp, nowhere zero."""
    theta = OneForm.theta()
    return wedge21(exterior_derivative(theta), theta)


__all__ = [
    'OneForm', 'TwoForm', 'ThreeForm',
    'd_of_function', 'exterior_derivative', 'exterior_derivative_2',
    'wedge11', 'wedge21', 'in_web_ideal', 'contact_nondegeneracy',
]
