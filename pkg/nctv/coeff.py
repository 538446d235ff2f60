from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Union

import sympy

Rational = Union[int, Fraction]


@lru_cache(maxsize=None)
def cyclotomic_coefficients(n: int) -> tuple[int, ...]:
    """
    Integer coefficients of the n-th cyclotomic polynomial, constant term first.

    :param n: Conductor, at least 1
    """
    x = sympy.Symbol("x")
    poly = sympy.Poly(sympy.cyclotomic_poly(n, x), x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def _reduce(n: int, coefficients: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """
    Reduce Σ c_j x^j modulo x^n - 1 and then modulo Φ_n.

    :param n: Conductor
    :param coefficients: Exponent to coefficient map, exponents may be any integer
    :return: Canonical coefficient map with exponents below deg Φ_n and no zero entries
    """
    folded: dict[int, Fraction] = {}
    for j, c in coefficients.items():
        if c:
            folded[j % n] = folded.get(j % n, Fraction(0)) + Fraction(c)

    phi = cyclotomic_coefficients(n)
    degree = len(phi) - 1
    for top in range(n - 1, degree - 1, -1):
        lead = folded.get(top)
        if not lead:
            continue
        # Φ_n is monic, so subtracting lead * x^(top - degree) * Φ_n clears x^top
        for i, p in enumerate(phi):
            if p:
                k = top - degree + i
                folded[k] = folded.get(k, Fraction(0)) - lead * p

    return {j: c for j, c in sorted(folded.items()) if c}


class Cyclotomic:
    """
    Exact element Σ c_j ζ_n^j of the cyclotomic field Q(ζ_n), ζ_n = e(1/n), kept
    reduced modulo the n-th cyclotomic polynomial.
    """

    __slots__ = ("conductor", "coefficients")

    def __init__(self, conductor: int = 1, coefficients: Optional[Mapping[int, Rational]] = None):
        if conductor < 1:
            raise ValueError(f"Conductor must be positive, got {conductor}")
        self.conductor = conductor
        self.coefficients = _reduce(
            conductor, {j: Fraction(c) for j, c in (coefficients or {}).items()}
        )

    @classmethod
    def rational(cls, value: Rational) -> Cyclotomic:
        return cls(1, {0: value})

    @classmethod
    def root(cls, exponent: Rational, coefficient: Rational = 1) -> Cyclotomic:
        """
        The root of unity e(exponent) scaled by a rational coefficient.
        """
        exponent = Fraction(exponent)
        return cls(exponent.denominator, {exponent.numerator: coefficient})

    def lift(self, conductor: int) -> Cyclotomic:
        """
        Rewrite this element with a larger conductor.

        :param conductor: A multiple of the current conductor
        """
        if conductor % self.conductor:
            raise ValueError(f"Cannot lift conductor {self.conductor} to {conductor}")
        scale = conductor // self.conductor
        return Cyclotomic(conductor, {j * scale: c for j, c in self.coefficients.items()})

    def _common(self, other: Cyclotomic) -> tuple[Cyclotomic, Cyclotomic]:
        n = math.lcm(self.conductor, other.conductor)
        return self.lift(n), other.lift(n)

    def __add__(self, other) -> Cyclotomic:
        other = _as_cyclotomic(other)
        if other is None:
            return NotImplemented
        a, b = self._common(other)
        merged = dict(a.coefficients)
        for j, c in b.coefficients.items():
            merged[j] = merged.get(j, Fraction(0)) + c
        return Cyclotomic(a.conductor, merged)

    __radd__ = __add__

    def __neg__(self) -> Cyclotomic:
        return Cyclotomic(self.conductor, {j: -c for j, c in self.coefficients.items()})

    def __sub__(self, other) -> Cyclotomic:
        other = _as_cyclotomic(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> Cyclotomic:
        return (-self) + other

    def __mul__(self, other) -> Cyclotomic:
        other = _as_cyclotomic(other)
        if other is None:
            return NotImplemented
        a, b = self._common(other)
        product: dict[int, Fraction] = {}
        for i, c in a.coefficients.items():
            for j, d in b.coefficients.items():
                product[i + j] = product.get(i + j, Fraction(0)) + c * d
        return Cyclotomic(a.conductor, product)

    __rmul__ = __mul__

    def conjugate(self) -> Cyclotomic:
        """Complex conjugate, sending ζ_n^j to ζ_n^-j."""
        return Cyclotomic(self.conductor, {-j: c for j, c in self.coefficients.items()})

    def is_zero(self) -> bool:
        return not self.coefficients

    def rational_value(self) -> Optional[Fraction]:
        """
        Return the value as a fraction if this element is rational, None otherwise.
        """
        if set(self.coefficients) - {0}:
            return None
        return self.coefficients.get(0, Fraction(0))

    def evaluate(self) -> complex:
        return sum(
            (float(c) * cmath.exp(2j * math.pi * j / self.conductor)
             for j, c in self.coefficients.items()),
            0j,
        )

    def __eq__(self, other) -> bool:
        other = _as_cyclotomic(other)
        if other is None:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def terms(self) -> list[tuple[Fraction, Fraction]]:
        """
        Pairs (c_j, j/n) so that this element equals Σ c_j e(j/n).
        """
        return [(c, Fraction(j, self.conductor)) for j, c in self.coefficients.items()]

    def __repr__(self) -> str:
        return f"Cyclotomic({self.conductor}, {dict(self.coefficients)})"


def _as_cyclotomic(value) -> Optional[Cyclotomic]:
    if isinstance(value, Cyclotomic):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Cyclotomic.rational(value)
    return None


class PhaseScalar:
    """
    Exact scalar Σ_s C_s e(sθ) where θ is a formal symbol and each C_s is a
    cyclotomic number. Equality holds for all θ simultaneously.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Rational, Cyclotomic]] = None):
        merged: dict[Fraction, Cyclotomic] = {}
        for s, c in (terms or {}).items():
            s = Fraction(s)
            merged[s] = merged[s] + c if s in merged else c
        self.terms = {s: c for s, c in sorted(merged.items()) if not c.is_zero()}

    @classmethod
    def phase(cls, r: Rational = 0, s: Rational = 0, c: Rational = 1) -> PhaseScalar:
        """
        The scalar c·e(r + sθ).

        :param r: Constant part of the exponent
        :param s: Coefficient of θ in the exponent
        :param c: Rational prefactor
        """
        return cls({s: Cyclotomic.root(r, c)})

    @classmethod
    def constant(cls, value: Union[Rational, Cyclotomic]) -> PhaseScalar:
        if isinstance(value, Cyclotomic):
            return cls({0: value})
        return cls.phase(c=value)

    @classmethod
    def zero(cls) -> PhaseScalar:
        return cls()

    @classmethod
    def one(cls) -> PhaseScalar:
        return cls.phase()

    def __add__(self, other) -> PhaseScalar:
        other = _as_phase(other)
        if other is None:
            return NotImplemented
        merged = dict(self.terms)
        for s, c in other.terms.items():
            merged[s] = merged[s] + c if s in merged else c
        return PhaseScalar(merged)

    __radd__ = __add__

    def __neg__(self) -> PhaseScalar:
        return PhaseScalar({s: -c for s, c in self.terms.items()})

    def __sub__(self, other) -> PhaseScalar:
        other = _as_phase(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> PhaseScalar:
        return (-self) + other

    def __mul__(self, other) -> PhaseScalar:
        other = _as_phase(other)
        if other is None:
            return NotImplemented
        product: dict[Fraction, Cyclotomic] = {}
        for s, c in self.terms.items():
            for t, d in other.terms.items():
                product[s + t] = product[s + t] + c * d if s + t in product else c * d
        return PhaseScalar(product)

    __rmul__ = __mul__

    def __pow__(self, j: int) -> PhaseScalar:
        if j < 0:
            raise ValueError("Negative powers of a phase scalar are not supported")
        result = PhaseScalar.one()
        for _ in range(j):
            result = result * self
        return result

    def conjugate(self) -> PhaseScalar:
        """Maps c·e(r + sθ) to c̄·e(-r - sθ)."""
        return PhaseScalar({-s: c.conjugate() for s, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, theta: float) -> complex:
        return sum(
            (c.evaluate() * cmath.exp(2j * math.pi * float(s) * theta)
             for s, c in self.terms.items()),
            0j,
        )

    def specialize(self, theta: Rational) -> PhaseScalar:
        """
        Substitute a rational value for θ, folding e(sθ) into the root of unity part.
        """
        theta = Fraction(theta)
        total = Cyclotomic.rational(0)
        for s, c in self.terms.items():
            total = total + c * Cyclotomic.root(s * theta)
        return PhaseScalar.constant(total)

    def rational_value(self) -> Optional[Fraction]:
        """
        Return the value as a fraction if it is a θ-independent rational, None otherwise.
        """
        if set(self.terms) - {Fraction(0)}:
            return None
        if not self.terms:
            return Fraction(0)
        return self.terms[Fraction(0)].rational_value()

    def __eq__(self, other) -> bool:
        other = _as_phase(other)
        if other is None:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def render(self) -> str:
        """
        Text form as a sum of "c*e(r + s*t)" terms, t standing for θ.
        """
        if not self.terms:
            return "0"
        parts = []
        for s, c in self.terms.items():
            for coefficient, r in c.terms():
                parts.append(f"{coefficient}*e({r} + {s}*t)")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PhaseScalar({self.render()})"


def _as_phase(value) -> Optional[PhaseScalar]:
    if isinstance(value, PhaseScalar):
        return value
    if isinstance(value, Cyclotomic):
        return PhaseScalar.constant(value)
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return PhaseScalar.constant(value)
    return None


def e(r: Rational = 0, s: Rational = 0) -> PhaseScalar:
    """Shorthand for the phase e(r + sθ)."""
    return PhaseScalar.phase(r, s)


def phase_mul(a: PhaseScalar, b: PhaseScalar) -> PhaseScalar:
    return a * b


def phase_is_zero(a: PhaseScalar) -> bool:
    return a.is_zero()


def phase_eval(a: PhaseScalar, theta: float) -> complex:
    """
    Evaluate a formal scalar at a real θ in double precision.

    :param a: Scalar to evaluate
    :param theta: Finite real value substituted for θ
    """
    if not math.isfinite(theta):
        raise ValueError(f"Cannot evaluate at non-finite theta {theta}")
    return a.evaluate(theta)
