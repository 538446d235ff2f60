from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Union

from nctv.coeff import Cyclotomic, PhaseScalar, Rational, e, phase_eval
from nctv.config import ThetaMode
from nctv.errors import NctvException
from nctv.grp import FiniteGroupTag, GroupElement, identity_matrix, mat_vec, word_label

logger = logging.getLogger(__name__)

Affine = tuple[Fraction, Fraction]
Scalar = Union[PhaseScalar, Cyclotomic, int, Fraction]
Word = tuple[tuple[str, int], ...]

UNITARY_ORDER_CAP = 12


class CocycleMismatchError(NctvException):
    """Raised when elements of differently twisted algebras are combined."""
    pass


class NonUnitaryError(NctvException):
    """Raised when an order is requested for an element that is not unitary."""
    pass


def _affine(r: Rational = 0, s: Rational = 0) -> Affine:
    return (Fraction(r), Fraction(s))


@dataclass(frozen=True)
class CocycleSpec:
    """
    The 2-cocycle ω(x, y) = e(⟨Θx, y⟩ / 2) on Z^d, with Θ skew-symmetric and each
    entry an affine expression r + sθ in the formal symbol θ.
    """

    dimension: int
    mode: ThetaMode
    matrix: tuple[tuple[Affine, ...], ...]
    theta: Union[None, Fraction, float] = None

    def __post_init__(self):
        for i in range(self.dimension):
            for j in range(self.dimension):
                r, s = self.matrix[i][j]
                if (r, s) != (-self.matrix[j][i][0], -self.matrix[j][i][1]):
                    raise ValueError(f"Parameter matrix is not skew-symmetric at ({i}, {j})")

    @classmethod
    def formal(cls) -> CocycleSpec:
        """Rank two with Θ_12 = θ kept symbolic."""
        return cls(2, ThetaMode.FORMAL, ((_affine(), _affine(0, 1)), (_affine(0, -1), _affine())))

    @classmethod
    def rational(cls, theta: Rational) -> CocycleSpec:
        """Rank two at an exact rational θ; θ = 0 gives the untwisted group algebra."""
        theta = Fraction(theta)
        return cls(
            2,
            ThetaMode.RATIONAL,
            ((_affine(), _affine(theta)), (_affine(-theta), _affine())),
            theta,
        )

    @classmethod
    def numeric(cls, theta: float) -> CocycleSpec:
        """Formal arithmetic carrying a real evaluation point."""
        return cls(2, ThetaMode.NUMERIC, cls.formal().matrix, float(theta))

    @classmethod
    def skew(cls, matrix: Sequence[Sequence[Rational]]) -> CocycleSpec:
        """Rank d with a rational skew-symmetric parameter matrix."""
        return cls(
            len(matrix),
            ThetaMode.RATIONAL,
            tuple(tuple(_affine(x) for x in row) for row in matrix),
        )

    @property
    def evaluation_point(self) -> Optional[float]:
        return None if self.theta is None else float(self.theta)

    def exponent(self, x: Sequence[int], y: Sequence[int]) -> Affine:
        """
        The exponent ½⟨Θx, y⟩ as a pair (r, s) meaning r + sθ.
        """
        r, s = Fraction(0), Fraction(0)
        for i in range(self.dimension):
            if not y[i]:
                continue
            for j in range(self.dimension):
                if x[j]:
                    a, b = self.matrix[i][j]
                    r += a * x[j] * y[i]
                    s += b * x[j] * y[i]
        return (r / 2, s / 2)

    def omega(self, x: Sequence[int], y: Sequence[int]) -> PhaseScalar:
        return _omega(self, tuple(x), tuple(y))

    def extended_exponent(self, g: GroupElement, h: GroupElement) -> Affine:
        """
        Exponent of the extension cocycle ω̃((m, N), (m', N')) = ω(m, N m').
        """
        return self.exponent(g.m, mat_vec(g.N, h.m))

    def extended(self, g: GroupElement, h: GroupElement) -> PhaseScalar:
        return self.omega(g.m, mat_vec(g.N, h.m))

    def phase(self, r: Rational = 0, s: Rational = 0, entry: tuple[int, int] = (0, 1)) -> PhaseScalar:
        """
        The scalar e(r + s·Θ_jk) for the entry (j, k), which is e(r + sθ) in rank two.
        """
        a, b = self.matrix[entry[0]][entry[1]]
        return e(Fraction(r) + Fraction(s) * a, Fraction(s) * b)


@lru_cache(maxsize=65536)
def _omega(cocycle: CocycleSpec, x: tuple[int, ...], y: tuple[int, ...]) -> PhaseScalar:
    r, s = cocycle.exponent(x, y)
    return e(r, s)


def _as_scalar(value: Scalar) -> PhaseScalar:
    if isinstance(value, PhaseScalar):
        return value
    return PhaseScalar.constant(value)


class AlgebraElement:
    """
    Finitely supported element Σ c_g δ_g of the twisted group algebra
    C*(Z^d ⋊ F, ω̃), with exact coefficients.
    """

    __slots__ = ("support", "cocycle")

    def __init__(self, support: Mapping[GroupElement, Scalar], cocycle: CocycleSpec):
        self.cocycle = cocycle
        self.support: dict[GroupElement, PhaseScalar] = {}
        for g, c in support.items():
            c = _as_scalar(c)
            if not c.is_zero():
                self.support[g] = c

    @classmethod
    def delta(cls, g: GroupElement, cocycle: CocycleSpec, coefficient: Scalar = 1) -> AlgebraElement:
        return cls({g: coefficient}, cocycle)

    @classmethod
    def identity(cls, cocycle: CocycleSpec) -> AlgebraElement:
        return cls.delta(GroupElement.identity(cocycle.dimension), cocycle)

    def _check(self, other: AlgebraElement):
        if other.cocycle != self.cocycle:
            raise CocycleMismatchError(
                f"Cannot combine elements twisted by {self.cocycle} and {other.cocycle}"
            )

    def __add__(self, other) -> AlgebraElement:
        if not isinstance(other, AlgebraElement):
            other = AlgebraElement.identity(self.cocycle) * other
        self._check(other)
        merged = dict(self.support)
        for g, c in other.support.items():
            merged[g] = merged[g] + c if g in merged else c
        return AlgebraElement(merged, self.cocycle)

    __radd__ = __add__

    def __neg__(self) -> AlgebraElement:
        return AlgebraElement({g: -c for g, c in self.support.items()}, self.cocycle)

    def __sub__(self, other) -> AlgebraElement:
        return self + (-other)

    def __rsub__(self, other) -> AlgebraElement:
        return (-self) + other

    def __mul__(self, scalar: Scalar) -> AlgebraElement:
        if isinstance(scalar, AlgebraElement):
            return NotImplemented
        scalar = _as_scalar(scalar)
        return AlgebraElement({g: c * scalar for g, c in self.support.items()}, self.cocycle)

    __rmul__ = __mul__

    def __matmul__(self, other: AlgebraElement) -> AlgebraElement:
        return convolve(self, other)

    def __pow__(self, j: int) -> AlgebraElement:
        base = self if j >= 0 else self.adjoint()
        result = AlgebraElement.identity(self.cocycle)
        for _ in range(abs(j)):
            result = result @ base
        return result

    def adjoint(self) -> AlgebraElement:
        return adjoint(self)

    def trace(self) -> PhaseScalar:
        return trace(self)

    def is_zero(self) -> bool:
        return not self.support

    def is_unitary(self) -> bool:
        one = AlgebraElement.identity(self.cocycle)
        star = self.adjoint()
        return self @ star == one and star @ self == one

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            try:
                other = AlgebraElement.identity(self.cocycle) * other
            except TypeError:
                return NotImplemented
        if other.cocycle != self.cocycle:
            return False
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def specialize(self, theta: Rational) -> AlgebraElement:
        """
        Substitute an exact rational θ, giving an element of the algebra twisted
        by the rational cocycle at that point.
        """
        if self.cocycle.dimension != 2 or self.cocycle.mode == ThetaMode.RATIONAL:
            raise CocycleMismatchError("Only formal rank-two elements can be specialized")
        return AlgebraElement(
            {g: c.specialize(theta) for g, c in self.support.items()},
            CocycleSpec.rational(theta),
        )

    def evaluate(self, theta: Optional[float] = None) -> dict[GroupElement, complex]:
        """
        Numeric coefficients at θ, by default the cocycle's evaluation point.
        """
        if theta is None:
            theta = self.cocycle.evaluation_point
        if theta is None:
            raise ValueError("A formal element needs an explicit theta to be evaluated")
        return {g: phase_eval(c, theta) for g, c in self.support.items()}

    def render(self, F: Optional[FiniteGroupTag] = None) -> str:
        """
        Text form Σ coeff·u^a v^b t^c.
        """
        if not self.support:
            return "0"
        terms = []
        for g in sorted(self.support, key=lambda x: (x.N, x.m)):
            if F is not None:
                monomial = word_label(g.m, F.power_index(g.N))
            else:
                monomial = f"d({g.m}, {g.N})"
            terms.append(f"({self.support[g].render()}) {monomial}")
        return " + ".join(terms)

    def __repr__(self) -> str:
        return f"AlgebraElement({self.render()})"


def convolve(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """
    Twisted convolution, the bilinear extension of δ_g * δ_h = ω̃(g, h) δ_gh.

    :raises CocycleMismatchError: If the elements carry different cocycles
    """
    a._check(b)
    product: dict[GroupElement, PhaseScalar] = {}
    for g, c in a.support.items():
        for h, d in b.support.items():
            gh = g * h
            term = c * d * a.cocycle.extended(g, h)
            product[gh] = product[gh] + term if gh in product else term
    return AlgebraElement(product, a.cocycle)


def adjoint(a: AlgebraElement) -> AlgebraElement:
    """
    Involution f*(s) = conj(ω̃(s, s^-1)) conj(f(s^-1)).
    """
    result = {}
    for g, c in a.support.items():
        inverse = g.inverse()
        result[inverse] = c.conjugate() * a.cocycle.extended(inverse, g).conjugate()
    return AlgebraElement(result, a.cocycle)


def trace(a: AlgebraElement) -> PhaseScalar:
    """Canonical trace, the coefficient at the group identity."""
    return a.support.get(GroupElement.identity(a.cocycle.dimension), PhaseScalar.zero())


def is_projection(a: AlgebraElement) -> bool:
    return a == a.adjoint() and a == a @ a


def unitary_order(a: AlgebraElement, cap: int = UNITARY_ORDER_CAP) -> Optional[int]:
    """
    Least j <= cap with a^j = 1, or None.

    :raises NonUnitaryError: If a is not unitary
    """
    if not a.is_unitary():
        raise NonUnitaryError(f"Element {a.render()} is not unitary")
    one = AlgebraElement.identity(a.cocycle)
    power = a
    for j in range(1, cap + 1):
        if power == one:
            return j
        power = power @ a
    return None


def generator_names(d: int) -> tuple[str, ...]:
    return ("u", "v") if d == 2 else tuple(f"u{i + 1}" for i in range(d))


def generators(F: FiniteGroupTag, cocycle: CocycleSpec) -> dict[str, AlgebraElement]:
    """
    The unitaries δ_(e_i, 1) named u, v (or u1, ..., ud) and t = δ_(0, N).
    """
    d = F.dimension
    if cocycle.dimension != d:
        raise CocycleMismatchError(f"Cocycle of rank {cocycle.dimension} on a group of rank {d}")
    result = {}
    for i, name in enumerate(generator_names(d)):
        result[name] = AlgebraElement.delta(F.element([int(i == j) for j in range(d)]), cocycle)
    result["t"] = AlgebraElement.delta(F.element([0] * d, 1), cocycle)
    return result


def evaluate_word(word: Word, images: Mapping[str, AlgebraElement], cocycle: CocycleSpec) -> AlgebraElement:
    result = AlgebraElement.identity(cocycle)
    for name, exponent in word:
        result = result @ images[name] ** exponent
    return result


def render_word(word: Word) -> str:
    if not word:
        return "1"
    return " ".join(name if exponent == 1 else f"{name}^{exponent}" for name, exponent in word)


@dataclass(frozen=True)
class Relation:
    """
    A defining relation lhs = e(constant + multiple·Θ_entry) rhs among generators.
    """

    lhs: Word
    rhs: Word
    constant: Fraction = Fraction(0)
    multiple: Fraction = Fraction(0)
    entry: tuple[int, int] = (0, 1)

    @property
    def name(self) -> str:
        phase = ""
        if self.constant or self.multiple:
            symbol = "t" if self.entry == (0, 1) else f"T{self.entry[0] + 1}{self.entry[1] + 1}"
            parts = [str(self.constant)] if self.constant else []
            if self.multiple:
                parts.append(f"{self.multiple}*{symbol}")
            phase = f"e({' + '.join(parts)}) "
        return f"{render_word(self.lhs)} = {phase}{render_word(self.rhs)}"

    def holds(
        self,
        images: Mapping[str, AlgebraElement],
        cocycle: CocycleSpec,
        phase_cocycle: Optional[CocycleSpec] = None,
    ) -> bool:
        """
        Evaluate both sides with the given generator images.

        :param images: Element substituted for each generator name
        :param cocycle: Cocycle of the algebra the images live in
        :param phase_cocycle: Cocycle whose Θ entries fix the phase, by default `cocycle`
        """
        phase = (phase_cocycle or cocycle).phase(self.constant, self.multiple, self.entry)
        lhs = evaluate_word(self.lhs, images, cocycle)
        rhs = evaluate_word(self.rhs, images, cocycle)
        return lhs == rhs * phase


_HALF = Fraction(1, 2)

# Conjugation t x t^-1 of u and v, as (phase multiple of θ, word)
CONJUGATION_TABLE: dict[int, tuple[tuple[Fraction, Word], tuple[Fraction, Word]]] = {
    2: ((Fraction(0), (("u", -1),)), (Fraction(0), (("v", -1),))),
    3: ((-_HALF, (("u", -1), ("v", 1))), (Fraction(0), (("u", -1),))),
    4: ((Fraction(0), (("v", 1),)), (Fraction(0), (("u", -1),))),
    6: ((Fraction(0), (("v", 1),)), (-_HALF, (("u", -1), ("v", 1)))),
}


def relations(F: FiniteGroupTag) -> list[Relation]:
    """
    Presentation of the crossed product by its generators.
    """
    names = generator_names(F.dimension)
    result = [Relation((("t", F.order),), ())]
    if F.flip:
        for name in names:
            result.append(Relation((("t", 1), (name, 1), ("t", -1)), ((name, -1),)))
        for k in range(F.dimension):
            for j in range(k):
                result.append(Relation(
                    ((names[k], 1), (names[j], 1)),
                    ((names[j], 1), (names[k], 1)),
                    multiple=Fraction(1),
                    entry=(j, k),
                ))
        return result

    result.append(Relation((("v", 1), ("u", 1)), (("u", 1), ("v", 1)), multiple=Fraction(1)))
    for name, (multiple, word) in zip(names, CONJUGATION_TABLE[F.order]):
        result.append(Relation((("t", 1), (name, 1), ("t", -1)), word, multiple=multiple))
    return result


def default_skew_matrix(d: int) -> list[list[Fraction]]:
    """
    A rational skew-symmetric parameter matrix with distinct entries.
    """
    matrix = [[Fraction(0)] * d for _ in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            matrix[j][k] = Fraction(j + 1, k + j + 3)
            matrix[k][j] = -matrix[j][k]
    return matrix


def default_cocycle(F: FiniteGroupTag) -> CocycleSpec:
    if F.dimension == 2:
        return CocycleSpec.formal()
    return CocycleSpec.skew(default_skew_matrix(F.dimension))


def action_image(N: Sequence[Sequence[int]], x: Sequence[int], cocycle: CocycleSpec) -> AlgebraElement:
    """
    Image δ_Nx of the unitary δ_x under the automorphism induced by N.
    """
    point = identity_matrix(cocycle.dimension)
    return AlgebraElement.delta(GroupElement(mat_vec(tuple(map(tuple, N)), x), point), cocycle)


def check_generator_relations(
    F: FiniteGroupTag, cocycle: Optional[CocycleSpec] = None, radius: int = 2
) -> dict[str, bool]:
    """
    Verify the presentation of the crossed product exactly, together with the
    action formula t δ_x t^-1 = δ_Nx on a window of translations.

    :param F: The acting group
    :param cocycle: Twisting cocycle, formal θ by default
    :param radius: Half-width of the translation window
    :return: Ordered map from relation text to whether it holds
    """
    cocycle = cocycle or default_cocycle(F)
    images = generators(F, cocycle)
    report = {relation.name: relation.holds(images, cocycle) for relation in relations(F)}

    t = images["t"]
    t_inv = t.adjoint()
    if F.dimension == 2 and not F.flip:
        # α_N(u) = e(½ n11 n21 θ) u^n11 v^n21, and likewise for v with the second column
        for col, name in enumerate(("u", "v")):
            n1, n2 = F.generator[0][col], F.generator[1][col]
            expected = images["u"] ** n1 @ images["v"] ** n2 * cocycle.phase(0, _HALF * n1 * n2)
            report[f"t {name} t^-1 = e({_HALF * n1 * n2}*t) u^{n1} v^{n2}"] = (
                t @ images[name] @ t_inv == expected
            )

    window_ok = True
    for g in _window(F.dimension, radius):
        delta = AlgebraElement.delta(GroupElement(g, identity_matrix(F.dimension)), cocycle)
        if t @ delta @ t_inv != action_image(F.generator, g, cocycle):
            window_ok = False
            break
    report[f"t d_x t^-1 = d_Nx for |x| <= {radius}"] = window_ok
    return report


def _window(d: int, radius: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-radius, radius + 1), repeat=d))


@dataclass(frozen=True)
class UnitarySpec:
    """
    A unitary e(r + sθ) u^a v^b t^c with the order it should have and the
    group element it becomes in the untwisted fiber at θ = 1.
    """

    target: str
    constant: Fraction
    multiple: Fraction
    exponents: tuple[int, int, int]
    order: int

    def build(self, F: FiniteGroupTag, cocycle: CocycleSpec) -> AlgebraElement:
        g = generators(F, cocycle)
        a, b, c = self.exponents
        return (g["u"] ** a @ g["v"] ** b @ g["t"] ** c) * cocycle.phase(self.constant, self.multiple)

    def target_element(self, F: FiniteGroupTag) -> GroupElement:
        a, b, c = self.exponents
        return F.element((a, b), c)


def _unitary(target, constant, multiple, exponents, order) -> UnitarySpec:
    return UnitarySpec(target, Fraction(constant), Fraction(multiple), exponents, order)


# Order-k unitaries lifting the fiber-one elements; the u^2t entry for Z3 carries
# the phase e((1 + 2θ)/3), without it the cube is e(-2θ)
UNITARY_TABLE: dict[int, tuple[UnitarySpec, ...]] = {
    2: (
        _unitary("t", 0, 0, (0, 0, 1), 2),
        _unitary("ut", _HALF, 0, (1, 0, 1), 2),
        _unitary("vt", _HALF, 0, (0, 1, 1), 2),
        _unitary("uvt", _HALF, _HALF, (1, 1, 1), 2),
    ),
    3: (
        _unitary("t", 0, 0, (0, 0, 1), 3),
        _unitary("ut", Fraction(1, 3), Fraction(1, 6), (1, 0, 1), 3),
        _unitary("u^2t", Fraction(1, 3), Fraction(2, 3), (2, 0, 1), 3),
    ),
    4: (
        _unitary("t", 0, 0, (0, 0, 1), 4),
        _unitary("ut", Fraction(1, 4), Fraction(1, 4), (1, 0, 1), 4),
        _unitary("ut^2", _HALF, 0, (1, 0, 2), 2),
    ),
    6: (
        _unitary("t", 0, 0, (0, 0, 1), 6),
        _unitary("ut^2", Fraction(1, 3), Fraction(1, 6), (1, 0, 2), 3),
        _unitary("ut^3", _HALF, 0, (1, 0, 3), 2),
    ),
}


def unitary_family(F: FiniteGroupTag, cocycle: Optional[CocycleSpec] = None) -> dict[str, AlgebraElement]:
    cocycle = cocycle or CocycleSpec.formal()
    return {spec.target: spec.build(F, cocycle) for spec in UNITARY_TABLE[F.order]}


def bare_u2t_cube(cocycle: Optional[CocycleSpec] = None) -> AlgebraElement:
    """
    Cube of the unphased element U^2 T for F = Z3, equal to e(-2θ).
    """
    cocycle = cocycle or CocycleSpec.formal()
    g = generators(FiniteGroupTag.cyclic(3), cocycle)
    return (g["u"] ** 2 @ g["t"]) ** 3


def spectral_projection(w: AlgebraElement, k: int, twist: Scalar = 1) -> AlgebraElement:
    """
    (1/k) Σ_{j<k} (twist·w)^j, a projection when twist·w is a unitary of order k.
    """
    unit = w * twist
    total = AlgebraElement.identity(w.cocycle)
    power = AlgebraElement.identity(w.cocycle)
    for _ in range(1, k):
        power = power @ unit
        total = total + power
    return total * Fraction(1, k)


def projection_family(
    F: FiniteGroupTag, cocycle: Optional[CocycleSpec] = None
) -> dict[str, AlgebraElement]:
    """
    The explicit projections whose classes, with [1] and the module class,
    form a basis of K_0 of the crossed product.
    """
    cocycle = cocycle or CocycleSpec.formal()
    g = generators(F, cocycle)
    one = AlgebraElement.identity(cocycle)
    u, v, t = g["u"], g["v"], g["t"]
    half = Fraction(1, 2)

    if F.order == 2:
        return {
            "p": (one + t) * half,
            "q0": (one - u @ t) * half,
            "q1": (one - v @ t) * half,
            "r": (one - u @ v @ t * cocycle.phase(0, half)) * half,
        }

    if F.order == 3:
        zeta = e(Fraction(1, 3))
        phi2 = cocycle.phase(Fraction(1, 3), Fraction(1, 6))
        ut = u @ t
        u2t = UNITARY_TABLE[3][2].build(F, cocycle)
        third = Fraction(1, 3)
        return {
            "p0": (one + t + t @ t) * third,
            "p1": (one + t * zeta + (t * zeta) ** 2) * third,
            "q0": (one + ut * phi2 + ut @ ut * phi2 * phi2) * third,
            "q1": (one + ut * phi2 * zeta + (ut * zeta) ** 2 * phi2 * phi2) * third,
            "r0": (one + u2t + u2t @ u2t) * third,
            "r1": (one + u2t * zeta + (u2t * zeta) ** 2) * third,
        }

    if F.order == 4:
        i = e(Fraction(1, 4))
        y = u @ t * cocycle.phase(0, Fraction(1, 4))
        quarter = Fraction(1, 4)
        return {
            "p0": (one + t + t ** 2 + t ** 3) * quarter,
            "p1": (one + t * i - t ** 2 - t ** 3 * i) * quarter,
            "p2": (one - t + t ** 2 - t ** 3) * quarter,
            "q0": (one + y * i - y ** 2 - y ** 3 * i) * quarter,
            "q1": (one - y + y ** 2 - y ** 3) * quarter,
            "q2": (one - y * i - y ** 2 + y ** 3 * i) * quarter,
            "r": (one - u @ t ** 2) * half,
        }

    if F.order == 6:
        zeta = e(Fraction(1, 6))
        w = u @ t ** 2 * cocycle.phase(Fraction(1, 3), Fraction(1, 6))
        family = {f"p{j}": spectral_projection(t, 6, zeta ** j) for j in range(5)}
        family["q0"] = (one + w + w ** 2) * Fraction(1, 3)
        family["q1"] = (one + w * zeta ** 2 + (w * zeta ** 2) ** 2) * Fraction(1, 3)
        family["r"] = (one - u @ t ** 3) * half
        return family

    raise ValueError(f"No projection family for {F.label}")


def spectral_resolution(F: FiniteGroupTag, cocycle: Optional[CocycleSpec] = None) -> list[AlgebraElement]:
    """
    All k spectral projections of t, including the one left out of the basis.
    """
    cocycle = cocycle or CocycleSpec.formal()
    t = generators(F, cocycle)["t"]
    root = e(Fraction(1, F.order))
    return [spectral_projection(t, F.order, root ** j) for j in range(F.order)]


# Traces of the projection family, as exact rationals
TRACE_TABLE: dict[int, dict[str, Fraction]] = {
    2: {name: Fraction(1, 2) for name in ("p", "q0", "q1", "r")},
    3: {name: Fraction(1, 3) for name in ("p0", "p1", "q0", "q1", "r0", "r1")},
    4: {
        **{name: Fraction(1, 4) for name in ("p0", "p1", "p2", "q0", "q1", "q2")},
        "r": Fraction(1, 2),
    },
    6: {
        **{f"p{j}": Fraction(1, 6) for j in range(5)},
        "q0": Fraction(1, 3),
        "q1": Fraction(1, 3),
        "r": Fraction(1, 2),
    },
}


def fiber_sign(x: Sequence[int]) -> int:
    """+1 on the even sublattice 2Z^d, -1 elsewhere."""
    return 1 if all(c % 2 == 0 for c in x) else -1


def fiber_one_image(a: AlgebraElement) -> AlgebraElement:
    """
    Carry an element of the fiber at θ = 1 to the untwisted group algebra by
    δ_(x, h) -> ε(x) δ_(x, h), which sends u -> -u, v -> -v and fixes t.
    """
    if a.cocycle != CocycleSpec.rational(1):
        raise CocycleMismatchError("The fiber-one identification needs an element at θ = 1")
    return AlgebraElement(
        {g: c * fiber_sign(g.m) for g, c in a.support.items()}, CocycleSpec.rational(0)
    )


def fiber_one_identification(F: FiniteGroupTag, radius: int = 1) -> dict[str, bool]:
    """
    Check that the fibers at θ = 1 and θ = 0 are the untwisted group algebra:
    multiplicativity of the sign map, each relation carried to its untwisted
    form, the order-k unitaries landing on group elements, and the identity at 0.
    """
    one_fiber = CocycleSpec.rational(1)
    untwisted = CocycleSpec.rational(0)
    report: dict[str, bool] = {}

    elements = [F.element(x, j) for x in _window(2, radius) for j in range(F.order)]
    report["sign map is multiplicative"] = all(
        fiber_sign(g.m) * fiber_sign(h.m) * one_fiber.extended(g, h)
        == PhaseScalar.constant(fiber_sign((g * h).m))
        for g in elements
        for h in elements
    )

    plain = generators(F, untwisted)
    signed = {"u": -plain["u"], "v": -plain["v"], "t": plain["t"]}
    for relation in relations(F):
        report[f"theta=1: {relation.name}"] = relation.holds(signed, untwisted, one_fiber)

    for spec in UNITARY_TABLE[F.order]:
        image = fiber_one_image(spec.build(F, CocycleSpec.formal()).specialize(1))
        report[f"theta=1: unitary lifts {spec.target}"] = image == AlgebraElement.delta(
            spec.target_element(F), untwisted
        )

    for relation in relations(F):
        report[f"theta=0: {relation.name}"] = relation.holds(plain, untwisted)
    formal = generators(F, CocycleSpec.formal())
    report["theta=0: specialization is the identity"] = all(
        formal[name].specialize(0) == plain[name] for name in plain
    )
    return report


def random_group_element(F: FiniteGroupTag, rng: random.Random, radius: int = 6) -> GroupElement:
    m = [rng.randint(-radius, radius) for _ in range(F.dimension)]
    return F.element(m, rng.randrange(F.order))


def cocycle_identity_holds(cocycle: CocycleSpec, r: GroupElement, s: GroupElement, t: GroupElement) -> bool:
    """
    ω̃(s, t) ω̃(r, st) = ω̃(r, s) ω̃(rs, t), compared on exponents modulo integers.
    """
    left = _add(cocycle.extended_exponent(s, t), cocycle.extended_exponent(r, s * t))
    right = _add(cocycle.extended_exponent(r, s), cocycle.extended_exponent(r * s, t))
    return _same_phase(left, right)


def cocycle_is_invariant(cocycle: CocycleSpec, N, x: Sequence[int], y: Sequence[int]) -> bool:
    """ω(Nx, Ny) = ω(x, y) as exact phases."""
    return _same_phase(cocycle.exponent(mat_vec(N, x), mat_vec(N, y)), cocycle.exponent(x, y))


def _add(a: Affine, b: Affine) -> Affine:
    return (a[0] + b[0], a[1] + b[1])


def _same_phase(a: Affine, b: Affine) -> bool:
    return a[1] == b[1] and (a[0] - b[0]).denominator == 1


def random_element(F: FiniteGroupTag, cocycle: CocycleSpec, rng: random.Random, terms: int = 3) -> AlgebraElement:
    """
    A sparse element with small support and coefficients c·e(r + sθ); s is zero
    for a cocycle at a fixed rational θ.
    """
    support: dict[GroupElement, PhaseScalar] = {}
    for _ in range(terms):
        g = random_group_element(F, rng, radius=2)
        s = Fraction(rng.randint(-2, 2), 2) if cocycle.mode != ThetaMode.RATIONAL else 0
        c = PhaseScalar.phase(Fraction(rng.randrange(6), 6), s, rng.randint(1, 3))
        support[g] = support[g] + c if g in support else c
    return AlgebraElement(support, cocycle)


def algebra_identities_hold(a: AlgebraElement, b: AlgebraElement, c: AlgebraElement) -> bool:
    """
    Associativity of the twisted convolution, (ab)* = b*a*, and tr(ab) = tr(ba).
    """
    return (
        (a @ b) @ c == a @ (b @ c)
        and (a @ b).adjoint() == b.adjoint() @ a.adjoint()
        and (a @ b).trace() == (b @ a).trace()
    )
