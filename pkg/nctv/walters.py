from __future__ import annotations

import cmath
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Optional, Sequence, Union

import numpy as np

from nctv.coeff import PhaseScalar, phase_eval
from nctv.errors import NctvException
from nctv.grp import FiniteGroupTag, GroupElement, mat_vec, unimodular_inverse
from nctv.tga import AlgebraElement, CocycleSpec

logger = logging.getLogger(__name__)

# e^{-πx^2} is its own Fourier transform; as a normal density its width is 1/√(2π)
SELF_DUAL_WIDTH = 1 / math.sqrt(2 * math.pi)

WordItem = Union[str, tuple[str, int], complex, float, PhaseScalar]


class GridMismatchError(NctvException):
    """Raised when sampled functions on different grids or fibers are combined."""
    pass


@dataclass(frozen=True)
class Grid:
    """
    Uniform grid x_j = -L + j h, h = 2L / N, on which functions of one real
    variable are sampled.
    """

    half_width: float = 12.0
    points: int = 2048

    def __post_init__(self):
        if self.points < 256 or self.points & (self.points - 1):
            raise ValueError(f"Grid point count must be a power of two >= 256, got {self.points}")
        if self.half_width < 8:
            raise ValueError(f"Grid half-width must be at least 8, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.points

    @cached_property
    def x(self) -> np.ndarray:
        # Integer offsets keep x_{N-j} = -x_j exact
        return (np.arange(self.points) - self.points // 2) * self.spacing

    @cached_property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.points, d=self.spacing)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """
    A function sampled on a grid, attached to the fiber at a fixed θ.
    """

    grid: Grid
    theta: float
    samples: np.ndarray = field(repr=False)

    def _check(self, other: SampledFunction):
        if other.grid != self.grid or other.theta != self.theta:
            raise GridMismatchError(
                f"Cannot combine functions on {self.grid} at theta={self.theta} "
                f"and {other.grid} at theta={other.theta}"
            )

    def with_samples(self, samples: np.ndarray) -> SampledFunction:
        return SampledFunction(self.grid, self.theta, samples)

    def norm(self) -> float:
        return math.sqrt(self.grid.spacing * float(np.sum(np.abs(self.samples) ** 2)))

    def inner(self, other: SampledFunction) -> complex:
        """L^2 inner product, conjugate-linear in self."""
        self._check(other)
        return complex(self.grid.spacing * np.sum(np.conj(self.samples) * other.samples))

    def __add__(self, other: SampledFunction) -> SampledFunction:
        self._check(other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: SampledFunction) -> SampledFunction:
        self._check(other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, scalar: complex) -> SampledFunction:
        return self.with_samples(self.samples * scalar)

    __rmul__ = __mul__

    def shift(self, a: float) -> SampledFunction:
        """
        Samples of s -> ξ(s + a), by a band-limited shift in Fourier space.
        """
        if a == 0:
            return self
        spectrum = np.fft.fft(self.samples)
        return self.with_samples(np.fft.ifft(spectrum * np.exp(2j * np.pi * self.grid.frequencies * a)))

    def modulate(self, frequency: float, offset: float = 0.0) -> SampledFunction:
        """Multiply by e(frequency·(s + offset))."""
        phase = np.mod(frequency * (self.grid.x + offset), 1.0)
        return self.with_samples(self.samples * np.exp(2j * np.pi * phase))

    def reflect(self) -> SampledFunction:
        """Samples of s -> ξ(-s), exact on the symmetric grid."""
        index = (-np.arange(self.grid.points)) % self.grid.points
        return self.with_samples(self.samples[index])


def sample_gaussian(
    grid: Grid, theta: float, center: float = 0.0, width: float = SELF_DUAL_WIDTH
) -> SampledFunction:
    """
    Gaussian exp(-(x - center)^2 / (2 width^2)) normalized to unit discrete L^2 norm.
    """
    if width <= 0:
        raise ValueError(f"Gaussian width must be positive, got {width}")
    samples = np.exp(-((grid.x - center) ** 2) / (2 * width ** 2)).astype(complex)
    result = SampledFunction(grid, theta, samples)
    return result * (1 / result.norm())


def sample_mixture(
    grid: Grid, theta: float, terms: Sequence[tuple[complex, float, float, int]]
) -> SampledFunction:
    """
    Normalized Σ c (x - center)^degree exp(-(x - center)^2 / (2 width^2)) over
    terms (c, center, width, degree), degree at most 4.
    """
    samples = np.zeros(grid.points, dtype=complex)
    for c, center, width, degree in terms:
        if not 0 <= degree <= 4:
            raise ValueError(f"Polynomial degree must lie in [0, 4], got {degree}")
        offset = grid.x - center
        samples += c * offset ** degree * np.exp(-(offset ** 2) / (2 * width ** 2))
    result = SampledFunction(grid, theta, samples)
    return result * (1 / result.norm())


def _scalar(item, theta: float) -> Optional[complex]:
    if isinstance(item, PhaseScalar):
        return phase_eval(item, theta)
    if isinstance(item, (int, float, complex)):
        return complex(item)
    return None


def _generator(item) -> tuple[str, int]:
    if isinstance(item, str):
        return item.upper(), 1
    return item[0].upper(), int(item[1])


def act_right(xi: SampledFunction, word: Sequence[WordItem]) -> SampledFunction:
    """
    Right action of the rotation algebra at θ, (ξ·U)(s) = ξ(s + θ) and
    (ξ·V)(s) = e(s) ξ(s), applied left to right along the word.

    :param xi: Function to act on
    :param word: Items "U", "V", ("U", n), ("V", m) or scalars, a scalar f acting by f(θ)
    """
    result = xi
    for item in word:
        scalar = _scalar(item, xi.theta)
        if scalar is not None:
            result = result * scalar
            continue
        name, exponent = _generator(item)
        if name == "U":
            result = result.shift(exponent * xi.theta)
        elif name == "V":
            result = result.modulate(exponent)
        else:
            raise ValueError(f"Unknown generator '{name}'")
    return result


def act_left(xi: SampledFunction, word: Sequence[WordItem]) -> SampledFunction:
    """
    Left action of the dual rotation algebra, (U·ξ)(s) = ξ(s + 1) and
    (V·ξ)(s) = e(-s/θ) ξ(s); the rightmost item of the word acts first.
    """
    result = xi
    for item in reversed(list(word)):
        scalar = _scalar(item, xi.theta)
        if scalar is not None:
            result = result * scalar
            continue
        name, exponent = _generator(item)
        if name == "U":
            result = result.shift(float(exponent))
        elif name == "V":
            result = result.modulate(-exponent / xi.theta)
        else:
            raise ValueError(f"Unknown generator '{name}'")
    return result


def inner_right(xi: SampledFunction, eta: SampledFunction, n: int, m: int) -> complex:
    """
    Coefficient of U^n V^m in the A-valued inner product,
    θ ∫ conj(ξ(x + nθ)) η(x) e(-mx) dx.

    :raises GridMismatchError: If the functions live on different grids
    """
    xi._check(eta)
    shifted = xi.shift(n * xi.theta)
    return xi.theta * shifted.inner(eta.modulate(-m))


def inner_left(xi: SampledFunction, eta: SampledFunction, n: int, m: int) -> complex:
    """
    Coefficient of U^n V^m in the B-valued inner product,
    ∫ ξ(x - n) conj(η(x)) e(mx/θ) dx, with no θ prefactor.

    :raises GridMismatchError: If the functions live on different grids
    """
    xi._check(eta)
    shifted = xi.shift(-n).modulate(m / xi.theta)
    return eta.inner(shifted)


def hermiticity_residual(xi: SampledFunction, eta: SampledFunction, n: int, m: int) -> float:
    """
    |⟨η, ξ⟩_(-n,-m) - conj(⟨ξ, η⟩_(n,m)) e(θnm)|, the coefficientwise form of
    ⟨ξ, η⟩_A* = ⟨η, ξ⟩_A.
    """
    lhs = inner_right(eta, xi, -n, -m)
    rhs = inner_right(xi, eta, n, m).conjugate() * cmath.exp(2j * math.pi * xi.theta * n * m)
    return abs(lhs - rhs)


def commutation_residual(xi: SampledFunction, left: WordItem, right: WordItem) -> float:
    """
    ‖left·(ξ·right) - (left·ξ)·right‖, zero when the two actions commute.
    """
    first = act_left(act_right(xi, [right]), [left])
    second = act_right(act_left(xi, [left]), [right])
    return (first - second).norm()


class KernelCache:
    """
    Bounded least-recently-used store of dense transform matrices, safe to
    share between worker threads. Matrices are built outside the lock.

    :param maxsize: Number of matrices kept
    """

    def __init__(self, maxsize: int = 6):
        self.maxsize = maxsize
        self._entries: OrderedDict[Hashable, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: Hashable, build: Callable[[], np.ndarray]) -> np.ndarray:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key]

        logger.debug(f"Building transform kernel {key}")
        matrix = build()

        with self._lock:
            self._entries[key] = matrix
            self._entries.move_to_end(key)
            while len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
        return matrix

    def resize(self, maxsize: int):
        with self._lock:
            self.maxsize = maxsize
            while len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)

    def clear(self):
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


KERNELS = KernelCache()


def _kernel(order: int, inverse: bool, theta: float, grid: Grid) -> np.ndarray:
    """
    Quadrature matrix h·K(s_i, x_j) of the order-k transform, or of its inverse.
    """
    s = grid.x[:, np.newaxis]
    x = grid.x[np.newaxis, :]
    scale = grid.spacing / math.sqrt(theta)

    if order == 4:
        sign = -1 if inverse else 1
        phase = sign * s * x / theta
        prefactor = 1.0
    elif order == 3 and not inverse:
        phase = s ** 2 / (2 * theta) + s * x / theta
        prefactor = cmath.exp(-1j * math.pi / 12)
    elif order == 6 and not inverse:
        phase = (2 * s * x - x ** 2) / (2 * theta)
        prefactor = cmath.exp(1j * math.pi / 12)
    elif order == 6 and inverse:
        phase = s ** 2 / (2 * theta) - s * x / theta
        prefactor = cmath.exp(-1j * math.pi / 12)
    else:
        raise ValueError(f"No dense kernel for order {order} (inverse={inverse})")

    return prefactor * scale * np.exp(2j * np.pi * np.mod(phase, 1.0))


def _apply_kernel(order: int, inverse: bool, xi: SampledFunction) -> SampledFunction:
    key = (order, inverse, xi.theta, xi.grid)
    matrix = KERNELS.get(key, lambda: _kernel(order, inverse, xi.theta, xi.grid))
    return xi.with_samples(matrix @ xi.samples)


def transform_w(F: FiniteGroupTag, xi: SampledFunction, inverse: bool = False) -> SampledFunction:
    """
    The order-k unitary W implementing the generator of F on the bimodule:
    reflection for Z2 and the quadratic-phase Fourier-type kernels for Z3, Z4, Z6.
    The inverse of the Z3 transform is the square of the inverse Z6 transform.
    """
    if F.flip or F.order not in (2, 3, 4, 6):
        raise ValueError(f"No transform for {F.label}")
    if F.order == 2:
        return xi.reflect()
    if F.order == 3 and inverse:
        return _apply_kernel(6, True, _apply_kernel(6, True, xi))
    return _apply_kernel(F.order, inverse, xi)


def transform_power(F: FiniteGroupTag, xi: SampledFunction, j: int) -> SampledFunction:
    """W^j for any integer j."""
    result = xi
    for _ in range(abs(j)):
        result = transform_w(F, result, inverse=j < 0)
    return result


def order_residual(F: FiniteGroupTag, xi: SampledFunction) -> float:
    """
    ‖W^k ξ - ξ‖ / ‖ξ‖ for k the order of F.
    """
    return (transform_power(F, xi, F.order) - xi).norm() / xi.norm()


def square_residual(F: FiniteGroupTag, xi: SampledFunction) -> float:
    """
    ‖W_F ξ - W_2F (W_2F ξ)‖ for F = Z2 against Z4 and F = Z3 against Z6.
    """
    if F.order not in (2, 3) or F.flip:
        raise ValueError(f"{F.label} is not the square of another supported group")
    parent = FiniteGroupTag.cyclic(2 * F.order)
    return (transform_w(F, xi) - transform_w(parent, transform_w(parent, xi))).norm()


def inverse_residual(F: FiniteGroupTag, xi: SampledFunction) -> float:
    """‖W (W^-1 ξ) - ξ‖ / ‖ξ‖."""
    return (transform_w(F, transform_w(F, xi, inverse=True)) - xi).norm() / xi.norm()


def act_delta(xi: SampledFunction, x: Sequence[int]) -> SampledFunction:
    """
    ξ·δ_x = e(θ x1 x2 / 2) (ξ·U^x1)·V^x2.
    """
    a, b = int(x[0]), int(x[1])
    phase = cmath.exp(1j * math.pi * xi.theta * a * b)
    return act_right(xi, [("U", a), ("V", b), phase])


def act_element(xi: SampledFunction, a: AlgebraElement, F: FiniteGroupTag) -> SampledFunction:
    """
    Right action of a finitely supported crossed-product element,
    ξ·δ_(x, N^j) = (ξ·δ_x) W^j with coefficients evaluated at the fiber's θ.
    """
    result = xi * 0
    for g, c in a.support.items():
        term = transform_power(F, act_delta(xi, g.m), F.power_index(g.N))
        result = result + term * phase_eval(c, xi.theta)
    return result


@dataclass(frozen=True)
class RelationResiduals:
    """Residuals of the covariance and inner-product equivariance identities."""

    covariance_u: float
    covariance_v: float
    equivariance: float

    def to_json(self) -> dict:
        return {
            "covariance_u": self.covariance_u,
            "covariance_v": self.covariance_v,
            "equivariance": self.equivariance,
        }


def covariance_residual(F: FiniteGroupTag, xi: SampledFunction, x: Sequence[int]) -> float:
    """
    ‖(ξW)·δ_x - (ξ·δ_Nx)W‖.
    """
    left = act_delta(transform_w(F, xi), x)
    right = transform_w(F, act_delta(xi, mat_vec(F.generator, x)))
    return (left - right).norm()


def equivariance_residual(
    F: FiniteGroupTag, xi: SampledFunction, eta: SampledFunction, k: int, l: int
) -> float:
    """
    |⟨ξW^-1, η⟩_(k,l) - ⟨ξ, ηW⟩_(k',l') e(θ(kl - k'l')/2)| with (k', l') = N^-1 (k, l).
    For Z6 the index is (k + l, -k) and the phase e(θ(k^2 + 2kl)/2).
    """
    kp, lp = mat_vec(unimodular_inverse(F.generator), (k, l))
    lhs = inner_right(transform_w(F, xi, inverse=True), eta, k, l)
    rhs = inner_right(xi, transform_w(F, eta), kp, lp)
    rhs *= cmath.exp(1j * math.pi * xi.theta * (k * l - kp * lp))
    return abs(lhs - rhs)


def relation_residuals(
    F: FiniteGroupTag, xi: SampledFunction, k: int, l: int, eta: Optional[SampledFunction] = None
) -> RelationResiduals:
    """
    Covariance of W against both generators, and equivariance of the
    A-valued inner product at index (k, l).
    """
    if abs(k) > 4 or abs(l) > 4:
        raise ValueError(f"Index ({k}, {l}) outside |k|, |l| <= 4")
    return RelationResiduals(
        covariance_u=covariance_residual(F, xi, (1, 0)),
        covariance_v=covariance_residual(F, xi, (0, 1)),
        equivariance=equivariance_residual(F, xi, eta if eta is not None else xi, k, l),
    )


@dataclass(frozen=True)
class BimoduleResiduals:
    """Residuals of the imprimitivity and crossed-product associativity identities."""

    imprimitivity: float
    associativity: float
    tail: float

    def to_json(self) -> dict:
        return {"imprimitivity": self.imprimitivity, "associativity": self.associativity, "tail": self.tail}


def imprimitivity_residual(
    xi: SampledFunction, eta: SampledFunction, zeta: SampledFunction, window: int
) -> tuple[float, float]:
    """
    ‖_B⟨ξ, η⟩·ζ - ξ·⟨η, ζ⟩_A‖ with both inner products truncated to
    |n|, |m| <= window.

    :return: The residual and the largest coefficient modulus on the window's edge
    """
    xi._check(eta)
    eta._check(zeta)
    theta = xi.theta
    ns = range(-window, window + 1)

    xi_left = {n: xi.shift(-n) for n in ns}
    eta_right = {n: eta.shift(n * theta) for n in ns}
    zeta_left = {n: zeta.shift(float(n)) for n in ns}
    xi_right = {n: xi.shift(n * theta) for n in ns}

    lhs = np.zeros(xi.grid.points, dtype=complex)
    rhs = np.zeros(xi.grid.points, dtype=complex)
    tail = 0.0
    for n in ns:
        for m in ns:
            b = zeta.grid.spacing * complex(
                np.sum(xi_left[n].modulate(m / theta).samples * np.conj(eta.samples))
            )
            a = theta * eta_right[n].inner(zeta.modulate(-m))
            # U^n V^m · ζ (s) = e(-m(s + n)/θ) ζ(s + n)
            lhs += b * zeta_left[n].modulate(-m / theta, offset=n).samples
            # ξ · U^n V^m (s) = e(ms) ξ(s + nθ)
            rhs += a * xi_right[n].modulate(m).samples
            if abs(n) == window or abs(m) == window:
                tail = max(tail, abs(a), abs(b))

    residual = xi.with_samples(lhs - rhs).norm()
    return residual, tail


def bimodule_residuals(
    xi: SampledFunction,
    eta: SampledFunction,
    zeta: SampledFunction,
    window: int = 6,
    F: Optional[FiniteGroupTag] = None,
    x: Optional[AlgebraElement] = None,
    y: Optional[AlgebraElement] = None,
) -> BimoduleResiduals:
    """
    Imprimitivity compatibility of the two inner products, and associativity
    ξ·(xy) = (ξ·x)·y of the crossed-product action, by default with x = t and
    y = u for F = Z6.
    """
    if window < 4:
        raise ValueError(f"Truncation window must be at least 4, got {window}")
    F = F or FiniteGroupTag.cyclic(6)
    cocycle = CocycleSpec.numeric(xi.theta)
    if x is None:
        x = AlgebraElement.delta(F.element((0, 0), 1), cocycle)
    if y is None:
        y = AlgebraElement.delta(F.element((1, 0)), cocycle)

    residual, tail = imprimitivity_residual(xi, eta, zeta, window)
    associativity = (act_element(xi, x @ y, F) - act_element(act_element(xi, x, F), y, F)).norm()
    return BimoduleResiduals(imprimitivity=residual, associativity=associativity, tail=tail)


def export_samples(xi: SampledFunction) -> list[tuple[float, float, float]]:
    """Rows (x, re, im) for plotting."""
    return [
        (float(x), float(v.real), float(v.imag)) for x, v in zip(xi.grid.x, xi.samples)
    ]


def identity_element(F: FiniteGroupTag, theta: float) -> AlgebraElement:
    return AlgebraElement.delta(GroupElement.identity(F.dimension), CocycleSpec.numeric(theta))
