from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from nctv.errors import NctvException
from nctv.grp import FiniteGroupTag, maximal_finite_subgroups, residue_lattice, torsion_classes
from nctv.tga import CocycleSpec, projection_family

logger = logging.getLogger(__name__)

# Maximal finite subgroup orders, one entry per conjugacy class
EXPECTED_MAXIMAL_ORDERS: dict[int, tuple[int, ...]] = {
    2: (2, 2, 2, 2),
    3: (3, 3, 3),
    4: (4, 4, 2),
    6: (6, 3, 2),
}

EXPECTED_K0_RANKS: dict[int, int] = {2: 6, 3: 8, 4: 9, 6: 10}


class RationalThetaError(NctvException):
    """Raised when the isomorphism criterion is asked about a rational θ."""
    pass


class InconsistentPartitionError(NctvException):
    """Raised when block sizes at the marked points do not share a total."""
    pass


@dataclass(frozen=True)
class AffineValue:
    """
    The real number r + sθ for a formal irrational θ.
    """

    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)

    def __add__(self, other: AffineValue) -> AffineValue:
        return AffineValue(self.r + other.r, self.s + other.s)

    def __neg__(self) -> AffineValue:
        return AffineValue(-self.r, -self.s)

    def __sub__(self, other: AffineValue) -> AffineValue:
        return self + (-other)

    def evaluate(self, theta: float) -> float:
        return float(self.r) + float(self.s) * theta

    def __str__(self) -> str:
        if not self.s:
            return str(self.r)
        theta = "t" if self.s == 1 else f"{self.s}*t"
        return theta if not self.r else f"{self.r} + {theta}"


def fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    """
    gcd(p/q, r/s) = gcd(ps, rq) / (qs), the positive generator of aZ + bZ.
    """
    a, b = Fraction(a), Fraction(b)
    numerator = math.gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(numerator, a.denominator * b.denominator)


@dataclass(frozen=True)
class TraceSubgroup:
    """
    The subgroup aZ + bθZ of R, normalized with a, b >= 0.
    """

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", abs(Fraction(self.a)))
        object.__setattr__(self, "b", abs(Fraction(self.b)))

    @classmethod
    def generated_by(cls, values: Sequence[AffineValue]) -> TraceSubgroup:
        """
        Subgroup generated by values that are each purely rational or purely a
        multiple of θ.
        """
        a, b = Fraction(0), Fraction(0)
        for value in values:
            if value.r and value.s:
                raise ValueError(f"Cannot split the mixed generator {value}")
            a = fraction_gcd(a, value.r)
            b = fraction_gcd(b, value.s)
        return cls(a, b)

    def contains(self, value: AffineValue) -> bool:
        return _multiple(value.r, self.a) and _multiple(value.s, self.b)

    def __str__(self) -> str:
        return f"{self.a}Z + {self.b}tZ"


def _multiple(x: Fraction, generator: Fraction) -> bool:
    if not generator:
        return x == 0
    return (x / generator).denominator == 1


@dataclass(frozen=True)
class K0Summary:
    """
    Rank, basis names and traces of the K-theory of the crossed product by F.
    """

    group: FiniteGroupTag
    rank_k0: int
    rank_k1: int
    basis_labels: tuple[str, ...]
    trace_vector: tuple[AffineValue, ...]

    def to_json(self) -> dict:
        return {
            "group": self.group.label,
            "rank_k0": self.rank_k0,
            "rank_k1": self.rank_k1,
            "basis": list(self.basis_labels),
            "traces": [str(t) for t in self.trace_vector],
        }


def k_ranks(F: FiniteGroupTag) -> tuple[int, int]:
    """
    Ranks of K_0 and K_1: 2 + Σ (|M| - 1) over maximal finite subgroup classes M,
    and 0.
    """
    if F.flip or F.order not in EXPECTED_MAXIMAL_ORDERS:
        raise ValueError(f"Rank formula applies to the cyclic actions on Z^2, not {F.label}")
    subgroups = maximal_finite_subgroups(F)
    return 2 + sum(s.order - 1 for s in subgroups), 0


def maximal_orders_match(F: FiniteGroupTag) -> bool:
    """
    Compare the computed maximal subgroup orders with the known list, logging
    a warning on any discrepancy.
    """
    orders = tuple(s.order for s in maximal_finite_subgroups(F))
    expected = EXPECTED_MAXIMAL_ORDERS[F.order]
    if orders != expected:
        logger.warning(f"{F.label}: maximal subgroup orders {orders}, expected {expected}")
    return orders == expected


def k0_summary(F: FiniteGroupTag) -> K0Summary:
    """
    Basis [1], the projections, and the module class, with traces. The module
    class is recorded with trace θ/k.
    """
    family = projection_family(F, CocycleSpec.formal())
    labels = ["1"]
    traces = [AffineValue(Fraction(1))]
    for name, projection in family.items():
        value = projection.trace().rational_value()
        if value is None:
            raise ValueError(f"Trace of {name} for {F.label} is not rational")
        labels.append(name)
        traces.append(AffineValue(value))
    labels.append("E")
    traces.append(AffineValue(Fraction(0), Fraction(1, F.order)))

    rank_k0, rank_k1 = k_ranks(F)
    if rank_k0 != len(labels):
        raise ValueError(f"{F.label}: rank {rank_k0} but {len(labels)} basis elements")
    return K0Summary(F, rank_k0, rank_k1, tuple(labels), tuple(traces))


def trace_image(F: FiniteGroupTag) -> TraceSubgroup:
    """
    The subgroup of R generated by the traces of the K_0 basis.
    """
    return TraceSubgroup.generated_by(k0_summary(F).trace_vector)


def iso_decide(k1: int, theta1: AffineValue, k2: int, theta2: AffineValue) -> bool:
    """
    Decide whether the crossed products by Z_k1 at θ1 and Z_k2 at θ2 are
    isomorphic, θ1 and θ2 affine in one irrational symbol.

    :raises RationalThetaError: If either θ has no irrational part
    """
    for theta in (theta1, theta2):
        if not theta.s:
            raise RationalThetaError(f"Theta {theta} is rational")
    if k1 != k2:
        return False
    same = theta1.s == theta2.s and (theta1.r - theta2.r).denominator == 1
    opposite = theta1.s == -theta2.s and (theta1.r + theta2.r).denominator == 1
    return same or opposite


def _a(r, s=0) -> AffineValue:
    return AffineValue(Fraction(r), Fraction(s))


# (k1, θ1, k2, θ2, isomorphic)
ISOMORPHISM_CASES: tuple[tuple[int, AffineValue, int, AffineValue, bool], ...] = (
    (2, _a(0, 1), 2, _a(1, -1), True),
    (2, _a(0, 1), 3, _a(0, 1), False),
    (4, _a(7, 1), 4, _a(0, 1), True),
    (6, _a(0, 1), 6, _a(0, -1), True),
    (3, _a(0, 1), 3, _a(-2, -1), True),
    (4, _a(0, 1), 6, _a(0, 1), False),
    (2, _a(0, 1), 4, _a(0, 1), False),
    (3, _a(0, 1), 6, _a(0, 1), False),
    (2, _a(0, 1), 2, _a(Fraction(1, 2), 1), False),
    (2, _a(0, 1), 2, _a(0, 2), False),
    (6, _a(Fraction(1, 3), 1), 6, _a(Fraction(-1, 3), -1), True),
    (6, _a(Fraction(1, 3), 1), 6, _a(Fraction(1, 3), -1), False),
    (4, _a(0, 1), 4, _a(5, -1), True),
    (3, _a(Fraction(1, 2), 1), 3, _a(Fraction(3, 2), 1), True),
    (3, _a(Fraction(1, 2), 1), 3, _a(Fraction(1, 2), -1), True),
    (4, _a(0, 2), 4, _a(1, 2), True),
    (4, _a(0, 2), 4, _a(0, 1), False),
    (6, _a(0, 1), 2, _a(0, 1), False),
    (2, _a(-3, 1), 2, _a(3, -1), True),
    (3, _a(0, 1), 4, _a(1, -1), False),
)


def rational_structure_rank(partitions: Sequence[Sequence[int]]) -> int:
    """
    Rank 2 + Σ (s_i - 1) of K_0 of a subhomogeneous algebra over the sphere
    with s_i blocks at marked point i.

    :param partitions: Block sizes at each marked point
    :raises InconsistentPartitionError: If the block sizes do not sum to a common total
    """
    totals = {sum(blocks) for blocks in partitions}
    if len(totals) > 1:
        raise InconsistentPartitionError(f"Block sizes sum to different totals {sorted(totals)}")
    return 2 + sum(len(blocks) - 1 for blocks in partitions)


@dataclass(frozen=True)
class HighDimRanks:
    """K-theory ranks of the rank-d torus and of its crossed product by the flip."""

    dimension: int
    torus: tuple[int, int]
    flip_crossed: tuple[int, int]
    involution_classes: int

    @property
    def decomposition_holds(self) -> bool:
        """3·2^(d-1) = 1 + (number of involution classes) + (2^(d-1) - 1)."""
        half = 2 ** (self.dimension - 1)
        return 1 + self.involution_classes + (half - 1) == self.flip_crossed[0]

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "torus": list(self.torus),
            "flip_crossed": list(self.flip_crossed),
            "involution_classes": self.involution_classes,
        }


def highdim_k_ranks(d: int) -> HighDimRanks:
    """
    Ranks (2^(d-1), 2^(d-1)) for the torus and (3·2^(d-1), 0) for the flip
    crossed product, with the involution classes counted from Z^d / 2Z^d.
    """
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    half = 2 ** (d - 1)
    flip = FiniteGroupTag.flip_group(d)
    classes = residue_lattice(flip.generator).index
    if d <= 3:
        classes_listed = len(torsion_classes(flip))
        if classes_listed != classes:
            logger.warning(f"flip{d}: {classes_listed} torsion classes but index {classes}")
    return HighDimRanks(d, (half, half), (3 * half, 0), classes)


# Block sizes of the fiber algebra at the points of the sphere with nontrivial
# stabilizer, one list per marked point
FIBER_PARTITIONS: dict[int, tuple[tuple[int, ...], ...]] = {
    2: ((1, 1), (1, 1), (1, 1), (1, 1)),
    3: ((1, 1, 1), (1, 1, 1), (1, 1, 1)),
    4: ((1, 1, 1, 1), (1, 1, 1, 1), (2, 2)),
    6: ((1, 1, 1, 1, 1, 1), (2, 2, 2), (3, 3)),
}


def export_trace_points(
    F: FiniteGroupTag, theta: float, bound: int = 2, lower: float = 0.0, upper: float = 1.0
) -> list[tuple[int, int, float]]:
    """
    Points (a + bθ)/k of the trace image lying in [lower, upper], for
    |a|, |b| <= bound, sorted by value.

    :param F: The acting group, k its order
    :param theta: Value of θ in (0, 1)
    :param bound: Largest |a| and |b| enumerated
    :return: Rows (a, b, value)
    """
    if not 0 < theta < 1:
        raise ValueError(f"Theta must lie in (0, 1), got {theta}")
    rows = []
    for a in range(-bound, bound + 1):
        for b in range(-bound, bound + 1):
            value = (a + b * theta) / F.order
            if lower - 1e-12 <= value <= upper + 1e-12:
                rows.append((a, b, value))
    return sorted(rows, key=lambda row: (row[2], row[1], row[0]))
