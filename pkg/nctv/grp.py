from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from nctv.errors import NctvException

logger = logging.getLogger(__name__)

IntVector = tuple[int, ...]
IntMatrix = tuple[tuple[int, ...], ...]

# Point-group generators of the four cyclic actions on Z^2
GENERATOR_MATRICES: dict[int, IntMatrix] = {
    2: ((-1, 0), (0, -1)),
    3: ((-1, -1), (1, 0)),
    4: ((0, -1), (1, 0)),
    6: ((0, -1), (1, 1)),
}

ORDER_SEARCH_CAP = 12


class UnsupportedGroupError(NctvException):
    """Raised for group orders or selectors outside the supported actions."""
    pass


class DimensionMismatchError(NctvException):
    """Raised when group elements of different rank are combined."""
    pass


def identity_matrix(d: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(d)) for i in range(d))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
        for i in range(len(a))
    )


def mat_vec(a: IntMatrix, v: Sequence[int]) -> IntVector:
    return tuple(sum(row[k] * v[k] for k in range(len(v))) for row in a)


def _as_matrix(array: np.ndarray) -> IntMatrix:
    return tuple(tuple(int(x) for x in row) for row in array)


@lru_cache(maxsize=256)
def unimodular_inverse(a: IntMatrix) -> IntMatrix:
    inverse = np.rint(np.linalg.inv(np.array(a, dtype=float))).astype(np.int64)
    if _as_matrix(inverse @ np.array(a, dtype=np.int64)) != identity_matrix(len(a)):
        raise ValueError(f"Matrix {a} is not invertible over the integers")
    return _as_matrix(inverse)


def generator_matrix(k: int) -> IntMatrix:
    """
    Generator of the cyclic point group of order k acting on Z^2.

    :param k: Group order, one of 2, 3, 4, 6
    :raises UnsupportedGroupError: For any other order
    """
    if k not in GENERATOR_MATRICES:
        raise UnsupportedGroupError(f"Unsupported group order {k}, expected one of 2, 3, 4, 6")
    return GENERATOR_MATRICES[k]


@dataclass(frozen=True)
class FiniteGroupTag:
    """
    A finite cyclic group F acting on Z^d through a generator matrix.
    """

    order: int
    generator: IntMatrix
    flip: bool = False

    def __post_init__(self):
        power = self.generator
        for _ in range(self.order - 1):
            power = mat_mul(power, self.generator)
        if power != identity_matrix(self.dimension):
            raise UnsupportedGroupError(f"Generator {self.generator} does not have order {self.order}")
        det = round(np.linalg.det(np.array(self.generator, dtype=float)))
        if not self.flip and det != 1:
            raise UnsupportedGroupError(f"Generator {self.generator} has determinant {det}")

    @classmethod
    def cyclic(cls, k: int) -> FiniteGroupTag:
        return cls(k, generator_matrix(k))

    @classmethod
    def flip_group(cls, d: int) -> FiniteGroupTag:
        """
        The flip n -> -n on Z^d.
        """
        if d < 1:
            raise UnsupportedGroupError(f"Flip dimension must be positive, got {d}")
        return cls(2, tuple(tuple(-int(i == j) for j in range(d)) for i in range(d)), flip=True)

    @classmethod
    def parse(cls, selector: str) -> FiniteGroupTag:
        """
        Read a group selector such as "Z6" or "flip3".

        :raises UnsupportedGroupError: When the selector names no supported group
        """
        text = selector.strip().lower()
        try:
            if text.startswith("flip"):
                return cls.flip_group(int(text[4:] or 2))
            if text.startswith("z"):
                return cls.cyclic(int(text[1:]))
        except ValueError:
            pass
        raise UnsupportedGroupError(f"Unknown group selector '{selector}'")

    @property
    def dimension(self) -> int:
        return len(self.generator)

    @property
    def label(self) -> str:
        if self.flip:
            return f"flip{self.dimension}"
        return f"Z{self.order}"

    def powers(self) -> list[IntMatrix]:
        """
        The matrices N^0, ..., N^(k-1) of the generator N.
        """
        result = [identity_matrix(self.dimension)]
        for _ in range(self.order - 1):
            result.append(mat_mul(self.generator, result[-1]))
        return result

    def power_index(self, matrix: IntMatrix) -> int:
        """
        The exponent j with N^j equal to the given matrix.
        """
        for j, power in enumerate(self.powers()):
            if power == matrix:
                return j
        raise UnsupportedGroupError(f"Matrix {matrix} is not in the group {self.label}")

    def identity(self) -> GroupElement:
        return GroupElement.identity(self.dimension)

    def element(self, m: Sequence[int], j: int = 0) -> GroupElement:
        """
        The group element (m, N^j).
        """
        return GroupElement(tuple(int(x) for x in m), self.powers()[j % self.order])


@dataclass(frozen=True)
class GroupElement:
    """
    Element (m, N) of the semidirect product Z^d ⋊ F.
    """

    m: IntVector
    N: IntMatrix

    @classmethod
    def identity(cls, d: int) -> GroupElement:
        return cls((0,) * d, identity_matrix(d))

    @property
    def dimension(self) -> int:
        return len(self.m)

    def is_identity(self) -> bool:
        return not any(self.m) and self.N == identity_matrix(self.dimension)

    def __mul__(self, other: GroupElement) -> GroupElement:
        return group_mul(self, other)

    def inverse(self) -> GroupElement:
        n_inv = unimodular_inverse(self.N)
        return GroupElement(tuple(-x for x in mat_vec(n_inv, self.m)), n_inv)

    def power(self, j: int) -> GroupElement:
        base = self if j >= 0 else self.inverse()
        result = GroupElement.identity(self.dimension)
        for _ in range(abs(j)):
            result = result * base
        return result


def group_mul(g: GroupElement, h: GroupElement) -> GroupElement:
    """
    Semidirect product law (m, N)(m', N') = (m + N m', N N').

    :raises DimensionMismatchError: If the elements have different rank
    """
    if g.dimension != h.dimension:
        raise DimensionMismatchError(
            f"Cannot multiply elements of rank {g.dimension} and {h.dimension}"
        )
    shifted = mat_vec(g.N, h.m)
    return GroupElement(tuple(a + b for a, b in zip(g.m, shifted)), mat_mul(g.N, h.N))


def element_order(g: GroupElement, cap: int = ORDER_SEARCH_CAP) -> Optional[int]:
    """
    Least j >= 1 with g^j the identity, or None when no j up to the cap works.
    """
    power = g
    for j in range(1, cap + 1):
        if power.is_identity():
            return j
        power = power * g
    return None


class SmithNormalForm:
    """
    Smith normal form U M V = D of a square integer matrix by row and column
    reduction around the smallest nonzero pivot.

    :param matrix: Square integer matrix
    """

    def __init__(self, matrix: Sequence[Sequence[int]]):
        self.matrix = np.array(matrix, dtype=np.int64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"Smith normal form needs a square matrix, got shape {self.matrix.shape}")
        n = self.matrix.shape[0]
        self._work = self.matrix.copy()
        self.left = np.eye(n, dtype=np.int64)
        self.right = np.eye(n, dtype=np.int64)

    @property
    def size(self) -> int:
        return self._work.shape[0]

    def compute(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        :return: The triple (U, D, V) with U and V unimodular
        """
        s = 0
        while s < self.size:
            pivot = self._nonzero_min_abs(s)
            if pivot is None:
                break
            self._swap_rows(s, pivot[0])
            self._swap_columns(s, pivot[1])
            p = self._work[s, s]

            for i in range(s + 1, self.size):
                if self._work[i, s]:
                    self._add_row(i, s, -(self._work[i, s] // p))
            for j in range(s + 1, self.size):
                if self._work[s, j]:
                    self._add_column(j, s, -(self._work[s, j] // p))

            if np.count_nonzero(self._work[s, s + 1:]) or np.count_nonzero(self._work[s + 1:, s]):
                # A smaller remainder is left, it becomes the next pivot
                continue

            offending = self._non_divisible_row(s)
            if offending is not None:
                self._add_row(s, offending, 1)
                continue

            if self._work[s, s] < 0:
                self.left[s] *= -1
                self._work[s] *= -1
            s += 1

        return self.left.copy(), self._work.copy(), self.right.copy()

    def _nonzero_min_abs(self, s: int) -> Optional[tuple[int, int]]:
        best = None
        for i in range(s, self.size):
            for j in range(s, self.size):
                value = abs(int(self._work[i, j]))
                if value and (best is None or value < best[0]):
                    best = (value, i, j)
        return None if best is None else (best[1], best[2])

    def _non_divisible_row(self, s: int) -> Optional[int]:
        pivot = self._work[s, s]
        for i in range(s + 1, self.size):
            for j in range(s + 1, self.size):
                if self._work[i, j] % pivot:
                    return i
        return None

    def _swap_rows(self, a: int, b: int):
        self.left[[a, b]] = self.left[[b, a]]
        self._work[[a, b]] = self._work[[b, a]]

    def _swap_columns(self, a: int, b: int):
        self.right[:, [a, b]] = self.right[:, [b, a]]
        self._work[:, [a, b]] = self._work[:, [b, a]]

    def _add_row(self, target: int, source: int, k: int):
        """Add k times row source to row target."""
        self.left[target] += self.left[source] * k
        self._work[target] += self._work[source] * k

    def _add_column(self, target: int, source: int, k: int):
        """Add k times column source to column target."""
        self.right[:, target] += self.right[:, source] * k
        self._work[:, target] += self._work[:, source] * k


def smith_normal_form(matrix: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Compute (U, D, V) with U M V = D diagonal, d_1 | d_2 | ..., U and V unimodular.
    """
    return SmithNormalForm(matrix).compute()


class ResidueLattice:
    """
    The quotient Z^d / (1 - N) Z^d, read off the Smith normal form of 1 - N.
    Residues are the coordinates of U m reduced modulo the invariant factors.

    :param point: The point part N
    """

    def __init__(self, point: IntMatrix):
        d = len(point)
        self.point = point
        relation = np.eye(d, dtype=np.int64) - np.array(point, dtype=np.int64)
        self.left, diagonal, _ = smith_normal_form(relation)
        self.invariants = tuple(int(abs(diagonal[i, i])) for i in range(d))
        self.left_inverse = np.array(unimodular_inverse(_as_matrix(self.left)), dtype=np.int64)

    @property
    def index(self) -> int:
        """Number of residues, zero when the quotient is infinite."""
        return math.prod(self.invariants)

    def residue(self, m: Sequence[int]) -> IntVector:
        y = self.left @ np.array(m, dtype=np.int64)
        return tuple(int(v % d) if d else int(v) for v, d in zip(y, self.invariants))

    def residues(self) -> Iterator[IntVector]:
        if 0 in self.invariants:
            raise ValueError(f"Quotient by 1 - N is infinite for N = {self.point}")
        return itertools.product(*(range(d) for d in self.invariants))

    def lift(self, residue: Sequence[int]) -> IntVector:
        return tuple(int(x) for x in self.left_inverse @ np.array(residue, dtype=np.int64))

    def representative(self, residue: Sequence[int], radius: int = 2) -> IntVector:
        """
        A short translation vector in the given residue class. In rank two the
        vector is searched in a window and chosen to favour powers of u.
        """
        if len(self.point) > 2:
            return self.lift(residue)
        target = tuple(residue)
        candidates = [
            m for m in itertools.product(range(-radius, radius + 1), repeat=len(self.point))
            if self.residue(m) == target
        ]
        if not candidates:
            return self.lift(residue)
        return min(candidates, key=_vector_key)


def _vector_key(m: Sequence[int]) -> tuple:
    return (sum(abs(x) for x in m[1:]), sum(x < 0 for x in m), abs(m[0]), tuple(m))


@lru_cache(maxsize=None)
def residue_lattice(point: IntMatrix) -> ResidueLattice:
    logger.debug(f"Computing Smith normal form of 1 - N for N = {point}")
    return ResidueLattice(point)


@dataclass(frozen=True)
class TorsionClass:
    """
    Z^d-conjugacy class of a torsion element (m, N^power) with N^power != 1.
    """

    point: IntMatrix
    residue: IntVector
    power: int = field(compare=False)
    order: int = field(compare=False)
    representative: IntVector = field(compare=False)

    @property
    def sort_key(self) -> tuple:
        return (self.power, _vector_key(self.representative))

    def element(self) -> GroupElement:
        return GroupElement(self.representative, self.point)

    @property
    def label(self) -> str:
        return word_label(self.representative, self.power)


def word_label(m: Sequence[int], power: int) -> str:
    """
    Render the element u^a v^b t^j (or u1^a1 ... t^j in higher rank).
    """
    names = ("u", "v") if len(m) == 2 else tuple(f"u{i + 1}" for i in range(len(m)))
    parts = []
    for name, exponent in list(zip(names, m)) + [("t", power)]:
        if exponent == 1:
            parts.append(name)
        elif exponent:
            parts.append(f"{name}^{exponent}")
    return "".join(parts) or "1"


def classify(g: GroupElement, F: FiniteGroupTag) -> TorsionClass:
    """
    The Z^d-conjugacy class of a torsion element of Z^d ⋊ F.
    """
    power = F.power_index(g.N)
    if power == 0:
        raise ValueError(f"Element {g} has trivial point part and is not torsion")
    lattice = residue_lattice(g.N)
    residue = lattice.residue(g.m)
    representative = lattice.representative(residue)
    order = element_order(GroupElement(representative, g.N))
    return TorsionClass(g.N, residue, power, order, representative)


def torsion_classes(F: FiniteGroupTag) -> list[TorsionClass]:
    """
    One class per residue of Z^d / (1 - N) Z^d for every non-identity power N.
    """
    classes = []
    for power, point in enumerate(F.powers()):
        if power == 0:
            continue
        lattice = residue_lattice(point)
        for residue in lattice.residues():
            classes.append(classify(GroupElement(lattice.lift(residue), point), F))
    return sorted(classes, key=lambda c: (c.power, c.residue))


def conjugacy_class(c: TorsionClass, F: FiniteGroupTag) -> TorsionClass:
    """
    Canonical member of the orbit of a torsion class under conjugation by the
    point group generator, t (m, N) t^-1 = (G m, N).
    """
    orbit = [c]
    m = c.representative
    for _ in range(F.order - 1):
        m = mat_vec(F.generator, m)
        orbit.append(classify(GroupElement(m, c.point), F))
    return min(orbit, key=lambda x: x.sort_key)


@dataclass(frozen=True)
class SubgroupClass:
    """
    Conjugacy class of the finite cyclic subgroup generated by a torsion class.
    """

    generator: TorsionClass
    order: int
    power_classes: frozenset[TorsionClass] = field(compare=False)
    maximal: bool = field(default=True, compare=False)

    @property
    def label(self) -> str:
        return self.generator.label


def finite_subgroup_classes(F: FiniteGroupTag) -> list[SubgroupClass]:
    """
    All conjugacy classes of nontrivial finite subgroups, flagged maximal when
    the generator is not a power of a larger subgroup's generator.
    """
    found: dict[frozenset[TorsionClass], tuple[TorsionClass, frozenset[TorsionClass]]] = {}
    for c in torsion_classes(F):
        g = c.element()
        powers = [conjugacy_class(classify(g.power(i), F), F) for i in range(1, c.order)]
        generators = frozenset(p for i, p in enumerate(powers, start=1) if math.gcd(i, c.order) == 1)
        if generators not in found:
            found[generators] = (min(generators, key=lambda x: x.sort_key), frozenset(powers))

    subgroups = []
    for generator, powers in found.values():
        contained = any(
            generator in other_powers and other.order > generator.order
            for other, other_powers in found.values()
        )
        subgroups.append(SubgroupClass(generator, generator.order, powers, maximal=not contained))
    return sorted(subgroups, key=lambda s: (-s.order, s.generator.residue, s.generator.power))


def maximal_finite_subgroups(F: FiniteGroupTag) -> list[SubgroupClass]:
    """
    Conjugacy classes of maximal finite subgroups of Z^d ⋊ F, sorted by
    descending order then residue.
    """
    subgroups = [s for s in finite_subgroup_classes(F) if s.maximal]
    logger.debug(f"{F.label}: maximal finite subgroup orders {[s.order for s in subgroups]}")
    return subgroups


def coset_count(point: IntMatrix, radius: int = 5) -> int:
    """
    Count residue classes of Z^d / (1 - N) Z^d met by the window [-radius, radius]^d,
    by brute force on the lattice rather than through the Smith normal form.
    """
    d = len(point)
    relation = np.eye(d, dtype=float) - np.array(point, dtype=float)
    inverse = np.linalg.inv(relation)
    representatives: set[IntVector] = set()
    for m in itertools.product(range(-radius, radius + 1), repeat=d):
        # m ~ m' iff (1 - N)^-1 (m - m') is integral, so the fractional part is a class key
        coords = inverse @ np.array(m, dtype=float)
        key = tuple(round((x - math.floor(x + 1e-9)) * 720) % 720 for x in coords)
        representatives.add(key)
    return len(representatives)
