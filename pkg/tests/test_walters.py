import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nctv.grp import FiniteGroupTag
from nctv.suites import (
    ACTION_TOLERANCE,
    ASSOCIATIVITY_TOLERANCE,
    COVARIANCE_TOLERANCE,
    HERMITICITY_TOLERANCE,
    IMPRIMITIVITY_TOLERANCE,
    NORMALIZATION_TOLERANCE,
    ORDER_TOLERANCE,
    TRANSFORM_TOLERANCE,
)
from nctv.tga import CocycleSpec, generators
from nctv.walters import (
    Grid,
    GridMismatchError,
    KernelCache,
    act_element,
    act_left,
    act_right,
    bimodule_residuals,
    commutation_residual,
    export_samples,
    hermiticity_residual,
    identity_element,
    imprimitivity_residual,
    inner_left,
    inner_right,
    inverse_residual,
    order_residual,
    relation_residuals,
    sample_gaussian,
    sample_mixture,
    square_residual,
    transform_w,
)
from tests.strategies import GROUPS, mixture_terms

SMALL = Grid(8.0, 256)
FULL = Grid()

MIXTURE = [(1.0, 0.3, 0.5, 1), (0.5j, -0.4, 0.6, 0)]


def functions(grid: Grid, theta: float):
    return sample_gaussian(grid, theta), sample_mixture(grid, theta, MIXTURE)


#################
#  Sampling     #
#################


@pytest.mark.parametrize("half_width, points", [(12.0, 100), (12.0, 128), (4.0, 1024)])
def test_grid_validation(half_width: float, points: int):
    with pytest.raises(ValueError):
        Grid(half_width, points)


def test_grid_is_symmetric():
    assert SMALL.spacing == 16.0 / 256
    assert SMALL.x[0] == -8.0
    assert np.array_equal(SMALL.x[1:], -SMALL.x[1:][::-1])


def test_gaussian_is_normalized():
    xi = sample_gaussian(SMALL, 0.5, center=1.0, width=0.8)
    assert xi.norm() == pytest.approx(1.0)

    with pytest.raises(ValueError):
        sample_gaussian(SMALL, 0.5, width=0.0)


def test_mixture_validation():
    with pytest.raises(ValueError):
        sample_mixture(SMALL, 0.5, [(1.0, 0.0, 0.5, 5)])


def test_shift_and_reflect():
    xi, eta = functions(SMALL, 0.37)
    assert xi.shift(0) is xi
    assert np.allclose(eta.shift(0.3).shift(-0.3).samples, eta.samples, atol=1e-12)
    assert np.array_equal(eta.reflect().reflect().samples, eta.samples)
    assert np.allclose(xi.reflect().samples, xi.samples, atol=1e-14)


def test_shift_moves_the_peak():
    xi = sample_gaussian(SMALL, 0.5, center=1.0)
    shifted = xi.shift(1.0)
    assert SMALL.x[int(np.argmax(np.abs(shifted.samples)))] == pytest.approx(0.0, abs=SMALL.spacing)


def test_far_gaussians_are_orthogonal():
    a = sample_gaussian(SMALL, 0.5, center=-4.0)
    b = sample_gaussian(SMALL, 0.5, center=4.0)
    assert abs(a.inner(b)) < 1e-6


def test_grid_mismatch():
    a = sample_gaussian(SMALL, 0.5)
    with pytest.raises(GridMismatchError):
        a.inner(sample_gaussian(SMALL, 0.25))
    with pytest.raises(GridMismatchError):
        a + sample_gaussian(Grid(8.0, 512), 0.5)


def test_export_samples():
    rows = export_samples(sample_gaussian(SMALL, 0.5))
    assert len(rows) == 256
    assert rows[0][0] == -8.0
    assert max(re for _, re, _ in rows) == pytest.approx(rows[128][1])


##########################
#  Module actions        #
##########################


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_right_action_relation(theta: float):
    _, eta = functions(FULL, theta)
    lhs = act_right(eta, ["V", "U"])
    rhs = act_right(eta, ["U", "V"]) * cmath.exp(2j * math.pi * theta)
    assert (lhs - rhs).norm() < ACTION_TOLERANCE


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_left_action_relation(theta: float):
    _, eta = functions(FULL, theta)
    lhs = act_left(eta, ["U", "V"])
    rhs = act_left(eta, ["V", "U"]) * cmath.exp(-2j * math.pi / theta)
    assert (lhs - rhs).norm() < ACTION_TOLERANCE


@pytest.mark.parametrize("left", ["U", "V", ("U", -2)])
@pytest.mark.parametrize("right", ["U", "V", ("V", 3)])
def test_actions_commute(left, right):
    _, eta = functions(FULL, 0.37)
    assert commutation_residual(eta, left, right) < ACTION_TOLERANCE


def test_unknown_generator():
    xi, _ = functions(SMALL, 0.5)
    with pytest.raises(ValueError):
        act_right(xi, ["W"])
    with pytest.raises(ValueError):
        act_left(xi, [("X", 1)])


def test_act_element_identity():
    F = FiniteGroupTag.cyclic(4)
    _, eta = functions(SMALL, 0.5)
    assert (act_element(eta, identity_element(F, 0.5), F) - eta).norm() < 1e-12


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_act_element_matches_word(theta: float):
    F = FiniteGroupTag.cyclic(6)
    g = generators(F, CocycleSpec.numeric(theta))
    _, eta = functions(FULL, theta)
    direct = act_element(eta, g["v"] @ g["u"], F)
    assert (direct - act_right(eta, ["V", "U"])).norm() < ACTION_TOLERANCE


###########################
#  Inner products         #
###########################


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_inner_product_normalization(theta: float):
    xi, _ = functions(FULL, theta)
    assert abs(inner_right(xi, xi, 0, 0) - theta) < NORMALIZATION_TOLERANCE
    assert abs(inner_left(xi, xi, 0, 0) - 1) < NORMALIZATION_TOLERANCE


@settings(max_examples=20, deadline=None)
@given(terms=mixture_terms(), theta=st.floats(0.05, 1.0), scale=st.floats(0.5, 3.0))
def test_inner_product_normalization_on_mixtures(terms: list, theta: float, scale: float):
    xi = sample_mixture(FULL, theta, terms) * scale
    assert abs(inner_right(xi, xi, 0, 0) - theta * xi.norm() ** 2) < NORMALIZATION_TOLERANCE


@pytest.mark.parametrize("n, m", [(0, 1), (1, 0), (1, -2), (-2, 2)])
def test_inner_product_hermiticity(n: int, m: int):
    xi, eta = functions(FULL, 0.37)
    assert hermiticity_residual(xi, eta, n, m) < HERMITICITY_TOLERANCE


def test_inner_product_grid_mismatch():
    with pytest.raises(GridMismatchError):
        inner_right(sample_gaussian(SMALL, 0.5), sample_gaussian(SMALL, 0.4), 0, 0)


###########################
#  Transforms             #
###########################


@pytest.mark.parametrize("theta", [0.37, 0.93])
@pytest.mark.parametrize("F", GROUPS)
def test_transform_order_and_inverse(F: FiniteGroupTag, theta: float):
    xi, eta = functions(FULL, theta)
    assert order_residual(F, xi) < ORDER_TOLERANCE
    assert inverse_residual(F, eta) < TRANSFORM_TOLERANCE
    assert abs(transform_w(F, eta).norm() - eta.norm()) < TRANSFORM_TOLERANCE


@pytest.mark.parametrize("F", GROUPS)
def test_residuals_do_not_grow_when_refining(F: FiniteGroupTag):
    residuals = []
    for points in (512, 1024, 2048):
        xi, eta = functions(Grid(12.0, points), 0.37)
        residuals.append((order_residual(F, xi), inverse_residual(F, eta)))
    for coarse, fine in zip(residuals, residuals[1:]):
        for before, after in zip(coarse, fine):
            # Roundoff floor
            assert after <= 1.1 * before + 1e-12


@pytest.mark.parametrize("k", [2, 3])
def test_transform_square(k: int):
    xi, _ = functions(FULL, 0.37)
    assert square_residual(FiniteGroupTag.cyclic(k), xi) < TRANSFORM_TOLERANCE


def test_square_residual_needs_a_parent():
    xi, _ = functions(SMALL, 0.5)
    with pytest.raises(ValueError):
        square_residual(FiniteGroupTag.cyclic(4), xi)


def test_transform_rejects_flip():
    xi, _ = functions(SMALL, 0.5)
    with pytest.raises(ValueError):
        transform_w(FiniteGroupTag.flip_group(3), xi)


@pytest.mark.parametrize("F", GROUPS)
def test_covariance_and_equivariance(F: FiniteGroupTag):
    xi, eta = functions(FULL, 0.37)
    residuals = relation_residuals(F, xi, 1, -1, eta)
    assert residuals.covariance_u < COVARIANCE_TOLERANCE
    assert residuals.covariance_v < COVARIANCE_TOLERANCE
    assert residuals.equivariance < COVARIANCE_TOLERANCE
    assert set(residuals.to_json()) == {"covariance_u", "covariance_v", "equivariance"}


def test_relation_index_range():
    xi, _ = functions(SMALL, 0.5)
    with pytest.raises(ValueError):
        relation_residuals(FiniteGroupTag.cyclic(2), xi, 5, 0)


##########################
#  Bimodule identities   #
##########################


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_bimodule_residuals(theta: float):
    xi, _ = functions(FULL, theta)
    residuals = bimodule_residuals(xi, xi, xi)
    assert residuals.imprimitivity < IMPRIMITIVITY_TOLERANCE
    assert residuals.associativity < ASSOCIATIVITY_TOLERANCE
    assert residuals.tail < 1e-3


@pytest.mark.parametrize("theta", [0.37, 0.93])
def test_imprimitivity_with_distinct_functions(theta: float):
    xi, eta = functions(FULL, theta)
    zeta = sample_gaussian(FULL, theta, center=0.5)
    residual, tail = imprimitivity_residual(xi, eta, zeta, window=14)
    assert tail < 1e-6
    assert residual < IMPRIMITIVITY_TOLERANCE


def test_bimodule_window():
    xi, _ = functions(SMALL, 0.5)
    with pytest.raises(ValueError):
        bimodule_residuals(xi, xi, xi, window=3)


#####################
#  Kernel cache     #
#####################


def test_kernel_cache_evicts_least_recent():
    cache = KernelCache(maxsize=2)
    built = []

    def build(key):
        def make():
            built.append(key)
            return np.eye(2) * len(built)
        return make

    cache.get("a", build("a"))
    cache.get("b", build("b"))
    cache.get("a", build("a"))
    cache.get("c", build("c"))
    assert built == ["a", "b", "c"]
    assert len(cache) == 2

    cache.get("b", build("b"))
    assert built == ["a", "b", "c", "b"]

    cache.resize(1)
    assert len(cache) == 1
    cache.clear()
    assert len(cache) == 0
