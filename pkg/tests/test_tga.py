from fractions import Fraction

import pytest
from hypothesis import given, settings

from nctv.coeff import e
from nctv.grp import FiniteGroupTag, GroupElement
from nctv.tga import (
    TRACE_TABLE,
    UNITARY_TABLE,
    AlgebraElement,
    CocycleMismatchError,
    CocycleSpec,
    NonUnitaryError,
    action_image,
    check_generator_relations,
    cocycle_identity_holds,
    cocycle_is_invariant,
    default_cocycle,
    fiber_one_identification,
    fiber_one_image,
    generators,
    is_projection,
    bare_u2t_cube,
    projection_family,
    spectral_resolution,
    unitary_family,
    unitary_order,
)
from tests.strategies import GROUPS, algebra_elements, group_elements, translations

FORMAL = CocycleSpec.formal()

COCYCLES = [
    CocycleSpec.formal(),
    CocycleSpec.rational(Fraction(1, 3)),
    CocycleSpec.rational(Fraction(2, 5)),
    CocycleSpec.numeric(0.37),
]

###########################
#  Cocycle and arithmetic #
###########################


def test_cocycle_convention():
    # ω((n, m), (n', m')) = e(θ(n'm - nm')/2)
    assert FORMAL.omega((0, 1), (1, 0)) == e(0, Fraction(1, 2))
    assert FORMAL.omega((1, 0), (0, 1)) == e(0, Fraction(-1, 2))
    assert FORMAL.omega((2, 3), (2, 3)) == 1


def test_skew_matrix_validation():
    with pytest.raises(ValueError):
        CocycleSpec.skew([[0, 1], [1, 0]])


@pytest.mark.parametrize("F", GROUPS)
def test_cocycle_identity(F: FiniteGroupTag):
    @settings(max_examples=1000, deadline=None)
    @given(group_elements(F), group_elements(F), group_elements(F))
    def check(r: GroupElement, s: GroupElement, t: GroupElement):
        assert cocycle_identity_holds(FORMAL, r, s, t)

    check()


@pytest.mark.parametrize("F", GROUPS)
def test_cocycle_invariance(F: FiniteGroupTag):
    @settings(max_examples=1000, deadline=None)
    @given(translations(), translations())
    def check(x: tuple, y: tuple):
        for point in F.powers():
            assert cocycle_is_invariant(FORMAL, point, x, y)

    check()


@pytest.mark.parametrize("F", [FiniteGroupTag.cyclic(3), FiniteGroupTag.cyclic(6), FiniteGroupTag.flip_group(3)])
def test_convolution_algebra_identities(F: FiniteGroupTag):
    cocycle = default_cocycle(F)

    @settings(max_examples=100, deadline=None)
    @given(algebra_elements(F, cocycle), algebra_elements(F, cocycle), algebra_elements(F, cocycle))
    def check(a: AlgebraElement, b: AlgebraElement, c: AlgebraElement):
        assert (a @ b) @ c == a @ (b @ c)
        assert (a @ b).adjoint() == b.adjoint() @ a.adjoint()
        assert (a @ b).trace() == (b @ a).trace()
        assert a.adjoint().adjoint() == a
        assert a @ (b + c) == a @ b + a @ c

    check()


def test_cocycle_mismatch():
    u_formal = generators(FiniteGroupTag.cyclic(2), FORMAL)["u"]
    u_rational = generators(FiniteGroupTag.cyclic(2), CocycleSpec.rational(Fraction(1, 3)))["u"]
    with pytest.raises(CocycleMismatchError):
        u_formal @ u_rational
    with pytest.raises(CocycleMismatchError):
        generators(FiniteGroupTag.flip_group(3), FORMAL)


##########################
#  Generator relations   #
##########################


@pytest.mark.parametrize("F", GROUPS)
@pytest.mark.parametrize("cocycle", COCYCLES)
def test_generator_relations(F: FiniteGroupTag, cocycle: CocycleSpec):
    report = check_generator_relations(F, cocycle)
    assert report
    assert all(report.values()), [name for name, ok in report.items() if not ok]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_flip_relations(d: int):
    report = check_generator_relations(FiniteGroupTag.flip_group(d))
    assert all(report.values())
    assert sum(1 for name in report if name.startswith("t ") and name.endswith("^-1")) == d


def test_commutation_relation():
    g = generators(FiniteGroupTag.cyclic(4), FORMAL)
    assert g["v"] @ g["u"] == g["u"] @ g["v"] * e(0, 1)


@pytest.mark.parametrize(
    "k, name, expected",
    [
        (3, "u", lambda g: g["u"] ** -1 @ g["v"] * e(0, Fraction(-1, 2))),
        (6, "v", lambda g: g["u"] ** -1 @ g["v"] * e(0, Fraction(-1, 2))),
        (2, "u", lambda g: g["u"] ** -1),
        (4, "u", lambda g: g["v"]),
    ],
)
def test_conjugation_by_t(k: int, name: str, expected):
    g = generators(FiniteGroupTag.cyclic(k), FORMAL)
    assert g["t"] @ g[name] @ g["t"] ** -1 == expected(g)


@pytest.mark.parametrize("F", GROUPS)
def test_action_image(F: FiniteGroupTag):
    g = generators(F, FORMAL)
    for x in [(1, 0), (0, 1), (2, -1)]:
        delta = AlgebraElement.delta(F.element(x), FORMAL)
        assert g["t"] @ delta @ g["t"].adjoint() == action_image(F.generator, x, FORMAL)


########################
#  Projections, traces #
########################


@pytest.mark.parametrize("F", GROUPS)
def test_projection_family(F: FiniteGroupTag):
    family = projection_family(F)
    assert list(family) == list(TRACE_TABLE[F.order])
    for name, p in family.items():
        assert is_projection(p), name
        assert p.trace() == TRACE_TABLE[F.order][name], name


@pytest.mark.parametrize("F", GROUPS)
def test_projection_family_at_rational_theta(F: FiniteGroupTag):
    for p in projection_family(F, CocycleSpec.rational(Fraction(1, 3))).values():
        assert is_projection(p)


def test_projection_examples():
    F = FiniteGroupTag.cyclic(2)
    g = generators(F, FORMAL)
    one = AlgebraElement.identity(FORMAL)
    half = Fraction(1, 2)

    assert is_projection((one + g["t"]) * half)
    assert is_projection((one - g["u"] @ g["v"] @ g["t"] * e(0, half)) * half)
    assert not is_projection((one + g["u"]) * half)
    assert (one + g["t"]) * half + (one - g["t"]) * half == one


@pytest.mark.parametrize("F", GROUPS)
def test_spectral_resolution(F: FiniteGroupTag):
    projections = spectral_resolution(F)
    assert len(projections) == F.order
    total = AlgebraElement({}, FORMAL)
    for i, p in enumerate(projections):
        assert is_projection(p)
        assert p.trace() == Fraction(1, F.order)
        total = total + p
        for j, q in enumerate(projections):
            if i != j:
                assert (p @ q).is_zero()
    assert total == 1


def test_order_two_projection_products():
    family = unitary_family(FiniteGroupTag.cyclic(2))
    one = AlgebraElement.identity(FORMAL)
    projections = [(one + w) * Fraction(1, 2) for w in family.values()]
    for i, p in enumerate(projections):
        for q in projections[i + 1:]:
            assert (p @ q).trace() == Fraction(1, 4)


######################
#  Unitary orders    #
######################


@pytest.mark.parametrize("F", GROUPS)
@pytest.mark.parametrize("cocycle", COCYCLES)
def test_unitary_orders(F: FiniteGroupTag, cocycle: CocycleSpec):
    family = unitary_family(F, cocycle)
    for spec in UNITARY_TABLE[F.order]:
        assert unitary_order(family[spec.target]) == spec.order, spec.target


@pytest.mark.parametrize(
    "k, phase, power, order",
    [
        (3, e(Fraction(1, 3), Fraction(1, 6)), 1, 3),
        (4, e(Fraction(1, 4), Fraction(1, 4)), 1, 4),
        (6, e(Fraction(1, 2)), 3, 2),
    ],
)
def test_unitary_order_examples(k: int, phase, power: int, order: int):
    g = generators(FiniteGroupTag.cyclic(k), FORMAL)
    assert unitary_order(g["u"] @ g["t"] ** power * phase) == order


def test_uncorrected_z3_unitary_defect():
    F = FiniteGroupTag.cyclic(3)
    g = generators(F, FORMAL)
    assert bare_u2t_cube() == AlgebraElement.identity(FORMAL) * e(0, -2)
    assert unitary_order(g["u"] ** 2 @ g["t"]) is None
    assert bare_u2t_cube(CocycleSpec.rational(1)) == 1


def test_non_unitary():
    with pytest.raises(NonUnitaryError):
        unitary_order(AlgebraElement.identity(FORMAL) * 2)


#######################
#  Fibers and values  #
#######################


@pytest.mark.parametrize("F", GROUPS)
def test_fiber_identification(F: FiniteGroupTag):
    report = fiber_one_identification(F)
    assert all(report.values()), [name for name, ok in report.items() if not ok]
    assert sum(1 for name in report if name.startswith("theta=1: unitary lifts")) == len(UNITARY_TABLE[F.order])


def test_fiber_one_image_needs_theta_one():
    with pytest.raises(CocycleMismatchError):
        fiber_one_image(AlgebraElement.identity(FORMAL))


def test_fiber_one_image_of_generators():
    F = FiniteGroupTag.cyclic(6)
    at_one = generators(F, CocycleSpec.rational(1))
    plain = generators(F, CocycleSpec.rational(0))
    assert fiber_one_image(at_one["u"]) == -plain["u"]
    assert fiber_one_image(at_one["v"]) == -plain["v"]
    assert fiber_one_image(at_one["t"]) == plain["t"]


def test_specialize_and_evaluate():
    F = FiniteGroupTag.cyclic(4)
    w = unitary_family(F)["ut"]
    assert w.specialize(0).cocycle == CocycleSpec.rational(0)

    numeric = unitary_family(F, CocycleSpec.numeric(0.25))["ut"]
    (value,) = numeric.evaluate().values()
    assert abs(value - e(Fraction(1, 4), Fraction(1, 4)).evaluate(0.25)) < 1e-12

    with pytest.raises(ValueError):
        w.evaluate()


def test_render():
    F = FiniteGroupTag.cyclic(3)
    t = generators(F, FORMAL)["t"]
    assert t.render(F) == "(1*e(0 + 0*t)) t"
    assert AlgebraElement({}, FORMAL).render() == "0"
