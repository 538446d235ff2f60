from __future__ import annotations

import functools
import logging
import math
import random
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from types import ModuleType
from typing import Callable, Optional

import numpy as np

from nctv import walters
from nctv.config import Config, ConfigException, ThetaMode
from nctv.errors import NctvException
from nctv.grp import FiniteGroupTag, coset_count, maximal_finite_subgroups, residue_lattice, torsion_classes
from nctv.ktheory import (
    EXPECTED_K0_RANKS,
    EXPECTED_MAXIMAL_ORDERS,
    FIBER_PARTITIONS,
    ISOMORPHISM_CASES,
    AffineValue,
    TraceSubgroup,
    highdim_k_ranks,
    iso_decide,
    k0_summary,
    k_ranks,
    maximal_orders_match,
    rational_structure_rank,
    trace_image,
)
from nctv.report import CheckRecord, Report, boolean_check, exact_check, residual_check
from nctv.tga import (
    TRACE_TABLE,
    UNITARY_TABLE,
    AlgebraElement,
    CocycleSpec,
    NonUnitaryError,
    algebra_identities_hold,
    bare_u2t_cube,
    check_generator_relations,
    cocycle_identity_holds,
    cocycle_is_invariant,
    default_cocycle,
    fiber_one_identification,
    generators,
    is_projection,
    projection_family,
    random_element,
    random_group_element,
    relations,
    spectral_resolution,
    unitary_family,
    unitary_order,
)
from nctv.theta import ThetaValue
from nctv.walters import Grid, SampledFunction

logger = logging.getLogger(__name__)

Task = Callable[[], list[CheckRecord]]

DEFAULT_NUMERIC_THETAS = [0.37, 0.5, 1 / math.sqrt(2), 0.93]

# Number of random triples drawn for the convolution algebra identities
ALGEBRA_SAMPLE_CAP = 100


class UnknownSuiteError(NctvException):
    """Raised when no suite is registered under the requested name."""
    pass


class SuiteEnabled:
    """
    A registered suite: a function turning a configuration into independent
    tasks, each returning check records.
    """

    def __init__(self, func: Callable[[Config], list[Task]], name: str):
        self.func = func
        self.name = name
        functools.update_wrapper(self, func)

    def __call__(self, config: Config) -> list[Task]:
        return self.func(config)

    @property
    def description(self) -> str:
        """
        First paragraph of the suite function's docstring, on one line.
        """
        if not (docstring := self.func.__doc__):
            return ""
        docstring = " ".join(x.strip() for x in docstring.split())
        if desc := re.findall(r"(.*?):param", docstring):
            return desc[0].strip()
        return docstring


def EnableSuite(name: str) -> Callable[[Callable[[Config], list[Task]]], SuiteEnabled]:
    """Decorator registering a suite under the given name."""

    def wrapper(function: Callable[[Config], list[Task]]) -> SuiteEnabled:
        return SuiteEnabled(function, name)

    return wrapper


def FindSuites(module: Optional[ModuleType] = None) -> list[SuiteEnabled]:
    """
    Find all suites registered with the EnableSuite decorator.

    :param module: Module to search, this module by default
    """
    module = module or sys.modules[__name__]
    return [x for x in module.__dict__.values() if isinstance(x, SuiteEnabled)]


def FindSuite(name: str, module: Optional[ModuleType] = None) -> Optional[SuiteEnabled]:
    """
    Find a registered suite by name.

    :param name: Name given to EnableSuite
    :param module: Module to search, this module by default
    """
    for suite in FindSuites(module):
        if suite.name == name:
            return suite
    return None


def run_suite(config: Config) -> Report:
    """
    Validate the configuration, run the named suite's tasks on up to
    `config.jobs` threads and collect the checks in task order.

    :raises UnknownSuiteError: If the suite name is not registered
    :raises ConfigException: If the configuration is invalid
    """
    config.validate()
    if (suite := FindSuite(config.suite)) is None:
        known = ", ".join(s.name for s in FindSuites())
        raise UnknownSuiteError(f"Unknown suite '{config.suite}', expected one of: {known}")

    walters.KERNELS.resize(config.kernel_cache_size)
    start = time.perf_counter()
    tasks = suite(config)
    logger.debug(f"Suite {suite.name}: {len(tasks)} tasks on {config.jobs} workers")

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(lambda task: task(), tasks))
    checks = [check for result in results for check in result]

    elapsed = time.perf_counter() - start
    report = Report(suite.name, checks, config.to_json(), elapsed if config.timing else None)
    logger.info(
        f"Suite {suite.name}: {len(checks) - len(report.failures)} of {len(checks)} checks "
        f"passed in {elapsed:.2f} s"
    )
    return report


def _groups(config: Config) -> list[FiniteGroupTag]:
    return [FiniteGroupTag.parse(selector) for selector in config.groups]


def _cyclic_groups(config: Config, suite: str) -> list[FiniteGroupTag]:
    groups = []
    for F in _groups(config):
        if F.flip:
            logger.warning(f"Suite {suite} covers the cyclic actions on Z^2 only, skipping {F.label}")
        else:
            groups.append(F)
    return groups


def _cocycle(theta: ThetaValue) -> CocycleSpec:
    if theta.mode == ThetaMode.FORMAL:
        return CocycleSpec.formal()
    if theta.mode == ThetaMode.RATIONAL:
        return CocycleSpec.rational(theta.value)
    return CocycleSpec.numeric(theta.value)


###########################################
#  Exact twisted group algebra checks     #
###########################################


@EnableSuite("symbolic")
def symbolic_suite(config: Config) -> list[Task]:
    """
    Exact relations, projections, traces, unitary orders and cocycle identities
    of the twisted group algebras, for every configured group and θ.
    """
    thetas = config.thetas or [ThetaValue.formal()]
    tasks: list[Task] = []
    for F in _groups(config):
        if F.flip:
            tasks.append(functools.partial(_symbolic_checks, F, default_cocycle(F), "skew", config))
            continue
        for theta in thetas:
            tasks.append(functools.partial(_symbolic_checks, F, _cocycle(theta), str(theta), config))
    return tasks


def _symbolic_checks(F: FiniteGroupTag, cocycle: CocycleSpec, theta: str, config: Config) -> list[CheckRecord]:
    prefix = f"{F.label}/{theta}"
    checks = []

    relation_names = {relation.name for relation in relations(F)}
    for name, holds in check_generator_relations(F, cocycle).items():
        anchor = "generator-relations" if name in relation_names else "action-formula"
        checks.append(boolean_check(f"{prefix}/relation {name}", anchor, holds))

    if not F.flip:
        checks += _projection_checks(F, cocycle, prefix)
        checks += _unitary_checks(F, cocycle, prefix)

    checks += _random_identity_checks(F, cocycle, theta, prefix, config)
    return checks


def _projection_checks(F: FiniteGroupTag, cocycle: CocycleSpec, prefix: str) -> list[CheckRecord]:
    checks = []
    for name, projection in projection_family(F, cocycle).items():
        checks.append(boolean_check(f"{prefix}/projection {name}", "projection-basis", is_projection(projection)))
        trace = projection.trace()
        value = trace.rational_value()
        checks.append(exact_check(
            f"{prefix}/trace {name}",
            "trace-table",
            str(value) if value is not None else trace.render(),
            str(TRACE_TABLE[F.order][name]),
        ))

    resolution = spectral_resolution(F, cocycle)
    one = AlgebraElement.identity(cocycle)
    total = AlgebraElement({}, cocycle)
    orthogonal = True
    for i, p in enumerate(resolution):
        total = total + p
        for j, q in enumerate(resolution):
            if i != j and not (p @ q).is_zero():
                orthogonal = False
    checks.append(boolean_check(f"{prefix}/spectral projections of t are orthogonal", "spectral-resolution", orthogonal))
    checks.append(boolean_check(f"{prefix}/spectral projections of t sum to 1", "spectral-resolution", total == one))
    return checks


def _unitary_checks(F: FiniteGroupTag, cocycle: CocycleSpec, prefix: str) -> list[CheckRecord]:
    checks = []
    family = unitary_family(F, cocycle)
    for spec in UNITARY_TABLE[F.order]:
        try:
            order = unitary_order(family[spec.target])
        except NonUnitaryError as e:
            checks.append(CheckRecord(f"{prefix}/order {spec.target}", "unitary-orders", False, None, spec.order, note=str(e)))
            continue
        checks.append(exact_check(f"{prefix}/order {spec.target}", "unitary-orders", order, spec.order))

    if F.order == 2:
        half = Fraction(1, 2)
        one = AlgebraElement.identity(cocycle)
        projections = {name: (one + w) * half for name, w in family.items()}
        names = list(projections)
        worst = Fraction(0)
        bounded = True
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                value = (projections[a] @ projections[b]).trace().rational_value()
                if value is None:
                    bounded = False
                else:
                    worst = max(worst, abs(value))
        checks.append(CheckRecord(
            f"{prefix}/pairwise products of the order-two projections",
            "unitary-projections",
            bounded and worst <= Fraction(1, 2),
            str(worst) if bounded else "irrational",
            "<= 1/2",
            note="largest absolute trace of a product of two distinct projections",
        ))

    if F.order == 3:
        cube = bare_u2t_cube(cocycle)
        expected = AlgebraElement.identity(cocycle) * cocycle.phase(0, -2)
        checks.append(boolean_check(
            f"{prefix}/(u^2 t)^3 = e(-2*t)",
            "uncorrected-unitary-defect",
            cube == expected,
            note="the unphased u^2 t has order three only for integer theta",
        ))
    return checks


def _random_identity_checks(
    F: FiniteGroupTag, cocycle: CocycleSpec, theta: str, prefix: str, config: Config
) -> list[CheckRecord]:
    rng = random.Random(f"{config.seed}:{F.label}:{theta}")

    failures = 0
    for _ in range(config.samples):
        r, s, t = (random_group_element(F, rng) for _ in range(3))
        if not cocycle_identity_holds(cocycle, r, s, t):
            failures += 1

    invariance_failures = 0
    for _ in range(config.samples):
        x = [rng.randint(-6, 6) for _ in range(F.dimension)]
        y = [rng.randint(-6, 6) for _ in range(F.dimension)]
        for point in F.powers():
            if not cocycle_is_invariant(cocycle, point, x, y):
                invariance_failures += 1

    algebra_failures = 0
    for _ in range(min(config.samples, ALGEBRA_SAMPLE_CAP)):
        a, b, c = (random_element(F, cocycle, rng) for _ in range(3))
        if not algebra_identities_hold(a, b, c):
            algebra_failures += 1

    return [
        exact_check(f"{prefix}/cocycle identity on random triples", "cocycle", failures, 0,
                    note=f"{config.samples} samples"),
        exact_check(f"{prefix}/cocycle invariance under F", "cocycle", invariance_failures, 0,
                    note=f"{config.samples} samples"),
        exact_check(f"{prefix}/convolution algebra identities", "convolution-algebra", algebra_failures, 0,
                    note=f"{min(config.samples, ALGEBRA_SAMPLE_CAP)} samples"),
    ]


###########################################
#  K-theory                               #
###########################################


@EnableSuite("ktheory")
def ktheory_suite(config: Config) -> list[Task]:
    """
    K-theory ranks from the torsion classification, trace vectors and images,
    the isomorphism criterion, rational fiber structure and the flip in rank d.
    """
    tasks: list[Task] = [functools.partial(_ktheory_checks, F) for F in _cyclic_groups(config, "ktheory")]
    tasks.append(_isomorphism_checks)
    tasks.append(_rational_structure_checks)
    tasks.append(_highdim_checks)
    return tasks


def _ktheory_checks(F: FiniteGroupTag) -> list[CheckRecord]:
    k = F.order
    checks = [exact_check(f"{F.label}/K-theory ranks", "k-ranks", list(k_ranks(F)), [EXPECTED_K0_RANKS[k], 0])]

    subgroups = maximal_finite_subgroups(F)
    checks.append(CheckRecord(
        f"{F.label}/maximal finite subgroup orders",
        "maximal-subgroups",
        maximal_orders_match(F),
        [s.order for s in subgroups],
        list(EXPECTED_MAXIMAL_ORDERS[k]),
        note=", ".join(s.label for s in subgroups),
    ))

    classes = torsion_classes(F)
    for power, point in enumerate(F.powers()):
        if power == 0:
            continue
        det = round(abs(np.linalg.det(np.eye(2) - np.array(point, dtype=float))))
        listed = sum(1 for c in classes if c.power == power)
        checks.append(exact_check(
            f"{F.label}/torsion classes of t^{power}",
            "torsion-classes",
            [listed, residue_lattice(point).index, coset_count(point)],
            [det, det, det],
        ))

    checks.append(exact_check(
        f"{F.label}/trace image",
        "trace-image",
        str(trace_image(F)),
        str(TraceSubgroup(Fraction(1, k), Fraction(1, k))),
    ))

    summary = k0_summary(F)
    expected = ["1"] + [str(TRACE_TABLE[k][name]) for name in summary.basis_labels[1:-1]]
    expected.append(str(AffineValue(Fraction(0), Fraction(1, k))))
    checks.append(exact_check(
        f"{F.label}/K0 basis traces",
        "k0-basis",
        [str(t) for t in summary.trace_vector],
        expected,
        note=", ".join(summary.basis_labels),
    ))
    return checks


def _isomorphism_checks() -> list[CheckRecord]:
    checks = []
    for i, (k1, theta1, k2, theta2, expected) in enumerate(ISOMORPHISM_CASES):
        checks.append(exact_check(
            f"isomorphism/{i:02d} Z{k1} at {theta1} vs Z{k2} at {theta2}",
            "isomorphism-criterion",
            iso_decide(k1, theta1, k2, theta2),
            expected,
        ))
    return checks


def _rational_structure_checks() -> list[CheckRecord]:
    return [
        exact_check(
            f"rational structure/Z{k}",
            "rational-structure",
            rational_structure_rank(partitions),
            EXPECTED_K0_RANKS[k],
            note=" ".join(str(list(blocks)) for blocks in partitions),
        )
        for k, partitions in FIBER_PARTITIONS.items()
    ]


def _highdim_checks() -> list[CheckRecord]:
    checks = []
    for d in range(1, 7):
        ranks = highdim_k_ranks(d)
        half = 2 ** (d - 1)
        checks.append(exact_check(
            f"flip/d={d} ranks",
            "highdim-ranks",
            ranks.to_json(),
            {"dimension": d, "torus": [half, half], "flip_crossed": [3 * half, 0], "involution_classes": 2 ** d},
        ))
        checks.append(boolean_check(f"flip/d={d} rank decomposition", "highdim-ranks", ranks.decomposition_holds))

    checks.append(exact_check(
        "flip/d=2 agrees with Z2",
        "highdim-ranks",
        highdim_k_ranks(2).flip_crossed[0],
        k_ranks(FiniteGroupTag.cyclic(2))[0],
    ))
    return checks


###########################################
#  Bimodule numerics                      #
###########################################

ORDER_TOLERANCE = 1e-4
TRANSFORM_TOLERANCE = 1e-6
COVARIANCE_TOLERANCE = 1e-5
NORMALIZATION_TOLERANCE = 1e-8
HERMITICITY_TOLERANCE = 1e-8
IMPRIMITIVITY_TOLERANCE = 1e-4
ASSOCIATIVITY_TOLERANCE = 1e-5
ACTION_TOLERANCE = 1e-8

EQUIVARIANCE_RADIUS = 2

# Off-center mixtures need a wider truncation than the self-dual Gaussian
MIXED_IMPRIMITIVITY_WINDOW = 14


@EnableSuite("walters")
def walters_suite(config: Config) -> list[Task]:
    """
    Residuals of the order-k transforms, covariance, inner-product identities,
    imprimitivity and the module actions on sampled Gaussians, at each numeric θ.
    """
    thetas = config.thetas or [ThetaValue(ThetaMode.NUMERIC, t) for t in DEFAULT_NUMERIC_THETAS]
    values = []
    for theta in thetas:
        if theta.mode == ThetaMode.FORMAL or not 0 < theta.as_float() <= 1:
            raise ConfigException(f"The walters suite needs theta in (0, 1], got {theta}")
        values.append((str(theta), theta.as_float()))

    grid = Grid(config.grid_l, config.grid_n)
    groups = _cyclic_groups(config, "walters")
    tasks: list[Task] = []
    for label, theta in values:
        for F in groups:
            tasks.append(functools.partial(_transform_checks, F, grid, label, theta, config))
        tasks.append(functools.partial(_bimodule_checks, grid, label, theta, config))
    return tasks


def _test_functions(grid: Grid, theta: float) -> tuple[SampledFunction, SampledFunction]:
    xi = walters.sample_gaussian(grid, theta)
    eta = walters.sample_mixture(grid, theta, [(1.0, 0.3, 0.5, 1), (0.5j, -0.4, 0.6, 0)])
    return xi, eta


def _transform_checks(F: FiniteGroupTag, grid: Grid, label: str, theta: float, config: Config) -> list[CheckRecord]:
    prefix = f"{F.label}/{label}"
    xi, eta = _test_functions(grid, theta)
    override = config.tolerance

    checks = [
        residual_check(f"{prefix}/W^{F.order} = 1", "transform-order",
                       walters.order_residual(F, xi), ORDER_TOLERANCE, override),
        residual_check(f"{prefix}/W is isometric", "transform-unitary",
                       abs(walters.transform_w(F, eta).norm() - eta.norm()), TRANSFORM_TOLERANCE, override),
        residual_check(f"{prefix}/W W^-1 = 1", "transform-inverse",
                       walters.inverse_residual(F, eta), TRANSFORM_TOLERANCE, override),
    ]
    if F.order in (2, 3):
        checks.append(residual_check(
            f"{prefix}/W = W_{2 * F.order}^2", "transform-square",
            walters.square_residual(F, xi), TRANSFORM_TOLERANCE, override,
        ))

    relation = walters.relation_residuals(F, xi, 1, 1, eta)
    checks.append(residual_check(f"{prefix}/covariance against u", "covariance",
                                 relation.covariance_u, COVARIANCE_TOLERANCE, override))
    checks.append(residual_check(f"{prefix}/covariance against v", "covariance",
                                 relation.covariance_v, COVARIANCE_TOLERANCE, override))

    worst = 0.0
    for k in range(-EQUIVARIANCE_RADIUS, EQUIVARIANCE_RADIUS + 1):
        for l in range(-EQUIVARIANCE_RADIUS, EQUIVARIANCE_RADIUS + 1):
            worst = max(worst, walters.equivariance_residual(F, xi, eta, k, l))
    checks.append(residual_check(
        f"{prefix}/inner product equivariance", "inner-product-equivariance",
        worst, COVARIANCE_TOLERANCE, override, note=f"max over |k|, |l| <= {EQUIVARIANCE_RADIUS}",
    ))
    return checks


def _bimodule_checks(grid: Grid, label: str, theta: float, config: Config) -> list[CheckRecord]:
    prefix = f"bimodule/{label}"
    xi, eta = _test_functions(grid, theta)
    override = config.tolerance

    checks = [residual_check(
        f"{prefix}/<xi, xi>_(0,0) = theta", "inner-product-normalization",
        abs(walters.inner_right(xi, xi, 0, 0) - theta), NORMALIZATION_TOLERANCE, override,
    )]

    worst = max(
        walters.hermiticity_residual(xi, eta, n, m)
        for n in range(-EQUIVARIANCE_RADIUS, EQUIVARIANCE_RADIUS + 1)
        for m in range(-EQUIVARIANCE_RADIUS, EQUIVARIANCE_RADIUS + 1)
    )
    checks.append(residual_check(f"{prefix}/<xi, eta>* = <eta, xi>", "inner-product-hermitian",
                                 worst, HERMITICITY_TOLERANCE, override))

    bimodule = walters.bimodule_residuals(xi, xi, xi, window=config.window)
    checks.append(residual_check(
        f"{prefix}/imprimitivity", "imprimitivity", bimodule.imprimitivity,
        IMPRIMITIVITY_TOLERANCE, override, note=f"window {config.window}, tail {bimodule.tail:.1e}",
    ))
    checks.append(residual_check(f"{prefix}/xi.(tu) = (xi.t).u", "crossed-product-action",
                                 bimodule.associativity, ASSOCIATIVITY_TOLERANCE, override))

    zeta = walters.sample_gaussian(grid, theta, center=0.5)
    window = max(config.window, MIXED_IMPRIMITIVITY_WINDOW)
    residual, tail = walters.imprimitivity_residual(xi, eta, zeta, window)
    checks.append(residual_check(
        f"{prefix}/imprimitivity, distinct functions", "imprimitivity", residual,
        IMPRIMITIVITY_TOLERANCE, override, note=f"window {window}, tail {tail:.1e}",
    ))

    F = FiniteGroupTag.cyclic(6)
    g = generators(F, CocycleSpec.numeric(theta))
    direct = walters.act_element(eta, g["v"] @ g["u"], F)
    stepwise = walters.act_right(eta, ["V", "U"])
    checks.append(residual_check(f"{prefix}/xi.(vu) = (xi.v).u", "module-action",
                                 (direct - stepwise).norm(), ACTION_TOLERANCE, override))

    worst = max(
        walters.commutation_residual(eta, left, right)
        for left in ("U", "V")
        for right in ("U", "V")
    )
    checks.append(residual_check(f"{prefix}/left and right actions commute", "module-action",
                                 worst, ACTION_TOLERANCE, override))
    return checks


###########################################
#  Fibers at 0 and 1                      #
###########################################


@EnableSuite("fiber")
def fiber_suite(config: Config) -> list[Task]:
    """
    Identification of the fibers at θ = 1 and θ = 0 with the untwisted group algebra.
    """
    return [functools.partial(_fiber_checks, F) for F in _cyclic_groups(config, "fiber")]


def _fiber_checks(F: FiniteGroupTag) -> list[CheckRecord]:
    return [
        boolean_check(f"{F.label}/{name}", "fiber-identification", holds)
        for name, holds in fiber_one_identification(F).items()
    ]
