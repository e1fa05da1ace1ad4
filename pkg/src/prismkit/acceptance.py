"""Self-test suite - Layer 5. Property checks at desk scale, one CheckResult per criterion.

Each criterion is a pure function of (RunConfig, scale); they run on a
thread pool and are merged by name, so the report does not depend on
scheduling.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .base_rings import OKMatrix, RingSpec
from .cohomology import (
    CechComplex,
    kernel_membership_d1,
    kernel_rigidity_check,
    preimage_general,
    preimage_s2,
    rho_and_rho_prime,
    verify_complex,
    verify_f_identities,
)
from .config import RunConfig
from .crystal import (
    Crystal,
    ResidueObstruction,
    build_stratification,
    check_nilpotent,
    pair_from_stratification,
    perturb_coefficients,
    strat_coeffs,
    verify_alpha_zero_limit,
    verify_coefficient_cocycle,
    verify_cocycle,
)
from .errors import (
    CheckFailed,
    CocycleViolation,
    ComplexViolation,
    NotAdmissible,
    PrecisionError,
    PrismkitError,
    RelationViolation,
)
from .galois import (
    TAU,
    CycRingSpec,
    GroupElem,
    LambdaMatrix,
    LambdaRing,
    CycLambdaElem,
    cocycle_U,
    h0_equals_invariants,
    sample_elements,
    verify_action_law,
    verify_cocycle_identity,
)
from .pd_series import matrix_binomial_power
from .qcalc import QCalcRing, verify_dq_power_of_E, verify_q_identities
from .report import CheckResult, Report
from .sampling import (
    mixed_kernel_crystal,
    random_admissible_crystal,
    random_boundary,
    random_ok_matrix,
    random_strictly_upper_q,
    random_u_series,
    random_weights,
    residue_obstructed_crystal,
    rng_for,
)
from .weights import WeightProfile, fl_check, fl_ring, poly_nilpotency_check, qmatrix_from_json

logger = logging.getLogger(__name__)

DESK_PRECISION = 6
DESK_LAMBDA_DEGREE = 8


def desk_specs(precision: int = DESK_PRECISION) -> list[RingSpec]:
    """Q_3, Q_9, Q_5(5^{1/3}) and Q_3(zeta_3)."""
    return [
        RingSpec(3, (0, 1), (-3, 1), precision),
        RingSpec(3, (1, 0, 1), (-3, 1), precision),
        RingSpec(5, (0, 1), (-5, 0, 0, 1), precision),
        RingSpec(3, (0, 1), (3, 3, 1), precision),
    ]


def galois_specs(precision: int = DESK_PRECISION) -> list[RingSpec]:
    """Desk rings over which Phi_p stays irreducible."""
    return desk_specs(precision)[:3]


def two_adic_spec(precision: int = DESK_PRECISION) -> RingSpec:
    """Q_2 with E = u - 2; p = 2 is only accepted with linear disjointness asserted."""
    return RingSpec(2, (0, 1), (-2, 1), precision, assume_linear_disjoint=True)


@dataclass(frozen=True)
class Scale:
    corpus: int = 100
    boundaries_s2: int = 50
    boundaries_s3: int = 30
    rigidity: int = 30
    galois_crystals: int = 20
    invariants: int = 30
    fl_instances: int = 200

    @classmethod
    def quick(cls) -> Scale:
        return cls(10, 5, 3, 3, 2, 3, 20)


class _Context:
    def __init__(self, config: RunConfig, scale: Scale):
        self.config = config
        self.scale = scale
        self.D = config.degree_cap
        self.precision = config.precision or DESK_PRECISION
        self.specs = desk_specs(self.precision)
        self.lambda_degree = config.lambda_degree_cap or DESK_LAMBDA_DEGREE

    def rng(self, stream: int, index: int):
        return rng_for(self.config.seed * 1000 + stream, index)

    def corpus(self, count: int, stream: int = 0, specs: list[RingSpec] | None = None) -> list[Crystal]:
        specs = specs or self.specs
        out = []
        for k in range(count):
            spec = specs[k % len(specs)]
            out.append(random_admissible_crystal(spec, self.rng(stream, k), 1 + k % 3))
        return out


Criterion = Callable[[_Context], CheckResult]


def _passed(name: str, margin: int | None = None, **details) -> CheckResult:
    return CheckResult(name, "pass", "ok", margin, details)


def criterion_equivalence(ctx: _Context) -> CheckResult:
    specs = ctx.specs + [two_adic_spec(ctx.precision)]
    for k, c in enumerate(ctx.corpus(ctx.scale.corpus, specs=specs)):
        eps = build_stratification(c, ctx.D)
        back = pair_from_stratification(eps, c.alpha)
        if back.matrix != c.matrix:
            raise CheckFailed(f"roundtrip changed crystal {k}", index=k)
    primes = sorted({s.p for s in specs})
    return _passed("01_equivalence_roundtrip", ctx.D, crystals=ctx.scale.corpus, primes=primes)


def criterion_cocycle(ctx: _Context) -> CheckResult:
    corpus = ctx.corpus(ctx.scale.corpus)
    for c in corpus:
        verify_cocycle(c, ctx.D)
    c = corpus[0]
    verify_alpha_zero_limit(c, ctx.D)
    n = int(ctx.rng(1, 0).integers(1, ctx.D + 1))
    try:
        verify_coefficient_cocycle(perturb_coefficients(strat_coeffs(c, 2 * ctx.D), n), c.alpha, ctx.D)
    except CocycleViolation:
        return _passed("02_cocycle_identity", ctx.D - 1, crystals=len(corpus), perturbed_index=n,
                       alpha_zero_limit=True)
    raise CheckFailed(f"perturbing A_{n} went undetected", index=n)


def criterion_complex(ctx: _Context) -> CheckResult:
    margins = []
    for c in ctx.corpus(max(2, ctx.scale.corpus // 20), stream=2):
        cx = CechComplex(c, ctx.D)
        margins.append(verify_complex(cx, 3).margin)
    cx = CechComplex(ctx.corpus(1, stream=2)[0], ctx.D, sign_flip=1)
    try:
        verify_complex(cx, 2)
    except ComplexViolation:
        return _passed("03_complex", min(margins), sign_flip_detected=True)
    raise CheckFailed("a sign-flipped differential squared to zero")


def criterion_f_identities(ctx: _Context) -> CheckResult:
    for c in ctx.corpus(max(2, ctx.scale.corpus // 10), stream=3):
        verify_f_identities(c, ctx.D)
    return _passed("04_f_identities", ctx.D - 1)


def criterion_cohomology(ctx: _Context) -> CheckResult:
    s = ctx.scale
    cxs = [CechComplex(c, ctx.D) for c in ctx.corpus(4, stream=4)]
    for cx in cxs:
        rho_and_rho_prime(cx)
    for k in range(s.boundaries_s2):
        cx = cxs[k % len(cxs)]
        _, f = random_boundary(cx, 2, ctx.rng(4, k))
        preimage_s2(cx, f)
    for k in range(s.boundaries_s3):
        cx = cxs[k % len(cxs)]
        _, f = random_boundary(cx, 3, ctx.rng(5, k))
        preimage_general(cx, 3, f)
    for k, cx in enumerate(cxs):
        a1 = random_ok_matrix(cx.spec, ctx.rng(6, k), cx.rank, 1)
        f = cx.cochain(1, dict(cx.F.right_mul(a1).coeffs))
        if kernel_membership_d1(cx, f) != a1:
            raise CheckFailed("kernel_membership_d1 did not recover a_1", index=k)
    return _passed("05_cohomology", ctx.D - 3, preimages_s2=s.boundaries_s2, preimages_s3=s.boundaries_s3)


def criterion_rigidity(ctx: _Context) -> CheckResult:
    cxs = [CechComplex(c, ctx.D) for c in ctx.corpus(3, stream=7)]
    for k in range(ctx.scale.rigidity):
        cx = cxs[k % len(cxs)]
        level = 2 + k % 2
        _, f = random_boundary(cx, level, ctx.rng(7, k))
        kernel_rigidity_check(cx, level, f)
    cx, f = cxs[0], random_boundary(cxs[0], 2, ctx.rng(8, 0))[1]
    bumped = dict(f.series.coeffs)
    bumped[(1, 0)] = f.coefficient((1, 0)) + cx.basis_vector(0)
    try:
        kernel_rigidity_check(cx, 2, cx.cochain(2, bumped))
    except RelationViolation:
        return _passed("06_rigidity", ctx.D - 3, boundaries=ctx.scale.rigidity, violation_detected=True)
    raise CheckFailed("a broken x1_constant relation went undetected")


def criterion_galois(ctx: _Context) -> CheckResult:
    pairs = 0
    specs = galois_specs(ctx.precision)
    for c in ctx.corpus(ctx.scale.galois_crystals, stream=9, specs=specs):
        cspec = CycRingSpec(c.spec, ctx.lambda_degree)
        sample = sample_elements(cspec)
        for g in sample:
            for h in sample:
                verify_cocycle_identity(c, g, h, cspec)
                pairs += 1
    for spec in specs:
        cspec = CycRingSpec(spec, ctx.lambda_degree)
        sample = sample_elements(cspec)
        for g in sample:
            for h in sample:
                verify_action_law(g, h, cspec.lam(1))

    # phi = [-alpha]: U(tau^2) = 1 - 2x with x = alpha pi lambda (1 - zeta)
    spec = specs[0]
    cspec = CycRingSpec(spec, ctx.lambda_degree)
    c = Crystal(spec, OKMatrix.from_rows(spec, [[-spec.alpha]]))
    x = cspec.one_minus_zeta * (spec.alpha * spec.pi())
    expected = LambdaMatrix(
        cspec, ((LambdaRing(cspec).one() - CycLambdaElem.monomial(x * 2, 1, cspec),),)
    )
    if cocycle_U(c, GroupElem(2, 0), cspec) != expected:
        raise CheckFailed("U(tau^2) for phi = -alpha is not 1 - 2x")
    verify_cocycle_identity(c, TAU, TAU, cspec)
    return _passed("07_galois_cocycle", ctx.lambda_degree - 1, pairs=pairs, lambda_degree_cap=ctx.lambda_degree)


def criterion_invariants(ctx: _Context) -> CheckResult:
    specs = galois_specs(ctx.precision)
    count = ctx.scale.invariants
    for k in range(count):
        spec = specs[k % len(specs)]
        rng = ctx.rng(10, k)
        rank = 1 + k % 3
        c = mixed_kernel_crystal(spec, rng, rank) if k % 2 else random_admissible_crystal(spec, rng, rank)
        h0_equals_invariants(c, CycRingSpec(spec, ctx.lambda_degree))
    return _passed("08_invariants", None, crystals=count)


def criterion_qcalc(ctx: _Context) -> CheckResult:
    cfg = ctx.config
    checked = 0
    for k, spec in enumerate(ctx.specs):
        ring = QCalcRing(spec, cfg.u_cap, cfg.m_cap)
        rng = ctx.rng(11, k)
        f = random_u_series(ring, rng, cfg.u_cap // spec.p)
        g = random_u_series(ring, rng, cfg.u_cap // 2)
        verify_q_identities(f, g)
        for h in range(1, 5):
            if spec.e * h <= cfg.u_cap:
                verify_dq_power_of_E(ring, h)
                checked += 1
    return _passed("09_qcalc", cfg.u_cap - 1, e_powers=checked)


def criterion_weights(ctx: _Context) -> CheckResult:
    for k, c in enumerate(ctx.corpus(ctx.scale.corpus)):
        verdict = poly_nilpotency_check(c)
        if isinstance(verdict, ResidueObstruction):
            raise CheckFailed(f"admissible crystal {k} failed the residue product test", index=k)
    ring = fl_ring(5, ctx.config.m_cap)
    for k in range(ctx.scale.fl_instances):
        rng = ctx.rng(12, k)
        d = 1 + k % 3
        fl_check(random_weights(rng, d, 5), random_strictly_upper_q(ring, rng, d), ring)
    report = fl_check(WeightProfile((0, 1)), qmatrix_from_json(ring, [[0, 1], [0, 0]]), ring)
    if not report.details["P_is_zero"]:
        raise CheckFailed("the 2x2 example does not give P = 0")
    return _passed("10_weights_fl", ctx.config.m_cap, fl_instances=ctx.scale.fl_instances, label="conjecture-consistency")


def criterion_negative_controls(ctx: _Context) -> CheckResult:
    spec = ctx.specs[1]
    c = residue_obstructed_crystal(spec)
    if not isinstance(check_nilpotent(c.matrix, c.alpha), ResidueObstruction):
        raise CheckFailed("admissibility accepted a residue-obstructed crystal")
    for what, run in (
        ("build_stratification", lambda: build_stratification(c, ctx.D)),
        ("verify_cocycle", lambda: verify_cocycle(c, ctx.D)),
        ("series decay", lambda: matrix_binomial_power(c.matrix, c.alpha, degree_cap=ctx.D, decay_budget=4 * ctx.D)),
    ):
        try:
            run()
        except NotAdmissible:
            continue
        raise CheckFailed(f"{what} accepted a residue-obstructed crystal")
    if not isinstance(poly_nilpotency_check(c), ResidueObstruction):
        raise CheckFailed("poly_nilpotency_check accepted a residue-obstructed crystal")
    return _passed("11_negative_controls", None, spec=repr(spec))


CRITERIA: list[tuple[str, Criterion]] = [
    ("01_equivalence_roundtrip", criterion_equivalence),
    ("02_cocycle_identity", criterion_cocycle),
    ("03_complex", criterion_complex),
    ("04_f_identities", criterion_f_identities),
    ("05_cohomology", criterion_cohomology),
    ("06_rigidity", criterion_rigidity),
    ("07_galois_cocycle", criterion_galois),
    ("08_invariants", criterion_invariants),
    ("09_qcalc", criterion_qcalc),
    ("10_weights_fl", criterion_weights),
    ("11_negative_controls", criterion_negative_controls),
]


def _run_one(name: str, fn: Criterion, ctx: _Context) -> CheckResult:
    start = time.perf_counter()
    try:
        result = fn(ctx)
    except CheckFailed as e:
        result = CheckResult(name, "fail", f"{type(e).__name__}: {e}")
    except PrecisionError as e:
        result = CheckResult(name, "exhausted", f"{type(e).__name__}: {e}")
    except PrismkitError as e:
        result = CheckResult(name, "fail", f"{type(e).__name__}: {e}")
    result.details["seconds"] = round(time.perf_counter() - start, 3)
    logger.info("%s: %s (%.2fs)", name, result.status, result.details["seconds"])
    return result


def run_selftest(config: RunConfig, quick: bool = False, only: list[str] | None = None) -> Report:
    """Run every criterion (or the named subset) and merge the results by name."""
    ctx = _Context(config, Scale.quick() if quick else Scale())
    selected = [(n, fn) for n, fn in CRITERIA if not only or n in only]
    report = Report(command="selftest", seed=config.seed)
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for result in pool.map(lambda item: _run_one(item[0], item[1], ctx), selected):
            report.add(result)
    report.elapsed_seconds = time.perf_counter() - start
    return report
