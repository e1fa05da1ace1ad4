"""Hodge-Tate crystals - Layer 2. Pairs (M, phi_M) and their stratifications.

A crystal of rank l is an l x l matrix A over O_K (the matrix of phi_M),
optionally divided by pi^d.  It is admissible when
prod_{i=0}^{n} (A + i*alpha) tends to 0, alpha = E'(pi); the stratification
is then eps = sum_n A_n X^[n] with A_0 = I and A_{n+1} = A_n (A + n*alpha).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb, factorial
from typing import Any, Union

from .base_rings import OKElem, OKMatrix, RingSpec, smith_normal_form
from .errors import (
    CocycleViolation,
    NotAdmissible,
    NotAStratification,
    ShapeMismatch,
    SpecMismatch,
)
from .pd_series import PDSeries, degeneracy, face_map, matrix_binomial_power, pd_mul
from .report import IdentityReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Crystal:
    """The pair (M, phi_M) with phi_M = pi^{-denominator_exp} * matrix."""

    spec: RingSpec
    matrix: OKMatrix
    denominator_exp: int = 0

    def __post_init__(self):
        if self.matrix.nrows != self.matrix.ncols:
            raise ShapeMismatch("crystal matrix must be square")
        if self.matrix.spec != self.spec:
            raise SpecMismatch("crystal matrix lives over a different ring")
        if self.denominator_exp < 0:
            raise SpecMismatch("denominator_exp must be non-negative")

    @property
    def rank(self) -> int:
        return self.matrix.nrows

    @property
    def alpha(self) -> OKElem:
        return self.spec.alpha

    @property
    def is_integral(self) -> bool:
        return self.denominator_exp == 0

    def lattice(self) -> Crystal:
        """pi^{denominator_exp} phi_M: the integral crystal every identity is checked on."""
        if self.is_integral:
            return self
        logger.debug("clearing the denominator pi^%d", self.denominator_exp)
        return Crystal(self.spec, self.matrix)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Crystal:
        if not isinstance(data, dict):
            raise SpecMismatch("crystal must be a JSON object")
        try:
            spec = RingSpec.from_dict(data["ring"])
            matrix = OKMatrix.from_json(spec, data["matrix"])
        except KeyError as e:
            raise SpecMismatch(f"crystal is missing field {e.args[0]!r}")
        rank = data.get("rank", matrix.nrows)
        if rank != matrix.nrows:
            raise ShapeMismatch(f"rank {rank} does not match a {matrix.nrows}x{matrix.ncols} matrix")
        return cls(spec, matrix, int(data.get("denominator_exp", 0)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "ring": self.spec.to_dict(),
            "rank": self.rank,
            "matrix": self.matrix.to_json(),
            "denominator_exp": self.denominator_exp,
        }


# -- Admissibility ---------------------------------------------------------


@dataclass(frozen=True)
class CertifiedNilpotent:
    """P_{n_star} has every entry of valuation >= the target."""

    n_star: int
    attained_valuation: int
    tag: str = "CertifiedNilpotent"

    def describe(self) -> str:
        return f"CertifiedNilpotent(n*={self.n_star}, v={self.attained_valuation})"


@dataclass(frozen=True)
class ResidueObstruction:
    """The residue image of the first p factors is not nilpotent."""

    witness_power: int
    tag: str = "ResidueObstruction"

    def describe(self) -> str:
        return f"ResidueObstruction(power={self.witness_power})"


@dataclass(frozen=True)
class Inconclusive:
    budget: int
    tag: str = "Inconclusive"

    def describe(self) -> str:
        return f"Inconclusive(budget={self.budget})"


NilpotencyVerdict = Union[CertifiedNilpotent, ResidueObstruction, Inconclusive]


def default_budget(spec: RingSpec, rank: int, target_val: int) -> int:
    return spec.p * (target_val + rank * spec.e * spec.precision)


def residue_product(A: OKMatrix, alpha: OKElem) -> OKMatrix:
    """prod_{i=0}^{p-1} (A + i*alpha)."""
    B = OKMatrix.identity(A.spec, A.nrows)
    for i in range(A.spec.p):
        B = B * A.add_scalar(alpha * i)
    return B


def check_nilpotent(
    A: OKMatrix,
    alpha: OKElem,
    target_val: int | None = None,
    n_max: int | None = None,
) -> NilpotencyVerdict:
    """Certify prod_{i<n} (A + i*alpha) -> 0 up to target_val.

    The residue test is necessary only: a verdict other than
    ResidueObstruction never claims the converse.
    """
    if A.nrows != A.ncols:
        raise ShapeMismatch("check_nilpotent needs a square matrix")
    spec = A.spec
    target = spec.horizon if target_val is None else target_val
    budget = default_budget(spec, A.nrows, target) if n_max is None else n_max

    B = residue_product(A, alpha)
    if (B ** A.nrows).valuation() < 1:
        logger.debug("residue obstruction for %dx%d matrix", A.nrows, A.ncols)
        return ResidueObstruction(witness_power=A.nrows)

    P = OKMatrix.identity(spec, A.nrows)
    for n in range(1, budget + 1):
        P = P * A.add_scalar(alpha * (n - 1))
        v = P.valuation()
        if v >= target:
            logger.debug("certified nilpotent at n=%d (v=%d, target=%d)", n, v, target)
            return CertifiedNilpotent(n_star=n, attained_valuation=v)
    return Inconclusive(budget=budget)


def require_admissible(c: Crystal, n_max: int | None = None) -> CertifiedNilpotent:
    """check_nilpotent at full precision, raising NotAdmissible otherwise."""
    c = c.lattice()
    verdict = check_nilpotent(c.matrix, c.alpha, n_max=n_max)
    if not isinstance(verdict, CertifiedNilpotent):
        raise NotAdmissible(f"crystal is not certified admissible: {verdict.describe()}", verdict=verdict)
    return verdict


# -- Stratifications -------------------------------------------------------


def strat_coeffs(c: Crystal, n: int) -> list[OKMatrix]:
    """[A_0, ..., A_n] with A_0 = I, A_{k+1} = A_k (A + k*alpha)."""
    c = c.lattice()
    A = c.matrix
    coeffs = [OKMatrix.identity(c.spec, c.rank)]
    for k in range(n):
        coeffs.append(coeffs[-1] * A.add_scalar(c.alpha * k))
    return coeffs


def build_stratification(c: Crystal, D: int, n_max: int | None = None) -> PDSeries:
    """eps = (1 - alpha X)^{-A/alpha} truncated at degree D."""
    require_admissible(c, n_max)
    return matrix_binomial_power(c.matrix, c.alpha, degree_cap=D)


def _affine_inverse_power_coeff(k: int, t: int) -> int:
    """Integer c with (1 - alpha X)^{-k} = sum_t c * alpha^t X^[t]."""
    if k == 0:
        return 1 if t == 0 else 0
    return comb(k + t - 1, t) * factorial(t)


def _cocycle_left_factor(coeffs: list[OKMatrix], n: int, alpha: OKElem, D: int) -> PDSeries:
    # sum_i (-1)^i A_{n+i} (1 - alpha X)^{-n-i} X^[i]
    spec = alpha.spec
    alpha_pows = [spec.one()]
    for _ in range(D):
        alpha_pows.append(alpha_pows[-1] * alpha)
    terms: dict[tuple[int, ...], OKMatrix] = {}
    for K in range(D + 1):
        acc = None
        for i in range(K + 1):
            t = K - i
            factor = (-1) ** i * _affine_inverse_power_coeff(n + i, t) * comb(K, i)
            if not factor:
                continue
            term = coeffs[n + i] * alpha_pows[t] * factor
            acc = term if acc is None else acc + term
        if acc is not None:
            terms[(K,)] = acc
    return PDSeries.build(coeffs[0].ring, 1, D, terms)


def verify_coefficient_cocycle(coeffs: list[OKMatrix], alpha: OKElem, D: int) -> IdentityReport:
    """Check the cocycle identities for eps = sum_n coeffs[n] X^[n].

    Needs coeffs[0..2D].  Checks, in order: eps(0) = I; for each n <= D,
    (sum_i (-1)^i A_{n+i} (1 - alpha X)^{-n-i} X^[i]) * eps = A_n up to
    degree D; and p_0(eps) * eps(X_1) = eps(X_2) up to degree D - 1.
    """
    if len(coeffs) < 2 * D + 1:
        raise ShapeMismatch(f"need {2 * D + 1} coefficients, got {len(coeffs)}")
    spec = alpha.spec
    ring = coeffs[0].ring
    identity = OKMatrix.identity(spec, coeffs[0].nrows)
    eps = PDSeries.build(ring, 1, D, {(n,): coeffs[n] for n in range(D + 1)})

    if degeneracy(eps) != identity:
        raise CocycleViolation("eps(0) is not the identity", index=0)

    for n in range(D + 1):
        lhs = pd_mul(_cocycle_left_factor(coeffs, n, alpha, D), eps)
        rhs = PDSeries.constant(coeffs[n], 1, D)
        bad = lhs.first_difference(rhs, D)
        if bad is not None:
            raise CocycleViolation(
                f"coefficient identity for A_{n} fails at X^[{bad[0]}]", index=n, degree=bad[0]
            )

    verify_face_cocycle(eps, alpha, D)
    return IdentityReport("cocycle", margin=D - 1, details={"coefficient_identities": D + 1})


def verify_face_cocycle(eps: PDSeries, alpha: OKElem, D: int) -> IdentityReport:
    """p_0(eps) * eps(X_1) = eps(X_2) up to degree D - 1, and what it forces on eps(0).

    At the origin the face identity reads eps(0)^2 = eps(0); a stratification
    is invertible, so eps(0) = I follows.  The consequence is still checked.
    """
    p0 = face_map(eps, 0, alpha)
    lhs = pd_mul(p0, face_map(eps, 2, alpha))
    rhs = face_map(eps, 1, alpha)
    bad = lhs.first_difference(rhs, D - 1)
    if bad is not None:
        raise CocycleViolation(f"p0(eps) * eps(X1) != eps(X2) at index {list(bad)}", index=bad)

    e0 = degeneracy(eps)
    if any(smith_normal_form(e0).elementary_divisor_valuations):
        raise NotAStratification("eps(0) is not invertible", index=0)
    if e0 != OKMatrix.identity(alpha.spec, e0.nrows):
        raise CocycleViolation("the face identity holds but eps(0) is not the identity", index=0)
    return IdentityReport("face_cocycle", margin=D - 1, details={"degeneracy": "implied"})


def exp_stratification(c: Crystal, D: int) -> PDSeries:
    """exp(A X) = sum_n A^n X^[n], the stratification once alpha is sent to 0.

    It pairs with the untwisted faces p_0(X_i) = X_{i+1} - X_1.
    """
    c = c.lattice()
    return matrix_binomial_power(c.matrix, c.spec.zero(), degree_cap=D)


def verify_alpha_zero_limit(c: Crystal, D: int) -> IdentityReport:
    """exp(A X) satisfies the cocycle condition for the alpha = 0 face maps."""
    eps = exp_stratification(c, D)
    report = verify_face_cocycle(eps, c.spec.zero(), D)
    return IdentityReport("alpha_zero_limit", margin=report.margin, details=report.details)


def verify_cocycle(c: Crystal, D: int) -> IdentityReport:
    require_admissible(c)
    return verify_coefficient_cocycle(strat_coeffs(c, 2 * D), c.alpha, D)


def perturb_coefficients(coeffs: list[OKMatrix], n: int, delta: OKMatrix | None = None) -> list[OKMatrix]:
    """Copy of coeffs with delta (default: the identity) added at position n."""
    out = list(coeffs)
    if delta is None:
        delta = OKMatrix.identity(coeffs[n].spec, coeffs[n].nrows)
    out[n] = out[n] + delta
    return out


def pair_from_stratification(eps: PDSeries, alpha: OKElem, n_max: int | None = None) -> Crystal:
    """Read A off the X^[1] coefficient and confirm eps is its stratification."""
    if eps.num_vars != 1:
        raise ShapeMismatch("a stratification is a univariate series")
    spec = alpha.spec
    A = eps[(1,)]
    if not isinstance(A, OKMatrix) or A.nrows != A.ncols:
        raise ShapeMismatch("stratification coefficients must be square matrices")

    verdict = check_nilpotent(A, alpha, n_max=n_max)
    if not isinstance(verdict, CertifiedNilpotent):
        raise NotAdmissible(f"X^[1] coefficient is not admissible: {verdict.describe()}", verdict=verdict)

    expected = OKMatrix.identity(spec, A.nrows)
    for n in range(eps.degree_cap + 1):
        if eps[(n,)] != expected:
            raise NotAStratification(f"coefficient of X^[{n}] breaks the recursion", index=n)
        expected = expected * A.add_scalar(alpha * n)
    return Crystal(spec, A)
