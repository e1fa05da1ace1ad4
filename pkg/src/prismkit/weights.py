"""Weights - Layer 4. Residue-level nilpotency checks tied to Hodge-Tate weights.

Everything reported from here is labeled "conjecture-consistency": the
checks certify finite consequences of statements that are only
conjectured in general.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

from .base_rings import OKElem, OKMatrix, RingSpec
from .crystal import CertifiedNilpotent, Crystal, Inconclusive, NilpotencyVerdict, ResidueObstruction
from .errors import IdentityViolation, ParseError, ShapeMismatch, SpecMismatch, StructureViolation
from .qcalc import AinfLiteElem, QCalcRing, qint
from .report import IdentityReport

logger = logging.getLogger(__name__)

LABEL = "conjecture-consistency"


@dataclass(frozen=True)
class WeightProfile:
    """Hodge-Tate weights r_1 <= ... <= r_d."""

    r: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(x) for x in self.r))
        if not self.r:
            raise SpecMismatch("a weight profile needs at least one weight")
        if self.r[0] < 0:
            raise SpecMismatch("Hodge-Tate weights must be non-negative")
        if any(a > b for a, b in zip(self.r, self.r[1:])):
            raise SpecMismatch(f"weights must be weakly increasing, got {list(self.r)}")

    @property
    def d(self) -> int:
        return len(self.r)

    @classmethod
    def parse(cls, text: str) -> WeightProfile:
        """Parse a comma-separated list such as "0,1,3"."""
        try:
            return cls(tuple(int(t) for t in text.split(",") if t.strip()))
        except ValueError:
            raise ParseError(f"cannot parse weights {text!r}", "--weights", 1)


def weight_product(B: OKMatrix, profile: WeightProfile, alpha: OKElem) -> OKMatrix:
    """X = prod_i (-B + r_i alpha)."""
    if B.nrows != B.ncols or B.nrows != profile.d:
        raise ShapeMismatch(f"need a {profile.d}x{profile.d} matrix, got {B.nrows}x{B.ncols}")
    X = OKMatrix.identity(B.spec, B.nrows)
    for r in profile.r:
        X = X * (-B).add_scalar(alpha * r)
    return X


def weight_nilpotency_check(
    B: OKMatrix,
    profile: WeightProfile,
    alpha: OKElem,
    target: int | None = None,
    budget: int | None = None,
) -> NilpotencyVerdict:
    """Residue test on X = prod_i (-B + r_i alpha), then v(X^m) >= target for some m <= budget."""
    spec = B.spec
    X = weight_product(B, profile, alpha)
    d = profile.d
    if (X**d).valuation() < 1:
        return ResidueObstruction(witness_power=d)
    target = spec.horizon if target is None else target
    budget = d * spec.horizon if budget is None else budget
    power = X
    for m in range(1, budget + 1):
        v = power.valuation()
        if v >= target:
            return CertifiedNilpotent(n_star=m, attained_valuation=v)
        power = power * X
    return Inconclusive(budget=budget)


def poly_residue_product(A: OKMatrix, alpha: OKElem) -> OKMatrix:
    """prod_{i=0}^{p-1} (-A + i alpha)."""
    P = OKMatrix.identity(A.spec, A.nrows)
    for i in range(A.spec.p):
        P = P * (-A).add_scalar(alpha * i)
    return P


def residue_sign_relation(A: OKMatrix, alpha: OKElem) -> bool:
    """prod (-A + i alpha) = (-1)^p prod (A + i alpha) mod pi."""
    p = A.spec.p
    lhs = poly_residue_product(A, alpha)
    rhs = OKMatrix.identity(A.spec, A.nrows)
    for i in range(p):
        rhs = rhs * A.add_scalar(alpha * i)
    if p % 2:
        rhs = -rhs
    return (lhs - rhs).residue_is_zero()


def poly_nilpotency_check(c: Crystal) -> NilpotencyVerdict:
    """Nilpotency of prod_{i<p} (-A + i alpha) over the residue field."""
    c = c.lattice()
    P = poly_residue_product(c.matrix, c.alpha)
    power = P**c.rank
    if power.valuation() < 1:
        logger.debug("residue product is not nilpotent for rank %d crystal", c.rank)
        return ResidueObstruction(witness_power=c.rank)
    return CertifiedNilpotent(n_star=c.rank, attained_valuation=power.valuation())


# -- Unramified example over k[[m]] ----------------------------------------------


def fl_ring(p: int, m_cap: int) -> QCalcRing:
    """F_p[[m]] / (m^{m_cap+1}), as the u-free part of the q-calculus ring at precision 1."""
    return QCalcRing(RingSpec(p, (0, 1), (-p, 1), precision=1), u_cap=0, m_cap=m_cap)


QMatrix = list[list[AinfLiteElem]]


def _qmat_mul(a: QMatrix, b: QMatrix, ring: QCalcRing) -> QMatrix:
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = ring.zero()
            for k in range(n):
                if not a[i][k].is_zero() and not b[k][j].is_zero():
                    acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def _qmat_identity(n: int, ring: QCalcRing) -> QMatrix:
    return [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]


def _is_strictly_upper(M: QMatrix) -> bool:
    return all(M[i][j].is_zero() for i in range(len(M)) for j in range(i + 1))


def qmatrix_from_json(ring: QCalcRing, data: Any) -> QMatrix:
    """Rows of entries, each an int or a low-to-high list of m-coefficients."""
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ShapeMismatch("matrix must be a non-empty list of rows")
    n = len(data)
    if any(len(r) != n for r in data):
        raise ShapeMismatch("matrix must be square")
    rows = []
    for r in data:
        row = []
        for entry in r:
            coeffs = [entry] if isinstance(entry, int) else entry
            if not isinstance(coeffs, list) or not all(isinstance(c, int) for c in coeffs):
                raise ShapeMismatch(f"bad matrix entry {entry!r}")
            row.append(ring.element({(0, j): c for j, c in enumerate(coeffs)}))
        rows.append(row)
    return rows


def qmatrix_to_json(M: QMatrix) -> list:
    return [[[e[(0, j)].coeffs[0] for j in range(e.ring.m_cap + 1)] for e in row] for row in M]


def fl_check(profile: WeightProfile, N_upper: QMatrix, ring: QCalcRing) -> IdentityReport:
    """P = prod_i ([r_i]_q I + T) with T = -L + N is strictly upper and P^d = 0.

    L = diag([r_1]_q, ..., [r_d]_q) reduced mod p.
    """
    p = ring.p
    d = profile.d
    if ring.spec.precision != 1 or ring.spec.e != 1:
        raise SpecMismatch("fl_check works over F_p[[m]] (unramified, precision 1)")
    if profile.r[-1] > p:
        raise SpecMismatch(f"largest weight {profile.r[-1]} exceeds p = {p}")
    if len(N_upper) != d:
        raise ShapeMismatch(f"need a {d}x{d} matrix for {d} weights")
    if not _is_strictly_upper(N_upper):
        raise StructureViolation("N must be strictly upper triangular")

    q = [qint(ring, r) for r in profile.r]
    T = [
        [N_upper[i][j] - (q[i] if i == j else ring.zero()) for j in range(d)]
        for i in range(d)
    ]
    P = _qmat_identity(d, ring)
    for qi in q:
        factor = [[T[i][j] + (qi if i == j else ring.zero()) for j in range(d)] for i in range(d)]
        P = _qmat_mul(P, factor, ring)

    if not _is_strictly_upper(P):
        raise IdentityViolation("prod([r_i]_q I + T) is not strictly upper triangular")
    power = _qmat_identity(d, ring)
    for _ in range(d):
        power = _qmat_mul(power, P, ring)
    if not all(e.is_zero() for row in power for e in row):
        raise IdentityViolation(f"P^{d} is not zero")

    return IdentityReport(
        "fl_check",
        margin=ring.m_cap,
        details={
            "weights": list(profile.r),
            "P_is_zero": all(e.is_zero() for row in P for e in row),
            "label": LABEL,
        },
    )

