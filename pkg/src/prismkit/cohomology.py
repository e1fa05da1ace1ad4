"""Cech-Alexander cohomology - Layer 3.

Level s of the complex is M (x) O_K{X_1, ..., X_s}_pd, stored as a PDSeries
with l x 1 column coefficients.  The differential is

    d^s f = eps(X_1) * p_0(f) + sum_{i=1}^{s+1} (-1)^i p_i(f)

with p_i the cofaces of pd_series.  Every comparison at level s is made up
to total degree margin(s) = D - s - 1.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any

from .base_rings import MatrixRing, OKMatrix, RingSpec, SNFResult, format_valuation, smith_normal_form
from .config import DEFAULT_SNF_GUARD
from .crystal import Crystal, build_stratification, require_admissible
from .errors import (
    ChainMapViolation,
    ComplexViolation,
    DegreeOverflow,
    NotInImage,
    NotInKernel,
    ReconstructionMismatch,
    RelationViolation,
    ShapeMismatch,
    UnsupportedLevel,
)
from .pd_series import (
    Index,
    PDSeries,
    degeneracy,
    derivative,
    embed,
    face_map,
    matrix_binomial_power,
    pd_mul,
)
from .report import IdentityReport

logger = logging.getLogger(__name__)

MAX_PREIMAGE_LEVEL = 4


def indices_of_degree(num_vars: int, degree: int) -> list[Index]:
    """All multi-indices in num_vars variables of total degree `degree`, lex order."""
    if num_vars == 0:
        return [()] if degree == 0 else []
    out = []
    for first in range(degree, -1, -1):
        for rest in indices_of_degree(num_vars - 1, degree - first):
            out.append((first,) + rest)
    return sorted(out)


def indices_up_to(num_vars: int, degree: int) -> list[Index]:
    return [idx for d in range(degree + 1) for idx in indices_of_degree(num_vars, d)]


def in_rigidity_set(J: Index) -> bool:
    """Membership in the index set on which a cocycle is determined.

    J qualifies when, for some i >= 1, either J = (1, 0^{2i-2}, j, ...) with
    j >= 1 in slot 2i, or J = (0^{2i}, j, ...) with j >= 1 in slot 2i+1.
    """
    s = len(J)
    for i in itertools.count(1):
        if 2 * i > s:
            break
        if J[0] == 1 and all(x == 0 for x in J[1 : 2 * i - 1]) and J[2 * i - 1] >= 1:
            return True
        if 2 * i + 1 <= s and all(x == 0 for x in J[: 2 * i]) and J[2 * i] >= 1:
            return True
    return False


@dataclass(frozen=True)
class CechLevel:
    """A cochain at level `level`: a series in `level` variables with column coefficients."""

    level: int
    series: PDSeries

    def __post_init__(self):
        if self.series.num_vars != self.level:
            raise ShapeMismatch(f"level {self.level} needs {self.level} variables, got {self.series.num_vars}")

    def coefficient(self, idx: Index) -> OKMatrix:
        return self.series[idx]

    def to_json(self) -> dict[str, Any]:
        return {"level": self.level, "coefficients": self.series.to_json()}


@dataclass
class CohomologyReport:
    h0_rank: int
    h1_free_rank: int
    h1_torsion: list[int]
    elementary_divisors: list[str]
    margin: int | None = None
    h0_basis: list[list] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "h0_rank": self.h0_rank,
            "h1_free_rank": self.h1_free_rank,
            "h1_torsion": self.h1_torsion,
            "elementary_divisors": self.elementary_divisors,
            "margin": self.margin,
            "h0_basis": self.h0_basis,
        }


# -- F_A -------------------------------------------------------------------


def f_series(c: Crystal, D: int) -> PDSeries:
    """F_A(X) = X + sum_{n >= 1} prod_{i=1}^{n} (A + i*alpha) X^[n+1], up to degree D."""
    require_admissible(c)
    A, alpha = c.matrix, c.alpha
    C = OKMatrix.identity(c.spec, c.rank)
    coeffs = {}
    for n in range(D):
        coeffs[(n + 1,)] = C
        C = C * A.add_scalar(alpha * (n + 1))
    return PDSeries.build(A.ring, 1, D, coeffs)


def verify_f_identities(c: Crystal, D: int) -> IdentityReport:
    """I + A F_A = eps up to degree D, and dF_A/dX = (1 - alpha X)^{-A/alpha - 1} up to D - 1."""
    F = f_series(c, D)
    eps = build_stratification(c, D)
    identity = PDSeries.constant(OKMatrix.identity(c.spec, c.rank), 1, D)
    bad = (identity + F.left_mul(c.matrix)).first_difference(eps, D)
    if bad is not None:
        raise ComplexViolation(f"I + A*F_A differs from eps at X^[{bad[0]}]", index=bad)
    shifted = matrix_binomial_power(c.matrix.add_scalar(c.alpha), c.alpha, degree_cap=D)
    bad = derivative(F).first_difference(shifted, D - 1)
    if bad is not None:
        raise ComplexViolation(f"dF_A/dX differs from the shifted binomial power at X^[{bad[0]}]", index=bad)
    return IdentityReport("f_identities", margin=D - 1, details={"eps_identity_degree": D})


# -- The complex ----------------------------------------------------------


class CechComplex:
    """The Cech-Alexander complex of an admissible crystal (on its lattice), truncated at degree D.

    sign_flip flips the sign of one coface p_i in every differential; it
    exists to exercise the negative controls.
    """

    def __init__(self, crystal: Crystal, degree_cap: int, sign_flip: int | None = None):
        self.crystal = crystal.lattice()
        self.D = degree_cap
        self.sign_flip = sign_flip
        self.eps = build_stratification(self.crystal, degree_cap)
        self._eps_by_vars: dict[int, PDSeries] = {}
        self._f_series: PDSeries | None = None

    @property
    def spec(self) -> RingSpec:
        return self.crystal.spec

    @property
    def rank(self) -> int:
        return self.crystal.rank

    @property
    def vector_ring(self) -> MatrixRing:
        return MatrixRing(self.spec, self.rank, 1)

    @property
    def F(self) -> PDSeries:
        if self._f_series is None:
            self._f_series = f_series(self.crystal, self.D)
        return self._f_series

    def margin(self, level: int) -> int:
        return self.D - level - 1

    # -- Cochains -------------------------------------------------------

    def cochain(self, level: int, coeffs: dict[Index, OKMatrix]) -> CechLevel:
        return CechLevel(level, PDSeries.build(self.vector_ring, level, self.D, coeffs))

    def zero(self, level: int) -> CechLevel:
        return self.cochain(level, {})

    def constant(self, m: OKMatrix) -> CechLevel:
        return self.cochain(0, {(): m})

    def basis_vector(self, k: int) -> OKMatrix:
        return OKMatrix.column(self.spec, [1 if i == k else 0 for i in range(self.rank)])

    def _eps_in(self, num_vars: int) -> PDSeries:
        eps = self._eps_by_vars.get(num_vars)
        if eps is None:
            eps = embed(self.eps, num_vars, [0])
            self._eps_by_vars[num_vars] = eps
        return eps

    # -- Differential ---------------------------------------------------

    def differential(self, f: CechLevel) -> CechLevel:
        s = f.level
        if self.margin(s + 1) < 0:
            raise DegreeOverflow(f"level {s + 1} leaves no verifiable degrees below D = {self.D}")
        alpha = self.crystal.alpha
        series = f.series
        out = pd_mul(self._eps_in(s + 1), face_map(series, 0, alpha))
        for i in range(1, s + 2):
            positive = i % 2 == 0
            if self.sign_flip == i:
                positive = not positive
            term = face_map(series, i, alpha)
            out = out + term if positive else out - term
        return CechLevel(s + 1, out)

    def is_cocycle(self, f: CechLevel, degree: int | None = None) -> Index | None:
        """First index (up to `degree`) where d(f) is nonzero, or None."""
        df = self.differential(f)
        cap = self.margin(f.level) if degree is None else degree
        return df.series.first_difference(PDSeries.zero(df.series.ring, df.level, self.D), cap)


# -- Checks on the complex -------------------------------------------------


def verify_complex(
    cx: CechComplex,
    s_max: int,
    span_degree: int | None = None,
    samples: list[CechLevel] | None = None,
) -> IdentityReport:
    """d^{n+1} d^n = 0 for 0 <= n < s_max.

    Inputs are e_k X^[I] for every basis vector e_k and every I with
    |I| <= span_degree (default: the margin at level n+1), plus `samples`.
    """
    checked = 0
    margins = {}
    for n in range(s_max):
        margin = cx.margin(n + 1)
        if margin < 0:
            raise DegreeOverflow(f"d^{n + 1} d^{n} has no verifiable degrees at D = {cx.D}")
        top = margin if span_degree is None else min(span_degree, margin)
        inputs = [
            cx.cochain(n, {I: cx.basis_vector(k)})
            for I in indices_up_to(n, top)
            for k in range(cx.rank)
        ]
        inputs.extend(f for f in samples or [] if f.level == n)
        for f in inputs:
            ddf = cx.differential(cx.differential(f))
            zero = PDSeries.zero(ddf.series.ring, ddf.level, cx.D)
            bad = ddf.series.first_difference(zero, margin)
            if bad is not None:
                raise ComplexViolation(f"d^{n + 1} d^{n} is nonzero at X^{list(bad)}", index=(n, bad))
            checked += 1
        margins[n] = margin
    logger.info("d o d = 0 on %d inputs up to level %d", checked, s_max)
    return IdentityReport(
        "complex",
        margin=min(margins.values(), default=None),
        details={"inputs": checked, "margins": margins},
    )


def compute_h0_h1(c: Crystal, guard: int = DEFAULT_SNF_GUARD) -> CohomologyReport:
    """H^0 = ker(A), H^1 = coker(A) via Smith normal form over O_K.

    A rational crystal is read on its lattice.  Raises PrecisionExhausted
    when a nonzero pivot lies within `guard` of the precision horizon.
    """
    c = c.lattice()
    snf = smith_normal_form(c.matrix, guard=guard)
    torsion = snf.torsion_valuations
    return CohomologyReport(
        h0_rank=snf.free_rank_kernel,
        h1_free_rank=snf.free_rank_cokernel,
        h1_torsion=torsion,
        elementary_divisors=[format_valuation(d, c.spec) for d in snf.elementary_divisor_valuations],
        h0_basis=[v.to_json() for v in snf.kernel_basis()],
    )


def cross_check_cohomology(cx: CechComplex, snf: SNFResult | None = None) -> IdentityReport:
    """Tie the SNF answer back to the complex.

    Each kernel basis vector v has d^0(v) = 0 up to margin(1).  For each
    elementary divisor pi^d with 0 < d < horizon, the class w = U^{-1} e_k
    satisfies pi^d w = A (V e_k) while U w = e_k is not divisible by pi.
    """
    c = cx.crystal
    snf = snf or smith_normal_form(c.matrix)
    for v in snf.kernel_basis():
        bad = cx.is_cocycle(cx.constant(v), cx.margin(1))
        if bad is not None:
            raise ComplexViolation("SNF kernel vector is not a 0-cocycle", index=bad)
    pi = c.spec.pi()
    torsion_checked = 0
    for k, d in enumerate(snf.elementary_divisor_valuations[: snf.rank]):
        if d == 0:
            continue
        w = snf.U_inv.column_at(k)
        if c.matrix * snf.V.column_at(k) != w * (pi ** d):
            raise ComplexViolation(f"pi^{d} times the torsion class {k} is not a boundary", index=k)
        if (snf.U * w)[k, 0].valuation() != 0:
            raise ComplexViolation(f"torsion class {k} is divisible by pi", index=k)
        torsion_checked += 1
    return IdentityReport(
        "cohomology_cross_check",
        margin=cx.margin(1),
        details={"kernel_vectors": snf.free_rank_kernel, "torsion_classes": torsion_checked},
    )


# -- rho and rho' -----------------------------------------------------------


@dataclass
class ChainMaps:
    """rho: [M -> M] to the complex, rho': the complex to [M -> M], in degrees 0 and 1."""

    complex: CechComplex

    def rho(self, degree: int, m: OKMatrix) -> CechLevel:
        if degree == 0:
            return self.complex.constant(m)
        if degree == 1:
            return CechLevel(1, self.complex.F.right_mul(m))
        raise ShapeMismatch("rho is concentrated in degrees 0 and 1")

    def rho_prime(self, f: CechLevel) -> OKMatrix:
        if f.level == 0:
            return degeneracy(f.series)
        if f.level == 1:
            return degeneracy(derivative(f.series))
        raise ShapeMismatch("rho' is concentrated in degrees 0 and 1")


def rho_and_rho_prime(cx: CechComplex) -> tuple[ChainMaps, IdentityReport]:
    """Build rho, rho' and check rho' rho = id and the chain-map squares on a basis."""
    maps = ChainMaps(cx)
    A = cx.crystal.matrix
    margin = cx.margin(2)
    for k in range(cx.rank):
        m = cx.basis_vector(k)
        for degree in (0, 1):
            if maps.rho_prime(maps.rho(degree, m)) != m:
                raise ChainMapViolation(f"rho' rho != id in degree {degree}", index=(degree, k))
        # rho: d^0 rho_0 = rho_1 A and d^1 rho_1 = 0
        d0 = cx.differential(maps.rho(0, m))
        bad = d0.series.first_difference(maps.rho(1, A * m).series, cx.margin(1))
        if bad is not None:
            raise ChainMapViolation("d^0 rho_0 != rho_1 phi", index=(k, bad))
        bad = cx.is_cocycle(maps.rho(1, m), margin)
        if bad is not None:
            raise ChainMapViolation("d^1 rho_1 != 0", index=(k, bad))
        # rho': rho'_1 d^0 = phi rho'_0
        if maps.rho_prime(d0) != A * m:
            raise ChainMapViolation("rho'_1 d^0 != phi rho'_0", index=k)
    return maps, IdentityReport("rho", margin=margin, details={"basis_vectors": cx.rank})


# -- Cocycles and preimages -------------------------------------------------


def _require_level(f: CechLevel, level: int) -> None:
    if f.level != level:
        raise ShapeMismatch(f"expected a level-{level} cochain, got level {f.level}")


def _require_cocycle(cx: CechComplex, f: CechLevel) -> None:
    bad = cx.is_cocycle(f)
    if bad is not None:
        raise NotInKernel(f"d^{f.level} f is nonzero at X^{list(bad)}", index=bad)


def kernel_membership_d1(cx: CechComplex, f: CechLevel) -> OKMatrix:
    """For a 1-cocycle f, return a_1 in M with f = F_A(X_1) a_1."""
    _require_level(f, 1)
    if not f.coefficient((0,)).is_zero():
        raise NotInKernel("a 1-cocycle has zero constant term", index=(0,))
    _require_cocycle(cx, f)
    a1 = f.coefficient((1,))
    bad = f.series.first_difference(cx.F.right_mul(a1), cx.margin(1))
    if bad is not None:
        raise NotInImage(f"f differs from F_A * a_1 at X^[{bad[0]}]", index=bad)
    return a1


def preimage_s2(cx: CechComplex, f: CechLevel) -> CechLevel:
    """g with d^1 g = f for a 2-cocycle f.

    b_0 = a_{0,0}, b_1 = 0 and b_{n+1} = (A + n alpha) b_n - a_{1,n}, i.e.
    b_n = -sum_{m=1}^{n-1} prod_{i=m+1}^{n-1} (A + i alpha) a_{1,m}.
    """
    _require_level(f, 2)
    _require_cocycle(cx, f)
    A, alpha = cx.crystal.matrix, cx.crystal.alpha
    b = [f.coefficient((0, 0)), OKMatrix.zero(cx.spec, cx.rank, 1)]
    for n in range(1, cx.D):
        b.append(A.add_scalar(alpha * n) * b[n] - f.coefficient((1, n)))
    g = cx.cochain(1, {(n,): bn for n, bn in enumerate(b)})
    _certify_preimage(cx, g, f)
    return g


def _certify_preimage(cx: CechComplex, g: CechLevel, f: CechLevel) -> PDSeries:
    """d(g), after checking it equals f up to margin(f.level)."""
    dg = cx.differential(g).series
    bad = dg.first_difference(f.series, cx.margin(f.level))
    if bad is not None:
        raise ReconstructionMismatch(f"d(g) differs from f at X^{list(bad)}", index=bad)
    return dg


def _leading_zeros(I: Index) -> int:
    k = 0
    while k < len(I) and I[k] == 0:
        k += 1
    return k


def _zero_slot_terms(L: Index, head: int, start: int) -> list[tuple[int, Index]]:
    """((-1)^p, (head,) + L without slot p) for every zero slot p >= start of L.

    For head 0 and 1 these are the contributions of p_2, ..., p_s to the
    coefficient of X_1^[head] X_2^[l_1] ... X_s^[l_{s-1}] in d(g).
    """
    return [((-1) ** p, (head,) + _drop(L, p)) for p in range(start, len(L)) if L[p] == 0]


def _collect(terms) -> dict[Index, int]:
    # deleting different zeros of one run gives the same J
    z: dict[Index, int] = {}
    for sign, J in terms:
        z[J] = z.get(J, 0) + sign
    return {J: v for J, v in z.items() if v}


def assignment_class(I: Index) -> int:
    """Position of b_I in the order preimage_general assigns coefficients.

    0: (0^{2i}, j, ...); 1: (0^{2i-1}, j, ...) and (0, ..., 0);
    2: (1, 0^{2i}, j, ...) and (1, 0, ..., 0); 3: (1, 0^{2i-1}, j, ...);
    4: first entry >= 2.  Here i >= 1 in classes 0 and 1, i >= 0 in class 2,
    and j >= 1.
    """
    if I[0] >= 2:
        return 4
    rest = I[1:] if I[0] == 1 else I
    zeros = _leading_zeros(rest)
    if zeros == len(rest):
        return 1 if I[0] == 0 else 2
    return zeros % 2 + 2 * I[0]


def image_couplings(I: Index) -> dict[Index, int]:
    """The integers z_{I,J} with which same-degree coefficients b_J enter b_I.

    Class 1: b_I = a_{0,I} + sum_J z_{I,J} b_J, J in class 0.
    Class 3: b_I = -a_{1,L} + (A + |L| alpha) b_L - sum_{q >= 2} b_{L+E_q}
    + sum_J z_{I,J} b_J with L = I - E_1, J in class 2.
    Other classes have none.
    """
    cls = assignment_class(I)
    if cls == 1:
        return _collect((-sign, J) for sign, J in _zero_slot_terms(I, 0, _leading_zeros(I)))
    if cls == 3:
        L = (0,) + I[1:]
        return _collect(_zero_slot_terms(L, 1, _leading_zeros(L)))
    return {}


def preimage_general(cx: CechComplex, s: int, f: CechLevel) -> tuple[CechLevel, IdentityReport]:
    """g with d^{s-1} g = f for an s-cocycle f = sum a_I X^[I], 2 <= s <= 4.

    The coefficients b_I of g are assigned class by class (assignment_class),
    lexicographically inside a class:

    0. b_I = 0.
    1. b_I = a_{0,I} + sum_J z_{I,J} b_J (image_couplings); b_0 = a_0.
    2. b_I = 0.
    3. b_I = -a_{1,L} + (A + |L| alpha) b_L - sum_{q >= 2} b_{L+E_q}
       + sum_J z_{I,J} b_J, L = I - E_1.
    4. The X_1^[1] coefficient of d(g) at L = I - E_1, solved for b_I:
       b_I = -a_{1,L} + (A + |L| alpha) b_L - sum_{q >= 2} b_{L+E_q}
       + sum_{p >= 2, l_p = 0} (-1)^p b_{(1, L without l_p)}.

    Classes 1, 3 and 4 make d(g) agree with f on the rigidity indices; that
    agreement is checked explicitly and d(g) = f up to margin(s) is the
    certificate.  At s = 2 this is preimage_s2.
    """
    if not 2 <= s <= MAX_PREIMAGE_LEVEL:
        raise UnsupportedLevel(f"preimage construction supports levels 2..{MAX_PREIMAGE_LEVEL}, got {s}")
    _require_level(f, s)
    _require_cocycle(cx, f)
    A, alpha = cx.crystal.matrix, cx.crystal.alpha
    zero = OKMatrix.zero(cx.spec, cx.rank, 1)
    margin = cx.margin(s)
    a = f.series
    E = [_unit(s - 1, q) for q in range(s - 1)]

    b: dict[Index, OKMatrix] = {}
    for I in sorted(indices_up_to(s - 1, margin), key=lambda I: (assignment_class(I), I)):
        cls = assignment_class(I)
        if cls in (0, 2):
            b[I] = zero
            continue
        if cls == 1:
            value = a[(0,) + I]
            couplings = image_couplings(I)
        else:
            L = (I[0] - 1,) + I[1:]
            value = A.add_scalar(alpha * sum(L)) * b[L] - a[(1,) + L]
            for q in range(1, s - 1):
                value = value - b[_add(L, E[q])]
            couplings = image_couplings(I) if cls == 3 else _collect(_zero_slot_terms(L, 1, 1))
        for J, z in couplings.items():
            value = value + b[J].scale(z)
        b[I] = value
    logger.debug("level-%d preimage: %d coefficients assigned", s, len(b))

    g = cx.cochain(s - 1, b)
    dg = _certify_preimage(cx, g, f)
    rigid = [J for J in indices_up_to(s, margin) if in_rigidity_set(J)]
    for J in rigid:
        if dg[J] != f.series[J]:
            raise ReconstructionMismatch(f"d(g) and f disagree on the rigidity index {list(J)}", index=J)
    return g, IdentityReport("preimage", margin=margin, details={"level": s, "rigidity_indices": len(rigid)})


# -- Kernel relations -------------------------------------------------------


def _drop(L: Index, pos: int) -> Index:
    return L[:pos] + L[pos + 1 :]


def _unit(s: int, i: int) -> Index:
    return tuple(1 if j == i else 0 for j in range(s))


def _add(L: Index, M: Index) -> Index:
    return tuple(a + b for a, b in zip(L, M))


def kernel_rigidity_check(cx: CechComplex, s: int, f: CechLevel) -> IdentityReport:
    """Check the coefficient relations every s-cocycle satisfies.

    s = 2: a_{0,l} = 0 (l >= 1); a_{1,0} = A a_{0,0};
    a_{1+l1,l2} = (A + (l1+l2) alpha) a_{l1,l2} - a_{l1,1+l2} (l1, l2 >= 1);
    a_{1+l,0} = (A + l alpha) a_{l,0} - a_{1,l} - a_{l,1} (l >= 1).
    s >= 3: a_{0^{2i-1}, j_{2i}, ..., j_s} = 0 when j_{2i}, ..., j_s >= 1;
    a_{L+E_1} = (A + |L| alpha) a_L - sum_{j >= 2} a_{L+E_j} for L >= 1;
    and the full X_1^[1] coefficient relation for every L.
    """
    if s < 2:
        raise UnsupportedLevel("kernel relations are stated for levels >= 2")
    _require_level(f, s)
    A, alpha = cx.crystal.matrix, cx.crystal.alpha
    a = f.series
    margin = cx.margin(s)
    checked = 0

    def expect(name: str, idx: Index, lhs: OKMatrix, rhs: OKMatrix) -> None:
        nonlocal checked
        if lhs != rhs:
            raise RelationViolation(f"relation {name} fails at {list(idx)}", index=idx, relation=name)
        checked += 1

    zero = OKMatrix.zero(cx.spec, cx.rank, 1)
    if s == 2:
        for l in range(1, margin + 1):
            expect("constant_vanishes", (0, l), a[(0, l)], zero)
        expect("x1_constant", (1, 0), a[(1, 0)], A * a[(0, 0)])
        for l1 in range(1, margin):
            for l2 in range(1, margin - l1):
                rhs = A.add_scalar(alpha * (l1 + l2)) * a[(l1, l2)] - a[(l1, l2 + 1)]
                expect("x1_recursion", (l1 + 1, l2), a[(l1 + 1, l2)], rhs)
        for l in range(1, margin):
            rhs = A.add_scalar(alpha * l) * a[(l, 0)] - a[(1, l)] - a[(l, 1)]
            expect("x1_edge", (l + 1, 0), a[(l + 1, 0)], rhs)
    else:
        for i in range(1, (s + 1) // 2 + 1):
            lead = 2 * i - 1
            if lead >= s:
                break
            for L in indices_up_to(s, margin):
                if all(x == 0 for x in L[:lead]) and all(x >= 1 for x in L[lead:]):
                    expect("kernel_constant", L, a[L], zero)
        E = [_unit(s, j) for j in range(s)]
        for L in indices_up_to(s, margin - 1):
            step = A.add_scalar(alpha * sum(L)) * a[L] - sum((a[_add(L, E[j])] for j in range(1, s)), zero)
            if all(x >= 1 for x in L):
                expect("x1_recursion", _add(L, E[0]), a[_add(L, E[0])], step)
            # full X_1^[1] coefficient: (A + |L| alpha) a_L - sum_i a_{L+E_i} = sum_k (-1)^{k-1} [l_{k-1} = 0] a_{1, L - slot}
            rhs = zero
            for pos in range(s):
                if L[pos] == 0:
                    term = a[(1,) + _drop(L, pos)]
                    rhs = rhs + term if pos % 2 == 1 else rhs - term
            expect("x1_coefficient", L, step - a[_add(L, E[0])], rhs)
    return IdentityReport("kernel_relations", margin=margin, details={"level": s, "relations": checked})
