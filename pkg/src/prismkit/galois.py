"""Galois side - Layer 4. A formal cyclotomic model of the associated representation.

Elements live in O_K[zeta]/(Phi_p) with an adjoined formal unit lambda.  The
group generated by tau and gamma acts by

    tau(lambda)   = lambda (1 - lambda (1 - zeta) pi alpha)^{-1}
    gamma(lambda) = lambda chi(gamma) (zeta - 1) / (zeta^chi - 1)

and a crystal A gives the cocycle U(g) = sum_n A_n (c(g) pi lambda (1 - zeta))^n / n!.
lambda's numeric value is never computed; every check below only uses the
transformation law.
"""

from __future__ import annotations

import logging
import re
import threading
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import factorial, gcd, lcm
from typing import Any, Iterator

from .base_rings import OKElem, OKMatrix, RingSpec, smith_normal_form, vp_int
from .crystal import Crystal, require_admissible, strat_coeffs
from .errors import (
    CocycleIdentityViolation,
    DerivativePrecisionLoss,
    IdentityViolation,
    InvariantsMismatch,
    ParseError,
    ShapeMismatch,
    SpecMismatch,
)
from .pd_series import PDSeries, pd_mul
from .report import IdentityReport

logger = logging.getLogger(__name__)


# -- Ring specification ----------------------------------------------------


def _multiplicative_order(y: int, p: int) -> int:
    y %= p
    order, acc = 1, y
    while acc != 1:
        acc = (acc * y) % p
        order += 1
    return order


def cyclotomic_degree(spec: RingSpec) -> int:
    """[K(zeta_p) : K], read off the class of -p in K^x / (K^x)^{p-1}.

    From E(pi) = 0 one gets -p = pi^e * w^{-1} * (1-unit) with w = E(0)/p, and
    k^x / (k^x)^{p-1} is detected by y -> y^{(q-1)/(p-1)}, which on F_p^x is y^f.
    """
    p = spec.p
    w = (spec.eisenstein[0] // p) % p
    ramified_part = (p - 1) // gcd(spec.e, p - 1)
    residue_part = _multiplicative_order(pow(w, spec.f, p), p)
    return lcm(ramified_part, residue_part)


@dataclass(frozen=True)
class CycRingSpec:
    """O_K[zeta_p] with a formal lambda truncated at |n| <= lambda_degree_cap."""

    base: RingSpec
    lambda_degree_cap: int | None = None
    chi_gamma: int | None = None

    def __post_init__(self):
        p = self.base.p
        if p == 2 and not self.base.assume_linear_disjoint:
            raise SpecMismatch("p = 2 needs assume_linear_disjoint")
        if cyclotomic_degree(self.base) != p - 1:
            raise SpecMismatch(
                f"the {p}-th cyclotomic polynomial is reducible over K; zeta_p cannot be adjoined"
            )
        if self.lambda_degree_cap is None:
            object.__setattr__(self, "lambda_degree_cap", self.base.e * self.base.precision)
        if self.lambda_degree_cap < 1:
            raise SpecMismatch("lambda_degree_cap must be positive")
        chi = 1 + p if self.chi_gamma is None else self.chi_gamma
        if chi % p == 0:
            raise SpecMismatch(f"chi(gamma) = {chi} is not a p-adic unit")
        object.__setattr__(self, "chi_gamma", chi % self.base.modulus)

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def degree(self) -> int:
        return self.base.p - 1

    def element(self, coords: list[OKElem | int]) -> CycElem:
        if len(coords) > self.degree:
            raise ShapeMismatch(f"O_K[zeta] elements have {self.degree} coordinates")
        full = [c if isinstance(c, OKElem) else self.base.from_int(c) for c in coords]
        full += [self.base.zero()] * (self.degree - len(full))
        return CycElem(self, tuple(full))

    def embed(self, c: OKElem | int) -> CycElem:
        return self.element([c])

    def zero(self) -> CycElem:
        return self.element([])

    def one(self) -> CycElem:
        return self.embed(1)

    def zeta_power(self, k: int) -> CycElem:
        """zeta^k, reduced with zeta^{p-1} = -(1 + ... + zeta^{p-2})."""
        return _fold(self, {k % self.p: self.base.one()})

    @cached_property
    def one_minus_zeta(self) -> CycElem:
        return self.one() - self.zeta_power(1)

    def lam(self, n: int = 1) -> CycLambdaElem:
        return CycLambdaElem.monomial(self.one(), n, self)


def _fold(cspec: CycRingSpec, coeffs: dict[int, OKElem]) -> CycElem:
    # coefficients on 1, zeta, ..., zeta^{p-1}; the top one folds into the rest
    p = cspec.p
    base = cspec.base
    out = [base.zero()] * p
    for k, c in coeffs.items():
        out[k % p] = out[k % p] + c
    top = out[p - 1]
    return CycElem(cspec, tuple(out[k] - top for k in range(p - 1)))


@dataclass(frozen=True)
class CycElem:
    """sum_k coords[k] zeta^k, k < p - 1."""

    cspec: CycRingSpec
    coords: tuple[OKElem, ...]

    def _coerce(self, other: Any) -> CycElem | None:
        if isinstance(other, CycElem):
            if other.cspec != self.cspec:
                raise SpecMismatch("cannot combine elements of different cyclotomic rings")
            return other
        if isinstance(other, (OKElem, int)) and not isinstance(other, bool):
            return self.cspec.embed(other)
        return None

    def __add__(self, other: Any) -> CycElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycElem(self.cspec, tuple(a + b for a, b in zip(self.coords, o.coords)))

    __radd__ = __add__

    def __sub__(self, other: Any) -> CycElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycElem(self.cspec, tuple(a - b for a, b in zip(self.coords, o.coords)))

    def __rsub__(self, other: Any) -> CycElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self) -> CycElem:
        return CycElem(self.cspec, tuple(-a for a in self.coords))

    def __mul__(self, other: Any) -> CycElem:
        if isinstance(other, int) and not isinstance(other, bool):
            return CycElem(self.cspec, tuple(a * other for a in self.coords))
        if isinstance(other, OKElem):
            return CycElem(self.cspec, tuple(a * other for a in self.coords))
        if not isinstance(other, CycElem):
            return NotImplemented
        o = self._coerce(other)
        prod: dict[int, OKElem] = {}
        for i, a in enumerate(self.coords):
            if a.is_zero():
                continue
            for j, b in enumerate(o.coords):
                if b.is_zero():
                    continue
                k = i + j
                prod[k] = prod[k] + a * b if k in prod else a * b
        return _fold(self.cspec, prod)

    def __rmul__(self, other: Any) -> CycElem:
        if isinstance(other, (OKElem, int)) and not isinstance(other, bool):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> CycElem:
        if n < 0:
            raise ValueError("negative powers are not defined in O_K[zeta]")
        result = self.cspec.one()
        for _ in range(n):
            result = result * self
        return result

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def valuation(self) -> int:
        """min over the coordinates; a lower bound for the true valuation."""
        return min(c.valuation() for c in self.coords)

    def sigma(self, k: int) -> CycElem:
        """The automorphism zeta -> zeta^k."""
        if k % self.cspec.p == 0:
            raise SpecMismatch("zeta -> zeta^k needs k prime to p")
        return _fold(self.cspec, {(j * k) % self.cspec.p: c for j, c in enumerate(self.coords)})

    def to_json(self) -> list:
        return [c.to_json() for c in self.coords]

    def __repr__(self) -> str:
        terms = [f"{c!r}*z^{k}" for k, c in enumerate(self.coords) if not c.is_zero()]
        return " + ".join(terms) or "0"


def _inverse_mod_p(k: int, p: int) -> int:
    return pow(k % p, -1, p)


def unit_ratio(cspec: CycRingSpec, k: int) -> CycElem:
    """R_k = (1 - zeta)/(1 - zeta^k) = sum_{t < k'} zeta^{k t}, k k' = 1 mod p."""
    kp = _inverse_mod_p(k, cspec.p)
    return _fold(cspec, {(k * t) % cspec.p: cspec.base.one() for t in range(kp)})


def unit_ratio_inverse(cspec: CycRingSpec, k: int) -> CycElem:
    """(1 - zeta^k)/(1 - zeta) = 1 + zeta + ... + zeta^{k-1}, k reduced mod p."""
    r = k % cspec.p
    return _fold(cspec, {t: cspec.base.one() for t in range(r)})


@lru_cache(maxsize=1024)
def zeta_quotient(cspec: CycRingSpec, k: int, n: int) -> CycElem:
    """(1 - zeta)^k / n! exactly, for k >= (p - 1) v_p(n!).

    Uses (1 - zeta)^{p-1} = p * eta with eta = prod_{j=1}^{p-1} R_j.
    """
    p = cspec.p
    v = vp_int(factorial(n), p)
    if k < (p - 1) * v:
        raise ValueError(f"(1 - zeta)^{k} / {n}! is not integral")
    eta = cspec.one()
    for j in range(1, p):
        eta = eta * unit_ratio(cspec, j)
    rest = factorial(n) // p**v
    unit_inv = cspec.base.from_int(pow(rest, -1, cspec.base.modulus))
    return (cspec.one_minus_zeta ** (k - (p - 1) * v)) * (eta**v) * unit_inv


# -- lambda series ---------------------------------------------------------


@dataclass(frozen=True)
class LambdaRing:
    """Coefficient-ring descriptor so PDSeries can carry lambda series."""

    cspec: CycRingSpec

    @property
    def spec(self) -> RingSpec:
        return self.cspec.base

    def zero(self) -> CycLambdaElem:
        return CycLambdaElem(self.cspec, {})

    def one(self) -> CycLambdaElem:
        return CycLambdaElem.monomial(self.cspec.one(), 0, self.cspec)


@dataclass(frozen=True, eq=False)
class CycLambdaElem:
    """sum_n terms[n] lambda^n, |n| <= lambda_degree_cap."""

    cspec: CycRingSpec
    terms: dict[int, CycElem] = field(default_factory=dict)

    @classmethod
    def build(cls, cspec: CycRingSpec, terms: dict[int, CycElem]) -> CycLambdaElem:
        cap = cspec.lambda_degree_cap
        return cls(cspec, {n: c for n, c in terms.items() if abs(n) <= cap and not c.is_zero()})

    @classmethod
    def monomial(cls, c: CycElem | OKElem | int, n: int, cspec: CycRingSpec) -> CycLambdaElem:
        if not isinstance(c, CycElem):
            c = cspec.embed(c)
        return cls.build(cspec, {n: c})

    @property
    def ring(self) -> LambdaRing:
        return LambdaRing(self.cspec)

    def __getitem__(self, n: int) -> CycElem:
        return self.terms.get(n, self.cspec.zero())

    def items(self) -> Iterator[tuple[int, CycElem]]:
        return iter(sorted(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def min_degree(self) -> int | None:
        return min(self.terms, default=None)

    def _lift(self, other: Any) -> CycLambdaElem | None:
        if isinstance(other, CycLambdaElem):
            if other.cspec != self.cspec:
                raise SpecMismatch("cannot combine lambda series over different rings")
            return other
        if isinstance(other, (CycElem, OKElem, int)) and not isinstance(other, bool):
            return CycLambdaElem.monomial(other, 0, self.cspec)
        return None

    def __add__(self, other: Any) -> CycLambdaElem:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for n, c in o.terms.items():
            out[n] = out[n] + c if n in out else c
        return CycLambdaElem.build(self.cspec, out)

    __radd__ = __add__

    def __neg__(self) -> CycLambdaElem:
        return CycLambdaElem(self.cspec, {n: -c for n, c in self.terms.items()})

    def __sub__(self, other: Any) -> CycLambdaElem:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Any) -> CycLambdaElem:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other: Any) -> CycLambdaElem:
        if isinstance(other, (CycElem, OKElem, int)) and not isinstance(other, bool):
            return CycLambdaElem.build(self.cspec, {n: c * other for n, c in self.terms.items()})
        if not isinstance(other, CycLambdaElem):
            return NotImplemented
        o = self._lift(other)
        cap = self.cspec.lambda_degree_cap
        out: dict[int, CycElem] = {}
        for n, a in self.terms.items():
            for m, b in o.terms.items():
                k = n + m
                if abs(k) > cap:
                    continue
                out[k] = out[k] + a * b if k in out else a * b
        return CycLambdaElem.build(self.cspec, out)

    def __rmul__(self, other: Any) -> CycLambdaElem:
        if isinstance(other, (CycElem, OKElem, int)) and not isinstance(other, bool):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> CycLambdaElem:
        result = LambdaRing(self.cspec).one()
        for _ in range(n):
            result = result * self
        return result

    def first_difference(self, other: CycLambdaElem, degree: int) -> int | None:
        """Lowest lambda exponent <= degree where the two series differ."""
        for n in sorted(set(self.terms) | set(other.terms)):
            if n > degree:
                return None
            if self[n] != other[n]:
                return n
        return None

    def agrees_up_to(self, other: CycLambdaElem, degree: int) -> bool:
        return self.first_difference(other, degree) is None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CycLambdaElem):
            return NotImplemented
        return self.cspec == other.cspec and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> list[dict]:
        return [{"lambda": n, "coeff": c.to_json()} for n, c in self.items()]

    def __repr__(self) -> str:
        return " + ".join(f"({c!r})L^{n}" for n, c in self.items()) or "0"


def geometric_series(c: CycLambdaElem) -> CycLambdaElem:
    """(1 - c)^{-1} for c with positive lambda-valuation."""
    low = c.min_degree()
    if low is not None and low < 1:
        raise ValueError("geometric series needs a positive lambda-valuation")
    one = LambdaRing(c.cspec).one()
    out, power = one, one
    for _ in range(c.cspec.lambda_degree_cap):
        power = power * c
        if power.is_zero():
            break
        out = out + power
    return out


# -- Group elements ----------------------------------------------------------


_GROUP_RE = re.compile(
    r"^\s*(?:(?P<tau>tau(?:\^(?P<a>-?\d+))?)?\s*\*?\s*(?P<gamma>gamma(?:\^(?P<b>-?\d+))?)?)\s*$"
)


@dataclass(frozen=True)
class GroupElem:
    """g = tau^a gamma^b."""

    a: int = 0
    b: int = 0

    @classmethod
    def parse(cls, text: str) -> GroupElem:
        """Parse tau^<int>(*gamma^<int>)?; bare tau, gamma and 1 are accepted too."""
        if text.strip() in ("1", "id", "e"):
            return cls()
        m = _GROUP_RE.match(text)
        if not m or not (m.group("tau") or m.group("gamma")):
            raise ParseError(f"cannot parse group element {text!r}", "--g", 1)
        a = (int(m.group("a")) if m.group("a") else 1) if m.group("tau") else 0
        b = (int(m.group("b")) if m.group("b") else 1) if m.group("gamma") else 0
        return cls(a, b)

    def chi(self, cspec: CycRingSpec) -> int:
        return pow(cspec.chi_gamma, self.b, cspec.base.modulus)

    def compose(self, other: GroupElem, cspec: CycRingSpec) -> GroupElem:
        """self * other, using gamma tau gamma^{-1} = tau^chi(gamma)."""
        m = cspec.base.modulus
        return GroupElem((self.a + self.chi(cspec) * other.a) % m, self.b + other.b)

    def c_value(self, cspec: CycRingSpec) -> int:
        return self.a % cspec.base.modulus

    def __str__(self) -> str:
        parts = []
        if self.a:
            parts.append(f"tau^{self.a}")
        if self.b:
            parts.append(f"gamma^{self.b}")
        return "*".join(parts) or "1"


TAU = GroupElem(1, 0)
GAMMA = GroupElem(0, 1)
IDENTITY = GroupElem(0, 0)


def sample_elements(cspec: CycRingSpec) -> list[GroupElem]:
    """{1, tau, tau^2, gamma, tau gamma, gamma tau}; gamma tau is stored as tau^chi gamma."""
    return [IDENTITY, TAU, GroupElem(2, 0), GAMMA, GroupElem(1, 1), GAMMA.compose(TAU, cspec)]


# -- The action ------------------------------------------------------------


def _kappa(cspec: CycRingSpec) -> CycElem:
    # (1 - zeta) pi alpha
    base = cspec.base
    return cspec.one_minus_zeta * (base.pi() * base.alpha)


def image_of_lambda(g: GroupElem, cspec: CycRingSpec) -> CycLambdaElem:
    """g(lambda) = chi(g) R_chi(g) lambda (1 - c(g) kappa lambda)^{-1}."""
    chi = g.chi(cspec)
    scale = unit_ratio(cspec, chi) * chi
    kappa_lam = CycLambdaElem.monomial(_kappa(cspec) * g.c_value(cspec), 1, cspec)
    return CycLambdaElem.monomial(scale, 1, cspec) * geometric_series(kappa_lam)


def image_of_lambda_inverse(g: GroupElem, cspec: CycRingSpec) -> CycLambdaElem:
    """g(lambda)^{-1} = chi^{-1} S_chi lambda^{-1} (1 - c(g) kappa lambda)."""
    chi = g.chi(cspec)
    chi_inv = pow(chi, -1, cspec.base.modulus)
    scale = unit_ratio_inverse(cspec, chi) * chi_inv
    c_kappa = _kappa(cspec) * g.c_value(cspec)
    return CycLambdaElem.build(cspec, {-1: scale, 0: -(scale * c_kappa)})


class _ActionCache:
    """Powers of g(lambda) and g(lambda)^{-1}, built on demand and shared across threads."""

    def __init__(self, g: GroupElem, cspec: CycRingSpec):
        self.g = g
        self.cspec = cspec
        self._lock = threading.Lock()
        one = LambdaRing(cspec).one()
        self.pos = [one]
        self.neg = [one]
        self._lam = image_of_lambda(g, cspec)
        self._lam_inv = image_of_lambda_inverse(g, cspec)
        self.sigma_k = g.chi(cspec) % cspec.p

    def power(self, n: int) -> CycLambdaElem:
        table, step = (self.pos, self._lam) if n >= 0 else (self.neg, self._lam_inv)
        with self._lock:
            while len(table) <= abs(n):
                table.append(table[-1] * step)
            return table[abs(n)]

    def act(self, x: CycLambdaElem) -> CycLambdaElem:
        out = LambdaRing(self.cspec).zero()
        for n, c in x.items():
            out = out + self.power(n) * c.sigma(self.sigma_k)
        return out


@lru_cache(maxsize=256)
def _action_table(g: GroupElem, cspec: CycRingSpec) -> _ActionCache:
    return _ActionCache(g, cspec)


def galois_act(g: GroupElem, x: CycLambdaElem) -> CycLambdaElem:
    """g(x): tau fixes O_K[zeta], gamma acts on zeta through chi mod p, both move lambda."""
    if g == IDENTITY:
        return x
    return _action_table(g, x.cspec).act(x)


def verify_action_law(g: GroupElem, h: GroupElem, x: CycLambdaElem) -> IdentityReport:
    """(gh)(x) = g(h(x)) up to lambda-degree lambda_degree_cap - 1."""
    cspec = x.cspec
    margin = cspec.lambda_degree_cap - 1
    n = galois_act(g.compose(h, cspec), x).first_difference(galois_act(g, galois_act(h, x)), margin)
    if n is not None:
        raise IdentityViolation(f"({g}*{h})(x) != {g}({h}(x)) at lambda^{n}", index=n)
    return IdentityReport("action_law", margin=margin, details={"g": str(g), "h": str(h)})


# -- Matrices over the lambda ring -----------------------------------------


@dataclass(frozen=True, eq=False)
class LambdaMatrix:
    cspec: CycRingSpec
    rows: tuple[tuple[CycLambdaElem, ...], ...]

    @classmethod
    def identity(cls, cspec: CycRingSpec, n: int) -> LambdaMatrix:
        ring = LambdaRing(cspec)
        return cls(cspec, tuple(tuple(ring.one() if i == j else ring.zero() for j in range(n)) for i in range(n)))

    @classmethod
    def from_ok(cls, cspec: CycRingSpec, M: OKMatrix) -> LambdaMatrix:
        return cls(
            cspec,
            tuple(tuple(CycLambdaElem.monomial(M[i, j], 0, cspec) for j in range(M.ncols)) for i in range(M.nrows)),
        )

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def __getitem__(self, ij: tuple[int, int]) -> CycLambdaElem:
        i, j = ij
        return self.rows[i][j]

    def __add__(self, other: LambdaMatrix) -> LambdaMatrix:
        return LambdaMatrix(self.cspec, tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: LambdaMatrix) -> LambdaMatrix:
        return LambdaMatrix(self.cspec, tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __mul__(self, other: LambdaMatrix) -> LambdaMatrix:
        if self.ncols != other.nrows:
            raise ShapeMismatch(f"cannot multiply {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}")
        zero = LambdaRing(self.cspec).zero()
        rows = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                acc = zero
                for k in range(self.ncols):
                    if self.rows[i][k].is_zero() or other.rows[k][j].is_zero():
                        continue
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            rows.append(tuple(row))
        return LambdaMatrix(self.cspec, tuple(rows))

    def act(self, g: GroupElem) -> LambdaMatrix:
        if g == IDENTITY:
            return self
        cache = _action_table(g, self.cspec)
        return LambdaMatrix(self.cspec, tuple(tuple(cache.act(x) for x in r) for r in self.rows))

    def first_difference(self, other: LambdaMatrix, degree: int) -> tuple[int, int, int] | None:
        """(i, j, n) of the lowest lambda exponent <= degree where an entry differs."""
        worst = None
        for i, (r, s) in enumerate(zip(self.rows, other.rows)):
            for j, (a, b) in enumerate(zip(r, s)):
                n = a.first_difference(b, degree)
                if n is not None and (worst is None or n < worst[2]):
                    worst = (i, j, n)
        return worst

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaMatrix):
            return NotImplemented
        return self.rows == other.rows

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> list:
        return [[x.to_json() for x in r] for r in self.rows]


# -- Cocycle -----------------------------------------------------------------


@lru_cache(maxsize=512)
def cocycle_U(c: Crystal, g: GroupElem, cspec: CycRingSpec) -> LambdaMatrix:
    """U(g) = sum_n A_n (c(g) pi)^n ((1 - zeta)^n / n!) lambda^n, n <= lambda_degree_cap."""
    if cspec.base != c.spec:
        raise SpecMismatch("cyclotomic ring is built over a different base ring")
    require_admissible(c)
    D = cspec.lambda_degree_cap
    coeffs = strat_coeffs(c, D)
    cpi = c.spec.pi() * g.c_value(cspec)
    ring = LambdaRing(cspec)
    entries = [[ring.zero() for _ in range(c.rank)] for _ in range(c.rank)]
    scalar = c.spec.one()
    for n in range(D + 1):
        if n:
            scalar = scalar * cpi
        if scalar.is_zero():
            break
        zq = zeta_quotient(cspec, n, n)
        An = coeffs[n]
        for i in range(c.rank):
            for j in range(c.rank):
                a = An[i, j] * scalar
                if a.is_zero():
                    continue
                entries[i][j] = entries[i][j] + CycLambdaElem.monomial(zq * a, n, cspec)
    return LambdaMatrix(cspec, tuple(tuple(r) for r in entries))


def verify_cocycle_identity(c: Crystal, g: GroupElem, h: GroupElem, cspec: CycRingSpec) -> IdentityReport:
    """U(gh) = U(g) g(U(h)) up to lambda-degree lambda_degree_cap - 1."""
    margin = cspec.lambda_degree_cap - 1
    lhs = cocycle_U(c, g.compose(h, cspec), cspec)
    rhs = cocycle_U(c, g, cspec) * cocycle_U(c, h, cspec).act(g)
    bad = lhs.first_difference(rhs, margin)
    if bad is not None:
        i, j, n = bad
        raise CocycleIdentityViolation(
            f"U({g}*{h}) != U({g}) {g}(U({h})) at entry ({i},{j}), lambda^{n}", index=n, entry=[i, j]
        )
    logger.debug("cocycle identity holds for (%s, %s) up to lambda^%d", g, h, margin)
    return IdentityReport("cocycle_identity", margin=margin, details={"g": str(g), "h": str(h)})


# -- Sen operator and comparisons --------------------------------------------


@dataclass(frozen=True)
class SenOperator:
    """Theta = pi^{-denominator_exp} * numerator."""

    numerator: OKMatrix
    denominator_exp: int
    label: str = "conjecture-consistency"

    def to_dict(self) -> dict[str, Any]:
        return {
            "numerator": self.numerator.to_json(),
            "denominator_exp": self.denominator_exp,
            "label": self.label,
        }


def sen_operator(c: Crystal) -> SenOperator:
    """Theta = -phi_M / E'(pi), with the common pi-power cancelled."""
    spec = c.spec
    alpha = spec.alpha
    v = alpha.valuation()
    if v >= spec.horizon:
        raise DerivativePrecisionLoss(f"v(E'(pi)) >= {spec.horizon}; the Sen operator is not defined at this precision")
    unit = alpha.divide_by_pi_power(v)
    numerator = -(c.matrix * unit.inverse())
    denominator = v + c.denominator_exp
    if numerator.is_zero():
        return SenOperator(OKMatrix.zero(spec, c.rank, c.rank), 0)
    k = min(numerator.valuation(), denominator)
    if k:
        numerator = OKMatrix.from_rows(
            spec, [[numerator[i, j].divide_by_pi_power(k) for j in range(c.rank)] for i in range(c.rank)]
        )
    return SenOperator(numerator, denominator - k)


def _k_rank(M: OKMatrix) -> int:
    return smith_normal_form(M).rank


def etale_comparison_dims(c: Crystal) -> IdentityReport:
    """dim_K ker/coker of phi_M against those of Theta; they must coincide."""
    n = c.rank
    r_phi = _k_rank(c.matrix)
    r_theta = _k_rank(sen_operator(c).numerator)
    phi_dims = (n - r_phi, n - r_phi)
    theta_dims = (n - r_theta, n - r_theta)
    return IdentityReport(
        "etale_comparison",
        details={
            "phi": list(phi_dims),
            "theta": list(theta_dims),
            "consistent": phi_dims == theta_dims,
            "label": "conjecture-consistency",
        },
    )


def _apply(U: LambdaMatrix, v: OKMatrix) -> LambdaMatrix:
    return U * LambdaMatrix.from_ok(U.cspec, v)


def h0_equals_invariants(c: Crystal, cspec: CycRingSpec, samples: list[OKMatrix] | None = None) -> IdentityReport:
    """ker(A) is fixed by tau and gamma; vectors outside ker(A) tensor K move under tau."""
    require_admissible(c)
    spec = c.spec
    snf = smith_normal_form(c.matrix)
    margin = cspec.lambda_degree_cap
    U_tau = cocycle_U(c, TAU, cspec)
    U_gamma = cocycle_U(c, GAMMA, cspec)

    kernel = snf.kernel_basis()
    for k, v in enumerate(kernel):
        fixed = LambdaMatrix.from_ok(cspec, v)
        for name, U in (("tau", U_tau), ("gamma", U_gamma)):
            if _apply(U, v).first_difference(fixed, margin) is not None:
                raise InvariantsMismatch(f"kernel vector {k} is not fixed by {name}", index=k)

    witnesses = [
        snf.V.column_at(k)
        for k, d in enumerate(snf.elementary_divisor_valuations[: snf.rank])
        if d + 1 < spec.horizon
    ]
    for v in samples or []:
        # only vectors whose lambda^1 term survives at this precision are witnesses
        if (c.matrix * v).valuation() + 1 < spec.horizon:
            witnesses.append(v)
    for k, v in enumerate(witnesses):
        if _apply(U_tau, v).first_difference(LambdaMatrix.from_ok(cspec, v), margin) is None:
            raise InvariantsMismatch(f"vector {k} outside ker(A) is fixed by tau", index=k)

    return IdentityReport(
        "h0_invariants",
        margin=margin,
        details={"invariant_dimension": len(kernel), "non_invariant_witnesses": len(witnesses)},
    )


# -- The tau-connection on the pd-ring -------------------------------------------


def _lambda_pd(cspec: CycRingSpec, degree_cap: int, coeffs: dict[int, CycLambdaElem]) -> PDSeries:
    return PDSeries.build(LambdaRing(cspec), 1, degree_cap, {(n,): c for n, c in coeffs.items()})


def nabla_of_x(cspec: CycRingSpec, degree_cap: int) -> PDSeries:
    """nabla(X) = G - G alpha X, G = lambda (1 + (zeta - 1) pi alpha lambda)^{-1}."""
    kappa = _kappa(cspec)  # (zeta - 1) pi alpha = -kappa
    G = CycLambdaElem.monomial(cspec.one(), 1, cspec) * geometric_series(CycLambdaElem.monomial(kappa, 1, cspec))
    return _lambda_pd(cspec, degree_cap, {0: G, 1: -(G * cspec.base.alpha)})


@dataclass
class _NablaTables:
    """Divided powers of z = pi (zeta - 1) nabla(X) and the matching nabla terms."""

    cspec: CycRingSpec
    degree_cap: int
    nabla_x_powers: list[PDSeries] = field(default_factory=list)

    def __post_init__(self):
        one = PDSeries.constant(LambdaRing(self.cspec).one(), 1, self.degree_cap)
        nx = nabla_of_x(self.cspec, self.degree_cap)
        self.nabla_x_powers = [one]
        for _ in range(self.degree_cap):
            self.nabla_x_powers.append(pd_mul(self.nabla_x_powers[-1], nx))

    def z_divided(self, m: int) -> PDSeries:
        # pi^m (-1)^m ((1 - zeta)^m / m!) nabla(X)^m
        base = self.cspec.base
        factor = zeta_quotient(self.cspec, m, m) * (base.pi() ** m) * (-1) ** m
        return self.nabla_x_powers[m].left_mul(CycLambdaElem.monomial(factor, 0, self.cspec))

    def nabla_term(self, m: int) -> PDSeries:
        # pi^{m-1} (-1)^{m-1} ((1 - zeta)^{m-1} / m!) nabla(X)^m
        base = self.cspec.base
        factor = zeta_quotient(self.cspec, m - 1, m) * (base.pi() ** (m - 1)) * (-1) ** (m - 1)
        return self.nabla_x_powers[m].left_mul(CycLambdaElem.monomial(factor, 0, self.cspec))


def _x_divided(cspec: CycRingSpec, i: int, degree_cap: int) -> PDSeries:
    return PDSeries.monomial(LambdaRing(cspec).one(), (i,), degree_cap)


def _linear_extension(cspec: CycRingSpec, f: PDSeries, term) -> PDSeries:
    out = PDSeries.zero(LambdaRing(cspec), 1, f.degree_cap)
    for (n,), c in f.items():
        out = out + term(n).left_mul(c)
    return out


def _require_univariate(f: PDSeries) -> None:
    if f.num_vars != 1:
        raise ShapeMismatch("the tau-connection is defined on the one-variable pd-ring")


def tau_pd(cspec: CycRingSpec, f: PDSeries) -> PDSeries:
    """tau(X^[n]) = sum_{i<=n} z^[n-i] X^[i], extended O_K-linearly."""
    _require_univariate(f)
    tables = _NablaTables(cspec, f.degree_cap)

    def term(n: int) -> PDSeries:
        acc = PDSeries.zero(LambdaRing(cspec), 1, f.degree_cap)
        for i in range(n + 1):
            acc = acc + pd_mul(tables.z_divided(n - i), _x_divided(cspec, i, f.degree_cap))
        return acc

    return _linear_extension(cspec, f, term)


def nabla_pd(cspec: CycRingSpec, f: PDSeries) -> PDSeries:
    """nabla(X^[n]) = sum_{i<n} pi^{n-i-1} ((zeta - 1)^{n-i-1} / (n-i)!) nabla(X)^{n-i} X^[i]."""
    _require_univariate(f)
    tables = _NablaTables(cspec, f.degree_cap)

    def term(n: int) -> PDSeries:
        acc = PDSeries.zero(LambdaRing(cspec), 1, f.degree_cap)
        for i in range(n):
            acc = acc + pd_mul(tables.nabla_term(n - i), _x_divided(cspec, i, f.degree_cap))
        return acc

    return _linear_extension(cspec, f, term)


def _as_lambda_series(cspec: CycRingSpec, f: PDSeries) -> PDSeries:
    return _linear_extension(cspec, f, lambda n: _x_divided(cspec, n, f.degree_cap))


def verify_nabla_pd(cspec: CycRingSpec, f: PDSeries, g: PDSeries) -> IdentityReport:
    """tau(f) - f = pi (zeta - 1) nabla(f), the twisted Leibniz rule, and nabla(X^[n]) = X^[n-1] nabla(X) mod pi.

    The Leibniz rule is exact when deg f + deg g <= the degree cap.
    """
    _require_univariate(f)
    _require_univariate(g)
    D = f.degree_cap
    pi_zeta = CycLambdaElem.monomial(-cspec.one_minus_zeta * cspec.base.pi(), 0, cspec)

    for name, h in (("f", f), ("g", g)):
        lhs = tau_pd(cspec, h) - _as_lambda_series(cspec, h)
        rhs = nabla_pd(cspec, h).left_mul(pi_zeta)
        bad = lhs.first_difference(rhs, D)
        if bad is not None:
            raise IdentityViolation(f"tau({name}) - {name} != pi(zeta-1) nabla({name}) at X^[{bad[0]}]")

    if f.max_degree() + g.max_degree() <= D:
        fg = pd_mul(f, g)
        lhs = nabla_pd(cspec, fg)
        rhs = pd_mul(nabla_pd(cspec, f), tau_pd(cspec, g)) + pd_mul(_as_lambda_series(cspec, f), nabla_pd(cspec, g))
        bad = lhs.first_difference(rhs, D)
        if bad is not None:
            raise IdentityViolation(f"twisted Leibniz rule fails at X^[{bad[0]}]")

    nx = nabla_of_x(cspec, D)
    for n in range(1, D + 1):
        x_n = PDSeries.monomial(cspec.base.one(), (n,), D)
        diff = nabla_pd(cspec, x_n) - pd_mul(_x_divided(cspec, n - 1, D), nx)
        for idx, c in diff.items():
            if any(coeff.valuation() < 1 for _, coeff in c.items()):
                raise IdentityViolation(
                    f"nabla(X^[{n}]) differs from X^[{n - 1}] nabla(X) by a unit at X^[{idx[0]}]", index=n
                )

    return IdentityReport("nabla_pd", margin=D, details={"leibniz_checked": f.max_degree() + g.max_degree() <= D})
