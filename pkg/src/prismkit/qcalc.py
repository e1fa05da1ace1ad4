"""q-calculus - Layer 4. d_q, tau and phi on a truncated model of W(k)[[u, m]].

m stands for phi^{-1}(mu), so mu = (1 + m)^p - 1 and xi = mu / m is an honest
polynomial in m.  Everything here is a polynomial identity in the free ring,
so the checks are exact once both sides fit under the caps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Any, Iterable, Iterator

from .base_rings import OKElem, RingSpec
from .errors import DivisionFailure, IdentityViolation, ShapeMismatch, SpecMismatch, TruncationLoss
from .report import IdentityReport

logger = logging.getLogger(__name__)

Monomial = tuple[int, int]  # (u-degree, m-degree)


@dataclass(frozen=True)
class QCalcRing:
    """W(k)[[u, m]] / (u^{u_cap+1}, m^{m_cap+1}); W(k) is the unramified part of `spec`."""

    spec: RingSpec
    u_cap: int = 24
    m_cap: int = 12

    def __post_init__(self):
        if self.u_cap < 0 or self.m_cap < 0:
            raise SpecMismatch("truncation caps must be non-negative")

    @cached_property
    def w(self) -> RingSpec:
        return self.spec.witt()

    @property
    def p(self) -> int:
        return self.spec.p

    def element(self, terms: dict[Monomial, OKElem | int]) -> AinfLiteElem:
        return AinfLiteElem.build(self, terms)

    def const(self, c: OKElem | int) -> AinfLiteElem:
        return self.element({(0, 0): c})

    def zero(self) -> AinfLiteElem:
        return AinfLiteElem(self, {})

    def one(self) -> AinfLiteElem:
        return self.const(1)

    @cached_property
    def u(self) -> AinfLiteElem:
        return self.element({(1, 0): 1})

    @cached_property
    def m(self) -> AinfLiteElem:
        return self.element({(0, 1): 1})

    @cached_property
    def mu(self) -> AinfLiteElem:
        return self.element({(0, j): comb(self.p, j) for j in range(1, self.p + 1)})

    @cached_property
    def xi(self) -> AinfLiteElem:
        return self.element({(0, j - 1): comb(self.p, j) for j in range(1, self.p + 1)})

    def one_plus_m_power(self, n: int) -> AinfLiteElem:
        """(1 + m)^n, which is (1 + mu)^{n/p} when p | n."""
        return self.element({(0, j): comb(n, j) for j in range(min(n, self.m_cap) + 1)})

    def from_u_poly(self, coeffs: Iterable[OKElem | int]) -> AinfLiteElem:
        """sum_i coeffs[i] u^i."""
        return self.element({(i, 0): c for i, c in enumerate(coeffs)})

    def eisenstein(self) -> AinfLiteElem:
        """E(u) with its integer coefficients."""
        E = self.spec.eisenstein
        if len(E) - 1 > self.u_cap:
            raise DivisionFailure(f"E has degree {len(E) - 1} > u_cap = {self.u_cap}")
        return self.from_u_poly(E)


@dataclass(frozen=True, eq=False)
class AinfLiteElem:
    """sum terms[(i, j)] u^i m^j with W(k) coefficients, i <= u_cap, j <= m_cap."""

    ring: QCalcRing
    terms: dict[Monomial, OKElem] = field(default_factory=dict)

    @classmethod
    def build(cls, ring: QCalcRing, terms: dict[Monomial, OKElem | int]) -> AinfLiteElem:
        w = ring.w
        kept: dict[Monomial, OKElem] = {}
        for (i, j), c in terms.items():
            if i < 0 or j < 0:
                raise ShapeMismatch(f"negative exponent in monomial u^{i} m^{j}")
            if i > ring.u_cap or j > ring.m_cap:
                continue
            if isinstance(c, int):
                c = w.from_int(c)
            elif c.spec != w:
                raise SpecMismatch("coefficients must live in W(k)")
            if not c.is_zero():
                kept[(i, j)] = c
        return cls(ring, kept)

    def __getitem__(self, mono: Monomial) -> OKElem:
        return self.terms.get(mono, self.ring.w.zero())

    def items(self) -> Iterator[tuple[Monomial, OKElem]]:
        return iter(sorted(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def u_degree(self) -> int:
        return max((i for i, _ in self.terms), default=-1)

    def is_u_series(self) -> bool:
        """True when no m appears, i.e. the element lies in W(k)[[u]]."""
        return all(j == 0 for _, j in self.terms)

    def _check(self, other: AinfLiteElem) -> None:
        if other.ring != self.ring:
            raise SpecMismatch("elements of different truncated rings")

    def __add__(self, other: Any) -> AinfLiteElem:
        if isinstance(other, (int, OKElem)):
            other = self.ring.const(other)
        if not isinstance(other, AinfLiteElem):
            return NotImplemented
        self._check(other)
        out: dict[Monomial, OKElem] = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return AinfLiteElem.build(self.ring, out)

    __radd__ = __add__

    def __neg__(self) -> AinfLiteElem:
        return AinfLiteElem(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: Any) -> AinfLiteElem:
        if isinstance(other, (int, OKElem)):
            other = self.ring.const(other)
        if not isinstance(other, AinfLiteElem):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> AinfLiteElem:
        return (-self) + other

    def __mul__(self, other: Any) -> AinfLiteElem:
        if isinstance(other, (int, OKElem)) and not isinstance(other, bool):
            return AinfLiteElem.build(self.ring, {k: c * other for k, c in self.terms.items()})
        if not isinstance(other, AinfLiteElem):
            return NotImplemented
        self._check(other)
        ucap, mcap = self.ring.u_cap, self.ring.m_cap
        out: dict[Monomial, OKElem] = {}
        for (i1, j1), a in self.terms.items():
            for (i2, j2), b in other.terms.items():
                i, j = i1 + i2, j1 + j2
                if i > ucap or j > mcap:
                    continue
                out[(i, j)] = out[(i, j)] + a * b if (i, j) in out else a * b
        return AinfLiteElem.build(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> AinfLiteElem:
        result = self.ring.one()
        for _ in range(n):
            result = result * self
        return result

    def first_difference(self, other: AinfLiteElem, u_degree: int | None = None) -> Monomial | None:
        """Lowest differing monomial, optionally only up to a u-degree."""
        limit = self.ring.u_cap if u_degree is None else u_degree
        for mono in sorted(set(self.terms) | set(other.terms)):
            if mono[0] <= limit and self[mono] != other[mono]:
                return mono
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AinfLiteElem):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> list[dict]:
        return [{"u": i, "m": j, "coeff": c.to_json()} for (i, j), c in self.items()]

    def __repr__(self) -> str:
        return " + ".join(f"{c!r}*u^{i}*m^{j}" for (i, j), c in self.items()) or "0"


# -- Operators ---------------------------------------------------------------


def qint(ring: QCalcRing, n: int) -> AinfLiteElem:
    """[n]_q = ((1 + mu)^n - 1) / mu = sum_{j >= 1} C(n, j) mu^{j-1}."""
    if n < 0:
        raise ValueError("q-integers are defined for n >= 0")
    out = ring.zero()
    mu_power = ring.one()
    for j in range(1, n + 1):
        if j > 1:
            mu_power = mu_power * ring.mu
            if mu_power.is_zero():
                break
        out = out + mu_power * comb(n, j)
    return out


def d_q(f: AinfLiteElem) -> AinfLiteElem:
    """sum a_{n,j} [n]_q u^{n-1} m^j; m is a constant for d_q."""
    ring = f.ring
    out = ring.zero()
    for (i, j), c in f.terms.items():
        if i == 0:
            continue
        mono = ring.element({(i - 1, j): c})
        out = out + qint(ring, i) * mono
    return out


def tau_action(f: AinfLiteElem) -> AinfLiteElem:
    """u -> (1 + mu) u = (1 + m)^p u; W(k) and m are fixed."""
    ring = f.ring
    out = ring.zero()
    for (i, j), c in f.terms.items():
        out = out + ring.one_plus_m_power(ring.p * i) * ring.element({(i, j): c})
    return out


def phi_action(f: AinfLiteElem) -> AinfLiteElem:
    """u -> u^p, m -> mu, Frobenius on W(k).

    Raises TruncationLoss when a nonzero term is pushed past the u-cap.
    """
    ring = f.ring
    p = ring.p
    out = ring.zero()
    mu_powers = [ring.one()]
    for (i, j), c in f.terms.items():
        if p * i > ring.u_cap:
            raise TruncationLoss(f"phi(u^{i}) = u^{p * i} exceeds u_cap = {ring.u_cap}", index=i)
        while len(mu_powers) <= j:
            mu_powers.append(mu_powers[-1] * ring.mu)
        out = out + mu_powers[j] * ring.element({(p * i, 0): c.frobenius()})
    return out


def nabla(f: AinfLiteElem) -> AinfLiteElem:
    """xi * d_q(f), which is (tau - 1)(f) / (m u)."""
    return f.ring.xi * d_q(f)


def specialize(f: AinfLiteElem, spec: RingSpec) -> OKElem:
    """Image under m -> 0, u -> pi in O_K."""
    out = spec.zero()
    pi = spec.pi()
    for (i, j), c in f.terms.items():
        if j:
            continue
        out = out + spec.from_witt(c.coeffs) * pi**i
    return out


def formal_derivative_at_pi(f: AinfLiteElem, spec: RingSpec) -> OKElem:
    """f'(pi) for f in W(k)[[u]]."""
    if not f.is_u_series():
        raise SpecMismatch("formal derivative is taken on W(k)[[u]] elements")
    out = spec.zero()
    pi = spec.pi()
    for (i, _), c in f.terms.items():
        if i:
            out = out + spec.from_witt(c.coeffs) * (pi ** (i - 1)) * i
    return out


# -- Verification --------------------------------------------------------------


def _require(lhs: AinfLiteElem, rhs: AinfLiteElem, what: str, u_degree: int | None = None) -> None:
    bad = lhs.first_difference(rhs, u_degree)
    if bad is not None:
        raise IdentityViolation(f"{what} fails at u^{bad[0]} m^{bad[1]}", index=list(bad))


def verify_q_identities(f: AinfLiteElem, g: AinfLiteElem) -> IdentityReport:
    """The q-derivative identities on f, g in W(k)[[u]].

    Exact: (tau - 1) f = mu u d_q(f) and m u nabla(f) = (tau - 1) f.  The
    Leibniz rule d_q(fg) = d_q(f) tau(g) + f d_q(g) is compared below the
    u-cap.  nabla(phi f) = xi u^{p-1} phi(nabla f) and the specialization
    d_q(f)(u = pi, m = 0) = f'(pi) are checked when f fits under phi.
    """
    ring = f.ring
    if not (f.is_u_series() and g.is_u_series()):
        raise SpecMismatch("q-identities are stated for elements of W(k)[[u]]")
    checked = ["tau_minus_one", "nabla_agrees", "leibniz"]

    for name, h in (("f", f), ("g", g)):
        lhs = tau_action(h) - h
        _require(lhs, ring.mu * ring.u * d_q(h), f"(tau - 1) {name} = mu u d_q({name})")
        _require(ring.m * ring.u * nabla(h), lhs, f"m u nabla({name}) = (tau - 1) {name}")

    _require(d_q(f * g), d_q(f) * tau_action(g) + f * d_q(g), "twisted Leibniz rule", ring.u_cap - 1)

    if ring.p * f.u_degree() <= ring.u_cap:
        lhs = nabla(phi_action(f))
        rhs = ring.xi * ring.u ** (ring.p - 1) * phi_action(nabla(f))
        _require(lhs, rhs, "nabla phi = xi u^{p-1} phi nabla")
        checked.append("nabla_phi")

    if specialize(d_q(f), ring.spec) != formal_derivative_at_pi(f, ring.spec):
        raise IdentityViolation("d_q(f) does not specialize to f'(pi)")
    checked.append("specialization")

    return IdentityReport("q_identities", margin=ring.u_cap - 1, details={"checked": checked})


def verify_dq_power_of_E(ring: QCalcRing, h: int) -> IdentityReport:
    """d_q(E^h) = h E^{h-1} d_q(E) + m u Q with Q in (E, xi)^{h-1}.

    Q = sum_{i <= h-2} C(h, i) E^i xi^{h-1-i} (m u)^{h-2-i} d_q(E)^{h-i} is
    formed explicitly; in A_inf xi and E generate the same ideal, which
    turns this into divisibility by E^{h-1}.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    E = ring.eisenstein()
    e = ring.spec.e
    if e * h > ring.u_cap:
        raise DivisionFailure(f"E^{h} has u-degree {e * h} > u_cap = {ring.u_cap}", index=h)

    Eh = E**h
    dq = d_q(Eh)
    _require(ring.mu * ring.u * dq, tau_action(Eh) - Eh, f"mu u d_q(E^{h}) = (tau - 1) E^{h}")

    dqE = d_q(E)
    mu_ = ring.m * ring.u
    Q = ring.zero()
    for i in range(h - 1):
        Q = Q + (E**i) * (ring.xi ** (h - 1 - i)) * (mu_ ** (h - 2 - i)) * (dqE ** (h - i)) * comb(h, i)
    residual = dq - (E ** (h - 1)) * dqE * h
    _require(residual, mu_ * Q, f"d_q(E^{h}) - {h} E^{h - 1} d_q(E) = m u Q")

    logger.debug("d_q(E^%d) congruence certified", h)
    return IdentityReport(
        "dq_power_of_E", margin=ring.u_cap, details={"h": h, "quotient_terms": len(Q.terms)}
    )
