"""Divided-power series - Layer 1. Truncated pd-polynomials over O_K.

A PDSeries in s variables stores the coefficient of
X^[I] = X_1^[i_1] ... X_s^[i_s] for every multi-index with |I| <= D.
Coefficients are O_K scalars or matrices over O_K; the cosimplicial face
maps of the Cech nerve act on these series.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, prod
from typing import Any, Iterable, Iterator, Union

from .base_rings import MatrixRing, OKElem, OKMatrix, RingSpec, ScalarRing
from .errors import IndexOutOfRange, NonzeroConstantTerm, NotAdmissible, ShapeMismatch

logger = logging.getLogger(__name__)

Coeff = Union[OKElem, OKMatrix]
CoeffRing = Union[ScalarRing, MatrixRing]
Index = tuple[int, ...]


@lru_cache(maxsize=4096)
def pd_power_factor(J: Index, m: int) -> int:
    """Integer c with (X^[J])^m / m! = c * X^[mJ]."""
    if m == 0:
        return 1
    num = prod(factorial(m * j) // factorial(j) ** m for j in J)
    return num // factorial(m)


def _binomial_factor(K: Index, I: Index) -> int:
    return prod(comb(k, i) for k, i in zip(K, I))


def _product_ring(ra: CoeffRing, rb: CoeffRing) -> CoeffRing:
    if isinstance(ra, ScalarRing):
        return rb
    if isinstance(rb, ScalarRing):
        return ra
    if not isinstance(ra, MatrixRing) or not isinstance(rb, MatrixRing):
        if ra == rb:
            return ra
        raise ShapeMismatch(f"cannot multiply {ra!r} by {rb!r} coefficients")
    if ra.ncols != rb.nrows:
        raise ShapeMismatch(
            f"cannot multiply {ra.nrows}x{ra.ncols} by {rb.nrows}x{rb.ncols} coefficients"
        )
    return MatrixRing(ra.spec, ra.nrows, rb.ncols)


def _ring_of(c: Coeff) -> CoeffRing:
    return c.ring


def _accumulate(acc: dict[Index, Coeff], idx: Index, value: Coeff) -> None:
    current = acc.get(idx)
    acc[idx] = value if current is None else current + value


def _prune(coeffs: dict[Index, Coeff]) -> dict[Index, Coeff]:
    return {k: v for k, v in coeffs.items() if not v.is_zero()}


@dataclass(frozen=True, eq=False)
class PDSeries:
    """Truncated divided-power series sum_I c_I X^[I] with |I| <= degree_cap."""

    ring: CoeffRing
    num_vars: int
    degree_cap: int
    coeffs: dict[Index, Coeff] = field(default_factory=dict)

    # -- Constructors ---------------------------------------------------

    @classmethod
    def build(
        cls, ring: CoeffRing, num_vars: int, degree_cap: int, coeffs: dict[Index, Coeff]
    ) -> PDSeries:
        """Truncate to the cap and drop zero coefficients."""
        kept = {}
        for idx, c in coeffs.items():
            if len(idx) != num_vars:
                raise ShapeMismatch(f"index {idx} does not have {num_vars} entries")
            if sum(idx) <= degree_cap and not c.is_zero():
                kept[idx] = c
        return cls(ring, num_vars, degree_cap, kept)

    @classmethod
    def zero(cls, ring: CoeffRing, num_vars: int, degree_cap: int) -> PDSeries:
        return cls(ring, num_vars, degree_cap, {})

    @classmethod
    def constant(cls, c: Coeff, num_vars: int, degree_cap: int) -> PDSeries:
        return cls.build(_ring_of(c), num_vars, degree_cap, {(0,) * num_vars: c})

    @classmethod
    def monomial(cls, c: Coeff, index: Index, degree_cap: int) -> PDSeries:
        return cls.build(_ring_of(c), len(index), degree_cap, {tuple(index): c})

    @classmethod
    def variable(cls, spec: RingSpec, var: int, num_vars: int, degree_cap: int) -> PDSeries:
        """The scalar series X_{var+1} (variables are 0-based internally)."""
        idx = tuple(1 if v == var else 0 for v in range(num_vars))
        return cls.monomial(spec.one(), idx, degree_cap)

    # -- Access ---------------------------------------------------------

    @property
    def spec(self) -> RingSpec:
        return self.ring.spec

    def __getitem__(self, idx: Index) -> Coeff:
        c = self.coeffs.get(tuple(idx))
        return self.ring.zero() if c is None else c

    def items(self) -> Iterator[tuple[Index, Coeff]]:
        return iter(sorted(self.coeffs.items()))

    def is_zero(self) -> bool:
        return not self.coeffs

    def max_degree(self) -> int:
        return max((sum(i) for i in self.coeffs), default=-1)

    def truncate(self, degree: int) -> PDSeries:
        return PDSeries.build(self.ring, self.num_vars, min(degree, self.degree_cap), self.coeffs)

    def with_cap(self, degree_cap: int) -> PDSeries:
        return PDSeries.build(self.ring, self.num_vars, degree_cap, self.coeffs)

    def first_difference(self, other: PDSeries, degree: int) -> Index | None:
        """Lowest (degree, lex) index up to total degree `degree` where self and other differ."""
        self._check_compatible(other, need_same_ring=False)
        keys = {k for k in itertools.chain(self.coeffs, other.coeffs) if sum(k) <= degree}
        for idx in sorted(keys, key=lambda k: (sum(k), k)):
            if self[idx] != other[idx]:
                return idx
        return None

    def agrees_with(self, other: PDSeries, degree: int) -> bool:
        return self.first_difference(other, degree) is None

    # -- Arithmetic -----------------------------------------------------

    def _check_compatible(self, other: PDSeries, need_same_ring: bool = True) -> None:
        if self.num_vars != other.num_vars:
            raise ShapeMismatch(f"{self.num_vars} vs {other.num_vars} variables")
        if need_same_ring and self.ring != other.ring:
            raise ShapeMismatch(f"coefficient rings differ: {self.ring} vs {other.ring}")

    def __add__(self, other: PDSeries) -> PDSeries:
        if not isinstance(other, PDSeries):
            return NotImplemented
        self._check_compatible(other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            _accumulate(out, idx, c)
        return PDSeries.build(self.ring, self.num_vars, min(self.degree_cap, other.degree_cap), out)

    def __neg__(self) -> PDSeries:
        return PDSeries(self.ring, self.num_vars, self.degree_cap, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: PDSeries) -> PDSeries:
        if not isinstance(other, PDSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: Any) -> PDSeries:
        if isinstance(other, PDSeries):
            return pd_mul(self, other)
        if isinstance(other, (OKElem, OKMatrix, int)):
            return self.right_mul(other)
        return NotImplemented

    def __rmul__(self, other: Any) -> PDSeries:
        if isinstance(other, (OKElem, OKMatrix, int)):
            return self.left_mul(other)
        return NotImplemented

    def left_mul(self, c: Coeff | int) -> PDSeries:
        """c * self, coefficientwise."""
        if isinstance(c, int):
            ring = self.ring
        else:
            ring = _product_ring(_ring_of(c), self.ring)
        return PDSeries.build(ring, self.num_vars, self.degree_cap, {k: c * v for k, v in self.coeffs.items()})

    def right_mul(self, c: Coeff | int) -> PDSeries:
        """self * c, coefficientwise."""
        if isinstance(c, int):
            ring = self.ring
        else:
            ring = _product_ring(self.ring, _ring_of(c))
        return PDSeries.build(ring, self.num_vars, self.degree_cap, {k: v * c for k, v in self.coeffs.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PDSeries):
            return NotImplemented
        return self.num_vars == other.num_vars and self.coeffs == other.coeffs

    __hash__ = None  # type: ignore[assignment]

    # -- Serialization --------------------------------------------------

    def to_json(self) -> list[dict]:
        return [{"index": list(idx), "coeff": c.to_json()} for idx, c in self.items()]

    @classmethod
    def from_json(
        cls, ring: CoeffRing, num_vars: int, degree_cap: int, data: Iterable[dict]
    ) -> PDSeries:
        coeffs: dict[Index, Coeff] = {}
        for entry in data:
            idx = tuple(int(i) for i in entry["index"])
            if isinstance(ring, ScalarRing):
                c: Coeff = ring.spec.from_json(entry["coeff"])
            else:
                c = OKMatrix.from_json(ring.spec, entry["coeff"])
                if (c.nrows, c.ncols) != (ring.nrows, ring.ncols):
                    raise ShapeMismatch(f"coefficient at {list(idx)} has the wrong shape")
            _accumulate(coeffs, idx, c)
        return cls.build(ring, num_vars, degree_cap, coeffs)

    def __repr__(self) -> str:
        terms = ", ".join(f"{list(i)}: {c!r}" for i, c in self.items())
        return f"PDSeries(s={self.num_vars}, D={self.degree_cap}, {{{terms}}})"


# -- Multiplication and substitution -------------------------------------


def pd_mul(a: PDSeries, b: PDSeries) -> PDSeries:
    """X^[I] * X^[J] = prod_v C(I_v + J_v, I_v) X^[I+J]; coefficients multiply as a*b."""
    if a.num_vars != b.num_vars:
        raise ShapeMismatch(f"{a.num_vars} vs {b.num_vars} variables")
    if a.degree_cap != b.degree_cap:
        raise ShapeMismatch(f"degree caps differ: {a.degree_cap} vs {b.degree_cap}")
    ring = _product_ring(a.ring, b.ring)
    D = a.degree_cap
    out: dict[Index, Coeff] = {}
    b_items = [(J, sum(J), c) for J, c in b.coeffs.items()]
    for I, ca in a.coeffs.items():
        dI = sum(I)
        for J, dJ, cb in b_items:
            if dI + dJ > D:
                continue
            K = tuple(i + j for i, j in zip(I, J))
            term = ca * cb
            factor = _binomial_factor(K, I)
            if factor != 1:
                term = term * factor
            _accumulate(out, K, term)
    return PDSeries.build(ring, a.num_vars, D, out)


def pd_divided_powers(g: PDSeries, m_max: int) -> list[PDSeries]:
    """[g^[0], g^[1], ..., g^[m_max]] for a scalar series without constant term.

    Uses (a + b)^[m] = sum_i a^[i] b^[m-i] over the terms of g and
    (c X^[J])^[i] = c^i * pd_power_factor(J, i) * X^[iJ].
    """
    if not isinstance(g.ring, ScalarRing):
        raise ShapeMismatch("divided powers need scalar coefficients")
    zero_idx = (0,) * g.num_vars
    if zero_idx in g.coeffs:
        raise NonzeroConstantTerm("argument has a nonzero constant term")
    s, D = g.num_vars, g.degree_cap
    one = PDSeries.constant(g.spec.one(), s, D)
    powers = [one] + [PDSeries.zero(g.ring, s, D) for _ in range(m_max)]
    for J, c in g.items():
        dJ = sum(J)
        term_powers = [one]
        c_pow = g.spec.one()
        for i in range(1, m_max + 1):
            if i * dJ > D:
                break
            c_pow = c_pow * c
            idx = tuple(i * j for j in J)
            term_powers.append(PDSeries.monomial(c_pow * pd_power_factor(J, i), idx, D))
        new_powers = []
        for k in range(m_max + 1):
            acc = powers[k]
            for i in range(1, min(k, len(term_powers) - 1) + 1):
                if powers[k - i].is_zero():
                    continue
                acc = acc + pd_mul(term_powers[i], powers[k - i])
            new_powers.append(acc)
        powers = new_powers
    return powers


def pd_substitute(f: PDSeries, arg: PDSeries) -> PDSeries:
    """f(arg) = sum_m f_m arg^[m] for univariate f and arg with zero constant term."""
    if f.num_vars != 1:
        raise ShapeMismatch("pd_substitute expects a univariate series")
    m_max = min(f.max_degree(), arg.degree_cap)
    if m_max < 0:
        return PDSeries.zero(f.ring, arg.num_vars, arg.degree_cap)
    powers = pd_divided_powers(arg, m_max)
    result = PDSeries.zero(_product_ring(f.ring, arg.ring), arg.num_vars, arg.degree_cap)
    for (m,), c in f.items():
        if m <= m_max and not powers[m].is_zero():
            result = result + powers[m].left_mul(c)
    return result


def pd_compose(f: PDSeries, args: list[PDSeries]) -> PDSeries:
    """Multivariate substitution X_j -> args[j]; every arg has zero constant term."""
    if len(args) != f.num_vars:
        raise ShapeMismatch(f"need {f.num_vars} arguments, got {len(args)}")
    if not args:
        raise ShapeMismatch("pd_compose needs at least one argument")
    s, D = args[0].num_vars, args[0].degree_cap
    for a in args:
        if (a.num_vars, a.degree_cap) != (s, D):
            raise ShapeMismatch("substitution arguments must share variables and cap")
    m_max = min(max(f.max_degree(), 0), D)
    powers = [pd_divided_powers(a, m_max) for a in args]
    result = PDSeries.zero(f.ring, s, D)
    for I, c in f.items():
        if sum(I) > D:
            continue
        term = PDSeries.constant(c, s, D)
        for j, i in enumerate(I):
            if i:
                term = pd_mul(term, powers[j][i])
        result = result + term
    return result


# -- Closed-form series ---------------------------------------------------


def pd_invert_affine(alpha: OKElem, which_var: int, num_vars: int, degree_cap: int) -> PDSeries:
    """(1 - alpha X)^{-1} = sum_n n! alpha^n X^[n]."""
    spec = alpha.spec
    coeffs = {}
    a_pow = spec.one()
    for n in range(degree_cap + 1):
        idx = tuple(n if v == which_var else 0 for v in range(num_vars))
        coeffs[idx] = a_pow * factorial(n)
        a_pow = a_pow * alpha
    return PDSeries.build(ScalarRing(spec), num_vars, degree_cap, coeffs)


def pd_affine_power(
    alpha: OKElem, exponent: int, which_var: int, num_vars: int, degree_cap: int
) -> PDSeries:
    """(1 - alpha X)^exponent by repeated multiplication."""
    spec = alpha.spec
    if exponent >= 0:
        x = PDSeries.variable(spec, which_var, num_vars, degree_cap)
        base = PDSeries.constant(spec.one(), num_vars, degree_cap) - x.left_mul(alpha)
    else:
        base = pd_invert_affine(alpha, which_var, num_vars, degree_cap)
    result = PDSeries.constant(spec.one(), num_vars, degree_cap)
    for _ in range(abs(exponent)):
        result = pd_mul(result, base)
    return result


def matrix_binomial_power(
    B: OKMatrix,
    alpha: OKElem,
    which_var: int = 0,
    num_vars: int = 1,
    degree_cap: int = 8,
    decay_budget: int | None = None,
) -> PDSeries:
    """(1 - alpha X)^{-B/alpha} = sum_n A_n X^[n], A_0 = I, A_{n+1} = A_n (B + n alpha).

    With decay_budget set, the coefficient sequence must vanish mod p^N at
    some n <= decay_budget; NotAdmissible otherwise.
    """
    spec = B.spec
    A = OKMatrix.identity(spec, B.nrows)
    coeffs = {}
    for n in range(degree_cap + 1):
        idx = tuple(n if v == which_var else 0 for v in range(num_vars))
        coeffs[idx] = A
        A = A * B.add_scalar(alpha * n)
    if decay_budget is not None:
        n = degree_cap + 1
        while not A.is_zero():
            if n >= decay_budget:
                raise NotAdmissible(
                    f"coefficients have not vanished mod p^{spec.precision} by degree {decay_budget}",
                    index=n,
                )
            A = A * B.add_scalar(alpha * n)
            n += 1
    return PDSeries.build(MatrixRing(spec, B.nrows, B.ncols), num_vars, degree_cap, coeffs)


# -- Derivations and reindexing -------------------------------------------


def derivative(f: PDSeries, var: int = 0) -> PDSeries:
    """d/dX_var, sending X^[n] to X^[n-1]."""
    if not 0 <= var < f.num_vars:
        raise IndexOutOfRange(f"variable {var} out of range for {f.num_vars} variables")
    out = {}
    for idx, c in f.coeffs.items():
        if idx[var]:
            out[idx[:var] + (idx[var] - 1,) + idx[var + 1 :]] = c
    return PDSeries.build(f.ring, f.num_vars, f.degree_cap, out)


def degeneracy(f: PDSeries) -> Coeff:
    """Evaluation at X = 0: the constant coefficient."""
    return f[(0,) * f.num_vars]


def embed(f: PDSeries, num_vars: int, var_map: list[int], degree_cap: int | None = None) -> PDSeries:
    """Rename variable v of f to variable var_map[v] of a series in num_vars variables."""
    if len(var_map) != f.num_vars:
        raise ShapeMismatch("var_map must cover every variable")
    if any(not 0 <= v < num_vars for v in var_map):
        raise IndexOutOfRange(f"target variable out of range for {num_vars} variables")
    out = {}
    for idx, c in f.coeffs.items():
        new = [0] * num_vars
        for v, i in zip(var_map, idx):
            new[v] += i
        out[tuple(new)] = c
    cap = f.degree_cap if degree_cap is None else degree_cap
    return PDSeries.build(f.ring, num_vars, cap, out)


# -- Cosimplicial structure ------------------------------------------------


def face_map(f: PDSeries, i: int, alpha: OKElem) -> PDSeries:
    """Coface p_i from n to n+1 variables.

    p_0: X_j -> (X_{j+1} - X_1)(1 - alpha X_1)^{-1}.
    p_i, i >= 1: X_j -> X_j for j < i, X_j -> X_{j+1} for j >= i.
    So p_i skips X_i: in one variable p_1(X) = X_2 and p_2(X) = X_1, the
    convention of the differential d f = eps(X_1) p_0(f) + sum_i (-1)^i p_i(f).
    Coefficients are not twisted here.
    """
    n = f.num_vars
    if not 0 <= i <= n + 1:
        raise IndexOutOfRange(f"face index {i} outside 0..{n + 1}")
    if i >= 1:
        out = {idx[: i - 1] + (0,) + idx[i - 1 :]: c for idx, c in f.coeffs.items()}
        return PDSeries(f.ring, n + 1, f.degree_cap, out)
    return _face_zero(f, alpha)


def _face_zero(f: PDSeries, alpha: OKElem) -> PDSeries:
    # prod_j (X_{j+1} - X_1)^[i_j] * (1 - alpha X_1)^{-|I|}, expanded directly
    D = f.degree_cap
    alpha_pows = [alpha.spec.one()]
    for _ in range(D):
        alpha_pows.append(alpha_pows[-1] * alpha)
    out: dict[Index, Coeff] = {}
    for I, c in f.coeffs.items():
        m = sum(I)
        t_max = D - m if m else 0
        scaled = [c * alpha_pows[t] for t in range(t_max + 1)]
        for k in itertools.product(*(range(i + 1) for i in I)):
            K = sum(k)
            base = (-1) ** K * (factorial(K) // prod(factorial(kj) for kj in k))
            rest = tuple(i - kj for i, kj in zip(I, k))
            for t in range(t_max + 1):
                if m:
                    factor = base * comb(m + t - 1, t) * factorial(t) * comb(K + t, t)
                else:
                    factor = base
                _accumulate(out, (K + t,) + rest, scaled[t] * factor)
    return PDSeries.build(f.ring, f.num_vars + 1, D, out)
