"""Base rings - Layer 0. Exact arithmetic in O_K at fixed precision.

O_K = W(k)[u]/(E(u)) with W(k) realized as Z_p[x]/(h(x)), h the lift of the
residue field's minimal polynomial and E an Eisenstein polynomial.  Elements
are f x e integer arrays reduced mod p^N after every operation, so every
identity downstream is checked exactly.  Valuations are normalized with
v(pi) = 1 and v(p) = e.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Literal, Sequence

import sympy

from .errors import NotAUnit, PrecisionExhausted, ShapeMismatch, SpecMismatch

logger = logging.getLogger(__name__)

_X = sympy.Symbol("x")


def vp_int(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _gf_poly(coeffs: Sequence[int], p: int) -> sympy.Poly:
    # low-to-high coefficient lists throughout the package; sympy wants high-to-low
    return sympy.Poly(list(reversed([int(c) for c in coeffs])), _X, modulus=p)


@dataclass(frozen=True)
class RingSpec:
    """The field K and the precision its integers are stored at.

    residue_min_poly and eisenstein are low-to-high integer coefficient
    lists of monic polynomials.
    """

    p: int
    residue_min_poly: tuple[int, ...]
    eisenstein: tuple[int, ...]
    precision: int
    assume_linear_disjoint: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "residue_min_poly", tuple(int(c) for c in self.residue_min_poly))
        object.__setattr__(self, "eisenstein", tuple(int(c) for c in self.eisenstein))
        self._validate()

    def _validate(self) -> None:
        p = self.p
        if not isinstance(p, int) or not sympy.isprime(p):
            raise SpecMismatch(f"p must be a prime, got {p!r}")
        if not isinstance(self.precision, int) or self.precision < 1:
            raise SpecMismatch(f"precision must be a positive integer, got {self.precision!r}")

        h = self.residue_min_poly
        if len(h) < 2 or h[-1] != 1:
            raise SpecMismatch("residue_min_poly must be monic of degree >= 1")
        if not _gf_poly(h, p).is_irreducible:
            raise SpecMismatch(f"residue_min_poly {list(h)} is reducible mod {p}")

        E = self.eisenstein
        if len(E) < 2 or E[-1] != 1:
            raise SpecMismatch("eisenstein polynomial must be monic of degree >= 1")
        if any(a % p for a in E[:-1]):
            raise SpecMismatch("eisenstein polynomial: non-leading coefficients must be divisible by p")
        if E[0] % (p * p) == 0:
            raise SpecMismatch("eisenstein polynomial: constant term must have p-valuation exactly 1")

        if p == 2 and self.assume_linear_disjoint is None:
            raise SpecMismatch("p = 2 requires assume_linear_disjoint to be set explicitly")

    # -- Shape ----------------------------------------------------------

    @property
    def f(self) -> int:
        return len(self.residue_min_poly) - 1

    @property
    def e(self) -> int:
        return len(self.eisenstein) - 1

    @property
    def modulus(self) -> int:
        return self.p**self.precision

    @property
    def horizon(self) -> int:
        """Valuation reported for elements that are 0 mod p^N."""
        return self.e * self.precision

    @property
    def linear_disjoint(self) -> bool:
        return True if self.assume_linear_disjoint is None else self.assume_linear_disjoint

    # -- Constructors ---------------------------------------------------

    def element(self, coeffs: Iterable[int]) -> OKElem:
        """Element from a flat row-major coefficient sequence of length f*e."""
        flat = tuple(int(c) % self.modulus for c in coeffs)
        if len(flat) != self.f * self.e:
            raise ShapeMismatch(f"expected {self.f * self.e} coefficients, got {len(flat)}")
        return OKElem(self, flat)

    def from_int(self, n: int) -> OKElem:
        flat = [0] * (self.f * self.e)
        flat[0] = n % self.modulus
        return OKElem(self, tuple(flat))

    def zero(self) -> OKElem:
        return self.from_int(0)

    def one(self) -> OKElem:
        return self.from_int(1)

    def pi(self) -> OKElem:
        """The uniformizer, i.e. the class of u."""
        if self.e == 1:
            return self.from_int(-self.eisenstein[0])
        flat = [0] * (self.f * self.e)
        flat[1] = 1
        return OKElem(self, tuple(flat))

    def x(self) -> OKElem:
        """The generator of W(k) over Z_p."""
        if self.f == 1:
            return self.from_int(-self.residue_min_poly[0])
        flat = [0] * (self.f * self.e)
        flat[self.e] = 1
        return OKElem(self, tuple(flat))

    def from_witt(self, coeffs: Sequence[int]) -> OKElem:
        """Embed sum_i c_i x^i from W(k) into O_K."""
        flat = [0] * (self.f * self.e)
        for i, c in enumerate(coeffs):
            flat[i * self.e] = int(c) % self.modulus
        return OKElem(self, tuple(flat))

    def from_json(self, data: Any) -> OKElem:
        """Parse an int or an f x e nested list (rows x^i, columns u^j)."""
        if isinstance(data, bool):
            raise SpecMismatch("booleans are not ring elements")
        if isinstance(data, int):
            return self.from_int(data)
        if not isinstance(data, list) or len(data) != self.f:
            raise ShapeMismatch(f"element must be an int or a {self.f}x{self.e} array")
        flat: list[int] = []
        for row in data:
            if not isinstance(row, list) or len(row) != self.e:
                raise ShapeMismatch(f"element rows must have length {self.e}")
            flat.extend(int(c) for c in row)
        return self.element(flat)

    def witt(self) -> RingSpec:
        """The unramified subring W(k), as a RingSpec with E = u - p."""
        return RingSpec(
            p=self.p,
            residue_min_poly=self.residue_min_poly,
            eisenstein=(-self.p, 1),
            precision=self.precision,
            assume_linear_disjoint=self.assume_linear_disjoint,
        )

    def with_precision(self, precision: int) -> RingSpec:
        return RingSpec(
            p=self.p,
            residue_min_poly=self.residue_min_poly,
            eisenstein=self.eisenstein,
            precision=precision,
            assume_linear_disjoint=self.assume_linear_disjoint,
        )

    # -- Derived constants ----------------------------------------------

    @cached_property
    def alpha(self) -> OKElem:
        """E'(pi)."""
        return eval_E_derivative(self)

    @cached_property
    def p_over_pi(self) -> OKElem:
        # E(pi) = 0 gives pi * (pi^{e-1} + ... + a_1) = -a_0 = -p * w
        w_inv = pow(self.eisenstein[0] // self.p, -1, self.modulus)
        flat = [0] * (self.f * self.e)
        for t in range(self.e):
            flat[t] = (-self.eisenstein[t + 1] * w_inv) % self.modulus
        return OKElem(self, tuple(flat))

    @cached_property
    def frobenius_x(self) -> OKElem:
        """Frobenius lift of x: the root of h congruent to x^p mod p."""
        x = self.x()
        if self.f == 1:
            return x
        y = x ** self.p
        for _ in range(self.precision.bit_length() + 2):
            hy = _eval_int_poly(self.residue_min_poly, y)
            if hy.is_zero():
                break
            dh = _eval_int_poly(_int_derivative(self.residue_min_poly), y)
            y = y - hy * dh.inverse()
        if not _eval_int_poly(self.residue_min_poly, y).is_zero():
            raise PrecisionExhausted("Frobenius lift did not converge")
        return y

    # -- Serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "f": self.f,
            "residue_min_poly": list(self.residue_min_poly),
            "eisenstein": list(self.eisenstein),
            "precision": self.precision,
            "assume_linear_disjoint": self.linear_disjoint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RingSpec:
        try:
            spec = cls(
                p=int(data["p"]),
                residue_min_poly=tuple(data.get("residue_min_poly", (0, 1))),
                eisenstein=tuple(data["eisenstein"]),
                precision=int(data["precision"]),
                assume_linear_disjoint=data.get("assume_linear_disjoint"),
            )
        except KeyError as e:
            raise SpecMismatch(f"ring is missing field {e.args[0]!r}")
        except (TypeError, ValueError) as e:
            raise SpecMismatch(f"malformed ring: {e}")
        if "f" in data and int(data["f"]) != spec.f:
            raise SpecMismatch(f"f = {data['f']} disagrees with residue_min_poly of degree {spec.f}")
        return spec

    def __repr__(self) -> str:
        return (
            f"RingSpec(p={self.p}, f={self.f}, e={self.e}, "
            f"h={list(self.residue_min_poly)}, E={list(self.eisenstein)}, N={self.precision})"
        )


def _int_derivative(coeffs: Sequence[int]) -> tuple[int, ...]:
    return tuple(i * c for i, c in enumerate(coeffs))[1:] or (0,)


def _eval_int_poly(coeffs: Sequence[int], y: OKElem) -> OKElem:
    """Horner evaluation of an integer polynomial at an element."""
    acc = y.spec.zero()
    for c in reversed(coeffs):
        acc = acc * y + c
    return acc


def _residue_inverse(spec: RingSpec, r: Sequence[int]) -> tuple[int, ...]:
    p = spec.p
    if spec.f == 1:
        return (pow(r[0], -1, p),)
    inv = _gf_poly(r, p).invert(_gf_poly(spec.residue_min_poly, p))
    coeffs = [int(c) % p for c in reversed(inv.all_coeffs())]
    return tuple(coeffs + [0] * (spec.f - len(coeffs)))


@dataclass(frozen=True, slots=True)
class OKElem:
    """An element of O_K mod p^N.

    coeffs is the row-major f x e array: coeffs[i*e + j] multiplies x^i u^j.
    """

    spec: RingSpec
    coeffs: tuple[int, ...]

    # -- Coercion -------------------------------------------------------

    def _coerce(self, other: Any) -> OKElem | None:
        if isinstance(other, OKElem):
            if other.spec is not self.spec and other.spec != self.spec:
                raise SpecMismatch(f"cannot combine elements of {self.spec!r} and {other.spec!r}")
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return self.spec.from_int(other)
        return None

    # -- Arithmetic -----------------------------------------------------

    def __add__(self, other: Any) -> OKElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        m = self.spec.modulus
        return OKElem(self.spec, tuple((a + b) % m for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other: Any) -> OKElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        m = self.spec.modulus
        return OKElem(self.spec, tuple((a - b) % m for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other: Any) -> OKElem:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self) -> OKElem:
        m = self.spec.modulus
        return OKElem(self.spec, tuple((-a) % m for a in self.coeffs))

    def scale(self, n: int) -> OKElem:
        m = self.spec.modulus
        return OKElem(self.spec, tuple((a * n) % m for a in self.coeffs))

    def __mul__(self, other: Any) -> OKElem:
        if isinstance(other, int) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, OKElem):
            return NotImplemented
        o = self._coerce(other)
        spec = self.spec
        m = spec.modulus
        if len(self.coeffs) == 1:
            return OKElem(spec, ((self.coeffs[0] * o.coeffs[0]) % m,))
        return OKElem(spec, _multiply(spec, self.coeffs, o.coeffs))

    def __rmul__(self, other: Any) -> OKElem:
        if isinstance(other, int) and not isinstance(other, bool):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> OKElem:
        if n < 0:
            return self.inverse() ** (-n)
        result = self.spec.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- Valuation and residues -----------------------------------------

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self) -> int:
        """pi-adic valuation; spec.horizon stands for '>= eN' (zero mod p^N)."""
        spec = self.spec
        e, p = spec.e, spec.p
        best = spec.horizon
        for idx, c in enumerate(self.coeffs):
            if c:
                v = e * vp_int(c, p) + idx % e
                if v < best:
                    best = v
        return best

    def residue(self) -> tuple[int, ...]:
        """Image in k = F_p[x]/(h), as f coefficients."""
        e, p = self.spec.e, self.spec.p
        return tuple(self.coeffs[i * e] % p for i in range(self.spec.f))

    def is_unit(self) -> bool:
        return any(self.residue())

    def inverse(self) -> OKElem:
        """Newton/Hensel lift of the residue-field inverse."""
        if not self.is_unit():
            raise NotAUnit(f"element of valuation {self.valuation()} is not a unit")
        spec = self.spec
        y = spec.from_witt(_residue_inverse(spec, self.residue()))
        # 1 - a*y' = (1 - a*y)^2, so the error valuation doubles each round
        for _ in range(spec.horizon.bit_length() + 1):
            y = y * (2 - self * y)
        if self * y != spec.one():
            raise PrecisionExhausted("Newton inversion failed to converge")
        return y

    def divide_by_pi(self) -> OKElem:
        """Exact division of this representative by pi; needs valuation >= 1."""
        spec = self.spec
        f, e, p = spec.f, spec.e, spec.p
        w0 = [self.coeffs[i * e] for i in range(f)]
        if any(c % p for c in w0):
            raise ArithmeticError("element is not divisible by pi")
        shifted = [0] * (f * e)
        for i in range(f):
            for j in range(1, e):
                shifted[i * e + j - 1] = self.coeffs[i * e + j]
        quotient = OKElem(spec, tuple(shifted))
        return quotient + spec.from_witt([c // p for c in w0]) * spec.p_over_pi

    def divide_by_pi_power(self, k: int) -> OKElem:
        result = self
        for _ in range(k):
            result = result.divide_by_pi()
        return result

    def frobenius(self) -> OKElem:
        """Frobenius on the W(k) coefficients, fixing u."""
        spec = self.spec
        if spec.f == 1:
            return self
        f, e = spec.f, spec.e
        sigma_x = spec.frobenius_x
        result = spec.zero()
        power = spec.one()
        for i in range(f):
            row = [0] * (f * e)
            row[:e] = self.coeffs[i * e : (i + 1) * e]
            result = result + power * OKElem(spec, tuple(row))
            power = power * sigma_x
        return result

    # -- Plumbing -------------------------------------------------------

    @property
    def ring(self) -> ScalarRing:
        return ScalarRing(self.spec)

    def to_json(self) -> list[list[int]]:
        e = self.spec.e
        return [list(self.coeffs[i * e : (i + 1) * e]) for i in range(self.spec.f)]

    def __repr__(self) -> str:
        if len(self.coeffs) == 1:
            return f"OKElem({self.coeffs[0]})"
        return f"OKElem({self.to_json()})"


def _multiply(spec: RingSpec, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    f, e, m = spec.f, spec.e, spec.modulus
    prod = [[0] * (2 * e - 1) for _ in range(2 * f - 1)]
    for ia in range(f):
        for ja in range(e):
            ca = a[ia * e + ja]
            if not ca:
                continue
            for ib in range(f):
                row = prod[ia + ib]
                for jb in range(e):
                    cb = b[ib * e + jb]
                    if cb:
                        row[ja + jb] += ca * cb

    E = spec.eisenstein
    for row in prod:
        for k in range(2 * e - 2, e - 1, -1):
            c = row[k]
            if c:
                row[k] = 0
                for t in range(e):
                    row[k - e + t] -= c * E[t]

    h = spec.residue_min_poly
    for i in range(2 * f - 2, f - 1, -1):
        top = prod[i]
        for t in range(f):
            target = prod[i - f + t]
            ht = h[t]
            if ht:
                for j in range(e):
                    target[j] -= top[j] * ht

    return tuple(prod[i][j] % m for i in range(f) for j in range(e))


# -- Coefficient ring descriptors ----------------------------------------


@dataclass(frozen=True)
class ScalarRing:
    """Coefficients are single elements of O_K."""

    spec: RingSpec

    def zero(self) -> OKElem:
        return self.spec.zero()

    def one(self) -> OKElem:
        return self.spec.one()


@dataclass(frozen=True)
class MatrixRing:
    """Coefficients are nrows x ncols matrices over O_K."""

    spec: RingSpec
    nrows: int
    ncols: int

    def zero(self) -> OKMatrix:
        return OKMatrix.zero(self.spec, self.nrows, self.ncols)

    def one(self) -> OKMatrix:
        if self.nrows != self.ncols:
            raise ShapeMismatch("non-square matrix ring has no identity")
        return OKMatrix.identity(self.spec, self.nrows)


# -- Matrices ------------------------------------------------------------


@dataclass(frozen=True)
class OKMatrix:
    """Immutable matrix over O_K; column vectors are n x 1 matrices."""

    spec: RingSpec
    rows: tuple[tuple[OKElem, ...], ...]

    @classmethod
    def zero(cls, spec: RingSpec, nrows: int, ncols: int) -> OKMatrix:
        z = spec.zero()
        return cls(spec, tuple(tuple(z for _ in range(ncols)) for _ in range(nrows)))

    @classmethod
    def identity(cls, spec: RingSpec, n: int) -> OKMatrix:
        z, o = spec.zero(), spec.one()
        return cls(spec, tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)))

    @classmethod
    def from_rows(cls, spec: RingSpec, rows: Sequence[Sequence[OKElem | int]]) -> OKMatrix:
        out = []
        width = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != width:
                raise ShapeMismatch("ragged matrix rows")
            out.append(tuple(x if isinstance(x, OKElem) else spec.from_int(x) for x in row))
        return cls(spec, tuple(out))

    @classmethod
    def column(cls, spec: RingSpec, entries: Sequence[OKElem | int]) -> OKMatrix:
        return cls.from_rows(spec, [[x] for x in entries])

    @classmethod
    def diagonal(cls, spec: RingSpec, entries: Sequence[OKElem | int]) -> OKMatrix:
        n = len(entries)
        z = spec.zero()
        rows = []
        for i, x in enumerate(entries):
            row = [z] * n
            row[i] = x if isinstance(x, OKElem) else spec.from_int(x)
            rows.append(tuple(row))
        return cls(spec, tuple(rows))

    @classmethod
    def from_json(cls, spec: RingSpec, data: Any) -> OKMatrix:
        if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
            raise ShapeMismatch("matrix must be a non-empty list of rows")
        return cls.from_rows(spec, [[spec.from_json(x) for x in row] for row in data])

    # -- Shape ----------------------------------------------------------

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @property
    def ring(self) -> MatrixRing:
        return MatrixRing(self.spec, self.nrows, self.ncols)

    def __getitem__(self, ij: tuple[int, int]) -> OKElem:
        i, j = ij
        return self.rows[i][j]

    def column_at(self, j: int) -> OKMatrix:
        return OKMatrix(self.spec, tuple((row[j],) for row in self.rows))

    def entries(self) -> list[OKElem]:
        """Entries in row-major order."""
        return [x for row in self.rows for x in row]

    # -- Arithmetic -----------------------------------------------------

    def _check_same_shape(self, other: OKMatrix) -> None:
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ShapeMismatch(
                f"shape {self.nrows}x{self.ncols} vs {other.nrows}x{other.ncols}"
            )

    def __add__(self, other: Any) -> OKMatrix:
        if not isinstance(other, OKMatrix):
            return NotImplemented
        self._check_same_shape(other)
        return OKMatrix(
            self.spec,
            tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)),
        )

    def __sub__(self, other: Any) -> OKMatrix:
        if not isinstance(other, OKMatrix):
            return NotImplemented
        self._check_same_shape(other)
        return OKMatrix(
            self.spec,
            tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)),
        )

    def __neg__(self) -> OKMatrix:
        return OKMatrix(self.spec, tuple(tuple(-a for a in row) for row in self.rows))

    def scale(self, n: int) -> OKMatrix:
        return OKMatrix(self.spec, tuple(tuple(a.scale(n) for a in row) for row in self.rows))

    def __mul__(self, other: Any) -> OKMatrix:
        if isinstance(other, int) and not isinstance(other, bool):
            return self.scale(other)
        if isinstance(other, OKElem):
            return OKMatrix(self.spec, tuple(tuple(a * other for a in row) for row in self.rows))
        if not isinstance(other, OKMatrix):
            return NotImplemented
        if self.ncols != other.nrows:
            raise ShapeMismatch(
                f"cannot multiply {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}"
            )
        cols = list(zip(*other.rows))
        z = self.spec.zero()
        out = []
        for row in self.rows:
            new_row = []
            for col in cols:
                acc = z
                for a, b in zip(row, col):
                    if a.is_zero() or b.is_zero():
                        continue
                    acc = acc + a * b
                new_row.append(acc)
            out.append(tuple(new_row))
        return OKMatrix(self.spec, tuple(out))

    def __rmul__(self, other: Any) -> OKMatrix:
        if isinstance(other, int) and not isinstance(other, bool):
            return self.scale(other)
        if isinstance(other, OKElem):
            return OKMatrix(self.spec, tuple(tuple(other * a for a in row) for row in self.rows))
        return NotImplemented

    def __pow__(self, n: int) -> OKMatrix:
        result = OKMatrix.identity(self.spec, self.nrows)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def add_scalar(self, c: OKElem | int) -> OKMatrix:
        """self + c*I."""
        c = c if isinstance(c, OKElem) else self.spec.from_int(c)
        return OKMatrix(
            self.spec,
            tuple(
                tuple(a + c if i == j else a for j, a in enumerate(row))
                for i, row in enumerate(self.rows)
            ),
        )

    # -- Predicates -----------------------------------------------------

    def is_zero(self) -> bool:
        return all(a.is_zero() for row in self.rows for a in row)

    def valuation(self) -> int:
        """Minimum entry valuation (spec.horizon for the zero matrix)."""
        return min((a.valuation() for row in self.rows for a in row), default=self.spec.horizon)

    def residue_is_zero(self) -> bool:
        return self.valuation() >= 1

    def is_strictly_upper(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.nrows) for j in range(min(i + 1, self.ncols)))

    def to_json(self) -> list:
        return [[a.to_json() for a in row] for row in self.rows]

    def __repr__(self) -> str:
        return f"OKMatrix({[[a for a in row] for row in self.rows]})"


# -- Operations ----------------------------------------------------------


def ok_arith(a: OKElem, b: OKElem, op: Literal["add", "sub", "mul"]) -> OKElem:
    """Exact a (op) b mod p^N."""
    if a.spec != b.spec:
        raise SpecMismatch("operands belong to different rings")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def ok_valuation(a: OKElem) -> int:
    return a.valuation()


def ok_invert(a: OKElem) -> OKElem:
    return a.inverse()


def format_valuation(v: int, spec: RingSpec) -> str:
    return f">= {spec.horizon}" if v >= spec.horizon else str(v)


def eval_E_derivative(spec: RingSpec) -> OKElem:
    """alpha = E'(pi) = sum i a_i pi^{i-1}."""
    result = spec.zero()
    power = spec.one()
    pi = spec.pi()
    for i in range(1, spec.e + 1):
        result = result + power.scale(i * spec.eisenstein[i])
        power = power * pi
    return result


# -- Smith normal form ---------------------------------------------------


@dataclass
class SNFResult:
    """U * A * V = diag(pi^{d_1}, pi^{d_2}, ...) mod p^N, d_1 <= d_2 <= ...

    Diagonal positions past the rank hold zero (valuation >= horizon).
    """

    spec: RingSpec
    nrows: int
    ncols: int
    elementary_divisor_valuations: list[int]
    rank: int
    U: OKMatrix
    V: OKMatrix
    U_inv: OKMatrix
    diagonal: OKMatrix

    @property
    def free_rank_kernel(self) -> int:
        return self.ncols - self.rank

    @property
    def free_rank_cokernel(self) -> int:
        return self.nrows - self.rank

    @property
    def torsion_valuations(self) -> list[int]:
        return [d for d in self.elementary_divisor_valuations[: self.rank] if d > 0]

    def kernel_basis(self) -> list[OKMatrix]:
        """Columns of V spanning the kernel (as column vectors)."""
        return [self.V.column_at(k) for k in range(self.rank, self.ncols)]

    def to_dict(self) -> dict:
        return {
            "elementary_divisor_valuations": [
                format_valuation(d, self.spec) for d in self.elementary_divisor_valuations
            ],
            "rank": self.rank,
            "free_rank_kernel": self.free_rank_kernel,
            "free_rank_cokernel": self.free_rank_cokernel,
            "torsion_valuations": self.torsion_valuations,
        }


def smith_normal_form(A: OKMatrix, guard: int = 0) -> SNFResult:
    """Smith normal form over the DVR O_K.

    Pivots on a minimal-valuation entry (ties: lowest row, then lowest
    column).  Elimination divides by the pivot's pi-power exactly on
    representatives, so U*A*V equals the diagonal exactly mod p^N.

    guard > 0 raises PrecisionExhausted when a nonzero pivot lies within
    guard of the horizon.
    """
    spec = A.spec
    horizon = spec.horizon
    m, n = A.nrows, A.ncols
    T = [list(row) for row in A.rows]
    U = [list(row) for row in OKMatrix.identity(spec, m).rows]
    U_inv = [list(row) for row in OKMatrix.identity(spec, m).rows]
    V = [list(row) for row in OKMatrix.identity(spec, n).rows]
    vals = [[a.valuation() for a in row] for row in T]
    divisors: list[int] = []
    rank = 0

    for t in range(min(m, n)):
        best = (horizon, -1, -1)
        for i in range(t, m):
            for j in range(t, n):
                if vals[i][j] < best[0]:
                    best = (vals[i][j], i, j)
        d, r, c = best
        if d >= horizon:
            break
        if guard and d >= horizon - guard:
            raise PrecisionExhausted(
                f"pivot valuation {d} is within {guard} of the horizon {horizon}"
            )

        # bring the pivot to (t, t)
        if r != t:
            T[t], T[r] = T[r], T[t]
            vals[t], vals[r] = vals[r], vals[t]
            U[t], U[r] = U[r], U[t]
            for row in U_inv:
                row[t], row[r] = row[r], row[t]
        if c != t:
            for row in T:
                row[t], row[c] = row[c], row[t]
            for row in vals:
                row[t], row[c] = row[c], row[t]
            for row in V:
                row[t], row[c] = row[c], row[t]

        pivot = T[t][t]
        unit_inv = pivot.divide_by_pi_power(d).inverse()

        # normalize the pivot row so the diagonal entry is exactly pi^d
        T[t] = [a * unit_inv for a in T[t]]
        U[t] = [a * unit_inv for a in U[t]]
        unit = unit_inv.inverse()
        for row in U_inv:
            row[t] = row[t] * unit

        for i in range(t + 1, m):
            if T[i][t].is_zero():
                continue
            factor = T[i][t].divide_by_pi_power(d)
            T[i] = [a - factor * b for a, b in zip(T[i], T[t])]
            U[i] = [a - factor * b for a, b in zip(U[i], U[t])]
            for row in U_inv:
                row[t] = row[t] + factor * row[i]
            vals[i] = [a.valuation() for a in T[i]]

        for j in range(t + 1, n):
            if T[t][j].is_zero():
                continue
            factor = T[t][j].divide_by_pi_power(d)
            for i in range(m):
                T[i][j] = T[i][j] - factor * T[i][t]
                vals[i][j] = T[i][j].valuation()
            for row in V:
                row[j] = row[j] - factor * row[t]

        divisors.append(d)
        rank += 1

    divisors.extend([horizon] * (min(m, n) - rank))
    logger.debug("SNF of %dx%d matrix: divisors %s", m, n, divisors)
    return SNFResult(
        spec=spec,
        nrows=m,
        ncols=n,
        elementary_divisor_valuations=divisors,
        rank=rank,
        U=OKMatrix(spec, tuple(tuple(r) for r in U)),
        V=OKMatrix(spec, tuple(tuple(r) for r in V)),
        U_inv=OKMatrix(spec, tuple(tuple(r) for r in U_inv)),
        diagonal=OKMatrix(spec, tuple(tuple(r) for r in T)),
    )
