"""Deterministic random instances for the property suites.

Every generator takes a numpy Generator built from (seed, index) with the
counter-based Philox bit generator, so instance k of a suite does not depend
on how many instances came before it.
"""

from __future__ import annotations

import numpy as np

from .base_rings import OKElem, OKMatrix, RingSpec
from .cohomology import CechComplex, CechLevel, indices_up_to
from .crystal import Crystal
from .errors import SpecMismatch
from .qcalc import AinfLiteElem, QCalcRing
from .weights import QMatrix, WeightProfile


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _draw(rng: np.random.Generator, modulus: int, size: int) -> list[int]:
    # numpy integers are bounded by int64; p^N at desk scale fits comfortably
    return [int(x) for x in rng.integers(0, modulus, size=size)]


def random_ok(spec: RingSpec, rng: np.random.Generator, min_val: int = 0) -> OKElem:
    x = spec.element(_draw(rng, spec.modulus, spec.f * spec.e))
    return x * spec.pi() ** min_val if min_val else x


def random_ok_matrix(
    spec: RingSpec, rng: np.random.Generator, nrows: int, ncols: int, min_val: int = 0
) -> OKMatrix:
    return OKMatrix.from_rows(
        spec, [[random_ok(spec, rng, min_val) for _ in range(ncols)] for _ in range(nrows)]
    )


def random_strictly_upper(spec: RingSpec, rng: np.random.Generator, rank: int, bound: int = 5) -> OKMatrix:
    return OKMatrix.from_rows(
        spec,
        [[int(rng.integers(-bound, bound + 1)) if j > i else 0 for j in range(rank)] for i in range(rank)],
    )


def random_admissible_crystal(spec: RingSpec, rng: np.random.Generator, rank: int) -> Crystal:
    """A = pi * B + (strictly upper integer matrix); its residue product is nilpotent."""
    A = random_ok_matrix(spec, rng, rank, rank, min_val=1) + random_strictly_upper(spec, rng, rank)
    return Crystal(spec, A)


def mixed_kernel_crystal(spec: RingSpec, rng: np.random.Generator, rank: int) -> Crystal:
    """An admissible crystal whose first basis vector lies in ker(A)."""
    A = random_admissible_crystal(spec, rng, rank).matrix
    rows = [[A[i, j] if j else spec.zero() for j in range(rank)] for i in range(rank)]
    return Crystal(spec, OKMatrix.from_rows(spec, rows))


def residue_obstructed_crystal(spec: RingSpec, rank: int = 1) -> Crystal:
    """A = x * I with x a generator of W(k); needs a residue field bigger than F_p."""
    if spec.f < 2:
        raise SpecMismatch("a residue obstruction of this shape needs f >= 2")
    return Crystal(spec, OKMatrix.diagonal(spec, [spec.x()] * rank))


def random_level(cx: CechComplex, level: int, rng: np.random.Generator, degree: int | None = None) -> CechLevel:
    """Random cochain at `level` with coefficients up to total degree `degree` (default D)."""
    top = cx.D if degree is None else degree
    coeffs = {I: random_ok_matrix(cx.spec, rng, cx.rank, 1) for I in indices_up_to(level, top)}
    return cx.cochain(level, coeffs)


def random_boundary(cx: CechComplex, level: int, rng: np.random.Generator) -> tuple[CechLevel, CechLevel]:
    """(h, d(h)) with h random at level - 1."""
    h = random_level(cx, level - 1, rng)
    return h, cx.differential(h)


def random_u_series(ring: QCalcRing, rng: np.random.Generator, degree: int) -> AinfLiteElem:
    w = ring.w
    return ring.from_u_poly([w.element(_draw(rng, w.modulus, w.f)) for _ in range(degree + 1)])


def random_strictly_upper_q(ring: QCalcRing, rng: np.random.Generator, d: int) -> QMatrix:
    """Strictly upper d x d matrix over F_p[[m]] / (m^{m_cap+1})."""
    p = ring.p
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            if j <= i:
                row.append(ring.zero())
            else:
                coeffs = [int(c) for c in rng.integers(0, p, size=ring.m_cap + 1)]
                row.append(ring.element({(0, k): c for k, c in enumerate(coeffs)}))
        rows.append(row)
    return rows


def random_weights(rng: np.random.Generator, d: int, top: int) -> WeightProfile:
    return WeightProfile(tuple(sorted(int(x) for x in rng.integers(0, top + 1, size=d))))
