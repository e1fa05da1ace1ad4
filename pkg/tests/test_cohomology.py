"""Tests for the Cech-Alexander complex, H^0/H^1 and preimages."""

import pytest

from prismkit.base_rings import OKMatrix
from prismkit.cohomology import (
    CechComplex,
    assignment_class,
    compute_h0_h1,
    cross_check_cohomology,
    in_rigidity_set,
    indices_of_degree,
    kernel_membership_d1,
    kernel_rigidity_check,
    image_couplings,
    preimage_general,
    preimage_s2,
    rho_and_rho_prime,
    verify_complex,
    verify_f_identities,
)
from prismkit.crystal import Crystal
from prismkit.errors import (
    ComplexViolation,
    DegreeOverflow,
    NotInKernel,
    PrecisionExhausted,
    RelationViolation,
    UnsupportedLevel,
)
from prismkit.sampling import random_boundary, random_ok_matrix, rng_for

D = 6


@pytest.fixture
def cx(rank2_crystal):
    return CechComplex(rank2_crystal, D)


@pytest.fixture
def cx1(pi_crystal):
    return CechComplex(pi_crystal, D)


class TestIndices:
    """Test multi-index helpers."""

    def test_indices_of_degree(self):
        assert indices_of_degree(2, 2) == [(0, 2), (1, 1), (2, 0)]
        assert indices_of_degree(0, 0) == [()]

    def test_rigidity_set(self):
        assert in_rigidity_set((1, 1))
        assert in_rigidity_set((0, 0, 1))
        assert not in_rigidity_set((0, 1))
        assert not in_rigidity_set((2, 1))


class TestH0H1:
    """Test cohomology via Smith normal form."""

    def test_torsion(self, pi_crystal):
        report = compute_h0_h1(pi_crystal)
        assert report.h0_rank == 0
        assert report.h1_free_rank == 0
        assert report.h1_torsion == [1]

    def test_kernel_and_free_cokernel(self, q3):
        c = Crystal(q3, OKMatrix.from_rows(q3, [[3, 0], [0, 0]]))
        report = compute_h0_h1(c)
        assert (report.h0_rank, report.h1_free_rank) == (1, 1)
        assert report.elementary_divisors == ["1", ">= 4"]
        assert len(report.h0_basis) == 1

    def test_to_dict(self, pi_crystal):
        d = compute_h0_h1(pi_crystal).to_dict()
        assert set(d) >= {"h0_rank", "h1_free_rank", "h1_torsion", "elementary_divisors"}

    def test_pivot_near_horizon_is_exhausted(self, q3):
        c = Crystal(q3, OKMatrix.from_rows(q3, [[27]]))
        with pytest.raises(PrecisionExhausted):
            compute_h0_h1(c)
        assert compute_h0_h1(c, guard=0).h1_torsion == [3]

    def test_rational_crystal_uses_lattice(self, q3):
        c = Crystal(q3, OKMatrix.from_rows(q3, [[3]]), denominator_exp=1)
        assert compute_h0_h1(c).h1_torsion == [1]
        assert CechComplex(c, D).crystal.is_integral


class TestComplex:
    """Test d o d = 0 and the supporting identities."""

    def test_d_squared_vanishes(self, cx):
        report = verify_complex(cx, 3)
        assert report.margin == D - 4
        assert report.details["inputs"] > 0

    def test_sign_flip_is_detected(self, rank2_crystal):
        broken = CechComplex(rank2_crystal, D, sign_flip=1)
        with pytest.raises(ComplexViolation):
            verify_complex(broken, 2)

    def test_degree_overflow(self, pi_crystal):
        small = CechComplex(pi_crystal, 3)
        with pytest.raises(DegreeOverflow):
            small.differential(small.zero(3))

    def test_f_identities(self, rank2_crystal):
        assert verify_f_identities(rank2_crystal, D).margin == D - 1

    def test_cross_check(self, cx1):
        report = cross_check_cohomology(cx1)
        assert report.details["torsion_classes"] == 1

    def test_rho(self, cx):
        _, report = rho_and_rho_prime(cx)
        assert report.margin == cx.margin(2)


class TestPreimages:
    """Test kernel membership and preimages of boundaries."""

    def test_kernel_membership_d1(self, cx):
        a1 = random_ok_matrix(cx.spec, rng_for(0, 1), cx.rank, 1)
        f = cx.cochain(1, dict(cx.F.right_mul(a1).coeffs))
        assert kernel_membership_d1(cx, f) == a1

    def test_kernel_membership_needs_zero_constant(self, cx):
        f = cx.cochain(1, {(0,): cx.basis_vector(0)})
        with pytest.raises(NotInKernel):
            kernel_membership_d1(cx, f)

    @pytest.mark.parametrize("k", range(3))
    def test_preimage_s2(self, cx, k):
        _, f = random_boundary(cx, 2, rng_for(k, 2))
        g = preimage_s2(cx, f)
        assert cx.differential(g).series.agrees_with(f.series, cx.margin(2))

    @pytest.mark.parametrize("k", range(2))
    def test_preimage_s3(self, cx, k):
        _, f = random_boundary(cx, 3, rng_for(k, 3))
        g, report = preimage_general(cx, 3, f)
        assert g.level == 2
        assert cx.differential(g).series.agrees_with(f.series, cx.margin(3))
        assert report.details["level"] == 3
        assert report.margin == cx.margin(3)
        zero = OKMatrix.zero(cx.spec, cx.rank, 1)
        for j in range(1, cx.margin(3)):
            assert g.coefficient((1, j)) == zero
            assert g.coefficient((0, j)) == f.coefficient((0, 0, j))

    def test_preimage_s4(self, rank2_crystal):
        cx = CechComplex(rank2_crystal, 7)
        _, f = random_boundary(cx, 4, rng_for(1, 4))
        g, report = preimage_general(cx, 4, f)
        assert g.level == 3
        assert cx.differential(g).series.agrees_with(f.series, cx.margin(4))
        assert report.details["rigidity_indices"] > 0

    def test_general_matches_s2_construction(self, cx):
        for k in range(20):
            _, f = random_boundary(cx, 2, rng_for(k, 20))
            g, _ = preimage_general(cx, 2, f)
            assert g.series.agrees_with(preimage_s2(cx, f).series, cx.margin(2))

    def test_worked_example_rank_one(self, q3):
        cx = CechComplex(Crystal(q3, OKMatrix.from_rows(q3, [[0]])), D)
        f = cx.differential(cx.cochain(1, {(1,): cx.basis_vector(0)}))
        g = preimage_s2(cx, f)
        for n, v in enumerate([0, 0, 80, 79, 75, 57]):
            assert g.coefficient((n,)) == OKMatrix.column(q3, [v])
        assert preimage_general(cx, 2, f)[0].coefficient((3,)) == OKMatrix.column(q3, [79])

    def test_assignment_classes(self):
        assert assignment_class((0, 0, 2)) == 0
        assert assignment_class((0, 2)) == 1
        assert assignment_class((0, 0)) == 1
        assert assignment_class((1, 2)) == 2
        assert assignment_class((1, 0)) == 2
        assert assignment_class((1, 0, 1)) == 3
        assert assignment_class((2, 0)) == 4

    def test_image_couplings(self):
        assert image_couplings((0, 1, 0)) == {(0, 0, 1): -1}
        assert image_couplings((1, 0, 1, 0)) == {(1, 0, 0, 1): -1}
        assert image_couplings((1, 2)) == {}

    def test_unsupported_level(self, cx):
        with pytest.raises(UnsupportedLevel):
            preimage_general(cx, 5, cx.zero(5))

    def test_non_cocycle_rejected(self, cx):
        f = cx.cochain(2, {(1, 0): cx.basis_vector(0)})
        with pytest.raises(NotInKernel):
            preimage_s2(cx, f)


class TestRigidity:
    """Test the coefficient relations of cocycles."""

    @pytest.mark.parametrize("level", [2, 3])
    def test_boundaries_satisfy_relations(self, cx, level):
        _, f = random_boundary(cx, level, rng_for(5, level))
        report = kernel_rigidity_check(cx, level, f)
        assert report.details["relations"] > 0

    def test_broken_relation(self, cx):
        _, f = random_boundary(cx, 2, rng_for(6, 0))
        bumped = dict(f.series.coeffs)
        bumped[(1, 0)] = f.coefficient((1, 0)) + cx.basis_vector(0)
        with pytest.raises(RelationViolation) as exc:
            kernel_rigidity_check(cx, 2, cx.cochain(2, bumped))
        assert exc.value.context["relation"] == "x1_constant"

    def test_level_one_unsupported(self, cx):
        with pytest.raises(UnsupportedLevel):
            kernel_rigidity_check(cx, 1, cx.zero(1))
