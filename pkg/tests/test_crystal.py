"""Tests for crystals, admissibility and stratifications."""

import pytest

from prismkit.base_rings import OKMatrix
from prismkit.crystal import (
    CertifiedNilpotent,
    Crystal,
    Inconclusive,
    ResidueObstruction,
    build_stratification,
    check_nilpotent,
    exp_stratification,
    pair_from_stratification,
    perturb_coefficients,
    strat_coeffs,
    verify_alpha_zero_limit,
    verify_coefficient_cocycle,
    verify_cocycle,
    verify_face_cocycle,
)
from prismkit.errors import (
    CocycleViolation,
    NotAdmissible,
    NotAStratification,
    ShapeMismatch,
    SpecMismatch,
)
from prismkit.pd_series import PDSeries


@pytest.fixture
def obstructed(q9):
    """phi = x I over W(F_9); its residue product x^3 - x is a unit."""
    return Crystal(q9, OKMatrix.diagonal(q9, [q9.x()]))


class TestCrystal:
    """Test construction and serialization."""

    def test_dict_roundtrip(self, rank2_crystal):
        back = Crystal.from_dict(rank2_crystal.to_dict())
        assert back.matrix.to_json() == rank2_crystal.matrix.to_json()
        assert back.rank == 2

    def test_missing_matrix(self, q3_ring_dict):
        with pytest.raises(SpecMismatch, match="matrix"):
            Crystal.from_dict({"ring": q3_ring_dict})

    def test_rank_mismatch(self, q3_ring_dict):
        with pytest.raises(ShapeMismatch, match="rank"):
            Crystal.from_dict({"ring": q3_ring_dict, "rank": 2, "matrix": [[3]]})

    def test_non_square(self, q3):
        with pytest.raises(ShapeMismatch, match="square"):
            Crystal(q3, OKMatrix.from_rows(q3, [[1, 2]]))

    def test_rational_crystal_runs_on_its_lattice(self, q3):
        c = Crystal(q3, OKMatrix.from_rows(q3, [[3]]), denominator_exp=1)
        assert not c.is_integral
        assert c.lattice().denominator_exp == 0
        assert c.lattice().matrix == c.matrix
        eps = build_stratification(c, 4)
        assert eps == build_stratification(c.lattice(), 4)


class TestAdmissibility:
    """Test the nilpotency verdicts."""

    def test_certified(self, pi_crystal):
        # prod_{i<n} (3 + i) = (n + 2)! / 2 first reaches 3-valuation 4 at n = 7
        verdict = check_nilpotent(pi_crystal.matrix, pi_crystal.alpha)
        assert verdict == CertifiedNilpotent(n_star=7, attained_valuation=4)

    def test_budget_exhausted(self, pi_crystal):
        verdict = check_nilpotent(pi_crystal.matrix, pi_crystal.alpha, n_max=3)
        assert verdict == Inconclusive(budget=3)

    def test_residue_obstruction(self, obstructed):
        verdict = check_nilpotent(obstructed.matrix, obstructed.alpha)
        assert isinstance(verdict, ResidueObstruction)
        assert verdict.tag == "ResidueObstruction"

    def test_nilpotent_residue(self, rank2_crystal):
        verdict = check_nilpotent(rank2_crystal.matrix, rank2_crystal.alpha)
        assert isinstance(verdict, CertifiedNilpotent)

    def test_non_square(self, q3):
        with pytest.raises(ShapeMismatch):
            check_nilpotent(OKMatrix.from_rows(q3, [[1, 2]]), q3.alpha)


class TestStratification:
    """Test eps and its inverse construction."""

    def test_coefficients(self, pi_crystal, q3):
        eps = build_stratification(pi_crystal, 8)
        assert eps[(0,)] == OKMatrix.identity(q3, 1)
        assert eps[(2,)] == OKMatrix.from_rows(q3, [[12]])
        # A_7 = 9!/2 vanishes mod 3^4
        assert (7,) not in eps.coeffs
        assert (6,) in eps.coeffs

    def test_obstructed_crystal_has_none(self, obstructed):
        with pytest.raises(NotAdmissible):
            build_stratification(obstructed, 4)

    def test_roundtrip(self, rank2_crystal):
        eps = build_stratification(rank2_crystal, 6)
        back = pair_from_stratification(eps, rank2_crystal.alpha)
        assert back.matrix == rank2_crystal.matrix

    def test_tampered_series(self, rank2_crystal, q3):
        eps = build_stratification(rank2_crystal, 6)
        bumped = {**eps.coeffs, (3,): eps[(3,)] + OKMatrix.identity(q3, 2)}
        tampered = PDSeries.build(eps.ring, 1, 6, bumped)
        with pytest.raises(NotAStratification) as exc:
            pair_from_stratification(tampered, rank2_crystal.alpha)
        assert exc.value.index == 3


class TestCocycle:
    """Test the cocycle identities."""

    def test_holds(self, rank2_crystal):
        report = verify_cocycle(rank2_crystal, 5)
        assert report.margin == 4
        assert report.details["coefficient_identities"] == 6

    def test_perturbation_detected(self, rank2_crystal):
        coeffs = strat_coeffs(rank2_crystal, 10)
        with pytest.raises(CocycleViolation):
            verify_coefficient_cocycle(perturb_coefficients(coeffs, 2), rank2_crystal.alpha, 5)

    def test_needs_enough_coefficients(self, rank2_crystal):
        with pytest.raises(ShapeMismatch):
            verify_coefficient_cocycle(strat_coeffs(rank2_crystal, 4), rank2_crystal.alpha, 5)

    def test_face_identity_implies_degeneracy(self, rank2_crystal):
        eps = build_stratification(rank2_crystal, 5)
        report = verify_face_cocycle(eps, rank2_crystal.alpha, 5)
        assert report.details["degeneracy"] == "implied"

    def test_idempotent_constant_is_not_a_stratification(self, q3):
        # E * E = E, so the face identity holds, but E is not invertible
        E = OKMatrix.from_rows(q3, [[1, 0], [0, 0]])
        with pytest.raises(NotAStratification):
            verify_face_cocycle(PDSeries.constant(E, 1, 4), q3.alpha, 4)


class TestAlphaZeroLimit:
    """Test exp(A X) against the untwisted face maps."""

    def test_exp_coefficients(self, rank2_crystal):
        A = rank2_crystal.matrix
        eps = exp_stratification(rank2_crystal, 4)
        assert eps[(1,)] == A
        assert eps[(3,)] == A * A * A

    def test_cocycle_holds(self, rank2_crystal):
        assert verify_alpha_zero_limit(rank2_crystal, 5).margin == 4

    def test_twisted_series_fails_untwisted_faces(self, pi_crystal, q3):
        # (1 - X)^{-3} is not an exponential: A_2 = 12 but A^2 = 9
        eps = build_stratification(pi_crystal, 5)
        with pytest.raises(CocycleViolation):
            verify_face_cocycle(eps, q3.zero(), 5)
