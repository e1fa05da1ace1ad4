"""Tests for exact O_K arithmetic, matrices and Smith normal form."""

import pytest

from prismkit.base_rings import OKMatrix, RingSpec, format_valuation, ok_arith, smith_normal_form
from prismkit.errors import NotAUnit, PrecisionExhausted, ShapeMismatch, SpecMismatch


class TestRingSpec:
    """Test ring validation and derived constants."""

    def test_shape(self, ram5):
        assert (ram5.e, ram5.f) == (3, 1)
        assert ram5.modulus == 125
        assert ram5.horizon == 9

    def test_rejects_composite_p(self):
        with pytest.raises(SpecMismatch, match="prime"):
            RingSpec(4, (0, 1), (-4, 1), 3)

    def test_rejects_reducible_residue_poly(self):
        with pytest.raises(SpecMismatch, match="reducible"):
            RingSpec(3, (0, 0, 1), (-3, 1), 3)

    def test_rejects_non_eisenstein(self):
        with pytest.raises(SpecMismatch, match="exactly 1"):
            RingSpec(3, (0, 1), (9, 1), 3)
        with pytest.raises(SpecMismatch, match="divisible by p"):
            RingSpec(3, (0, 1), (3, 1, 1), 3)

    def test_p2_needs_explicit_flag(self):
        with pytest.raises(SpecMismatch, match="assume_linear_disjoint"):
            RingSpec(2, (0, 1), (-2, 1), 3)
        assert RingSpec(2, (0, 1), (-2, 1), 3, assume_linear_disjoint=True).linear_disjoint

    def test_alpha(self, q3, ram5):
        assert q3.alpha == q3.one()
        # E' = 3u^2
        assert ram5.alpha == ram5.pi() ** 2 * 3
        assert ram5.alpha.valuation() == 2

    def test_dict_roundtrip(self, q9):
        back = RingSpec.from_dict(q9.to_dict())
        assert back.to_dict() == q9.to_dict()
        assert (back.e, back.f) == (q9.e, q9.f)

    def test_from_dict_missing_field(self):
        with pytest.raises(SpecMismatch, match="precision"):
            RingSpec.from_dict({"p": 3, "eisenstein": [-3, 1]})

    def test_from_dict_f_disagrees(self, q3_ring_dict):
        with pytest.raises(SpecMismatch, match="disagrees"):
            RingSpec.from_dict({**q3_ring_dict, "f": 2})


class TestOKElem:
    """Test element arithmetic and valuations."""

    def test_valuation_normalization(self, ram5):
        assert ram5.pi().valuation() == 1
        assert ram5.from_int(5).valuation() == 3
        assert ram5.zero().valuation() == ram5.horizon

    def test_pi_for_unramified(self, q3):
        assert q3.pi() == q3.from_int(3)

    def test_residue_generator(self, q9):
        x = q9.x()
        assert x * x == q9.from_int(-1)

    def test_inverse(self, ram5):
        a = ram5.one() + ram5.pi()
        assert a * a.inverse() == ram5.one()

    def test_inverse_in_unramified_extension(self, q9):
        a = q9.x() + 1
        assert a * a.inverse() == q9.one()

    def test_non_unit_has_no_inverse(self, ram5):
        with pytest.raises(NotAUnit):
            ram5.pi().inverse()

    def test_divide_by_pi_power(self, ram5):
        pi = ram5.pi()
        a = ram5.one() + pi
        assert (pi**2 * a).divide_by_pi_power(2) == a

    def test_frobenius_on_residue_generator(self, q9):
        assert q9.x().frobenius() == -q9.x()
        assert q9.from_int(7).frobenius() == q9.from_int(7)

    def test_mixing_rings_fails(self, q3, q9):
        with pytest.raises(SpecMismatch):
            q3.one() + q9.one()
        with pytest.raises(SpecMismatch):
            ok_arith(q3.one(), q9.one(), "add")

    def test_json_shapes(self, q9):
        assert q9.from_json([[2], [1]]) == q9.x() + 2
        with pytest.raises(ShapeMismatch):
            q9.from_json([[1, 2]])
        with pytest.raises(SpecMismatch, match="booleans"):
            q9.from_json(True)


class TestOKMatrix:
    """Test matrix arithmetic."""

    def test_identity_is_neutral(self, q3):
        A = OKMatrix.from_rows(q3, [[1, 2], [3, 4]])
        assert A * OKMatrix.identity(q3, 2) == A

    def test_add_scalar(self, q3):
        A = OKMatrix.from_rows(q3, [[1, 2], [3, 4]])
        assert A.add_scalar(1) == OKMatrix.from_rows(q3, [[2, 2], [3, 5]])

    def test_shape_mismatch(self, q3):
        A = OKMatrix.from_rows(q3, [[1, 2]])
        with pytest.raises(ShapeMismatch):
            A * A
        with pytest.raises(ShapeMismatch, match="ragged"):
            OKMatrix.from_rows(q3, [[1, 2], [3]])

    def test_valuation_and_structure(self, q3):
        N = OKMatrix.from_rows(q3, [[0, 3], [0, 0]])
        assert N.valuation() == 1
        assert N.residue_is_zero()
        assert N.is_strictly_upper()
        assert (N * N).is_zero()


class TestSmithNormalForm:
    """Test SNF over the DVR."""

    def test_full_rank_unit_determinant(self, q3):
        snf = smith_normal_form(OKMatrix.from_rows(q3, [[1, 2], [3, 4]]))
        assert snf.rank == 2
        assert snf.elementary_divisor_valuations == [0, 0]

    def test_torsion_and_kernel(self, q3):
        A = OKMatrix.from_rows(q3, [[3, 0], [0, 0]])
        snf = smith_normal_form(A)
        assert snf.rank == 1
        assert snf.elementary_divisor_valuations == [1, q3.horizon]
        assert snf.torsion_valuations == [1]
        (v,) = snf.kernel_basis()
        assert (A * v).is_zero()

    def test_transforms_reproduce_diagonal(self, q3):
        A = OKMatrix.from_rows(q3, [[3, 6], [9, 3]])
        snf = smith_normal_form(A)
        assert snf.U * A * snf.V == snf.diagonal
        assert snf.U * snf.U_inv == OKMatrix.identity(q3, 2)

    def test_guard_exhausts_near_horizon(self, q3):
        A = OKMatrix.from_rows(q3, [[9, 0], [0, 0]])
        assert smith_normal_form(A, guard=1).torsion_valuations == [2]
        with pytest.raises(PrecisionExhausted, match="within 2"):
            smith_normal_form(A, guard=2)

    def test_format_valuation(self, q3):
        assert format_valuation(2, q3) == "2"
        assert format_valuation(q3.horizon, q3) == ">= 4"
