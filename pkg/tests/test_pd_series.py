"""Tests for truncated divided-power series and the face maps."""

import pytest

from prismkit.base_rings import OKMatrix, ScalarRing
from prismkit.errors import IndexOutOfRange, NonzeroConstantTerm, ShapeMismatch
from prismkit.pd_series import (
    PDSeries,
    degeneracy,
    derivative,
    embed,
    face_map,
    matrix_binomial_power,
    pd_affine_power,
    pd_divided_powers,
    pd_invert_affine,
    pd_mul,
    pd_power_factor,
    pd_substitute,
)

D = 5


def mono(spec, n, c=1):
    return PDSeries.monomial(spec.from_int(c), (n,), D)


class TestMultiplication:
    """Test the divided-power product."""

    def test_binomial_rule(self, q3):
        assert pd_mul(mono(q3, 1), mono(q3, 1)) == mono(q3, 2, 2)
        assert pd_mul(mono(q3, 2), mono(q3, 3)) == mono(q3, 5, 10)

    def test_truncates_at_cap(self, q3):
        assert pd_mul(mono(q3, 3), mono(q3, 3)).is_zero()

    def test_power_factor(self):
        assert pd_power_factor((1,), 2) == 1
        assert pd_power_factor((2,), 2) == 3
        assert pd_power_factor((1, 1), 2) == 2

    def test_variable_mismatch(self, q3):
        two_vars = PDSeries.monomial(q3.one(), (1, 0), D)
        with pytest.raises(ShapeMismatch):
            pd_mul(mono(q3, 1), two_vars)

    def test_matrix_times_column(self, q3):
        A = OKMatrix.from_rows(q3, [[1, 1], [0, 1]])
        v = OKMatrix.column(q3, [0, 1])
        prod = pd_mul(PDSeries.monomial(A, (1,), D), PDSeries.monomial(v, (1,), D))
        assert prod[(2,)] == OKMatrix.column(q3, [2, 2])


class TestClosedForms:
    """Test the affine series and the matrix binomial power."""

    def test_affine_inverse(self, q3):
        alpha = q3.from_int(2)
        inv = pd_invert_affine(alpha, 0, 1, D)
        assert inv[(3,)] == q3.from_int(6 * 8)
        one = PDSeries.constant(q3.one(), 1, D)
        assert pd_mul(pd_affine_power(alpha, 1, 0, 1, D), inv) == one

    def test_affine_powers_compose(self, q3):
        alpha = q3.from_int(2)
        a = pd_affine_power(alpha, -2, 0, 1, D)
        b = pd_affine_power(alpha, 2, 0, 1, D)
        assert pd_mul(a, b) == PDSeries.constant(q3.one(), 1, D)

    def test_matrix_binomial_recursion(self, q3):
        A = OKMatrix.from_rows(q3, [[3]])
        eps = matrix_binomial_power(A, q3.alpha, degree_cap=D)
        assert degeneracy(eps) == OKMatrix.identity(q3, 1)
        assert eps[(1,)] == A
        assert eps[(3,)] == OKMatrix.from_rows(q3, [[3 * 4 * 5]])


class TestSubstitution:
    """Test divided powers of series and substitution."""

    def test_divided_powers_of_scaled_variable(self, q3):
        powers = pd_divided_powers(mono(q3, 1, 2), 3)
        assert powers[2] == mono(q3, 2, 4)
        assert powers[3] == mono(q3, 3, 8)

    def test_constant_term_rejected(self, q3):
        g = PDSeries.constant(q3.one(), 1, D) + mono(q3, 1)
        with pytest.raises(NonzeroConstantTerm):
            pd_divided_powers(g, 2)

    def test_substitute(self, q3):
        f = mono(q3, 2) + mono(q3, 1)
        assert pd_substitute(f, mono(q3, 1, 2)) == mono(q3, 2, 4) + mono(q3, 1, 2)


class TestReindexing:
    """Test derivative, degeneracy, embed and the face maps."""

    def test_derivative(self, q3):
        assert derivative(mono(q3, 3, 5)) == mono(q3, 2, 5)
        with pytest.raises(IndexOutOfRange):
            derivative(mono(q3, 1), var=1)

    def test_embed(self, q3):
        out = embed(mono(q3, 2), 3, [2])
        assert out[(0, 0, 2)] == q3.one()

    def test_inserting_faces(self, q3):
        f = mono(q3, 2)
        assert face_map(f, 1, q3.alpha)[(0, 2)] == q3.one()
        assert face_map(f, 2, q3.alpha)[(2, 0)] == q3.one()

    def test_face_i_skips_x_i(self, q3):
        x = mono(q3, 1)
        assert face_map(x, 1, q3.alpha) == PDSeries.monomial(q3.one(), (0, 1), D)
        assert face_map(x, 2, q3.alpha) == PDSeries.monomial(q3.one(), (1, 0), D)

    def test_zeroth_face_without_twist(self, q3):
        out = face_map(mono(q3, 1), 0, q3.zero())
        expected = PDSeries.build(ScalarRing(q3), 2, D, {(0, 1): q3.one(), (1, 0): -q3.one()})
        assert out == expected

    def test_face_index_range(self, q3):
        with pytest.raises(IndexOutOfRange):
            face_map(mono(q3, 1), 3, q3.alpha)
