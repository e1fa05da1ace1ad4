"""Tests for the q-calculus on truncated W(k)[[u, m]]."""

import pytest

from prismkit.errors import DivisionFailure, SpecMismatch, TruncationLoss
from prismkit.qcalc import (
    QCalcRing,
    d_q,
    formal_derivative_at_pi,
    nabla,
    phi_action,
    qint,
    specialize,
    tau_action,
    verify_dq_power_of_E,
    verify_q_identities,
)


@pytest.fixture
def ring(q3):
    return QCalcRing(q3, u_cap=12, m_cap=6)


class TestRing:
    """Test the distinguished elements."""

    def test_mu_and_xi(self, ring):
        assert ring.mu == ring.one_plus_m_power(3) - 1
        assert ring.xi * ring.m == ring.mu

    def test_qint(self, ring):
        assert qint(ring, 0).is_zero()
        assert qint(ring, 1) == ring.one()
        assert qint(ring, 2) == ring.mu + 2
        with pytest.raises(ValueError):
            qint(ring, -1)

    def test_truncation(self, ring):
        assert (ring.u**7 * ring.u**6).is_zero()
        assert ring.u.u_degree() == 1

    def test_different_rings_do_not_mix(self, ring, q9):
        other = QCalcRing(q9, u_cap=12, m_cap=6)
        with pytest.raises(SpecMismatch):
            ring.u + other.u

    def test_coefficients_live_in_witt_vectors(self, ram3):
        r = QCalcRing(ram3, u_cap=6, m_cap=3)
        with pytest.raises(SpecMismatch, match="W\\(k\\)"):
            r.element({(1, 0): ram3.pi()})


class TestOperators:
    """Test d_q, tau, phi and nabla on monomials."""

    def test_dq_of_power(self, ring):
        assert d_q(ring.u**2) == qint(ring, 2) * ring.u
        assert d_q(ring.const(5)).is_zero()

    def test_tau(self, ring):
        assert tau_action(ring.u) == (ring.mu + 1) * ring.u
        assert tau_action(ring.m) == ring.m

    def test_phi(self, ring):
        assert phi_action(ring.u) == ring.u**3
        assert phi_action(ring.m) == ring.mu

    def test_phi_truncation_loss(self, ring):
        with pytest.raises(TruncationLoss):
            phi_action(ring.u**5)

    def test_nabla_is_tau_minus_one_over_mu(self, ring):
        f = ring.u**3 + ring.u * 4
        assert ring.m * ring.u * nabla(f) == tau_action(f) - f

    def test_specialization(self, ring, q3):
        assert specialize(ring.u, q3) == q3.pi()
        assert formal_derivative_at_pi(ring.u**2, q3) == q3.pi() * 2
        with pytest.raises(SpecMismatch):
            formal_derivative_at_pi(ring.m, q3)


class TestIdentities:
    """Test the verified identity bundles."""

    def test_q_identities(self, ring):
        f = ring.from_u_poly([1, 2, 0, 1])
        g = ring.from_u_poly([5, 0, 1])
        report = verify_q_identities(f, g)
        assert "nabla_phi" in report.details["checked"]
        assert "specialization" in report.details["checked"]
        assert report.margin == ring.u_cap - 1

    def test_phi_identity_skipped_when_too_long(self, ring):
        f = ring.from_u_poly([0] * 6 + [1])
        report = verify_q_identities(f, ring.u)
        assert "nabla_phi" not in report.details["checked"]

    def test_q_identities_need_u_series(self, ring):
        with pytest.raises(SpecMismatch):
            verify_q_identities(ring.m, ring.u)

    @pytest.mark.parametrize("h", [1, 2, 3])
    def test_dq_power_of_E_unramified(self, ring, h):
        assert verify_dq_power_of_E(ring, h).details["h"] == h

    @pytest.mark.parametrize("h", [1, 2, 3])
    def test_dq_power_of_E_ramified(self, ram3, h):
        r = QCalcRing(ram3, u_cap=8, m_cap=6)
        assert verify_dq_power_of_E(r, h).margin == 8

    def test_power_too_large_for_cap(self, q3):
        r = QCalcRing(q3, u_cap=2, m_cap=4)
        with pytest.raises(DivisionFailure):
            verify_dq_power_of_E(r, 3)
