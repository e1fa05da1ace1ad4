"""Tests for the self-test runner."""

import pytest

from prismkit import acceptance
from prismkit.acceptance import (
    CRITERIA,
    DESK_LAMBDA_DEGREE,
    Scale,
    desk_specs,
    galois_specs,
    run_selftest,
    two_adic_spec,
)
from prismkit.config import RunConfig
from prismkit.errors import CocycleViolation, TruncationLoss


@pytest.fixture
def config():
    return RunConfig(degree_cap=5, u_cap=12, m_cap=4, seed=3, threads=2)


class TestSetup:
    """Test the desk rings and scales."""

    def test_desk_specs(self):
        specs = desk_specs(4)
        assert [s.e for s in specs] == [1, 1, 3, 2]
        assert all(s.precision == 4 for s in specs)

    def test_galois_specs_drop_zeta_ring(self):
        assert len(galois_specs()) == 3

    def test_two_adic_spec(self):
        spec = two_adic_spec(4)
        assert (spec.p, spec.e) == (2, 1)
        assert spec.linear_disjoint

    def test_lambda_degree_defaults_to_desk_value(self, config):
        assert acceptance._Context(config, Scale.quick()).lambda_degree == DESK_LAMBDA_DEGREE == 8
        capped = RunConfig(degree_cap=5, lambda_degree_cap=4)
        assert acceptance._Context(capped, Scale.quick()).lambda_degree == 4

    def test_quick_scale(self):
        assert Scale.quick().corpus < Scale().corpus

    def test_criteria_are_numbered(self):
        names = [name for name, _ in CRITERIA]
        assert names == sorted(names)
        assert len(names) == 11


class TestRunSelftest:
    """Test running criteria and merging their results."""

    def test_selected_criteria_pass(self, config):
        only = ["01_equivalence_roundtrip", "10_weights_fl", "11_negative_controls"]
        report = run_selftest(config, quick=True, only=only)
        assert [c.name for c in report.sorted_checks()] == only
        assert report.exit_code == 0
        assert report.seed == 3

    def test_failure_is_reported(self, config, monkeypatch):
        def broken(ctx):
            raise CocycleViolation("A_2 perturbed", index=2)

        monkeypatch.setattr(acceptance, "CRITERIA", [("99_broken", broken)])
        report = run_selftest(config, quick=True)
        assert report.exit_code == 1
        assert report.checks[0].verdict.startswith("CocycleViolation")

    def test_precision_exhaustion(self, config, monkeypatch):
        def truncated(ctx):
            raise TruncationLoss("phi(u^9) = u^27 exceeds u_cap = 24", index=9)

        monkeypatch.setattr(acceptance, "CRITERIA", [("99_truncated", truncated)])
        report = run_selftest(config, quick=True)
        assert report.exit_code == 3
        assert "seconds" in report.checks[0].details

    def test_deterministic(self, config):
        only = ["01_equivalence_roundtrip"]
        a = run_selftest(config, quick=True, only=only).to_dict()
        b = run_selftest(config, quick=True, only=only).to_dict()
        assert a["checks"][0]["status"] == b["checks"][0]["status"] == "pass"

    def test_equivalence_covers_p_equals_2(self, config):
        report = run_selftest(config, quick=True, only=["01_equivalence_roundtrip"])
        assert report.checks[0].details["primes"] == [2, 3, 5]
