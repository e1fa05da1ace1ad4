"""Tests for the prismkit command line."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from prismkit import __version__
from prismkit.main import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def crystal_file(write_json, q3_ring_dict):
    return write_json("crystal.json", {"ring": q3_ring_dict, "rank": 1, "matrix": [[3]]})


@pytest.fixture
def rank2_file(write_json, q3_ring_dict):
    return write_json("rank2.json", {"ring": q3_ring_dict, "matrix": [[3, 1], [0, 3]]})


@pytest.fixture
def obstructed_file(write_json):
    """phi = x over W(F_9); x is entered as its f x e coefficient grid."""
    ring = {"p": 3, "residue_min_poly": [1, 0, 1], "eisenstein": [-3, 1], "precision": 4}
    return write_json("obstructed.json", {"ring": ring, "matrix": [[[[0], [1]]]]})


def run_json(runner, args):
    result = runner.invoke(cli, [*args, "--json"])
    return result, json.loads(result.output)


def statuses(payload):
    return {c["name"]: c["status"] for c in payload["checks"]}


class TestGroup:
    """Test the top-level group."""

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self, runner):
        result = runner.invoke(cli, ["--help"])
        for name in ("check", "cohomology", "galois-cocycle", "qcalc-verify", "fl-check", "selftest"):
            assert name in result.output


class TestCheck:
    """Test the check command and its exit codes."""

    def test_passes(self, runner, crystal_file):
        result, payload = run_json(runner, ["check", crystal_file, "-D", "6"])
        assert result.exit_code == 0
        assert payload["results"]["verdict"] == "CertifiedNilpotent"
        assert statuses(payload) == {"admissibility": "pass", "stratification": "pass", "cocycle": "pass"}
        assert crystal_file in payload["input_hashes"]

    def test_zero_crystal_passes(self, runner, write_json, q3_ring_dict):
        zero = write_json("zero.json", {"ring": q3_ring_dict, "matrix": [[0]]})
        result = runner.invoke(cli, ["check", zero, "-D", "5"])
        assert result.exit_code == 0

    def test_obstructed_fails(self, runner, obstructed_file):
        result, payload = run_json(runner, ["check", obstructed_file])
        assert result.exit_code == 1
        assert payload["results"]["verdict"] == "ResidueObstruction"

    def test_budget_exhausted(self, runner, crystal_file):
        result, payload = run_json(runner, ["check", crystal_file, "--n-max", "3"])
        assert result.exit_code == 3
        assert payload["results"]["verdict"] == "Inconclusive"

    def test_malformed_json(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"ring": ')
        result = runner.invoke(cli, ["check", str(bad)])
        assert result.exit_code == 2

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["check", str(tmp_path / "absent.json")])
        assert result.exit_code == 2

    def test_text_output(self, runner, crystal_file):
        result = runner.invoke(cli, ["check", crystal_file, "-D", "4"])
        assert result.exit_code == 0
        assert "admissibility" in result.output

    def test_rational_crystal_checked_on_lattice(self, runner, write_json, q3_ring_dict):
        rational = write_json("rational.json", {"ring": q3_ring_dict, "matrix": [[3]], "denominator_exp": 1})
        for args in (
            ["check", rational, "-D", "6"],
            ["cohomology", rational, "-D", "6", "--smax", "2", "--samples", "1"],
            ["weights-check", rational, "--weights", "0"],
        ):
            result, payload = run_json(runner, args)
            assert result.exit_code == 0, args[0]
            assert payload["results"]["denominator_exp"] == 1


class TestConfigFile:
    """Test --config handling."""

    def test_yaml_sets_json_output(self, runner, crystal_file, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("degree_cap: 5\noutput_format: json\n")
        result = runner.invoke(cli, ["--config", str(config), "check", crystal_file])
        assert result.exit_code == 0
        assert json.loads(result.output)["command"] == "check"

    def test_unknown_key(self, runner, crystal_file, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("colour: blue\n")
        result = runner.invoke(cli, ["--config", str(config), "check", crystal_file])
        assert result.exit_code == 2


class TestStratify:
    """Test writing the stratification series."""

    def test_writes_output(self, runner, crystal_file, tmp_path):
        out = tmp_path / "eps.json"
        result, payload = run_json(runner, ["stratify", crystal_file, "-D", "5", "-o", str(out)])
        assert result.exit_code == 0
        assert statuses(payload)["roundtrip"] == "pass"
        written = json.loads(Path(out).read_text())
        assert written["degree_cap"] == 5


class TestCohomology:
    """Test the complex checks and preimage round trips."""

    def test_runs(self, runner, rank2_file):
        args = ["cohomology", rank2_file, "-D", "6", "--smax", "2", "--samples", "1", "--preimage-s", "3"]
        result, payload = run_json(runner, args)
        assert result.exit_code == 0
        names = statuses(payload)
        assert names["preimage_s2[0]"] == "pass"
        assert names["preimage_s3[0]"] == "pass"
        assert names["rigidity_s3[0]"] == "pass"
        assert payload["results"]["h0_rank"] == 0

    def test_pivot_near_horizon_exits_3(self, runner, write_json, q3_ring_dict):
        deep = write_json("deep.json", {"ring": q3_ring_dict, "matrix": [[27]]})
        result, payload = run_json(runner, ["cohomology", deep, "-D", "6", "--smax", "1", "--samples", "0"])
        assert result.exit_code == 3
        assert statuses(payload)["h0_h1"] == "exhausted"
        result, payload = run_json(runner, ["cohomology", deep, "-D", "6", "--smax", "1", "--samples", "0",
                                            "--snf-guard", "0"])
        assert result.exit_code == 0
        assert payload["results"]["h1_torsion"] == [3]

    def test_zero_crystal(self, runner, write_json, q3_ring_dict):
        zero = write_json("zero.json", {"ring": q3_ring_dict, "matrix": [[0]]})
        args = ["cohomology", zero, "-D", "6", "--smax", "2", "--samples", "1"]
        result, payload = run_json(runner, args)
        assert result.exit_code == 0
        assert payload["results"]["h0_rank"] == 1
        assert payload["results"]["h1_free_rank"] == 1


class TestGaloisCocycle:
    """Test the Galois cocycle command."""

    def test_runs(self, runner, rank2_file):
        result, payload = run_json(runner, ["galois-cocycle", rank2_file, "--g", "tau^2*gamma"])
        assert result.exit_code == 0
        assert payload["results"]["U"]["g"] == "tau^2*gamma^1"
        assert payload["results"]["sen_operator"]["label"] == "conjecture-consistency"

    def test_bad_group_element(self, runner, rank2_file):
        result = runner.invoke(cli, ["galois-cocycle", rank2_file, "--g", "sigma"])
        assert result.exit_code == 2


class TestQCalcVerify:
    """Test the q-calculus command."""

    def test_runs(self, runner, write_json, q3_ring_dict):
        ring = write_json("ring.json", {"ring": q3_ring_dict})
        args = ["qcalc-verify", "--ring", ring, "--h-max", "2", "--u-cap", "12", "--m-cap", "4"]
        result, payload = run_json(runner, args)
        assert result.exit_code == 0
        assert set(statuses(payload)) == {"q_identities", "dq_power_of_E[1]", "dq_power_of_E[2]"}


class TestWeights:
    """Test weights-check and fl-check."""

    def test_weights_check(self, runner, crystal_file):
        result, payload = run_json(runner, ["weights-check", crystal_file, "--weights", "0"])
        assert result.exit_code == 0
        assert payload["results"]["weights"] == [0]

    def test_weights_shape(self, runner, crystal_file):
        result = runner.invoke(cli, ["weights-check", crystal_file, "--weights", "0,1"])
        assert result.exit_code == 2

    def test_fl_check(self, runner, write_json):
        matrix = write_json("n.json", {"matrix": [[0, 1], [0, 0]]})
        args = ["fl-check", "--p", "3", "--weights", "0,1", "--matrix", matrix, "--m-cap", "4"]
        result, payload = run_json(runner, args)
        assert result.exit_code == 0
        assert payload["checks"][0]["details"]["P_is_zero"]


class TestSelftest:
    """Test the selftest command."""

    def test_quick_subset(self, runner):
        args = ["selftest", "--quick", "--seed", "1", "--only", "11_negative_controls"]
        result, payload = run_json(runner, args)
        assert result.exit_code == 0
        assert statuses(payload) == {"11_negative_controls": "pass"}
