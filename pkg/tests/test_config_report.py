"""Tests for run configuration, input loading, reports and seeded sampling."""

import hashlib

import pytest

from prismkit.config import (
    DEFAULT_DEGREE,
    DEFAULT_SNF_GUARD,
    THREADS_ENV,
    RunConfig,
    default_threads,
    read_json,
    read_yaml_config,
)
from prismkit.errors import ConfigError, ParseError
from prismkit.report import CheckResult, Report
from prismkit.sampling import random_ok_matrix, rng_for


@pytest.fixture
def no_threads_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)


class TestRunConfig:
    """Test defaults, YAML overrides and validation."""

    def test_defaults(self, no_threads_env):
        config = RunConfig.load()
        assert config.degree_cap == DEFAULT_DEGREE
        assert config.output_format == "text"
        assert config.threads >= 1

    def test_yaml_then_overrides(self, tmp_path, no_threads_env):
        path = tmp_path / "run.yaml"
        path.write_text("degree_cap: 5\nseed: 7\n")
        config = RunConfig.load(path, seed=11, degree_cap=None)
        assert config.degree_cap == 5
        assert config.seed == 11

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("degre_cap: 5\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            read_yaml_config(path)

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("seed: [1,\n")
        with pytest.raises(ParseError, match="invalid YAML"):
            read_yaml_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_yaml_config(tmp_path / "absent.yaml")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("")
        assert read_yaml_config(path) == {}

    def test_precision_must_exceed_one(self):
        with pytest.raises(ConfigError, match="precision"):
            RunConfig(precision=1)

    def test_snf_guard(self, tmp_path, no_threads_env):
        assert RunConfig().snf_guard == DEFAULT_SNF_GUARD == 1
        path = tmp_path / "run.yaml"
        path.write_text("snf_guard: 0\n")
        assert RunConfig.load(path).snf_guard == 0
        with pytest.raises(ConfigError, match="snf_guard"):
            RunConfig(snf_guard=-1)

    def test_output_format(self):
        with pytest.raises(ConfigError, match="format"):
            RunConfig(output_format="xml")

    def test_with_overrides(self):
        config = RunConfig().with_overrides(s_max=2, seed=None)
        assert config.s_max == 2
        assert config.seed == 0


class TestThreads:
    """Test PRISMKIT_THREADS handling."""

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert default_threads() == 3
        assert RunConfig.load().threads == 3

    def test_not_an_integer(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ConfigError, match="integer"):
            default_threads()

    def test_not_positive(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "0")
        with pytest.raises(ConfigError, match="positive"):
            default_threads()


class TestReadJson:
    """Test JSON input loading."""

    def test_reads(self, write_json):
        path = write_json("x.json", {"a": [1, 2]})
        assert read_json(path) == {"a": [1, 2]}

    def test_syntax_error_has_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "a": ,\n}')
        with pytest.raises(ParseError, match=":2:"):
            read_json(path)

    def test_missing(self, tmp_path):
        with pytest.raises(ParseError, match="file not found"):
            read_json(tmp_path / "absent.json")


class TestReport:
    """Test exit codes and serialization."""

    def test_all_pass(self):
        report = Report("check", [CheckResult("a", "pass")])
        assert report.exit_code == 0

    def test_fail_wins_over_exhausted(self):
        report = Report("check")
        report.add(CheckResult("b", "exhausted"))
        assert report.exit_code == 3
        report.add(CheckResult("a", "fail"))
        assert report.exit_code == 1

    def test_checks_sorted(self):
        report = Report("check", [CheckResult("z", "pass"), CheckResult("a", "pass")])
        assert [c["name"] for c in report.to_dict()["checks"]] == ["a", "z"]

    def test_hash_input(self, tmp_path):
        path = tmp_path / "in.json"
        path.write_bytes(b"{}")
        report = Report("check")
        report.hash_input(path)
        assert report.input_hashes[str(path)] == hashlib.sha256(b"{}").hexdigest()

    def test_to_dict_fields(self):
        d = Report("selftest", seed=4).to_dict()
        assert d["schema_version"] == 1
        assert d["exit_code"] == 0
        assert d["seed"] == 4


class TestSampling:
    """Test that draws depend only on (seed, index)."""

    def test_deterministic(self, q3):
        a = random_ok_matrix(q3, rng_for(5, 2), 2, 2)
        b = random_ok_matrix(q3, rng_for(5, 2), 2, 2)
        assert a == b

    def test_streams_differ(self, q3):
        a = random_ok_matrix(q3, rng_for(5, 2), 3, 3)
        b = random_ok_matrix(q3, rng_for(5, 3), 3, 3)
        assert a != b
