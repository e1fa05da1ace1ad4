"""prismkit CLI - exact checks for Hodge-Tate crystals.

Usage:
    prismkit check crystal.json
    prismkit cohomology crystal.json --smax 3 --preimage-s 3
    prismkit galois-cocycle crystal.json --g "tau^2*gamma"
    prismkit selftest --seed 42 --json
"""

from __future__ import annotations

import functools
import json
import logging
import time
from typing import Any, Callable

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .acceptance import run_selftest
from .base_rings import RingSpec
from .cohomology import (
    CechComplex,
    compute_h0_h1,
    cross_check_cohomology,
    kernel_rigidity_check,
    preimage_general,
    preimage_s2,
    rho_and_rho_prime,
    verify_complex,
    verify_f_identities,
)
from .config import RunConfig, read_json
from .crystal import (
    CertifiedNilpotent,
    Crystal,
    Inconclusive,
    build_stratification,
    check_nilpotent,
    pair_from_stratification,
    verify_cocycle,
)
from .errors import CheckFailed, InputError, PrecisionError, PrismkitError
from .galois import (
    CycRingSpec,
    GroupElem,
    cocycle_U,
    etale_comparison_dims,
    h0_equals_invariants,
    sen_operator,
    verify_cocycle_identity,
)
from .qcalc import QCalcRing, verify_dq_power_of_E, verify_q_identities
from .report import CheckResult, IdentityReport, Report
from .sampling import random_boundary, random_u_series, rng_for
from .weights import (
    LABEL,
    WeightProfile,
    fl_check,
    fl_ring,
    poly_nilpotency_check,
    qmatrix_from_json,
    weight_nilpotency_check,
)

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("prismkit")


class InputProblem(click.ClickException):
    """Malformed input; exits with status 2."""

    exit_code = 2


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


# -- Plumbing ------------------------------------------------------------------


def _config(ctx: click.Context, command: str, **overrides: Any) -> RunConfig:
    try:
        return RunConfig.load(ctx.obj.get("config_path"), command=command, **overrides)
    except PrismkitError as e:
        raise InputProblem(str(e))


def _load_crystal(path: str, config: RunConfig, report: Report) -> Crystal:
    """Read a crystal; checks run on its lattice, so the denominator is recorded."""
    data = read_json(path)
    if config.precision is not None and isinstance(data, dict) and isinstance(data.get("ring"), dict):
        data = {**data, "ring": {**data["ring"], "precision": config.precision}}
    c = Crystal.from_dict(data)
    report.results["denominator_exp"] = c.denominator_exp
    return c


def _check(report: Report, name: str, fn: Callable[[], Any]) -> Any:
    """Run one check, record its status, and hand back its value (None on failure)."""
    try:
        value = fn()
    except InputError:
        raise
    except CheckFailed as e:
        report.add(CheckResult(name, "fail", f"{type(e).__name__}: {e}", details={"index": _jsonable(e.index)}))
        return None
    except PrecisionError as e:
        report.add(CheckResult(name, "exhausted", f"{type(e).__name__}: {e}"))
        return None
    if isinstance(value, IdentityReport):
        report.add(CheckResult(name, "pass", "ok", value.margin, value.details))
    else:
        report.add(CheckResult(name, "pass", "ok"))
    return value


def _jsonable(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def _verdict_check(report: Report, name: str, verdict, label: str | None = None) -> None:
    details = {"label": label} if label else {}
    if isinstance(verdict, CertifiedNilpotent):
        report.add(CheckResult(name, "pass", verdict.describe(), details=details))
    elif isinstance(verdict, Inconclusive):
        report.add(CheckResult(name, "exhausted", verdict.describe(), details=details))
    else:
        report.add(CheckResult(name, "fail", verdict.describe(), details=details))


def _finish(ctx: click.Context, report: Report, config: RunConfig, started: float) -> None:
    report.elapsed_seconds = time.perf_counter() - started
    if config.output_format == "json":
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        _print_report(report)
    ctx.exit(report.exit_code)


def _print_report(report: Report) -> None:
    console.print()
    console.print(Panel.fit(f"[bold cyan]prismkit v{report.version}[/] - {report.command}", border_style="cyan"))
    table = Table(show_header=True)
    table.add_column("Check", style="bold")
    table.add_column("Status", justify="center")
    table.add_column("Margin", justify="right")
    table.add_column("Verdict")
    styles = {"pass": "green", "fail": "red", "exhausted": "yellow"}
    for c in report.sorted_checks():
        table.add_row(
            c.name,
            f"[{styles[c.status]}]{c.status}[/]",
            "-" if c.margin is None else str(c.margin),
            c.verdict,
        )
    console.print(table)
    for key, value in report.results.items():
        if isinstance(value, (int, str, float)) or (isinstance(value, list) and len(value) <= 8):
            console.print(f"  [dim]{key}:[/] {value}")
    console.print(f"\n[dim]{report.elapsed_seconds:.2f}s, exit {report.exit_code}[/]")


def _guarded(fn: Callable[..., None]) -> Callable[..., None]:
    """Turn input errors raised anywhere in a command into exit status 2."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            fn(*args, **kwargs)
        except InputError as e:
            raise InputProblem(str(e))

    return wrapper


json_option = click.option("--json", "as_json", is_flag=True, default=None, help="Emit the JSON report")
degree_option = click.option("--degree", "-D", type=int, default=None, help="Truncation degree D")
precision_option = click.option("--precision", "-N", type=int, default=None, help="Override the ring precision")


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for debug output")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="YAML run configuration")
@click.pass_context
def cli(ctx: click.Context, verbose: int, config_path: str | None):
    """prismkit - exact verification kernel for Hodge-Tate crystals.

    Exit codes: 0 all checks pass, 1 a check failed, 2 bad input,
    3 precision or budget exhausted.
    """
    _setup_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


# -- Commands -------------------------------------------------------------------


@cli.command()
@click.argument("crystal", type=click.Path(exists=True, dir_okay=False))
@degree_option
@precision_option
@click.option("--n-max", type=int, default=None, help="Budget for the nilpotency iteration")
@json_option
@click.pass_context
@_guarded
def check(ctx, crystal, degree, precision, n_max, as_json):
    """Admissibility, stratification and cocycle checks for a crystal.

    Examples:

        prismkit check crystal.json

        prismkit check crystal.json -D 12 --json
    """
    started = time.perf_counter()
    config = _config(ctx, "check", degree_cap=degree, precision=precision, n_max=n_max,
                     output_format="json" if as_json else None, inputs=[crystal])
    report = Report(command="check")
    report.hash_input(crystal)
    c = _load_crystal(crystal, config, report)
    verdict = check_nilpotent(c.matrix, c.alpha, n_max=config.n_max)
    _verdict_check(report, "admissibility", verdict)
    report.results["verdict"] = verdict.tag
    if isinstance(verdict, CertifiedNilpotent):
        D = config.degree_cap
        _check(report, "stratification", lambda: build_stratification(c, D, config.n_max))
        _check(report, "cocycle", lambda: verify_cocycle(c, D))
    _finish(ctx, report, config, started)


@cli.command()
@click.argument("crystal", type=click.Path(exists=True, dir_okay=False))
@degree_option
@precision_option
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Write the series JSON here")
@json_option
@click.pass_context
@_guarded
def stratify(ctx, crystal, degree, precision, output, as_json):
    """Build eps = (1 - alpha X)^{-A/alpha} and read the crystal back from it.

    Examples:

        prismkit stratify crystal.json -D 10 -o eps.json
    """
    started = time.perf_counter()
    config = _config(ctx, "stratify", degree_cap=degree, precision=precision,
                     output_format="json" if as_json else None, inputs=[crystal])
    report = Report(command="stratify")
    report.hash_input(crystal)
    c = _load_crystal(crystal, config, report)
    eps = _check(report, "stratification", lambda: build_stratification(c, config.degree_cap))
    if eps is not None:
        def roundtrip() -> IdentityReport:
            back = pair_from_stratification(eps, c.alpha)
            if back.matrix != c.matrix:
                raise CheckFailed("the X^[1] coefficient does not give back the crystal")
            return IdentityReport("roundtrip", margin=config.degree_cap)

        _check(report, "roundtrip", roundtrip)
        payload = {"degree_cap": eps.degree_cap, "coefficients": eps.to_json()}
        if output:
            with open(output, "w") as fh:
                json.dump(payload, fh, indent=2)
            report.results["written"] = output
        else:
            report.results["stratification"] = payload
    _finish(ctx, report, config, started)


@cli.command()
@click.argument("crystal", type=click.Path(exists=True, dir_okay=False))
@degree_option
@precision_option
@click.option("--smax", type=int, default=None, help="Highest level n checked in d^{n+1} d^n = 0")
@click.option("--preimage-s", type=int, default=None, help="Also round-trip random boundaries at this level")
@click.option("--samples", type=int, default=5, show_default=True, help="Random boundaries per level")
@click.option("--seed", type=int, default=None, help="Seed for the random boundaries")
@click.option("--snf-guard", type=int, default=None, help="Exhaust when an SNF pivot is this close to the horizon (0: off)")
@json_option
@click.pass_context
@_guarded
def cohomology(ctx, crystal, degree, precision, smax, preimage_s, samples, seed, snf_guard, as_json):
    """Cech-Alexander complex checks, H^0 / H^1 and preimage round trips.

    Examples:

        prismkit cohomology crystal.json

        prismkit cohomology crystal.json --smax 3 --preimage-s 3
    """
    started = time.perf_counter()
    config = _config(ctx, "cohomology", degree_cap=degree, precision=precision, s_max=smax, seed=seed,
                     snf_guard=snf_guard, output_format="json" if as_json else None, inputs=[crystal])
    report = Report(command="cohomology", seed=config.seed)
    report.hash_input(crystal)
    c = _load_crystal(crystal, config, report)

    h = _check(report, "h0_h1", lambda: compute_h0_h1(c, guard=config.snf_guard))
    if h is not None:
        report.results.update(h.to_dict())
    cx = _check(report, "complex_build", lambda: CechComplex(c, config.degree_cap))
    if cx is not None:
        _check(report, "complex", lambda: verify_complex(cx, min(config.s_max, cx.D - 2)))
        _check(report, "f_identities", lambda: verify_f_identities(c, config.degree_cap))
        _check(report, "cohomology_cross_check", lambda: cross_check_cohomology(cx))
        _check(report, "rho", lambda: rho_and_rho_prime(cx)[1])

        levels = sorted({2, preimage_s} if preimage_s else {2})
        for s in levels:
            for k in range(samples):
                rng = rng_for(config.seed, 100 * s + k)
                _, f = random_boundary(cx, s, rng)
                if s == 2:
                    _check(report, f"preimage_s2[{k}]", lambda f=f: _preimage_report(cx, f))
                else:
                    _check(report, f"preimage_s{s}[{k}]", lambda f=f, s=s: preimage_general(cx, s, f)[1])
                _check(report, f"rigidity_s{s}[{k}]", lambda f=f, s=s: kernel_rigidity_check(cx, s, f))
    _finish(ctx, report, config, started)


def _preimage_report(cx: CechComplex, f) -> IdentityReport:
    preimage_s2(cx, f)
    return IdentityReport("preimage", margin=cx.margin(2), details={"level": 2})


@cli.command("galois-cocycle")
@click.argument("crystal", type=click.Path(exists=True, dir_okay=False))
@click.option("--g", "g_text", default="tau", show_default=True, help="Group element tau^a*gamma^b")
@click.option("--h", "h_text", default="tau", show_default=True, help="Second element for the cocycle identity")
@click.option("--lambda-degree", type=int, default=None, help="lambda truncation (default e*N)")
@click.option("--chi", type=int, default=None, help="chi(gamma) (default 1+p)")
@precision_option
@json_option
@click.pass_context
@_guarded
def galois_cocycle(ctx, crystal, g_text, h_text, lambda_degree, chi, precision, as_json):
    """The Galois cocycle U(g), its cocycle identity, and the Sen operator.

    Sen-operator outputs are labeled conjecture-consistency.

    Examples:

        prismkit galois-cocycle crystal.json --g "tau^2*gamma" --lambda-degree 8
    """
    started = time.perf_counter()
    config = _config(ctx, "galois-cocycle", lambda_degree_cap=lambda_degree, precision=precision,
                     output_format="json" if as_json else None, inputs=[crystal])
    report = Report(command="galois-cocycle")
    report.hash_input(crystal)
    c = _load_crystal(crystal, config, report)
    g, h = GroupElem.parse(g_text), GroupElem.parse(h_text)

    sen = _check(report, "sen_operator", lambda: sen_operator(c))
    if sen is not None:
        report.results["sen_operator"] = sen.to_dict()
    _check(report, "etale_comparison", lambda: _consistent(etale_comparison_dims(c)))
    lattice = c.lattice()
    cspec = CycRingSpec(c.spec, config.lambda_degree_cap, chi)
    U = _check(report, "cocycle_U", lambda: cocycle_U(lattice, g, cspec))
    if U is not None:
        report.results["U"] = {"g": str(g), "lambda_degree_cap": cspec.lambda_degree_cap, "matrix": U.to_json()}
        _check(report, "cocycle_identity", lambda: verify_cocycle_identity(lattice, g, h, cspec))
        _check(report, "h0_invariants", lambda: h0_equals_invariants(lattice, cspec))
    _finish(ctx, report, config, started)


def _consistent(r: IdentityReport) -> IdentityReport:
    if not r.details["consistent"]:
        raise CheckFailed(f"ker/coker dimensions differ: phi {r.details['phi']} vs theta {r.details['theta']}")
    return r


@cli.command("qcalc-verify")
@click.option("--ring", "ring_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Ring JSON file")
@click.option("--h-max", type=int, default=4, show_default=True, help="Largest power of E checked")
@click.option("--u-cap", type=int, default=None, help="u truncation")
@click.option("--m-cap", type=int, default=None, help="m truncation")
@click.option("--seed", type=int, default=None, help="Seed for the random series")
@json_option
@click.pass_context
@_guarded
def qcalc_verify(ctx, ring_path, h_max, u_cap, m_cap, seed, as_json):
    """q-derivative identities on the truncated W(k)[[u, m]].

    Examples:

        prismkit qcalc-verify --ring ring.json --h-max 4 --u-cap 24 --m-cap 12
    """
    started = time.perf_counter()
    config = _config(ctx, "qcalc-verify", u_cap=u_cap, m_cap=m_cap, seed=seed,
                     output_format="json" if as_json else None, inputs=[ring_path])
    report = Report(command="qcalc-verify", seed=config.seed)
    report.hash_input(ring_path)
    data = read_json(ring_path)
    spec = RingSpec.from_dict(data.get("ring", data) if isinstance(data, dict) else data)
    ring = QCalcRing(spec, config.u_cap, config.m_cap)
    rng = rng_for(config.seed)
    f = random_u_series(ring, rng, config.u_cap // spec.p)
    g = random_u_series(ring, rng, config.u_cap // 2)
    _check(report, "q_identities", lambda: verify_q_identities(f, g))
    for h in range(1, h_max + 1):
        _check(report, f"dq_power_of_E[{h}]", lambda h=h: verify_dq_power_of_E(ring, h))
    _finish(ctx, report, config, started)


@cli.command("weights-check")
@click.argument("crystal", type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", required=True, help="Comma-separated weights, e.g. 0,1,3")
@precision_option
@json_option
@click.pass_context
@_guarded
def weights_check(ctx, crystal, weights, precision, as_json):
    """Residue nilpotency of prod_i (-A + r_i alpha) and prod_{i<p} (-A + i alpha).

    Examples:

        prismkit weights-check crystal.json --weights 0,1,3
    """
    started = time.perf_counter()
    config = _config(ctx, "weights-check", precision=precision,
                     output_format="json" if as_json else None, inputs=[crystal])
    report = Report(command="weights-check")
    report.hash_input(crystal)
    c = _load_crystal(crystal, config, report)
    profile = WeightProfile.parse(weights)
    _verdict_check(report, "weight_nilpotency", weight_nilpotency_check(c.matrix, profile, c.alpha), LABEL)
    _verdict_check(report, "poly_nilpotency", poly_nilpotency_check(c), LABEL)
    report.results["weights"] = list(profile.r)
    _finish(ctx, report, config, started)


@cli.command("fl-check")
@click.option("--p", "p", type=int, required=True, help="The prime")
@click.option("--weights", required=True, help="Comma-separated weights, at most p")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Strictly upper matrix JSON")
@click.option("--m-cap", type=int, default=None, help="m truncation")
@json_option
@click.pass_context
@_guarded
def fl_check_cmd(ctx, p, weights, matrix_path, m_cap, as_json):
    """prod_i ([r_i]_q I + T) is strictly upper and nilpotent over F_p[[m]].

    Examples:

        prismkit fl-check --p 5 --weights 0,2,5 --matrix n.json
    """
    started = time.perf_counter()
    config = _config(ctx, "fl-check", m_cap=m_cap, output_format="json" if as_json else None, inputs=[matrix_path])
    report = Report(command="fl-check")
    report.hash_input(matrix_path)
    ring = fl_ring(p, config.m_cap)
    data = read_json(matrix_path)
    N = qmatrix_from_json(ring, data.get("matrix", data) if isinstance(data, dict) else data)
    _check(report, "fl_check", lambda: fl_check(WeightProfile.parse(weights), N, ring))
    _finish(ctx, report, config, started)


@cli.command()
@click.option("--seed", type=int, default=None, help="Seed for the randomized suites")
@click.option("--quick", is_flag=True, help="Smaller instance counts")
@click.option("--only", multiple=True, help="Run only the named criteria")
@json_option
@click.pass_context
@_guarded
def selftest(ctx, seed, quick, only, as_json):
    """Run the acceptance suite at desk scale.

    Examples:

        prismkit selftest

        prismkit selftest --seed 42 --json
    """
    started = time.perf_counter()
    config = _config(ctx, "selftest", seed=seed, output_format="json" if as_json else None)
    report = run_selftest(config, quick=quick, only=list(only) or None)
    _finish(ctx, report, config, started)


if __name__ == "__main__":
    cli()
