"""
CLI module for boltzlab.

This module provides the command-line interface: entropy dissipation runs,
inequality verification, particle relaxation, cone estimates and norms.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import typer
from humanfriendly import format_timespan
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .core.config import RunConfig, build_family, load_config, write_resolved_config
from .core.distributions import macro_state
from .core.errors import ConfigError, NumericalError
from .core.functionals import CSV_COLUMNS, entropy_dissipation
from .core.geometry_norms import lp_norm_estimate, seminorm_estimate, sqrt_density
from .core.io import format_float, write_csv, write_json
from .core.kernel import exponents
from .core.kf_kernel import KernelEvaluator, cone_estimate
from .core.solver import TRAJECTORY_COLUMNS, run, write_checkpoint, write_trajectory_csv
from .core.verifier import (
    REPORT_COLUMNS,
    holder_chain,
    predicate_table,
    verify_prop12,
    verify_prop22_construction,
    verify_theorem11,
)

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    datefmt="[%X]",
    handlers=[RichHandler(rich_tracebacks=True)]
)

logger = logging.getLogger("boltzlab")
console = Console()

app = typer.Typer(
    name="boltzlab",
    help="Numerical laboratory for Boltzmann entropy dissipation estimates",
    add_completion=False
)

CHECKS = ("theorem11", "prop12", "construction", "holder")
DEFAULT_PREDICATE_PAIRS = [(-3.0, 0.6), (-3.0, 0.4), (-2.5, 0.2), (-2.0, 0.3), (-2.0, 0.7), (-1.5, 0.4), (-1.0, 0.25), (0.0, 0.5)]
NORM_COLUMNS = ["family", "member", "M0", "E0", "H0", "norm_lpq", "norm_lpq_err", "norm_l1_2", "seminorm", "seminorm_err"]
PREDICATE_COLUMNS = ["d", "gamma", "s", "gamma_plus_2s", "finite"]


def _guarded(action: Callable[[], int]) -> None:
    """Run a command body and map failures onto the exit code contract."""
    started = time.time()
    try:
        code = action()
    except NumericalError as e:
        logger.error(f"Numerical failure: {str(e)}")
        raise typer.Exit(2)
    except Exception as e:
        logger.error(f"Error: {str(e)}")
        raise typer.Exit(1)
    logger.info(f"Finished in {format_timespan(time.time() - started)}")
    if code:
        raise typer.Exit(code)


def _configure(
    config: Optional[Path],
    overrides: Dict[str, Any],
    verbose: bool,
    defaults: Optional[Dict[str, Any]] = None,
    require_kinetic: bool = True,
) -> RunConfig:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    resolved = load_config(config, overrides, defaults, require_kinetic)
    write_resolved_config(resolved)
    return resolved


def _common(output_dir: Optional[Path], jobs: Optional[int], d: Optional[int], gamma: Optional[float], s: Optional[float], family: Optional[str]) -> Dict[str, Any]:
    return {
        "run.output_dir": str(output_dir) if output_dir is not None else None,
        "run.jobs": jobs,
        "kinetic.d": d,
        "kinetic.gamma": gamma,
        "kinetic.s": s,
        "family.kind": family,
    }


def _int_option(value: Optional[float], name: str) -> Optional[int]:
    if value is None:
        return None
    if not float(value).is_integer():
        raise ConfigError(f"--{name} must be an integer, got {value}")
    return int(value)


def _parse_pairs(text: Optional[str]) -> Optional[List[Tuple[float, float]]]:
    if text is None:
        return None
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            gamma, s = item.split(":")
            pairs.append((float(gamma), float(s)))
        except ValueError:
            raise ConfigError(f"--pairs expects gamma:s items separated by commas, got {item!r}")
    return pairs


@app.command()
def dissipate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Key-value config file"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Directory for results"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default: BOLTZLAB_JOBS or 1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    d: Optional[int] = typer.Option(None, "--d", help="Velocity dimension (2 or 3)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Kinetic exponent gamma"),
    s: Optional[float] = typer.Option(None, "--s", help="Angular singularity exponent s"),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Density family"),
    method: Optional[str] = typer.Option(None, "--method", "-m", help="auto, deterministic or mc"),
    samples: Optional[float] = typer.Option(None, "--samples", help="Number of Monte Carlo samples"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    variant: str = typer.Option("full", "--variant", help="Kinetic factor: full or psi"),
):
    """Compute the entropy dissipation D(f) for every member of a family."""

    def body() -> int:
        overrides = _common(output_dir, jobs, d, gamma, s, family)
        overrides.update({"run.method": method, "quadrature.mc_samples": _int_option(samples, "samples"), "quadrature.seed": seed})
        if variant not in ("full", "psi"):
            raise ConfigError(f"--variant must be full or psi, got {variant!r}")
        cfg = _configure(config, overrides, verbose, {"family.kind": "maxwellian"})
        members = build_family(cfg)
        results = []
        rows = []
        table = Table(title=f"Entropy dissipation ({cfg.params.d}d, gamma={cfg.params.gamma:g}, s={cfg.params.s:g})")
        for column in ("member", "D", "error", "method"):
            table.add_column(column)
        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
            task = progress.add_task("Computing dissipation...", total=len(members))
            for name, f in members:
                progress.update(task, description=f"Computing D for {name}...")
                result = entropy_dissipation(f, cfg.params, cfg.spec, variant, cfg.method)
                results.append({"family": cfg.family_kind, "member": name, **result.to_dict()})
                rows.append(result.csv_row(cfg.family_kind, name))
                table.add_row(name, format_float(result.value), f"{result.abs_error_estimate:.3g}", result.method)
                progress.advance(task)
        write_json(cfg.output_dir / "dissipation.json", results)
        write_csv(cfg.output_dir / "dissipation.csv", rows, CSV_COLUMNS)
        console.print(table)
        return 0

    _guarded(body)


def _print_report(title: str, rows: List[Dict[str, Any]], columns: List[str]) -> None:
    table = Table(title=title)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*[format_float(row[c]) if isinstance(row[c], float) else str(row[c]) for c in columns])
    console.print(table)


@app.command()
def verify(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Key-value config file"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Directory for results"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default: BOLTZLAB_JOBS or 1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    d: Optional[int] = typer.Option(None, "--d", help="Velocity dimension (2 or 3)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Kinetic exponent gamma"),
    s: Optional[float] = typer.Option(None, "--s", help="Angular singularity exponent s"),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Density family"),
    check: Optional[str] = typer.Option(None, "--check", help="theorem11, prop12, construction or holder"),
    sweep: Optional[bool] = typer.Option(None, "--sweep/--no-sweep", help="Scaling sweep for theorem11"),
    radius: Optional[float] = typer.Option(None, "--radius", help="Ball radius for the Hoelder chain"),
    background: Optional[str] = typer.Option(
        None, "--background", help="Member used as f in the construction check (default: the first member)"
    ),
    predicate_only: bool = typer.Option(False, "--predicate-only", help="Only tabulate gamma + 2s > -2"),
    pairs: Optional[str] = typer.Option(None, "--pairs", help="gamma:s pairs for --predicate-only, e.g. -3:0.6,-2:0.3"),
):
    """Verify the dissipation inequalities on a family and report empirical constants."""

    def body() -> int:
        overrides = _common(output_dir, jobs, d, gamma, s, family)
        overrides.update(
            {
                "verify.check": check,
                "verify.sweep": sweep,
                "verify.holder_radius": radius,
                "verify.background": background,
            }
        )
        if predicate_only:
            cfg = _configure(config, overrides, verbose, require_kinetic=False)
            dim = int(cfg.get("kinetic.d", 3))
            chosen = _parse_pairs(pairs)
            if chosen is None:
                chosen = [p for p in DEFAULT_PREDICATE_PAIRS if p[0] >= -dim]
                if "kinetic.gamma" in cfg.values and "kinetic.s" in cfg.values:
                    chosen.append((cfg.values["kinetic.gamma"], cfg.values["kinetic.s"]))
            rows = predicate_table(chosen, dim)
            write_csv(cfg.output_dir / "predicate.csv", rows, PREDICATE_COLUMNS)
            _print_report("Hoelder finiteness predicate gamma + 2s > -2", rows, PREDICATE_COLUMNS)
            return 0

        cfg = _configure(config, overrides, verbose, {"family.kind": "standard"})
        which = cfg.get("verify.check", "theorem11")
        if which not in CHECKS:
            raise ConfigError(f"verify.check must be one of {CHECKS}, got {which!r}")
        members = build_family(cfg)
        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
            progress.add_task(f"Running {which} on {len(members)} members...", total=None)
            if which == "theorem11":
                report = verify_theorem11(
                    members,
                    cfg.params,
                    cfg.spec,
                    cfg.family_kind,
                    sweep=cfg.get("verify.sweep", True),
                    seminorm=cfg.get("verify.seminorm", False),
                )
            elif which == "prop12":
                report = verify_prop12(members, cfg.params, cfg.spec, cfg.family_kind)
            elif which == "construction":
                named = dict(members)
                background_name = cfg.get("verify.background", members[0][0])
                if background_name not in named:
                    raise ConfigError(f"verify.background must name a family member, got {background_name!r}")
                f = named[background_name]
                logger.info(f"Construction check with f = {background_name} against {len(members)} members")
                reports = {name: verify_prop22_construction(f, g, cfg.params, cfg.spec) for name, g in members}
                write_json(cfg.output_dir / "construction.json", reports)
                failed = [name for name, r in reports.items() if not r.passed]
                for name in failed:
                    logger.warning(f"Construction check failed for {name}")
                return 2 if failed else 0
            else:
                R = cfg.get("verify.holder_radius", 4.0)
                reports = {name: holder_chain(g, R, cfg.params, cfg.spec) for name, g in members}
                write_json(cfg.output_dir / "holder.json", reports)
                failed = [name for name, r in reports.items() if not (r.holds and r.predicate_matches)]
                for name in failed:
                    logger.warning(f"Hoelder chain check {reports[name].status} for {name}")
                return 2 if failed else 0

        write_json(cfg.output_dir / "verification.json", report)
        write_csv(cfg.output_dir / "verification.csv", report.csv_rows(), REPORT_COLUMNS)
        _print_report(f"{which} on {cfg.family_kind}", report.csv_rows(), REPORT_COLUMNS)
        for note in report.notes:
            logger.info(note)
        console.print(f"passes: {report.passes}")
        return 0 if report.passed else 2

    _guarded(body)


@app.command()
def solve(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Key-value config file"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Directory for results"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default: BOLTZLAB_JOBS or 1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    d: Optional[int] = typer.Option(None, "--d", help="Velocity dimension (2 or 3)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Kinetic exponent gamma"),
    s: Optional[float] = typer.Option(None, "--s", help="Angular singularity exponent s"),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Family whose first member is the initial datum"),
    particles: Optional[float] = typer.Option(None, "--particles", "-n", help="Number of particles"),
    final_time: Optional[float] = typer.Option(None, "--time", "-T", help="Final time"),
    snapshots: Optional[int] = typer.Option(None, "--snapshots", help="Number of diagnostic snapshots"),
    theta_min: Optional[float] = typer.Option(None, "--theta-min", help="Angular cutoff"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step (default: 0.25 collisions per particle)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
):
    """Relax an initial density with the particle solver and record trajectory diagnostics."""

    def body() -> int:
        overrides = _common(output_dir, jobs, d, gamma, s, family)
        overrides.update(
            {
                "solver.n": _int_option(particles, "particles"),
                "solver.T": final_time,
                "solver.snapshots": snapshots,
                "solver.theta_min": theta_min,
                "solver.dt": dt,
                "quadrature.seed": seed,
            }
        )
        defaults = {"family.kind": "bi_maxwellian", "family.separations": (4.0,), "solver.n": 20000, "solver.T": 5.0, "solver.snapshots": 10}
        cfg = _configure(config, overrides, verbose, defaults)
        count = cfg.get("solver.snapshots")
        if count < 1:
            raise ConfigError(f"solver.snapshots must be at least 1, got {count}")
        name, f0 = build_family(cfg)[0]
        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), BarColumn(), console=console) as progress:
            task = progress.add_task(f"Relaxing {name}...", total=count)
            diagnostics = run(
                f0,
                cfg.get("solver.T"),
                count,
                cfg.get("solver.n"),
                cfg.params,
                cfg.spec,
                theta_min=cfg.get("solver.theta_min", 0.05),
                vrel_floor=cfg.get("solver.vrel_floor", 1e-3),
                dt=cfg.get("solver.dt"),
                holder_radius=cfg.get("solver.holder_radius", 4.0),
                on_snapshot=lambda k, t: progress.update(task, completed=k),
            )
        write_trajectory_csv(cfg.output_dir / "trajectory.csv", diagnostics)
        write_json(cfg.output_dir / "trajectory.json", diagnostics)
        write_checkpoint(cfg.output_dir / "checkpoint.csv", diagnostics.final)
        _print_report(f"Trajectory of {name}", diagnostics.rows(), TRAJECTORY_COLUMNS)
        return 0

    _guarded(body)


@app.command()
def cone(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Key-value config file"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Directory for results"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default: BOLTZLAB_JOBS or 1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    d: Optional[int] = typer.Option(None, "--d", help="Velocity dimension (2 or 3)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Kinetic exponent gamma"),
    s: Optional[float] = typer.Option(None, "--s", help="Angular singularity exponent s"),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Family whose first member defines the kernel"),
    velocity: Optional[str] = typer.Option(None, "--v", help="Base velocity, comma separated"),
    n_dirs: Optional[int] = typer.Option(None, "--n-dirs", help="Probed directions (even, >= 64)"),
):
    """Estimate the cone of nondegeneracy of K^psi_f at a velocity."""

    def body() -> int:
        overrides = _common(output_dir, jobs, d, gamma, s, family)
        overrides.update({"cone.v": velocity, "cone.n_dirs": n_dirs})
        cfg = _configure(config, overrides, verbose, {"family.kind": "maxwellian"})
        v = np.asarray(cfg.get("cone.v", (0.0,) * cfg.params.d), dtype=float)
        if v.shape != (cfg.params.d,) or not np.all(np.isfinite(v)):
            raise ConfigError(f"cone.v must have {cfg.params.d} finite components, got {tuple(v)}")
        name, f = build_family(cfg)[0]
        evaluator = KernelEvaluator(f, cfg.params, cfg.spec, variant="psi")
        radii = cfg.get("cone.radii", (0.25, 0.5, 1.0, 2.0))
        report = cone_estimate(evaluator, v, cfg.get("cone.n_dirs", 64), radii)
        write_json(cfg.output_dir / "cone.json", {"member": name, **report.to_dict()})
        console.print(
            f"[bold]{name}[/bold] at v={tuple(v)}: measure {format_float(report.measure_hat)}, "
            f"lambda {format_float(report.lambda_hat)}, max |sigma.v| {format_float(report.max_alignment)}"
        )
        return 0

    _guarded(body)


@app.command()
def norms(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Key-value config file"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Directory for results"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default: BOLTZLAB_JOBS or 1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    d: Optional[int] = typer.Option(None, "--d", help="Velocity dimension (2 or 3)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Kinetic exponent gamma"),
    s: Optional[float] = typer.Option(None, "--s", help="Angular singularity exponent s"),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Density family"),
):
    """Macroscopic state, weighted Lebesgue norms and the anisotropic seminorm of sqrt(f)."""

    def body() -> int:
        cfg = _configure(config, _common(output_dir, jobs, d, gamma, s, family), verbose, {"family.kind": "maxwellian"})
        pq = exponents(cfg.params)
        rows = []
        for name, f in build_family(cfg):
            state = macro_state(f, cfg.spec, cfg.params)
            lpq = lp_norm_estimate(f, pq.p, -pq.q, cfg.spec)
            l1_2 = lp_norm_estimate(f, 1.0, 2.0, cfg.spec)
            semi = seminorm_estimate(sqrt_density(f), cfg.params, cfg.spec, d=f.d, domain=f.domain(cfg.spec))
            rows.append(
                {
                    "family": cfg.family_kind,
                    "member": name,
                    "M0": state.M0,
                    "E0": state.E0,
                    "H0": state.H0,
                    "norm_lpq": lpq.value,
                    "norm_lpq_err": lpq.abs_error_estimate,
                    "norm_l1_2": l1_2.value,
                    "seminorm": semi.value,
                    "seminorm_err": semi.abs_error_estimate,
                }
            )
        write_json(cfg.output_dir / "norms.json", rows)
        write_csv(cfg.output_dir / "norms.csv", rows, NORM_COLUMNS)
        _print_report(f"Norms of {cfg.family_kind}", rows, ["member", "M0", "E0", "H0", "norm_lpq", "seminorm"])
        return 0

    _guarded(body)


if __name__ == "__main__":
    app()
