"""Operator command line: build, simulate, verify, scan, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import BuildConfig
from .errors import EmompcError, LibraryFormatError
from .library import build_library, grid_count, load_library, save_library, symmetry_scan, verify_library
from .online import run_closed_loop
from .track import load_track
from .tracks import bundled_track, bundled_track_names


@click.group()
def main():
    """Explicit multiobjective MPC toolchain."""


def _load_build_config(path: str | None) -> BuildConfig:
    if path is None:
        return BuildConfig()
    try:
        return BuildConfig.load(path)
    except (OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
        raise click.UsageError(f"invalid config {path}: {exc}") from exc


def _load_library(path: str):
    try:
        return load_library(path)
    except (OSError, FileNotFoundError) as exc:
        raise click.UsageError(f"cannot read library {path}: {exc}") from exc
    except LibraryFormatError as exc:
        raise click.UsageError(f"bad library {path}: {exc}") from exc


def _resolve_track(name_or_path: str):
    path = Path(name_or_path)
    if path.exists():
        return load_track(path)
    if path.suffix == "" and name_or_path in bundled_track_names():
        return bundled_track(name_or_path)
    raise click.UsageError(
        f"unknown track {name_or_path!r}; bundled tracks: {', '.join(bundled_track_names())}"
    )


@main.command()
@click.option("--config", "-c", "config_path", type=click.Path(), default=None, help="Build config JSON; defaults to the desk-scale grid.")
@click.option("--out", "-o", "out_path", type=click.Path(), required=True)
@click.option("--jobs", "-j", type=int, default=1, show_default=True)
def build(config_path, out_path, jobs):
    """Trace the Pareto-set library over the configured grid."""
    config = _load_build_config(config_path)
    total = 1
    for dim in config.grid:
        total *= dim.count
    click.echo(f"building {total} nodes on {jobs} worker(s)")

    def progress(done, total_nodes, failed):
        if done % 50 == 0 or done == total_nodes:
            click.echo(f"  {done}/{total_nodes} nodes, {failed} failed")

    library = build_library(config, workers=jobs, progress=progress)
    save_library(library, out_path)
    if library.failures:
        manifest = Path(str(out_path) + ".failures.json")
        manifest.write_text(json.dumps([list(i) for i in library.failures], indent=1))
        click.echo(f"INCOMPLETE: {len(library.failures)} nodes failed; manifest at {manifest}")
        sys.exit(1)
    click.echo(
        f"done in {library.metadata['built_seconds']:.1f}s; wrote {out_path}"
    )


@main.command()
@click.option("--library", "-l", "library_path", type=click.Path(), required=True)
@click.option("--track", "-t", "track_name", default="stadium", show_default=True)
@click.option("--rho", type=float, default=None, help="Fixed preference in [0, 1].")
@click.option("--schedule", "schedule_path", type=click.Path(), default=None, help="JSON [[time, rho], ...].")
@click.option("--heuristic", is_flag=True, help="Curvature-driven preference.")
@click.option("--t-max", type=float, default=120.0, show_default=True)
@click.option("--out", "-o", "out_path", type=click.Path(), default=None, help="Trace CSV destination.")
def simulate(library_path, track_name, rho, schedule_path, heuristic, t_max, out_path):
    """Run the closed-loop MPC on a track and report lap metrics."""
    library = _load_library(library_path)
    track = _resolve_track(track_name)

    chosen = [x for x in (rho is not None, schedule_path is not None, heuristic) if x]
    if len(chosen) > 1:
        raise click.UsageError("choose exactly one of --rho, --schedule, --heuristic")
    if heuristic:
        policy = "heuristic"
    elif schedule_path is not None:
        try:
            policy = [(float(t), float(r)) for t, r in json.loads(Path(schedule_path).read_text())]
        except (OSError, ValueError, TypeError) as exc:
            raise click.UsageError(f"invalid schedule {schedule_path}: {exc}") from exc
    else:
        value = 0.5 if rho is None else rho
        if not 0.0 <= value <= 1.0:
            click.echo(f"warning: rho {value} outside [0, 1]; clamping", err=True)
            value = min(max(value, 0.0), 1.0)
        policy = value

    trace = run_closed_loop(library, track, policy=policy, t_max=t_max)
    if out_path:
        Path(out_path).write_text(trace.to_csv())
    summary = trace.summary
    lap = "nan" if summary.lap_time is None else f"{summary.lap_time:.4f}"
    click.echo(
        f"lap_time={lap} integrated_distance={summary.integrated_distance:.6f} "
        f"constraint_max={summary.constraint_max:.4f} completed={summary.completed} "
        f"aborted={summary.aborted}"
    )
    if summary.aborted:
        sys.exit(1)


@main.command()
@click.option("--library", "-l", "library_path", type=click.Path(), required=True)
def verify(library_path):
    """Audit a library: nondominance, bounds, feasibility, symmetry spot checks."""
    library = _load_library(library_path)
    report = verify_library(library)
    if report.passed:
        click.echo(f"OK: {report.checked} entries verified")
        return
    click.echo(f"FAILED: {len(report.issues)} issue(s)")
    for issue in report.issues[:50]:
        click.echo(f"  node {list(issue.index)}: {issue.message}")
    sys.exit(1)


@main.command()
@click.option("--problem", "-p", type=click.Choice(["witting", "bicycle-se2", "bicycle-kappa"]), required=True)
@click.option("--values", "-v", "values_csv", default=None, help="Comma-separated parameter values.")
@click.option("--eps", type=float, default=1e-3, show_default=True)
def scan(problem, values_csv, eps):
    """Numerically probe Pareto-set invariance across parameter values."""
    from .maneuver import ReducedParameter, build_maneuver_mocp, build_reduced_mocp
    from .track import local_track, se2_apply_track
    from .vehicle import Se2Action, se2_apply
    from .witting import witting_mocp

    if problem == "witting":
        values = [float(v) for v in (values_csv or "0,0.5,1").split(",")]
        family = witting_mocp
    elif problem == "bicycle-se2":
        values = [float(v) for v in (values_csv or "0,1,2,3").split(",")]
        rp = ReducedParameter(0.5, 1.0, 0.2, 2.0, 0.05)
        x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])

        def family(seed):
            rng = np.random.default_rng(int(seed))
            g = Se2Action(rng.uniform(-np.pi, np.pi), tuple(rng.uniform(-100, 100, 2)))
            if int(seed) == 0:
                g = Se2Action.identity()
            return build_maneuver_mocp(se2_apply(g, x0), se2_apply_track(g, local_track(rp.kappa)))
    else:
        values = [float(v) for v in (values_csv or "0,0.05,0.1").split(",")]

        def family(kappa):
            return build_reduced_mocp(ReducedParameter(0.0, 1.0, 0.2, 2.0, kappa))

    try:
        result = symmetry_scan(family, values, eps=eps)
    except EmompcError as exc:
        raise click.ClickException(str(exc)) from exc
    verdict = "invariant" if result.invariant else "NOT invariant"
    click.echo(f"max pairwise Hausdorff (decision space): {result.max_distance:.3e}")
    click.echo(f"verdict: {verdict} (eps={eps:g})")
    if not result.invariant:
        sys.exit(1)


@main.command()
@click.option("--library", "-l", "library_path", type=click.Path(), required=True)
@click.option("--tracks-dir", type=click.Path(), default=None, help="Directory of extra track.json files.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
def serve(library_path, tracks_dir, host, port):
    """Serve the live-session API and stream for the cockpit."""
    import uvicorn

    from .service import create_app

    library = _load_library(library_path)
    tracks = {name: bundled_track(name) for name in bundled_track_names()}
    if tracks_dir:
        for path in sorted(Path(tracks_dir).glob("*.json")):
            track = load_track(path)
            tracks[track.name] = track
    app = create_app(library, tracks)
    click.echo(f"serving {len(tracks)} tracks on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
