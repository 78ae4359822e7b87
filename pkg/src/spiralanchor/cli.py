"""Command-line front end.

Subcommands: bundle (integrate the drift equation and dump the trajectory),
scan (parameter-plane wedge/cone scan), rdas (the PDE experiment), verify
(run the acceptance suite).  Every run writes its outputs plus a manifest
with the fully resolved configuration and sha256 digests of the emitted
files.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 validation
override required.
"""

from __future__ import annotations

import argparse
import configparser
import os
import subprocess
import sys
import time
from pathlib import Path

from . import __version__
from .bundle import rhs
from .config import (
    bundle_run_from,
    emit_bundle,
    emit_rdas,
    emit_scan,
    rdas_config_from,
    read_ini,
    scan_run_from,
    write_manifest,
)
from .dynamics import integrate, parameter_grid, wedge_scan
from .errors import ConfigurationError, SpiralAnchorError
from .rdas import read_snapshot, run as run_rdas, write_snapshot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OVERRIDE = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spiral-anchor",
        description="Spiral-wave anchoring: drift dynamics, Floquet scans, and the PDE experiment.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument(
            "--config",
            type=Path,
            required=needs_config,
            help="INI configuration file",
        )
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker count (default: SPIRAL_ANCHOR_THREADS or 1)",
        )

    p_bundle = sub.add_parser("bundle", help="integrate the drift equation")
    common(p_bundle)
    p_scan = sub.add_parser("scan", help="scan a parameter grid for periodic orbits")
    common(p_scan)
    p_rdas = sub.add_parser("rdas", help="run the reaction-diffusion-advection experiment")
    common(p_rdas, needs_config=False)
    p_rdas.add_argument(
        "--override-cfl",
        action="store_true",
        help="proceed even when the explicit-scheme stability bound is violated",
    )
    p_rdas.add_argument("--resume", type=Path, default=None, help="resume from a field snapshot")
    p_verify = sub.add_parser("verify", help="run the acceptance suite")
    p_verify.add_argument(
        "--tests",
        type=Path,
        default=None,
        help="path to the acceptance test module (default: autodiscover)",
    )
    return parser


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SPIRAL_ANCHOR_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _cmd_bundle(args):
    started = time.monotonic()
    run = bundle_run_from(read_ini(args.config))
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = integrate(
        lambda t, p: rhs(run.params, run.spec, p, t),
        run.p0,
        run.t0,
        run.t1,
        tol=run.tol,
        n_samples=run.samples,
    )
    csv_path = out_dir / "trajectory.csv"
    with open(csv_path, "w") as fh:
        fh.write("t,p_re,p_im\n")
        for t, p in zip(traj.t, traj.p):
            fh.write(f"{t!r},{p.real!r},{p.imag!r}\n")
    write_manifest(
        out_dir / "manifest.json",
        "bundle",
        emit_bundle(run),
        {"trajectory.csv": csv_path},
        time.monotonic() - started,
        __version__,
    )
    print(f"wrote {csv_path} ({len(traj.t)} samples, {traj.accepted} steps)")
    return EXIT_OK


def _cmd_scan(args):
    started = time.monotonic()
    cp = read_ini(args.config)
    run = bundle_run_from(cp)
    scan = scan_run_from(cp)
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = parameter_grid(scan.epsilons, scan.mu_rows)
    table = wedge_scan(
        run.params,
        run.spec,
        rows,
        site=scan.site,
        newton_tol=scan.newton_tol,
        eta=scan.eta,
        integ_tol=scan.integ_tol,
        truncation=scan.truncation,
        threads=_threads(args),
    )
    csv_path = out_dir / "scan.csv"
    table.to_csv(csv_path)
    write_manifest(
        out_dir / "manifest.json",
        "scan",
        emit_bundle(run) + "\n" + emit_scan(scan),
        {"scan.csv": csv_path},
        time.monotonic() - started,
        __version__,
    )
    n_ok = sum(1 for rec in table if rec.converged)
    print(f"wrote {csv_path} ({n_ok}/{len(table.records)} points converged)")
    return EXIT_OK


def _cmd_rdas(args):
    started = time.monotonic()
    if args.config is not None:
        cfg = rdas_config_from(read_ini(args.config))
    else:
        cfg = rdas_config_from(configparser.ConfigParser())
    if not cfg.cfl_ok:
        print(
            f"warning: CFL number {cfg.cfl_number:.3f} >= 1: explicit scheme unstable "
            "(pass --override-cfl to run anyway)",
            file=sys.stderr,
        )
        if not args.override_cfl:
            return EXIT_OVERRIDE
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)

    resume = None
    if args.resume is not None:
        u, v, step, _ = read_snapshot(args.resume)
        resume = (u, v, step)

    outputs = {}

    def sink(step, u, v):
        path = out_dir / f"snapshot_{step:08d}.rdas"
        write_snapshot(path, u, v, step, step * cfg.dt)
        outputs[path.name] = path

    result = run_rdas(cfg, resume=resume, snapshot_sink=sink if cfg.snapshot_stride else None)
    tip_path = out_dir / "tip.csv"
    result.tip_path.to_csv(tip_path)
    outputs["tip.csv"] = tip_path
    final_path = out_dir / "snapshot_final.rdas"
    write_snapshot(final_path, result.u, result.v, cfg.steps, cfg.t_end)
    outputs["snapshot_final.rdas"] = final_path
    write_manifest(
        out_dir / "manifest.json",
        "rdas",
        emit_rdas(cfg),
        outputs,
        time.monotonic() - started,
        __version__,
    )
    if result.loop_center is not None:
        cx, cy = result.loop_center
        print(f"wrote {tip_path}; loop center ({cx:.4f}, {cy:.4f})")
    else:
        print(f"wrote {tip_path}; no closed revolution detected")
    if result.lost_spiral:
        print("warning: spiral lost (tip missing in late-time samples)", file=sys.stderr)
    return EXIT_OK


def _find_acceptance_tests():
    here = Path(__file__).resolve()
    candidates = [
        Path.cwd() / "tests" / "test_acceptance.py",
        here.parents[2] / "tests" / "test_acceptance.py",
        here.parents[3] / "tests" / "test_acceptance.py" if len(here.parents) > 3 else None,
    ]
    for cand in candidates:
        if cand is not None and cand.exists():
            return cand
    return None


def _cmd_verify(args):
    target = args.tests or _find_acceptance_tests()
    if target is None or not Path(target).exists():
        print(
            "acceptance tests not found; run from the repository root or pass --tests",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    proc = subprocess.run([sys.executable, "-m", "pytest", str(target), "-v"])
    return EXIT_OK if proc.returncode == 0 else EXIT_NUMERICAL


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bundle":
            return _cmd_bundle(args)
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "rdas":
            return _cmd_rdas(args)
        return _cmd_verify(args)
    except (configparser.Error, ConfigurationError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpiralAnchorError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
