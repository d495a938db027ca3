"""Command line entry point: ``spinmarket <command> --config FILE [options]``.

Every command writes its CSV output plus a ``manifest`` into ``--out``.
Exit status is 0 on success, 1 on a validation or runtime error and 2 on
an I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .config import TOOL_NAME, ConfigError, ExperimentConfig, load_config, write_manifest
from .dynamics import run_market
from .meanfield import (
    RegimeOrderError,
    TransientError,
    classify_regime,
    mf_run,
    regime_boundaries,
    write_regime_csv,
)
from .observables import (
    BoundaryPeakError,
    BracketError,
    estimate_tc,
    find_critical_h,
    pulse_verdict,
    temperature_scan,
    write_persistence_csv,
    write_scan_csv,
)

__all__ = ["main", "run_cli"]


class CommandFailed(RuntimeError):
    """Outputs were written but the command could not produce its result."""


def _criterion(cfg: ExperimentConfig) -> dict:
    p = cfg.pulse
    if p is None:
        return {}
    return {"threshold": p["threshold"], "noise_factor": p["noise_factor"]}


def _cmd_run(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    series = run_market(cfg.run_config())
    series.to_csv(out / "series.csv")
    return {"rows": len(series), "final_n_up": float(series.n_up[-1]), "final_n_dn": float(series.n_dn[-1])}


def _cmd_scan(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    grid = cfg.scan_grid()
    rc = cfg.run_config(T=grid[0])
    discard = cfg.run["discard"]
    stats = temperature_scan(rc, grid, discard, cfg.run["sweeps"] - discard, threads)
    write_scan_csv(out / "scan.csv", stats)
    try:
        tc, err = estimate_tc(stats)
    except BoundaryPeakError as exc:
        raise CommandFailed(str(exc), {"tc_status": "boundary"}) from None
    return {"tc_status": "ok", "tc": tc, "tc_uncertainty": err}


def _single_pulse(cfg: ExperimentConfig) -> tuple[int, int, float]:
    if len(cfg.schedule) != 1:
        raise ConfigError(f"schedule: pulse needs exactly one [t1, t2, H] segment, got {len(cfg.schedule)}")
    return cfg.schedule[0]


def _cmd_pulse(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    cfg.require("pulse")
    t1, t2, H = _single_pulse(cfg)
    horizon, n_seeds = cfg.pulse["horizon"], cfg.pulse["n_seeds"]
    if t1 < horizon:
        raise ConfigError(f"schedule[0]: t1={t1} leaves no baseline window of pulse.horizon={horizon}")
    T = cfg.temperature()
    ok, reports = pulse_verdict(cfg.run_config(), T, H, t1, t2, horizon, n_seeds, threads, **_criterion(cfg))
    write_persistence_csv(out / "persistence.csv", [(H, T, r) for r in reports])
    return {"persistent": ok, "votes": sum(r.persistent for r in reports), "n_seeds": n_seeds}


def _cmd_hc(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    cfg.require("hc")
    hc = cfg.hc
    T = cfg.temperature()
    history: list = []
    try:
        lo, hi = find_critical_h(
            cfg.run_config(), T, hc["h_lo"], hc["h_hi"], hc["n_seeds"], hc["tol"],
            t1=hc["t1"], t2=hc["t2"], horizon=hc["horizon"], threads=threads,
            history=history, **_criterion(cfg),
        )
    except BracketError as exc:
        raise CommandFailed(str(exc), {"bracket_status": "failed", "probes": len(history)}) from None
    finally:
        rows = [(h, T, r) for h, _, reports in history for r in reports]
        write_persistence_csv(out / "persistence.csv", rows)
    return {"bracket_status": "ok", "h_lo": lo, "h_hi": hi, "probes": len(history)}


def _variant(cfg: ExperimentConfig) -> str:
    return "a/T" if cfg.mf["scale_a"] else "a"


def _cmd_mft(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.mf_params()
    f = cfg.mf
    traj = mf_run(p, f["steps"], f["a_p"], f["A"])
    traj.to_csv(out / "trajectory.csv")
    res = {"mf_variant": _variant(cfg), "final_s1": float(traj.s1[-1]), "final_s2": float(traj.s2[-1])}
    try:
        rep = classify_regime(traj, f["tail"], f["class_tol"])
    except TransientError:
        res["regime"] = "transient"
        return res
    res.update(regime=rep.regime, period=rep.period, amplitude=rep.amplitude)
    return res


def _cmd_mft_scan(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    cfg.require("mf")
    f = cfg.mf
    if f["T_list"] is None and f["T_lo"] is None:
        raise ConfigError("mf.T_list: mft-scan needs mf.T_list and/or mf.T_lo, mf.T_hi")
    rows = []
    for T in f["T_list"] or []:
        try:
            rep = classify_regime(mf_run(cfg.mf_params(T), f["steps"], f["a_p"], f["A"]), f["tail"], f["class_tol"])
        except TransientError:
            rep = None
        rows.append((T, rep))
    write_regime_csv(out / "regime.csv", rows)
    res: dict = {"mf_variant": _variant(cfg)}
    if f["T_lo"] is not None:
        p = cfg.mf_params(f["T_lo"])
        try:
            t_c1, t_c2 = regime_boundaries(p, f["T_lo"], f["T_hi"], f["tol"], f["steps"], f["tail"], f["class_tol"])
        except RegimeOrderError as exc:
            res["boundary_status"] = "failed"
            raise CommandFailed(str(exc), res) from None
        res.update(boundary_status="ok", t_c1=t_c1, t_c2=t_c2)
    return res


COMMANDS: dict[str, tuple[Callable, str]] = {
    "run": (_cmd_run, "single time series -> series.csv"),
    "scan": (_cmd_scan, "temperature scan and T_c estimate -> scan.csv"),
    "pulse": (_cmd_pulse, "field pulse persistence -> persistence.csv"),
    "hc-search": (_cmd_hc, "bisection for the critical pulse strength -> persistence.csv"),
    "mft": (_cmd_mft, "mean-field trajectory -> trajectory.csv"),
    "mft-scan": (_cmd_mft_scan, "mean-field regime scan and boundaries -> regime.csv"),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="TOML config or a previous manifest")
    common.add_argument("--seed", type=int, default=None, help="root seed, overrides run.seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    common.add_argument("--threads", type=int, default=1, help="concurrent replicas or temperatures")
    ap = argparse.ArgumentParser(prog=TOOL_NAME, description="Spin market simulations.")
    ap.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return ap


def _err(msg: str) -> None:
    print(f"{TOOL_NAME}: error: {msg}", file=sys.stderr)


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.threads < 1:
        _err("--threads must be >= 1")
        return 1
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return 2
    except ConfigError as exc:
        _err(str(exc))
        return 1
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            _err("--seed must be an unsigned 64-bit integer")
            return 1
        if cfg.run is not None:
            cfg = replace(cfg, run={**cfg.run, "seed": args.seed})

    tool = {"name": TOOL_NAME, "version": __version__, "command": args.command}
    fn = COMMANDS[args.command][0]
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        status = 0
        try:
            results = fn(cfg, args.out, args.threads)
        except CommandFailed as exc:
            msg, results = exc.args
            _err(msg)
            status = 1
        write_manifest(args.out / "manifest", cfg, tool, results)
    except OSError as exc:
        _err(f"I/O failure: {exc}")
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        _err(str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
        return 1
    return status


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
