"""TOML experiment configuration, emission and run manifests.

Schema (every key lives in a table; unknown keys are rejected)::

    [model]      spin = 1 | 2 | ... | "continuous", J, a, A = 3.0
    [lattice]    L
    [run]        T, sweeps, discard = sweeps // 2, f_up, f_dn, seed = 0,
                 mode = "snapshot"
    schedule     = [[t1, t2, H], ...]          (top level, optional)
    [scan]       T_list = [...]  or  T_range = [lo, hi, step]
    [pulse]      horizon = 200, n_seeds = 1, threshold = 0.5, noise_factor = 3.0
    [hc]         h_lo, h_hi, tol, n_seeds, t1 = 400, t2 = 600, horizon = 200
    [mf]         J1, J2, K12, K21, a, T, M1 = 1, M2 = 1, s1_0 = 1.0, s2_0 = -1.0,
                 a_p = 1.0, A = 3.0, steps = 2000, T_list, T_lo, T_hi,
                 tol = 0.01, scale_a = false, tail = 500, class_tol = 1e-3

Physics-bearing keys have no defaults except ``A``, ``discard`` and
``mode``.  Defaults for search and classification settings are filled in
and echoed by :func:`emit`, so a resolved config always carries every value
that affects output.

A manifest is the resolved config written as dotted ``key = value`` lines
plus ``tool.*`` and ``results.*`` entries.  It is valid TOML and
:func:`load_config` accepts it directly for re-runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import tomli
import tomli_w

from .dynamics import UPDATE_MODES, RunConfig
from .lattice import build_fcc
from .meanfield import MeanFieldParams
from .model import FieldSchedule, ModelParams, SpinSpace

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "emit",
    "manifest_lines",
    "write_manifest",
    "TOOL_NAME",
]

TOOL_NAME = "spinmarket"
_MANIFEST_TABLES = ("tool", "results")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


_REQ = object()

# key -> (kind, default); _REQ marks a key without a default
_SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "model": {"spin": ("spin", _REQ), "J": ("float", _REQ), "a": ("nonneg", _REQ), "A": ("float", 3.0)},
    "lattice": {"L": ("int", _REQ)},
    "run": {
        "T": ("pos", None),
        "sweeps": ("int", _REQ),
        "discard": ("int", None),
        "f_up": ("nonneg", _REQ),
        "f_dn": ("nonneg", _REQ),
        "seed": ("seed", 0),
        "mode": ("mode", "snapshot"),
    },
    "scan": {"T_list": ("floats", None), "T_range": ("floats", None)},
    "pulse": {
        "horizon": ("int", 200),
        "n_seeds": ("int", 1),
        "threshold": ("float", 0.5),
        "noise_factor": ("pos", 3.0),
    },
    "hc": {
        "h_lo": ("float", _REQ),
        "h_hi": ("float", _REQ),
        "tol": ("pos", _REQ),
        "n_seeds": ("int", _REQ),
        "t1": ("int", 400),
        "t2": ("int", 600),
        "horizon": ("int", 200),
    },
    "mf": {
        "J1": ("float", _REQ),
        "J2": ("float", _REQ),
        "K12": ("float", _REQ),
        "K21": ("float", _REQ),
        "a": ("float", _REQ),
        "T": ("pos", None),
        "M1": ("int", 1),
        "M2": ("int", 1),
        "s1_0": ("float", 1.0),
        "s2_0": ("float", -1.0),
        "a_p": ("float", 1.0),
        "A": ("float", 3.0),
        "steps": ("int", 2000),
        "T_list": ("floats", None),
        "T_lo": ("pos", None),
        "T_hi": ("pos", None),
        "tol": ("pos", 0.01),
        "scale_a": ("bool", False),
        "tail": ("int", 500),
        "class_tol": ("pos", 1e-3),
    },
}


def _coerce(key: str, kind: str, v: Any) -> Any:
    def fail(msg: str):
        raise ConfigError(f"{key}: {msg}, got {v!r}")

    is_num = isinstance(v, (int, float)) and not isinstance(v, bool)
    if kind in ("float", "pos", "nonneg"):
        if not is_num or not math.isfinite(v):
            fail("expected a finite number")
        v = float(v)
        if kind == "pos" and not v > 0:
            fail("must be > 0")
        if kind == "nonneg" and v < 0:
            fail("must be >= 0")
        return v
    if kind == "int":
        if not isinstance(v, int) or isinstance(v, bool):
            fail("expected an integer")
        return v
    if kind == "seed":
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < 2**64:
            fail("expected an unsigned 64-bit integer")
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            fail("expected true or false")
        return v
    if kind == "mode":
        if v not in UPDATE_MODES:
            fail(f"expected one of {', '.join(UPDATE_MODES)}")
        return v
    if kind == "spin":
        if v == "continuous":
            return v
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            fail('expected a positive integer S or "continuous"')
        return v
    if kind == "floats":
        if not isinstance(v, list) or not v:
            fail("expected a non-empty list of numbers")
        return [_coerce(key, "float", x) for x in v]
    raise AssertionError(kind)


def _schedule(v: Any) -> tuple[tuple[int, int, float], ...]:
    if not isinstance(v, list):
        raise ConfigError(f"schedule: expected a list of [t1, t2, H] triples, got {v!r}")
    out = []
    for k, seg in enumerate(v):
        key = f"schedule[{k}]"
        if not isinstance(seg, list) or len(seg) != 3:
            raise ConfigError(f"{key}: expected [t1, t2, H], got {seg!r}")
        t1 = _coerce(key + ".t1", "int", seg[0])
        t2 = _coerce(key + ".t2", "int", seg[1])
        H = _coerce(key + ".H", "float", seg[2])
        if not 0 <= t1 < t2:
            raise ConfigError(f"{key}: need 0 <= t1 < t2, got [{t1}, {t2})")
        out.append((t1, t2, H))
    try:
        return FieldSchedule(tuple(out)).segments
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully resolved experiment description.

    Each section is a plain dict of resolved values, or ``None`` when the
    table was absent.
    """

    model: dict | None = None
    lattice: dict | None = None
    run: dict | None = None
    schedule: tuple[tuple[int, int, float], ...] = ()
    scan: dict | None = None
    pulse: dict | None = None
    hc: dict | None = None
    mf: dict | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for name in _SCHEMA:
            sec = getattr(self, name)
            if sec is not None:
                out[name] = {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sec.items()}
        if self.schedule:
            out["schedule"] = [list(s) for s in self.schedule]
        return out

    def require(self, *sections: str) -> None:
        for name in sections:
            if getattr(self, name) is None:
                raise ConfigError(f"[{name}]: section required for this command")

    def spin_space(self) -> SpinSpace:
        self.require("model")
        s = self.model["spin"]
        return SpinSpace.continuous() if s == "continuous" else SpinSpace.discrete(s)

    def temperature(self) -> float:
        self.require("run")
        if self.run["T"] is None:
            raise ConfigError("run.T: required for this command")
        return self.run["T"]

    def run_config(self, T: float | None = None, schedule: FieldSchedule | None = None) -> RunConfig:
        """Build the :class:`RunConfig`; ``T`` defaults to ``run.T``."""
        self.require("model", "lattice", "run")
        T = self.temperature() if T is None else T
        m, r = self.model, self.run
        params = ModelParams(
            spin_space=self.spin_space(),
            J=m["J"],
            a=m["a"],
            A=m["A"],
            T=T,
            schedule=FieldSchedule(self.schedule) if schedule is None else schedule,
        )
        return RunConfig(
            graph=build_fcc(self.lattice["L"]),
            params=params,
            n_sweeps=r["sweeps"],
            init=(r["f_up"], r["f_dn"]),
            seed=r["seed"],
            update_mode=r["mode"],
        )

    def scan_grid(self) -> list[float]:
        self.require("scan")
        if self.scan["T_list"] is not None:
            return list(self.scan["T_list"])
        lo, hi, step = self.scan["T_range"]
        n = int(round((hi - lo) / step)) + 1
        return [float(x) for x in np.linspace(lo, lo + (n - 1) * step, n)]

    def mf_params(self, T: float | None = None) -> MeanFieldParams:
        self.require("mf")
        f = self.mf
        T = f["T"] if T is None else T
        if T is None:
            raise ConfigError("mf.T: required for this command")
        return MeanFieldParams(
            J1=f["J1"], J2=f["J2"], K12=f["K12"], K21=f["K21"], a=f["a"], T=T,
            M1=f["M1"], M2=f["M2"], s1_0=f["s1_0"], s2_0=f["s2_0"], scale_a=f["scale_a"],
        )


def _section(name: str, raw: Any) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a table")
    schema = _SCHEMA[name]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key (allowed: {', '.join(schema)})")
    out = {}
    for key, (kind, default) in schema.items():
        full = f"{name}.{key}"
        if key in raw:
            out[key] = _coerce(full, kind, raw[key])
        elif default is _REQ:
            raise ConfigError(f"{full}: required key missing")
        else:
            out[key] = default
    return out


def _validate(cfg: dict[str, dict]) -> None:
    lat = cfg.get("lattice")
    if lat is not None and lat["L"] < 2:
        raise ConfigError(f"lattice.L: must be >= 2, got {lat['L']}")
    run = cfg.get("run")
    if run is not None:
        if run["sweeps"] < 1:
            raise ConfigError(f"run.sweeps: must be >= 1, got {run['sweeps']}")
        if run["discard"] is None:
            run["discard"] = run["sweeps"] // 2
        if not 0 <= run["discard"] < run["sweeps"] + 1:
            raise ConfigError(f"run.discard: must lie in [0, run.sweeps], got {run['discard']}")
        if run["f_up"] + run["f_dn"] > 1 + 1e-12:
            raise ConfigError("run.f_up: f_up + f_dn must not exceed 1")
    scan = cfg.get("scan")
    if scan is not None:
        has_list, has_range = scan["T_list"] is not None, scan["T_range"] is not None
        if has_list == has_range:
            raise ConfigError("scan.T_list: give exactly one of scan.T_list or scan.T_range")
        if has_list and any(T <= 0 for T in scan["T_list"]):
            raise ConfigError("scan.T_list: temperatures must be > 0")
        if has_range:
            rng = scan["T_range"]
            if len(rng) != 3 or not 0 < rng[0] < rng[1] or rng[2] <= 0:
                raise ConfigError("scan.T_range: expected [lo, hi, step] with 0 < lo < hi and step > 0")
    pulse = cfg.get("pulse")
    if pulse is not None:
        if pulse["horizon"] < 2:
            raise ConfigError("pulse.horizon: must be >= 2")
        if pulse["n_seeds"] < 1:
            raise ConfigError("pulse.n_seeds: must be >= 1")
    hc = cfg.get("hc")
    if hc is not None:
        if not hc["h_lo"] < hc["h_hi"]:
            raise ConfigError("hc.h_lo: must be < hc.h_hi")
        if hc["n_seeds"] < 1:
            raise ConfigError("hc.n_seeds: must be >= 1")
        if not hc["horizon"] <= hc["t1"] < hc["t2"]:
            raise ConfigError("hc.t1: need hc.horizon <= hc.t1 < hc.t2")
    mf = cfg.get("mf")
    if mf is not None:
        for k in ("M1", "M2"):
            if mf[k] < 1:
                raise ConfigError(f"mf.{k}: must be >= 1")
        if abs(mf["s1_0"]) > mf["M1"] or abs(mf["s2_0"]) > mf["M2"]:
            raise ConfigError("mf.s1_0: initial averages must satisfy |s_n| <= M_n")
        if mf["steps"] < 1:
            raise ConfigError("mf.steps: must be >= 1")
        if not 4 <= mf["tail"] < mf["steps"] + 1:
            raise ConfigError("mf.tail: must lie in [4, mf.steps]")
        if (mf["T_lo"] is None) != (mf["T_hi"] is None):
            raise ConfigError("mf.T_lo: give both mf.T_lo and mf.T_hi or neither")
        if mf["T_lo"] is not None and not mf["T_lo"] < mf["T_hi"]:
            raise ConfigError("mf.T_lo: must be < mf.T_hi")
        if mf["T_list"] is not None and any(T <= 0 for T in mf["T_list"]):
            raise ConfigError("mf.T_list: temperatures must be > 0")


def _from_mapping(doc: Mapping[str, Any]) -> ExperimentConfig:
    allowed = set(_SCHEMA) | {"schedule"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown top-level key (allowed: {', '.join(sorted(allowed))})")
    sections = {name: _section(name, doc[name]) for name in _SCHEMA if name in doc}
    _validate(sections)
    schedule = _schedule(doc["schedule"]) if "schedule" in doc else ()
    return ExperimentConfig(schedule=schedule, **sections)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML document.

    Raises
    ------
    ConfigError
        On TOML syntax errors (message carries the line and column, including
        for duplicate keys) and on any semantic error (message starts with the
        dotted key).
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    return _from_mapping(doc)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a config or a manifest written by :func:`write_manifest`."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: syntax error: {exc}") from None
    tool = doc.get("tool")
    if isinstance(tool, dict) and tool.get("name") == TOOL_NAME:
        for name in _MANIFEST_TABLES:
            doc.pop(name, None)
    return _from_mapping(doc)


def emit(cfg: ExperimentConfig) -> str:
    """TOML text with every resolved value; ``parse_config(emit(c)) == c``."""
    d = cfg.to_dict()
    for sec in d.values():
        if isinstance(sec, dict):
            for k in [k for k, v in sec.items() if v is None]:
                del sec[k]
    return tomli_w.dumps(d)


def _flatten(prefix: str, value: Any, out: list[tuple[str, Any]]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif value is not None:
        out.append((prefix, value))


def _inline(v: Any) -> str:
    """Single-line TOML literal (tomli_w spreads arrays over several lines)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    raise TypeError(f"cannot render {type(v).__name__} in a manifest")


def manifest_lines(cfg: ExperimentConfig, tool: Mapping[str, Any], results: Mapping[str, Any]) -> list[str]:
    """Dotted ``key = value`` lines: config, then ``tool.*``, then ``results.*``."""
    flat: list[tuple[str, Any]] = []
    _flatten("", cfg.to_dict(), flat)
    _flatten("tool", dict(tool), flat)
    _flatten("results", dict(results), flat)
    return [f"{key} = {_inline(v)}" for key, v in flat]


def write_manifest(path: str | Path, cfg: ExperimentConfig, tool: Mapping[str, Any], results: Mapping[str, Any]) -> None:
    Path(path).write_text("\n".join(manifest_lines(cfg, tool, results)) + "\n", encoding="utf-8")
