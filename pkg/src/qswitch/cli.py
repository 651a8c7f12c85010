"""Command-line front end.

Usage::

    qswitch COMMAND [CONFIG.json] [--seed N] [--samples N] [--out PATH] [--format csv|json]

Commands: emax, egs, mem, compare, frontier, sweep-kl, sweep-kf, utility-k,
dominance. Each writes one CSV or JSON artifact and prints a single
``key=value`` summary line. Configuration keys are documented in
``CONFIG_KEYS``; a missing file or an empty document means the bundled
baseline (``qswitch/data/baseline.json``).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from qswitch import bench
from qswitch.bmatch import CapacityVector, emax_closed_form, greedy_max_allocation
from qswitch.egs import evaluate_egs
from qswitch.errors import ConfigError, ParameterDomainError, QSwitchError
from qswitch.hwmodel import HardwareProfile
from qswitch.memswitch import DEFAULT_SEED, Estimator, evaluate_mem, mem_max_total_rate, optimize_block_size
from qswitch.utility import UtilityKind, utility

__all__ = ["RunConfig", "CONFIG_KEYS", "COMMANDS", "parse_config", "config_to_dict", "config_hash", "emit", "run", "main"]

COMMANDS = ("emax", "egs", "mem", "compare", "frontier", "sweep-kl", "sweep-kf", "utility-k", "dominance")

CONFIG_KEYS: dict[str, str] = {
    "profile": "hardware parameters by field name; omitted fields keep baseline values",
    "estimator": "'exact' (default) or 'mc' for E[E_max]",
    "n_samples": "Monte Carlo samples (default 100000)",
    "seed": f"Monte Carlo master seed, 64-bit unsigned (default {DEFAULT_SEED})",
    "workers": "Monte Carlo worker threads; never changes results (default 1)",
    "K": "block size for `mem` (default 30)",
    "protocol": "'block' (default) or 'single' for `mem`",
    "K_range": "[first, last] inclusive block-size range for searches and K axes (default [1, 60])",
    "objective": "block-size objective for the memory side of frontier/compare: rate|U_DE|U_SKF|U_NGT (default U_NGT)",
    "caps": "node capacities for `emax` (default: profile multiplex)",
    "budget": "global budget for `emax` (default: profile bsm_budget)",
    "beta": "source brightness for `compare` (default: profile beta)",
    "beta_axis": "list of beta values (default 0.005..0.15 step 0.005)",
    "L_axis": "list of link lengths in km (default 25 log-spaced points over [0.01, 20])",
    "f_axis": "list of pulse rates in Hz (default 1e4..1e9 decades)",
    "scenarios": "list of {name, overrides} for `dominance` (default: source rate, length and size variants)",
    "out": "output path (default '<command>.<format>')",
    "format": "'csv' (default) or 'json'",
}

_NON_SEMANTIC = ("workers", "out", "format")


@dataclass(frozen=True)
class RunConfig:
    profile: HardwareProfile = field(default_factory=HardwareProfile)
    estimator: str = "exact"
    n_samples: int = 100_000
    seed: int = DEFAULT_SEED
    workers: int = 1
    K: int = 30
    protocol: str = "block"
    K_range: tuple[int, int] = (1, 60)
    objective: str = "U_NGT"
    caps: tuple[int, ...] | None = None
    budget: int | None = None
    beta: float | None = None
    beta_axis: tuple[float, ...] = bench.DEFAULT_BETA_AXIS
    L_axis: tuple[float, ...] = bench.DEFAULT_L_AXIS
    f_axis: tuple[float, ...] = bench.DEFAULT_F_AXIS
    scenarios: tuple[bench.Scenario, ...] = bench.DEFAULT_SCENARIOS
    out: str | None = None
    format: str = "csv"

    @property
    def k_values(self) -> range:
        return range(self.K_range[0], self.K_range[1] + 1)

    def make_estimator(self) -> Estimator:
        return Estimator(self.estimator, self.n_samples, self.seed, self.workers)  # type: ignore[arg-type]


# parsing helpers


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _int(key: str, v: Any, minimum: int | None = None) -> int:
    if not _is_int(v) or (minimum is not None and v < minimum):
        bound = f" >= {minimum}" if minimum is not None else ""
        raise ConfigError(f"{key}: expected an integer{bound}, got {v!r}", field=key)
    return v


def _number_list(key: str, v: Any) -> tuple[float, ...]:
    if not isinstance(v, list) or not v or not all(_is_number(x) for x in v):
        raise ConfigError(f"{key}: expected a nonempty list of numbers", field=key)
    return tuple(float(x) for x in v)


def _choice(key: str, v: Any, options: Sequence[str]) -> str:
    if v not in options:
        raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {v!r}", field=key)
    return v


_PROFILE_INT = {"n_clients", "bsm_budget"}
_PROFILE_INT_LIST = {"multiplex", "mem_per_client"}
_PROFILE_BOOL = {"optical_swap"}


def _parse_profile(raw: Any) -> HardwareProfile:
    if not isinstance(raw, dict):
        raise ConfigError("profile: expected an object", field="profile")
    known = set(HardwareProfile.field_names())
    values: dict[str, Any] = {}
    for key, v in raw.items():
        name = f"profile.{key}"
        if key not in known:
            raise ConfigError(f"unknown key {name}", field=name)
        if key in _PROFILE_INT:
            values[key] = _int(name, v)
        elif key in _PROFILE_INT_LIST:
            if not isinstance(v, list) or not all(_is_int(x) for x in v):
                raise ConfigError(f"{name}: expected a list of integers", field=name)
            values[key] = tuple(v)
        elif key in _PROFILE_BOOL:
            if not isinstance(v, bool):
                raise ConfigError(f"{name}: expected true or false", field=name)
            values[key] = v
        else:
            if not _is_number(v):
                raise ConfigError(f"{name}: expected a finite number, got {v!r}", field=name)
            values[key] = float(v)
    try:
        return HardwareProfile().replace(**values)
    except ParameterDomainError as exc:
        raise ConfigError(f"profile.{exc.name}: {exc.reason} (got {exc.value!r})", field=f"profile.{exc.name}") from exc


def _parse_scenarios(raw: Any) -> tuple[bench.Scenario, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("scenarios: expected a nonempty list", field="scenarios")
    out = []
    known = set(HardwareProfile.field_names())
    for i, item in enumerate(raw):
        name = f"scenarios[{i}]"
        if not isinstance(item, dict) or set(item) - {"name", "overrides"} or not isinstance(item.get("name"), str):
            raise ConfigError(f"{name}: expected {{'name': str, 'overrides': {{...}}}}", field=name)
        overrides = item.get("overrides", {})
        if not isinstance(overrides, dict) or set(overrides) - known:
            raise ConfigError(f"{name}.overrides: unknown profile field(s)", field=name)
        out.append(bench.Scenario(item["name"], dict(overrides)))
    return tuple(out)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON run configuration.

    Every key is optional; see ``CONFIG_KEYS``. Raises ``ConfigError`` for
    syntax errors (with line/column), unknown keys and invalid values.
    """
    if not text.strip():
        raw: Any = {}
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}", line=exc.lineno, column=exc.colno
            ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}", field=unknown[0])

    kw: dict[str, Any] = {}
    if "profile" in raw:
        kw["profile"] = _parse_profile(raw["profile"])
    if "estimator" in raw:
        kw["estimator"] = _choice("estimator", raw["estimator"], ("exact", "mc"))
    if "n_samples" in raw:
        kw["n_samples"] = _int("n_samples", raw["n_samples"], 1)
    if "seed" in raw:
        kw["seed"] = _int("seed", raw["seed"], 0)
        if kw["seed"] >= 2**64:
            raise ConfigError("seed: must fit in 64 bits", field="seed")
    if "workers" in raw:
        kw["workers"] = _int("workers", raw["workers"], 1)
    if "K" in raw:
        kw["K"] = _int("K", raw["K"], 1)
    if "protocol" in raw:
        kw["protocol"] = _choice("protocol", raw["protocol"], ("block", "single"))
    if "K_range" in raw:
        kr = raw["K_range"]
        if not (isinstance(kr, list) and len(kr) == 2 and all(_is_int(k) for k in kr) and 1 <= kr[0] <= kr[1]):
            raise ConfigError("K_range: expected [first, last] with 1 <= first <= last", field="K_range")
        kw["K_range"] = (kr[0], kr[1])
    if "objective" in raw:
        kw["objective"] = _choice("objective", raw["objective"], ("rate", "U_DE", "U_SKF", "U_NGT"))
    if "caps" in raw:
        caps = raw["caps"]
        if not (isinstance(caps, list) and len(caps) >= 2 and all(_is_int(c) and c >= 0 for c in caps)):
            raise ConfigError("caps: expected a list of >= 2 nonnegative integers", field="caps")
        kw["caps"] = tuple(caps)
    if "budget" in raw:
        kw["budget"] = _int("budget", raw["budget"], 0)
    if "beta" in raw:
        if not _is_number(raw["beta"]) or raw["beta"] < 0:
            raise ConfigError("beta: expected a number >= 0", field="beta")
        kw["beta"] = float(raw["beta"])
    for key in ("beta_axis", "L_axis", "f_axis"):
        if key in raw:
            kw[key] = _number_list(key, raw[key])
    if "scenarios" in raw:
        kw["scenarios"] = _parse_scenarios(raw["scenarios"])
    if "out" in raw:
        if not isinstance(raw["out"], str) or not raw["out"]:
            raise ConfigError("out: expected a path string", field="out")
        kw["out"] = raw["out"]
    if "format" in raw:
        kw["format"] = _choice("format", raw["format"], ("csv", "json"))
    return RunConfig(**kw)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Canonical JSON-ready form; ``parse_config(json.dumps(...))`` reproduces ``cfg``."""
    d: dict[str, Any] = {
        "profile": cfg.profile.to_dict(),
        "estimator": cfg.estimator,
        "n_samples": cfg.n_samples,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "K": cfg.K,
        "protocol": cfg.protocol,
        "K_range": list(cfg.K_range),
        "objective": cfg.objective,
        "beta_axis": list(cfg.beta_axis),
        "L_axis": list(cfg.L_axis),
        "f_axis": list(cfg.f_axis),
        "scenarios": [{"name": s.name, "overrides": dict(s.overrides)} for s in cfg.scenarios],
        "format": cfg.format,
    }
    if cfg.caps is not None:
        d["caps"] = list(cfg.caps)
    if cfg.budget is not None:
        d["budget"] = cfg.budget
    if cfg.beta is not None:
        d["beta"] = cfg.beta
    if cfg.out is not None:
        d["out"] = cfg.out
    return d


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical config minus keys that cannot change results."""
    d = {k: v for k, v in config_to_dict(cfg).items() if k not in _NON_SEMANTIC}
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_baseline_text() -> str:
    return resources.files("qswitch").joinpath("data/baseline.json").read_text()


# output


def _plain(v: Any) -> Any:
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return None if math.isnan(f) else f
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _csv_field(v: Any) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit(result: bench.SweepResult, fmt: str, extra_metadata: dict[str, Any] | None = None) -> bytes:
    """Serialize a sweep result deterministically.

    CSV: one header row of axis and metric names, one row per cell in
    row-major order, 17 significant digits, LF endings, masked cells empty.
    JSON: axes, shape, row-major metric arrays (``null`` when masked),
    annotations and metadata.
    """
    names = [a.name for a in result.axes]
    metric_names = list(result.metrics)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names + metric_names)
        for idx in np.ndindex(*result.shape):
            row = [result.axes[d].values[i] for d, i in enumerate(idx)]
            row += [result.metrics[m][idx] for m in metric_names]
            writer.writerow([_csv_field(v) for v in row])
        return buf.getvalue().encode()
    if fmt == "json":
        doc = {
            "axes": [{"name": a.name, "unit": a.unit, "values": _plain(list(a.values))} for a in result.axes],
            "shape": list(result.shape),
            "metrics": {m: _plain(result.metrics[m].reshape(-1).tolist()) for m in metric_names},
            "annotations": _plain(result.annotations),
            "metadata": _plain({**result.metadata, **(extra_metadata or {})}),
        }
        return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode()
    raise ConfigError(f"format: expected csv or json, got {fmt!r}", field="format")


# commands


def _fmt(v: float | None) -> str:
    return "undefined" if v is None or (isinstance(v, float) and math.isnan(v)) else format(v, ".10g")


def _point(metrics: dict[str, Any], metadata: dict[str, Any]) -> bench.SweepResult:
    arrays = {k: np.array(float("nan") if v is None else v, dtype=float) for k, v in metrics.items()}
    return bench.SweepResult(axes=[], metrics=arrays, metadata=metadata)


def _cmd_emax(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    cv = CapacityVector(cfg.caps or cfg.profile.multiplex, cfg.budget if cfg.budget is not None else cfg.profile.bsm_budget)
    value = emax_closed_form(cv)
    alloc = greedy_max_allocation(cv)
    pairs = cv.pairs()
    result = bench.SweepResult(
        axes=[bench.Axis("pair", tuple(f"{i}-{j}" for i, j in pairs))],
        metrics={"x": np.array([alloc.get(p, 0) for p in pairs], dtype=float)},
        metadata={"caps": list(cv.caps), "budget": cv.budget, "emax": value},
    )
    witness = ",".join(f"{i}-{j}:{x}" for (i, j), x in sorted(alloc.items()))
    return result, f"command=emax emax={value} witness={witness or 'none'}"


def _cmd_egs(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    m = evaluate_egs(cfg.profile)
    metrics = {
        "rate_total": m.rate_total,
        "rate_normalized": m.rate_normalized,
        "werner_e2e": m.werner_e2e,
        "fidelity_e2e": m.fidelity_e2e,
        "slot_duration": m.slot_duration,
    }
    summary = "command=egs " + " ".join(f"{k}={_fmt(v)}" for k, v in metrics.items())
    return _point(metrics, {"profile": cfg.profile.to_dict()}), summary


def _cmd_mem(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    est = cfg.make_estimator()
    m = evaluate_mem(cfg.profile, cfg.K, cfg.protocol, est)  # type: ignore[arg-type]
    rate = mem_max_total_rate(cfg.profile, cfg.K, cfg.protocol, est)  # type: ignore[arg-type]
    metrics = {
        "K": cfg.K,
        "rate_total": m.rate_total,
        "rate_normalized": m.rate_normalized,
        "werner_e2e": m.werner_e2e,
        "fidelity_e2e": m.fidelity_e2e,
        "slot_duration": m.slot_duration,
        "link_prob": rate.link_prob,
        "expected_swaps": rate.expected_swaps,
        "expected_swaps_std_error": rate.estimate.std_error if rate.estimate else 0.0,
    }
    summary = f"command=mem protocol={cfg.protocol} " + " ".join(f"{k}={_fmt(v)}" for k, v in metrics.items())
    return _point(metrics, {"profile": cfg.profile.to_dict(), "protocol": cfg.protocol}), summary


def _cmd_compare(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    profile = cfg.profile if cfg.beta is None else cfg.profile.replace(beta=cfg.beta)
    est = cfg.make_estimator()
    egs = evaluate_egs(profile)
    u_egs = utility(UtilityKind.NGT, egs.rate_normalized, egs.fidelity_e2e)
    k_star, _ = optimize_block_size(profile, "U_NGT", cfg.k_values, est)
    mem = evaluate_mem(profile, k_star, "block", est)
    u_mem = utility(UtilityKind.NGT, mem.rate_normalized, mem.fidelity_e2e)
    delta = None if u_egs is None or u_mem is None else u_mem - u_egs
    metrics = {
        "beta": profile.beta,
        "egs_rate": egs.rate_normalized,
        "egs_fidelity": egs.fidelity_e2e,
        "egs_U_NGT": u_egs,
        "mem_K": k_star,
        "mem_rate": mem.rate_normalized,
        "mem_fidelity": mem.fidelity_e2e,
        "mem_U_NGT": u_mem,
        "delta_U_NGT": delta,
    }
    if delta is None:
        verdict = "undefined"
        delta_txt = "undefined"
    else:
        verdict = "mem" if delta > 0 else "egs" if delta < 0 else "tie"
        delta_txt = format(delta, "+.10g")
    summary = (
        f"command=compare beta={profile.beta:g} K_star={k_star} delta_U_NGT={delta_txt} favors={verdict} "
        f"egs_fidelity={_fmt(egs.fidelity_e2e)} mem_fidelity={_fmt(mem.fidelity_e2e)}"
    )
    return _point(metrics, {"profile": profile.to_dict()}), summary


def _cmd_frontier(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    res = bench.frontier_vs_beta(cfg.profile, cfg.beta_axis, cfg.k_values, cfg.make_estimator(), cfg.objective)
    window = bench.memory_dominance_window(res)
    res.metadata["memory_window"] = None if window is None else list(window)
    win = "none" if window is None else f"{window[0]:.4f}..{window[1]:.4f}"
    summary = (
        f"command=frontier points={len(cfg.beta_axis)} memory_window={win} "
        f"max_fidelity_egs={_fmt(float(np.nanmax(res.metrics['egs_fidelity'])))} "
        f"max_fidelity_mem={_fmt(float(np.nanmax(res.metrics['mem_fidelity'])))}"
    )
    return res, summary


def _cmd_sweep_kl(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    res = bench.sweep_rate_K_L(cfg.profile, list(cfg.k_values), cfg.L_axis, cfg.make_estimator())
    ks = res.axes[0].values
    best = ",".join(str(ks[i]) for i in res.annotations["argmax_K"])
    return res, f"command=sweep-kl argmax_K={best}"


def _cmd_sweep_kf(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    res = bench.sweep_fidelity_K_fpulse(cfg.profile, list(cfg.k_values), cfg.f_axis)
    fid = res.metrics["fidelity_e2e"]
    return res, f"command=sweep-kf fidelity_min={_fmt(float(fid.min()))} fidelity_max={_fmt(float(fid.max()))}"


def _cmd_utility_k(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    res = bench.utilities_vs_K(cfg.profile, list(cfg.k_values), cfg.make_estimator())
    ks = res.axes[0].values
    parts = []
    for kind in UtilityKind:
        i = res.annotations[f"argmax_{kind.value}"][0]
        parts.append(f"argmax_{kind.value}={ks[i] if i >= 0 else 'undefined'}")
    return res, "command=utility-k " + " ".join(parts)


def _cmd_dominance(cfg: RunConfig) -> tuple[bench.SweepResult, str]:
    res = bench.dominance_sweep(cfg.profile, cfg.beta_axis, cfg.scenarios, cfg.k_values, cfg.make_estimator())
    delta = res.metrics["delta_U_NGT"]
    parts = []
    for b, name in enumerate(res.axes[1].values):
        col = delta[:, b]
        parts.append(f"{name}={_fmt(float(np.nanmin(col)))}..{_fmt(float(np.nanmax(col)))}")
    return res, "command=dominance delta_U_NGT " + " ".join(parts)


_HANDLERS = {
    "emax": _cmd_emax,
    "egs": _cmd_egs,
    "mem": _cmd_mem,
    "compare": _cmd_compare,
    "frontier": _cmd_frontier,
    "sweep-kl": _cmd_sweep_kl,
    "sweep-kf": _cmd_sweep_kf,
    "utility-k": _cmd_utility_k,
    "dominance": _cmd_dominance,
}


def run(command: str, cfg: RunConfig, stdout=None) -> int:
    """Execute ``command``, write its artifact, print the summary; return the exit status."""
    stdout = stdout or sys.stdout
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", field="command")
    result, summary = _HANDLERS[command](cfg)
    extra = {
        "command": command,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "config": {k: v for k, v in config_to_dict(cfg).items() if k not in _NON_SEMANTIC},
    }
    data = emit(result, cfg.format, extra)
    path = Path(cfg.out or f"{command}.{cfg.format}")
    path.write_bytes(data)
    print(f"{summary} out={path}", file=stdout)
    return 0


def _error_line(exc: BaseException) -> str:
    parts = [f"error={type(exc).__name__}"]
    for attr in ("field", "line", "column"):
        v = getattr(exc, attr, None)
        if v is not None:
            parts.append(f"{attr}={v}")
    parts.append(f"message={json.dumps(str(exc))}")
    return " ".join(parts)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="qswitch", description="Quantum switch rate/fidelity models and sweeps.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", nargs="?", help="JSON run configuration (default: bundled baseline)")
    parser.add_argument("--seed", type=int, help="override the Monte Carlo master seed")
    parser.add_argument("--samples", type=int, help="override the Monte Carlo sample count")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else load_baseline_text()
        cfg = parse_config(text)
        overrides: dict[str, Any] = {}
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must be a 64-bit unsigned integer", field="seed")
            overrides["seed"] = args.seed
        if args.samples is not None:
            if args.samples < 1:
                raise ConfigError("--samples: must be >= 1", field="n_samples")
            overrides["n_samples"] = args.samples
        if args.out is not None:
            overrides["out"] = args.out
        if args.format is not None:
            overrides["format"] = args.format
        cfg = replace(cfg, **overrides)
        return run(args.command, cfg)
    except ConfigError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except (QSwitchError, OSError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
