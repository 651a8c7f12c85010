"""Parameter sweeps behind the rate/fidelity studies.

Every sweep returns a :class:`SweepResult`: named axes, one dense array per
metric (shape = product of axis lengths, ``NaN`` marks masked cells),
argmax annotations and a metadata dict. Monte Carlo cells draw from seeds
derived from ``(master seed, flat cell index)``, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from qswitch.egs import evaluate_egs
from qswitch.errors import DegenerateSeriesError, NoFeasibleBlockSizeError, ParameterDomainError
from qswitch.hwmodel import HardwareProfile
from qswitch.memswitch import Estimator, mem_fidelity, mem_max_total_rate, optimize_block_size
from qswitch.utility import UtilityKind, utility

__all__ = [
    "Axis",
    "Scenario",
    "SweepResult",
    "DEFAULT_BETA_AXIS",
    "DEFAULT_K_RANGE",
    "DEFAULT_L_AXIS",
    "DEFAULT_F_AXIS",
    "DEFAULT_SCENARIOS",
    "sweep_rate_K_L",
    "sweep_fidelity_K_fpulse",
    "utilities_vs_K",
    "frontier_vs_beta",
    "frontier_points",
    "memory_dominance_window",
    "dominance_sweep",
    "minmax_normalize",
]

DEFAULT_BETA_AXIS: tuple[float, ...] = tuple(round(0.005 * i, 3) for i in range(1, 31))
DEFAULT_K_RANGE: tuple[int, ...] = tuple(range(1, 61))
DEFAULT_L_AXIS: tuple[float, ...] = tuple(float(x) for x in np.geomspace(0.01, 20.0, 25))
DEFAULT_F_AXIS: tuple[float, ...] = (1e4, 1e5, 1e6, 1e7, 1e8, 1e9)


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[Any, ...]
    unit: str = ""

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Scenario:
    """Named set of profile overrides, e.g. ``{"pulse_rate": 1e9}``."""

    name: str
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def apply(self, profile: HardwareProfile) -> HardwareProfile:
        return profile.replace(**dict(self.overrides)) if self.overrides else profile


DEFAULT_SCENARIOS: tuple[Scenario, ...] = (
    Scenario("baseline"),
    Scenario("f_10kHz", {"pulse_rate": 1e4}),
    Scenario("f_1MHz", {"pulse_rate": 1e6}),
    Scenario("f_1GHz", {"pulse_rate": 1e9}),
    Scenario("L_0.01km", {"link_length": 0.01}),
    Scenario("L_0.1km", {"link_length": 0.1}),
    Scenario("L_5km", {"link_length": 5.0}),
    Scenario("N10_B14", {"n_clients": 10, "bsm_budget": 14}),
    Scenario("N14_B20", {"n_clients": 14, "bsm_budget": 20}),
)


@dataclass
class SweepResult:
    axes: list[Axis]
    metrics: dict[str, np.ndarray]
    annotations: dict[str, list[int]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = self.shape
        for name, values in self.metrics.items():
            if values.shape != shape:
                raise ValueError(f"metric {name} has shape {values.shape}, expected {shape}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def axis(self, name: str) -> Axis:
        for a in self.axes:
            if a.name == name:
                return a
        raise KeyError(name)


def _metadata(profile: HardwareProfile, estimator: Estimator | None, **extra: Any) -> dict[str, Any]:
    est = estimator or Estimator.exact()
    meta: dict[str, Any] = {"profile": profile.to_dict(), "estimator": est.kind}
    if est.kind == "mc":
        meta["seed"] = est.seed
        meta["n_samples"] = est.n_samples
    meta.update(extra)
    return meta


def _check_k_axis(ks: Sequence[int]) -> None:
    if not ks or any(int(k) != k or k < 1 for k in ks):
        raise ParameterDomainError("K_axis", ks, "must be a nonempty list of integers >= 1")


def _nan_argmax(column: np.ndarray) -> int:
    if np.all(np.isnan(column)):
        return -1
    return int(np.nanargmax(column))


def sweep_rate_K_L(
    profile: HardwareProfile,
    k_axis: Sequence[int] = DEFAULT_K_RANGE,
    l_axis: Sequence[float] = DEFAULT_L_AXIS,
    estimator: Estimator | None = None,
) -> SweepResult:
    """Per-flow memory-switch rate (block protocol) over block size and link length.

    ``annotations["argmax_K"]`` holds, for every ``L``, the index of the
    rate-optimal ``K`` (smallest on ties).
    """
    ks = [int(k) for k in k_axis]
    ls = [float(x) for x in l_axis]
    _check_k_axis(ks)
    if not ls or any(x <= 0 for x in ls):
        raise ParameterDomainError("L_axis", ls, "must be a nonempty list of positive lengths")
    est = estimator or Estimator.exact()
    rates = np.empty((len(ks), len(ls)))
    for b, length in enumerate(ls):
        p = profile.replace(link_length=length)
        for a, k in enumerate(ks):
            cell = est.derive(a * len(ls) + b)
            rates[a, b] = mem_max_total_rate(p, k, "block", cell).rate_normalized
    return SweepResult(
        axes=[Axis("K", tuple(ks)), Axis("L", tuple(ls), "km")],
        metrics={"rate_normalized": rates},
        annotations={"argmax_K": [_nan_argmax(rates[:, b]) for b in range(len(ls))]},
        metadata=_metadata(profile, est, sweep="rate_K_L"),
    )


def sweep_fidelity_K_fpulse(
    profile: HardwareProfile,
    k_axis: Sequence[int] = DEFAULT_K_RANGE,
    f_axis: Sequence[float] = DEFAULT_F_AXIS,
) -> SweepResult:
    """End-to-end memory-switch fidelity (block protocol) over block size and pulse rate."""
    ks = [int(k) for k in k_axis]
    fs = [float(f) for f in f_axis]
    _check_k_axis(ks)
    if not fs or any(f <= 0 for f in fs):
        raise ParameterDomainError("f_axis", fs, "must be a nonempty list of positive rates")
    fid = np.empty((len(ks), len(fs)))
    for b, f in enumerate(fs):
        p = profile.replace(pulse_rate=f)
        for a, k in enumerate(ks):
            fid[a, b] = mem_fidelity(p, k, "block")[1]
    return SweepResult(
        axes=[Axis("K", tuple(ks)), Axis("f_pulse", tuple(fs), "Hz")],
        metrics={"fidelity_e2e": fid},
        annotations={"argmax_K": [_nan_argmax(fid[:, b]) for b in range(len(fs))]},
        metadata=_metadata(profile, None, sweep="fidelity_K_fpulse"),
    )


def utilities_vs_K(
    profile: HardwareProfile,
    k_axis: Sequence[int] = DEFAULT_K_RANGE,
    estimator: Estimator | None = None,
) -> SweepResult:
    """``U_DE``, ``U_SKF`` and ``U_NGT`` of the memory switch versus block size.

    Raw utilities plus their min-max normalized versions (``*_norm``) when a
    series has at least two distinct defined values.
    """
    ks = [int(k) for k in k_axis]
    _check_k_axis(ks)
    est = estimator or Estimator.exact()
    rate = np.empty(len(ks))
    fid = np.empty(len(ks))
    for a, k in enumerate(ks):
        rate[a] = mem_max_total_rate(profile, k, "block", est.derive(a)).rate_normalized
        fid[a] = mem_fidelity(profile, k, "block")[1]
    metrics: dict[str, np.ndarray] = {"rate_normalized": rate, "fidelity_e2e": fid}
    annotations: dict[str, list[int]] = {}
    for kind in UtilityKind:
        u = np.array([_masked(utility(kind, r, f)) for r, f in zip(rate, fid)])
        metrics[kind.value] = u
        annotations[f"argmax_{kind.value}"] = [_nan_argmax(u)]
        try:
            metrics[f"{kind.value}_norm"] = np.array([_masked(v) for v in minmax_normalize(u)])
        except DegenerateSeriesError:
            metrics[f"{kind.value}_norm"] = np.full(len(ks), np.nan)
    return SweepResult(
        axes=[Axis("K", tuple(ks))],
        metrics=metrics,
        annotations=annotations,
        metadata=_metadata(profile, est, sweep="utilities_vs_K"),
    )


def _masked(value: float | None) -> float:
    return np.nan if value is None else value


def frontier_vs_beta(
    profile: HardwareProfile,
    beta_axis: Sequence[float] = DEFAULT_BETA_AXIS,
    k_range: Iterable[int] = DEFAULT_K_RANGE,
    estimator: Estimator | None = None,
    k_objective: str = "U_NGT",
) -> SweepResult:
    """EGS and memory-switch operating points as the source brightness varies.

    For each ``beta`` the memory switch runs at the block size maximizing
    ``k_objective`` (``U_NGT`` by default, ``rate`` for rate-optimal ``K``).
    Memory-side cells are masked when no ``K`` gives a defined objective;
    utility cells are masked where the utility is undefined.
    """
    betas = [float(b) for b in beta_axis]
    if not betas or any(not 0.0 <= b <= 2.0 for b in betas):
        raise ParameterDomainError("beta_axis", betas, "values must lie in [0, 2]")
    ks = list(k_range)
    _check_k_axis(ks)
    est = estimator or Estimator.exact()
    n = len(betas)
    out = {
        name: np.full(n, np.nan)
        for name in (
            "egs_rate", "egs_fidelity", "egs_U_NGT",
            "mem_K", "mem_rate", "mem_fidelity", "mem_U_NGT", "delta_U_NGT",
        )
    }
    for a, beta in enumerate(betas):
        p = profile.replace(beta=beta)
        egs = evaluate_egs(p)
        out["egs_rate"][a] = egs.rate_normalized
        out["egs_fidelity"][a] = egs.fidelity_e2e
        u_egs = utility(UtilityKind.NGT, egs.rate_normalized, egs.fidelity_e2e)
        out["egs_U_NGT"][a] = _masked(u_egs)
        cell = est.derive(a)
        try:
            k_star, _ = optimize_block_size(p, k_objective, ks, cell)
        except NoFeasibleBlockSizeError:
            continue
        rate = mem_max_total_rate(p, k_star, "block", cell).rate_normalized
        fid = mem_fidelity(p, k_star, "block")[1] if rate > 0 else np.nan
        u_mem = utility(UtilityKind.NGT, rate, fid) if rate > 0 else None
        out["mem_K"][a] = k_star
        out["mem_rate"][a] = rate
        out["mem_fidelity"][a] = fid
        out["mem_U_NGT"][a] = _masked(u_mem)
        if u_mem is not None and u_egs is not None:
            out["delta_U_NGT"][a] = u_mem - u_egs
    return SweepResult(
        axes=[Axis("beta", tuple(betas))],
        metrics=out,
        metadata=_metadata(profile, est, sweep="frontier_vs_beta", k_objective=k_objective),
    )


def frontier_points(result: SweepResult, architecture: str) -> np.ndarray:
    """Unmasked ``(rate_normalized, fidelity)`` rows of one series of a frontier."""
    if architecture not in ("egs", "mem"):
        raise ParameterDomainError("architecture", architecture, "expected 'egs' or 'mem'")
    pts = np.column_stack([result.metrics[f"{architecture}_rate"], result.metrics[f"{architecture}_fidelity"]])
    return pts[~np.isnan(pts).any(axis=1)]


def memory_dominance_window(result: SweepResult, resolution: int = 4001) -> tuple[float, float] | None:
    """Fidelity interval where the memory switch out-rates the EGS at equal fidelity.

    Both series are linearly interpolated as rate-versus-fidelity curves over
    their common fidelity range. The longest contiguous run of fidelities with
    a strictly higher memory rate is returned, or ``None`` if there is none.
    """
    egs = frontier_points(result, "egs")
    mem = frontier_points(result, "mem")
    if len(egs) < 2 or len(mem) < 2:
        return None
    lo = max(egs[:, 1].min(), mem[:, 1].min())
    hi = min(egs[:, 1].max(), mem[:, 1].max())
    if lo >= hi:
        return None
    grid = np.linspace(lo, hi, resolution)
    egs = egs[np.argsort(egs[:, 1])]
    mem = mem[np.argsort(mem[:, 1])]
    better = np.interp(grid, mem[:, 1], mem[:, 0]) > np.interp(grid, egs[:, 1], egs[:, 0])
    best: tuple[int, int] | None = None
    start = None
    for i, flag in enumerate([*better, False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if best is None or i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    if best is None:
        return None
    return float(grid[best[0]]), float(grid[best[1] - 1])


def dominance_sweep(
    profile: HardwareProfile,
    beta_axis: Sequence[float] = DEFAULT_BETA_AXIS,
    scenarios: Sequence[Scenario] = DEFAULT_SCENARIOS,
    k_range: Iterable[int] = DEFAULT_K_RANGE,
    estimator: Estimator | None = None,
) -> SweepResult:
    """``Delta U_NGT`` over ``beta`` for each scenario; positive favors the memory switch."""
    betas = [float(b) for b in beta_axis]
    ks = list(k_range)
    _check_k_axis(ks)
    if not scenarios:
        raise ParameterDomainError("scenarios", scenarios, "must be nonempty")
    est = estimator or Estimator.exact()
    delta = np.full((len(betas), len(scenarios)), np.nan)
    windows: list[Any] = []
    for b, scenario in enumerate(scenarios):
        frontier = frontier_vs_beta(scenario.apply(profile), betas, ks, est.derive(b))
        delta[:, b] = frontier.metrics["delta_U_NGT"]
        window = memory_dominance_window(frontier)
        windows.append(None if window is None else list(window))
    return SweepResult(
        axes=[Axis("beta", tuple(betas)), Axis("scenario", tuple(s.name for s in scenarios))],
        metrics={"delta_U_NGT": delta},
        metadata=_metadata(
            profile,
            est,
            sweep="dominance",
            scenarios={s.name: dict(s.overrides) for s in scenarios},
            memory_window={s.name: w for s, w in zip(scenarios, windows)},
        ),
    )


def minmax_normalize(series: Iterable[float | None]) -> list[float | None]:
    """Affine map of the unmasked entries onto [0, 1]; ``None``/``NaN`` stay masked."""
    values = [None if v is None or np.isnan(v) else float(v) for v in series]
    defined = [v for v in values if v is not None]
    if len(set(defined)) < 2:
        raise DegenerateSeriesError("need at least two distinct unmasked values")
    lo, hi = min(defined), max(defined)
    below_one = math.nextafter(1.0, 0.0)

    def scale(v: float) -> float:
        # rounding must not lift a non-maximal entry onto 1.0, or the argmax could move
        out = (v - lo) / (hi - lo)
        return 1.0 if v == hi else min(out, below_one)

    return [None if v is None else scale(v) for v in values]
