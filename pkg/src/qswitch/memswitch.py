"""Memory-equipped switch with herald-then-swap control.

Each slot every client's switch memories attempt link generation; the switch
learns which memories hold a heralded pair (the connectivity state ``c``) and
then performs a maximum set of swaps among them, up to ``B`` per slot.

The expected number of swaps per slot, ``E[E_max(C)]``, can be obtained three
ways:

* :func:`expected_emax_exact` enumerates every connectivity state (oracle,
  at most 10**6 states);
* :func:`expected_emax_sum_max` is exact for any size, because ``E_max``
  only depends on ``sum(c)`` and ``max(c)`` and the joint law of that pair
  follows from convolving per-client pmfs truncated at each level;
* :func:`expected_emax_mc` samples states with a counter-based generator.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from qswitch.bmatch import CapacityVector, emax_closed_form
from qswitch.egs import ArchitectureMetrics
from qswitch.errors import (
    NoFeasibleBlockSizeError,
    ParameterDomainError,
    ProblemSizeError,
    UsageError,
)
from qswitch.hwmodel import HardwareProfile, fidelity_from_werner
from qswitch.lleg import block_link_werner, block_success_prob, mem_link_success_single, single_link_werner
from qswitch import utility

__all__ = [
    "ConnectivityState",
    "ConnectivityDistribution",
    "McEstimate",
    "Estimator",
    "MemThroughput",
    "DEFAULT_SEED",
    "MC_CHUNK_SIZE",
    "MAX_ENUMERATED_STATES",
    "state_pmf",
    "sample_state",
    "sample_states",
    "state_emax",
    "expected_emax_exact",
    "expected_emax_sum_max",
    "expected_emax_mc",
    "mem_link_prob",
    "mem_slot_duration",
    "mem_max_total_rate",
    "mem_fidelity",
    "evaluate_mem",
    "optimize_block_size",
]

DEFAULT_SEED = 1729
MC_CHUNK_SIZE = 8192
MAX_ENUMERATED_STATES = 1_000_000

SlotProtocol = Literal["single", "block"]
Objective = Literal["rate", "U_DE", "U_SKF", "U_NGT"]


@dataclass(frozen=True)
class ConnectivityState:
    counts: tuple[int, ...]

    def __init__(self, counts: Sequence[int]) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in counts))


@dataclass(frozen=True)
class ConnectivityDistribution:
    """Independent ``Binomial(M_i, p)`` heralded-link counts per client."""

    mem_per_client: tuple[int, ...]
    link_prob: float

    def __init__(self, mem_per_client: Sequence[int], link_prob: float) -> None:
        mems = tuple(int(m) for m in mem_per_client)
        if len(mems) < 2 or any(m < 0 for m in mems):
            raise ParameterDomainError("mem_per_client", mems, "need >= 2 clients with nonnegative memories")
        if not 0.0 <= link_prob <= 1.0:
            raise ParameterDomainError("link_prob", link_prob, "must lie in [0, 1]")
        object.__setattr__(self, "mem_per_client", mems)
        object.__setattr__(self, "link_prob", float(link_prob))

    @property
    def n_states(self) -> int:
        return math.prod(m + 1 for m in self.mem_per_client)

    def client_pmf(self, i: int) -> np.ndarray:
        return _binom_pmf(self.mem_per_client[i], self.link_prob)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class Estimator:
    """How ``E[E_max]`` is obtained: ``exact`` or Monte Carlo ``mc``.

    ``workers`` only affects wall time; Monte Carlo results are identical for
    any worker count.
    """

    kind: Literal["exact", "mc"] = "exact"
    n_samples: int = 100_000
    seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "mc"):
            raise ParameterDomainError("estimator", self.kind, "must be 'exact' or 'mc'")
        if self.n_samples < 1:
            raise ParameterDomainError("n_samples", self.n_samples, "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterDomainError("seed", self.seed, "must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ParameterDomainError("workers", self.workers, "must be >= 1")

    @classmethod
    def exact(cls) -> Estimator:
        return cls("exact")

    @classmethod
    def mc(cls, n_samples: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1) -> Estimator:
        return cls("mc", n_samples, seed, workers)

    def derive(self, index: int) -> Estimator:
        """Estimator for sub-task ``index`` with its own seed derived from ``(seed, index)``."""
        words = np.random.SeedSequence(self.seed, spawn_key=(index,)).generate_state(2, np.uint32)
        seed = (int(words[0]) << 32) | int(words[1])
        return Estimator(self.kind, self.n_samples, seed, self.workers)


@dataclass(frozen=True)
class MemThroughput:
    rate_total: float
    rate_normalized: float
    slot_duration: float
    link_prob: float
    expected_swaps: float
    estimate: McEstimate | None = None


def _binom_pmf(m: int, p: float) -> np.ndarray:
    k = np.arange(m + 1)
    coeffs = np.array([math.comb(m, int(i)) for i in k], dtype=float)
    with np.errstate(under="ignore"):
        return coeffs * np.power(p, k) * np.power(1.0 - p, m - k)


def state_pmf(dist: ConnectivityDistribution, c: ConnectivityState) -> float:
    if len(c.counts) != len(dist.mem_per_client):
        raise ParameterDomainError("c", c.counts, "length differs from the number of clients")
    p = dist.link_prob
    prob = 1.0
    for ci, m in zip(c.counts, dist.mem_per_client):
        if not 0 <= ci <= m:
            raise ParameterDomainError("c", c.counts, f"count {ci} outside [0, {m}]")
        prob *= math.comb(m, ci) * p**ci * (1.0 - p) ** (m - ci)
    return prob


def sample_states(dist: ConnectivityDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` states as an ``(size, N)`` integer array.

    Each client count is the number of successes among ``M_i`` independent
    coin flips, so the number of uniforms consumed per state is fixed.
    """
    mems = np.asarray(dist.mem_per_client)
    width = int(mems.max()) if mems.size else 0
    u = rng.random((size, mems.size, width))
    used = np.arange(width) < mems[:, None]
    return ((u < dist.link_prob) & used).sum(axis=2)


def sample_state(dist: ConnectivityDistribution, rng: np.random.Generator) -> ConnectivityState:
    return ConnectivityState(sample_states(dist, rng, 1)[0])


def state_emax(c: ConnectivityState, budget: int) -> int:
    """Maximum number of swaps the switch can perform in state ``c``."""
    return emax_closed_form(CapacityVector(c.counts, budget))


def _emax_rows(counts: np.ndarray, budget: int) -> np.ndarray:
    total = counts.sum(axis=1)
    return np.minimum(np.minimum(budget, total // 2), total - counts.max(axis=1))


@lru_cache(maxsize=16)
def _enumerated_states(mems: tuple[int, ...]) -> np.ndarray:
    grids = np.indices([m + 1 for m in mems]).reshape(len(mems), -1)
    return grids.T.copy()


def expected_emax_exact(dist: ConnectivityDistribution, budget: int) -> float:
    """``sum_c pi(c) E_max(c)`` by enumerating every connectivity state."""
    if dist.n_states > MAX_ENUMERATED_STATES:
        raise ProblemSizeError(
            f"{dist.n_states} connectivity states exceed the enumeration bound {MAX_ENUMERATED_STATES}"
        )
    states = _enumerated_states(dist.mem_per_client)
    probs = np.ones(len(states))
    for i in range(states.shape[1]):
        probs *= dist.client_pmf(i)[states[:, i]]
    return float(np.dot(probs, _emax_rows(states, budget)))


def expected_emax_sum_max(dist: ConnectivityDistribution, budget: int) -> float:
    """Exact ``E[E_max(C)]`` through the joint law of ``(sum C, max C)``.

    ``G_t(s) = P(all C_i <= t, sum C = s)`` is the convolution of the client
    pmfs truncated at ``t``; ``G_t - G_{t-1}`` is the law of the sum on the
    event ``max C = t``.
    """
    mems = dist.mem_per_client
    pmfs = [dist.client_pmf(i) for i in range(len(mems))]
    size = sum(mems) + 1
    s = np.arange(size)
    prev = np.zeros(size)
    expected = 0.0
    for t in range(max(mems) + 1):
        g = np.ones(1)
        for pmf in pmfs:
            g = np.convolve(g, pmf[: t + 1])
        g = np.pad(g, (0, size - len(g)))
        emax = np.maximum(np.minimum(np.minimum(budget, s // 2), s - t), 0)
        expected += float(np.dot(g - prev, emax))
        prev = g
    return expected


def _mc_chunk(dist: ConnectivityDistribution, budget: int, seed: int, index: int, size: int) -> tuple[int, int]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
    emax = _emax_rows(sample_states(dist, rng, size), budget).astype(np.int64)
    return int(emax.sum()), int(np.dot(emax, emax))


def expected_emax_mc(
    dist: ConnectivityDistribution,
    budget: int,
    n_samples: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> McEstimate:
    """Monte Carlo estimate of ``E[E_max(C)]``.

    Samples are split into fixed chunks of ``MC_CHUNK_SIZE``; chunk ``k``
    draws from a Philox stream keyed by ``(seed, k)``. Per-chunk sums are
    exact integers, so the estimate does not depend on ``workers`` or on the
    order in which chunks finish.
    """
    if n_samples < 1:
        raise ParameterDomainError("n_samples", n_samples, "must be >= 1")
    if not 0 <= seed < 2**64:
        raise ParameterDomainError("seed", seed, "must be a 64-bit unsigned integer")
    sizes = [min(MC_CHUNK_SIZE, n_samples - start) for start in range(0, n_samples, MC_CHUNK_SIZE)]
    tasks = [(dist, budget, seed, k, size) for k, size in enumerate(sizes)]
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(*a), tasks))
    else:
        parts = [_mc_chunk(*a) for a in tasks]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    n = n_samples
    if n > 1:
        # unbiased sample variance; numerator and denominator are exact integers
        var = (n * total_sq - total * total) / (n * (n - 1))
        std_error = math.sqrt(max(var, 0.0) / n)
    else:
        std_error = 0.0
    return McEstimate(mean=total / n, std_error=std_error, n_samples=n, seed=seed)


def mem_slot_duration(profile: HardwareProfile, k: int = 1, protocol: SlotProtocol = "block") -> float:
    """Slot length: attempts, link-level herald, herald acquisition, control.

    The single-attempt slot spends one full attempt period; the block slot
    pipelines the first emission and spends ``k - 1`` periods.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ParameterDomainError("K", k, "block size must be an integer >= 1")
    overhead = profile.tau_hrld + profile.tau_c + profile.tau_a
    if protocol == "single":
        if k != 1:
            raise UsageError(f"single-attempt protocol requires K=1, got K={k}")
        return profile.attempt_period + overhead
    if protocol == "block":
        return (k - 1) * profile.attempt_period + overhead
    raise UsageError(f"unknown protocol {protocol!r}")


def mem_link_prob(profile: HardwareProfile, k: int = 1, protocol: SlotProtocol = "block") -> float:
    if protocol == "single":
        if k != 1:
            raise UsageError(f"single-attempt protocol requires K=1, got K={k}")
        return mem_link_success_single(profile)
    if protocol == "block":
        return block_success_prob(profile, k)
    raise UsageError(f"unknown protocol {protocol!r}")


def expected_swaps(
    dist: ConnectivityDistribution, budget: int, estimator: Estimator
) -> tuple[float, McEstimate | None]:
    if estimator.kind == "exact":
        return expected_emax_sum_max(dist, budget), None
    est = expected_emax_mc(dist, budget, estimator.n_samples, estimator.seed, estimator.workers)
    return est.mean, est


def mem_max_total_rate(
    profile: HardwareProfile,
    k: int = 1,
    protocol: SlotProtocol = "block",
    estimator: Estimator | None = None,
) -> MemThroughput:
    """Maximum expected aggregate rate ``p_swap / dt_mem * E[E_max(C)]`` in pairs/s."""
    estimator = estimator or Estimator.exact()
    dt = mem_slot_duration(profile, k, protocol)
    p = mem_link_prob(profile, k, protocol)
    dist = ConnectivityDistribution(profile.switch_memories, p)
    mean, est = expected_swaps(dist, profile.bsm_budget, estimator)
    total = profile.effective_p_swap / dt * mean
    return MemThroughput(
        rate_total=total,
        rate_normalized=total / profile.n_flows,
        slot_duration=dt,
        link_prob=p,
        expected_swaps=mean,
        estimate=est,
    )


def mem_fidelity(profile: HardwareProfile, k: int = 1, protocol: SlotProtocol = "block") -> tuple[float, float]:
    """End-to-end Werner parameter and fidelity of a swapped pair.

    All four qubits wait for herald acquisition and control before the swap;
    the two node qubits then wait a round trip for the end-to-end herald.
    """
    if protocol == "single":
        if k != 1:
            raise UsageError(f"single-attempt protocol requires K=1, got K={k}")
        w_link = single_link_werner(profile, "mem")
    elif protocol == "block":
        w_link = block_link_werner(profile, k)
    else:
        raise UsageError(f"unknown protocol {protocol!r}")
    T = profile.coherence_time
    w = (
        w_link
        * w_link
        * profile.q_bsm
        * math.exp(-4 * (profile.tau_c + profile.tau_a) / T)
        * math.exp(-2 * profile.tau_hrld / T)
    )
    return w, fidelity_from_werner(w)


def evaluate_mem(
    profile: HardwareProfile,
    k: int = 1,
    protocol: SlotProtocol = "block",
    estimator: Estimator | None = None,
) -> ArchitectureMetrics:
    rate = mem_max_total_rate(profile, k, protocol, estimator)
    w, f = mem_fidelity(profile, k, protocol)
    return ArchitectureMetrics(
        architecture="mem",
        rate_total=rate.rate_total,
        rate_normalized=rate.rate_normalized,
        werner_e2e=w,
        fidelity_e2e=f,
        slot_duration=rate.slot_duration,
        block_size=k,
    )


def block_objective(
    profile: HardwareProfile, k: int, objective: Objective, estimator: Estimator | None = None
) -> float | None:
    """Objective value of block size ``k``; ``None`` where a utility is undefined."""
    kind = None if objective == "rate" else utility.UtilityKind.from_objective(objective)
    rate = mem_max_total_rate(profile, k, "block", estimator).rate_normalized
    if kind is None:
        return rate
    if rate == 0.0:
        return None
    _, fidelity = mem_fidelity(profile, k, "block")
    return utility.utility(kind, rate, fidelity)


def optimize_block_size(
    profile: HardwareProfile,
    objective: Objective = "rate",
    k_range: Iterable[int] = range(1, 61),
    estimator: Estimator | None = None,
) -> tuple[int, float]:
    """Exhaustive scan for the best block size; the smallest ``K`` wins ties.

    With a Monte Carlo estimator every ``K`` reuses the same seed (common
    random numbers), which keeps the comparison across ``K`` smooth.
    """
    ks = list(k_range)
    if not ks:
        raise ParameterDomainError("K_range", ks, "must be nonempty")
    best: tuple[int, float] | None = None
    for k in ks:
        value = block_objective(profile, k, objective, estimator)
        if value is None:
            continue
        if best is None or value > best[1]:
            best = (k, value)
    if best is None:
        raise NoFeasibleBlockSizeError(f"objective {objective} is undefined for every K in the range")
    return best
