"""Link-level entanglement generation (LLEG) with a midpoint SPDC source.

Three protocols are modeled:

* ``egs-single``: one attempt per slot, node photon stored, partner routed to
  an optical BSA in the switch.
* ``mem-single``: one attempt per slot, both photons latched into memories.
* ``mem-block``: ``K`` consecutive attempts per slot, the first non-empty bin
  is kept and succeeds only if it delivered both photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from qswitch.errors import ParameterDomainError, UndefinedConditionalError, UsageError
from qswitch.hwmodel import HardwareProfile

__all__ = [
    "BinOutcomeProbs",
    "LinkModel",
    "MAX_BLOCK_SIZE",
    "egs_link_success",
    "mem_link_success_single",
    "block_bin_probs",
    "block_success_prob",
    "block_link_werner",
    "single_link_werner",
    "link_model",
]

MAX_BLOCK_SIZE = 1_000_000
_UNDERFLOW = 1e-300

Protocol = Literal["egs-single", "mem-single", "mem-block"]


@dataclass(frozen=True)
class BinOutcomeProbs:
    """Per-bin photon capture outcomes of a block attempt.

    ``q1`` is the probability that exactly one *specified* side captured its
    photon, so ``q0 + 2*q1 + q2 == 1``.
    """

    q2: float
    q1: float
    q0: float

    def total(self) -> float:
        return self.q0 + 2.0 * self.q1 + self.q2


@dataclass(frozen=True)
class LinkModel:
    p_link: float
    w_link: float
    protocol: Protocol
    block_size: int = 1


def _check_block_size(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ParameterDomainError("K", k, "block size must be an integer >= 1")
    if k > MAX_BLOCK_SIZE:
        raise ParameterDomainError("K", k, f"block size capped at {MAX_BLOCK_SIZE}")


def egs_link_success(profile: HardwareProfile) -> float:
    """Single-attempt success towards an optical BSA: ``p_pair (η g_m)(η g_sw)``."""
    eta = profile.eta
    return profile.p_pair * (eta * profile.gate_eff_mem) * (eta * profile.gate_eff_switch)


def mem_link_success_single(profile: HardwareProfile) -> float:
    """Single-attempt success into two memories: ``p_pair η² g_m²``."""
    return profile.p_pair * (profile.eta * profile.gate_eff_mem) ** 2


def block_bin_probs(profile: HardwareProfile) -> BinOutcomeProbs:
    p = profile.p_pair
    cap = profile.eta * profile.gate_eff_mem
    return BinOutcomeProbs(
        q2=p * cap * cap,
        q1=p * cap * (1.0 - cap),
        q0=1.0 - p * (2.0 * cap - cap * cap),
    )


def block_success_prob(profile: HardwareProfile, k: int) -> float:
    """Probability that the first non-empty bin among ``k`` delivers both photons."""
    _check_block_size(k)
    bins = block_bin_probs(profile)
    if bins.q0 >= 1.0:
        return 0.0
    if bins.q0 <= 0.0:
        return bins.q2
    # 1 - q0**k without cancellation when q0 is close to 1
    return bins.q2 * -math.expm1(k * math.log(bins.q0)) / (1.0 - bins.q0)


def _success_bin_weights(profile: HardwareProfile, k: int) -> np.ndarray:
    """Unnormalized ``P(first good bin = t, success) = q0**(t-1) q2`` for ``t = 1..k``."""
    bins = block_bin_probs(profile)
    t = np.arange(k, dtype=float)
    with np.errstate(under="ignore"):
        return bins.q2 * np.power(bins.q0, t)


def block_link_werner(profile: HardwareProfile, k: int) -> float:
    """Werner parameter of a heralded block link, mixed over the success bin.

    A pair caught in bin ``t`` waits ``(k - t)`` attempt periods for the block
    to close and then ``tau_hrld`` for the herald, in two memories.
    """
    _check_block_size(k)
    weights = _success_bin_weights(profile, k)
    p = float(weights.sum())
    if not p > _UNDERFLOW:
        raise UndefinedConditionalError(
            f"block success probability {p:g} is zero; the link Werner parameter is undefined"
        )
    herald = math.exp(-2 * profile.tau_hrld / profile.coherence_time)
    block_wait = (k - np.arange(1, k + 1)) * profile.attempt_period
    in_block = float(np.dot(weights / p, np.exp(-2.0 * block_wait / profile.coherence_time)))
    return profile.w0 * herald * in_block


def single_link_werner(profile: HardwareProfile, architecture: Literal["egs", "mem"]) -> float:
    """Werner parameter of a single-attempt link pair at the time of its herald.

    In the EGS only the node-side qubit waits for the herald; with switch
    memories both qubits do.
    """
    if architecture == "egs":
        n_stored = 1
    elif architecture == "mem":
        n_stored = 2
    else:
        raise UsageError(f"unknown architecture {architecture!r}")
    return profile.w0 * math.exp(-n_stored * profile.tau_hrld / profile.coherence_time)


def link_model(profile: HardwareProfile, protocol: Protocol, k: int = 1) -> LinkModel:
    if protocol == "egs-single":
        return LinkModel(egs_link_success(profile), single_link_werner(profile, "egs"), protocol)
    if protocol == "mem-single":
        return LinkModel(mem_link_success_single(profile), single_link_werner(profile, "mem"), protocol)
    if protocol == "mem-block":
        return LinkModel(block_success_prob(profile, k), block_link_werner(profile, k), protocol, k)
    raise UsageError(f"unknown protocol {protocol!r}")
