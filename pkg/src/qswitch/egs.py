"""All-photonic entanglement generation switch (EGS).

BSAs are bound to client pairs for a whole freeze epoch and fire blindly
every attempt period; nothing is stored in the switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from qswitch.bmatch import CapacityVector, emax_closed_form
from qswitch.hwmodel import HardwareProfile, fidelity_from_werner
from qswitch.lleg import egs_link_success, single_link_werner

__all__ = [
    "ArchitectureMetrics",
    "egs_e2e_prob",
    "egs_max_total_rate",
    "egs_fidelity",
    "evaluate_egs",
]


@dataclass(frozen=True)
class ArchitectureMetrics:
    """One operating point of a switch architecture.

    ``rate_total`` is in end-to-end pairs per second summed over all flows and
    ``rate_normalized`` divides it by the number of flows.
    """

    architecture: Literal["egs", "mem"]
    rate_total: float
    rate_normalized: float
    werner_e2e: float
    fidelity_e2e: float
    slot_duration: float
    block_size: int | None = None


def egs_e2e_prob(profile: HardwareProfile) -> float:
    """Per-slot success of one bound BSA: both links, both detectors, and the BSA."""
    p = egs_link_success(profile)
    return p * p * profile.detector_eff**2 * profile.p_bsa


def egs_max_total_rate(profile: HardwareProfile) -> tuple[float, float]:
    """Maximum aggregate EGS rate and its per-flow value, in pairs/s.

    The slot is one attempt period; the best station allocation realizes the
    maximum b-matching cardinality with capacities ``S_i`` and budget ``B``.
    """
    emax = emax_closed_form(CapacityVector(profile.multiplex, profile.bsm_budget))
    total = egs_e2e_prob(profile) * profile.pulse_rate * emax * profile.duty_factor
    return total, total / profile.n_flows


def egs_fidelity(profile: HardwareProfile) -> tuple[float, float]:
    """End-to-end Werner parameter and fidelity.

    Both node qubits keep decohering for one more round trip (``2 L/v_f``)
    until the end-to-end herald returns.
    """
    w_link = single_link_werner(profile, "egs")
    w = w_link * w_link * profile.q_bsm * math.exp(-2 * profile.tau_hrld / profile.coherence_time)
    return w, fidelity_from_werner(w)


def evaluate_egs(profile: HardwareProfile) -> ArchitectureMetrics:
    total, per_flow = egs_max_total_rate(profile)
    w, f = egs_fidelity(profile)
    return ArchitectureMetrics(
        architecture="egs",
        rate_total=total,
        rate_normalized=per_flow,
        werner_e2e=w,
        fidelity_e2e=f,
        slot_duration=profile.attempt_period,
    )
