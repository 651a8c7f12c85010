"""Hardware parameters and the SPDC source model.

Units are fixed across the package: seconds, Hz, km and dB/km. Every derived
time is produced in seconds.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

from qswitch.errors import ParameterDomainError

__all__ = [
    "HardwareProfile",
    "pair_emission_prob",
    "initial_fidelity",
    "initial_werner",
    "werner_from_fidelity",
    "fidelity_from_werner",
    "half_link_transmittance",
    "heralding_delay",
]


def _require(cond: bool, name: str, value: object, reason: str) -> None:
    if not cond:
        raise ParameterDomainError(name, value, reason)


def pair_emission_prob(beta: float) -> float:
    """Probability that the SPDC source emits at least one pair, ``β(β+2)/(β+1)²``."""
    _require(beta >= 0 and math.isfinite(beta), "beta", beta, "must be finite and >= 0")
    return beta * (beta + 2.0) / (beta + 1.0) ** 2


def initial_fidelity(beta: float) -> float:
    """Fidelity of an emitted pair, ``Pr(n=1)/Pr(n>=1) = 2/((β+1)(β+2))``."""
    _require(beta >= 0 and math.isfinite(beta), "beta", beta, "must be finite and >= 0")
    return 2.0 / ((beta + 1.0) * (beta + 2.0))


def werner_from_fidelity(fidelity: float) -> float:
    """Map a Werner-state fidelity to its Werner parameter ``(4F-1)/3``."""
    _require(0.0 <= fidelity <= 1.0, "fidelity", fidelity, "must lie in [0, 1]")
    return (4.0 * fidelity - 1.0) / 3.0


def fidelity_from_werner(werner: float) -> float:
    """Fidelity ``(3w+1)/4`` of a Werner state with parameter ``werner``."""
    _require(-1.0 / 3.0 <= werner <= 1.0, "werner", werner, "must lie in [-1/3, 1]")
    return (3.0 * werner + 1.0) / 4.0


def initial_werner(beta: float) -> float:
    return werner_from_fidelity(initial_fidelity(beta))


def half_link_transmittance(attenuation: float, link_length: float) -> float:
    """Transmittance of half the node-switch fiber (midpoint source).

    Args:
        attenuation: fiber loss in dB/km.
        link_length: full node-switch length in km.
    """
    _require(attenuation >= 0, "attenuation", attenuation, "must be >= 0")
    _require(link_length > 0, "link_length", link_length, "must be > 0")
    return 10.0 ** (-attenuation * (link_length / 2.0) / 10.0)


def heralding_delay(link_length: float, light_speed: float) -> float:
    """Link-level heralding latency ``L/v_f`` in seconds (``link_length`` in km)."""
    _require(link_length > 0, "link_length", link_length, "must be > 0")
    _require(light_speed > 0, "light_speed", light_speed, "must be > 0")
    return 1000.0 * link_length / light_speed


_PROBABILITIES = (
    "detector_eff",
    "p_bsa",
    "p_swap",
    "gate_eff_mem",
    "gate_eff_switch",
    "q_bsm",
    "duty_factor",
)
_POSITIVE = ("link_length", "light_speed", "pulse_rate", "coherence_time")
_NONNEGATIVE = ("attenuation", "beta", "tau_c", "tau_a")


@dataclass(frozen=True)
class HardwareProfile:
    """Topology and hardware parameters of one switch scenario.

    Defaults reproduce the near-term baseline: six clients with three
    multiplexing frames each, eight BSM stations, 1 km links and a 10 MHz
    SPDC source at ``beta = 0.03``.

    ``optical_swap`` replaces ``p_swap`` by ``detector_eff**2 * p_bsa`` for a
    memory switch whose swaps go through linear-optics analyzers.
    ``duty_factor`` scales EGS rates for calibration downtime between epochs.
    """

    n_clients: int = 6
    multiplex: tuple[int, ...] = (3, 3, 3, 3, 3, 3)
    mem_per_client: tuple[int, ...] = (3, 3, 3, 3, 3, 3)
    bsm_budget: int = 8
    detector_eff: float = 0.9
    p_bsa: float = 0.5
    p_swap: float = 1.0
    optical_swap: bool = False
    attenuation: float = 0.2
    link_length: float = 1.0
    gate_eff_mem: float = 0.85
    gate_eff_switch: float = 0.85
    beta: float = 0.03
    light_speed: float = 2.0e8
    tau_c: float = 2.0e-6
    tau_a: float = 3.0e-6
    pulse_rate: float = 1.0e7
    coherence_time: float = 5.0e-4
    q_bsm: float = 0.97
    duty_factor: float = 1.0
    n_flows: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "multiplex", tuple(int(s) for s in self.multiplex))
        object.__setattr__(self, "mem_per_client", tuple(int(m) for m in self.mem_per_client))
        n = self.n_clients
        _require(isinstance(n, int) and not isinstance(n, bool) and n >= 2, "n_clients", n, "must be an integer >= 2")
        _require(len(self.multiplex) == n, "multiplex", self.multiplex, f"needs {n} entries")
        _require(len(self.mem_per_client) == n, "mem_per_client", self.mem_per_client, f"needs {n} entries")
        _require(all(s >= 1 for s in self.multiplex), "multiplex", self.multiplex, "entries must be >= 1")
        _require(all(m >= 1 for m in self.mem_per_client), "mem_per_client", self.mem_per_client, "entries must be >= 1")
        _require(
            isinstance(self.bsm_budget, int) and self.bsm_budget >= 1, "bsm_budget", self.bsm_budget, "must be an integer >= 1"
        )
        for name in _PROBABILITIES:
            v = getattr(self, name)
            _require(0.0 <= v <= 1.0, name, v, "must lie in [0, 1]")
        for name in _POSITIVE:
            v = getattr(self, name)
            _require(v > 0 and math.isfinite(v), name, v, "must be finite and > 0")
        for name in _NONNEGATIVE:
            v = getattr(self, name)
            _require(v >= 0 and math.isfinite(v), name, v, "must be finite and >= 0")
        object.__setattr__(self, "n_flows", n * (n - 1) // 2)

    # derived quantities

    @property
    def eta(self) -> float:
        """Half-link transmittance, shared by the node-side and switch-side paths."""
        return half_link_transmittance(self.attenuation, self.link_length)

    @property
    def p_pair(self) -> float:
        return pair_emission_prob(self.beta)

    @property
    def w0(self) -> float:
        return initial_werner(self.beta)

    @property
    def tau_hrld(self) -> float:
        return heralding_delay(self.link_length, self.light_speed)

    @property
    def attempt_period(self) -> float:
        return 1.0 / self.pulse_rate

    @property
    def effective_p_swap(self) -> float:
        if self.optical_swap:
            return self.detector_eff**2 * self.p_bsa
        return self.p_swap

    @property
    def switch_memories(self) -> tuple[int, ...]:
        """Usable switch memories per client: ``min(M_i, S_i)``."""
        return tuple(min(m, s) for m, s in zip(self.mem_per_client, self.multiplex))

    def replace(self, **changes: Any) -> HardwareProfile:
        """Copy with ``changes`` applied and re-validated.

        Changing ``n_clients`` without giving ``multiplex``/``mem_per_client``
        replicates the first client's values, which is only allowed for
        homogeneous profiles.
        """
        n = changes.get("n_clients", self.n_clients)
        if n != self.n_clients:
            for key in ("multiplex", "mem_per_client"):
                if key not in changes:
                    vals = getattr(self, key)
                    _require(len(set(vals)) == 1, key, vals, "cannot resize a heterogeneous profile implicitly")
                    changes[key] = (vals[0],) * n
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("n_flows")
        d["multiplex"] = list(self.multiplex)
        d["mem_per_client"] = list(self.mem_per_client)
        return d

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls) if f.init)
