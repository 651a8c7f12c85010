"""Application utilities ``U = log(R * Q(F))`` for rate-fidelity tradeoffs.

Undefined utilities (``R * Q(F) == 0``, e.g. a separable output state) are
returned as ``None`` so sweeps can mask them instead of failing. Logs are
natural; the base shifts curves but never moves an argmax or a sign.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable

from qswitch.errors import ParameterDomainError
from qswitch.hwmodel import HardwareProfile

__all__ = [
    "UtilityKind",
    "hashing_yield",
    "bb84_key_fraction",
    "negativity_q",
    "quality",
    "log_utility",
    "utility",
    "delta_negativity_utility",
]


class UtilityKind(enum.Enum):
    DE = "U_DE"
    SKF = "U_SKF"
    NGT = "U_NGT"

    @classmethod
    def from_objective(cls, name: str) -> UtilityKind:
        for kind in cls:
            if name in (kind.value, kind.name):
                return kind
        raise ParameterDomainError("objective", name, "expected one of U_DE, U_SKF, U_NGT")


def _xlog2(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log2(x)


def _binary_entropy(p: float) -> float:
    return -_xlog2(p) - _xlog2(1.0 - p)


def _check_werner_fidelity(fidelity: float) -> None:
    if not 0.25 <= fidelity <= 1.0:
        raise ParameterDomainError("fidelity", fidelity, "Werner-state fidelity must lie in [0.25, 1]")


def hashing_yield(fidelity: float) -> float:
    """One-way hashing yield ``1 - S(rho)`` of a Werner state, clamped at zero.

    The Bell-diagonal spectrum is ``(F, (1-F)/3, (1-F)/3, (1-F)/3)``.
    """
    _check_werner_fidelity(fidelity)
    rest = 1.0 - fidelity
    entropy = -_xlog2(fidelity) - 3.0 * _xlog2(rest / 3.0)
    return max(0.0, 1.0 - entropy)


def bb84_key_fraction(fidelity: float) -> float:
    """Asymptotic BB84 secret-key fraction ``1 - 2 h(e)`` with QBER ``e = 2(1-F)/3``."""
    _check_werner_fidelity(fidelity)
    qber = 2.0 * (1.0 - fidelity) / 3.0
    return max(0.0, 1.0 - 2.0 * _binary_entropy(qber))


def negativity_q(fidelity: float) -> float:
    """Scaled negativity above the separability threshold, ``max(F - 1/2, 0)``."""
    if not 0.0 <= fidelity <= 1.0:
        raise ParameterDomainError("fidelity", fidelity, "must lie in [0, 1]")
    return max(fidelity - 0.5, 0.0)


_QUALITY = {
    UtilityKind.DE: hashing_yield,
    UtilityKind.SKF: bb84_key_fraction,
    UtilityKind.NGT: negativity_q,
}


def quality(kind: UtilityKind, fidelity: float) -> float:
    return _QUALITY[kind](fidelity)


def log_utility(rate: float, q: float) -> float | None:
    if rate < 0:
        raise ParameterDomainError("rate", rate, "must be >= 0")
    if q < 0:
        raise ParameterDomainError("Q", q, "must be >= 0")
    value = rate * q
    return math.log(value) if value > 0 else None


def utility(kind: UtilityKind, rate: float, fidelity: float) -> float | None:
    return log_utility(rate, quality(kind, fidelity))


def delta_negativity_utility(
    profile: HardwareProfile,
    beta: float | None = None,
    k_range: Iterable[int] = range(1, 61),
    estimator=None,
) -> float | None:
    """``U_NGT(memory switch at its best K) - U_NGT(EGS)``; positive favors memories.

    Rates are per flow. Returns ``None`` if either side is undefined.
    """
    from qswitch.egs import evaluate_egs
    from qswitch.errors import NoFeasibleBlockSizeError
    from qswitch.memswitch import optimize_block_size

    if beta is not None:
        profile = profile.replace(beta=beta)
    egs = evaluate_egs(profile)
    u_egs = utility(UtilityKind.NGT, egs.rate_normalized, egs.fidelity_e2e)
    try:
        _, u_mem = optimize_block_size(profile, "U_NGT", k_range, estimator)
    except NoFeasibleBlockSizeError:
        return None
    if u_egs is None:
        return None
    return u_mem - u_egs
