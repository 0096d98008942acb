"""Classical and quantum Fisher information, closed forms and Cramér-Rao bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ionphonon.fock import Operator, SpaceMismatchError, StateVector

DEFAULT_STEP = 1e-4
P_FLOOR = 1e-12
NORM_TOL = 1e-8


@dataclass(frozen=True)
class ProbabilityModel:
    """Outcome distribution ``p_k(lambda)`` of a fixed measurement.

    Sub-normalised vectors are accepted (truncated outcome sets); the
    missing weight is reported by :func:`cfi_detailed`.
    """

    evaluator: Callable[[float], Sequence[float]]
    labels: Sequence[str] | None = None

    def __call__(self, lam: float) -> np.ndarray:
        p = np.asarray(self.evaluator(lam), dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise ValueError(f"non-finite probability at lambda={lam}")
        if p.min(initial=0.0) < -1e-12:
            raise ValueError(f"negative probability {p.min():.3e} at lambda={lam}")
        if p.sum() > 1 + 1e-9:
            raise ValueError(f"probabilities sum to {p.sum():.12g} > 1 at lambda={lam}")
        if self.labels is not None and len(self.labels) != p.size:
            raise ValueError("evaluator returned a different number of outcomes than labels")
        return np.clip(p, 0.0, None)


@dataclass(frozen=True)
class CfiResult:
    value: float
    excluded_mass: float
    deficit: float


def _central(model: ProbabilityModel, lam: float, h: float) -> np.ndarray:
    return (model(lam + h) - model(lam - h)) / (2 * h)


def cfi_detailed(model: ProbabilityModel, lam: float, step: float = DEFAULT_STEP,
                 p_floor: float = P_FLOOR, richardson: bool = False) -> CfiResult:
    """CFI with diagnostics: weight of outcomes below ``p_floor`` and the normalisation deficit."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    p = model(lam)
    dp = _central(model, lam, step)
    if richardson:
        dp = (4 * _central(model, lam, step / 2) - dp) / 3
    keep = p >= p_floor
    terms = dp[keep] ** 2 / p[keep]
    return CfiResult(value=math.fsum(terms), excluded_mass=float(p[~keep].sum()),
                     deficit=max(0.0, 1.0 - float(p.sum())))


def cfi(model: ProbabilityModel, lam: float, step: float = DEFAULT_STEP,
        p_floor: float = P_FLOOR, richardson: bool = False) -> float:
    """``sum_k (dp_k/dlambda)^2 / p_k`` by central differences."""
    return cfi_detailed(model, lam, step, p_floor, richardson).value


def _aligned(state: StateVector, ref: int) -> np.ndarray:
    if abs(state.norm - 1.0) > NORM_TOL:
        raise ValueError(f"state norm deviates from 1 by {abs(state.norm - 1.0):.2e}")
    v = state.amplitudes
    a = v[ref]
    return v * (abs(a) / a) if a != 0 else v


def qfi_pure_numeric(state_at: Callable[[float], StateVector], lam: float,
                     step: float = DEFAULT_STEP) -> float:
    """Pure-state QFI ``4(<dpsi|dpsi> - |<psi|dpsi>|^2)`` from central differences.

    Every state is rephased so the amplitude that is largest in the centre
    state is real and positive, which fixes a smooth gauge.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    mid, lo, hi = state_at(lam), state_at(lam - step), state_at(lam + step)
    if not (mid.space == lo.space == hi.space):
        raise SpaceMismatchError("states along the family live on different spaces")
    ref = int(np.argmax(np.abs(mid.amplitudes)))
    psi = _aligned(mid, ref)
    d = (_aligned(hi, ref) - _aligned(lo, ref)) / (2 * step)
    val = 4.0 * (np.vdot(d, d).real - abs(np.vdot(psi, d)) ** 2)
    return max(float(val), 0.0)


def qfi_generator(G: Operator, psi0: StateVector, atol: float = 1e-12) -> float:
    """``4 Var(G)`` in ``psi0`` for a Hermitian generator ``G``."""
    if G.space != psi0.space:
        raise SpaceMismatchError("generator and state live on different spaces")
    if G.hermiticity_error() > atol * max(1.0, G.norm_bound()):
        raise ValueError("generator is not Hermitian")
    v = psi0.amplitudes
    gv = G.matrix @ v
    mean = np.vdot(v, gv).real
    return max(4.0 * (np.vdot(gv, gv).real - mean * mean), 0.0)


def closed_form_qfi(which: str, r: float | None = None, n: int | None = None) -> float:
    """Closed-form QFI: ``tmss_r`` -> 4, ``tmss_theta`` -> 4 nbar(nbar+1),
    ``bs_epsilon`` -> 8 n(n+1) in the dimensionless phase ``lambda = eps t``."""
    if which == "tmss_r":
        return 4.0
    if which == "tmss_theta":
        if r is None or r < 0:
            raise ValueError("tmss_theta needs r >= 0")
        nbar = math.sinh(r) ** 2
        return 4.0 * nbar * (nbar + 1.0)
    if which == "bs_epsilon":
        if n is None or n < 0 or int(n) != n:
            raise ValueError("bs_epsilon needs an integer n >= 0")
        return 8.0 * n * (n + 1)
    raise ValueError(f"unknown closed form {which!r}")


def rate_convention(fisher_lambda: float, t: float) -> float:
    """Fisher information for the rate ``eps`` given that for ``lambda = eps t``."""
    return fisher_lambda * t * t


def cramer_rao(fisher: float) -> float:
    """Variance bound ``1/F``; ``inf`` when the Fisher information vanishes."""
    if fisher < 0 or math.isnan(fisher):
        raise ValueError(f"Fisher information must be >= 0, got {fisher}")
    if fisher == 0:
        return math.inf
    return 1.0 / fisher
