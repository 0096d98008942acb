"""Closed-form reference results: two-mode squeezed states, beam-splitter
amplitudes, the Fredkin truth table and spin-dependent N00N states."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ionphonon.fock import SPIN, SPIN_INDEX, HilbertSpace, SpaceMismatchError, StateVector, fidelity, make_space


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"squeezing amplitude must be >= 0, got {self.r}")

    @classmethod
    def from_drive(cls, drive: float, xi: float, omega: float, t: float, phi: float = 0.0) -> "SqueezeParams":
        """Squeezing produced by the driven ``a`` mode after time ``t``:
        ``r = (Omega_a xi / omega) t`` and ``theta = phi + pi/2``."""
        return cls(r=drive * xi / omega * t, theta=phi + math.pi / 2)


@dataclass(frozen=True)
class BsParams:
    """Beam-splitter rate ``epsilon`` (rad/ms) and drive phase ``phi``."""

    epsilon: float
    phi: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"beam-splitter rate must be >= 0, got {self.epsilon}")

    def angle(self, t: float) -> float:
        return self.epsilon * t

    @classmethod
    def from_drive(cls, drive: float, xi: float, omega: float, phi: float = 0.0) -> "BsParams":
        return cls(epsilon=drive * xi / omega, phi=phi)

    @classmethod
    def conditional(cls, g_b: float, xi: float, omega: float) -> "BsParams":
        """Rate of the spin-conditional beam splitter, ``g_b xi / omega``."""
        return cls(epsilon=g_b * xi / omega)


def tmss_prob(n: int, r: float) -> float:
    """Probability of the twin Fock state ``|n, n>`` in a TMSS of amplitude ``r``."""
    if n < 0 or r < 0:
        raise ValueError("need n >= 0 and r >= 0")
    return math.tanh(r) ** (2 * n) / math.cosh(r) ** 2


def tmss_tail_mass(r: float, n_max: int) -> float:
    """Weight of the twin Fock states beyond ``n_max`` (geometric tail)."""
    return math.tanh(r) ** (2 * (n_max + 1))


class TruncatedState(NamedTuple):
    state: StateVector
    tail_mass: float


def tmss_state(params: SqueezeParams, n_max: int, modes: tuple[str, str] = ("b", "c"),
               max_tail: float = 1e-10) -> TruncatedState:
    """Truncated, renormalised TMSS on two modes; the discarded weight is returned too."""
    tail = tmss_tail_mass(params.r, n_max)
    if tail > max_tail:
        raise ValueError(f"n_max={n_max} discards weight {tail:.2e} > {max_tail:.1e}; raise n_max")
    space = make_space([(modes[0], n_max + 1), (modes[1], n_max + 1)])
    amps = np.zeros((n_max + 1, n_max + 1), dtype=np.complex128)
    z = cmath.exp(1j * params.theta) * math.tanh(params.r)
    for n in range(n_max + 1):
        amps[n, n] = z ** n / math.cosh(params.r)
    amps /= math.sqrt(1.0 - tail)
    return TruncatedState(StateVector(space, amps.reshape(-1)), tail)


def bs_coefficient(n1: int, n2: int, N1: int, N2: int, angle: float) -> float:
    """Real transition amplitude ``|n1, n2> -> |N1, N2>`` of the beam splitter.

    Double sum over ``k <= n1``, ``l <= n2`` with ``N1 = n2 + k - l`` and
    ``N2 = n1 - k + l``; factorials enter through log-gamma and the terms are
    summed with ``math.fsum``.
    """
    if min(n1, n2, N1, N2) < 0:
        raise ValueError("phonon numbers must be non-negative")
    if N1 + N2 != n1 + n2:
        return 0.0
    s, c = math.sin(angle), math.cos(angle)
    log_norm = 0.5 * (math.lgamma(n1 + 1) + math.lgamma(n2 + 1) + math.lgamma(N1 + 1) + math.lgamma(N2 + 1))
    terms = []
    for k in range(n1 + 1):
        l = n2 + k - N1
        if l < 0 or l > n2:
            continue
        log_w = log_norm - (math.lgamma(k + 1) + math.lgamma(n1 - k + 1) + math.lgamma(l + 1) + math.lgamma(n2 - l + 1))
        sign = -1.0 if (n1 - k) % 2 else 1.0
        terms.append(sign * s ** (n1 + n2 - k - l) * c ** (k + l) * math.exp(log_w))
    return math.fsum(terms)


def bs_final_state(n1: int, n2: int, params: BsParams, t: float, n_max: int | None = None) -> StateVector:
    """State of modes ``(a, c)`` after the beam splitter acts on ``|n1, n2>`` for time ``t``."""
    total = n1 + n2
    n_max = total if n_max is None else n_max
    if n_max < total:
        raise ValueError(f"n_max={n_max} cannot hold {total} phonons")
    space = make_space([("a", n_max + 1), ("c", n_max + 1)])
    angle = params.angle(t)
    amps = np.zeros((n_max + 1, n_max + 1), dtype=np.complex128)
    for N1 in range(total + 1):
        N2 = total - N1
        phase = cmath.exp(-1j * (params.phi - math.pi / 2) * (n1 - N1))
        amps[N1, N2] = phase * bs_coefficient(n1, n2, N1, N2, angle)
    return StateVector.from_amplitudes(space, amps.reshape(-1))


def _check_spin_ac(space: HilbertSpace) -> None:
    if space.labels != (SPIN, "a", "c"):
        raise SpaceMismatchError(f"expected a (spin, a, c) space, got {space.labels}")
    if space.dim_of("a") != space.dim_of("c"):
        raise SpaceMismatchError("a and c must share a truncation to be swapped")


def fredkin_apply(state: StateVector) -> StateVector:
    """Ideal Fredkin gate: ``|down,n,m> -> |down,n,m>``, ``|up,n,m> -> (-i)^(n+m) |up,m,n>``."""
    _check_spin_ac(state.space)
    psi = state.tensor()
    out = np.empty_like(psi)
    down, up = SPIN_INDEX["down"], SPIN_INDEX["up"]
    d = psi.shape[1]
    n = np.arange(d)
    phase = (-1j) ** (n[:, None] + n[None, :])
    out[down] = psi[down]
    out[up] = (phase * psi[up]).T
    return StateVector(state.space, out.reshape(-1))


def noon_state(n: int, n_max: int) -> StateVector:
    """``(|down>|n,0> + (-i)^n |up>|0,n>) / sqrt(2)`` on ``(spin, a, c)``."""
    if n < 0 or n > n_max:
        raise ValueError(f"n={n} outside 0..n_max={n_max}")
    space = make_space([(SPIN, 2), ("a", n_max + 1), ("c", n_max + 1)])
    amps = np.zeros(space.dims, dtype=np.complex128)
    amps[SPIN_INDEX["down"], n, 0] = 1 / math.sqrt(2)
    amps[SPIN_INDEX["up"], 0, n] = (-1j) ** n / math.sqrt(2)
    return StateVector(space, amps.reshape(-1))


def gate_time(eps_b: float) -> float:
    """Duration of the conditional swap, ``pi / (2 eps_b)``."""
    if eps_b <= 0:
        raise ValueError("gate time needs a positive conditional beam-splitter rate")
    return math.pi / (2 * eps_b)


def tmss_fidelity(state: StateVector, params: SqueezeParams, modes: tuple[str, str] = ("b", "c")) -> float:
    """Overlap of the reduced ``modes`` state with the exact (untruncated) TMSS.

    ``state`` lives in the truncated space, so only the kept twin Fock
    amplitudes contribute; the renormalised target is rescaled by ``1 - tail``.
    """
    n_max = min(state.space.n_max(modes[0]), state.space.n_max(modes[1]))
    target = tmss_state(params, n_max, modes, max_tail=1.0)
    if target.state.space != state.space.restrict(modes):
        raise SpaceMismatchError("modes must share one truncation for the TMSS target")
    return (1.0 - target.tail_mass) * fidelity(state, target.state)
