"""Rotating-frame and effective Hamiltonians of the three-mode ion crystal.

Units: hbar = 1, every rate is an angular frequency in rad/ms.  Values quoted
as nu/2pi in kHz enter through :func:`unit_convert` (1 kHz -> 2pi rad/ms).

The mode self-energies are never built; all Hamiltonians live in the
rotating frames in which the drive and the trilinear coupling
``xi (a^dag b c + a b^dag c^dag)`` are time independent (this assumes the
resonance ``omega_a = omega_b + omega_c + omega`` holds exactly).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

from ionphonon.fock import (
    SPIN,
    HilbertSpace,
    Operator,
    embed,
    identity,
    local_annihilation,
    local_number,
    make_space,
    mode_space,
    spin_projector,
)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

KINDS = ("trilinear", "driven_a", "driven_b", "spin_conditional", "effective_tmss", "effective_bs")


def unit_convert(khz: float) -> float:
    """nu/2pi in kHz -> angular frequency in rad/ms."""
    if khz < 0:
        raise ValueError(f"frequency must be non-negative, got {khz}")
    return TWO_PI * khz


def to_khz(rad_per_ms: float) -> float:
    """Inverse of :func:`unit_convert`."""
    if rad_per_ms < 0:
        raise ValueError(f"frequency must be non-negative, got {rad_per_ms}")
    return rad_per_ms / TWO_PI


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters for one Hamiltonian; rates in rad/ms.

    ``omega_drive_amp`` is the displacement amplitude of whichever mode is
    driven (``Omega_a`` for ``driven_a``/``effective_tmss``, ``Omega_b`` for
    ``driven_b``/``effective_bs``).  ``n_max`` is an int for all modes or a
    per-mode mapping.
    """

    kind: str
    xi: float = 0.0
    omega: float = 0.0
    omega_drive_amp: float = 0.0
    phi: float = 0.0
    g_b: float = 0.0
    eta_b: float = 0.0
    include_residual: bool = False
    include_ac_stark: bool = False
    n_max: int | Mapping[str, int] = 20

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {KINDS}")
        for name in ("xi", "omega", "omega_drive_amp", "g_b"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite non-negative rate, got {v}")
        if not 0.0 <= self.eta_b < 1.0:
            raise ValueError(f"eta_b must lie in [0, 1), got {self.eta_b}")
        cutoffs = self.n_max.values() if isinstance(self.n_max, Mapping) else [self.n_max]
        if any(int(n) < 1 for n in cutoffs):
            raise ValueError("every n_max must be >= 1")
        if isinstance(self.n_max, Mapping):
            object.__setattr__(self, "n_max", {m: int(self.n_max[m]) for m in ("a", "b", "c")})

    @property
    def weak_coupling_violated(self) -> bool:
        """True when the couplings are not small against the detuning."""
        strongest = max(self.omega_drive_amp, self.xi, self.g_b)
        return strongest > self.omega / 3.0

    def space(self) -> HilbertSpace:
        return mode_space(self.n_max, spin=self.kind == "spin_conditional")

    def with_n_max(self, n_max) -> "HamiltonianSpec":
        return _replace(self, n_max=n_max)

    def to_config(self) -> dict[str, Any]:
        """Config-file form: frequencies as nu/2pi in kHz."""
        return {
            "kind": self.kind,
            "xi_khz": to_khz(self.xi),
            "omega_khz": to_khz(self.omega),
            "drive_khz": to_khz(self.omega_drive_amp),
            "phi": self.phi,
            "g_b_khz": to_khz(self.g_b),
            "eta_b": self.eta_b,
            "include_residual": self.include_residual,
            "include_ac_stark": self.include_ac_stark,
            "n_max": dict(self.n_max) if isinstance(self.n_max, Mapping) else self.n_max,
        }

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "HamiltonianSpec":
        known = {"kind", "xi_khz", "omega_khz", "drive_khz", "phi", "g_b_khz", "eta_b",
                 "include_residual", "include_ac_stark", "n_max"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown hamiltonian keys: {sorted(unknown)}")
        return cls(
            kind=cfg["kind"],
            xi=unit_convert(float(cfg.get("xi_khz", 0.0))),
            omega=unit_convert(float(cfg.get("omega_khz", 0.0))),
            omega_drive_amp=unit_convert(float(cfg.get("drive_khz", 0.0))),
            phi=float(cfg.get("phi", 0.0)),
            g_b=unit_convert(float(cfg.get("g_b_khz", 0.0))),
            eta_b=float(cfg.get("eta_b", 0.0)),
            include_residual=bool(cfg.get("include_residual", False)),
            include_ac_stark=bool(cfg.get("include_ac_stark", False)),
            n_max=cfg.get("n_max", 20),
        )


def _replace(spec: HamiltonianSpec, **changes) -> HamiltonianSpec:
    d = asdict(spec)
    d.update(changes)
    return HamiltonianSpec(**d)


def _expect(spec: HamiltonianSpec, kind: str) -> HilbertSpace:
    if spec.kind != kind:
        raise ValueError(f"spec.kind is {spec.kind!r}, expected {kind!r}")
    if spec.weak_coupling_violated:
        log.warning("weak-coupling regime violated: max(Omega, xi, g_b) > omega/3 for %s", kind)
    return spec.space()


def _hermitian_part(space: HilbertSpace, x: Operator) -> Operator:
    # X + X^dag is conjugate-symmetric bit for bit
    return x + x.adjoint()


def _lowering(space: HilbertSpace, label: str):
    return local_annihilation(space.dim_of(label))


def trilinear_term(space: HilbertSpace, xi: float) -> Operator:
    """``xi (a^dag b c + a b^dag c^dag)``."""
    a = _lowering(space, "a")
    x = embed(space, {"a": a.conj().T, "b": _lowering(space, "b"), "c": _lowering(space, "c")})
    return xi * _hermitian_part(space, x)


def _number(space: HilbertSpace, label: str) -> Operator:
    return embed(space, {label: local_number(space.dim_of(label))})


def _displacement(space: HilbertSpace, label: str, amp: float, phi: float) -> Operator:
    """``amp (m^dag e^{i phi} + m e^{-i phi})``."""
    x = embed(space, {label: _lowering(space, label).conj().T * np.exp(1j * phi)})
    return amp * _hermitian_part(space, x)


def residual_interaction(space: HilbertSpace, xi: float, omega: float) -> Operator:
    """``(xi^2/omega)(n_a + n_a n_b + n_a n_c - n_b n_c)`` (diagonal)."""
    na, nb, nc = (_number(space, m) for m in ("a", "b", "c"))
    return (xi * xi / omega) * (na + na @ nb + na @ nc - nb @ nc)


def build_trilinear(spec: HamiltonianSpec) -> Operator:
    space = _expect(spec, "trilinear")
    return trilinear_term(space, spec.xi)


def build_driven_a(spec: HamiltonianSpec) -> Operator:
    """``omega n_a + Omega_a (a^dag e^{i phi} + h.c.) + trilinear``."""
    space = _expect(spec, "driven_a")
    return (spec.omega * _number(space, "a")
            + _displacement(space, "a", spec.omega_drive_amp, spec.phi)
            + trilinear_term(space, spec.xi))


def build_driven_b(spec: HamiltonianSpec) -> Operator:
    """``-omega n_b + Omega_b (b^dag e^{i phi} + h.c.) + trilinear``."""
    space = _expect(spec, "driven_b")
    return (-spec.omega * _number(space, "b")
            + _displacement(space, "b", spec.omega_drive_amp, spec.phi)
            + trilinear_term(space, spec.xi))


def lamb_dicke_diagonal(eta_b: float, n_max: int) -> np.ndarray:
    """Diagonal ``f_m`` of the Lamb-Dicke operator for ``m = 0..n_max``.

    ``f_m = exp(-eta^2/2) sum_{n<=m} (-eta^2)^n C(m, n) / (n+1)!``, summed
    exactly since ``b^dag^n b^n`` vanishes on ``|m>`` for ``n > m``.
    """
    if not 0.0 <= eta_b < 1.0:
        raise ValueError(f"eta_b must lie in [0, 1), got {eta_b}")
    x = eta_b * eta_b
    pref = math.exp(-x / 2.0)
    out = np.empty(n_max + 1)
    for m in range(n_max + 1):
        terms = [(-x) ** n * math.comb(m, n) / math.factorial(n + 1) for n in range(m + 1)]
        out[m] = pref * math.fsum(terms)
    return out


def lamb_dicke_operator(eta_b: float, n_max: int) -> Operator:
    """``F(n_b)`` on a lone ``b`` mode truncated at ``n_max``."""
    space = make_space([("b", n_max + 1)])
    return Operator(space, sp.diags(lamb_dicke_diagonal(eta_b, n_max).astype(np.complex128), 0, format="csr"))


def ac_stark_term(space: HilbertSpace, g_b: float, omega: float) -> Operator:
    """``-(g_b^2/omega) |up><up|``."""
    if omega <= 0:
        raise ValueError("AC-Stark compensation needs a positive detuning")
    return -(g_b * g_b / omega) * spin_projector(space, "up")


def build_spin_conditional(spec: HamiltonianSpec) -> Operator:
    """Spin-dependent force on ``b`` with Lamb-Dicke nonlinearity plus trilinear coupling."""
    space = _expect(spec, "spin_conditional")
    nb = space.dim_of("b")
    f = sp.diags(lamb_dicke_diagonal(spec.eta_b, nb - 1).astype(np.complex128), 0, format="csr")
    fb = f @ _lowering(space, "b")  # F(n_b) b; its adjoint is b^dag F(n_b)
    up = np.diag([0.0, 1.0])
    x = embed(space, {SPIN: up, "b": fb})
    h = (-spec.omega * _number(space, "b")
         + spec.g_b * _hermitian_part(space, x)
         + trilinear_term(space, spec.xi))
    if spec.include_ac_stark:
        h = h + ac_stark_term(space, spec.g_b, spec.omega)
    return h


def _rate(spec: HamiltonianSpec) -> float:
    if spec.omega <= 0:
        raise ValueError("effective Hamiltonians need a positive detuning omega")
    return spec.omega_drive_amp * spec.xi / spec.omega


def build_effective_tmss(spec: HamiltonianSpec) -> Operator:
    """Two-mode squeezing of ``b, c`` after eliminating the driven ``a`` mode."""
    space = _expect(spec, "effective_tmss")
    rate = _rate(spec)
    x = embed(space, {"b": _lowering(space, "b").conj().T * np.exp(1j * spec.phi),
                      "c": _lowering(space, "c").conj().T})
    h = spec.omega * _number(space, "a") - rate * _hermitian_part(space, x)
    if spec.include_residual:
        h = h + (-(spec.omega_drive_amp ** 2) / spec.omega) * identity(space)
        h = h + residual_interaction(space, spec.xi, spec.omega)
    return h


def build_effective_bs(spec: HamiltonianSpec) -> Operator:
    """Beam splitter between ``a`` and ``c`` after eliminating the driven ``b`` mode."""
    space = _expect(spec, "effective_bs")
    rate = _rate(spec)
    x = embed(space, {"a": _lowering(space, "a").conj().T * np.exp(1j * spec.phi),
                      "c": _lowering(space, "c")})
    h = -spec.omega * _number(space, "b") + rate * _hermitian_part(space, x)
    if spec.include_residual:
        h = h + (spec.omega_drive_amp ** 2 / spec.omega) * identity(space)
        h = h - residual_interaction(space, spec.xi, spec.omega)
    return h


_BUILDERS = {
    "trilinear": build_trilinear,
    "driven_a": build_driven_a,
    "driven_b": build_driven_b,
    "spin_conditional": build_spin_conditional,
    "effective_tmss": build_effective_tmss,
    "effective_bs": build_effective_bs,
}


def build(spec: HamiltonianSpec) -> Operator:
    """Dispatch on ``spec.kind``."""
    return _BUILDERS[spec.kind](spec)
