"""Trap parameters to model couplings: ion spacing, trilinear rate, Lamb-Dicke factor.

SI units throughout; angular frequencies in rad/s.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

# CODATA 2018 recommended values (NIST SP 961, 2019)
ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
HBAR = 1.054571817e-34  # J s, exact
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

CA40_MASS_U = 39.962591  # 40Ca+ ion mass in u
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrapConfig:
    ion_mass: float
    omega_z: float
    omega_a: float
    omega_b: float
    omega_c: float
    k_x: float = 0.0
    mode_amplitude: float = 1.0
    charge: float = field(default=ELEMENTARY_CHARGE)

    def __post_init__(self):
        if not self.ion_mass > 0:
            raise ValueError("ion mass must be positive")
        for name in ("omega_z", "omega_a", "omega_b", "omega_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.charge < 0 or self.k_x < 0:
            raise ValueError("charge and k_x must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def mhz(nu: float) -> float:
    """Angular frequency (rad/s) for ``nu`` in MHz."""
    return TWO_PI * nu * 1e6


def calcium_trap() -> TrapConfig:
    """Reference 40Ca+ trap with a 20 kHz detuning and 729 nm Raman beams.

    ``k_x = sqrt(2) 2pi/729nm`` for counter-propagating 45-degree beams;
    ``M = 1/sqrt(6)`` is the outer-ion amplitude of a three-ion zigzag mode.
    """
    return TrapConfig(
        ion_mass=CA40_MASS_U * ATOMIC_MASS_UNIT,
        omega_z=mhz(1.0),
        omega_a=mhz(1.41),
        omega_b=mhz(0.695),
        omega_c=mhz(0.695),
        k_x=math.sqrt(2.0) * TWO_PI / 729e-9,
        mode_amplitude=1.0 / math.sqrt(6.0),
    )


def ion_spacing(cfg: TrapConfig) -> float:
    """Neighbouring-ion distance ``(5 e^2 / (16 pi eps0 m wz^2))^(1/3)`` in metres."""
    return (5.0 * cfg.charge ** 2 / (16.0 * math.pi * VACUUM_PERMITTIVITY * cfg.ion_mass * cfg.omega_z ** 2)) ** (1.0 / 3.0)


def trilinear_coupling(cfg: TrapConfig) -> float:
    """``xi = (9 wz^2 / (5 z0)) sqrt(hbar / (m wa wb wc))`` in rad/s."""
    z0 = ion_spacing(cfg)
    if z0 == 0:
        return 0.0
    return 9.0 * cfg.omega_z ** 2 / (5.0 * z0) * math.sqrt(HBAR / (cfg.ion_mass * cfg.omega_a * cfg.omega_b * cfg.omega_c))


def trilinear_coupling_khz(cfg: TrapConfig) -> float:
    """``xi / 2pi`` in kHz."""
    return trilinear_coupling(cfg) / TWO_PI / 1e3


def lamb_dicke(cfg: TrapConfig) -> float:
    """``eta_b = k_x sqrt(hbar / (2 m wb)) M``."""
    return cfg.k_x * math.sqrt(HBAR / (2.0 * cfg.ion_mass * cfg.omega_b)) * cfg.mode_amplitude


def frequency_condition(omega_a: float, omega_b: float, omega_c: float, max_ratio: float = 0.1) -> float:
    """Detuning ``omega = omega_a - omega_b - omega_c``.

    Raises if ``|omega|`` is not small against the lowest mode frequency.
    """
    omega = omega_a - omega_b - omega_c
    lowest = min(omega_a, omega_b, omega_c)
    if abs(omega) > max_ratio * lowest:
        raise ValueError(f"|omega| = {abs(omega):.4g} exceeds {max_ratio} x lowest mode frequency {lowest:.4g}")
    return omega


def derived_parameters(cfg: TrapConfig) -> dict:
    """Everything the ``params`` command reports."""
    omega = frequency_condition(cfg.omega_a, cfg.omega_b, cfg.omega_c)
    return {
        "z0_m": ion_spacing(cfg),
        "z0_um": ion_spacing(cfg) * 1e6,
        "xi_rad_s": trilinear_coupling(cfg),
        "xi_khz": trilinear_coupling_khz(cfg),
        "eta_b": lamb_dicke(cfg),
        "omega_khz": omega / TWO_PI / 1e3,
    }
