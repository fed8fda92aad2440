"""Capture of galactic dark matter by a binary: cross-section, energy depth and mass.

The captured mass is the classical Maxwell-flow estimate accumulated over
an effective time. Classically that time is ``t_H``. When the particle's
diffusion is localized it stops at the quantum relaxation time
``t_q = T_p * ell_phi``, after which escape balances the inflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

from .binary import BinarySystem, DmpSpec, chaos_border, ionization_photons, photon_energy
from .constants import PhysicalConstants
from .regimes import DEFAULT_T_H, localization_length, one_photon_border, regime_report

FLOW_PREFACTOR = 100.0


def capture_cross_section(system: BinarySystem, v: float) -> float:
    """8 pi r_p^2 (v_p/v)^2 in m^2 for an incoming speed ``v`` in m/s."""
    if not v > 0:
        raise ValueError(f"speed must be positive, got {v!r}")
    return 8.0 * math.pi * system.orbit_radius**2 * (system.orbit_velocity / v) ** 2


def effective_chaos_border(system: BinarySystem) -> float:
    """Empirical border when the preset carries one, the analytic fit otherwise."""
    if system.empirical_chaos_border is not None:
        return system.empirical_chaos_border
    return chaos_border(system)


def quantum_energy_border(system: BinarySystem, dmp: DmpSpec) -> float:
    """Deepest dimensionless energy reached by localized diffusion.

    ``ell_phi`` photons of ``hbar omega_p`` measured in ``m_d v_p^2 / 2``, i.e.
    ``ell_phi / N_I(|w0| = 1)``. Below the one-photon border a single photon is
    absorbed and the value is frozen at the border; it never exceeds the
    classical chaos border.
    """
    mu_1 = one_photon_border(system)
    mu = max(dmp.mass_ratio, mu_1)
    probe = DmpSpec(mu)
    w_q = localization_length(system, probe) / ionization_photons(system, probe)
    return min(w_q, effective_chaos_border(system))


def halo_radius(system: BinarySystem, dmp: DmpSpec) -> float:
    """Halo extent r_p / w_q in units of r_p (never inside the planet orbit)."""
    return max(1.0, 1.0 / quantum_energy_border(system, dmp))


def captured_mass_flow(system: BinarySystem, constants: Optional[PhysicalConstants] = None) -> float:
    """Captured mass per unit time in g/s (cgs evaluation of the Maxwell-flow estimate)."""
    c = system.constants if constants is None else constants
    v_p = system.orbit_velocity * 100.0  # cm/s
    u = c.galactic_velocity_scale * 1e5  # km/s -> cm/s
    r_p = system.orbit_radius * 100.0  # cm
    return FLOW_PREFACTOR * (v_p / u) ** 3 * system.mass_ratio * c.galactic_dm_density * r_p**2 * v_p


def quantum_time(system: BinarySystem, dmp: DmpSpec) -> float:
    """t_q = T_p * ell_phi in years, at least one planet period."""
    return system.period * max(1.0, localization_length(system, dmp))


def reduction_factor(system: BinarySystem, dmp: DmpSpec, t: float = DEFAULT_T_H) -> float:
    """min(1, t_q / t) when diffusion is localized (ell_phi < N_I), else 1."""
    if localization_length(system, dmp) >= ionization_photons(system, dmp):
        return 1.0
    return min(1.0, quantum_time(system, dmp) / t)


def captured_mass(system: BinarySystem, dmp: DmpSpec,
                  constants: Optional[PhysicalConstants] = None, t: float = DEFAULT_T_H) -> float:
    """Captured dark-matter mass in grams after classical accumulation time ``t`` (years)."""
    if not t > 0:
        raise ValueError("accumulation time must be positive")
    c = system.constants if constants is None else constants
    seconds = t * reduction_factor(system, dmp, t) * c.year
    return captured_mass_flow(system, c) * seconds


def maxwell_speed_pdf(u: float, v: float) -> float:
    """Speed density proportional to v^2 exp(-3 v^2/u^2), normalized to unit integral.

    Mode u/sqrt(3), mean square u^2/2.
    """
    if not u > 0:
        raise ValueError("u must be positive")
    if v < 0:
        raise ValueError("speed must be non-negative")
    return math.sqrt(432.0 / math.pi) * v * v / u**3 * math.exp(-3.0 * v * v / (u * u))


def maxwell_fraction_below(u: float, v_cut: float) -> float:
    """Probability that the speed is below ``v_cut`` under :func:`maxwell_speed_pdf`."""
    if v_cut <= 0:
        return 0.0
    x = math.sqrt(3.0) * v_cut / u
    return math.erf(x) - 2.0 / math.sqrt(math.pi) * x * math.exp(-x * x)


def one_photon_cut_fraction(system: BinarySystem, dmp: DmpSpec,
                            constants: Optional[PhysicalConstants] = None) -> float:
    """Fraction of the Maxwell flow with m_d v^2/2 below one photon hbar omega_p."""
    c = system.constants if constants is None else constants
    m_d = dmp.mass_ratio * c.electron_mass
    v_cut = math.sqrt(2.0 * photon_energy(system) / m_d)
    return maxwell_fraction_below(c.galactic_velocity_scale * 1e3, v_cut)


@dataclass(frozen=True)
class CaptureReport:
    mass_ratio: float
    regime: str
    cross_section: Callable[[float], float]
    quantum_border: float
    chaos_border: float
    halo_radius: float
    captured_mass: float
    accumulation_time: float
    reduction_factor: float
    one_photon_energy_cut: bool
    cut_fraction: float
    orbit_velocity: float  # m/s, speeds at which to_dict samples the cross-section
    galactic_velocity: float

    def to_dict(self) -> dict:
        """JSON-ready view; every quantity is paired with its unit."""
        def q(value, unit):
            return {"value": float(value), "unit": unit}

        return {
            "mass_ratio": q(self.mass_ratio, "m_e"),
            "regime": self.regime,
            "cross_section": {
                "formula": "8*pi*r_p^2*(v_p/v)^2",
                "at_orbit_velocity": q(self.cross_section(self.orbit_velocity), "m^2"),
                "at_galactic_velocity": q(self.cross_section(self.galactic_velocity), "m^2"),
            },
            "quantum_border_w_q": q(self.quantum_border, "dimensionless"),
            "chaos_border_w_ch": q(self.chaos_border, "dimensionless"),
            "halo_radius": q(self.halo_radius, "r_p"),
            "captured_mass": q(self.captured_mass, "g"),
            "accumulation_time": q(self.accumulation_time, "yr"),
            "reduction_factor": q(self.reduction_factor, "dimensionless"),
            "one_photon_energy_cut": self.one_photon_energy_cut,
            "cut_fraction": q(self.cut_fraction, "dimensionless"),
        }


def capture_report(system: BinarySystem, dmp: DmpSpec, t: float = DEFAULT_T_H,
                   constants: Optional[PhysicalConstants] = None) -> CaptureReport:
    c = system.constants if constants is None else constants
    report = regime_report(system, dmp, t_h=t)
    red = reduction_factor(system, dmp, t)
    return CaptureReport(
        mass_ratio=dmp.mass_ratio,
        regime=report.regime,
        cross_section=partial(capture_cross_section, system),
        quantum_border=quantum_energy_border(system, dmp),
        chaos_border=effective_chaos_border(system),
        halo_radius=halo_radius(system, dmp),
        captured_mass=captured_mass(system, dmp, c, t),
        accumulation_time=t * red,
        reduction_factor=red,
        one_photon_energy_cut=report.kick_strength < 1.0,
        cut_fraction=one_photon_cut_fraction(system, dmp, c),
        orbit_velocity=system.orbit_velocity,
        galactic_velocity=c.galactic_velocity_scale * 1e3,
    )


__all__ = [
    "CaptureReport",
    "capture_cross_section",
    "capture_report",
    "captured_mass",
    "captured_mass_flow",
    "effective_chaos_border",
    "halo_radius",
    "maxwell_fraction_below",
    "maxwell_speed_pdf",
    "one_photon_cut_fraction",
    "quantum_energy_border",
    "quantum_time",
    "reduction_factor",
]
