"""Physical constants (SI unless noted).

CODATA 2018 for G, hbar, m_e and eV; IAU nominal values for the solar mass,
the astronomical unit and the Julian year.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    gravitational_constant: float = 6.67430e-11  # m^3 kg^-1 s^-2
    hbar: float = 1.054571817e-34  # J s
    electron_mass: float = 9.1093837015e-31  # kg
    solar_mass: float = 1.98847e30  # kg
    year: float = 365.25 * 86400.0  # s
    astronomical_unit: float = 1.495978707e11  # m
    electronvolt: float = 1.602176634e-19  # J
    universe_age: float = 1.38e10  # yr
    galactic_dm_density: float = 4e-25  # g / cm^3
    galactic_velocity_scale: float = 220.0  # km / s

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"constant {name} must be positive, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


CONSTANTS = PhysicalConstants()
