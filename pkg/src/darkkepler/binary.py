"""Binary systems, dark-matter particle specs and the scale quantities they imply.

Everything downstream takes its physical scale from a :class:`BinarySystem`:
the planet's orbit sets the photon energy ``hbar * omega_p`` and the kick size,
while :class:`DmpSpec` fixes the particle mass (in electron masses) and its
initial dimensionless energy ``w0 = 2 E / (m_d v_p^2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

from .constants import CONSTANTS, PhysicalConstants

PERIOD_TOLERANCE = 1e-3
MAX_MASS_RATIO = 0.1


class OutsideValidityWarning(UserWarning):
    """The perihelion kick formula was evaluated for q < r_p."""


@dataclass(frozen=True)
class Harmonic:
    """One term ``amplitude * sin(index * phi + phase)`` of the kick function.

    Amplitudes are relative to the fundamental kick ``eps = 2 f0 m_p / M``.
    """

    index: int
    amplitude: float
    phase: float = 0.0


SIN_KICK = (Harmonic(1, 1.0, 0.0),)


@dataclass(frozen=True)
class BinarySystem:
    """A central mass with a planet on a circular orbit.

    Any two of ``orbit_radius`` (m), ``orbit_velocity`` (m/s) and
    ``period`` (yr) determine the third; pass ``None`` for the one to derive.
    If all three are given they must agree to ``PERIOD_TOLERANCE``.
    """

    name: str
    central_mass: float
    planet_mass: float
    orbit_radius: Optional[float] = None
    orbit_velocity: Optional[float] = None
    period: Optional[float] = None
    kick_amplitude: float = 2.5
    kick_harmonics: tuple[Harmonic, ...] = SIN_KICK
    empirical_chaos_border: Optional[float] = None
    constants: PhysicalConstants = field(default=CONSTANTS, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.central_mass > 0 and self.planet_mass > 0):
            raise ValueError("masses must be positive")
        if self.planet_mass / self.central_mass > MAX_MASS_RATIO:
            raise ValueError(
                f"planet/central mass ratio {self.planet_mass / self.central_mass:.3g} "
                f"exceeds {MAX_MASS_RATIO}; the Kepler map needs m_p << M"
            )
        if not self.kick_amplitude > 0:
            raise ValueError("kick_amplitude f0 must be positive")
        if not self.kick_harmonics:
            raise ValueError("kick_harmonics must not be empty")
        harmonics = tuple(
            h if isinstance(h, Harmonic) else Harmonic(*h) for h in self.kick_harmonics
        )
        object.__setattr__(self, "kick_harmonics", harmonics)

        r, v, t = self.orbit_radius, self.orbit_velocity, self.period
        year = self.constants.year
        given = sum(x is not None for x in (r, v, t))
        if given < 2:
            raise ValueError("need at least two of orbit_radius, orbit_velocity, period")
        for label, x in (("orbit_radius", r), ("orbit_velocity", v), ("period", t)):
            if x is not None and not x > 0:
                raise ValueError(f"{label} must be positive")
        if t is None:
            t = 2 * math.pi * r / v / year
        elif r is None:
            r = v * t * year / (2 * math.pi)
        elif v is None:
            v = 2 * math.pi * r / (t * year)
        else:
            t_orbit = 2 * math.pi * r / v / year
            if abs(t - t_orbit) / t >= PERIOD_TOLERANCE:
                raise ValueError(
                    f"period {t} yr inconsistent with 2 pi r/v = {t_orbit:.6g} yr "
                    f"(tolerance {PERIOD_TOLERANCE:g}); omit one of the three"
                )
        object.__setattr__(self, "orbit_radius", float(r))
        object.__setattr__(self, "orbit_velocity", float(v))
        object.__setattr__(self, "period", float(t))

    @property
    def mass_ratio(self) -> float:
        return self.planet_mass / self.central_mass

    @property
    def angular_frequency(self) -> float:
        """omega_p = v_p / r_p in s^-1."""
        return self.orbit_velocity / self.orbit_radius

    def with_kick_amplitude(self, f0: float) -> "BinarySystem":
        return replace(self, kick_amplitude=f0)

    def kick_terms(self) -> list[tuple[int, float, float]]:
        """Kick harmonics with absolute amplitudes in units of w."""
        eps = epsilon(self)
        return [(h.index, eps * h.amplitude, h.phase) for h in self.kick_harmonics]


@dataclass(frozen=True)
class DmpSpec:
    mass_ratio: float
    initial_w: float = -1.0

    def __post_init__(self) -> None:
        if not self.mass_ratio > 0:
            raise ValueError("mass_ratio m_d/m_e must be positive")
        if self.initial_w > 0:
            raise ValueError("initial_w must be <= 0 (bound orbit)")


@dataclass(frozen=True)
class AtomicScales:
    bohr_radius: float  # m
    atomic_energy: float  # eV
    atomic_frequency: float  # s^-1
    dimensionless_frequency: float
    kick_strength: float
    ionization_photons: float
    ground_state_photons: float


def kick_amplitude_from_perihelion(system: BinarySystem, q: float) -> float:
    """Kick amplitude f0 for a perihelion distance ``q`` (m).

    The fit is only trusted for ``q > r_p``; smaller ``q`` still returns a
    value but emits :class:`OutsideValidityWarning`.
    """
    if not q > 0:
        raise ValueError("perihelion distance must be positive")
    x = q / system.orbit_radius
    if x < 1:
        warnings.warn(
            f"perihelion q = {x:.3g} r_p is inside the planet orbit; f0 fit is outside validity",
            OutsideValidityWarning,
            stacklevel=2,
        )
    return 2.0 * x ** -0.25 * math.exp(-0.94 * x**1.5)


def epsilon(system: BinarySystem) -> float:
    """Dimensionless kick 2 f0 m_p/M (energy change in units of m_d v_p^2 / 2)."""
    return 2.0 * system.kick_amplitude * system.mass_ratio


def chaos_border(system: BinarySystem) -> float:
    return 2.5 * epsilon(system) ** 0.4


def photon_energy(system: BinarySystem) -> float:
    """hbar * omega_p in joules."""
    return system.constants.hbar * system.angular_frequency


def ionization_photons(system: BinarySystem, dmp: DmpSpec) -> float:
    c = system.constants
    m_d = dmp.mass_ratio * c.electron_mass
    return m_d * system.orbit_velocity**2 / (2.0 * photon_energy(system)) * abs(dmp.initial_w)


def kick_strength(system: BinarySystem, dmp: DmpSpec) -> float:
    """Quantum kick k = 2 f0 (m_p/M) N_I, with N_I taken at |w0| = 1."""
    return epsilon(system) * ionization_photons(system, replace(dmp, initial_w=-1.0))


def atomic_scales(system: BinarySystem, dmp: DmpSpec) -> AtomicScales:
    c = system.constants
    m_d = dmp.mass_ratio * c.electron_mass
    kappa, hbar = c.gravitational_constant, c.hbar
    bohr = hbar**2 / (kappa * m_d**2 * system.central_mass)
    energy_j = kappa * m_d * system.central_mass / bohr
    freq = energy_j / hbar
    return AtomicScales(
        bohr_radius=bohr,
        atomic_energy=energy_j / c.electronvolt,
        atomic_frequency=freq,
        dimensionless_frequency=system.angular_frequency / freq,
        kick_strength=kick_strength(system, dmp),
        ionization_photons=ionization_photons(system, dmp),
        ground_state_photons=energy_j / (2.0 * photon_energy(system)),
    )


def _sun_jupiter(name: str = "sun-jupiter", **kw) -> BinarySystem:
    m_sun = CONSTANTS.solar_mass
    # T_p is derived from r_p and v_p; the rounded 11.86 yr is 3e-3 off.
    return BinarySystem(
        name=name,
        central_mass=m_sun,
        planet_mass=m_sun / 1047.0,
        orbit_radius=7.78e11,
        orbit_velocity=13.1e3,
        **kw,
    )


def _sun_jupiter_weak() -> BinarySystem:
    base = _sun_jupiter("sun-jupiter-weak")
    # perihelion on the planet orbit, the edge of the fit's validity
    return base.with_kick_amplitude(kick_amplitude_from_perihelion(base, base.orbit_radius))


def _sgr_a_s2() -> BinarySystem:
    m_sun = CONSTANTS.solar_mass
    # r and v quoted with rounding give 15.36 yr; keep r and v, derive T.
    return BinarySystem(
        name="sgrA-s2",
        central_mass=4e6 * m_sun,
        planet_mass=15.0 * m_sun,
        orbit_radius=980.0 * CONSTANTS.astronomical_unit,
        orbit_velocity=1.9e6,
        kick_amplitude=2.5,
    )


PRESETS = {
    "sun-jupiter": lambda: _sun_jupiter(),
    "sun-jupiter-weak": _sun_jupiter_weak,
    "halley-kick": lambda: _sun_jupiter("halley-kick", empirical_chaos_border=0.45),
    "sgrA-s2": _sgr_a_s2,
}


def preset(name: str, **overrides) -> BinarySystem:
    """Named binary system; keyword overrides replace fields (e.g. ``kick_harmonics``)."""
    try:
        system = PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(system, **overrides) if overrides else system
