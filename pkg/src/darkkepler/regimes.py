"""Analytic regimes of DMP ionization versus mass ratio mu = m_d / m_e.

With N_I the photons to the continuum and l = k^2/2 the localization length
on the photon lattice:

* ``one-photon``           N_I <= 1, rate (omega_p/2pi) J_1(k)^2
* ``few-photon-n``         n = ceil(N_I) >= 2 with l < 1, rate (omega_p/2pi) J_n(k)^2
* ``localized``            1 <= l < N_I, escape from the exponential tail
* ``chaotic-delocalized``  l >= N_I, classical diffusive escape after t_H

Few-photon orders above ``n_max_photon`` use the same Bessel-rate pattern and
are labelled ``extrapolated``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bessel import MAX_ORDER, bessel_j, log_bessel_j_series
from .binary import BinarySystem, DmpSpec, epsilon, ionization_photons, kick_strength

ONE_PHOTON = "one-photon"
FEW_PHOTON = "few-photon"
LOCALIZED = "localized"
CHAOTIC = "chaotic-delocalized"

DEFAULT_T_H = 1e7  # yr
N_MAX_PHOTON = 3
_CEIL_TOL = 1e-9


def photons_needed(n_ionization: float) -> int:
    """ceil(N_I), at least 1; values within 1e-9 above an integer round down."""
    return max(1, math.ceil(n_ionization * (1.0 - _CEIL_TOL)))


def localization_length(system: BinarySystem, dmp: DmpSpec) -> float:
    return kick_strength(system, dmp) ** 2 / 2.0


def delocalization_border(system: BinarySystem, initial_w: float = -1.0) -> float:
    """mu at which l = N_I; for w0 = -1 this is hbar omega_p (M/m_p)^2 / (f0^2 m_e v_p^2)."""
    n_per_mu = ionization_photons(system, DmpSpec(1.0, -1.0))
    eps = epsilon(system)
    # l = eps^2 (n_per_mu mu)^2 / 2 = |w0| n_per_mu mu
    return 2.0 * abs(initial_w) / (eps**2 * n_per_mu)


def one_photon_border(system: BinarySystem, initial_w: float = -1.0) -> float:
    """mu at which N_I = 1."""
    return 1.0 / ionization_photons(system, DmpSpec(1.0, initial_w))


def unit_kick_border(system: BinarySystem) -> float:
    """mu at which k = 1."""
    return 1.0 / kick_strength(system, DmpSpec(1.0))


def classify(n_ionization: float, ell: float, n_max_photon: int = N_MAX_PHOTON) -> tuple[str, int, bool]:
    """(regime, photon order, extrapolated) for given N_I and l."""
    n = photons_needed(n_ionization)
    if ell >= n_ionization:
        return CHAOTIC, n, False
    if n == 1:
        return ONE_PHOTON, 1, False
    if ell < 1.0:
        return FEW_PHOTON, n, n > n_max_photon
    return LOCALIZED, n, False


def regime_label(regime: str, n: int) -> str:
    return f"{FEW_PHOTON}-{n}" if regime == FEW_PHOTON else regime


def _log_j_squared(n: int, k: float) -> float:
    if k == 0.0:
        return -math.inf
    if n <= MAX_ORDER and k <= 1e3:
        j = bessel_j(n, k)
        if j != 0.0:
            return 2.0 * math.log(abs(j))
    return 2.0 * log_bessel_j_series(n, k)


@dataclass(frozen=True)
class Lifetime:
    years: float
    log10_years: float
    mechanism: str
    photons: int
    extrapolated: bool = False
    outside_domain: bool = False

    def __iter__(self):
        # unpacks as (t_I years, mechanism)
        return iter((self.years, self.mechanism))


def _lifetime(system: BinarySystem, n_i: float, k: float, t_h: float, n_max_photon: int) -> Lifetime:
    ell = k * k / 2.0
    regime, n, extrapolated = classify(n_i, ell, n_max_photon)
    label = regime_label(regime, n)
    if regime == CHAOTIC:
        log_t = math.log(t_h)
        outside = False
    elif regime == LOCALIZED:
        tail = localized_lifetime(t_h, n_i, ell)
        log_t = tail.log10_years * math.log(10.0)
        outside = tail.outside_domain
    else:
        # Gamma = (omega_p / 2 pi) J_n(k)^2, so t_I = T_p / J_n(k)^2
        log_t = math.log(system.period) - _log_j_squared(n, k)
        outside = False
    log10_t = log_t / math.log(10.0)
    if regime == CHAOTIC:
        years = float(t_h)  # exact, not a round trip through log
    else:
        years = math.exp(log_t) if log_t < 709.0 else math.inf
    return Lifetime(years, log10_t, label, n, extrapolated, outside)


def ionization_time(system: BinarySystem, dmp: DmpSpec, t_h: float = DEFAULT_T_H,
                    n_max_photon: int = N_MAX_PHOTON) -> Lifetime:
    """Piecewise DMP lifetime in years (see module docstring for the branches)."""
    if not t_h > 0:
        raise ValueError("t_H must be positive")
    return _lifetime(system, ionization_photons(system, dmp), kick_strength(system, dmp), t_h, n_max_photon)


def localized_lifetime(t_h: float, n_ionization: float, ell: float) -> Lifetime:
    """Tail-escape time t_H exp(2N_I/l - 2) / (2N_I/l - 1), flagged outside l >= 1, N_I >= l."""
    x = 2.0 * n_ionization / ell
    outside = ell < 1.0 or n_ionization < ell
    if x <= 1.0:
        # the formula has no meaning here; the caller sees the flag and a NaN
        return Lifetime(math.nan, math.nan, LOCALIZED, photons_needed(n_ionization), False, True)
    log_t = math.log(t_h) + (x - 2.0) - math.log(x - 1.0)
    return Lifetime(math.exp(log_t) if log_t < 709 else math.inf, log_t / math.log(10.0),
                    LOCALIZED, photons_needed(n_ionization), False, outside)


@dataclass(frozen=True)
class RegimeReport:
    mass_ratio: float
    n_ionization: float
    localization_length: float
    kick_strength: float
    regime: str
    photons: int
    one_photon_border: float
    delocalization_border: float
    t_ionization: float
    t_quantum: float
    exceeds_universe_age: bool
    extrapolated: bool
    outside_domain: bool


def regime_report(system: BinarySystem, dmp: DmpSpec, t_h: float = DEFAULT_T_H,
                  n_max_photon: int = N_MAX_PHOTON) -> RegimeReport:
    n_i = ionization_photons(system, dmp)
    k = kick_strength(system, dmp)
    ell = k * k / 2.0
    life = _lifetime(system, n_i, k, t_h, n_max_photon)
    regime, n, _ = classify(n_i, ell, n_max_photon)
    return RegimeReport(
        mass_ratio=dmp.mass_ratio,
        n_ionization=n_i,
        localization_length=ell,
        kick_strength=k,
        regime=regime_label(regime, n),
        photons=n,
        one_photon_border=one_photon_border(system, dmp.initial_w),
        delocalization_border=delocalization_border(system, dmp.initial_w),
        t_ionization=life.years,
        t_quantum=system.period * ell,
        exceeds_universe_age=life.log10_years > math.log10(system.constants.universe_age),
        extrapolated=life.extrapolated,
        outside_domain=life.outside_domain,
    )


@dataclass(frozen=True)
class AgeCrossing:
    mass_ratio: float
    rising: bool  # t_I - t_U changes from below to above with increasing mu
    continuous: bool  # False when the crossing is a jump between branches
    mechanism: str


@dataclass(frozen=True)
class AgeWindow:
    """Where the lifetime exceeds the universe age.

    ``mu_low``/``mu_high`` bound the highest-mu such interval that closes on a
    continuous crossing (the multiphoton/localized window); ``None`` when t_I
    never exceeds t_U in the scanned range.
    """

    mu_low: Optional[float]
    mu_high: Optional[float]
    crossings: tuple[AgeCrossing, ...]
    long_lived: tuple[tuple[float, float], ...]

    def continuous_crossings(self, mechanism: Optional[str] = None) -> list[float]:
        return [c.mass_ratio for c in self.crossings
                if c.continuous and (mechanism is None or c.mechanism == mechanism)]


def universe_age_window(system: BinarySystem, t_universe: Optional[float] = None,
                        t_h: float = DEFAULT_T_H, initial_w: float = -1.0,
                        mu_range: tuple[float, float] = (1e-26, 1e-12), n_scan: int = 2000,
                        rtol: float = 1e-6, max_iter: int = 200) -> AgeWindow:
    """Bracket every sign change of log t_I - log t_U on a log-mu scan, then bisect."""
    t_u = system.constants.universe_age if t_universe is None else t_universe
    log_tu = math.log10(t_u) if math.isfinite(t_u) else math.inf

    def g(log_mu: float) -> float:
        life = ionization_time(system, DmpSpec(10.0**log_mu, initial_w), t_h)
        return life.log10_years - log_tu

    grid = np.linspace(math.log10(mu_range[0]), math.log10(mu_range[1]), n_scan).tolist()
    values = [g(x) for x in grid]
    above = [v > 0 for v in values]
    crossings = []
    for i in range(n_scan - 1):
        if above[i] == above[i + 1]:
            continue
        lo, hi = grid[i], grid[i + 1]
        g_lo = values[i]
        for _ in range(max_iter):
            if hi - lo <= rtol / math.log(10.0):
                break
            mid = 0.5 * (lo + hi)
            g_mid = g(mid)
            if (g_mid > 0) == (g_lo > 0):
                lo, g_lo = mid, g_mid
            else:
                hi = mid
        mu = float(10.0 ** (0.5 * (lo + hi)))
        jump = abs(g(hi) - g(lo))
        life = ionization_time(system, DmpSpec(mu, initial_w), t_h)
        crossings.append(AgeCrossing(mu, not above[i], bool(jump < 1e-3), life.mechanism))

    intervals = []
    start = float(10.0 ** grid[0]) if above[0] else None
    for c in crossings:
        if c.rising:
            start = c.mass_ratio
        elif start is not None:
            intervals.append((start, c.mass_ratio))
            start = None
    if start is not None:
        intervals.append((start, float(10.0 ** grid[-1])))

    closed = [iv for iv in intervals
              if any(c.continuous and c.mass_ratio == iv[1] for c in crossings)]
    if closed:
        mu_low, mu_high = closed[-1]
    else:
        mu_low = mu_high = None
    return AgeWindow(mu_low, mu_high, tuple(crossings), tuple(intervals))


def log_grid(mu_min: float, mu_max: float, count: int) -> np.ndarray:
    if count < 2 or not 0 < mu_min < mu_max:
        raise ValueError("grid needs 0 < mu_min < mu_max and >= 2 points")
    return np.logspace(math.log10(mu_min), math.log10(mu_max), count)


def _check_grid(mu_grid: Sequence[float]) -> list[float]:
    mus = [float(m) for m in mu_grid]
    if any(b < a for a, b in zip(mus, mus[1:])):
        raise ValueError("mu grid must be sorted ascending")
    if any(m <= 0 for m in mus):
        raise ValueError("mass ratios must be positive")
    return mus


FIGURE1_COLUMNS = ("mu", "N_I", "ell_phi", "regime")
FIGURE2_COLUMNS = ("mu", "t_I_years", "mechanism")


def figure1_table(system: BinarySystem, mu_grid: Sequence[float], initial_w: float = -1.0) -> list[dict]:
    rows = []
    for mu in _check_grid(mu_grid):
        dmp = DmpSpec(mu, initial_w)
        n_i = ionization_photons(system, dmp)
        ell = localization_length(system, dmp)
        regime, n, _ = classify(n_i, ell)
        rows.append({"mu": mu, "N_I": n_i, "ell_phi": ell, "regime": regime_label(regime, n)})
    return rows


def figure2_table(system: BinarySystem, mu_grid: Sequence[float], t_h: float = DEFAULT_T_H,
                  initial_w: float = -1.0) -> list[dict]:
    rows = []
    for mu in _check_grid(mu_grid):
        life = ionization_time(system, DmpSpec(mu, initial_w), t_h)
        mech = life.mechanism + (" (extrapolated)" if life.extrapolated else "")
        rows.append({"mu": mu, "t_I_years": life.years, "mechanism": mech})
    return rows


def figure_borders(system: BinarySystem, initial_w: float = -1.0) -> dict[str, float]:
    """Regime boundaries drawn as vertical lines alongside the figure tables."""
    return {
        "one_photon_border": one_photon_border(system, initial_w),
        "delocalization_border": delocalization_border(system, initial_w),
        "unit_kick_border": unit_kick_border(system),
    }

