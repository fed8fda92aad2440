"""Quantum Kepler map on the photon lattice.

Site ``j`` of a length-``L`` array holds the amplitude of photon offset
``N_phi = n_low + j``; the total photon number is ``N = n0 + N_phi`` with
``n0 = -round(N_I)``. One map iteration (one DMP orbit) is::

    psi <- exp(-i k cos phi) exp(-i H0(N)) psi,   H0(N) = 2 pi (-2 omega N)^(-1/2)

The rotation is diagonal in N; the kick is diagonal in the conjugate phase and
is applied through an FFT on the L uniform angles 2 pi m / L. The kick factor
carries the ``i`` needed for unitarity (it generates N -> N + k sin phi).

Sites with ``N >= 0`` are the continuum: a buffer above the last bound state
that is emptied into ``absorbed`` after every kick, so the next rotation only
sees bound states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi
GUARD_WIDTH = 8
LEAK_LIMIT = 1e-8
W_FLOOR = 1e-14


class LatticeTooSmallError(RuntimeError):
    """Probability reached the bottom edge of the lattice."""


class ContinuumInRotationError(RuntimeError):
    """The rotation met amplitude on a continuum site (absorb must run first)."""


class EstimationError(ValueError):
    """Not enough dynamic range for a localization fit."""


@dataclass(frozen=True)
class LatticeConfig:
    """Lattice sizing.

    ``pad`` multiplies ``max(k^2, k, 10)`` for the room kept below ``n0``;
    ``size`` forces L (must be a power of two and large enough).
    """

    pad: int = 8
    size: Optional[int] = None
    top_buffer: Optional[int] = None
    bottom_mask: bool = False

    def __post_init__(self) -> None:
        if self.pad < 4:
            raise ValueError("lattice pad must be >= 4")


@dataclass
class PhotonWavefunction:
    amplitudes: np.ndarray
    n_low: int
    n0: int
    absorbed_probability: float = 0.0
    leaked_probability: float = 0.0
    time: int = 0

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def photon_offsets(self) -> np.ndarray:
        return self.n_low + np.arange(self.size)

    @property
    def total_photons(self) -> np.ndarray:
        return self.n0 + self.photon_offsets

    @property
    def bound(self) -> np.ndarray:
        return self.total_photons <= -1

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "PhotonWavefunction":
        return replace(self, amplitudes=self.amplitudes.copy())


def _next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def init_state(k: float, n_ionization: float, lattice: LatticeConfig = LatticeConfig()) -> PhotonWavefunction:
    """Delta state at N_phi = 0 on a lattice sized for kick ``k``."""
    if not n_ionization >= 1:
        raise ValueError("N_I must be >= 1")
    if k < 0:
        raise ValueError("k must be non-negative")
    n0 = -int(round(n_ionization))
    below = int(math.ceil(lattice.pad * max(k * k, k, 10.0)))
    buffer = lattice.top_buffer if lattice.top_buffer is not None else int(math.ceil(2 * k)) + 16
    span = -n0 + below + buffer
    size = _next_pow2(span) if lattice.size is None else lattice.size
    if size & (size - 1):
        raise ValueError(f"lattice size {size} is not a power of two")
    if size < span:
        raise ValueError(f"lattice size {size} below required span {span} (pad={lattice.pad}, k={k})")
    # continuum buffer occupies the top `buffer` sites; spare room goes to the bottom
    n_top = -n0 + buffer - 1
    n_low = n_top - size + 1
    amps = np.zeros(size, dtype=np.complex128)
    amps[-n_low] = 1.0
    return PhotonWavefunction(amps, n_low, n0)


class Propagator:
    """Precomputed phase tables for one (k, omega) on one lattice layout."""

    def __init__(self, psi: PhotonWavefunction, k: float, omega: float, bottom_mask: bool = False):
        if not omega > 0:
            raise ValueError("omega must be positive")
        self.k = float(k)
        self.omega = float(omega)
        n = psi.total_photons.astype(np.float64)
        self.bound = n <= -1
        h0 = np.zeros(psi.size)
        h0[self.bound] = np.mod(TWO_PI * (-2.0 * self.omega * n[self.bound]) ** -0.5, TWO_PI)
        self.rotation = np.exp(-1j * h0)
        self.rotation[~self.bound] = 1.0
        angles = TWO_PI * np.arange(psi.size) / psi.size
        self.kick = np.exp(-1j * self.k * np.cos(angles))
        self.continuum = ~self.bound
        self.bottom_mask = None
        if bottom_mask:
            x = (np.arange(GUARD_WIDTH) + 0.5) / GUARD_WIDTH
            self.bottom_mask = np.sin(0.5 * math.pi * x) ** 2

    def check_layout(self, psi: PhotonWavefunction) -> None:
        if psi.size != self.rotation.size:
            raise ValueError("wavefunction lattice does not match propagator")

    def evolve(self, psi: PhotonWavefunction) -> None:
        """One orbit in place: rotation, then kick."""
        a = psi.amplitudes
        if np.any(a[self.continuum] != 0):
            raise ContinuumInRotationError("amplitude on N >= 0 sites; absorb before rotating")
        a *= self.rotation
        a[:] = np.fft.fft(self.kick * np.fft.ifft(a))
        psi.time += 1

    def absorb(self, psi: PhotonWavefunction) -> float:
        """Empty the continuum (and the bottom mask, if any); return the ionized probability."""
        a = psi.amplitudes
        top = a[self.continuum]
        dp = float(np.vdot(top, top).real)
        a[self.continuum] = 0.0
        psi.absorbed_probability += dp
        guard = a[:GUARD_WIDTH]
        if self.bottom_mask is not None:
            before = float(np.vdot(guard, guard).real)
            guard *= self.bottom_mask
            psi.leaked_probability += before - float(np.vdot(guard, guard).real)
            leak = psi.leaked_probability
        else:
            leak = float(np.vdot(guard, guard).real)
        if leak > LEAK_LIMIT:
            raise LatticeTooSmallError(
                f"bottom leakage {leak:.3g} > {LEAK_LIMIT:g} at t={psi.time}; increase lattice pad"
            )
        return dp


def evolve_period(psi: PhotonWavefunction, k: float, omega: float) -> PhotonWavefunction:
    out = psi.copy()
    Propagator(out, k, omega).evolve(out)
    return out


def absorb(psi: PhotonWavefunction) -> tuple[PhotonWavefunction, float]:
    out = psi.copy()
    cont = out.total_photons >= 0
    top = out.amplitudes[cont]
    dp = float(np.vdot(top, top).real)
    out.amplitudes[cont] = 0.0
    out.absorbed_probability += dp
    return out, dp


def chaotic_frequency(k: float, n_ionization: float, chaos_parameter: float = 100.0) -> float:
    """omega giving local chaos parameter K = k |d^2 H0/dN^2| at N = -N_I.

    The physical value omega = (2 N_I)^-3 puts w = -1 outside the chaotic layer
    for desk-scale N_I; a smaller omega moves the start deep inside it. At
    K ~ 100 phase correlations no longer bias the diffusion rate.
    """
    return (6.0 * math.pi * k / (chaos_parameter * (2.0 * n_ionization) ** 2.5)) ** 2


def theoretical_distribution(ell, n_phi):
    """Steady-state W(N_phi) = (1 + 2|N|/l) exp(-2|N|/l) / (2 l)."""
    if not np.all(np.asarray(ell) > 0):
        raise ValueError("localization length must be positive")
    x = 2.0 * np.abs(n_phi) / ell
    return (1.0 + x) * np.exp(-x) / (2.0 * ell)


def fit_localization_length(
    n_phi: np.ndarray,
    w: np.ndarray,
    fit_range: tuple[float, float],
    model: str = "exponential",
    min_sites: int = 20,
    floor: float = W_FLOOR,
) -> float:
    """l from the least-squares slope s of ln W against |N_phi|: l = -2/s.

    Both sides of the distribution inside ``fit_range`` (bounds on |N_phi|)
    enter the same fit. A non-negative slope returns ``inf``.

    ``model="steady-state"`` first divides out the (1 + 2|N|/l) prefactor of
    the steady-state profile, iterating l to a fixed point; without it the
    prefactor inflates l by ~15% on a [2l, 5l] window.
    """
    if model not in ("exponential", "steady-state"):
        raise ValueError(f"unknown fit model {model!r}")
    n_phi = np.asarray(n_phi, dtype=float)
    w = np.asarray(w, dtype=float)
    lo, hi = fit_range
    a = np.abs(n_phi)
    sel = (a >= lo) & (a <= hi) & (w > floor)
    if np.count_nonzero(sel) < min_sites:
        raise EstimationError(
            f"only {np.count_nonzero(sel)} sites above {floor:g} in |N_phi| in [{lo}, {hi}]; need {min_sites}"
        )
    x, y = a[sel], np.log(w[sel])
    slope = np.polyfit(x, y, 1)[0]
    if slope >= 0:
        return math.inf
    ell = -2.0 / slope
    if model == "steady-state":
        for _ in range(200):
            slope = np.polyfit(x, y - np.log1p(2.0 * x / ell), 1)[0]
            if slope >= 0:
                return math.inf
            new = -2.0 / slope
            if abs(new - ell) <= 1e-12 * ell:
                ell = new
                break
            ell = new
    return float(ell)


@dataclass
class QuantumRunResult:
    k: float
    omega: float
    n_ionization: float
    window: tuple[int, int]
    ionization_curve: list[tuple[int, float]]
    photon_offsets: np.ndarray
    mean_distribution: np.ndarray
    fitted_length: float
    theoretical_length: float
    fit_range: tuple[float, float]
    before_quantum_time: bool = False
    final_state: Optional[PhotonWavefunction] = field(default=None, repr=False)


class QuantumRun:
    """Resumable absorb/evolve loop with time averaging over ``window`` (inclusive)."""

    def __init__(self, k: float, omega: float, n_ionization: float, window: tuple[int, int],
                 lattice: LatticeConfig = LatticeConfig()):
        self.k, self.omega, self.n_ionization = float(k), float(omega), float(n_ionization)
        self.window = (int(window[0]), int(window[1]))
        self.lattice = lattice
        self.psi = init_state(k, n_ionization, lattice)
        self.prop = Propagator(self.psi, k, omega, lattice.bottom_mask)
        self.w_sum = np.zeros(self.psi.size)
        self.w_count = 0
        self.curve: list[tuple[int, float]] = [(0, 0.0)]

    @classmethod
    def restore(cls, k: float, omega: float, n_ionization: float, window: tuple[int, int],
                lattice: LatticeConfig, psi: PhotonWavefunction, w_sum: np.ndarray,
                w_count: int, curve: list[tuple[int, float]]) -> "QuantumRun":
        """Rebuild a run from saved state; the phase tables depend only on the layout."""
        run = cls.__new__(cls)
        run.k, run.omega, run.n_ionization = float(k), float(omega), float(n_ionization)
        run.window = (int(window[0]), int(window[1]))
        run.lattice = lattice
        run.psi = psi
        run.prop = Propagator(psi, k, omega, lattice.bottom_mask)
        if w_sum.shape != psi.amplitudes.shape:
            raise ValueError("accumulator does not match the lattice")
        run.w_sum = w_sum
        run.w_count = int(w_count)
        run.curve = [(int(t), float(p)) for t, p in curve]
        return run

    def advance(self, n_periods: int) -> None:
        psi, prop = self.psi, self.prop
        lo, hi = self.window
        for _ in range(n_periods):
            prop.evolve(psi)
            prop.absorb(psi)
            self.curve.append((psi.time, psi.absorbed_probability))
            if lo <= psi.time <= hi:
                a = psi.amplitudes
                self.w_sum += a.real**2 + a.imag**2
                self.w_count += 1

    def result(self, fit_range: Optional[tuple[float, float]] = None) -> QuantumRunResult:
        ell = self.k**2 / 2.0
        n_phi = self.psi.photon_offsets
        bound = self.psi.bound
        w_bar = self.w_sum / max(self.w_count, 1)
        if fit_range is None:
            fit_range = (max(2.0, ell), min(4.0 * ell + 10.0, 0.8 * self.n_ionization))
        try:
            fitted = fit_localization_length(n_phi[bound], w_bar[bound], fit_range, model="steady-state")
        except EstimationError:
            fitted = math.nan
        return QuantumRunResult(
            k=self.k,
            omega=self.omega,
            n_ionization=self.n_ionization,
            window=self.window,
            ionization_curve=list(self.curve),
            photon_offsets=n_phi[bound],
            mean_distribution=w_bar[bound],
            fitted_length=fitted,
            theoretical_length=ell,
            fit_range=fit_range,
            before_quantum_time=self.window[0] < math.ceil(ell),
            final_state=self.psi,
        )


def default_window(k: float) -> tuple[int, int]:
    t_q = max(1, math.ceil(k * k / 2.0))
    return t_q, 3 * t_q


def run(k: float, omega: float, n_ionization: float, n_periods: Optional[int] = None,
        window: Optional[tuple[int, int]] = None, lattice: LatticeConfig = LatticeConfig(),
        fit_range: Optional[tuple[float, float]] = None, realizations: int = 1,
        detuning: float = 1e-3) -> QuantumRunResult:
    """Evolve from the delta state and average |psi|^2 over ``window``.

    With ``realizations > 1`` the profile and ionization curve are averaged over
    runs at omega * (1 + r * detuning); a 1e-3 shift rescrambles the rotation
    phases mod 2 pi while leaving the local chaos parameter unchanged.
    """
    window = default_window(k) if window is None else window
    n_periods = window[1] if n_periods is None else n_periods
    if n_periods < window[1]:
        raise ValueError("n_periods must reach the end of the averaging window")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    runs = []
    for r in range(realizations):
        qr = QuantumRun(k, omega * (1.0 + r * detuning), n_ionization, window, lattice)
        qr.advance(n_periods)
        runs.append(qr)
    if realizations == 1:
        return runs[0].result(fit_range)
    head = runs[0]
    for qr in runs[1:]:
        head.w_sum += qr.w_sum
        head.w_count += qr.w_count
    curves = np.mean([[p for _, p in qr.curve] for qr in runs], axis=0)
    head.curve = [(t, float(p)) for (t, _), p in zip(head.curve, curves)]
    out = head.result(fit_range)
    out.omega = omega
    out.final_state = runs[-1].psi
    return out
