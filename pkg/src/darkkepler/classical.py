"""Classical generalized Kepler map in dimensionless energy w = 2E/(m_d v_p^2).

One iteration is one perihelion passage::

    w_new   = w + sum_j a_j sin(j phi + theta_j)
    phi_new = phi + 2 pi |w_new|^(-3/2)          (mod 2 pi)

The kick is applied first and the phase advances with the *new* energy, so
the map is exactly area preserving. A trajectory escapes when ``w_new >= 0``
(tested before the phase advance, which is undefined there) and is frozen as
sunk when ``|w_new| < w_min``: its next orbit would outlast any run.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .binary import BinarySystem, DmpSpec, epsilon

TWO_PI = 2.0 * math.pi
DEFAULT_W_MIN = 1e-4
DEFAULT_CHUNK = 256

ALIVE, ESCAPED, SUNK = "alive", "escaped", "sunk"
_STATUS = {_kernels.ALIVE: ALIVE, _kernels.ESCAPED: ESCAPED, _kernels.SUNK: SUNK}

Harmonics = Sequence[tuple]


class EstimationError(ValueError):
    """Too little data for a fit."""


@dataclass(frozen=True)
class ClassicalState:
    w: float
    phi: float
    kicks: int = 0
    elapsed_periods: float = 0.0
    status: str = ALIVE

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", self.phi % TWO_PI)


def _harmonic_arrays(harmonics: Harmonics):
    if len(harmonics) == 0:
        raise ValueError("kick needs at least one harmonic")
    rows = [tuple(h) + (0.0,) * (3 - len(h)) for h in harmonics]
    index = np.array([r[0] for r in rows], dtype=np.float64)
    amp = np.array([r[1] for r in rows], dtype=np.float64)
    phase = np.array([r[2] for r in rows], dtype=np.float64)
    return index, amp, phase


def sin_kick(eps: float) -> list[tuple[int, float, float]]:
    return [(1, eps, 0.0)]


def kick(phi, harmonics: Harmonics):
    """Energy change sum_j a_j sin(j phi + theta_j); harmonics are (j, a_j[, theta_j])."""
    index, amp, phase = _harmonic_arrays(harmonics)
    out = _kernels.kick_numpy(np.asarray(phi), index, amp, phase)
    return float(out) if np.ndim(out) == 0 else out


def kepler_map(w, phi, harmonics: Harmonics, wrap: bool = True):
    """Vectorized map (no escape handling). Accepts complex input for derivative checks."""
    w_new = w + kick(phi, harmonics)
    phi_new = phi + TWO_PI * (-w_new) ** -1.5
    if wrap:
        phi_new = np.mod(phi_new, TWO_PI)
    return w_new, phi_new


def inverse_map(w_new, phi_new, harmonics: Harmonics):
    phi = np.mod(phi_new - TWO_PI * (-w_new) ** -1.5, TWO_PI)
    return w_new - kick(phi, harmonics), phi


def step(state: ClassicalState, harmonics: Harmonics, w_min: float = DEFAULT_W_MIN) -> ClassicalState:
    if state.status != ALIVE:
        return state
    w_new = state.w + kick(state.phi, harmonics)
    if w_new >= 0.0:
        return ClassicalState(w_new, state.phi, state.kicks + 1, state.elapsed_periods, ESCAPED)
    if -w_new < w_min:
        return ClassicalState(w_new, state.phi, state.kicks + 1, state.elapsed_periods, SUNK)
    period = (-w_new) ** -1.5
    return ClassicalState(
        w_new, state.phi + TWO_PI * period, state.kicks + 1, state.elapsed_periods + period
    )


def initial_phases(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform phases in [0, 2 pi) for trajectories ``start .. start+count-1``.

    Trajectory ``i`` draws from a Philox stream keyed by ``seed`` whose counter
    starts at ``i << 192``, so each value depends only on (seed, i).
    """
    out = np.empty(count)
    for n in range(count):
        bg = np.random.Philox(key=seed & (2**64 - 1), counter=(start + n) << 192)
        out[n] = np.random.Generator(bg).random() * TWO_PI
    return out


@dataclass
class EnsembleResult:
    """Outcome of :func:`run_ensemble`.

    ``escape_kicks``/``escape_periods`` hold the kick count and summed orbital
    periods (planet-period units) at the escaping kick; entries for trajectories
    that did not escape are the totals reached when the run stopped.
    """

    seed: int
    n_trajectories: int
    w0: float
    status: np.ndarray
    escape_kicks: np.ndarray
    escape_periods: np.ndarray
    final_w: np.ndarray
    final_phi: np.ndarray
    diffusion_kicks: np.ndarray
    diffusion_mean_dw2: np.ndarray
    diffusion_survivors: np.ndarray
    backend: str = field(default=_kernels.BACKEND, compare=False)

    @property
    def escaped(self) -> np.ndarray:
        return self.status == _kernels.ESCAPED

    @property
    def n_sunk(self) -> int:
        return int(np.sum(self.status == _kernels.SUNK))

    def survival_curve(self) -> list[tuple[int, float, float]]:
        """(kicks, periods, surviving_fraction) at each escape, ordered by elapsed periods.

        Sunk and unfinished trajectories count as surviving.
        """
        idx = np.flatnonzero(self.escaped)
        order = idx[np.lexsort((idx, self.escape_periods[idx]))]
        n = self.n_trajectories
        return [
            (int(self.escape_kicks[i]), float(self.escape_periods[i]), (n - r - 1) / n)
            for r, i in enumerate(order)
        ]

    def diffusion_series(self) -> list[tuple[int, float]]:
        return [
            (int(k), float(v))
            for k, v, s in zip(self.diffusion_kicks, self.diffusion_mean_dw2, self.diffusion_survivors)
            if s > 0
        ]

    def median_escape_periods(self) -> float:
        """Median escape time in planet periods; inf if half the ensemble never escaped."""
        times = np.where(self.escaped, self.escape_periods, np.inf)
        return float(np.median(times))


def _chunks(n: int, size: int):
    return [(s, min(size, n - s)) for s in range(0, n, size)]


class EnsembleRun:
    """Chunked ensemble that can stop and resume between chunks.

    Chunk ``c`` always covers the same trajectories and draws the same phases,
    so a run resumed from a saved ``parts`` list reduces to the same bits as an
    uninterrupted one.
    """

    def __init__(self, harmonics: Harmonics, w0: float, n_traj: int, max_kicks: int,
                 seed: int = 0, *, record_kicks: Optional[int] = None,
                 w_min: float = DEFAULT_W_MIN, chunk_size: int = DEFAULT_CHUNK):
        if n_traj < 1 or max_kicks < 1:
            raise ValueError("n_traj and max_kicks must be >= 1")
        if w0 >= 0:
            raise ValueError("w0 must be negative")
        if chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        self.harmonics = [tuple(float(x) for x in h) for h in harmonics]
        self.arrays = _harmonic_arrays(self.harmonics)
        self.w0 = float(w0)
        self.n_traj = int(n_traj)
        self.max_kicks = int(max_kicks)
        self.seed = int(seed)
        self.record_kicks = min(max_kicks, 1000) if record_kicks is None else min(record_kicks, max_kicks)
        self.w_min = float(w_min)
        self.chunk_size = int(chunk_size)
        self.chunks = _chunks(self.n_traj, self.chunk_size)
        self.parts: list[tuple] = []

    @property
    def done(self) -> bool:
        return len(self.parts) == len(self.chunks)

    def config(self) -> dict:
        return {
            "harmonics": [list(h) for h in self.harmonics],
            "w0": self.w0,
            "n_traj": self.n_traj,
            "max_kicks": self.max_kicks,
            "seed": self.seed,
            "record_kicks": self.record_kicks,
            "w_min": self.w_min,
            "chunk_size": self.chunk_size,
        }

    def _work(self, chunk):
        start, count = chunk
        index, amp, phase = self.arrays
        phi0 = initial_phases(self.seed, start, count)
        return _kernels.ensemble_chunk(
            self.w0, phi0, index, amp, phase, self.max_kicks, self.record_kicks, self.w_min
        )

    def advance(self, n_chunks: Optional[int] = None, threads: int = 1) -> None:
        todo = self.chunks[len(self.parts):]
        if n_chunks is not None:
            todo = todo[:n_chunks]
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                self.parts.extend(pool.map(self._work, todo))
        else:
            self.parts.extend(self._work(c) for c in todo)

    def result(self) -> EnsembleResult:
        if not self.done:
            raise RuntimeError(f"{len(self.parts)} of {len(self.chunks)} chunks finished")
        record = self.record_kicks
        sum_dw2 = np.zeros(record + 1)
        survivors = np.zeros(record + 1, dtype=np.int64)
        for p in self.parts:
            sum_dw2 += p[5]
            survivors += p[6]
        mean_dw2 = np.where(survivors > 0, sum_dw2 / np.maximum(survivors, 1), 0.0)
        parts = self.parts
        return EnsembleResult(
            seed=self.seed,
            n_trajectories=self.n_traj,
            w0=self.w0,
            status=np.concatenate([p[0] for p in parts]),
            escape_kicks=np.concatenate([p[1] for p in parts]),
            escape_periods=np.concatenate([p[2] for p in parts]),
            final_w=np.concatenate([p[3] for p in parts]),
            final_phi=np.concatenate([p[4] for p in parts]),
            diffusion_kicks=np.arange(record + 1),
            diffusion_mean_dw2=mean_dw2,
            diffusion_survivors=survivors,
        )


def run_ensemble(
    harmonics: Harmonics,
    w0: float,
    n_traj: int,
    max_kicks: int,
    seed: int = 0,
    *,
    record_kicks: Optional[int] = None,
    w_min: float = DEFAULT_W_MIN,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EnsembleResult:
    """Iterate ``n_traj`` trajectories from ``w0`` with uniformly random phases.

    Trajectories are split into fixed chunks and reduced in chunk order, so the
    result is bit-identical for any ``threads``.
    """
    job = EnsembleRun(harmonics, w0, n_traj, max_kicks, seed, record_kicks=record_kicks,
                      w_min=w_min, chunk_size=chunk_size)
    job.advance(threads=threads)
    return job.result()


def run_system_ensemble(system: BinarySystem, dmp: DmpSpec, n_traj: int, max_kicks: int,
                        seed: int = 0, **kw) -> EnsembleResult:
    return run_ensemble(system.kick_terms(), dmp.initial_w, n_traj, max_kicks, seed, **kw)


def measure_diffusion(result: EnsembleResult, window: tuple[int, int]) -> float:
    """Least-squares slope of <(w - w0)^2> against kick count over ``window``."""
    lo, hi = window
    k = result.diffusion_kicks
    sel = (k >= lo) & (k <= hi) & (result.diffusion_survivors > 0)
    if np.count_nonzero(sel) < 10:
        raise EstimationError(f"need >= 10 recorded points in window {window}")
    slope = np.polyfit(k[sel].astype(float), result.diffusion_mean_dw2[sel], 1)[0]
    return float(slope)


def poincare_section(
    harmonics: Harmonics,
    initial: Sequence[tuple[float, float]],
    n_points: int,
    w_min: float = DEFAULT_W_MIN,
) -> list[tuple[int, float, float]]:
    """(traj_id, w, phi) visited from each initial (w, phi); escaped/sunk orbits stop early."""
    if len(initial) == 0:
        raise ValueError("empty grid of initial conditions")
    index, amp, phase = _harmonic_arrays(harmonics)
    points = []
    for tid, (w, phi) in enumerate(initial):
        ws, ps = _kernels.orbit(float(w), float(phi) % TWO_PI, index, amp, phase, int(n_points), float(w_min))
        points.extend((tid, float(a), float(b)) for a, b in zip(ws, ps))
    return points


def diffusive_time(system: BinarySystem, dmp: Optional[DmpSpec] = None) -> float:
    """Random-phase diffusive escape time in years.

    t_D = T_p / D with D = eps^2/2 per orbit in w units: the time to diffuse
    across the binding energy m_d v_p^2 / 2. The particle mass cancels, so
    ``dmp`` does not change the value. Escape from shallower starts is still
    dominated by the long orbits near w = 0 and stays of this order.
    """
    del dmp
    d_w = epsilon(system) ** 2 / 2.0
    if d_w == 0:
        return math.inf
    return system.period / d_w
