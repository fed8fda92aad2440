"""Inner loops of the classical Kepler map.

Two interchangeable backends with identical signatures:

* ``numba``  -- per-trajectory scalar loops compiled with ``@njit(nogil=True)``
* ``numpy``  -- the same recurrences vectorized across trajectories

The numba backend is used when numba imports and ``DARKKEPLER_DISABLE_NUMBA``
is unset (or ``0``). The two agree to rounding; results are bit-reproducible
within one backend.
"""
from __future__ import annotations

import math
import os

import numpy as np

ALIVE, ESCAPED, SUNK = 0, 1, 2
TWO_PI = 2.0 * math.pi


def _numba_requested() -> bool:
    return os.environ.get("DARKKEPLER_DISABLE_NUMBA", "").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by DARKKEPLER_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --- numpy backend ---------------------------------------------------------


def kick_numpy(phi, h_index, h_amp, h_phase):
    out = np.zeros(np.shape(phi), dtype=np.result_type(phi, np.float64))
    for j in range(len(h_index)):
        out = out + h_amp[j] * np.sin(h_index[j] * phi + h_phase[j])
    return out


def ensemble_chunk_numpy(w0, phi0, h_index, h_amp, h_phase, max_kicks, record_kicks, w_min):
    n = phi0.shape[0]
    w = np.full(n, w0)
    phi = phi0.astype(np.float64).copy()
    status = np.zeros(n, dtype=np.int8)
    kicks = np.zeros(n, dtype=np.int64)
    elapsed = np.zeros(n)
    sum_dw2 = np.zeros(record_kicks + 1)
    n_alive = np.zeros(record_kicks + 1, dtype=np.int64)
    n_alive[0] = n
    active = np.arange(n)
    for step in range(1, max_kicks + 1):
        if active.size == 0:
            break
        wa = w[active] + kick_numpy(phi[active], h_index, h_amp, h_phase)
        kicks[active] = step
        escaped = wa >= 0.0
        sunk = ~escaped & (-wa < w_min)
        w[active] = wa
        status[active[escaped]] = ESCAPED
        status[active[sunk]] = SUNK
        keep = ~(escaped | sunk)
        active = active[keep]
        wa = wa[keep]
        x = -wa
        period = 1.0 / (x * np.sqrt(x))  # x**-1.5, several times cheaper than pow
        phi[active] = np.mod(phi[active] + TWO_PI * period, TWO_PI)
        elapsed[active] += period
        if step <= record_kicks:
            dw = wa - w0
            # sequential sum keeps the reduction order identical to the numba path
            acc = 0.0
            for x in (dw * dw).tolist():
                acc += x
            sum_dw2[step] = acc
            n_alive[step] = active.size
    return status, kicks, elapsed, w, phi, sum_dw2, n_alive


def orbit_numpy(w, phi, h_index, h_amp, h_phase, n_points, w_min):
    ws = np.empty(n_points + 1)
    ps = np.empty(n_points + 1)
    ws[0], ps[0] = w, phi
    count = 1
    for _ in range(n_points):
        w = w + float(kick_numpy(np.array([phi]), h_index, h_amp, h_phase)[0])
        if w >= 0.0 or -w < w_min:
            break
        phi = (phi + TWO_PI / (-w * math.sqrt(-w))) % TWO_PI
        ws[count], ps[count] = w, phi
        count += 1
    return ws[:count], ps[:count]


# --- numba backend ---------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _kick_scalar(phi, h_index, h_amp, h_phase):
        acc = 0.0
        for j in range(h_index.shape[0]):
            acc += h_amp[j] * math.sin(h_index[j] * phi + h_phase[j])
        return acc

    @njit(cache=True, nogil=True)
    def ensemble_chunk_numba(w0, phi0, h_index, h_amp, h_phase, max_kicks, record_kicks, w_min):
        n = phi0.shape[0]
        w_out = np.empty(n)
        phi_out = np.empty(n)
        status = np.zeros(n, dtype=np.int8)
        kicks = np.zeros(n, dtype=np.int64)
        elapsed = np.zeros(n)
        dw2 = np.zeros((n, record_kicks + 1))
        alive = np.zeros((n, record_kicks + 1), dtype=np.bool_)
        for i in range(n):
            w = w0
            phi = phi0[i]
            t = 0.0
            alive[i, 0] = True
            st = ALIVE
            step = 0
            while step < max_kicks:
                step += 1
                w = w + _kick_scalar(phi, h_index, h_amp, h_phase)
                if w >= 0.0:
                    st = ESCAPED
                    break
                if -w < w_min:
                    st = SUNK
                    break
                period = 1.0 / (-w * math.sqrt(-w))
                phi = (phi + TWO_PI * period) % TWO_PI
                t += period
                if step <= record_kicks:
                    d = w - w0
                    dw2[i, step] = d * d
                    alive[i, step] = True
            status[i] = st
            kicks[i] = step
            elapsed[i] = t
            w_out[i] = w
            phi_out[i] = phi
        # reduce over trajectories in index order, same as the numpy path
        sum_dw2 = np.zeros(record_kicks + 1)
        n_alive = np.zeros(record_kicks + 1, dtype=np.int64)
        for s in range(record_kicks + 1):
            acc = 0.0
            cnt = 0
            for i in range(n):
                if alive[i, s]:
                    acc += dw2[i, s]
                    cnt += 1
            sum_dw2[s] = acc
            n_alive[s] = cnt
        return status, kicks, elapsed, w_out, phi_out, sum_dw2, n_alive

    @njit(cache=True, nogil=True)
    def orbit_numba(w, phi, h_index, h_amp, h_phase, n_points, w_min):
        ws = np.empty(n_points + 1)
        ps = np.empty(n_points + 1)
        ws[0] = w
        ps[0] = phi
        count = 1
        for _ in range(n_points):
            w = w + _kick_scalar(phi, h_index, h_amp, h_phase)
            if w >= 0.0 or -w < w_min:
                break
            phi = (phi + TWO_PI / (-w * math.sqrt(-w))) % TWO_PI
            ws[count] = w
            ps[count] = phi
            count += 1
        return ws[:count], ps[:count]

    ensemble_chunk = ensemble_chunk_numba
    orbit = orbit_numba
else:
    ensemble_chunk = ensemble_chunk_numpy
    orbit = orbit_numpy
