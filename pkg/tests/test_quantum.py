import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from darkkepler.quantum import (
    ContinuumInRotationError,
    EstimationError,
    LatticeConfig,
    LatticeTooSmallError,
    Propagator,
    QuantumRun,
    absorb,
    chaotic_frequency,
    default_window,
    evolve_period,
    fit_localization_length,
    init_state,
    run,
    theoretical_distribution,
)


def test_init_state_sizing():
    psi = init_state(5, 200, LatticeConfig(pad=4))
    assert psi.n0 == -200
    assert psi.n_low <= -4 * 25
    assert psi.size & (psi.size - 1) == 0
    assert psi.norm2() == 1.0 and psi.absorbed_probability == 0.0
    assert psi.amplitudes[-psi.n_low] == 1.0
    assert psi.total_photons[psi.bound].max() == -1
    with pytest.raises(ValueError):
        init_state(5, 0)
    with pytest.raises(ValueError):
        init_state(5, 200, LatticeConfig(size=256))
    with pytest.raises(ValueError):
        LatticeConfig(pad=3)


def test_zero_kick_keeps_populations():
    psi = init_state(3, 50)
    rng = np.random.default_rng(0)
    a = np.zeros(psi.size, complex)
    a[psi.bound] = rng.normal(size=psi.bound.sum()) + 1j * rng.normal(size=psi.bound.sum())
    psi.amplitudes = a / np.linalg.norm(a)
    out = evolve_period(psi, 0.0, 1e-6)
    np.testing.assert_allclose(np.abs(out.amplitudes) ** 2, np.abs(psi.amplitudes) ** 2, atol=1e-15)
    assert out.time == 1 and psi.time == 0


def test_one_step_bessel_law():
    k = 5.0
    psi = init_state(k, 200)
    out = evolve_period(psi, k, chaotic_frequency(k, 200))
    p = np.abs(out.amplitudes) ** 2
    expected = special.jv(out.photon_offsets, k) ** 2
    assert np.max(np.abs(p - expected)) < 1e-10
    assert abs(out.norm2() - 1.0) < 1e-12


def _dense_kick(size, k, p_max=200):
    """Site-basis kick matrix from the Bessel expansion of exp(-i k cos phi), aliased mod L."""
    coeff = np.zeros(size, complex)
    for p in range(-p_max, p_max + 1):
        coeff[p % size] += (-1j) ** (p % 4) * special.jv(p, k)
    m = np.arange(size)
    return coeff[(m[:, None] - m[None, :]) % size]


def test_dense_matrix_oracle():
    k, n_i = 1.5, 20
    psi = init_state(k, n_i, LatticeConfig(pad=4, top_buffer=4, size=64))
    assert psi.size == 64
    omega = chaotic_frequency(k, n_i, 10.0)
    prop = Propagator(psi, k, omega)
    n = psi.total_photons.astype(float)
    bound = n <= -1
    h0 = np.zeros(64)
    h0[bound] = 2 * math.pi / np.sqrt(-2 * omega * n[bound])
    unitary = _dense_kick(64, k) @ np.diag(np.where(bound, np.exp(-1j * h0), 1.0))
    assert np.max(np.abs(unitary.conj().T @ unitary - np.eye(64))) < 1e-12
    ref = psi.amplitudes.copy()
    for _ in range(100):
        prop.evolve(psi)
        psi, _ = absorb(psi)
        ref = unitary @ ref
        ref[~bound] = 0.0
    assert np.max(np.abs(psi.amplitudes - ref)) < 1e-10


def test_rotation_refuses_continuum_amplitude():
    psi = init_state(2, 10)
    psi.amplitudes[-1] = 1e-3
    with pytest.raises(ContinuumInRotationError):
        Propagator(psi, 2, 1e-3).evolve(psi)


def test_absorb_examples():
    psi = init_state(2, 10)
    out, dp = absorb(psi)
    assert dp == 0.0 and out.norm2() == 1.0
    psi.amplitudes[:] = 0
    psi.amplitudes[~psi.bound] = 0.5
    before = psi.norm2()
    out, dp = absorb(psi)
    assert dp == pytest.approx(before) and out.norm2() == 0.0
    assert out.absorbed_probability == pytest.approx(before)


def test_norm_plus_absorbed_conserved_long_run():
    # small lattice, strong absorption, 10^6 map periods
    k, n_i = 2.0, 3
    lattice = LatticeConfig(pad=4)
    qr = QuantumRun(k, chaotic_frequency(k, n_i), n_i, (1, 1), lattice)
    assert qr.psi.size == 64
    for _ in range(100):
        qr.advance(10_000)
        total = qr.psi.norm2() + qr.psi.absorbed_probability
        assert abs(total - 1.0) < 1e-9
    assert qr.psi.time == 1_000_000
    assert qr.psi.absorbed_probability > 0.5


def test_per_step_unitarity():
    k, n_i = 4.0, 100
    psi = init_state(k, n_i)
    prop = Propagator(psi, k, chaotic_frequency(k, n_i))
    for _ in range(50):
        before = psi.norm2()
        prop.evolve(psi)
        assert abs(psi.norm2() - before) < 1e-12
        prop.absorb(psi)


def test_bottom_guard_detects_small_lattice():
    k, n_i = 3.0, 50
    qr = QuantumRun(k, chaotic_frequency(k, n_i), n_i, (1, 2), LatticeConfig(pad=4))
    # move the state next to the bottom edge: one kick spreads it over ~k sites into the guard band
    qr.psi.amplitudes[:] = 0.0
    qr.psi.amplitudes[12] = 1.0
    with pytest.raises(LatticeTooSmallError):
        qr.advance(1)


def test_bottom_mask_tracks_leakage():
    k, n_i = 3.0, 50
    lattice = LatticeConfig(pad=8, bottom_mask=True)
    qr = QuantumRun(k, chaotic_frequency(k, n_i), n_i, (1, 2), lattice)
    qr.advance(200)
    psi = qr.psi
    assert 0.0 <= psi.leaked_probability < 1e-8
    assert psi.norm2() + psi.absorbed_probability + psi.leaked_probability == pytest.approx(1.0, abs=1e-12)


def test_theoretical_distribution():
    assert theoretical_distribution(7.0, 0) == pytest.approx(1 / 14)
    assert theoretical_distribution(7.0, 7) == pytest.approx(3 * math.exp(-2) / 14)
    for ell in (5.0, 12.5, 40.0):
        n = np.arange(-50 * int(ell), 50 * int(ell) + 1)
        assert theoretical_distribution(ell, n).sum() == pytest.approx(1.0, rel=0.01)
    with pytest.raises(ValueError):
        theoretical_distribution(0.0, 1)


def test_fit_synthetic_exponential():
    n = np.arange(-200, 201)
    w = np.exp(-2 * np.abs(n) / 7.0)
    w /= w.sum()
    assert fit_localization_length(n, w, (1, 40)) == pytest.approx(7.0, rel=0.02)


def test_fit_synthetic_steady_state_profile():
    n = np.arange(-400, 401)
    w = theoretical_distribution(20.0, n)
    assert fit_localization_length(n, w, (40, 100), model="steady-state") == pytest.approx(20.0, rel=0.1)
    # the plain exponential model is biased by the (1 + 2|N|/l) prefactor but still within 20%
    assert fit_localization_length(n, w, (40, 100)) == pytest.approx(20.0, rel=0.2)


@settings(max_examples=30, deadline=None)
@given(st.floats(2.0, 60.0))
def test_fit_recovers_length(ell):
    n = np.arange(-20 * int(ell) - 40, 20 * int(ell) + 41)
    w = theoretical_distribution(ell, n)
    fitted = fit_localization_length(n, w, (2 * ell, 5 * ell), model="steady-state", min_sites=5)
    assert fitted == pytest.approx(ell, rel=0.1)


def test_fit_flat_and_insufficient():
    n = np.arange(-100, 101)
    assert fit_localization_length(n, np.full(n.size, 1 / n.size), (1, 50)) == math.inf
    with pytest.raises(EstimationError):
        fit_localization_length(n, np.exp(-np.abs(n) * 10.0), (1, 50))
    with pytest.raises(ValueError):
        fit_localization_length(n, np.ones(n.size), (1, 50), model="gaussian")


def test_run_zero_kick():
    res = run(0.0, 1e-6, 30, n_periods=20, window=(5, 20))
    # only FFT round-off reaches the continuum
    assert all(p < 1e-30 for _, p in res.ionization_curve)
    delta = np.zeros_like(res.mean_distribution)
    delta[res.photon_offsets == 0] = 1.0
    np.testing.assert_allclose(res.mean_distribution, delta, atol=1e-15)


def test_run_result_bookkeeping():
    k, n_i = 3.0, 60
    res = run(k, chaotic_frequency(k, n_i), n_i)
    assert res.window == default_window(k) == (5, 15)
    assert res.theoretical_length == 4.5
    assert np.all(res.mean_distribution >= 0)
    assert res.mean_distribution.sum() + res.ionization_curve[-1][1] == pytest.approx(1.0, abs=1e-6)
    assert not res.before_quantum_time
    early = run(k, chaotic_frequency(k, n_i), n_i, window=(1, 10))
    assert early.before_quantum_time
    with pytest.raises(ValueError):
        run(k, 1e-6, n_i, n_periods=5, window=(1, 10))


def test_perturbative_regime_short_length():
    # W falls by ~k^2 per site, so the fit needs a floor near the FFT noise level (~1e-32)
    for k in (0.1, 0.2, 0.3):
        res = run(k, chaotic_frequency(k, 40), 40, n_periods=400, window=(100, 400))
        ell = fit_localization_length(res.photon_offsets, res.mean_distribution, (1, 30),
                                      floor=1e-28)
        assert ell <= 1.5, k


def test_delocalized_ionizes():
    k, n_i = 30.0, 200
    ell = k * k / 2
    bound = int(10 * n_i**2 / ell)
    res = run(k, chaotic_frequency(k, n_i), n_i, n_periods=bound, window=(1, 2))
    assert res.ionization_curve[-1][1] > 0.5


def test_checkpointless_restore_matches():
    k, n_i = 3.0, 80
    om = chaotic_frequency(k, n_i)
    a = QuantumRun(k, om, n_i, (10, 60))
    a.advance(120)
    b = QuantumRun(k, om, n_i, (10, 60))
    b.advance(70)
    c = QuantumRun.restore(k, om, n_i, (10, 60), b.lattice, b.psi.copy(), b.w_sum.copy(), b.w_count, b.curve)
    c.advance(50)
    assert np.array_equal(a.psi.amplitudes, c.psi.amplitudes)
    assert np.array_equal(a.w_sum, c.w_sum) and a.curve == c.curve
