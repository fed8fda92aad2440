import math

import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from darkkepler.binary import DmpSpec, chaos_border, preset
from darkkepler.capture import (
    capture_cross_section,
    capture_report,
    captured_mass,
    effective_chaos_border,
    halo_radius,
    maxwell_fraction_below,
    maxwell_speed_pdf,
    one_photon_cut_fraction,
    quantum_energy_border,
    quantum_time,
    reduction_factor,
)
from darkkepler.constants import PhysicalConstants
from darkkepler.regimes import delocalization_border, one_photon_border

U = 220e3


def test_cross_section(jupiter):
    base = 8 * math.pi * jupiter.orbit_radius**2
    assert capture_cross_section(jupiter, jupiter.orbit_velocity) == base
    assert capture_cross_section(jupiter, 2 * jupiter.orbit_velocity) == pytest.approx(base / 4, rel=1e-15)
    expected_km2 = 8 * math.pi * 7.78e8**2 * (13.1 / 220) ** 2
    assert capture_cross_section(jupiter, 220e3) / 1e6 == pytest.approx(expected_km2, rel=1e-12)
    assert expected_km2 == pytest.approx(5.4e16, rel=0.01)
    for v in (0.0, -1.0):
        with pytest.raises(ValueError):
            capture_cross_section(jupiter, v)


def test_quantum_border_piecewise(jupiter):
    mu_1 = one_photon_border(jupiter)
    for mu in (1e-19, 1e-18, 1e-17, 1e-16):
        assert quantum_energy_border(jupiter, DmpSpec(mu)) / mu == pytest.approx(5.0e14, rel=0.05)
    assert quantum_energy_border(jupiter, DmpSpec(1e-22)) == pytest.approx(1.14e-5, rel=0.05)
    assert quantum_energy_border(jupiter, DmpSpec(1e-22)) == quantum_energy_border(jupiter, DmpSpec(mu_1))
    w_ch = chaos_border(jupiter)
    assert quantum_energy_border(jupiter, DmpSpec(3e-15)) == w_ch


def test_quantum_border_continuity(jupiter):
    mu_1 = one_photon_border(jupiter)
    lo = quantum_energy_border(jupiter, DmpSpec(mu_1 * (1 - 1e-9)))
    hi = quantum_energy_border(jupiter, DmpSpec(mu_1 * (1 + 1e-9)))
    assert hi == pytest.approx(lo, rel=0.05)
    # upper clamp: the coefficient line meets w_ch below the delocalization border
    w_ch = chaos_border(jupiter)
    mu_c = w_ch / quantum_energy_border(jupiter, DmpSpec(1e-17)) * 1e-17
    assert mu_c < delocalization_border(jupiter)
    a = quantum_energy_border(jupiter, DmpSpec(mu_c * (1 - 1e-6)))
    b = quantum_energy_border(jupiter, DmpSpec(mu_c * (1 + 1e-6)))
    assert a == pytest.approx(b, rel=0.05)


@given(st.floats(-26, -12))
def test_capture_invariants(log_mu):
    s = preset("sun-jupiter")
    dmp = DmpSpec(10.0**log_mu)
    w_q = quantum_energy_border(s, dmp)
    w_ch = effective_chaos_border(s)
    assert 1.14e-5 * 0.95 <= w_q <= w_ch
    assert halo_radius(s, dmp) >= 1.0 / w_ch - 1e-12
    assert 0 < reduction_factor(s, dmp) <= 1


def test_halo_radius(jupiter):
    assert halo_radius(jupiter, DmpSpec(1e-13)) == pytest.approx(1 / chaos_border(jupiter))
    assert halo_radius(jupiter, DmpSpec(1e-13)) == pytest.approx(3.33, rel=0.02)
    mu = 1e-3 / quantum_energy_border(jupiter, DmpSpec(1e-17)) * 1e-17
    assert halo_radius(jupiter, DmpSpec(mu)) == pytest.approx(1000, rel=1e-9)
    halley = preset("halley-kick")
    assert effective_chaos_border(halley) == 0.45


def test_captured_mass_classical(jupiter):
    m = captured_mass(jupiter, DmpSpec(1e-13))
    assert 1e19 <= m < 1e20
    assert captured_mass(jupiter, DmpSpec(1e-13), t=2e7) == pytest.approx(2 * m, rel=1e-14)
    with pytest.raises(ValueError):
        captured_mass(jupiter, DmpSpec(1e-13), t=0.0)


def test_captured_mass_reduction(jupiter):
    dmp = DmpSpec(1e-16)
    classical = captured_mass(jupiter, DmpSpec(1e-13))
    ratio = captured_mass(jupiter, dmp) / classical
    assert ratio == pytest.approx(quantum_time(jupiter, dmp) / 1e7, rel=1e-12)
    assert ratio < 1


def test_captured_mass_monotone(jupiter):
    dmp = DmpSpec(1e-13)
    base = captured_mass(jupiter, dmp)
    denser = captured_mass(jupiter, dmp, PhysicalConstants(galactic_dm_density=8e-25))
    assert denser == pytest.approx(2 * base)
    wider = jupiter.__class__(
        "wide", jupiter.central_mass, jupiter.planet_mass, 2 * jupiter.orbit_radius, jupiter.orbit_velocity,
        kick_amplitude=jupiter.kick_amplitude,
    )
    assert captured_mass(wider, dmp) == pytest.approx(4 * base)


def test_maxwell_pdf():
    assert maxwell_speed_pdf(U, 0.0) == 0.0
    total, _ = integrate.quad(lambda v: maxwell_speed_pdf(U, v), 0, 20 * U, epsabs=1e-14, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)
    second, _ = integrate.quad(lambda v: v * v * maxwell_speed_pdf(U, v) / U**2, 0, 20 * U, epsrel=1e-12, limit=200)
    assert second == pytest.approx(0.5, abs=1e-6)
    mode = U / math.sqrt(3)
    h = U * 1e-7
    slope = (maxwell_speed_pdf(U, mode + h) - maxwell_speed_pdf(U, mode - h)) / (2 * h)
    assert abs(slope) * U < 1e-6
    with pytest.raises(ValueError):
        maxwell_speed_pdf(0.0, 1.0)
    with pytest.raises(ValueError):
        maxwell_speed_pdf(U, -1.0)


@given(st.floats(0.05, 3.0))
def test_fraction_below_matches_quadrature(x):
    v = x * U
    expected, _ = integrate.quad(lambda s: maxwell_speed_pdf(U, s), 0, v, epsrel=1e-12)
    assert maxwell_fraction_below(U, v) == pytest.approx(expected, abs=1e-10)


def test_report(jupiter):
    light = capture_report(jupiter, DmpSpec(1e-19))
    assert light.one_photon_energy_cut and 0 <= light.cut_fraction <= 1
    assert light.cut_fraction == one_photon_cut_fraction(jupiter, DmpSpec(1e-19))
    heavy = capture_report(jupiter, DmpSpec(1e-13))
    assert not heavy.one_photon_energy_cut and heavy.reduction_factor == 1.0
    d = heavy.to_dict()
    assert d["captured_mass"]["unit"] == "g"
    assert d["cross_section"]["at_orbit_velocity"]["value"] == pytest.approx(8 * math.pi * jupiter.orbit_radius**2)
    assert heavy.cross_section(jupiter.orbit_velocity) == d["cross_section"]["at_orbit_velocity"]["value"]
