import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c, h
from scipy.integrate import quad

from qndsim import interferometer as ifo
from qndsim.interferometer import InterferometerParams, ProbePulse

LAMBDA = 852.347e-9


def pulse(power=0.6e-6, duration=2e-6):
    return ProbePulse(power, duration, LAMBDA)


@settings(max_examples=100, deadline=None)
@given(
    eta=st.floats(0.01, 1.0),
    v=st.floats(0.01, 1.0),
    phase=st.floats(-10, 10),
)
def test_detector_fluxes_conserve_energy(eta, v, phase):
    p = InterferometerParams(arm_transmission=eta, mode_overlap=v)
    a, b = ifo.detector_fluxes(p, 1e12, phase)
    assert a + b == pytest.approx(1e12 * (1 + eta) / 2, rel=1e-12)
    assert a >= 0 and b >= 0


def test_visibility_preset():
    assert ifo.visibility(InterferometerParams(arm_transmission=0.3, mode_overlap=1.0)) == pytest.approx(0.843, abs=0.002)
    assert ifo.visibility(InterferometerParams(arm_transmission=1.0)) == pytest.approx(1.0)


def test_fringe_extremes_match_visibility():
    p = InterferometerParams(arm_transmission=0.3, mode_overlap=0.8)
    phases = np.linspace(0, 2 * math.pi, 2001)
    a, _ = ifo.detector_fluxes(p, 1.0, phases)
    vis = (a.max() - a.min()) / (a.max() + a.min())
    assert vis == pytest.approx(ifo.visibility(p), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(eta=st.floats(0.01, 1.0), v=st.floats(0.01, 1.0), phase=st.floats(-4, 4))
def test_coherent_noise_is_shot_noise_of_total_flux(eta, v, phase):
    p = InterferometerParams(arm_transmission=eta, mode_overlap=v, quantum_efficiency=1.0)
    pr = pulse()
    a, b = ifo.detector_fluxes(p, pr.photon_flux, phase)
    assert ifo.coherent_noise(p, pr, phase) == pytest.approx(2 * pr.bandwidth * (a + b), rel=1e-12)


def test_lock_point_mean_is_zero():
    p = InterferometerParams(lock_index=3)
    assert ifo.mean_difference_current(p, pulse(), p.lock_phase) == pytest.approx(0, abs=1e-3)
    assert ifo.locked_mean_area(p, pulse(), 0.0) == 0.0
    for m in range(4):
        q = InterferometerParams(lock_index=m)
        small = 1e-6
        direct = ifo.mean_difference_current(q, pulse(), q.lock_phase + small) * pulse().duration
        assert ifo.locked_mean_area(q, pulse(), small) == pytest.approx(direct, rel=1e-6)


def test_lorentzian_frequency_noise_against_quadrature():
    fwhm, band = 500e3, 1 / (2 * math.pi * 2e-6)
    # white frequency noise of a Lorentzian laser: one-sided PSD fwhm/pi in Hz^2/Hz
    psd = lambda f: (2 * math.pi) ** 2 * fwhm / math.pi
    want, _ = quad(psd, 0, band)
    assert ifo.lorentzian_frequency_noise(fwhm, band) == pytest.approx(want, rel=1e-12)


def test_excess_noise_factor_is_photons_times_delay_jitter():
    pr = pulse()
    noise = ifo.lorentzian_frequency_noise(500e3, pr.bandwidth)
    p = InterferometerParams(path_mismatch=5e-3, laser_freq_noise=noise)
    want = pr.photons * noise * (5e-3 / c) ** 2
    assert ifo.excess_noise_factor(p, pr) == pytest.approx(want, rel=1e-12)
    assert ifo.excess_noise_factor(InterferometerParams(laser_freq_noise=noise), pr) == 0.0


def test_excess_noise_monotone():
    pr = pulse()
    vals = [ifo.excess_noise_factor(InterferometerParams(path_mismatch=dl, laser_freq_noise=1e8), pr)
            for dl in (0, 1e-3, 2e-3, 1e-2)]
    assert vals == sorted(vals) and vals[0] == 0
    by_noise = [ifo.excess_noise_factor(InterferometerParams(path_mismatch=1e-3, laser_freq_noise=n), pr)
                for n in (0, 1e6, 1e8)]
    assert by_noise == sorted(by_noise)


def test_noise_budget_terms():
    pr = pulse()
    p = InterferometerParams()
    b = ifo.noise_budget(p, pr)
    assert b.shot == pytest.approx(2 * pr.bandwidth)
    assert b.excess == 0 and b.atomic == 0
    assert b.unit == pytest.approx(p.quantum_efficiency * pr.photon_flux)
    b2 = ifo.noise_budget(p, pr, dc_phase=0.1, atomic_phase_var=1e-6)
    want = p.quantum_efficiency * pr.photon_flux * (0.3 / 1.3) ** 2 * 1e-6 * math.cos(0.1) ** 2
    assert b2.atomic == pytest.approx(want)
    assert b2.total_with_electronic == pytest.approx(b2.total + b2.electronic)
    assert b2.current_variance("atomic") == pytest.approx(b2.atomic * b2.unit)


def test_electronic_noise_small_at_preset():
    pr = pulse()
    p = InterferometerParams()
    assert ifo.electronic_area_variance(p, pr) < 1e-3 * ifo.shot_area_variance(p, pr)
    nep_photons = 1e-14 * LAMBDA / (h * c)
    assert ifo.electronic_noise(p, pr) == pytest.approx(nep_photons**2 * pr.bandwidth)


def test_area_variance_conversion():
    pr = pulse()
    # probe-arm shot noise in the detection band equals half its detected photon number
    cur = ifo.probe_noise(pr, 0.9, 0.3)
    assert ifo.current_to_area_variance(cur, pr.duration) == pytest.approx(0.9 * pr.photons * 0.3 / 2)
    p = InterferometerParams()
    assert ifo.shot_area_variance(p, pr, blocked=True) == pytest.approx(0.9 * pr.photons / 2)
    assert ifo.shot_area_variance(p, pr) == pytest.approx(0.9 * pr.photons * 1.3 / 2)


def test_probe_pulse_round_trip():
    pr = ProbePulse.from_photons(1e7, 2e-6, LAMBDA)
    assert pr.photons == pytest.approx(1e7)
    assert pr.bandwidth == pytest.approx(1 / (2 * math.pi * 2e-6))
    assert ifo.photon_flux(0.6e-6, LAMBDA) * 2e-6 == pytest.approx(5.15e6, rel=0.01)


@pytest.mark.parametrize("field, value", [("arm_transmission", 1.5), ("mode_overlap", 0.0), ("quantum_efficiency", -0.1)])
def test_params_validation_names_field(field, value):
    with pytest.raises(ValueError, match=field):
        InterferometerParams(**{field: value})


def test_pulse_validation():
    with pytest.raises(ValueError, match="duration"):
        ProbePulse(1e-6, 0.0, LAMBDA)
