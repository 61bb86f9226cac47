"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary."""
import csv
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qndsim import HalfInt, figures, interferometer, squeezing
from qndsim.analysis import decompose_three_pulse
from qndsim.bloch import ramsey_samples
from qndsim.cli import main
from qndsim.config import RunConfig
from qndsim.pulses import NoiseEnvironment, PulseModel, SequenceBatch, run_three_pulse_sequences
from qndsim.wigner import wigner_6j_squared

TWO_PI = 2 * math.pi


def record(label, ok, detail):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def read_report(path):
    with open(path) as fh:
        return {row["key"]: float(row["value"]) for row in csv.DictReader(fh)}


def test_criterion_1_zero_crossing(tmp_path):
    t0 = time.perf_counter()
    code = main(["zero-crossing", "--out", str(tmp_path), "--quiet"])
    elapsed = time.perf_counter() - t0
    mhz = read_report(tmp_path / "report.csv")["zero_crossing_mhz"]
    ok = code == 0 and abs(mhz - 4312) <= 15 and elapsed < 1.0
    record("1", ok, f"zero crossing {mhz:.2f} MHz (4312 +/- 15), {elapsed:.2f} s (< 1 s)")


def test_criterion_2_visibility():
    v = interferometer.visibility(interferometer.InterferometerParams(arm_transmission=0.30, mode_overlap=1.0))
    record("2", abs(v - 0.843) <= 0.002, f"visibility {v:.4f} (0.843 +/- 0.002)")


def test_criterion_3a_far_detuned_limit(tmp_path, monkeypatch):
    for key, value in (("ETA", "1"), ("EFFICIENCY", "1"), ("MODE_OVERLAP", "1")):
        monkeypatch.setenv(f"QNDSIM_{key}", value)
    t0 = time.perf_counter()
    ratios = {}
    for ghz in (50, 100, 200):
        monkeypatch.setenv("QNDSIM_DETUNING", f"{ghz}e9")
        out = tmp_path / f"d{ghz}"
        assert main(["fom", "--out", str(out), "--quiet"]) == 0
        ratios[ghz] = read_report(out / "report.csv")["kappa_sq_over_alpha0_pe"]
    elapsed = time.perf_counter() - t0
    target = math.pi / 8
    worst = max(abs(r / target - 1) for r in ratios.values())
    shown = ", ".join(f"{g} GHz: {r:.4g}" for g, r in ratios.items())
    record("3a", worst <= 0.05 and elapsed < 5, f"kappa^2/(alpha0 p_e) {shown} vs pi/8 = {target:.4f} (5%), {elapsed:.2f} s")


def test_criterion_3b_kappa_identity():
    cfg = RunConfig()
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        waist = 10 ** rng.uniform(-5.5, -4)
        density = 10 ** rng.uniform(13, 17)
        setup = cfg.setup(
            ensemble=dict(density=density, beam_waist=waist, imbalance=rng.uniform(-1, 1),
                          probed_atoms=density * 1e-3 * math.pi * waist**2 / 2),
            interferometer=dict(arm_transmission=rng.uniform(0.05, 1), mode_overlap=rng.uniform(0.05, 1),
                                quantum_efficiency=rng.uniform(0.05, 1)),
            pulse=dict(power=10 ** rng.uniform(-8, -5), duration=10 ** rng.uniform(-7, -5),
                       detuning=TWO_PI * rng.uniform(-2e9, 60e9)),
        )
        a, b = squeezing.kappa_squared(setup), squeezing.kappa_from_pe(setup)
        worst = max(worst, abs(a - b) / abs(a))
    elapsed = time.perf_counter() - t0
    record("3b", worst <= 1e-10 and elapsed < 5, f"max relative gap between kappa^2 forms {worst:.2e} (1e-10), {elapsed:.2f} s")


def test_criterion_4_excitation_rate():
    setup = RunConfig().setup()
    t0 = time.perf_counter()
    pe = squeezing.excitation_rate(setup)
    elapsed = time.perf_counter() - t0
    assert setup.pulse.duration == 2e-6 and setup.pulse.power == 0.6e-6 and setup.ensemble.beam_waist == 20e-6
    record("4", abs(pe / 15 - 1) <= 0.4 and elapsed < 1, f"p_e {pe:.3f} (15 +/- 40%)")


def test_criterion_5_squeezing_algebra():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst_xi = worst_prod = 0.0
    for kappa in np.concatenate([[0.0, 1e3], rng.uniform(0, 1e3, 2000), 10 ** rng.uniform(-6, 3, 2000)]):
        n = 10 ** rng.uniform(0, 8)
        r = squeezing.squeezing_from_kappa(float(kappa), n)
        worst_xi = max(worst_xi, abs(r.xi * (1 + kappa) - 1))
        worst_prod = max(worst_prod, abs(r.var_jz_sq * r.var_jy_sq / (n / 4) ** 2 - 1))
    elapsed = time.perf_counter() - t0
    ok = worst_xi <= 1e-9 and worst_prod <= 1e-9 and elapsed < 1
    record("5", ok, f"max |xi(1+k^2)-1| {worst_xi:.1e}, max product error {worst_prod:.1e} (1e-9), {elapsed:.2f} s")


def test_criterion_6_protocol_monte_carlo():
    t0 = time.perf_counter()
    squeezed = ramsey_samples(5500, math.pi / 2, True, 3.0, 10_000, 606)
    coherent = ramsey_samples(5500, math.pi / 2, False, 3.0, 10_000, 607)
    elapsed = time.perf_counter() - t0
    ratio = squeezed.var(ddof=1) / coherent.var(ddof=1)
    ok = abs(ratio / 0.25 - 1) <= 0.10 and elapsed < 30
    record("6", ok, f"variance ratio {ratio:.4f} (0.25 +/- 10%) over 10^4 trials, {elapsed:.1f} s")


def test_criterion_7_two_point_variance_oscillation():
    cfg = RunConfig()
    t0 = time.perf_counter()
    data = figures.figure_6(cfg, 7, 1)
    elapsed = time.perf_counter() - t0
    period = data.report["period_offset_s"]
    amp = data.report["amplitude_white_light_over_shot"]
    ok = abs(period / 200e-6 - 1) <= 0.10 and amp < 0.10 and elapsed < 30
    record("7", ok, f"period {period * 1e6:.1f} us (200 +/- 10%), white-light amplitude {amp:.4f} of shot floor (< 0.1), {elapsed:.1f} s")


def test_criterion_8_noise_versus_power():
    cfg = RunConfig()
    t0 = time.perf_counter()
    data = figures.figure_7(cfg, 8, 1)
    elapsed = time.perf_counter() - t0
    sb, sl = data.report["slope_blocked"], data.report["slope_locked"]
    ok = 0.9 <= sb <= 1.1 and 0.9 <= sl <= 1.1 and elapsed < 60
    record("8", ok, f"log-log slopes blocked {sb:.3f}, locked {sl:.3f} (in [0.9, 1.1]), {elapsed:.1f} s")


def test_criterion_9_atomic_noise_scaling():
    cfg = RunConfig()
    t0 = time.perf_counter()
    data = figures.figure_9(cfg, 9, 1)
    elapsed = time.perf_counter() - t0
    slope, ratio = data.report["slope"], data.report["per_atom_ratio"]
    ok = abs(slope - 1) <= 0.15 and abs(ratio - 1) <= 0.20 and elapsed < 120
    record("9", ok, f"slope {slope:.3f} (1 +/- 0.15), variance per atom / formula {ratio:.3f} (1 +/- 20%), "
                    f"{cfg['sequences']} sequences per point, {elapsed:.1f} s")


def test_criterion_10_closed_loop():
    cfg = RunConfig()
    setup = cfg.setup(pulse={"power": 0.5e-3})
    model = PulseModel.from_setup(setup)
    rng = np.random.default_rng(10)
    n, injected = 10_000, 1e-8
    t0 = time.perf_counter()
    atoms = np.zeros((n, 3))
    atoms[:, 0] = 5500
    phase = np.zeros((n, 3))
    phase[:, 0] = math.sqrt(injected) * rng.standard_normal(n)
    phase += 2e-3 * rng.standard_normal((n, 1))
    times = np.arange(n)[:, None] * 0.5 + np.arange(3)[None, :] * 10e-3
    batch = SequenceBatch(model.areas(atoms, phase, rng), times, atoms.astype(np.int64))
    recovered = decompose_three_pulse(batch, setup).atomic_phase_var

    constant = NoiseEnvironment(drift_offset=0.05, drift_rate=0.0, line_amplitude=0.0, shot_noise=False)
    clean = run_three_pulse_sequences(cfg.setup(), constant, 1000, 5500, rng)
    cancels = bool(np.all(clean.d23 == 0.0))
    elapsed = time.perf_counter() - t0
    ok = abs(recovered / injected - 1) <= 0.10 and cancels and elapsed < 60
    record("10", ok, f"recovered {recovered:.3e} for injected {injected:.0e} rad^2 (10%), "
                     f"constant drift cancels exactly: {cancels}, {elapsed:.1f} s")


def test_criterion_11_six_j_foundation():
    sums = {}
    for f in (3, 4):
        total = sum(2 * HalfInt.of(fp).multiplicity * wigner_6j_squared("1/2", f, "7/2", fp, "3/2", 1)
                    for fp in range(1, 7))
        sums[f] = total
    exact = wigner_6j_squared("1/2", 4, "7/2", 5, "3/2", 1)
    ok = all(abs(float(s) - 1) <= 1e-12 for s in sums.values()) and exact == Fraction(1, 36)
    record("11", ok, f"sum rules F=3: {sums[3]}, F=4: {sums[4]}; cycling symbol squared {exact} (1/36 exact)")
