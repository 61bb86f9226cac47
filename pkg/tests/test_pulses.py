import math

import numpy as np
import pytest
from scipy import stats

from qndsim import pulses
from qndsim.pulses import NoiseEnvironment, PulseModel, SequenceRecord


def test_same_seed_same_records(preset, preset_setup):
    env = preset.noise()
    a = pulses.run_three_pulse_sequences(preset_setup, env, 200, 5500, np.random.default_rng(4))
    b = pulses.run_three_pulse_sequences(preset_setup, env, 200, 5500, np.random.default_rng(4))
    np.testing.assert_array_equal(a.areas, b.areas)
    np.testing.assert_array_equal(a.atoms, b.atoms)
    c = pulses.run_three_pulse_sequences(preset_setup, env, 200, 5500, np.random.default_rng(5))
    assert not np.array_equal(a.areas, c.areas)


def test_shot_noise_is_gaussian_with_model_variance(preset):
    setup = preset.setup(ensemble={"probed_atoms": 0.0})
    train = pulses.run_two_pulse_train(setup, NoiseEnvironment.quiet(), 20000, 20e-6, np.random.default_rng(8))
    model = PulseModel.from_setup(setup)
    z = (train.areas - train.areas.mean()) / math.sqrt(model.detector_variance(0))
    ad = stats.anderson(z, "norm")
    assert ad.statistic < ad.critical_values[-1]
    assert z.var(ddof=1) == pytest.approx(1.0, abs=4 * math.sqrt(2 / 20000))


def test_blocked_arm_has_zero_mean_and_half_photon_variance(preset):
    setup = preset.setup(ensemble={"probed_atoms": 0.0})
    model = PulseModel.from_setup(setup)
    train = pulses.run_two_pulse_train(setup, preset.noise(), 20000, 20e-6, np.random.default_rng(2), blocked=True)
    assert abs(train.areas.mean()) < 5 * math.sqrt(model.detected_photons / 2 / 20000)
    assert model.detector_variance(0, blocked=True) == pytest.approx(model.detected_photons / 2 + model.electronic_var)


def test_atom_draws_are_poisson(preset, preset_setup):
    batch = pulses.run_three_pulse_sequences(preset_setup, preset.noise(), 20000, 5500, np.random.default_rng(3))
    drawn = batch.atoms[:, 0]
    assert np.all(batch.atoms[:, 1:] == 0)
    assert drawn.mean() == pytest.approx(5500, abs=5 * math.sqrt(5500 / 20000))
    # index of dispersion for a Poisson sample is chi-square distributed
    disp = drawn.var(ddof=1) * (drawn.size - 1) / drawn.mean()
    lo, hi = stats.chi2.ppf([0.0005, 0.9995], drawn.size - 1)
    assert lo < disp < hi


def test_constant_drift_cancels_exactly(preset_setup):
    env = NoiseEnvironment(drift_offset=0.05, drift_rate=0.0, line_amplitude=0.0, shot_noise=False)
    batch = pulses.run_three_pulse_sequences(preset_setup, env, 500, 5500, np.random.default_rng(0))
    assert np.all(batch.d23 == 0.0)
    assert np.any(batch.d12 != 0.0)


def test_lag_one_variance_is_shot_variance_without_classical_noise(preset):
    setup = preset.setup(ensemble={"probed_atoms": 0.0})
    train = pulses.run_two_pulse_train(setup, NoiseEnvironment.quiet(), 20000, 20e-6, np.random.default_rng(6))
    d = np.diff(train.areas)
    assert np.mean(d * d) / 2 == pytest.approx(PulseModel.from_setup(setup).detector_variance(0), rel=0.03)


def test_fm_only_couples_through_path_mismatch(preset):
    env = NoiseEnvironment(drift_offset=0, drift_rate=0, line_amplitude=0, fm_depth=2 * math.pi * 50e6, shot_noise=False)
    white = preset.setup(ensemble={"probed_atoms": 0.0})
    offset = preset.setup(ensemble={"probed_atoms": 0.0}, interferometer={"path_mismatch": 5e-3})
    a = pulses.run_two_pulse_train(white, env, 500, 20e-6, np.random.default_rng(1))
    b = pulses.run_two_pulse_train(offset, env, 500, 20e-6, np.random.default_rng(1))
    assert np.all(a.areas == 0.0)
    assert np.ptp(b.areas) > 0


def test_atoms_shift_the_locked_signal(preset, preset_setup):
    model = PulseModel.from_setup(preset_setup)
    rng = np.random.default_rng(0)
    area = model.areas(5500, 0.0, rng, shot_noise=False)
    phase = 5500 * model.per_atom.real
    want = model.gain * math.exp(-5500 * model.per_atom.imag) * -math.sin(phase)
    assert area == pytest.approx(want, rel=1e-12)
    assert pulses.sample_pulse_area(preset_setup, preset.noise(), 0.0, 5500, rng) != 0


def test_csv_round_trip_is_exact(tmp_path, preset, preset_setup):
    batch = pulses.run_three_pulse_sequences(preset_setup, preset.noise(), 50, 5500, np.random.default_rng(9))
    path = tmp_path / "seq.csv"
    pulses.write_pulse_csv(path, batch)
    back = pulses.batch_from_csv(path)
    np.testing.assert_array_equal(back.areas, batch.areas)
    np.testing.assert_array_equal(back.timestamps, batch.timestamps)
    np.testing.assert_array_equal(back.atoms, batch.atoms)
    assert path.read_text().splitlines()[0] == ",".join(pulses.CSV_HEADER)

    train = pulses.run_two_pulse_train(preset_setup, preset.noise(), 30, 20e-6, np.random.default_rng(9))
    pulses.write_pulse_csv(tmp_path / "train.csv", train)
    np.testing.assert_array_equal(pulses.train_from_csv(tmp_path / "train.csv").areas, train.areas)


def test_records_round_trip(preset, preset_setup):
    batch = pulses.run_three_pulse_sequences(preset_setup, preset.noise(), 5, 5500, np.random.default_rng(9))
    again = pulses.SequenceBatch.from_records(list(batch.records()))
    np.testing.assert_array_equal(again.areas, batch.areas)


def test_record_rejects_unordered_timestamps():
    with pytest.raises(ValueError, match="increasing"):
        SequenceRecord(0, (1.0, 2.0, 3.0), (0.0, 0.0, 0.01), (1, 0, 0))


def test_malformed_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("sequence_id,pulse_index,timestamp_s,area,atoms_drawn\n0,0,zero,1.0,3\n")
    with pytest.raises(ValueError, match="line 2"):
        pulses.read_pulse_csv(p)


def test_argument_validation(preset_setup):
    env = NoiseEnvironment()
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        pulses.run_three_pulse_sequences(preset_setup, env, 10, 5500, rng, pulse_separation=0.3, sequence_interval=0.5)
    with pytest.raises(ValueError):
        pulses.run_two_pulse_train(preset_setup, env, 0, 1e-5, rng)
    with pytest.raises(ValueError):
        NoiseEnvironment(fm_frequency=0)
