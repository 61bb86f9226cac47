"""Canned pipelines that regenerate each figure's data and a gnuplot script."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analysis, bloch, optics, pulses, squeezing
from .config import RunConfig
from .squeezing import QndSetup

__all__ = ["FigureData", "FIGURES", "reproduce", "stream", "REFERENCE_FIT_AMPLITUDE", "REFERENCE_DENSITY_CM3"]

TWO_PI = 2.0 * math.pi

# reference fit amplitude and density for the cold-cloud dispersion measurement
REFERENCE_FIT_AMPLITUDE = 39.9
REFERENCE_FIT_WAVELENGTH_CM = 852e-7
REFERENCE_FIT_LENGTH_CM = 0.1
REFERENCE_DENSITY_CM3 = 4.3e9


@dataclass
class FigureData:
    name: str
    header: tuple[str, ...]
    rows: np.ndarray
    report: dict[str, object] = field(default_factory=dict)
    script: str = ""


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sub-task ``index`` of a run."""
    return np.random.default_rng([int(seed), int(index)])


def _gnuplot(name: str, title: str, xlabel: str, ylabel: str, series: list[tuple[int, int, str]],
             logx: bool = False, logy: bool = False, style: str = "lines") -> str:
    lines = [
        "set datafile separator ','",
        "set key top left autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    lines.append("set terminal pngcairo size 900,600")
    lines.append(f"set output 'fig_{name}.png'")
    plots = [f"'fig_{name}.csv' using {x}:{y} with {style} title '{t}'" for x, y, t in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def figure_1b(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    """Phase contributions of the two ground manifolds and their balanced sum."""
    model = cfg.line_model()
    det_hz = np.linspace(cfg["scan_start"], cfg["scan_stop"], cfg["scan_points"])
    det = TWO_PI * det_hz
    half = cfg["density"] / 2.0
    upper = optics.phase_shift(model, cfg.ensemble(density=half, imbalance=1.0), det)
    lower = optics.phase_shift(model, cfg.ensemble(density=half, imbalance=-1.0), det)
    total = optics.phase_shift(model, cfg.ensemble(imbalance=0.0), det)
    zero = optics.find_zero_crossing(model)
    script = _gnuplot("1b", "Balanced-ensemble phase shift", "detuning (Hz)", "phase (rad)",
                      [(1, 2, "upper level"), (1, 3, "lower level"), (1, 4, "sum")])
    return FigureData(
        "1b", ("detuning_hz", "phase_upper_rad", "phase_lower_rad", "phase_total_rad"),
        np.column_stack([det_hz, upper, lower, total]),
        {"zero_crossing_hz": zero / TWO_PI},
        script,
    )


def figure_3jk(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    """Ramsey fringe samples with and without the QND squeezing stage."""
    n_at = cfg["probed_atoms"]
    kappa_sq = cfg["kappa_sq"]
    phases = np.linspace(-math.pi, math.pi, cfg["phase_points"])
    per_phase = max(2, trials // len(phases))
    rows = []
    coh_steps = bloch.default_protocol(False)
    sq_steps = cfg.protocol_steps()
    ratio_at = {}
    for i, ph in enumerate(phases):
        coh = np.empty(per_phase)
        sq = np.empty(per_phase)
        for t in range(per_phase):
            trial = i * per_phase + t
            coh[t] = bloch.run_protocol(coh_steps, n_at, ph, bloch.trial_rng(seed, 2 * trial), kappa_sq)[1][-1]
            sq[t] = bloch.run_protocol(sq_steps, n_at, ph, bloch.trial_rng(seed, 2 * trial + 1), kappa_sq,
                                       cfg["emission"])[1][-1]
            rows.append((trial, ph, coh[t], sq[t]))
        if math.isclose(abs(ph), math.pi / 2):
            ratio_at[ph] = float(np.var(sq, ddof=1) / np.var(coh, ddof=1))
    report = {"kappa_sq": kappa_sq, "xi_predicted": 1.0 / (1.0 + kappa_sq), "trials_per_phase": per_phase}
    for ph, r in ratio_at.items():
        report[f"variance_ratio_at_{ph:+.4f}_rad"] = r
    script = _gnuplot("3jk", "Ramsey fringe: coherent vs squeezed", "phase (rad)", "j_z sample",
                      [(2, 3, "coherent"), (2, 4, "squeezed")], style="points pointsize 0.3")
    return FigureData("3jk", ("trial", "phase_rad", "jz_coherent", "jz_squeezed"), np.array(rows), report, script)


def fig6_traces(cfg: RunConfig, seed: int):
    """Two-point variance curves in and out of the white-light position."""
    setup0 = cfg.setup(ensemble={"probed_atoms": 0.0})
    mismatch = cfg["path_mismatch"] or 5e-3
    deviation = cfg["fm_deviation"] or 50e6
    env = cfg.noise(fm_depth=TWO_PI * deviation)
    spacing = cfg["train_spacing"]
    lags = np.arange(1, cfg["max_lag"] + 1)
    out = {}
    for k, (label, dl) in enumerate((("white_light", 0.0), ("offset", mismatch))):
        setup = cfg.setup(ensemble={"probed_atoms": 0.0}, interferometer={"path_mismatch": dl})
        train = pulses.run_two_pulse_train(setup, env, cfg["train_pulses"], spacing, stream(seed, k))
        out[label] = analysis.two_point_variance_curve(train.areas, lags)
    shot = float(pulses.PulseModel.from_setup(setup0).detector_variance(0))
    return lags * spacing, out, shot, mismatch, deviation


def figure_6(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    lag_s, curves, shot, mismatch, deviation = fig6_traces(cfg, seed)
    fm = cfg["fm_frequency"]
    report = {
        "path_mismatch_m": mismatch,
        "fm_deviation_hz": deviation,
        "fm_frequency_hz": fm,
        "shot_floor": shot,
        "period_offset_s": analysis.oscillation_period(lag_s, curves["offset"]),
        "expected_period_s": 1.0 / fm,
        "amplitude_offset_over_shot": analysis.oscillation_amplitude(lag_s, curves["offset"], fm) / shot,
        "amplitude_white_light_over_shot": analysis.oscillation_amplitude(lag_s, curves["white_light"], fm) / shot,
    }
    script = _gnuplot("6", "Two-point variance", "pulse separation (s)", "sigma^2 (photons^2)",
                      [(1, 2, "white light"), (1, 3, "path mismatch, FM on")], logx=True, logy=True)
    return FigureData("6", ("lag_s", "sigma2_white_light", "sigma2_offset"),
                      np.column_stack([lag_s, curves["white_light"], curves["offset"]]), report, script)


def fig7_scan(cfg: RunConfig, seed: int, powers=None):
    """Lag-1 two-point variance versus probe power, probe arm blocked and open."""
    if powers is None:
        powers = np.geomspace(0.05e-6, 2e-6, 8)
    env = cfg.noise()
    blocked, locked = [], []
    for i, p in enumerate(powers):
        setup = cfg.setup(ensemble={"probed_atoms": 0.0}, pulse={"power": float(p)})
        count, spacing = cfg["train_pulses"], cfg["train_spacing"]
        tb = pulses.run_two_pulse_train(setup, env, count, spacing, stream(seed, 2 * i), blocked=True)
        tl = pulses.run_two_pulse_train(setup, env, count, spacing, stream(seed, 2 * i + 1))
        blocked.append(analysis.two_point_variance(tb.areas))
        locked.append(analysis.two_point_variance(tl.areas))
    return np.asarray(powers), np.array(blocked), np.array(locked)


def figure_7(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    powers, blocked, locked = fig7_scan(cfg, seed)
    fb = analysis.fit_power_law(powers, blocked)
    fl = analysis.fit_power_law(powers, locked)
    report = {
        "slope_blocked": fb["slope"], "slope_blocked_err": fb.stderr("slope"),
        "slope_locked": fl["slope"], "slope_locked_err": fl.stderr("slope"),
    }
    script = _gnuplot("7", "Pulse-area noise versus probe power", "power (W)", "variance (photons^2)",
                      [(1, 2, "probe arm blocked"), (1, 3, "interferometer locked")],
                      logx=True, logy=True, style="linespoints")
    return FigureData("7", ("power_w", "variance_blocked", "variance_locked"),
                      np.column_stack([powers, blocked, locked]), report, script)


def depumped_phase(model: optics.D2LineModel, detuning, amplitude: float, factors: dict) -> np.ndarray:
    """Upper-level dispersion with per-line density factors keyed by F'."""
    detuning = np.asarray(detuning, dtype=float)
    total = np.zeros(detuning.shape)
    for f, fp, strength, offset in model.lines:
        if f != model.upper_ground:
            continue
        weight = factors.get(fp.twice_value // 2, 1.0) * strength
        total += weight * np.real(optics.lorentzian(offset - detuning, model.linewidth))
    return amplitude * total / 2.0


def figure_8(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    """Synthetic dispersion scan across the upper manifold with depumping, then a masked fit."""
    model = cfg.line_model()
    rng = stream(seed, 8)
    det_hz = np.linspace(-700e6, 150e6, 341)
    det = TWO_PI * det_hz
    amplitude = model.wavelength**2 * cfg["sample_length"] * cfg["density"] / TWO_PI
    truth = depumped_phase(model, det, amplitude, {3: cfg["depump_f3"], 4: cfg["depump_f4"]})
    noisy = truth + cfg["fit_noise"] * np.max(np.abs(truth)) * rng.standard_normal(det.size)
    mask = analysis.dispersion_mask(model, det, TWO_PI * cfg["mask_halfwidth"])
    fit = analysis.fit_dispersion(det, noisy, model, cfg["sample_length"], mask=mask)
    fitted = optics.upper_manifold_phase(model, det, fit["C"])
    formula_cm3 = 2 * math.pi * REFERENCE_FIT_AMPLITUDE / (REFERENCE_FIT_WAVELENGTH_CM**2 * REFERENCE_FIT_LENGTH_CM)
    report = {
        "fit_amplitude_rad": fit["C"],
        "fit_amplitude_err_rad": fit.stderr("C"),
        "density_fit_m3": fit.extras["density"],
        "density_true_m3": cfg["density"],
        "points_used": fit.extras["n_points"],
        "reference_amplitude_rad": REFERENCE_FIT_AMPLITUDE,
        "reference_density_formula_cm3": formula_cm3,
        "reference_density_stated_cm3": REFERENCE_DENSITY_CM3,
    }
    script = _gnuplot("8", "DC phase across the upper manifold", "detuning (Hz)", "phase (rad)",
                      [(1, 2, "data"), (1, 3, "fit")])
    script = script.replace("using 1:2 with lines", "using 1:2 with points")
    return FigureData("8", ("detuning_hz", "phase_rad", "phase_fit_rad", "used"),
                      np.column_stack([det_hz, noisy, fitted, mask.astype(float)]), report, script)


def fig9_scan(cfg: RunConfig, seed: int, means=None, sequences: int | None = None):
    """Three-pulse decomposition over a decade of mean atom numbers."""
    centre = cfg["mean_atoms"] or 5500.0
    if means is None:
        means = centre * np.geomspace(10**-0.5, 10**0.5, 5)
    sequences = sequences or cfg["sequences"]
    env = cfg.noise()
    results = []
    for i, nbar in enumerate(means):
        setup = cfg.setup(ensemble={"probed_atoms": float(nbar)})
        batch = pulses.run_three_pulse_sequences(
            setup, env, sequences, float(nbar), stream(seed, 90 + i),
            cfg["pulse_separation"], cfg["sequence_interval"])
        results.append(analysis.decompose_three_pulse(batch, setup))
    return np.asarray(means, dtype=float), results


def projection_prefactor(setup: QndSetup) -> float:
    """Phase variance per atom implied by the coherent-state formula."""
    one = squeezing.QndSetup(
        setup.ensemble.__class__(**{**setup.ensemble.__dict__, "probed_atoms": 1.0}),
        setup.interferometer, setup.pulse, setup.line_model)
    return squeezing.atomic_phase_variance(one)


def figure_9(cfg: RunConfig, seed: int, trials: int) -> FigureData:
    means, res = fig9_scan(cfg, seed)
    var = np.array([r.atomic_phase_var for r in res])
    err = np.array([r.atomic_phase_var_err for r in res])
    fit = analysis.fit_power_law(means, var)
    pref = projection_prefactor(cfg.setup())
    w = 1.0 / (err / means) ** 2
    per_atom = float(np.sum(w * var / means) / np.sum(w))
    report = {
        "slope": fit["slope"], "slope_err": fit.stderr("slope"),
        "variance_per_atom": per_atom, "predicted_variance_per_atom": pref,
        "per_atom_ratio": per_atom / pref,
    }
    rows = np.column_stack([
        means,
        [r.dc_phase for r in res], [r.dc_phase_err for r in res],
        var, err, pref * means,
        [r.shot_var for r in res],
    ])
    script = _gnuplot("9", "Atomic phase noise versus atom number", "mean atoms", "phase variance (rad^2)",
                      [(1, 4, "extracted"), (1, 6, "projection-noise formula")],
                      logx=True, logy=True, style="linespoints")
    return FigureData("9", ("mean_atoms", "dc_phase_rad", "dc_phase_err_rad", "atomic_phase_var_rad2",
                            "atomic_phase_var_err_rad2", "predicted_var_rad2", "shot_var"), rows, report, script)


FIGURES: dict[str, Callable[[RunConfig, int, int], FigureData]] = {
    "1b": figure_1b,
    "3jk": figure_3jk,
    "6": figure_6,
    "7": figure_7,
    "8": figure_8,
    "9": figure_9,
}


def reproduce(name: str, cfg: RunConfig, seed: int, trials: int) -> FigureData:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return FIGURES[name](cfg, seed, trials)
