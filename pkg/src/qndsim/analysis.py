"""Estimators that reduce pulse records to noise levels, phases and densities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import periodogram
from scipy.stats import linregress

from . import optics
from .errors import NumericalError
from .optics import D2LineModel
from .pulses import PulseModel, SequenceBatch, SequenceRecord
from .squeezing import QndSetup

__all__ = [
    "EstimationError",
    "Moments",
    "NoiseDecomposition",
    "FitReport",
    "two_point_variance",
    "two_point_variance_curve",
    "decompose_three_pulse",
    "fit_power_law",
    "fit_dispersion",
    "dispersion_mask",
    "density_from_amplitude",
    "oscillation_period",
    "oscillation_amplitude",
]


class EstimationError(NumericalError):
    """Input data cannot support the requested estimate."""


def two_point_variance(areas, lag: int = 1) -> float:
    """Half the mean squared difference of areas ``lag`` pulses apart."""
    a = np.asarray(areas, dtype=float)
    if lag < 1:
        raise ValueError("lag must be >= 1")
    if a.size < lag + 1:
        raise EstimationError(f"need at least {lag + 1} areas for lag {lag}, got {a.size}")
    d = a[lag:] - a[:-lag]
    return float(np.mean(d * d) / 2.0)


def two_point_variance_curve(areas, lags: Sequence[int]) -> np.ndarray:
    return np.array([two_point_variance(areas, int(k)) for k in lags])


@dataclass(frozen=True)
class Moments:
    """Count, mean and sum of squared deviations; mergeable across partitions."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x) -> "Moments":
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        mu = float(x.mean())
        return cls(int(x.size), mu, float(((x - mu) ** 2).sum()))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    __add__ = merge

    @property
    def variance(self) -> float:
        if self.n < 2:
            raise EstimationError("variance needs at least two samples")
        return self.m2 / (self.n - 1)


@dataclass(frozen=True)
class NoiseDecomposition:
    shot_var: float
    atomic_phase_var: float
    dc_phase: float
    n_sequences: int
    shot_var_err: float
    atomic_phase_var_err: float
    dc_phase_err: float
    transmission: float
    var_d12: float
    var_d23: float


def _chunked_moments(x: np.ndarray, chunks: int) -> Moments:
    total = Moments()
    for part in np.array_split(x, max(1, chunks)):
        total = total + Moments.of(part)
    return total


def _phase_and_transmission(mean12, gain, lock_index, ratio, iterations=60):
    """Solve mean12 = gain * T * cos(lock + phi) with T = exp(-phi * ratio)."""
    mean12 = np.asarray(mean12, dtype=float)
    sign = 1.0 if lock_index % 2 == 0 else -1.0
    t = np.ones_like(mean12)
    phi = np.zeros_like(mean12)
    for _ in range(iterations):
        i_dc = np.clip(sign * mean12 / (gain * t), -1.0, 1.0)
        phi_new = np.arccos(i_dc) - math.pi / 2.0
        t = np.exp(-phi_new * ratio)
        if np.all(np.abs(phi_new - phi) < 1e-15):
            phi = phi_new
            break
        phi = phi_new
    return phi, t


def _decompose_arrays(mean12, var12, var23, model: PulseModel, ratio):
    phi, t = _phase_and_transmission(mean12, model.gain, model.lock_index, ratio)
    cos_phi = np.cos(phi)
    # pulse 1 sees an absorbed probe arm, so its shot noise is slightly lower
    shot_deficit = model.detected_photons * model.arm_transmission * (1.0 - t * t) / 2.0
    # atom-number noise moves phase and absorption together
    slope = model.gain * t * (cos_phi - ratio * np.sin(phi))
    atomic = (var12 - var23 + shot_deficit) / slope**2
    return var23 / 2.0, atomic, phi, t, cos_phi


def _jackknife(values: np.ndarray) -> float:
    n = values.size
    return float(math.sqrt((n - 1) / n * np.sum((values - values.mean()) ** 2)))


def decompose_three_pulse(
    records: SequenceBatch | Sequence[SequenceRecord],
    setup: QndSetup,
    chunks: int = 1,
    reject_sigma: float = 3.0,
) -> NoiseDecomposition:
    """Shot noise and atomic phase variance from pairwise pulse differences.

    ``chunks`` splits the moment reduction into partitions merged exactly,
    as a parallel reduction would. Errors are delete-one jackknife estimates.
    """
    batch = records if isinstance(records, SequenceBatch) else SequenceBatch.from_records(list(records))
    n = len(batch)
    if n < 3:
        raise EstimationError("need at least 3 sequences")
    d12, d23 = batch.d12, batch.d23
    m12, m23 = _chunked_moments(d12, chunks), _chunked_moments(d23, chunks)
    var12, var23 = m12.variance, m23.variance

    se = math.sqrt(2.0 / (n - 1)) * math.hypot(var12, var23)
    if var12 < var23 - reject_sigma * se:
        raise EstimationError(
            f"var(d12) = {var12:.6g} is below var(d23) = {var23:.6g} beyond sampling error; "
            "check units and setup"
        )

    model = PulseModel.from_setup(setup)
    ratio = model.per_atom.imag / model.per_atom.real if model.per_atom.real else 0.0
    shot, atomic, phi, t, cos_phi = _decompose_arrays(m12.mean, var12, var23, model, ratio)
    if abs(float(cos_phi)) < 1e-6:
        raise EstimationError("cos(dc phase) is ~0; atomic variance is undefined")

    # delete-one jackknife, vectorised through leave-one-out sums
    def loo(x):
        s1, s2 = x.sum(), (x * x).sum()
        mean = (s1 - x) / (n - 1)
        var = ((s2 - x * x) - (n - 1) * mean * mean) / (n - 2)
        return mean, var

    mean12_j, var12_j = loo(d12)
    _, var23_j = loo(d23)
    shot_j, atomic_j, phi_j, _, _ = _decompose_arrays(mean12_j, var12_j, var23_j, model, ratio)

    return NoiseDecomposition(
        shot_var=float(shot),
        atomic_phase_var=float(atomic),
        dc_phase=float(phi),
        n_sequences=n,
        shot_var_err=_jackknife(shot_j),
        atomic_phase_var_err=_jackknife(atomic_j),
        dc_phase_err=_jackknife(phi_j),
        transmission=float(t),
        var_d12=var12,
        var_d23=var23,
    )


@dataclass(frozen=True, eq=False)
class FitReport:
    model: str
    names: tuple[str, ...]
    values: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    extras: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def stderr(self, name: str) -> float:
        i = self.names.index(name)
        return float(math.sqrt(max(self.covariance[i, i], 0.0)))


def fit_power_law(x, y) -> FitReport:
    """Straight-line fit of log y against log x; slope is the exponent."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("x and y must have the same length >= 2")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    res = linregress(lx, ly)
    slope_var = res.stderr**2
    cov = np.array([
        [slope_var, -lx.mean() * slope_var],
        [-lx.mean() * slope_var, res.intercept_stderr**2],
    ])
    resid = ly - (res.intercept + res.slope * lx)
    return FitReport("power-law", ("slope", "intercept"), np.array([res.slope, res.intercept]),
                     cov, float(np.linalg.norm(resid)))


def density_from_amplitude(amplitude: float, wavelength: float, sample_length: float) -> float:
    """Atomic density 2 pi C / (lambda^2 l) from the fitted phase amplitude C."""
    return 2.0 * math.pi * amplitude / (wavelength**2 * sample_length)


def dispersion_mask(model: D2LineModel, detunings, halfwidth: float, excited=None) -> np.ndarray:
    """True for points farther than ``halfwidth`` (rad/s) from the masked upper-manifold lines.

    By default the two lines below the cycling transition are masked, since
    probe light there pumps atoms out of the upper ground level.
    """
    detunings = np.asarray(detunings, dtype=float)
    if excited is None:
        excited = model.excited_levels[-3:-1]
    keep = np.ones(detunings.shape, dtype=bool)
    for fp in excited:
        centre = model.transition_offset(model.upper_ground, fp)
        keep &= np.abs(detunings - centre) > halfwidth
    return keep


def fit_dispersion(
    detunings,
    phases,
    model: D2LineModel,
    sample_length: float,
    mask_halfwidth: float = 2 * math.pi * 30e6,
    mask=None,
) -> FitReport:
    """Fit phases of a fully upper-level sample with one amplitude C.

    Returns C (rad) and the implied density N = 2 pi C / (lambda^2 l).
    """
    detunings = np.asarray(detunings, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if mask is None:
        mask = dispersion_mask(model, detunings, mask_halfwidth)
    x, y = detunings[mask], phases[mask]
    if x.size == 0:
        raise EstimationError("no data left after masking")
    shape = optics.upper_manifold_phase(model, x, 1.0)

    def residuals(p):
        return p[0] * shape - y

    scale = float(shape @ y / (shape @ shape)) if np.any(shape) else 0.0
    res = least_squares(residuals, x0=[scale if np.isfinite(scale) else 0.0], method="lm")
    dof = max(x.size - 1, 1)
    sigma2 = float(res.fun @ res.fun) / dof
    jtj = res.jac.T @ res.jac
    cov = np.linalg.pinv(jtj) * sigma2
    amp = float(res.x[0])
    density = density_from_amplitude(amp, model.wavelength, sample_length)
    density_err = density_from_amplitude(math.sqrt(cov[0, 0]), model.wavelength, sample_length)
    return FitReport(
        "dispersion", ("C",), np.array([amp]), cov, float(np.linalg.norm(res.fun)),
        extras={"density": density, "density_err": density_err, "n_points": int(x.size)},
    )


def oscillation_period(lag_times, values, oversample: int = 16) -> float:
    """Dominant period of a curve sampled at uniform lag times (linear trend removed)."""
    lag_times = np.asarray(lag_times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < 4:
        raise EstimationError("need at least 4 points to find a period")
    step = float(lag_times[1] - lag_times[0])
    freqs, power = periodogram(values, fs=1.0 / step, detrend="linear", nfft=oversample * values.size)
    k = int(np.argmax(power[1:])) + 1
    return 1.0 / freqs[k]


def oscillation_amplitude(lag_times, values, frequency: float) -> float:
    """Amplitude of a sinusoid at ``frequency`` fitted together with a linear trend."""
    t = np.asarray(lag_times, dtype=float)
    y = np.asarray(values, dtype=float)
    w = 2.0 * math.pi * frequency
    design = np.column_stack([np.ones_like(t), t - t.mean(), np.cos(w * t), np.sin(w * t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(math.hypot(coef[2], coef[3]))
