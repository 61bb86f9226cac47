"""Lossy Mach-Zehnder model: mean signals, visibility and noise budget.

Photocurrents are in photons/s. The probe arm carries the atoms; its power
transmission is ``arm_transmission`` and atomic absorption enters as an extra
field factor on that arm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK

__all__ = [
    "InterferometerParams",
    "ProbePulse",
    "NoiseBudget",
    "detector_fluxes",
    "fringe_cos",
    "mean_difference_current",
    "locked_mean_area",
    "visibility",
    "fluctuation_coefficients",
    "coherent_noise",
    "quantum_frequency_noise",
    "lorentzian_frequency_noise",
    "excess_noise_factor",
    "probe_noise",
    "electronic_noise",
    "noise_budget",
    "shot_area_variance",
    "electronic_area_variance",
    "current_to_area_variance",
    "photon_flux",
]


def photon_flux(power: float, wavelength: float) -> float:
    """Photons per second carried by ``power`` watts."""
    return power * wavelength / (PLANCK * SPEED_OF_LIGHT)


@dataclass(frozen=True)
class InterferometerParams:
    arm_transmission: float = 0.3
    mode_overlap: float = 1.0
    quantum_efficiency: float = 0.9
    lock_index: int = 0
    path_mismatch: float = 0.0
    laser_freq_noise: float = 0.0  # (rad/s)^2 within the detection band
    electronic_nep: float = 1e-14  # W/sqrt(Hz)

    def __post_init__(self):
        for name in ("arm_transmission", "mode_overlap", "quantum_efficiency"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.laser_freq_noise < 0:
            raise ValueError("laser_freq_noise must be >= 0")
        if self.electronic_nep < 0:
            raise ValueError("electronic_nep must be >= 0")

    @property
    def lock_phase(self) -> float:
        return math.pi * (0.5 + self.lock_index)


@dataclass(frozen=True)
class ProbePulse:
    power: float
    duration: float
    wavelength: float
    detuning: float = 0.0  # rad/s, blue of the reference transition

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")

    @classmethod
    def from_photons(cls, photons: float, duration: float, wavelength: float, detuning: float = 0.0) -> "ProbePulse":
        power = photons / duration * PLANCK * SPEED_OF_LIGHT / wavelength
        return cls(power, duration, wavelength, detuning)

    @property
    def photon_flux(self) -> float:
        return photon_flux(self.power, self.wavelength)

    @property
    def photons(self) -> float:
        return self.photon_flux * self.duration

    @property
    def bandwidth(self) -> float:
        """Fourier-limited detection bandwidth 1 / (2 pi tau), Hz."""
        return 1.0 / (2.0 * math.pi * self.duration)

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.wavelength


def detector_fluxes(p: InterferometerParams, flux: float, total_phase):
    """Mean photon fluxes on the two detectors."""
    eta, v = p.arm_transmission, p.mode_overlap
    cross = 2.0 * np.sqrt(eta * v) * np.cos(total_phase)
    return flux / 4.0 * (1.0 + eta - cross), flux / 4.0 * (1.0 + eta + cross)


def fringe_cos(lock_index: int, phase_offset):
    """cos(pi*(1/2 + m) + offset), exact zero at zero offset."""
    sign = -1.0 if lock_index % 2 == 0 else 1.0
    return sign * np.sin(phase_offset)


def mean_difference_current(p: InterferometerParams, pulse: ProbePulse, total_phase, field_transmission=1.0):
    """Detected difference current epsilon * Phi * sqrt(eta V) * T * cos(total_phase)."""
    gain = p.quantum_efficiency * pulse.photon_flux * math.sqrt(p.arm_transmission * p.mode_overlap)
    return gain * np.asarray(field_transmission) * np.cos(total_phase)


def locked_mean_area(p: InterferometerParams, pulse: ProbePulse, phase_offset, field_transmission=1.0):
    """Pulse area at the lock point plus ``phase_offset``, photons."""
    gain = p.quantum_efficiency * pulse.photons * math.sqrt(p.arm_transmission * p.mode_overlap)
    return gain * np.asarray(field_transmission) * fringe_cos(p.lock_index, phase_offset)


def visibility(p: InterferometerParams) -> float:
    eta = p.arm_transmission
    return 2.0 * math.sqrt(eta * p.mode_overlap) / (1.0 + eta)


def fluctuation_coefficients(p: InterferometerParams, total_phase: float) -> dict[str, float]:
    """Weights of each input quadrature in the linearized difference current / alpha."""
    eta, v = p.arm_transmission, p.mode_overlap
    c, s = math.cos(total_phase), math.sin(total_phase)
    a = math.sqrt(eta * v)
    b = math.sqrt(v * (1 - eta) / 2)
    d = math.sqrt(eta * (1 - v) / 2)
    e = math.sqrt((1 - v) / 2)
    return {
        "x": -a * c, "x1": -a * s,
        "x2": -b * c, "y2": -b * s,
        "y3": -d,
        "x4": -e * c, "y4": -e * s,
    }


def coherent_noise(p: InterferometerParams, pulse: ProbePulse, total_phase: float = math.pi / 2) -> float:
    """Difference-current variance for coherent input, each quadrature at 2B."""
    weights = fluctuation_coefficients(p, total_phase)
    return 2.0 * pulse.bandwidth * pulse.photon_flux * sum(w * w for w in weights.values())


def quantum_frequency_noise(pulse: ProbePulse) -> float:
    """omega_0^2 divided by the pulse photon number, (rad/s)^2."""
    return pulse.angular_frequency**2 / pulse.photons


def lorentzian_frequency_noise(fwhm: float, bandwidth: float) -> float:
    """Frequency-noise variance (rad/s)^2 of a Lorentzian laser within ``bandwidth``.

    A Lorentzian of FWHM ``fwhm`` (Hz) has white frequency noise with one-sided
    PSD 4 pi fwhm in (rad/s)^2/Hz.
    """
    return 4.0 * math.pi * fwhm * bandwidth


def excess_noise_factor(p: InterferometerParams, pulse: ProbePulse) -> float:
    k0_dl = 2.0 * math.pi / pulse.wavelength * p.path_mismatch
    return p.laser_freq_noise / quantum_frequency_noise(pulse) * k0_dl**2


def probe_noise(pulse: ProbePulse, efficiency: float, transmission: float) -> float:
    """Shot noise of the detected probe-arm flux, (photons/s)^2."""
    return efficiency * pulse.photon_flux * transmission / (2.0 * math.pi * pulse.duration)


def electronic_noise(p: InterferometerParams, pulse: ProbePulse) -> float:
    """NEP-limited detector noise, (photons/s)^2."""
    return (p.electronic_nep * pulse.wavelength / (PLANCK * SPEED_OF_LIGHT)) ** 2 / (2.0 * math.pi * pulse.duration)


def current_to_area_variance(current_var, duration: float):
    """Convert a current variance in the Fourier band 1/(2 pi tau) to a pulse-area variance."""
    return np.asarray(current_var) * math.pi * duration**2


def shot_area_variance(p: InterferometerParams, pulse: ProbePulse, field_transmission=1.0, blocked: bool = False):
    """Coherent-state pulse-area variance epsilon * Phi * tau * (1 + eta T^2) / 2."""
    eta_eff = 0.0 if blocked else p.arm_transmission * np.asarray(field_transmission) ** 2
    return p.quantum_efficiency * pulse.photons * (1.0 + eta_eff) / 2.0


def electronic_area_variance(p: InterferometerParams, pulse: ProbePulse) -> float:
    return float(current_to_area_variance(electronic_noise(p, pulse), pulse.duration))


class NoiseBudget(NamedTuple):
    """Terms of (delta i)^2 / (epsilon Phi); multiply by ``unit`` for (photons/s)^2."""

    shot: float
    excess: float
    atomic: float
    electronic: float
    unit: float

    @property
    def total(self) -> float:
        return self.shot + self.excess + self.atomic

    @property
    def total_with_electronic(self) -> float:
        return self.total + self.electronic

    def current_variance(self, term: str = "total") -> float:
        return getattr(self, term) * self.unit


def noise_budget(
    p: InterferometerParams,
    pulse: ProbePulse,
    dc_phase: float = 0.0,
    atomic_phase_var: float = 0.0,
) -> NoiseBudget:
    """Shot, laser-excess and atomic terms with the lock at pi(1/2+m) + dc_phase."""
    eps, v, eta = p.quantum_efficiency, p.mode_overlap, p.arm_transmission
    flux = pulse.photon_flux
    cos2 = math.cos(dc_phase) ** 2
    unit = eps * flux
    return NoiseBudget(
        shot=2.0 * pulse.bandwidth,
        excess=eps * v * flux * excess_noise_factor(p, pulse) * cos2,
        atomic=eps * v * flux * (eta / (1.0 + eta)) ** 2 * atomic_phase_var * cos2,
        electronic=electronic_noise(p, pulse) / unit if unit > 0 else 0.0,
        unit=unit,
    )
