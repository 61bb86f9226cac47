"""QND figure of merit, spin-squeezing parameter and probe-induced excitation."""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import optics
from .interferometer import InterferometerParams, ProbePulse
from .optics import D2LineModel, EnsembleParams

__all__ = [
    "QndSetup",
    "SqueezingResult",
    "dc_phase",
    "atomic_phase_variance",
    "kappa_squared",
    "excitation_rate",
    "optical_density",
    "kappa_from_pe",
    "squeeze",
    "squeezing_from_kappa",
    "emission_penalized_xi",
]


@dataclass(frozen=True)
class QndSetup:
    ensemble: EnsembleParams
    interferometer: InterferometerParams
    pulse: ProbePulse
    line_model: D2LineModel

    def with_detuning(self, detuning: float) -> "QndSetup":
        pulse = ProbePulse(self.pulse.power, self.pulse.duration, self.pulse.wavelength, detuning)
        return QndSetup(self.ensemble, self.interferometer, pulse, self.line_model)


@dataclass(frozen=True)
class SqueezingResult:
    kappa_sq: float
    xi: float
    p_e: float
    alpha_0: float
    var_jz_sq: float
    var_jy_sq: float


def dc_phase(setup: QndSetup) -> float:
    return float(optics.phase_shift(setup.line_model, setup.ensemble, setup.pulse.detuning))


def _detuning_factor(setup: QndSetup) -> float:
    return float(optics.detuning_function(setup.line_model, setup.pulse.detuning))


def atomic_phase_variance(setup: QndSetup) -> float:
    """Projection-noise phase variance of a coherent spin state, rad^2."""
    lam = setup.line_model.wavelength
    area = setup.ensemble.beam_area
    return (lam**2 * _detuning_factor(setup) / (4.0 * math.pi * area)) ** 2 * setup.ensemble.probed_atoms


def kappa_squared(setup: QndSetup) -> float:
    """Atomic phase noise over probe quantum phase noise, electronic noise ignored."""
    ifo, ens = setup.interferometer, setup.ensemble
    eta = ifo.arm_transmission
    lam = setup.line_model.wavelength
    return (
        (lam**2 * _detuning_factor(setup) / (4.0 * ens.beam_area)) ** 2
        * 2.0 * eta / (1.0 + eta) ** 2
        * ifo.quantum_efficiency * ifo.mode_overlap * ens.probed_atoms * setup.pulse.photons / math.pi
        * math.cos(dc_phase(setup)) ** 2
    )


def excitation_rate(setup: QndSetup) -> float:
    """Expected scattering events per atom per pulse."""
    sigma = float(optics.absorption_cross_section(setup.line_model, setup.pulse.detuning))
    return sigma * setup.pulse.photons / setup.ensemble.beam_area


def optical_density(setup: QndSetup) -> float:
    """Resonant optical density lambda^2 l N / (2 pi)."""
    ens = setup.ensemble
    return setup.line_model.wavelength**2 * ens.sample_length * ens.density / (2.0 * math.pi)


def kappa_from_pe(setup: QndSetup) -> float:
    """kappa^2 rewritten through the excitation rate; equal to kappa_squared."""
    ifo, ens = setup.interferometer, setup.ensemble
    eta = ifo.arm_transmission
    d = _detuning_factor(setup)
    lw = float(optics.linewidth_function(setup.line_model, setup.pulse.detuning))
    return (
        ifo.quantum_efficiency * ifo.mode_overlap * eta / (1.0 + eta) ** 2
        * setup.line_model.wavelength**2 / (4.0 * ens.beam_area)
        * d * d / lw
        * math.cos(dc_phase(setup)) ** 2
        * ens.probed_atoms * excitation_rate(setup)
    )


def squeezing_from_kappa(kappa_sq: float, n_atoms: float, p_e: float = 0.0, alpha_0: float = 0.0) -> SqueezingResult:
    if kappa_sq < 0:
        raise ValueError("kappa_sq must be >= 0")
    coh = n_atoms / 4.0
    return SqueezingResult(
        kappa_sq=kappa_sq,
        xi=1.0 / (1.0 + kappa_sq),
        p_e=p_e,
        alpha_0=alpha_0,
        var_jz_sq=coh / (1.0 + kappa_sq),
        var_jy_sq=coh * (1.0 + kappa_sq),
    )


def squeeze(setup: QndSetup) -> SqueezingResult:
    return squeezing_from_kappa(
        kappa_squared(setup),
        setup.ensemble.probed_atoms,
        p_e=excitation_rate(setup),
        alpha_0=optical_density(setup),
    )


def emission_penalized_xi(xi: float, p_e: float) -> float:
    """First-order bound on squeezing lost to spontaneous emission."""
    return xi * (1.0 + p_e)
