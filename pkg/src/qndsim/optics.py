"""Dispersive and absorptive response of an alkali D2 line.

Detunings passed to the public functions are the probe offset *blue* of the
reference transition (upper ground level to the highest excited level), in
rad/s. Internally each transition uses ``delta = omega_line - omega_probe``,
so a blue probe sees negative line detunings on the upper ground manifold.

Line strengths carry the full ``(2J+1)(2F'+1){J F I; F' J' 1}^2`` weight and
therefore sum to one over F' for each ground level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.optimize import bisect

from .errors import NumericalError
from .wigner import HalfInt, HalfIntLike, wigner_6j_squared

__all__ = [
    "D2LineModel",
    "EnsembleParams",
    "ZeroCrossingError",
    "load_model",
    "parse_constants",
    "line_strength",
    "line_strength_exact",
    "lorentzian",
    "manifold_response",
    "refractive_index",
    "phase_shift",
    "field_attenuation",
    "atom_response",
    "balanced_response",
    "find_zero_crossing",
    "detuning_function",
    "linewidth_function",
    "absorption_cross_section",
    "upper_manifold_phase",
]

TWO_PI = 2.0 * math.pi


class ZeroCrossingError(NumericalError):
    """No sign change of the balanced response between the ground manifolds."""


@dataclass(frozen=True)
class D2LineModel:
    """Hyperfine structure of a J=1/2 -> J' line.

    ``linewidth`` is the HWHM in rad/s. Splittings are in Hz;
    ``excited_splittings`` lists consecutive gaps in ascending F'.
    """

    wavelength: float
    linewidth: float
    nuclear_spin: HalfInt
    ground_j: HalfInt
    excited_j: HalfInt
    ground_splitting: float
    excited_splittings: tuple[float, ...]

    def __post_init__(self):
        for name in ("nuclear_spin", "ground_j", "excited_j"):
            object.__setattr__(self, name, HalfInt.of(getattr(self, name)))
        object.__setattr__(self, "excited_splittings", tuple(float(x) for x in self.excited_splittings))
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        if not self.linewidth > 0:
            raise ValueError("linewidth must be > 0")
        if self.ground_splitting <= 0:
            raise ValueError("ground_splitting must be > 0")
        if len(self.ground_levels) != 2:
            raise ValueError("exactly two ground hyperfine levels are required (J = 1/2 with I > 0)")
        if len(self.excited_splittings) != len(self.excited_levels) - 1:
            raise ValueError(
                f"expected {len(self.excited_levels) - 1} excited splittings, got {len(self.excited_splittings)}"
            )
        if any(x < 0 for x in self.excited_splittings):
            raise ValueError("excited splittings must be >= 0")

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def ground_levels(self) -> tuple[HalfInt, ...]:
        return _coupled(self.nuclear_spin, self.ground_j)

    @property
    def excited_levels(self) -> tuple[HalfInt, ...]:
        return _coupled(self.nuclear_spin, self.excited_j)

    @property
    def upper_ground(self) -> HalfInt:
        return self.ground_levels[-1]

    @property
    def lower_ground(self) -> HalfInt:
        return self.ground_levels[0]

    def excited_energy(self, f_prime: HalfIntLike) -> float:
        """Energy of F' below the top excited level, rad/s (<= 0)."""
        f_prime = HalfInt.of(f_prime)
        idx = self.excited_levels.index(f_prime)
        return -TWO_PI * sum(self.excited_splittings[idx:])

    def ground_energy(self, f: HalfIntLike) -> float:
        """Energy of F relative to the upper ground level, rad/s (<= 0)."""
        return 0.0 if HalfInt.of(f) == self.upper_ground else -TWO_PI * self.ground_splitting

    def transition_offset(self, f: HalfIntLike, f_prime: HalfIntLike) -> float:
        """omega_FF' minus the reference transition frequency, rad/s."""
        return self.excited_energy(f_prime) - self.ground_energy(f)

    @cached_property
    def lines(self) -> tuple[tuple[HalfInt, HalfInt, float, float], ...]:
        """Allowed transitions as (F, F', strength, offset) tuples."""
        out = []
        for f in self.ground_levels:
            for fp in self.excited_levels:
                s = line_strength(self, f, fp)
                if s > 0:
                    out.append((f, fp, s, self.transition_offset(f, fp)))
        return tuple(out)


def _coupled(a: HalfInt, b: HalfInt) -> tuple[HalfInt, ...]:
    lo = abs(a.twice_value - b.twice_value)
    hi = a.twice_value + b.twice_value
    return tuple(HalfInt(t) for t in range(lo, hi + 1, 2))


def parse_constants(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines, ignoring blanks and ``#`` comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def load_model(path: str | Path | None = None, overrides: Mapping[str, object] | None = None) -> D2LineModel:
    """Load line constants from a key-value file (default: bundled Cs D2).

    ``overrides`` may replace any key; values are in the file's units.
    """
    if path is None:
        text = resources.files("qndsim").joinpath("data/cs_d2.dat").read_text()
    else:
        text = Path(path).read_text()
    raw: dict[str, object] = dict(parse_constants(text))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    def num(key):
        return float(raw[key])

    try:
        splittings = raw["excited_splittings"]
        if isinstance(splittings, str):
            splittings = [float(x) for x in splittings.split(",") if x.strip()]
        return D2LineModel(
            wavelength=num("wavelength"),
            linewidth=TWO_PI * num("linewidth_hwhm"),
            nuclear_spin=HalfInt.of(raw["nuclear_spin"]),
            ground_j=HalfInt.of(raw["ground_j"]),
            excited_j=HalfInt.of(raw["excited_j"]),
            ground_splitting=num("ground_splitting"),
            excited_splittings=tuple(float(x) for x in splittings),
        )
    except KeyError as exc:
        raise ValueError(f"missing constant {exc.args[0]!r}") from None


@dataclass(frozen=True)
class EnsembleParams:
    """Atomic sample seen by the probe.

    ``imbalance`` is the population imbalance between the upper and lower
    ground levels, so the upper level holds ``density * (1 + imbalance) / 2``.
    """

    density: float
    sample_length: float
    imbalance: float = 0.0
    probed_atoms: float = 0.0
    beam_waist: float = 20e-6

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("density must be >= 0")
        if self.sample_length < 0:
            raise ValueError("sample_length must be >= 0")
        if not -1.0 <= self.imbalance <= 1.0:
            raise ValueError("imbalance must lie in [-1, 1]")
        if self.probed_atoms < 0:
            raise ValueError("probed_atoms must be >= 0")
        if not self.beam_waist > 0:
            raise ValueError("beam_waist must be > 0")

    @property
    def beam_area(self) -> float:
        return math.pi * self.beam_waist**2 / 2.0

    @property
    def upper_density(self) -> float:
        return self.density * (1.0 + self.imbalance) / 2.0

    @property
    def lower_density(self) -> float:
        return self.density * (1.0 - self.imbalance) / 2.0

    def level_density(self, model: D2LineModel, f: HalfIntLike) -> float:
        return self.upper_density if HalfInt.of(f) == model.upper_ground else self.lower_density


def line_strength_exact(model: D2LineModel, f: HalfIntLike, f_prime: HalfIntLike) -> Fraction:
    """Relative strength (2J+1)(2F'+1){J F I; F' J' 1}^2 as an exact rational."""
    f, f_prime = HalfInt.of(f), HalfInt.of(f_prime)
    sq = wigner_6j_squared(model.ground_j, f, model.nuclear_spin, f_prime, model.excited_j, 1)
    return model.ground_j.multiplicity * f_prime.multiplicity * sq


def line_strength(model: D2LineModel, f: HalfIntLike, f_prime: HalfIntLike) -> float:
    return float(line_strength_exact(model, f, f_prime))


def lorentzian(delta, gamma: float):
    """Complex line shape gamma*(delta + i*gamma)/(delta^2 + gamma^2)."""
    delta = np.asarray(delta, dtype=float)
    return gamma * (delta + 1j * gamma) / (delta**2 + gamma**2)


def manifold_response(model: D2LineModel, f: HalfIntLike, detuning):
    """Strength-weighted complex line shape summed over F' for one ground level.

    The real part is the dispersive sum, the imaginary part the absorptive one.
    """
    f = HalfInt.of(f)
    detuning = np.asarray(detuning, dtype=float)
    total = np.zeros(detuning.shape, dtype=complex)
    for g, _, strength, offset in model.lines:
        if g == f:
            total = total + strength * lorentzian(offset - detuning, model.linewidth)
    return total


def refractive_index(model: D2LineModel, ens: EnsembleParams, detuning):
    """Complex n - 1 of the sample; the imaginary part is >= 0."""
    pref = model.wavelength**3 / (8.0 * math.pi**2)
    upper = manifold_response(model, model.upper_ground, detuning)
    lower = manifold_response(model, model.lower_ground, detuning)
    return pref * (ens.upper_density * upper + ens.lower_density * lower)


def phase_shift(model: D2LineModel, ens: EnsembleParams, detuning):
    """Probe phase k0 * l * Re(n - 1), rad."""
    return model.wavenumber * ens.sample_length * np.real(refractive_index(model, ens, detuning))


def field_attenuation(model: D2LineModel, ens: EnsembleParams, detuning):
    """Amplitude attenuation exponent k0 * l * Im(n - 1); transmission is exp(-value)."""
    return model.wavenumber * ens.sample_length * np.imag(refractive_index(model, ens, detuning))


def atom_response(model: D2LineModel, detuning, beam_area: float, imbalance: float = 1.0):
    """Per-atom complex response: real part is phase, imaginary part the attenuation exponent.

    Multiplying by the number of atoms in the beam gives the sample response,
    since density * length = atoms / area.
    """
    upper = manifold_response(model, model.upper_ground, detuning)
    lower = manifold_response(model, model.lower_ground, detuning)
    pref = model.wavelength**2 / (8.0 * math.pi * beam_area)
    return pref * ((1.0 + imbalance) * upper + (1.0 - imbalance) * lower)


def balanced_response(model: D2LineModel, detuning):
    """Dispersive sum of both ground manifolds with equal weight (zero imbalance)."""
    upper = manifold_response(model, model.upper_ground, detuning)
    lower = manifold_response(model, model.lower_ground, detuning)
    return np.real(upper + lower)


def detuning_function(model: D2LineModel, detuning):
    """Upper minus lower dispersive sums; the imbalance sensitivity of the phase."""
    upper = manifold_response(model, model.upper_ground, detuning)
    lower = manifold_response(model, model.lower_ground, detuning)
    return np.real(upper - lower)


def linewidth_function(model: D2LineModel, detuning):
    """Sum of the absorptive Lorentzians of both manifolds; strictly positive."""
    upper = manifold_response(model, model.upper_ground, detuning)
    lower = manifold_response(model, model.lower_ground, detuning)
    return np.imag(upper + lower)


def absorption_cross_section(model: D2LineModel, detuning):
    """sigma = lambda^2 / (2 pi) * linewidth_function, m^2."""
    return model.wavelength**2 / TWO_PI * linewidth_function(model, detuning)


def upper_manifold_phase(model: D2LineModel, detuning, amplitude: float):
    """Phase of a sample fully in the upper ground level, for amplitude = lambda^2 l N / (2 pi)."""
    return amplitude * np.real(manifold_response(model, model.upper_ground, detuning)) / 2.0


def find_zero_crossing(model: D2LineModel, margin: float = 20.0) -> float:
    """Detuning (rad/s, blue of reference) where the balanced phase vanishes.

    Bisection between the outermost lines of the two manifolds, keeping
    ``margin`` linewidths clear of any resonance.
    """
    upper_lines = [off for f, _, _, off in model.lines if f == model.upper_ground]
    lower_lines = [off for f, _, _, off in model.lines if f == model.lower_ground]
    lo = max(upper_lines) + margin * model.linewidth
    hi = min(lower_lines) - margin * model.linewidth
    if not lo < hi:
        raise ZeroCrossingError("ground manifolds overlap; no bracket between them")

    def f(x):
        return float(balanced_response(model, x))

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if np.sign(flo) == np.sign(fhi):
        raise ZeroCrossingError("balanced phase has no sign change between the manifolds")
    return bisect(f, lo, hi, xtol=1e-6, rtol=4 * np.finfo(float).eps, maxiter=400)
