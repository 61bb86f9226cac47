"""Monte-Carlo generator of integrated pulse areas.

Each pulse area is the locked-fringe signal for the instantaneous phase
offset (atoms, thermal drift, mains pickup, laser frequency noise through the
path mismatch) plus Gaussian detector noise: coherent shot noise of the
detected flux and NEP-limited electronic noise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from . import optics
from .interferometer import electronic_area_variance, fringe_cos
from .squeezing import QndSetup

__all__ = [
    "NoiseEnvironment",
    "PulseModel",
    "PulseTrain",
    "SequenceRecord",
    "SequenceBatch",
    "sample_pulse_area",
    "run_two_pulse_train",
    "run_three_pulse_sequences",
    "write_pulse_csv",
    "read_pulse_csv",
    "batch_from_csv",
    "train_from_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("sequence_id", "pulse_index", "timestamp_s", "area", "atoms_drawn")


@dataclass(frozen=True)
class NoiseEnvironment:
    """Classical phase noise acting on the interferometer.

    ``drift_offset`` is the rms static phase offset drawn once per train or
    sequence, ``drift_rate`` the random-walk coefficient (rad/sqrt(s)).
    ``fm_depth`` is the peak laser frequency deviation in rad/s; it reaches
    the signal only through the path mismatch.
    """

    drift_offset: float = 2.2e-3
    drift_rate: float = 1e-4
    line_amplitude: float = 1e-4
    line_frequency: float = 50.0
    fm_depth: float = 0.0
    fm_frequency: float = 5e3
    shot_noise: bool = True

    def __post_init__(self):
        for name in ("drift_offset", "drift_rate", "line_amplitude", "fm_depth"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("line_frequency", "fm_frequency"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def quiet(cls, shot_noise: bool = True) -> "NoiseEnvironment":
        """No classical noise; detector noise only if ``shot_noise``."""
        return cls(drift_offset=0.0, drift_rate=0.0, line_amplitude=0.0, fm_depth=0.0, shot_noise=shot_noise)


@dataclass(frozen=True)
class PulseModel:
    """Per-pulse constants derived once from a setup."""

    gain: float
    lock_index: int
    per_atom: complex
    detected_photons: float
    arm_transmission: float
    electronic_var: float
    delay: float
    jitter_std: float

    @classmethod
    def from_setup(cls, setup: QndSetup) -> "PulseModel":
        ifo, pulse = setup.interferometer, setup.pulse
        per_atom = complex(optics.atom_response(
            setup.line_model, pulse.detuning, setup.ensemble.beam_area, setup.ensemble.imbalance))
        delay = ifo.path_mismatch / SPEED_OF_LIGHT
        detected = ifo.quantum_efficiency * pulse.photons
        return cls(
            gain=detected * math.sqrt(ifo.arm_transmission * ifo.mode_overlap),
            lock_index=ifo.lock_index,
            per_atom=per_atom,
            detected_photons=detected,
            arm_transmission=ifo.arm_transmission,
            electronic_var=electronic_area_variance(ifo, pulse),
            delay=delay,
            jitter_std=math.sqrt(ifo.laser_freq_noise) * delay,
        )

    def transmission(self, atoms):
        return np.exp(-np.asarray(atoms, dtype=float) * self.per_atom.imag)

    def detector_variance(self, atoms, blocked: bool = False):
        if blocked:
            return self.detected_photons / 2.0 + self.electronic_var + 0.0 * np.asarray(atoms, dtype=float)
        t2 = self.transmission(atoms) ** 2
        return self.detected_photons * (1.0 + self.arm_transmission * t2) / 2.0 + self.electronic_var

    def areas(self, atoms, phase_noise, rng: np.random.Generator, shot_noise: bool = True, blocked: bool = False):
        atoms = np.asarray(atoms, dtype=float)
        phase_noise = np.asarray(phase_noise, dtype=float)
        shape = np.broadcast(atoms, phase_noise).shape
        if blocked:
            mean = np.zeros(shape)
        else:
            offset = atoms * self.per_atom.real + phase_noise
            if self.jitter_std > 0:
                offset = offset + self.jitter_std * rng.standard_normal(shape)
            mean = self.gain * self.transmission(atoms) * fringe_cos(self.lock_index, offset)
        if not shot_noise:
            return np.broadcast_to(mean, shape).astype(float)
        return mean + np.sqrt(self.detector_variance(atoms, blocked)) * rng.standard_normal(shape)


def _fm_phase(model: PulseModel, env: NoiseEnvironment, t, chi):
    return model.delay * env.fm_depth * np.sin(2.0 * math.pi * env.fm_frequency * t + chi)


def _line_phase(env: NoiseEnvironment, t, chi):
    return env.line_amplitude * np.sin(2.0 * math.pi * env.line_frequency * t + chi)


def sample_pulse_area(
    setup: QndSetup,
    env: NoiseEnvironment,
    t: float,
    n_atoms: int,
    rng: np.random.Generator,
    blocked: bool = False,
) -> float:
    """One pulse area with randomly phased classical noise at time ``t``."""
    model = PulseModel.from_setup(setup)
    chi_line, chi_fm = rng.uniform(0.0, 2.0 * math.pi, 2)
    noise = env.drift_offset * rng.standard_normal() + _line_phase(env, t, chi_line) + _fm_phase(model, env, t, chi_fm)
    return float(model.areas(n_atoms, noise, rng, env.shot_noise, blocked))


@dataclass(frozen=True)
class PulseTrain:
    times: np.ndarray
    areas: np.ndarray
    atoms: np.ndarray


def run_two_pulse_train(
    setup: QndSetup,
    env: NoiseEnvironment,
    count: int,
    separation: float,
    rng: np.random.Generator,
    n_atoms: int = 0,
    blocked: bool = False,
) -> PulseTrain:
    """``count`` equally spaced pulses sharing one noise trajectory."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not separation > 0:
        raise ValueError("separation must be > 0")
    model = PulseModel.from_setup(setup)
    t = np.arange(count) * separation
    chi_line, chi_fm = rng.uniform(0.0, 2.0 * math.pi, 2)
    steps = env.drift_rate * math.sqrt(separation) * rng.standard_normal(count)
    steps[0] = 0.0
    drift = env.drift_offset * rng.standard_normal() + np.cumsum(steps)
    noise = drift + _line_phase(env, t, chi_line) + _fm_phase(model, env, t, chi_fm)
    atoms = np.full(count, n_atoms, dtype=np.int64)
    areas = model.areas(atoms, noise, rng, env.shot_noise, blocked)
    return PulseTrain(times=t, areas=np.asarray(areas, dtype=float), atoms=atoms)


@dataclass(frozen=True)
class SequenceRecord:
    sequence_id: int
    areas: tuple[float, float, float]
    timestamps: tuple[float, float, float]
    atoms_drawn: tuple[int, int, int]

    def __post_init__(self):
        if not all(b > a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")


@dataclass(frozen=True, eq=False)
class SequenceBatch:
    """Three-pulse sequences held as (n, 3) arrays."""

    areas: np.ndarray
    timestamps: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        for name in ("areas", "timestamps", "atoms"):
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError(f"{name} must have shape (n, 3)")
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.areas.shape[0]

    @property
    def d12(self) -> np.ndarray:
        return self.areas[:, 0] - self.areas[:, 1]

    @property
    def d23(self) -> np.ndarray:
        return self.areas[:, 1] - self.areas[:, 2]

    def records(self) -> Iterator[SequenceRecord]:
        for i in range(len(self)):
            yield SequenceRecord(
                i,
                tuple(float(x) for x in self.areas[i]),
                tuple(float(x) for x in self.timestamps[i]),
                tuple(int(x) for x in self.atoms[i]),
            )

    @classmethod
    def from_records(cls, records: Sequence[SequenceRecord]) -> "SequenceBatch":
        if not records:
            raise ValueError("no records")
        return cls(
            np.array([r.areas for r in records], dtype=float),
            np.array([r.timestamps for r in records], dtype=float),
            np.array([r.atoms_drawn for r in records], dtype=np.int64),
        )


def run_three_pulse_sequences(
    setup: QndSetup,
    env: NoiseEnvironment,
    n_sequences: int,
    mean_atoms: float,
    rng: np.random.Generator,
    pulse_separation: float = 10e-3,
    sequence_interval: float = 0.5,
) -> SequenceBatch:
    """Atoms on pulse 1 only (Poisson draw per sequence); drift re-drawn per sequence."""
    if n_sequences < 1:
        raise ValueError("n_sequences must be >= 1")
    if mean_atoms < 0:
        raise ValueError("mean_atoms must be >= 0")
    if not 0 < 2 * pulse_separation < sequence_interval:
        raise ValueError("sequence_interval must exceed the three-pulse span")
    model = PulseModel.from_setup(setup)
    n = n_sequences
    times = np.arange(n)[:, None] * sequence_interval + np.arange(3)[None, :] * pulse_separation
    atoms = np.zeros((n, 3), dtype=np.int64)
    atoms[:, 0] = rng.poisson(mean_atoms, n)
    chi = rng.uniform(0.0, 2.0 * math.pi, (n, 2))
    steps = env.drift_rate * math.sqrt(pulse_separation) * rng.standard_normal((n, 3))
    steps[:, 0] = 0.0
    drift = env.drift_offset * rng.standard_normal((n, 1)) + np.cumsum(steps, axis=1)
    noise = drift + _line_phase(env, times, chi[:, :1]) + _fm_phase(model, env, times, chi[:, 1:])
    areas = model.areas(atoms, noise, rng, env.shot_noise)
    return SequenceBatch(areas=np.asarray(areas, dtype=float), timestamps=times, atoms=atoms)


def write_pulse_csv(path: str | Path, data: SequenceBatch | PulseTrain) -> None:
    """Write pulses as ``sequence_id,pulse_index,timestamp_s,area,atoms_drawn``."""
    if isinstance(data, PulseTrain):
        areas, times, atoms = data.areas[None, :], data.times[None, :], data.atoms[None, :]
    else:
        areas, times, atoms = data.areas, data.timestamps, data.atoms
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in range(areas.shape[0]):
            for k in range(areas.shape[1]):
                w.writerow((s, k, repr(float(times[s, k])), repr(float(areas[s, k])), int(atoms[s, k])))


def read_pulse_csv(path: str | Path) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Read pulses grouped by sequence id as (timestamps, areas, atoms), ordered by pulse index."""
    rows: dict[int, list[tuple[int, float, float, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, 2):
            try:
                sid, k, t, a, n = int(row[0]), int(row[1]), float(row[2]), float(row[3]), int(row[4])
            except (ValueError, IndexError):
                raise ValueError(f"{path}: malformed row at line {lineno}") from None
            rows.setdefault(sid, []).append((k, t, a, n))
    out = {}
    for sid, items in rows.items():
        items.sort()
        out[sid] = (
            np.array([x[1] for x in items]),
            np.array([x[2] for x in items]),
            np.array([x[3] for x in items], dtype=np.int64),
        )
    return out


def batch_from_csv(path: str | Path) -> SequenceBatch:
    groups = read_pulse_csv(path)
    ids = sorted(groups)
    if any(len(groups[i][0]) != 3 for i in ids):
        raise ValueError(f"{path}: every sequence must hold exactly 3 pulses")
    return SequenceBatch(
        areas=np.stack([groups[i][1] for i in ids]),
        timestamps=np.stack([groups[i][0] for i in ids]),
        atoms=np.stack([groups[i][2] for i in ids]),
    )


def train_from_csv(path: str | Path, sequence_id: int = 0) -> PulseTrain:
    times, areas, atoms = read_pulse_csv(path)[sequence_id]
    return PulseTrain(times, areas, atoms)
