"""Gaussian collective-spin states on the Bloch sphere and the Ramsey protocol.

A state is its mean spin vector plus the 2x2 covariance of the two components
transverse to it. The transverse frame (``basis``, two orthonormal rows) is
carried along by every rotation, so rotations never touch the covariance.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

__all__ = [
    "SpinState",
    "ProtocolStep",
    "pump_state",
    "rotate",
    "qnd_measure",
    "correct_mean",
    "precess",
    "readout",
    "ramsey_sequence",
    "ramsey_samples",
    "run_protocol",
    "default_protocol",
    "parse_step",
    "parse_angle",
    "trial_rng",
]

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
Z = np.array(AXES["z"])


@dataclass(frozen=True, eq=False)
class SpinState:
    n_atoms: float
    mean: np.ndarray
    basis: np.ndarray
    covariance: np.ndarray
    contrast: float = 1.0

    def __post_init__(self):
        for name in ("mean", "basis", "covariance"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mean.shape != (3,) or self.basis.shape != (2, 3) or self.covariance.shape != (2, 2):
            raise ValueError("mean, basis and covariance must have shapes (3,), (2, 3), (2, 2)")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.mean))

    def variance_along(self, direction) -> float:
        """Variance of the spin projection on a unit vector."""
        c = self.basis @ np.asarray(direction, dtype=float)
        return float(c @ self.covariance @ c)

    @property
    def var_z(self) -> float:
        return self.variance_along(Z)

    def transverse_variances(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.covariance)

    def _replace(self, **kw) -> "SpinState":
        values = dict(n_atoms=self.n_atoms, mean=self.mean, basis=self.basis,
                      covariance=self.covariance, contrast=self.contrast)
        values.update(kw)
        return SpinState(**values)


def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial: seed = base XOR trial."""
    return np.random.default_rng(int(base_seed) ^ int(trial))


def pump_state(n_atoms: float) -> SpinState:
    """Coherent state pointing to the south pole."""
    if not n_atoms > 0:
        raise ValueError("n_atoms must be > 0")
    return SpinState(
        n_atoms=n_atoms,
        mean=(0.0, 0.0, -n_atoms / 2.0),
        basis=(AXES["x"], AXES["y"]),
        covariance=np.eye(2) * n_atoms / 4.0,
    )


def _unit(axis) -> np.ndarray:
    if isinstance(axis, str):
        axis = AXES[axis.lower()]
    v = np.asarray(axis, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("rotation axis must be nonzero")
    return v / n


def _apply(s: SpinState, matrix: np.ndarray) -> SpinState:
    return s._replace(mean=matrix @ s.mean, basis=s.basis @ matrix.T)


def rotate(s: SpinState, axis, angle: float) -> SpinState:
    """Rigid rotation by ``angle`` (right-handed) about ``axis``."""
    if angle == 0:
        return s
    return _apply(s, Rotation.from_rotvec(_unit(axis) * angle).as_matrix())


def _align(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation matrix taking direction a onto direction b."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    if s < 1e-300:
        return np.eye(3)
    angle = math.atan2(s, float(a @ b))
    return Rotation.from_rotvec(axis / s * angle).as_matrix()


def qnd_measure(s: SpinState, kappa_sq: float, rng: np.random.Generator, emission: float = 0.0):
    """Weak measurement of j_z with signal-to-noise ``kappa_sq`` relative to projection noise.

    Returns (posterior state, measured j_z). The measured projection is
    conditioned as a joint Gaussian; the conjugate component gains exactly the
    variance needed to keep det(covariance) fixed. ``emission`` optionally
    shrinks the contrast and adds an isotropic variance floor.
    """
    if kappa_sq < 0:
        raise ValueError("kappa_sq must be >= 0")
    c = s.basis @ Z
    prior = float(c @ s.covariance @ c)
    mean_z = float(s.mean[2])
    if kappa_sq == 0:
        outcome = mean_z + math.sqrt(prior) * rng.standard_normal()
        return s, outcome

    readout_var = s.n_atoms / 4.0 / kappa_sq
    outcome = mean_z + math.sqrt(prior + readout_var) * rng.standard_normal()
    cov = s.covariance
    gain = cov @ c / (prior + readout_var)
    post = cov - np.outer(gain, c @ cov)
    post = (post + post.T) / 2.0

    # back-action along the transverse direction orthogonal to the measured one
    norm_c = np.linalg.norm(c)
    if norm_c > 0:
        u = np.array([-c[1], c[0]]) / norm_c
        adj = np.array([[post[1, 1], -post[0, 1]], [-post[1, 0], post[0, 0]]])
        denom = float(u @ adj @ u)
        if denom > 0:
            post = post + (np.linalg.det(cov) - np.linalg.det(post)) / denom * np.outer(u, u)

    # shift the mean transversely, keeping its length
    shift = s.basis.T @ (gain * (outcome - mean_z))
    length = s.length
    along = s.mean / length
    new_mean = along * math.sqrt(max(length**2 - shift @ shift, 0.0)) + shift
    out = _apply(s._replace(covariance=post), _align(s.mean, new_mean))

    if emission:
        keep = 1.0 - emission
        out = out._replace(
            mean=out.mean * keep,
            contrast=out.contrast * keep,
            covariance=out.covariance + np.eye(2) * emission * s.n_atoms / 4.0,
        )
    return out, outcome


def correct_mean(s: SpinState) -> SpinState:
    """Rotate the mean back into the equatorial plane."""
    if s.mean[2] == 0.0:
        return s
    target = np.array([s.mean[0], s.mean[1], 0.0])
    if not np.any(target):
        raise ValueError("mean is at a pole; equatorial direction undefined")
    return _apply(s, _align(s.mean, target))


def precess(s: SpinState, phase: float) -> SpinState:
    """Free evolution: rotation about z by (omega - omega_0) T."""
    return rotate(s, "z", phase)


def readout(s: SpinState, rng: np.random.Generator) -> float:
    """Projective j_z sample with the state's Gaussian statistics."""
    return float(s.mean[2] + math.sqrt(max(s.var_z, 0.0)) * rng.standard_normal())


@dataclass(frozen=True)
class ProtocolStep:
    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("pump", "rotate", "qnd_measure", "correct_mean", "precess", "readout")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown protocol step {self.kind!r}; expected one of {', '.join(self.KINDS)}")


_ANGLE = re.compile(r"^\s*(?:([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*?\s*)?(-?)pi(?:\s*/\s*([\d.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Parse ``1.57``, ``pi/2``, ``-pi``, ``3*pi/4`` or ``90deg``."""
    text = text.strip()
    if text.endswith("deg"):
        return math.radians(float(text[:-3]))
    m = _ANGLE.match(text)
    if m:
        factor = float(m.group(1)) if m.group(1) else 1.0
        if m.group(2):
            factor = -factor
        divisor = float(m.group(3)) if m.group(3) else 1.0
        return factor * math.pi / divisor
    return float(text)


def parse_step(text: str) -> ProtocolStep:
    """Parse ``kind key=value ...``, e.g. ``rotate axis=y angle=pi/2``."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty protocol step")
    kind, params = tokens[0], {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in step, got {tok!r}")
        if key == "axis":
            params[key] = value if value in AXES else tuple(float(x) for x in value.split(","))
        elif key in ("angle", "rf_phase", "phase"):
            params[key] = parse_angle(value)
        elif key in ("kappa_sq", "emission"):
            params[key] = float(value)
        else:
            raise ValueError(f"unknown step parameter {key!r}")
    return ProtocolStep(kind, params)


def default_protocol(squeeze: bool, kappa_sq: float = 3.0) -> list[ProtocolStep]:
    steps = [ProtocolStep("pump"), ProtocolStep("rotate", {"axis": "y", "angle": math.pi / 2})]
    if squeeze:
        steps += [
            ProtocolStep("qnd_measure", {"kappa_sq": kappa_sq}),
            ProtocolStep("correct_mean"),
            ProtocolStep("rotate", {"axis": "x", "angle": math.pi / 2}),
        ]
    steps += [
        ProtocolStep("precess"),
        ProtocolStep("rotate", {"axis": "y", "angle": math.pi / 2}),
        ProtocolStep("readout"),
    ]
    return steps


def run_protocol(
    steps: Sequence[ProtocolStep],
    n_atoms: float,
    phase: float,
    rng: np.random.Generator,
    kappa_sq: float = 3.0,
    emission: float = 0.0,
) -> tuple[SpinState, list[float]]:
    """Execute steps; ``precess`` without an explicit phase uses ``phase``.

    Returns the final state and the list of readout / measurement outcomes.
    """
    state = pump_state(n_atoms)
    outcomes: list[float] = []
    for step in steps:
        p = step.params
        if step.kind == "pump":
            state = pump_state(n_atoms)
        elif step.kind == "rotate":
            if "rf_phase" in p:
                axis = (math.cos(p["rf_phase"]), math.sin(p["rf_phase"]), 0.0)
            else:
                axis = p.get("axis", "x")
            state = rotate(state, axis, p.get("angle", math.pi / 2))
        elif step.kind == "qnd_measure":
            state, m = qnd_measure(state, p.get("kappa_sq", kappa_sq), rng, p.get("emission", emission))
            outcomes.append(m)
        elif step.kind == "correct_mean":
            state = correct_mean(state)
        elif step.kind == "precess":
            state = precess(state, p.get("phase", phase))
        elif step.kind == "readout":
            outcomes.append(readout(state, rng))
    return state, outcomes


def ramsey_sequence(
    n_atoms: float,
    phase: float,
    squeeze_first: bool,
    kappa_sq: float,
    rng: np.random.Generator,
) -> float:
    """One Ramsey fringe sample, optionally with QND squeezing before precession."""
    _, outcomes = run_protocol(default_protocol(squeeze_first, kappa_sq), n_atoms, phase, rng, kappa_sq)
    return outcomes[-1]


def ramsey_samples(
    n_atoms: float,
    phase: float,
    squeeze_first: bool,
    kappa_sq: float,
    trials: int,
    base_seed: int,
) -> np.ndarray:
    return np.array([
        ramsey_sequence(n_atoms, phase, squeeze_first, kappa_sq, trial_rng(base_seed, t))
        for t in range(trials)
    ])

