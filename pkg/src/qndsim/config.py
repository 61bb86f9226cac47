"""Run configuration: a small sectioned ``key = value`` format.

Keys are unique across sections so every one of them can also be set from
the environment as ``QNDSIM_<KEY>``. ``step`` may repeat and keeps its order.
Precedence, lowest first: built-in defaults, file, environment, command line.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from . import bloch, optics
from .errors import ConfigError
from .interferometer import InterferometerParams, ProbePulse, lorentzian_frequency_noise
from .optics import D2LineModel, EnsembleParams
from .pulses import NoiseEnvironment
from .squeezing import QndSetup

__all__ = ["Key", "KEYS", "RunConfig", "parse_config", "parse_text", "ENV_PREFIX"]

ENV_PREFIX = "QNDSIM_"


@dataclass(frozen=True)
class Key:
    section: str
    kind: str  # float | int | bool | str | floats
    default: Any
    check: Callable[[Any], bool] | None = None
    bound: str = ""
    help: str = ""


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 < x <= 1


KEYS: dict[str, Key] = {
    # line constants; None keeps the bundled value
    "constants_file": Key("atomic", "str", None, help="path to a constants file"),
    "wavelength": Key("atomic", "float", None, _pos, "> 0", "m"),
    "linewidth_hwhm": Key("atomic", "float", None, _pos, "> 0", "Hz, half width"),
    "ground_splitting": Key("atomic", "float", None, _pos, "> 0", "Hz"),
    "excited_splittings": Key("atomic", "floats", None, lambda v: all(x >= 0 for x in v), ">= 0", "Hz, ascending F'"),
    # ensemble
    "density": Key("ensemble", "float", 4.3e15, _nonneg, ">= 0", "atoms/m^3"),
    "sample_length": Key("ensemble", "float", 1e-3, _nonneg, ">= 0", "m"),
    "imbalance": Key("ensemble", "float", 1.0, lambda x: -1 <= x <= 1, "[-1, 1]", "(N_upper - N_lower)/N"),
    "probed_atoms": Key("ensemble", "float", 5500.0, _nonneg, ">= 0", "atoms in the beam"),
    "beam_waist": Key("ensemble", "float", 20e-6, _pos, "> 0", "m"),
    # interferometer
    "eta": Key("interferometer", "float", 0.3, _unit, "(0, 1]", "probe arm power transmission"),
    "mode_overlap": Key("interferometer", "float", 1.0, _unit, "(0, 1]", "V"),
    "efficiency": Key("interferometer", "float", 0.9, _unit, "(0, 1]", "detector quantum efficiency"),
    "lock_index": Key("interferometer", "int", 0, help="m in pi(1/2 + m)"),
    "path_mismatch": Key("interferometer", "float", 0.0, help="m"),
    "laser_linewidth": Key("interferometer", "float", 500e3, _nonneg, ">= 0", "Hz FWHM, 0 for an ideal laser"),
    "nep": Key("interferometer", "float", 1e-14, _nonneg, ">= 0", "W/sqrt(Hz)"),
    # probe pulse
    "detuning": Key("pulse", "float", 15e6, help="Hz, blue of the reference transition"),
    "power": Key("pulse", "float", 0.6e-6, _nonneg, ">= 0", "W"),
    "duration": Key("pulse", "float", 2e-6, _pos, "> 0", "s"),
    # classical noise
    "drift_offset": Key("noise", "float", 2.2e-3, _nonneg, ">= 0", "rad rms per sequence"),
    "drift_rate": Key("noise", "float", 1e-4, _nonneg, ">= 0", "rad/sqrt(s)"),
    "line_amplitude": Key("noise", "float", 1e-4, _nonneg, ">= 0", "rad"),
    "line_frequency": Key("noise", "float", 50.0, _pos, "> 0", "Hz"),
    "fm_deviation": Key("noise", "float", 0.0, _nonneg, ">= 0", "Hz peak laser frequency deviation"),
    "fm_frequency": Key("noise", "float", 5e3, _pos, "> 0", "Hz"),
    "shot_noise": Key("noise", "bool", True, help="detector noise on/off"),
    # pulse train
    "train_spacing": Key("train", "float", 20e-6, _pos, "> 0", "s"),
    "train_pulses": Key("train", "int", 5000, lambda x: x >= 2, ">= 2"),
    "max_lag": Key("train", "int", 200, _pos, "> 0"),
    # three-pulse sequences
    "sequences": Key("sequences", "int", 10000, lambda x: x >= 3, ">= 3"),
    "pulse_separation": Key("sequences", "float", 10e-3, _pos, "> 0", "s"),
    "sequence_interval": Key("sequences", "float", 0.5, _pos, "> 0", "s"),
    "mean_atoms": Key("sequences", "float", 5500.0, _nonneg, ">= 0"),
    # detuning scans
    "scan_start": Key("scan", "float", -1e9, help="Hz"),
    "scan_stop": Key("scan", "float", 10e9, help="Hz"),
    "scan_points": Key("scan", "int", 2201, lambda x: x >= 2, ">= 2"),
    # protocol
    "kappa_sq": Key("protocol", "float", 3.0, _nonneg, ">= 0"),
    "phase_points": Key("protocol", "int", 9, _pos, "> 0"),
    "emission": Key("protocol", "float", 0.0, lambda x: 0 <= x < 1, "[0, 1)"),
    "step": Key("protocol", "steps", None, help="repeatable protocol step"),
    # dispersion fit
    "mask_halfwidth": Key("fit", "float", 30e6, _nonneg, ">= 0", "Hz"),
    "fit_noise": Key("fit", "float", 0.01, _nonneg, ">= 0", "relative phase noise of synthetic data"),
    "depump_f3": Key("fit", "float", 0.5, _unit, "(0, 1]", "density factor near the F'=3 line"),
    "depump_f4": Key("fit", "float", 0.7, _unit, "(0, 1]", "density factor near the F'=4 line"),
    # run control
    "seed": Key("run", "int", 20240611, _nonneg, ">= 0"),
    "trials": Key("run", "int", 10000, _pos, "> 0"),
    "out": Key("run", "str", "qndsim-out"),
}

SECTIONS = tuple(dict.fromkeys(k.section for k in KEYS.values()))


def _convert(name: str, raw: str, line: int | None):
    key = KEYS[name]
    text = raw.strip()
    try:
        if key.kind == "float":
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
        elif key.kind == "int":
            value = int(text)
        elif key.kind == "bool":
            low = text.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError
            value = low in ("1", "true", "yes", "on")
        elif key.kind == "floats":
            value = tuple(float(x) for x in text.split(",") if x.strip())
        elif key.kind == "steps":
            value = bloch.parse_step(text)
        else:
            value = text
    except ValueError as exc:
        detail = f": {exc}" if key.kind == "steps" else ""
        raise ConfigError(f"{name}: cannot read {text!r} as {key.kind}{detail}", line, name) from None
    if key.check is not None and not key.check(value):
        raise ConfigError(f"{name} must be in {key.bound}, got {text}", line, name)
    return value


def parse_text(text: str) -> tuple[dict[str, Any], list[bloch.ProtocolStep], dict[str, int]]:
    """Parse config text into (values, protocol steps, key -> line number)."""
    values: dict[str, Any] = {}
    steps: list[bloch.ProtocolStep] = []
    lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        name = name.strip()
        value = value.split(" #", 1)[0].strip()
        if name not in KEYS:
            raise ConfigError(f"unknown key {name!r}", lineno, name)
        if section is not None and KEYS[name].section != section:
            raise ConfigError(f"key {name!r} belongs in [{KEYS[name].section}], not [{section}]", lineno, name)
        if name == "step":
            steps.append(_convert(name, value, lineno))
            continue
        if name in values:
            raise ConfigError(f"duplicate key {name!r} (first set on line {lines[name]})", lineno, name)
        values[name] = _convert(name, value, lineno)
        lines[name] = lineno
    return values, steps, lines


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=dict)
    steps: list[bloch.ProtocolStep] = field(default_factory=list)

    def __post_init__(self):
        merged = {name: key.default for name, key in KEYS.items() if key.kind != "steps"}
        merged.update(self.values)
        self.values = merged

    def __getitem__(self, name: str):
        return self.values[name]

    def override(self, name: str, value) -> None:
        if name not in KEYS or KEYS[name].kind == "steps":
            raise ConfigError(f"unknown key {name!r}", key=name)
        self.values[name] = _convert(name, str(value), None) if isinstance(value, str) else value

    def apply_env(self, environ: Mapping[str, str] | None = None) -> None:
        environ = os.environ if environ is None else environ
        for name in KEYS:
            var = ENV_PREFIX + name.upper()
            if var in environ and KEYS[name].kind != "steps":
                try:
                    self.values[name] = _convert(name, environ[var], None)
                except ConfigError as exc:
                    raise ConfigError(f"{var}: {exc}", key=name) from None

    # builders ---------------------------------------------------------------

    def line_model(self) -> D2LineModel:
        overrides = {
            k: self.values[k]
            for k in ("wavelength", "linewidth_hwhm", "ground_splitting", "excited_splittings")
            if self.values[k] is not None
        }
        try:
            return optics.load_model(self.values["constants_file"], overrides)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"line constants: {exc}") from None

    def ensemble(self, **kw) -> EnsembleParams:
        v = self.values
        args = dict(density=v["density"], sample_length=v["sample_length"], imbalance=v["imbalance"],
                    probed_atoms=v["probed_atoms"], beam_waist=v["beam_waist"])
        args.update(kw)
        return EnsembleParams(**args)

    def pulse(self, model: D2LineModel | None = None, **kw) -> ProbePulse:
        model = model or self.line_model()
        args = dict(power=self.values["power"], duration=self.values["duration"],
                    wavelength=model.wavelength, detuning=2 * math.pi * self.values["detuning"])
        args.update(kw)
        return ProbePulse(**args)

    def interferometer(self, pulse: ProbePulse | None = None, **kw) -> InterferometerParams:
        v = self.values
        pulse = pulse or self.pulse()
        args = dict(
            arm_transmission=v["eta"], mode_overlap=v["mode_overlap"], quantum_efficiency=v["efficiency"],
            lock_index=v["lock_index"], path_mismatch=v["path_mismatch"],
            laser_freq_noise=lorentzian_frequency_noise(v["laser_linewidth"], pulse.bandwidth),
            electronic_nep=v["nep"],
        )
        args.update(kw)
        return InterferometerParams(**args)

    def setup(self, ensemble: dict | None = None, interferometer: dict | None = None,
              pulse: dict | None = None) -> QndSetup:
        model = self.line_model()
        p = self.pulse(model, **(pulse or {}))
        return QndSetup(self.ensemble(**(ensemble or {})), self.interferometer(p, **(interferometer or {})), p, model)

    def noise(self, **kw) -> NoiseEnvironment:
        v = self.values
        args = dict(
            drift_offset=v["drift_offset"], drift_rate=v["drift_rate"],
            line_amplitude=v["line_amplitude"], line_frequency=v["line_frequency"],
            fm_depth=2 * math.pi * v["fm_deviation"], fm_frequency=v["fm_frequency"],
            shot_noise=v["shot_noise"],
        )
        args.update(kw)
        return NoiseEnvironment(**args)

    def protocol_steps(self) -> list[bloch.ProtocolStep]:
        return list(self.steps) or bloch.default_protocol(True, self.values["kappa_sq"])

    def validate(self) -> None:
        """Build every derived object so invariant violations surface early."""
        try:
            self.setup()
            self.noise()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_text(self) -> str:
        out = ["# effective configuration"]
        for section in SECTIONS:
            out.append(f"\n[{section}]")
            for name, key in KEYS.items():
                if key.section != section:
                    continue
                if key.kind == "steps":
                    for st in self.steps:
                        out.append(f"step = {_format_step(st)}")
                    continue
                value = self.values[name]
                if value is None:
                    out.append(f"# {name} = (bundled)")
                    continue
                out.append(f"{name} = {_format(value)}")
        return "\n".join(out) + "\n"

    def write_effective(self, directory: str | Path) -> Path:
        path = Path(directory) / "effective_config.ini"
        path.write_text(self.to_text())
        return path


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    return str(value)


def _format_step(step: bloch.ProtocolStep) -> str:
    parts = [step.kind]
    for k, v in step.params.items():
        if isinstance(v, tuple):
            v = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        parts.append(f"{k}={v}")
    return " ".join(parts)


def parse_config(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> RunConfig:
    """Read, merge with defaults and environment, and validate."""
    values: dict[str, Any] = {}
    steps: list[bloch.ProtocolStep] = []
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values, steps, _ = parse_text(p.read_text())
    cfg = RunConfig(values, steps)
    cfg.apply_env(environ)
    cfg.validate()
    return cfg
