"""INI run configuration: defaults, overrides, validation and hashing."""

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field
from math import pi

from .errors import ValidationError
from .evolve import DEFAULT_STEP, SCHEMES
from .model import OscillatorConfig

ENV_OUTPUT_DIR = "CQDYN_OUTPUT_DIR"
ENV_WORKERS = "CQDYN_WORKERS"

DEFAULTS = {
    "oscillator": {
        "lam": "0.01", "sigma": "0", "nu": "2", "zeta1": "12", "zeta2": "2",
        "phi1": repr(pi / 2), "phi2": repr(pi / 2), "n_max": "35", "n_max2": "",
    },
    "system": {"spec_file": ""},
    "run": {
        "schemes": "qq-spectral, cq, cc", "horizon": repr(6 * pi), "stride": "0.05",
        "step": repr(DEFAULT_STEP), "output_dir": "cqdyn_out", "strict_truncation": "false",
        "backend": "auto",
    },
    "analysis": {
        "entropy": "true", "scramble": "false", "resonance": "false", "perturbation": "false",
        "burn_in": "", "d": "",
    },
    "sweep": {"workers": "", "mean_entropy": "false", "reference": "qq-spectral"},
    "wigner": {
        "times": "0", "schemes": "qq-spectral, cq", "q_min": "-8", "q_max": "8",
        "points": "161", "format": "csv",
    },
    "wavepacket": {
        "potential": "0, 0, 0.5", "coupling": "0, 0, 1", "mass": "1", "lam": "0", "v2": "0",
        "q0": "1", "p0": "0", "sigma_re": "0", "sigma_im": "0.5", "horizon": "10",
        "stride": "0.1", "step": repr(DEFAULT_STEP),
    },
}

RESERVED_SWEEP_KEYS = ("workers", "mean_entropy", "reference")


def _float(sec, key, value):
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"[{sec}] {key} must be a number, got {value!r}") from None


def _floats(sec, key, value):
    items = [v for v in value.replace(";", ",").split(",") if v.strip()]
    return [_float(sec, key, v) for v in items]


def _bool(sec, key, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValidationError(f"[{sec}] {key} must be a boolean, got {value!r}")


@dataclass
class RunConfig:
    """Parsed configuration.  ``raw`` holds every section as strings."""

    raw: dict
    oscillator: OscillatorConfig = None
    spec_file: str = ""
    schemes: list = field(default_factory=list)
    horizon: float = 0.0
    stride: float = 0.0
    step: float = DEFAULT_STEP
    output_dir: str = ""
    strict: bool = False
    backend: str = None

    @property
    def hash(self):
        return config_hash(self.raw)

    def section(self, name):
        return self.raw[name]

    def flag(self, sec, key):
        return _bool(sec, key, self.raw[sec][key])

    def number(self, sec, key):
        return _float(sec, key, self.raw[sec][key])

    def numbers(self, sec, key):
        return _floats(sec, key, self.raw[sec][key])

    def sweep_axes(self):
        """[(name, values)] for every non-reserved key of [sweep], in file order."""
        axes = []
        valid = set(DEFAULTS["oscillator"])
        for key, value in self.raw["sweep"].items():
            if key in RESERVED_SWEEP_KEYS:
                continue
            if key not in valid:
                raise ValidationError(f"sweep axis {key!r} is not an oscillator parameter")
            vals = _floats("sweep", key, value)
            if not vals:
                raise ValidationError(f"sweep axis {key!r} has no values")
            axes.append((key, vals))
        return axes

    def with_oscillator(self, **changes):
        raw = {s: dict(v) for s, v in self.raw.items()}
        for k, v in changes.items():
            raw["oscillator"][k] = repr(v) if isinstance(v, float) else str(v)
        return build(raw)


def config_hash(raw):
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _oscillator(raw):
    o = raw["oscillator"]
    try:
        nu = int(o["nu"])
        n_max = int(o["n_max"])
        n_max2 = int(o["n_max2"]) if o["n_max2"].strip() else None
    except ValueError as exc:
        raise ValidationError(f"[oscillator] integer field invalid: {exc}") from None
    return OscillatorConfig(
        lam=_float("oscillator", "lam", o["lam"]),
        sigma=_float("oscillator", "sigma", o["sigma"]),
        nu=nu,
        zeta1=_float("oscillator", "zeta1", o["zeta1"]),
        zeta2=_float("oscillator", "zeta2", o["zeta2"]),
        phi1=_float("oscillator", "phi1", o["phi1"]),
        phi2=_float("oscillator", "phi2", o["phi2"]),
        n_max=n_max,
        n_max2=n_max2,
    )


def build(raw):
    """Validate a raw section dict and return a RunConfig."""
    cfg = RunConfig(raw=raw)
    cfg.oscillator = _oscillator(raw)
    cfg.spec_file = raw["system"]["spec_file"].strip()
    run = raw["run"]
    cfg.schemes = [s.strip() for s in run["schemes"].split(",") if s.strip()]
    if not cfg.schemes:
        raise ValidationError("at least one scheme is required")
    for s in cfg.schemes:
        if s not in SCHEMES:
            raise ValidationError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    cfg.horizon = _float("run", "horizon", run["horizon"])
    cfg.stride = _float("run", "stride", run["stride"])
    cfg.step = _float("run", "step", run["step"])
    if not cfg.horizon > 0:
        raise ValidationError("[run] horizon must be > 0")
    if not cfg.stride > 0:
        raise ValidationError("[run] stride must be > 0")
    if not cfg.step > 0:
        raise ValidationError("[run] step must be > 0")
    cfg.output_dir = os.environ.get(ENV_OUTPUT_DIR) or run["output_dir"]
    cfg.strict = _bool("run", "strict_truncation", run["strict_truncation"])
    backend = run["backend"].strip()
    if backend not in ("auto", "cython", "python"):
        raise ValidationError("[run] backend must be auto, cython or python")
    cfg.backend = None if backend == "auto" else backend
    return cfg


def load(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``section.key=value`` overrides."""
    raw = {s: dict(v) for s, v in DEFAULTS.items()}
    if path:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        for sec in cp.sections():
            if sec not in raw:
                raise ValidationError(f"unknown config section [{sec}]")
            for key, value in cp.items(sec):
                if sec != "sweep" and key not in raw[sec]:
                    raise ValidationError(f"unknown key {key!r} in [{sec}]")
                raw[sec][key] = value
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        if sec not in raw:
            raise ValidationError(f"unknown config section [{sec}]")
        if sec != "sweep" and key not in raw[sec]:
            raise ValidationError(f"unknown key {key!r} in [{sec}]")
        raw[sec][key] = value.strip()
    return build(raw)
