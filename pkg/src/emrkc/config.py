"""Run configuration: an INI file of ``key = value`` lines under section headers.

Sections and keys (all optional, defaults shown in ``RunConfig``)::

    [geometry]      extents = 20            spacing = 0.1
    [model]         name = hh
    [conductivity]  sigma_i = 0.17, 0.019, 0.019   sigma_e = 0.62, 0.24, 0.24
                    chi = 140               cm = 0.01
    [stimulus]      amplitude = 50          box = 0:1.5
                    t_start = 0             t_end = 2
    [time]          method = emrkc          dt = 0.1     t_end = 30
                    epsilon = 0.05          reference_dt =
    [experiment]    dts = 0.25, 0.125       methods = emrkc, mrkc, imex-rl
                    lambdas = 0, -1, -10    scan_dts = 0.1, 1, 10
    [output]        dir = out               snapshot = final

Lists are comma separated; ``box`` holds one ``lo:hi`` interval per axis,
separated by ``;`` (a single interval applies to every axis).
"""
import configparser
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .cheb import DEFAULT_EPSILON
from .errors import ConfigError
from .ionic import get_model
from .monodomain import Conductivity, Grid, StimulusProtocol, build_problem

METHODS = ("rkc", "mrkc", "emrkc", "emrkc-progressive", "imex-rl", "exex-rl")
MULTIRATE = ("mrkc", "emrkc", "emrkc-progressive")
SNAPSHOT_MODES = ("none", "final")


@dataclass
class RunConfig:
    extents: tuple = (20.0,)
    spacing: tuple = (0.1,)
    model: str = "hh"
    sigma_i: tuple = (0.17, 0.019, 0.019)
    sigma_e: tuple = (0.62, 0.24, 0.24)
    chi: float = 140.0
    cm: float = 0.01
    stim_amplitude: float = 50.0
    stim_box: tuple = ((0.0, 1.5),)
    stim_t_start: float = 0.0
    stim_t_end: float = 2.0
    method: str = "emrkc"
    dt: float = 0.1
    t_end: float = 30.0
    epsilon: float = DEFAULT_EPSILON
    reference_dt: Optional[float] = None
    dts: tuple = (0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125)
    methods: tuple = ("emrkc", "mrkc", "imex-rl")
    lambdas: tuple = (0.0, -1.0, -10.0, -100.0, -1000.0, -10000.0)
    scan_dts: tuple = (0.1, 1.0, 10.0)
    out_dir: str = "out"
    snapshot: str = "final"
    threads: int = 1

    def grid(self):
        return Grid(self.extents, self.spacing)

    def conductivity(self):
        return Conductivity(self.sigma_i, self.sigma_e, self.chi, self.cm)

    def stimulus(self):
        return StimulusProtocol(self.stim_amplitude, self.stim_box, self.stim_t_start, self.stim_t_end)

    def build(self):
        return build_problem(self.grid(), self.conductivity(), get_model(self.model), self.stimulus())

    def n_steps(self, dt=None):
        return steps_for(self.t_end, self.dt if dt is None else dt)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def physical_key(self):
        """Hash of everything that defines the continuous problem (not method or dt)."""
        keys = ("extents", "spacing", "model", "sigma_i", "sigma_e", "chi", "cm", "stim_amplitude",
                "stim_box", "stim_t_start", "stim_t_end", "t_end")
        payload = json.dumps({k: getattr(self, k) for k in keys}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r} in experiment.methods")
        if self.snapshot not in SNAPSHOT_MODES:
            raise ConfigError(f"snapshot must be one of {SNAPSHOT_MODES}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 <= self.epsilon < 1.5:
            raise ConfigError("epsilon must lie in [0, 1.5)")
        if self.reference_dt is not None and not self.reference_dt > 0:
            raise ConfigError("reference_dt must be positive")
        self.n_steps()
        try:
            model = get_model(self.model)
            self.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.method.startswith("emrkc") and model.spec.n_gates == 0:
            raise ConfigError("emrkc needs an ionic model with gating variables")
        return self


def steps_for(t_end, dt):
    """Number of steps; t_end must be an integer multiple of dt."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError(f"dt must be positive and finite, got {dt}")
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    n = round(t_end / dt)
    if n < 1 or abs(n * dt - t_end) > 1e-9 * t_end:
        raise ConfigError(f"t_end={t_end} is not an integer multiple of dt={dt}")
    return n


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _words(text):
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


def _box(text):
    out = []
    for part in text.split(";"):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ValueError(f"interval {part!r} is not of the form lo:hi")
        out.append((float(lo), float(hi)))
    return tuple(out)


_SCHEMA = {
    "geometry": {"extents": ("extents", _floats), "spacing": ("spacing", _floats)},
    "model": {"name": ("model", str.strip)},
    "conductivity": {"sigma_i": ("sigma_i", _floats), "sigma_e": ("sigma_e", _floats),
                     "chi": ("chi", float), "cm": ("cm", float)},
    "stimulus": {"amplitude": ("stim_amplitude", float), "box": ("stim_box", _box),
                 "t_start": ("stim_t_start", float), "t_end": ("stim_t_end", float)},
    "time": {"method": ("method", str.strip), "dt": ("dt", float), "t_end": ("t_end", float),
             "epsilon": ("epsilon", float),
             "reference_dt": ("reference_dt", lambda s: float(s) if s.strip() else None)},
    "experiment": {"dts": ("dts", _floats), "methods": ("methods", _words),
                   "lambdas": ("lambdas", _floats), "scan_dts": ("scan_dts", _floats)},
    "output": {"dir": ("out_dir", str.strip), "snapshot": ("snapshot", str.strip)},
}


def parse_config(text, base=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            attr, conv = _SCHEMA[section][key]
            try:
                values[attr] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    cfg = dataclasses.replace(base or RunConfig(), **values)
    if "method" in values:
        cfg.method = cfg.method.lower()
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
