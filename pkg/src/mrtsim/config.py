"""Run configuration: YAML ingestion with defaults and strict key checking."""

import hashlib
import json
from dataclasses import dataclass

import yaml

from . import units
from .errors import ConfigurationError
from .noise import NoiseParams
from .squid import PhaseGrid, SquidParams

DEFAULTS = {
    "squid": {
        "main_inductance_ph": 250.0,
        "cjj_inductance_ph": 14.0,
        "capacitance_ff": 110.0,
        "critical_current_ua": 2.3,
        # CJJ flux calibrated so the first excited-state spacing puts the
        # first-order escape-rate peak near 2.2 mPhi0
        "cjj_bias_mphi0": 244.1418,
        "flux_bias_mphi0": 0.0,
    },
    "noise": {
        "temperature_mk": 10.0,
        "mrt_width_mk": 28.0,
        "lambda_phi_mk": 9.6,
        "alpha": 0.0,
        "tan_delta_c": 5.0e-3,
    },
    "grid": {
        "phase_points": 1024,
        "phase_span_pi": 1.5,
        "points_per_scale": 8.0,
    },
    "sweep": {
        "start_mphi0": -0.2,
        "stop_mphi0": 5.0,
        "step_mphi0": 0.02,
    },
    "options": {
        "flux_only": False,
        "include_shifts": False,
        "n_left": 2,
        "n_right": 3,
        "refine_rel_tol": 5.0e-3,
        "max_refinements": 6,
    },
}


@dataclass(frozen=True)
class SweepSpec:
    start_mphi0: float
    stop_mphi0: float
    step_mphi0: float

    def biases(self):
        import numpy as np

        if self.stop_mphi0 < self.start_mphi0:
            return np.empty(0)
        n = int(round((self.stop_mphi0 - self.start_mphi0) / self.step_mphi0))
        return self.start_mphi0 + self.step_mphi0 * np.arange(n + 1)


@dataclass(frozen=True)
class RunOptions:
    flux_only: bool
    include_shifts: bool
    n_left: int
    n_right: int
    refine_rel_tol: float
    max_refinements: int


@dataclass(frozen=True)
class RunConfig:
    squid: SquidParams
    noise: NoiseParams
    phase_grid: PhaseGrid
    sweep: SweepSpec
    options: RunOptions
    merged: dict        # defaults overlaid with the user file, for hashing

    @property
    def config_hash(self):
        blob = json.dumps(self.merged, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _merge(user):
    if not isinstance(user, dict):
        raise ConfigurationError("config root must be a mapping of sections")
    unknown = set(user) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    merged = {}
    for section, defaults in DEFAULTS.items():
        block = user.get(section, {}) or {}
        if not isinstance(block, dict):
            raise ConfigurationError(f"section {section!r} must be a mapping")
        bad = set(block) - set(defaults)
        if bad:
            raise ConfigurationError(
                f"unknown keys in section {section!r}: {sorted(bad)}")
        merged[section] = {**defaults, **block}
    return merged


def parse_config(user):
    """Build a RunConfig from a (possibly partial) dict of sections."""
    import math

    m = _merge(user or {})
    s = m["squid"]
    squid = SquidParams(
        main_inductance=s["main_inductance_ph"] * 1e-12,
        cjj_inductance=s["cjj_inductance_ph"] * 1e-12,
        capacitance=s["capacitance_ff"] * 1e-15,
        critical_current=s["critical_current_ua"] * 1e-6,
        flux_bias=units.mphi0_to_wb(s["flux_bias_mphi0"]),
        cjj_bias=units.mphi0_to_wb(s["cjj_bias_mphi0"]),
    )
    n = m["noise"]
    noise = NoiseParams.from_experiment(
        w_mk=n["mrt_width_mk"], t_mk=n["temperature_mk"],
        lambda_mk=n["lambda_phi_mk"], alpha=n["alpha"],
        tan_delta_c=n["tan_delta_c"], capacitance=squid.capacitance,
    )
    g = m["grid"]
    span = g["phase_span_pi"] * math.pi
    phase_grid = PhaseGrid(min_phase=-span, max_phase=span,
                           n_points=int(g["phase_points"]))
    sw = m["sweep"]
    sweep = SweepSpec(sw["start_mphi0"], sw["stop_mphi0"], sw["step_mphi0"])
    o = m["options"]
    options = RunOptions(
        flux_only=bool(o["flux_only"]),
        include_shifts=bool(o["include_shifts"]),
        n_left=int(o["n_left"]), n_right=int(o["n_right"]),
        refine_rel_tol=float(o["refine_rel_tol"]),
        max_refinements=int(o["max_refinements"]),
    )
    return RunConfig(squid=squid, noise=noise, phase_grid=phase_grid,
                     sweep=sweep, options=options, merged=m)


def load_config(path):
    """Read a YAML config file; missing values take Table-default values."""
    with open(path) as fh:
        try:
            user = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return parse_config(user)
