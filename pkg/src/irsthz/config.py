"""Experiment configuration.

A configuration is a flat set of ``key = value`` pairs. Files use one pair
per line; ``#`` starts a comment. Lists (``algos``, ``gains_dbi``) are
comma separated. Every key below may also be overridden from the command
line.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from .association import ALGORITHMS
from .channel import CeeParams, ThzParams
from .scenario import Layout, MobilityParams

SWEEP_AXES = ("power_dbm", "antennas", "elements", "area", "cee", "time_slot",
              "carrier_ghz", "irs")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def noise_power(n0_dbm_per_hz: float, bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise over ``bandwidth_hz`` plus the receiver noise figure, in watts."""
    if not bandwidth_hz > 0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(n0_dbm_per_hz + 10.0 * math.log10(bandwidth_hz) + noise_figure_db)


@dataclass(frozen=True)
class ExperimentConfig:
    # radio
    carrier_ghz: float = 300.0
    bandwidth_ghz: float = 10.0
    n0_dbm_hz: float = -174.0
    noise_figure_db: float = 10.0
    power_dbm: float = 23.0
    kappa_abs: float = 0.0033
    gains_dbi: tuple = (0.0, 0.0, 0.0, 0.0)
    # arrays
    antennas: int = 64
    irs_side: int = 100
    element_spacing_wl: float = 0.5
    element_side_wl: float = 0.4
    antenna_spacing_wl: float = 0.5
    # network
    n_ud: int = 10
    n_dd: int = 10
    n_ur: int = 4
    n_dr: int = 4
    area_width: float = 40.0
    area_height: float = 40.0
    device_height: float = 1.0
    irs_height: float = 10.0
    ap_height: float = 10.0
    # estimation error (relative variances)
    sigma2_g: float = 0.1
    sigma2_G: float = 0.1
    # mobility
    v_min: float = 0.5
    v_max: float = 2.0
    pause_slots: int = 5
    alpha_a: float = 0.5
    alpha_s: float = 0.5
    mobility_slots: int = 0
    # association
    coherence_slots: int = 200
    algos: tuple = ALGORITHMS
    es_cap: int = 9
    overhead: bool = False
    # power allocation
    wf_eps: float = 1e-6
    wf_max_iters: int = 500
    # Monte Carlo
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        positive = ("carrier_ghz", "bandwidth_ghz", "antennas", "irs_side", "element_spacing_wl",
                    "element_side_wl", "antenna_spacing_wl", "area_width", "area_height",
                    "coherence_slots", "trials", "wf_eps", "wf_max_iters", "es_cap")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("n_ud", "n_dd", "n_ur", "n_dr"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("device_height", "irs_height", "ap_height", "kappa_abs",
                     "sigma2_g", "sigma2_G", "mobility_slots"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if len(self.gains_dbi) != 4:
            raise ValueError("gains_dbi needs four values: AP, element in, element out, device")
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown or not self.algos:
            raise ValueError(f"unknown association algorithms {unknown}; choose from {ALGORITHMS}")

    # ---- derived physical objects -------------------------------------
    @property
    def carrier_freq(self) -> float:
        return self.carrier_ghz * 1e9

    @property
    def bandwidth(self) -> float:
        return self.bandwidth_ghz * 1e9

    @property
    def power(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def noise(self) -> float:
        return noise_power(self.n0_dbm_hz, self.bandwidth, self.noise_figure_db)

    @property
    def n_elements(self) -> int:
        return self.irs_side ** 2

    def thz(self) -> ThzParams:
        return ThzParams.from_dbi(self.carrier_freq, self.kappa_abs, self.gains_dbi, self.element_side_wl)

    def cee(self) -> CeeParams:
        return CeeParams(self.sigma2_g, self.sigma2_G)

    def layout(self) -> Layout:
        return Layout(self.area_width, self.area_height, self.n_ud, self.n_dd, self.n_ur, self.n_dr,
                      self.device_height, self.irs_height, self.ap_height)

    def mobility(self) -> MobilityParams:
        return MobilityParams(self.v_min, self.v_max, self.pause_slots, self.alpha_a, self.alpha_s,
                              (self.area_width, self.area_height))

    # ---- sweeps ---------------------------------------------------------
    def with_axis(self, axis: str, value) -> "ExperimentConfig":
        """Copy with one sweep axis set to ``value``."""
        if axis == "power_dbm":
            return replace(self, power_dbm=float(value))
        if axis == "antennas":
            return replace(self, antennas=_as_int(value, axis))
        if axis == "elements":
            n = _as_int(value, axis)
            side = math.isqrt(n)
            if side * side != n:
                raise ValueError(f"element count {n} is not a square number")
            return replace(self, irs_side=side)
        if axis == "area":
            side = math.sqrt(float(value))
            return replace(self, area_width=side, area_height=side)
        if axis == "cee":
            return replace(self, sigma2_g=float(value), sigma2_G=float(value))
        if axis == "time_slot":
            return replace(self, mobility_slots=_as_int(value, axis))
        if axis == "carrier_ghz":
            return replace(self, carrier_ghz=float(value))
        if axis == "irs":
            n = _as_int(value, axis)
            return replace(self, n_ur=n, n_dr=n)
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gains_dbi"] = list(self.gains_dbi)
        d["algos"] = list(self.algos)
        return d

    def overridden(self, **kv) -> "ExperimentConfig":
        """Copy with string or typed overrides, coerced like file values."""
        return replace(self, **{k: _coerce(k, v) for k, v in kv.items()})


def _as_int(value, axis):
    f = float(value)
    if f != int(f):
        raise ValueError(f"{axis} values must be integers, got {value}")
    return int(f)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    if not isinstance(value, str):
        if kind == "tuple":
            return tuple(value)
        return value
    text = value.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {value!r}")
    if kind == "int":
        return _as_int(text, key)
    if kind == "float":
        return float(text)
    if kind == "tuple":
        items = [t.strip() for t in text.split(",") if t.strip()]
        return tuple(float(t) for t in items) if key == "gains_dbi" else tuple(items)
    return text


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, value)
    return replace(base or ExperimentConfig(), **values)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text)
