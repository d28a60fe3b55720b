"""Charging outlets, distance-to-duration conversion and experiment configs.

A scenario file is YAML::

    name: fig9-uniform
    fleet_size: 100000
    seed: 1
    resolution: 0.05          # hours, must divide 24
    fold_window: 2            # days folded each side
    outlet: Standard          # row of the outlet table
    power_kw: 1.4             # optional, defaults to the outlet power
    arrival: {family: gaussian, mu: 19, sigma2: 10}
    charge_time: {family: uniform, c: 1, d: 11}

``charge_time`` may be replaced by ``distance`` (miles) together with
``distance_mode`` (``rate`` or ``energy``) and ``kwh_per_mile``. Any
distribution can be given by its parameters or, for the charge-time
families, by ``mean`` and ``variance`` which are then moment matched.
Numbers may be written as fractions, e.g. ``variance: 100/12``.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources

import yaml

from .analytic import SessionModel
from .distributions import (
    Exponential,
    Family,
    Gaussian,
    InvalidParameterError,
    MomentMismatchWarning,
    NoSolutionError,
    Rician,
    TruncatedGaussian,
    Uniform,
    match_moments,
)

SEED_ENV = "PHEVDEMAND_SEED"
DEFAULT_KWH_PER_MILE = 0.25


class ConfigError(ValueError):
    """Invalid scenario description. ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnknownOutletError(KeyError):
    pass


@dataclass(frozen=True)
class OutletSpec:
    name: str
    voltage: float
    current: float
    power: float
    replenish_rate: float

    def __post_init__(self):
        if not self.power > 0 or not self.replenish_rate > 0:
            raise InvalidParameterError("outlet power and replenish rate must be positive")


OUTLETS = {
    "Standard": OutletSpec("Standard", 110, 12, 1.4, 3),
    "NewerStandard": OutletSpec("NewerStandard", 110, 15, 1.8, 4),
    "SingleFast": OutletSpec("SingleFast", 240, 40, 10, 29),
    "TwinFast": OutletSpec("TwinFast", 240, 80, 20, 58),
}


def _outlet_key(name):
    return str(name).replace(" ", "").replace("_", "").replace("-", "").lower()


def outlet_lookup(name, table=None):
    """Return the outlet row called ``name`` (case and spacing ignored)."""
    table = OUTLETS if table is None else table
    wanted = _outlet_key(name)
    for key, spec in table.items():
        if _outlet_key(key) == wanted:
            return spec
    raise UnknownOutletError(f"unknown outlet {name!r}; known: {', '.join(table)}")


def _duration_scale(outlet, kwh_per_mile, mode):
    if mode == "rate":
        k = 1.0 / outlet.replenish_rate
    elif mode == "energy":
        if not kwh_per_mile > 0:
            raise InvalidParameterError(f"kwh_per_mile must be > 0, got {kwh_per_mile}")
        k = kwh_per_mile / outlet.power
    else:
        raise InvalidParameterError(f"distance mode must be 'rate' or 'energy', got {mode!r}")
    if not (math.isfinite(k) and k > 0):
        raise InvalidParameterError(f"degenerate miles-to-hours factor {k!r}")
    return k


def charging_time_from_distance(miles, outlet, kwh_per_mile=DEFAULT_KWH_PER_MILE, mode="rate"):
    """Hours of charging needed to replace ``miles`` of driving.

    ``rate`` mode uses the outlet's miles-per-hour-of-charging figure;
    ``energy`` mode uses ``miles * kwh_per_mile / power``.
    """
    if miles < 0:
        raise InvalidParameterError(f"miles must be >= 0, got {miles}")
    return miles * _duration_scale(outlet, kwh_per_mile, mode)


def derive_charge_time_distribution(distance_dist, outlet, kwh_per_mile=DEFAULT_KWH_PER_MILE,
                                    mode="rate"):
    if distance_dist.support[0] < 0:
        raise InvalidParameterError("driven distance must be non-negative")
    return distance_dist.scaled(_duration_scale(outlet, kwh_per_mile, mode))


def scale_to_fleet(per_ev, n):
    """Aggregate profile of ``n`` vehicles; values and stderr scale by ``n``."""
    if int(n) != n or n < 1:
        raise ValueError(f"fleet size must be a positive integer, got {n!r}")
    return per_ev.scaled(int(n))


def _number(value, path):
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(Fraction(value.replace(" ", "")))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(path, f"cannot read {value!r} as a number") from None
    else:
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(out):
        raise ConfigError(path, "must be finite")
    return out


_PARAMS = {
    Family.GAUSSIAN: (("mu", "sigma2"), lambda p: Gaussian(p["mu"], p["sigma2"])),
    Family.UNIFORM: (("c", "d"), lambda p: Uniform(p["c"], p["d"])),
    Family.EXPONENTIAL: (("mean",), lambda p: Exponential(p["mean"])),
    Family.TRUNCATED_GAUSSIAN: (("mu", "sigma2"), lambda p: TruncatedGaussian(p["mu"], p["sigma2"])),
    Family.RICIAN: (("nu", "sigma"), lambda p: Rician(p["nu"], p["sigma"])),
}


def parse_distribution(spec, path):
    """Build a distribution from a mapping such as ``{family: uniform, c: 1, d: 11}``."""
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a mapping with a 'family' key")
    if "family" not in spec:
        raise ConfigError(f"{path}.family", "missing")
    try:
        fam = Family.parse(spec["family"])
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}.family", str(exc)) from None
    if fam not in _PARAMS:
        raise ConfigError(f"{path}.family", f"{fam.value} is not allowed in scenario files")
    rest = {k: v for k, v in spec.items() if k != "family"}
    names, build = _PARAMS[fam]
    nums = {k: _number(v, f"{path}.{k}") for k, v in rest.items()}

    try:
        if set(nums) == set(names):
            return build(nums)
        if set(nums) == {"mean", "variance"}:
            if fam is Family.GAUSSIAN:
                return Gaussian(nums["mean"], nums["variance"])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MomentMismatchWarning)
                return match_moments(fam, nums["mean"], nums["variance"])
    except (InvalidParameterError, NoSolutionError) as exc:
        raise ConfigError(path, str(exc)) from None
    unknown = sorted(set(nums) - set(names) - {"mean", "variance"})
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", f"unknown parameter for {fam.value}")
    missing = sorted(set(names) - set(nums))
    raise ConfigError(f"{path}.{missing[0]}", f"missing (give {', '.join(names)} or mean and variance)")


def _dist_record(dist):
    return {"family": dist.family.value, **{k: float(v) for k, v in dist.params().items()}}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    fleet_size: int
    arrival: Gaussian
    charge_time: object = None
    distance: object = None
    outlet: OutletSpec = OUTLETS["Standard"]
    power: float | None = None
    kwh_per_mile: float = DEFAULT_KWH_PER_MILE
    distance_mode: str = "rate"
    resolution: float = 0.05
    seed: int = 0
    fold_window: int = 2
    block_size: int = 10_000
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if (self.charge_time is None) == (self.distance is None):
            raise ConfigError("charge_time", "give exactly one of charge_time or distance")

    @property
    def power_kw(self):
        return self.outlet.power if self.power is None else self.power

    def charge_time_distribution(self):
        if self.charge_time is not None:
            return self.charge_time
        return derive_charge_time_distribution(
            self.distance, self.outlet, self.kwh_per_mile, self.distance_mode
        )

    def session_model(self):
        return SessionModel(self.arrival, self.charge_time_distribution(), self.power_kw)

    def to_dict(self):
        d = {
            "name": self.name,
            "fleet_size": self.fleet_size,
            "seed": self.seed,
            "resolution": self.resolution,
            "fold_window": self.fold_window,
            "block_size": self.block_size,
            "outlet": self.outlet.name,
            "power_kw": self.power_kw,
            "arrival": _dist_record(self.arrival),
        }
        if self.charge_time is not None:
            d["charge_time"] = _dist_record(self.charge_time)
        else:
            d["distance"] = _dist_record(self.distance)
            d["distance_mode"] = self.distance_mode
            d["kwh_per_mile"] = self.kwh_per_mile
        return d

    def scenario_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


_TOP_KEYS = {
    "name", "fleet_size", "seed", "resolution", "fold_window", "block_size", "outlet",
    "outlets", "power_kw", "arrival", "charge_time", "distance", "distance_mode",
    "kwh_per_mile", "notes",
}


def _int(value, path, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return value


def config_from_dict(raw, default_name="scenario"):
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "scenario must be a mapping")
    extra = sorted(set(raw) - _TOP_KEYS)
    if extra:
        raise ConfigError(extra[0], "unknown key")

    table = dict(OUTLETS)
    for oname, row in (raw.get("outlets") or {}).items():
        path = f"outlets.{oname}"
        if not isinstance(row, dict):
            raise ConfigError(path, "expected a mapping")
        try:
            table[oname] = OutletSpec(
                oname, *(_number(row.get(k), f"{path}.{k}")
                         for k in ("voltage", "current", "power", "replenish_rate"))
            )
        except InvalidParameterError as exc:
            raise ConfigError(path, str(exc)) from None
    try:
        outlet = outlet_lookup(raw.get("outlet", "Standard"), table)
    except UnknownOutletError as exc:
        raise ConfigError("outlet", exc.args[0]) from None

    if "arrival" not in raw:
        raise ConfigError("arrival", "missing")
    arrival = parse_distribution(raw["arrival"], "arrival")
    charge = distance = None
    if "charge_time" in raw:
        charge = parse_distribution(raw["charge_time"], "charge_time")
    if "distance" in raw:
        distance = parse_distribution(raw["distance"], "distance")
    if (charge is None) == (distance is None):
        raise ConfigError("charge_time", "give exactly one of charge_time or distance")

    resolution = _number(raw.get("resolution", 0.05), "resolution")
    n_bins = round(24.0 / resolution) if resolution > 0 else 0
    if resolution <= 0 or abs(n_bins * resolution - 24.0) > 1e-9:
        raise ConfigError("resolution", f"{resolution} h does not divide 24 h evenly")

    mode = raw.get("distance_mode", "rate")
    if mode not in ("rate", "energy"):
        raise ConfigError("distance_mode", "must be 'rate' or 'energy'")
    kwh = _number(raw.get("kwh_per_mile", DEFAULT_KWH_PER_MILE), "kwh_per_mile")
    if kwh <= 0:
        raise ConfigError("kwh_per_mile", "must be > 0")
    power = raw.get("power_kw")
    if power is not None:
        power = _number(power, "power_kw")
        if power <= 0:
            raise ConfigError("power_kw", "must be > 0")

    cfg = ScenarioConfig(
        name=str(raw.get("name", default_name)),
        fleet_size=_int(raw.get("fleet_size", 100_000), "fleet_size", 1),
        arrival=arrival,
        charge_time=charge,
        distance=distance,
        outlet=outlet,
        power=power,
        kwh_per_mile=kwh,
        distance_mode=mode,
        resolution=resolution,
        seed=_int(raw.get("seed", 0), "seed", 0),
        fold_window=_int(raw.get("fold_window", 2), "fold_window", 1),
        block_size=_int(raw.get("block_size", 10_000), "block_size", 1),
        notes=tuple(raw.get("notes") or ()),
    )
    if distance is not None:
        try:
            cfg.charge_time_distribution()
        except InvalidParameterError as exc:
            raise ConfigError("distance", str(exc)) from None

    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            cfg = cfg.with_seed(int(env_seed))
        except ValueError:
            raise ConfigError(SEED_ENV, f"cannot read {env_seed!r} as an integer") from None
    return cfg


def load_config(path):
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    stem = os.path.splitext(os.path.basename(path))[0]
    return config_from_dict(raw, default_name=stem)


def preset_names():
    files = resources.files("phevdemand.presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def preset_text(name):
    res = resources.files("phevdemand.presets") / f"{name}.yaml"
    if not res.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return res.read_text()


def load_preset(name):
    return config_from_dict(yaml.safe_load(preset_text(name)), default_name=name)
