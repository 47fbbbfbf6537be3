"""System configuration, user drops and their JSON serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, SchemaError

# CR options in increasing order: 1/48, 1/24, 1/16, 1/12, 5/48, 1/8, 7/48, 1/6
DEFAULT_CR_SET = tuple(sorted(Fraction(n, 48) for n in (8, 7, 6, 5, 4, 3, 2, 1)))


def dbm_to_watt(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    raise ConfigError(f"cr_set: cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class SystemConfig:
    num_users: int = 30
    num_rbs: int = 30
    num_subchannels: int = 100
    bandwidth_hz: float = 3e6
    symbol_duration_s: float = 33.3e-6
    noise_power_w: float = dbm_to_watt(-114.0)
    bs_power_w: float = 1.0
    cell_radius_m: float = 500.0
    source_symbols: int = 3072
    cr_set: tuple = DEFAULT_CR_SET
    rng_seed: int = 0
    delay_range_s: tuple = (4e-3, 6e-3)
    psnr_range_db: tuple = (20.0, 25.0)
    shadowing_max_db: float = 10.0
    min_distance_m: float = 1.0
    # When set, each user draws T_k (or eta_k) uniformly from these values instead of the range.
    delay_classes_s: tuple | None = None
    psnr_classes_db: tuple | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "cr_set", tuple(_as_fraction(c) for c in self.cr_set))
        set_(self, "delay_range_s", tuple(float(v) for v in self.delay_range_s))
        set_(self, "psnr_range_db", tuple(float(v) for v in self.psnr_range_db))
        if self.delay_classes_s is not None:
            set_(self, "delay_classes_s", tuple(float(v) for v in self.delay_classes_s))
        if self.psnr_classes_db is not None:
            set_(self, "psnr_classes_db", tuple(float(v) for v in self.psnr_classes_db))
        self.validate()

    def validate(self):
        for name in ("num_users", "num_rbs", "num_subchannels", "source_symbols", "rng_seed"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.num_users < 0:
            raise ConfigError("num_users must be >= 0")
        if self.num_rbs < 1 or self.num_subchannels < 1:
            raise ConfigError("num_rbs and num_subchannels must be >= 1")
        if self.num_subchannels // self.num_rbs < 1:
            raise ConfigError("subchannels_per_rb = floor(S/M) must be >= 1")
        for name in ("bandwidth_hz", "symbol_duration_s", "noise_power_w", "cell_radius_m",
                     "source_symbols", "min_distance_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and strictly positive, got {value!r}")
        if not (math.isfinite(self.bs_power_w) and self.bs_power_w >= 0):
            raise ConfigError(f"bs_power_w must be finite and >= 0, got {self.bs_power_w!r}")
        if not (0 <= self.shadowing_max_db < math.inf):
            raise ConfigError("shadowing_max_db must be finite and >= 0")
        if self.min_distance_m > self.cell_radius_m:
            raise ConfigError("min_distance_m must not exceed cell_radius_m")
        if not self.cr_set:
            raise ConfigError("cr_set must be nonempty")
        if any(c <= 0 or c > 1 for c in self.cr_set):
            raise ConfigError("every cr_set element must lie in (0, 1]")
        if any(a >= b for a, b in zip(self.cr_set, self.cr_set[1:])):
            raise ConfigError("cr_set must be strictly increasing")
        lo, hi = self.delay_range_s
        if not (0 < lo <= hi):
            raise ConfigError("delay_range_s must satisfy 0 < low <= high")
        lo, hi = self.psnr_range_db
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ConfigError("psnr_range_db must be finite with low <= high")
        if self.delay_classes_s is not None and (
            not self.delay_classes_s or min(self.delay_classes_s) <= 0
        ):
            raise ConfigError("delay_classes_s must be nonempty and strictly positive")
        if self.psnr_classes_db is not None and (
            not self.psnr_classes_db or not all(map(math.isfinite, self.psnr_classes_db))
        ):
            raise ConfigError("psnr_classes_db must be nonempty and finite")

    @property
    def subchannels_per_rb(self):
        return self.num_subchannels // self.num_rbs

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SystemConfig(**values)

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "cr_set":
                value = [str(c) for c in value]
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError("config", f"unknown fields {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise SchemaError("config", str(exc)) from None


@dataclass(frozen=True, eq=False)
class User:
    id: int
    distance_m: float
    delay_bound_s: float
    psnr_bound_db: float
    channel_gain_sq: np.ndarray = field(repr=False)

    def __post_init__(self):
        gains = np.array(self.channel_gain_sq, dtype=float)
        if gains.ndim != 1:
            raise ConfigError(f"user {self.id}: channel_gain_sq must be a vector")
        if not np.all(np.isfinite(gains)) or np.any(gains < 0):
            raise ConfigError(f"user {self.id}: channel gains must be finite and >= 0")
        if not self.delay_bound_s > 0:
            raise ConfigError(f"user {self.id}: delay bound T_k must be > 0")
        if not math.isfinite(self.psnr_bound_db):
            raise ConfigError(f"user {self.id}: PSNR bound must be finite")
        gains.setflags(write=False)
        object.__setattr__(self, "channel_gain_sq", gains)

    def __eq__(self, other):
        if not isinstance(other, User):
            return NotImplemented
        return (
            self.id == other.id
            and self.distance_m == other.distance_m
            and self.delay_bound_s == other.delay_bound_s
            and self.psnr_bound_db == other.psnr_bound_db
            and np.array_equal(self.channel_gain_sq, other.channel_gain_sq)
        )

    def rb_gains(self, rb, config):
        s0 = config.subchannels_per_rb
        return self.channel_gain_sq[rb * s0:(rb + 1) * s0]


@dataclass(frozen=True)
class Scenario:
    config: SystemConfig
    users: tuple

    def __post_init__(self):
        users = tuple(self.users)
        object.__setattr__(self, "users", users)
        if len(users) != self.config.num_users:
            raise ConfigError(
                f"scenario has {len(users)} users but config.num_users = {self.config.num_users}"
            )
        for k, user in enumerate(users):
            if user.id != k:
                raise ConfigError(f"user ids must be dense 0..K-1; position {k} has id {user.id}")
            if user.channel_gain_sq.shape != (self.config.num_subchannels,):
                raise ConfigError(
                    f"user {k}: expected {self.config.num_subchannels} channel gains, "
                    f"got {user.channel_gain_sq.shape[0]}"
                )

    @property
    def gains(self):
        """K x S matrix of |h_{k,s}|^2."""
        if not self.users:
            return np.zeros((0, self.config.num_subchannels))
        return np.stack([u.channel_gain_sq for u in self.users])

    def with_config(self, **changes):
        """Same users under a modified config (e.g. another power budget)."""
        return Scenario(self.config.replace(**changes), self.users)

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "users": [
                {
                    "id": u.id,
                    "distance_m": u.distance_m,
                    "delay_bound_s": u.delay_bound_s,
                    "psnr_bound_db": u.psnr_bound_db,
                    "channel_gain_sq": [float(g) for g in u.channel_gain_sq],
                }
                for u in self.users
            ],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise SchemaError("$", "expected an object")
        for key in ("config", "users"):
            if key not in data:
                raise SchemaError(key, "missing")
        config = SystemConfig.from_dict(data["config"])
        users = []
        for i, raw in enumerate(data["users"]):
            uid = raw.get("id", i) if isinstance(raw, dict) else i
            where = f"users[{i}] (id {uid})"
            if not isinstance(raw, dict):
                raise SchemaError(where, "expected an object")
            for key in ("id", "distance_m", "delay_bound_s", "psnr_bound_db", "channel_gain_sq"):
                if key not in raw:
                    raise SchemaError(f"{where}.{key}", "missing")
            gains = raw["channel_gain_sq"]
            if not isinstance(gains, list) or len(gains) != config.num_subchannels:
                raise SchemaError(
                    f"{where}.channel_gain_sq",
                    f"expected a list of {config.num_subchannels} numbers",
                )
            users.append(
                User(
                    id=int(raw["id"]),
                    distance_m=float(raw["distance_m"]),
                    delay_bound_s=float(raw["delay_bound_s"]),
                    psnr_bound_db=float(raw["psnr_bound_db"]),
                    channel_gain_sq=np.asarray(gains, dtype=float),
                )
            )
        return cls(config, tuple(users))


def pathloss_db(distance_m):
    """Macro-cell pathloss 128.1 + 37.6 log10(d[km]) in dB."""
    return 128.1 + 37.6 * np.log10(np.asarray(distance_m, dtype=float) / 1000.0)


def channel_gain_sq(distance_m, shadowing_db, fading_sq):
    """Linear |h|^2 from distance, shadowing loss (dB) and small-scale |g|^2."""
    return 10.0 ** (-(pathloss_db(distance_m) + shadowing_db) / 10.0) * np.asarray(fading_sq)


def _pick(u, value_range, classes):
    """Map one uniform draw to a class value (equiprobable) or a point in the range.

    Both branches consume the same single draw, so switching between a range and
    a class list leaves every later draw of the user unchanged.
    """
    if classes is not None:
        return classes[min(int(u * len(classes)), len(classes) - 1)]
    lo, hi = value_range
    return lo + (hi - lo) * u


def _draw_user(config, k):
    # Per-user substream: user k's draws do not depend on K.
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(config.rng_seed, spawn_key=(k,)))
    )
    r_min, r_max = config.min_distance_m, config.cell_radius_m
    distance = math.sqrt(r_min**2 + rng.random() * (r_max**2 - r_min**2))
    shadowing = rng.uniform(0.0, config.shadowing_max_db)
    delay = _pick(rng.random(), config.delay_range_s, config.delay_classes_s)
    eta = _pick(rng.random(), config.psnr_range_db, config.psnr_classes_db)
    g = rng.standard_normal((config.num_subchannels, 2))
    fading = 0.5 * (g[:, 0] ** 2 + g[:, 1] ** 2)
    return User(
        id=k,
        distance_m=distance,
        delay_bound_s=float(delay),
        psnr_bound_db=float(eta),
        channel_gain_sq=channel_gain_sq(distance, shadowing, fading),
    )


def generate_scenario(config):
    """Drop ``config.num_users`` users uniformly in the cell and draw their channels."""
    config.validate()
    return Scenario(config, tuple(_draw_user(config, k) for k in range(config.num_users)))


def save_scenario(scenario, path):
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=1) + "\n")


def load_scenario(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return Scenario.from_dict(data)


def load_config(path):
    data = json.loads(Path(path).read_text())
    return SystemConfig.from_dict(data)
