"""Monte Carlo sweeps over BS power, user count and QoS classes, with CSV output.

Every drop is one scenario seeded from ``(master_seed, drop index)``; all
methods and all swept values of a drop see that same scenario, so per-drop
comparisons between methods are paired.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .baselines import Allocator, parse_method
from .errors import ConfigError, SchemaError
from .psnr_model import default_model, load_model
from .scenario import SystemConfig, generate_scenario

log = logging.getLogger(__name__)

SWEPT_VARS = ("bs_power", "delay_classes", "psnr_classes", "user_count")
CSV_COLUMNS = ("method", "swept_var", "swept_value", "class", "mean_supported",
               "mean_access_ratio", "std_supported", "num_drops")
WORKERS_ENV = "JSCCRA_WORKERS"
ALL_USERS = "all"


def default_powers():
    """Ten log-spaced budgets from 0.01 W to 1 W."""
    return tuple(float(p) for p in np.logspace(-2, 0, 10))


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep, over how many drops, and with which allocators.

    For ``bs_power`` and the two class sweeps ``values`` are budgets in watts;
    for ``user_count`` they are values of K at the budget ``config.bs_power_w``.
    Class sweeps draw each user's delay bound (or PSNR bound) uniformly from
    ``classes`` and report the access ratio per class.
    """

    config: SystemConfig = field(default_factory=SystemConfig)
    swept_var: str = "bs_power"
    values: tuple = field(default_factory=default_powers)
    num_drops: int = 100
    methods: tuple = ("optimal",)
    master_seed: int = 0
    classes: tuple | None = None
    backend: str = "flow"
    uniform_share: str = "user"
    model_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(float(c) for c in self.classes))
        self.validate()

    def validate(self):
        if self.swept_var not in SWEPT_VARS:
            raise ConfigError(f"swept_var must be one of {SWEPT_VARS}, got {self.swept_var!r}")
        if not self.values:
            raise ConfigError("sweep value list must be nonempty")
        if int(self.num_drops) != self.num_drops or self.num_drops < 1:
            raise ConfigError(f"num_drops must be an integer >= 1, got {self.num_drops!r}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            parse_method(m)
        if self.backend not in ("flow", "lp"):
            raise ConfigError(f"backend must be 'flow' or 'lp', got {self.backend!r}")
        if self.uniform_share not in ("user", "rb"):
            raise ConfigError(f"uniform_share must be 'user' or 'rb', got {self.uniform_share!r}")
        if self.swept_var == "user_count":
            if any(int(v) != v or v < 1 for v in self.values):
                raise ConfigError("user_count values must be integers >= 1")
        elif any(not (np.isfinite(v) and v >= 0) for v in self.values):
            raise ConfigError("power values must be finite and >= 0")
        if self.swept_var in ("delay_classes", "psnr_classes") and not self.classes:
            raise ConfigError(f"{self.swept_var} sweep needs a nonempty 'classes' list")

    @property
    def axis(self):
        """Name of the quantity on the x axis, as written to the CSV."""
        return "user_count" if self.swept_var == "user_count" else "bs_power"

    def drop_config(self, drop):
        """Config for drop ``drop`` with its seed and class sets filled in."""
        seed = int(np.random.SeedSequence((self.master_seed, drop)).generate_state(1)[0])
        config = self.config.replace(rng_seed=seed)
        if self.swept_var == "delay_classes":
            config = config.replace(delay_classes_s=self.classes)
        elif self.swept_var == "psnr_classes":
            config = config.replace(psnr_classes_db=self.classes)
        return config

    def pairing_seed(self, drop):
        return int(np.random.SeedSequence((self.master_seed, drop)).generate_state(2)[1])

    def class_labels(self):
        if self.swept_var == "delay_classes":
            return tuple(f"T={c * 1e3:g}ms" for c in self.classes)
        if self.swept_var == "psnr_classes":
            return tuple(f"eta={c:g}dB" for c in self.classes)
        return (ALL_USERS,)

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["config"] = self.config.to_dict()
        for key in ("values", "methods", "classes"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise SchemaError("$", "expected an object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError("spec", f"unknown fields {sorted(unknown)}")
        data = dict(data)
        if "config" in data:
            data["config"] = SystemConfig.from_dict(data["config"])
        if data.get("values") == "default":
            data["values"] = default_powers()
        return cls(**data)


def load_spec(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return SweepSpec.from_dict(data)


def save_spec(spec, path):
    Path(path).write_text(json.dumps(spec.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class SweepRow:
    method: str
    swept_var: str
    swept_value: float
    class_label: str
    mean_supported: float
    mean_access_ratio: float
    std_supported: float
    num_drops: int


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Aggregated rows plus the raw per-drop samples they came from.

    ``supported`` and ``population`` have shape (drops, methods, values, classes);
    a class absent from a drop has population 0 and is left out of its mean.
    """

    spec: SweepSpec
    rows: tuple
    supported: np.ndarray
    population: np.ndarray

    def samples(self, method, class_label=ALL_USERS):
        """(drops, values) supported counts for one method and class."""
        i = self.spec.methods.index(method)
        c = self.spec.class_labels().index(class_label)
        return self.supported[:, i, :, c]

    def access_ratio(self, method, class_label=ALL_USERS):
        """(drops, values) per-drop access ratios, NaN where the class is empty."""
        c = self.spec.class_labels().index(class_label)
        pop = self.population[:, :, c]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(pop > 0, self.samples(method, class_label) / pop, np.nan)

    def mean_curve(self, method, class_label=ALL_USERS, column="mean_supported"):
        return np.array([getattr(r, column) for r in self.rows
                         if r.method == method and r.class_label == class_label])


def _run_drop(spec, model, drop):
    """Supported counts (methods, values, classes) and class populations (values, classes)."""
    config = spec.drop_config(drop)
    labels = spec.class_labels()
    supported = np.zeros((len(spec.methods), len(spec.values), len(labels)), dtype=int)
    population = np.zeros((len(spec.values), len(labels)), dtype=int)
    seed = spec.pairing_seed(drop)
    if spec.axis == "bs_power":
        scenario = generate_scenario(config)
        cases = [(scenario, p) for p in spec.values]
    else:
        cases = [(generate_scenario(config.replace(num_users=int(k))), None) for k in spec.values]
    allocator = None
    for v, (scenario, budget) in enumerate(cases):
        if allocator is None or allocator.scenario is not scenario:
            allocator = Allocator(scenario, model, spec.backend, seed, spec.uniform_share)
        if spec.classes is None:
            members = [np.ones(scenario.config.num_users, dtype=bool)]
        else:
            attr = "delay_bound_s" if spec.swept_var == "delay_classes" else "psnr_bound_db"
            values = np.array([getattr(u, attr) for u in scenario.users])
            members = [values == c for c in spec.classes]
        population[v] = [m.sum() for m in members]
        for i, method in enumerate(spec.methods):
            utilities = allocator.run(method, budget).utilities
            supported[i, v] = [utilities[m].sum() for m in members]
    return supported, population


def _worker_count(workers):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def _aggregate(spec, supported, population):
    rows = []
    labels = spec.class_labels()
    for i, method in enumerate(spec.methods):
        for c, label in enumerate(labels):
            for v, value in enumerate(spec.values):
                pop = population[:, v, c]
                used = pop > 0
                counts = supported[used, i, v, c].astype(float)
                n = int(used.sum())
                if n == 0:
                    mean = ratio = std = float("nan")
                else:
                    mean = float(counts.mean())
                    ratio = float((counts / pop[used]).mean())
                    std = float(counts.std())
                rows.append(SweepRow(method, spec.axis, float(value), label, mean, ratio, std, n))
    return tuple(rows)


def run_sweep(spec, workers=None, model=None):
    """Run every method on ``spec.num_drops`` drops and aggregate per swept value.

    ``workers`` defaults to the ``JSCCRA_WORKERS`` environment variable (1 if unset).
    Results do not depend on the worker count.
    """
    spec.validate()
    if model is None:
        model = default_model() if spec.model_path is None else load_model(spec.model_path)
    workers = _worker_count(workers)
    drops = range(spec.num_drops)
    log.info("sweep %s: %d drops x %d values x %d methods on %d worker(s)",
             spec.swept_var, spec.num_drops, len(spec.values), len(spec.methods), workers)
    if workers == 1:
        outputs = [_run_drop(spec, model, d) for d in drops]
    else:
        with ProcessPoolExecutor(workers) as pool:
            outputs = list(pool.map(_run_drop, [spec] * len(drops), [model] * len(drops), drops))
    supported = np.stack([o[0] for o in outputs])
    population = np.stack([o[1] for o in outputs])
    return SweepResult(spec, _aggregate(spec, supported, population), supported, population)


def class_sweep_delay(spec, delays_s=(4e-3, 5e-3, 6e-3), eta_db=24.0, **kwargs):
    """Access ratio per delay class with every user's PSNR bound fixed at ``eta_db``."""
    config = spec.config.replace(psnr_range_db=(eta_db, eta_db), psnr_classes_db=None)
    return run_sweep(replace(spec, config=config, swept_var="delay_classes",
                             classes=tuple(delays_s)), **kwargs)


def class_sweep_psnr(spec, etas_db=(21.0, 23.0, 25.0), delay_s=5e-3, **kwargs):
    """Access ratio per PSNR class with every user's delay bound fixed at ``delay_s``."""
    config = spec.config.replace(delay_range_s=(delay_s, delay_s), delay_classes_s=None)
    return run_sweep(replace(spec, config=config, swept_var="psnr_classes",
                             classes=tuple(etas_db)), **kwargs)


def _fmt(value):
    if isinstance(value, str):
        return value
    return "%.15g" % value


def dumps_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r.method, r.swept_var, _fmt(r.swept_value), r.class_label,
                         _fmt(r.mean_supported), _fmt(r.mean_access_ratio),
                         _fmt(r.std_supported), r.num_drops])
    return buf.getvalue()


def emit_csv(result, sink):
    """Write ``result`` (a SweepResult or rows) to a path or text stream, replacing any content."""
    rows = result.rows if isinstance(result, SweepResult) else result
    text = dumps_csv(rows)
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def loads_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise SchemaError("header", f"expected {','.join(CSV_COLUMNS)}")
    return [
        SweepRow(m, var, float(v), label, float(s), float(a), float(sd), int(n))
        for m, var, v, label, s, a, sd, n in reader
    ]


def read_csv(path):
    return loads_csv(Path(path).read_text())
