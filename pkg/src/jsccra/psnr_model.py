"""Table-driven PSNR surrogate f(o, snr) with bilinear interpolation and its inverse.

The shipped default table is SYNTHETIC: saturating PSNR-vs-SNR curves ordered by
compression ratio. It is not fitted to any trained JSCC model. Every entry point
accepts a user-supplied table in the same CSV format.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ModelError
from .scenario import DEFAULT_CR_SET

DEFAULT_TOL_DB = 0.01
_GRID_EPS = 1e-12

# Synthetic curve family: psnr = floor + (ceil - floor) * (1 - exp(-snr / tau)),
# with floor/ceil affine in n = 48 * cr (symbols per 48 source symbols, 1..8).
SYNTH_FLOOR = (13.0, 0.9)
SYNTH_CEIL = (20.0, 1.25)
SYNTH_TAU_DB = 6.0


@dataclass(frozen=True, eq=False)
class PsnrModel:
    cr_grid: np.ndarray
    snr_grid_db: np.ndarray
    psnr_table_db: np.ndarray

    def __post_init__(self):
        cr = np.array(self.cr_grid, dtype=float)
        snr = np.array(self.snr_grid_db, dtype=float)
        table = np.array(self.psnr_table_db, dtype=float)
        if cr.ndim != 1 or snr.ndim != 1 or cr.size < 1 or snr.size < 2:
            raise ModelError("cr_grid needs >= 1 node and snr_grid_db >= 2 nodes")
        if table.shape != (cr.size, snr.size):
            raise ModelError(f"table shape {table.shape} != ({cr.size}, {snr.size})")
        if np.any(np.diff(cr) <= 0) or np.any(np.diff(snr) <= 0):
            raise ModelError("grids must be strictly increasing")
        if not (np.all(np.isfinite(table)) and np.all(np.isfinite(cr)) and np.all(np.isfinite(snr))):
            raise ModelError("grids and table must be finite")
        if cr[0] <= 0 or cr[-1] > 1:
            raise ModelError("compression ratios must lie in (0, 1]")
        bad = np.argwhere(np.diff(table, axis=1) < 0)
        cr_, snr_, table_ = cr.tolist(), snr.tolist(), table.tolist()
        if bad.size:
            i, j = bad[0]
            raise ModelError(
                f"PSNR decreases in SNR at cr={cr_[i]!r}: snr {snr_[j]!r} -> {snr_[j + 1]!r} "
                f"({table_[i][j]!r} -> {table_[i][j + 1]!r})"
            )
        bad = np.argwhere(np.diff(table, axis=0) < 0)
        if bad.size:
            i, j = bad[0]
            raise ModelError(
                f"PSNR decreases in compression ratio at snr={snr_[j]!r}: "
                f"cr {cr_[i]!r} -> {cr_[i + 1]!r} ({table_[i][j]!r} -> {table_[i + 1][j]!r})"
            )
        for name, arr in (("cr_grid", cr), ("snr_grid_db", snr), ("psnr_table_db", table)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, PsnrModel):
            return NotImplemented
        return (
            np.array_equal(self.cr_grid, other.cr_grid)
            and np.array_equal(self.snr_grid_db, other.snr_grid_db)
            and np.array_equal(self.psnr_table_db, other.psnr_table_db)
        )

    @property
    def snr_min(self):
        return float(self.snr_grid_db[0])

    @property
    def snr_max(self):
        return float(self.snr_grid_db[-1])

    def row(self, o):
        """PSNR nodes along the SNR grid for compression ratio ``o`` (linear in cr)."""
        o = float(o)
        cr = self.cr_grid
        if not (cr[0] - _GRID_EPS <= o <= cr[-1] + _GRID_EPS):
            raise DomainError(f"compression ratio {o} outside model grid [{cr[0]}, {cr[-1]}]")
        if cr.size == 1:
            return self.psnr_table_db[0]
        i = int(np.clip(np.searchsorted(cr, o, side="right") - 1, 0, cr.size - 2))
        w = min(max((o - cr[i]) / (cr[i + 1] - cr[i]), 0.0), 1.0)
        if w == 0.0:
            return self.psnr_table_db[i]
        if w == 1.0:
            return self.psnr_table_db[i + 1]
        return (1.0 - w) * self.psnr_table_db[i] + w * self.psnr_table_db[i + 1]

    def evaluate(self, o, snr_db):
        """Bilinear PSNR (dB) at (o, snr_db); SNR outside the grid is clamped."""
        value = np.interp(snr_db, self.snr_grid_db, self.row(o))
        return float(value) if np.ndim(value) == 0 else value

    def min_snr_for_psnr(self, o, eta_db, tol=DEFAULT_TOL_DB):
        return min_snr_search(self, o, eta_db, tol).snr_db


class SnrSearch(NamedTuple):
    snr_db: float | None
    iterations: int


def min_snr_search(model, o, eta_db, tol=DEFAULT_TOL_DB):
    """Bisection for the smallest SNR with f(o, snr) >= eta_db on the model's SNR range.

    Returns ``snr_db=None`` when the target is out of reach at the top of the grid.
    After bracketing to width ``tol`` the root is refined with one secant step,
    which is exact when the bracket lies inside one interpolation segment.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    row = model.row(o)
    snr = model.snr_grid_db
    f = lambda x: float(np.interp(x, snr, row))  # noqa: E731
    lo, hi = model.snr_min, model.snr_max
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > f_hi:
        raise ModelError(f"model is not monotone in SNR at cr={float(o)}")
    if eta_db <= f_lo:
        return SnrSearch(lo, 0)
    if eta_db > f_hi:
        return SnrSearch(None, 0)
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid >= eta_db:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
        iterations += 1
    if f_hi > f_lo:
        x = lo + (eta_db - f_lo) * (hi - lo) / (f_hi - f_lo)
        if lo <= x <= hi and f(x) >= eta_db:
            return SnrSearch(x, iterations)
    return SnrSearch(hi, iterations)


def bisection_iteration_bound(model, tol=DEFAULT_TOL_DB):
    return math.ceil(math.log2((model.snr_max - model.snr_min) / tol)) + 1


def evaluate(model, o, snr_db):
    return model.evaluate(o, snr_db)


def min_snr_for_psnr(model, o, eta_db, tol=DEFAULT_TOL_DB):
    return min_snr_search(model, o, eta_db, tol).snr_db


def synthetic_table(cr_grid=DEFAULT_CR_SET, snr_grid_db=None):
    """The SYNTHETIC default surrogate evaluated on a grid."""
    if snr_grid_db is None:
        snr_grid_db = np.arange(0.0, 21.0, 1.0)
    cr = np.array([float(c) for c in cr_grid])
    snr = np.asarray(snr_grid_db, dtype=float)
    n = 48.0 * cr[:, None]
    floor = SYNTH_FLOOR[0] + SYNTH_FLOOR[1] * n
    ceil = SYNTH_CEIL[0] + SYNTH_CEIL[1] * n
    table = floor + (ceil - floor) * (1.0 - np.exp(-snr[None, :] / SYNTH_TAU_DB))
    return PsnrModel(cr, snr, np.round(table, 6))


def dumps_model(model):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cr", "snr_db", "psnr_db"])
    for i, o in enumerate(model.cr_grid):
        for j, s in enumerate(model.snr_grid_db):
            writer.writerow([repr(float(o)), repr(float(s)), repr(float(model.psnr_table_db[i, j]))])
    return buf.getvalue()


def loads_model(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["cr", "snr_db", "psnr_db"]:
        raise ModelError("model table must start with header 'cr,snr_db,psnr_db'")
    nodes = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ModelError(f"line {lineno}: expected 3 columns, got {len(row)}")
        try:
            o, s, p = (float(cell) for cell in row)
        except ValueError:
            raise ModelError(f"line {lineno}: non-numeric value in {row}") from None
        if (o, s) in nodes:
            raise ModelError(f"line {lineno}: duplicate node cr={o}, snr_db={s}")
        nodes[(o, s)] = p
    if not nodes:
        raise ModelError("model table has no rows")
    crs = sorted({o for o, _ in nodes})
    snrs = sorted({s for _, s in nodes})
    table = np.empty((len(crs), len(snrs)))
    for i, o in enumerate(crs):
        for j, s in enumerate(snrs):
            if (o, s) not in nodes:
                raise ModelError(f"incomplete grid: missing node cr={o}, snr_db={s}")
            table[i, j] = nodes[(o, s)]
    return PsnrModel(np.array(crs), np.array(snrs), table)


def load_model(path=None):
    """Load a model table; ``None`` loads the shipped synthetic default."""
    if path is None:
        text = resources.files("jsccra").joinpath("data/psnr_synthetic.csv").read_text()
    else:
        text = Path(path).read_text()
    return loads_model(text)


def save_model(model, path):
    Path(path).write_text(dumps_model(model))


def default_model():
    return load_model(None)
