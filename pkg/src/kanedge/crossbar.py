"""Behavioral analog crossbar with bit-line IR drop.

Signed 8-bit weights become differential conductance pairs (two physical
columns per logical column, outputs subtracted), so cells stay unsigned.
Input levels drive cells as source voltages proportional to the level; the
ideal MAC is then a plain integer dot product scaled by ``g_unit * v_read``.

With nonzero wire resistance each bit line is a 1-D resistive ladder: node k
sits k+1 segments from the clamp (position 0 nearest), every cell injects
``G_cell * (v_drive - v_node)``, and the clamp holds its end at the read
reference. The resulting tridiagonal system is solved exactly by direct
elimination, so rows far from the clamp deliver strictly less current - the
effect the row-ordering strategy exploits.

Internal unit system: conductance in uS, voltage in V, current in uA,
resistance in Ohm (the Ohm -> MOhm factor is folded into the wire term).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

WEIGHT_MAX = 127  # signed 8-bit symmetric


@dataclass(frozen=True)
class CrossbarConfig:
    rows: int
    cols: int
    g_unit: float = 0.5  # uS per weight LSB
    r_wire: float = 0.0  # Ohm per cell segment
    v_read: float = 0.005  # V per input level step
    adc_bits: int = 8
    input_max: int = 63  # largest word-line level the encoder can deliver
    error_table: dict | None = None  # rows -> (gain, sigma rel. to full scale)
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if self.g_unit <= 0 or self.v_read <= 0:
            raise ValueError("g_unit and v_read must be > 0")
        if self.r_wire < 0:
            raise ConfigError("r_wire must be >= 0")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")
        if self.input_max < 1:
            raise ValueError("input_max must be >= 1")


@dataclass
class ProgrammedArray:
    """Weights placed on the physical array: ``row_order[p]`` is the logical
    row sitting at physical position ``p`` (0 = nearest the clamp)."""

    weights: np.ndarray  # (rows, cols) signed ints, logical order
    row_order: np.ndarray  # permutation of [0, rows)
    cfg: CrossbarConfig
    g_pos: np.ndarray = field(init=False)  # (rows, cols) uS, physical order
    g_neg: np.ndarray = field(init=False)
    full_scale: np.ndarray = field(init=False)  # per logical column, uA

    def __post_init__(self):
        w = np.asarray(self.weights)
        order = np.asarray(self.row_order, dtype=np.int64)
        if w.shape != (self.cfg.rows, self.cfg.cols):
            raise ValueError(f"weights shape {w.shape} != {(self.cfg.rows, self.cfg.cols)}")
        if not np.issubdtype(w.dtype, np.integer):
            raise ValueError("weights must be integers")
        if np.any(np.abs(w) > WEIGHT_MAX):
            raise ValueError(f"weights must lie in [-{WEIGHT_MAX}, {WEIGHT_MAX}]")
        if sorted(order.tolist()) != list(range(self.cfg.rows)):
            raise ValueError("row_order is not a permutation of [0, rows)")
        self.weights = w.astype(np.int64)
        self.row_order = order
        phys = self.weights[order]  # physical position p holds logical row order[p]
        self.g_pos = np.maximum(phys, 0) * self.cfg.g_unit
        self.g_neg = np.maximum(-phys, 0) * self.cfg.g_unit
        self.full_scale = (
            np.abs(self.weights).sum(axis=0)
            * self.cfg.g_unit
            * self.cfg.v_read
            * self.cfg.input_max
        ).astype(np.float64)

    def read_back(self) -> np.ndarray:
        """Decode the differential pairs back to signed weights."""
        phys = (self.g_pos - self.g_neg) / self.cfg.g_unit
        logical = np.empty_like(phys)
        logical[self.row_order] = phys
        return np.rint(logical).astype(np.int64)


@dataclass(frozen=True)
class MacResult:
    ideal: np.ndarray  # exact integer dot product per logical column
    analog: np.ndarray  # uA at the clamp (post-IR, pre-ADC)
    adc_code: np.ndarray


def program(weights, row_order, cfg: CrossbarConfig) -> ProgrammedArray:
    """Program signed weights with a physical row placement.

    Validates the worst-case single-cell headroom: the drop across the whole
    line at the largest cell current must stay below the largest drive.
    """
    arr = ProgrammedArray(np.asarray(weights), np.asarray(row_order), cfg)
    i_cell_max = WEIGHT_MAX * cfg.g_unit * cfg.v_read * cfg.input_max  # uA
    drive_max = cfg.v_read * cfg.input_max  # V
    if cfg.rows * cfg.r_wire * i_cell_max * 1e-6 >= drive_max:
        raise ConfigError(
            "wire drop exceeds drive headroom: lower r_wire, g_unit or rows"
        )
    return arr


def identity_order(rows: int) -> np.ndarray:
    return np.arange(rows, dtype=np.int64)


def calibrate_full_scale(
    array: ProgrammedArray, levels: np.ndarray, margin: float = 1.1
) -> ProgrammedArray:
    """Set per-column ADC full scale from the ideal MACs of a calibration
    batch (placement-invariant, so every row ordering sees the same range).

    Runs once at program time; the default worst-case range assumes every
    row at the maximum level, which wastes most ADC codes on sparse
    activation patterns like spline windows.
    """
    ideal = ideal_mac(array, levels)
    peak = np.max(np.abs(ideal), axis=0) if ideal.ndim > 1 else np.abs(ideal)
    fs = peak * (array.cfg.g_unit * array.cfg.v_read) * margin
    array.full_scale = np.maximum(fs.astype(np.float64), 1e-12)
    return array


def ideal_mac(array: ProgrammedArray, inputs) -> np.ndarray:
    """Exact integer MAC per logical column; placement-independent."""
    levels = np.asarray(inputs, dtype=np.int64)
    if levels.shape[-1] != array.cfg.rows:
        raise ValueError(f"expected {array.cfg.rows} input levels, got {levels.shape[-1]}")
    if np.any(levels < 0):
        raise ValueError("input levels must be >= 0")
    return levels @ array.weights


def _ladder_clamp_current(g: np.ndarray, v_drive: np.ndarray, r_wire: float) -> np.ndarray:
    """Clamp current of resistive-ladder bit lines, solved exactly.

    ``g``: (rows, ...) cell conductances in uS (physical order, position 0
    nearest the clamp); ``v_drive``: (rows, ...) cell drive voltages in V.
    One wire segment of ``r_wire`` Ohm separates adjacent positions and the
    clamp. Returns clamp current in uA for each trailing batch index.
    """
    rows = g.shape[0]
    g_seg = 1e6 / r_wire  # uS; uA/V units balance: uS * V = uA
    diag = g + 2.0 * g_seg
    rhs = g * v_drive
    # Thomas elimination: off-diagonals are all -g_seg
    c_prime = np.empty_like(g)
    d_prime = np.empty_like(g)
    c_prime[0] = -g_seg / diag[0] if rows > 1 else 0.0
    d0 = diag[0] if rows > 1 else g[0] + g_seg
    d_prime[0] = rhs[0] / d0
    for k in range(1, rows):
        dk = diag[k] if k < rows - 1 else g[k] + g_seg
        denom = dk + g_seg * c_prime[k - 1]
        c_prime[k] = -g_seg / denom
        d_prime[k] = (rhs[k] + g_seg * d_prime[k - 1]) / denom
    v = np.empty_like(g)
    v[rows - 1] = d_prime[rows - 1]
    for k in range(rows - 2, -1, -1):
        v[k] = d_prime[k] - c_prime[k] * v[k + 1]
    return g_seg * v[0]


def _column_currents(
    array: ProgrammedArray, phys_levels: np.ndarray, conductances: np.ndarray
) -> np.ndarray:
    """IR-drop currents for one polarity: levels (..., rows) physical order,
    conductances (rows, cols). Returns (..., cols) uA."""
    cfg = array.cfg
    levels = np.asarray(phys_levels, dtype=np.float64)
    batch = levels.shape[:-1]
    shape = (cfg.rows,) + batch + (cfg.cols,)
    vd = np.broadcast_to(np.moveaxis(levels, -1, 0)[..., None] * cfg.v_read, shape)
    g = np.broadcast_to(
        conductances.reshape((cfg.rows,) + (1,) * len(batch) + (cfg.cols,)), shape
    )
    return _ladder_clamp_current(g, vd, cfg.r_wire)


def adc_quantize(analog: np.ndarray, full_scale: np.ndarray, adc_bits: int) -> np.ndarray:
    """Uniform quantization over [-fs, +fs] per column."""
    fs = np.maximum(np.asarray(full_scale, dtype=np.float64), 1e-30)
    steps = 2**adc_bits - 1
    code = np.round((np.asarray(analog) + fs) / (2.0 * fs) * steps)
    return np.clip(code, 0, steps).astype(np.int64)


def ir_drop_mac(array: ProgrammedArray, inputs) -> MacResult:
    """MAC through the resistive-ladder bit lines.

    ``inputs`` is one vector of logical row levels or a batch (..., rows).
    With r_wire = 0 the analog output is exactly ``ideal * g_unit * v_read``
    (computed from the integer product, so ADC codes match bit for bit).
    """
    cfg = array.cfg
    levels = np.asarray(inputs, dtype=np.int64)
    ideal = ideal_mac(array, levels)
    if cfg.r_wire == 0.0:
        analog = ideal.astype(np.float64) * (cfg.g_unit * cfg.v_read)
    else:
        phys = np.take(levels, array.row_order, axis=-1).astype(np.float64)
        analog = _column_currents(array, phys, array.g_pos) - _column_currents(
            array, phys, array.g_neg
        )
    return MacResult(
        ideal=ideal,
        analog=analog,
        adc_code=adc_quantize(analog, array.full_scale, cfg.adc_bits),
    )


def _table_entry(error_table: dict, rows: int) -> tuple[float, float]:
    """(gain, sigma) for an array height, linearly interpolated between
    bracketing table sizes."""
    if not error_table:
        raise ConfigError(
            "no partial-sum error statistics: supply an error_table with "
            "measured or synthetic (gain, sigma) entries per array size"
        )
    sizes = sorted(int(s) for s in error_table)
    entries = {int(s): error_table[s] for s in error_table}
    if rows in entries:
        e = entries[rows]
        return float(e["gain"]), float(e["sigma"])
    lo = [s for s in sizes if s < rows]
    hi = [s for s in sizes if s > rows]
    if not lo or not hi:
        raise ConfigError(
            f"error_table covers sizes {sizes}; {rows} rows is out of range"
        )
    a, b = lo[-1], hi[0]
    f = (rows - a) / (b - a)
    ga, sa = float(entries[a]["gain"]), float(entries[a]["sigma"])
    gb, sb = float(entries[b]["gain"]), float(entries[b]["sigma"])
    return ga + f * (gb - ga), sa + f * (sb - sa)


def stochastic_mac(
    array: ProgrammedArray, inputs, rng: np.random.Generator
) -> MacResult:
    """IR-drop MAC plus measured-statistics partial-sum noise:
    ``analog = gain * ir_analog + Normal(0, sigma * full_scale)``."""
    cfg = array.cfg
    base = ir_drop_mac(array, inputs)
    gain, sigma = _table_entry(cfg.error_table, cfg.rows)
    noise = rng.normal(0.0, 1.0, base.analog.shape) * (sigma * array.full_scale)
    analog = gain * base.analog + noise
    return MacResult(
        ideal=base.ideal,
        analog=analog,
        adc_code=adc_quantize(analog, array.full_scale, cfg.adc_bits),
    )


def default_error_table() -> dict:
    """Synthetic partial-sum noise growing with array size. Placeholder
    statistics for experimentation, not measurements of any device."""
    return {
        str(size): {"gain": 1.0, "sigma": 0.002 * size / 128.0}
        for size in (64, 128, 256, 512, 1024, 2048)
    }


def load_error_table(path: str | os.PathLike) -> dict:
    with open(path) as fh:
        table = json.load(fh)
    for size, entry in table.items():
        if "gain" not in entry or "sigma" not in entry:
            raise ConfigError(f"error_table entry {size!r} needs gain and sigma")
    return table


def dump_array_csv(array: ProgrammedArray, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["logical_row", "physical_position"] + [f"w{c}" for c in range(array.cfg.cols)])
        pos_of = np.empty(array.cfg.rows, dtype=np.int64)
        pos_of[array.row_order] = np.arange(array.cfg.rows)
        for r in range(array.cfg.rows):
            writer.writerow([r, int(pos_of[r])] + [int(w) for w in array.weights[r]])


def restore_array_csv(path: str | os.PathLike, cfg: CrossbarConfig) -> ProgrammedArray:
    weights = np.zeros((cfg.rows, cfg.cols), dtype=np.int64)
    order = np.zeros(cfg.rows, dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            r = int(row["logical_row"])
            order[int(row["physical_position"])] = r
            weights[r] = [int(row[f"w{c}"]) for c in range(cfg.cols)]
    return program(weights, order, cfg)
