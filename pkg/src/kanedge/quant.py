"""Grid-aligned power-of-two LUT quantization for spline layers.

Two constraints make one shared lookup table serve every basis function of a
layer:

1. Alignment: the input quantization grid subdivides the knot grid exactly
   (``G * L <= 2**n`` with integer L), so every knot boundary falls on a code
   boundary and all intervals see identical code-to-value correspondences.
2. Power gap: choosing ``L = 2**LD`` splits an input code into a global
   knot-interval index (high bits) and a local table address (low bits) with
   plain bit slicing - no arithmetic decode.

The table itself stores only ceil((K+1)/2) of the K+1 cardinal-spline pieces;
the missing half is recovered through the piece symmetry
``piece(m, t) == piece(K-m, 1-t)``, which the mid-cell code semantics turn
into an exact index reversal.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleError
from .kan import KanLayer
from .splines import SplineGrid, cardinal_piece


def max_subcell_bits(n_intervals: int, n_bits: int) -> int:
    """Largest LD >= 0 with ``n_intervals * 2**LD <= 2**n_bits``.

    2**LD is the number of quantization cells per knot interval.
    """
    if n_intervals < 1 or n_bits < 1:
        raise ValueError("n_intervals and n_bits must be positive")
    if n_intervals > 2**n_bits:
        raise InfeasibleError(
            f"{n_intervals} knot intervals cannot be aligned within {n_bits} input bits"
        )
    ld = 0
    while n_intervals * 2 ** (ld + 1) <= 2**n_bits:
        ld += 1
    return ld


def alignment_ok(n_intervals: int, multiple: int, n_bits: int) -> bool:
    """Does an ``multiple``-cells-per-interval grid fit in ``n_bits``?"""
    if multiple < 1:
        raise ValueError("multiple must be >= 1")
    return n_intervals * multiple <= 2**n_bits


def is_power_of_two(value: int) -> bool:
    """Phase-two eligibility: alignment factors must be powers of two to
    allow bit-sliced decoding."""
    return value >= 1 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class QuantConfig:
    """Quantization contract for one layer: input width, cells-per-interval
    exponent, and the LUT output width (which feeds the input generator)."""

    n_bits: int
    ld: int
    n_intervals: int
    degree: int
    out_bits: int = 6
    signed: bool = False

    def __post_init__(self):
        if self.n_bits < 1 or self.out_bits < 1:
            raise ValueError("bit widths must be positive")
        if self.ld < 0:
            raise ValueError("ld must be >= 0")
        if self.n_intervals * 2**self.ld > 2**self.n_bits:
            raise ValueError(
                f"{self.n_intervals} intervals * 2**{self.ld} cells exceeds "
                f"2**{self.n_bits} codes"
            )

    @classmethod
    def for_grid(
        cls, grid: SplineGrid, n_bits: int = 8, out_bits: int = 6, signed: bool = False
    ) -> "QuantConfig":
        return cls(
            n_bits=n_bits,
            ld=max_subcell_bits(grid.n_intervals, n_bits),
            n_intervals=grid.n_intervals,
            degree=grid.degree,
            out_bits=out_bits,
            signed=signed,
        )

    @property
    def code_count(self) -> int:
        return self.n_intervals * 2**self.ld

    @property
    def level_max(self) -> int:
        return 2**self.out_bits - 1


def quantize_input(x: float, grid: SplineGrid, cfg: QuantConfig) -> int:
    """Map a real input onto its quantization-cell code.

    Knot boundaries land exactly on multiples of 2**LD (the alignment
    property); values outside the domain clamp to the end codes.
    """
    codes = quantize_inputs(np.asarray(x, dtype=np.float64), grid, cfg)
    return int(codes) if np.ndim(x) == 0 else codes


def quantize_inputs(x: np.ndarray, grid: SplineGrid, cfg: QuantConfig) -> np.ndarray:
    if grid.n_intervals != cfg.n_intervals or grid.degree != cfg.degree:
        raise ConfigError("quantization config does not match the grid")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    span = grid.x_max - grid.x_min
    # bias boundaries right by ~1e-9 cells so float knots hit exact multiples
    scaled = (x - grid.x_min) * (cfg.code_count / span)
    return np.clip(np.floor(scaled + 1e-9).astype(np.int64), 0, cfg.code_count - 1)


def zero_code(grid: SplineGrid, cfg: QuantConfig) -> int:
    """Code of x = 0, the zero point of the quantized ReLU residual path."""
    if grid.x_min >= 0.0:
        return 0
    if grid.x_max <= 0.0:
        return cfg.code_count - 1
    return quantize_input(0.0, grid, cfg)


def split_code(code: int, ld: int) -> tuple[int, int]:
    """Bit-slice a code into (knot-interval index, local table address)."""
    return code >> ld, code & ((1 << ld) - 1)


def cell_midpoint(code, grid: SplineGrid, cfg: QuantConfig):
    """Real-valued center of a quantization cell (what a code 'means')."""
    span = grid.x_max - grid.x_min
    return grid.x_min + (np.asarray(code) + 0.5) * span / cfg.code_count


class LutAccessLog:
    """Optional instrumentation: records the identity of every table an
    operation consults, to assert single-table sharing."""

    def __init__(self):
        self.lut_ids: list[int] = []

    def record(self, lut: "SharedLut") -> None:
        self.lut_ids.append(id(lut))

    @property
    def distinct_luts(self) -> int:
        return len(set(self.lut_ids))


@dataclass(frozen=True)
class SharedLut:
    """One quantized table shared by every basis of a layer.

    ``entries[m, l]`` holds piece ``K - m`` sampled at the center of local
    cell ``l`` and rounded to ``out_bits``; only the first ceil((K+1)/2)
    piece rows are stored, the rest follow from symmetry.
    """

    degree: int
    ld: int
    out_bits: int
    entries: np.ndarray  # (stored_pieces, 2**ld) unsigned ints

    @property
    def stored_pieces(self) -> int:
        return (self.degree + 2) // 2

    @property
    def n_local(self) -> int:
        return 2**self.ld

    @property
    def n_entries(self) -> int:
        return self.entries.size

    def lookup(self, m: int, l: int, log: LutAccessLog | None = None) -> int:
        """Quantized value of the basis at offset ``m`` for local cell ``l``;
        offsets past the stored half are read through the index reversal."""
        if not 0 <= m <= self.degree:
            raise ValueError(f"basis offset {m} out of range [0, {self.degree}]")
        if not 0 <= l < self.n_local:
            raise ValueError(f"local index {l} out of range [0, {self.n_local})")
        if log is not None:
            log.record(self)
        if m < self.stored_pieces:
            return int(self.entries[m, l])
        return int(self.entries[self.degree - m, self.n_local - 1 - l])

    def lookup_all(self, l, log: LutAccessLog | None = None) -> np.ndarray:
        """Vectorized lookup of all K+1 offsets for local indices ``l``
        (shape ``l.shape + (K+1,)``)."""
        if log is not None:
            log.record(self)
        l = np.asarray(l, dtype=np.int64)
        ms = np.arange(self.degree + 1)
        direct = ms < self.stored_pieces
        rows = np.where(direct, ms, self.degree - ms)
        cols = np.where(direct, l[..., None], self.n_local - 1 - l[..., None])
        return self.entries[rows, cols]


def local_cell_center(l, ld: int):
    """Local position a table address stands for: the cell midpoint
    (l + 0.5) / 2**ld. Midpoint sampling makes the half-table symmetry an
    exact index reversal rather than an approximation."""
    return (np.asarray(l, dtype=np.float64) + 0.5) / 2**ld


def build_lut(degree: int, ld: int, out_bits: int) -> SharedLut:
    """Sample and round the stored half of the shared table."""
    if out_bits < 1:
        raise ValueError("out_bits must be positive")
    if ld < 0:
        raise ValueError("ld must be >= 0")
    stored = (degree + 2) // 2
    n_local = 2**ld
    scale = 2**out_bits - 1
    entries = np.zeros((stored, n_local), dtype=np.int64)
    for m in range(stored):
        for l in range(n_local):
            t = float(local_cell_center(l, ld))
            entries[m, l] = round(cardinal_piece(degree, degree - m, t) * scale)
    return SharedLut(degree=degree, ld=ld, out_bits=out_bits, entries=entries)


@dataclass(frozen=True)
class BasisAccess:
    """Decoded read of one input code: global interval, local address and the
    K+1 active quantized basis values (offset m maps to basis index g + m)."""

    g: int
    l: int
    ld: int
    levels: np.ndarray

    @property
    def code(self) -> int:
        return (self.g << self.ld) + self.l


def active_basis_levels(
    code: int, lut: SharedLut, cfg: QuantConfig, log: LutAccessLog | None = None
) -> BasisAccess:
    """Split a code and fetch the K+1 active quantized basis values."""
    if not 0 <= code < cfg.code_count:
        raise ValueError(f"code {code} out of range [0, {cfg.code_count})")
    g, l = split_code(int(code), cfg.ld)
    levels = np.array(
        [lut.lookup(m, l, log) for m in range(cfg.degree + 1)], dtype=np.int64
    )
    return BasisAccess(g=g, l=l, ld=cfg.ld, levels=levels)


def quantize_symmetric(values: np.ndarray, bits: int = 8) -> tuple[np.ndarray, float]:
    """Per-tensor symmetric round-to-nearest-even quantization."""
    values = np.asarray(values, dtype=np.float64)
    qmax = 2 ** (bits - 1) - 1
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    scale = peak / qmax if peak > 0 else 1.0
    q = np.clip(np.round(values / scale), -qmax, qmax).astype(np.int64)
    return q, scale


@dataclass(frozen=True)
class QuantizedLayer:
    """8-bit weights plus the scales that return the integer MAC to floats."""

    c_q: np.ndarray
    c_scale: float
    w_b_q: np.ndarray
    w_b_scale: float

    @classmethod
    def from_layer(cls, layer: KanLayer, bits: int = 8) -> "QuantizedLayer":
        c_q, c_scale = quantize_symmetric(layer.c, bits)
        w_q, w_scale = quantize_symmetric(layer.w_b, bits)
        return cls(c_q=c_q, c_scale=c_scale, w_b_q=w_q, w_b_scale=w_scale)


def quantized_layer_forward(
    layer: KanLayer,
    codes: np.ndarray,
    lut: SharedLut,
    cfg: QuantConfig,
    log: LutAccessLog | None = None,
    qlayer: QuantizedLayer | None = None,
) -> np.ndarray:
    """Integer-domain layer forward mirroring the lookup datapath.

    Per output: sum over inputs of the residual product (8-bit w_b times the
    ReLU'd code) and the spline products (8-bit coefficients times the K+1
    table levels), each path rescaled so the result approximates
    ``layer_forward`` at the cell midpoints.
    """
    if cfg.n_intervals != layer.grid.n_intervals or cfg.degree != layer.grid.degree:
        raise ConfigError("quantization config does not match the layer grid")
    if lut.degree != cfg.degree or lut.ld != cfg.ld or lut.out_bits != cfg.out_bits:
        raise ConfigError("lookup table does not match the quantization config")
    codes = np.asarray(codes, dtype=np.int64)
    single = codes.ndim == 1
    cb = codes[None, :] if single else codes
    if cb.shape[-1] != layer.n_in:
        raise ValueError(f"got {cb.shape[-1]} codes for {layer.n_in} inputs")

    q = qlayer if qlayer is not None else QuantizedLayer.from_layer(layer)
    g = cb >> cfg.ld
    l = cb & (2**cfg.ld - 1)
    levels = lut.lookup_all(l, log)  # (batch, n_in, K+1)

    # scatter active levels into full basis positions, then one big einsum
    full = np.zeros(cb.shape + (layer.grid.n_bases,), dtype=np.int64)
    cols = g[..., None] + np.arange(cfg.degree + 1)
    np.put_along_axis(full, cols, levels, axis=-1)
    spline_int = np.einsum("bik,iok->bo", full, q.c_q)

    zc = zero_code(layer.grid, cfg)
    relu_codes = np.maximum(cb - zc, 0)
    resid_int = relu_codes @ q.w_b_q

    span = layer.grid.x_max - layer.grid.x_min
    h_q = span / cfg.code_count
    spline_scale = q.c_scale / cfg.level_max
    resid_scale = q.w_b_scale * h_q
    y = spline_int * spline_scale + resid_int * resid_scale
    return y[0] if single else y


def dump_lut_csv(lut: SharedLut, path: str | os.PathLike) -> None:
    """Write the stored table as (m, l, level) rows for inspection and
    golden-file comparisons."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "l", "level"])
        for m in range(lut.stored_pieces):
            for l in range(lut.n_local):
                writer.writerow([m, l, int(lut.entries[m, l])])


def load_lut_csv(path: str | os.PathLike, degree: int, ld: int, out_bits: int) -> SharedLut:
    entries = np.zeros(((degree + 2) // 2, 2**ld), dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            entries[int(row["m"]), int(row["l"])] = int(row["level"])
    return SharedLut(degree=degree, ld=ld, out_bits=out_bits, entries=entries)
