"""Analytical area / energy / latency model.

Counts primitives (LUT bit cells, decoder output lines, transmission gates,
DAC levels, delay-chain stages, crossbar cells, ADCs, registers, buffers) and
prices them with a unit-cost table. The shipped defaults are synthetic
22nm-class numbers chosen to reproduce qualitative orderings, not any
measured library; treat absolute values as relative units and edit the table
for a real process.

Latency in a report is the serial (critical-path) time attributed to each
primitive class, so totals remain the sum of the breakdown in all three
columns.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kan import KanNetwork
from .quant import max_subcell_bits

PRIMITIVES = (
    "lut_bitcell",
    "decoder_line",
    "tg",
    "buffer",
    "dac_level",
    "delay_stage",
    "xbar_cell",
    "adc",
    "register",
)


@dataclass(frozen=True)
class UnitCost:
    area: float  # um^2
    energy: float  # fJ/op
    latency: float  # ns

    def __post_init__(self):
        if self.area < 0 or self.energy < 0 or self.latency < 0:
            raise ValueError("unit costs must be >= 0")


@dataclass(frozen=True)
class UnitCosts:
    version: int
    note: str
    units: dict  # primitive name -> UnitCost

    def __post_init__(self):
        missing = set(PRIMITIVES) - set(self.units)
        if missing:
            raise ConfigError(f"unit-cost table missing primitives: {sorted(missing)}")

    def __getitem__(self, name: str) -> UnitCost:
        return self.units[name]


DEFAULT_UNIT_COSTS = UnitCosts(
    version=1,
    note="synthetic 22nm-class defaults, not calibrated to any measured library",
    units={
        "lut_bitcell": UnitCost(area=0.15, energy=0.05, latency=0.12),
        "decoder_line": UnitCost(area=0.30, energy=0.02, latency=0.15),
        "tg": UnitCost(area=0.50, energy=0.01, latency=0.05),
        "buffer": UnitCost(area=10.0, energy=0.50, latency=0.10),
        "dac_level": UnitCost(area=0.35, energy=0.60, latency=0.20),
        "delay_stage": UnitCost(area=0.16, energy=0.02, latency=1.00),
        "xbar_cell": UnitCost(area=0.05, energy=0.02, latency=0.02),
        "adc": UnitCost(area=250.0, energy=120.0, latency=5.00),
        "register": UnitCost(area=2.00, energy=0.30, latency=0.05),
    },
)


def save_unit_costs(costs: UnitCosts, path: str | os.PathLike) -> None:
    payload = {
        "version": costs.version,
        "note": costs.note,
        "units": {
            name: {"area": u.area, "energy": u.energy, "latency": u.latency}
            for name, u in costs.units.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def load_unit_costs(path: str | os.PathLike) -> UnitCosts:
    from .runio import load_config  # JSON or TOML by extension

    payload = load_config(path)
    try:
        units = {
            name: UnitCost(area=u["area"], energy=u["energy"], latency=u["latency"])
            for name, u in payload["units"].items()
        }
        return UnitCosts(version=payload["version"], note=payload.get("note", ""), units=units)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed unit-cost file {path}: {exc}") from exc


@dataclass
class CostReport:
    """Totals plus a per-primitive breakdown; totals always equal the sums."""

    breakdown: dict = field(default_factory=dict)

    def add(self, name: str, count: float, unit: UnitCost, latency: float = 0.0) -> None:
        """Add ``count`` instances of a primitive plus an explicit serial
        latency contribution (not implied by the count: area and energy scale
        with instances, critical path does not)."""
        entry = self.breakdown.setdefault(
            name, {"count": 0.0, "area": 0.0, "energy": 0.0, "latency": 0.0}
        )
        entry["count"] += count
        entry["area"] += count * unit.area
        entry["energy"] += count * unit.energy
        entry["latency"] += latency

    def merge(self, other: "CostReport", times: float = 1.0, serial: bool = True) -> None:
        """Fold in another report ``times`` over; parallel instances
        (serial=False) contribute area/energy but no extra path latency."""
        for name, e in other.breakdown.items():
            entry = self.breakdown.setdefault(
                name, {"count": 0.0, "area": 0.0, "energy": 0.0, "latency": 0.0}
            )
            entry["count"] += times * e["count"]
            entry["area"] += times * e["area"]
            entry["energy"] += times * e["energy"]
            entry["latency"] += e["latency"] if serial else 0.0

    @property
    def area(self) -> float:
        return sum(e["area"] for e in self.breakdown.values())

    @property
    def energy(self) -> float:
        return sum(e["energy"] for e in self.breakdown.values())

    @property
    def latency(self) -> float:
        return sum(e["latency"] for e in self.breakdown.values())

    def as_dict(self) -> dict:
        return {
            "area": self.area,
            "energy": self.energy,
            "latency": self.latency,
            "breakdown": {k: dict(v) for k, v in sorted(self.breakdown.items())},
        }


def lut_bit_count(mode: str, G: int, K: int, n_bits: int, ld: int, out_bits: int) -> int:
    """Table storage in bits for one input's lookup path."""
    if mode == "conventional":
        return (G + K) * 2**n_bits * out_bits
    if mode == "asp":
        return ((K + 2) // 2) * 2**ld * out_bits
    raise ValueError(f"unknown mode {mode!r}")


def lookup_path_cost(
    mode: str,
    G: int,
    K: int,
    n_bits: int,
    ld: int | None = None,
    out_bits: int = 6,
    fanout: int = 1,
    costs: UnitCosts = DEFAULT_UNIT_COSTS,
) -> CostReport:
    """Cost of retrieving the active basis values for ``fanout`` inputs.

    conventional: every basis of every input carries its own full-range
    table, an n-bit decoder (2**n output lines) and a 2**n-to-1 selection
    tree.

    asp (aligned, power-of-two gap): one shared half-table serves all
    inputs; each input needs only a split (n-LD)-bit plus LD-bit decoder
    pair, K+1 L-to-1 transmission-gate MUXes and K+1 1-to-G DEMUXes that
    move table values from local to global scope.
    """
    report = CostReport()
    u = costs
    if mode == "conventional":
        report.add("decoder_line", fanout * (G + K) * 2**n_bits, u["decoder_line"],
                   latency=u["decoder_line"].latency)
        report.add("lut_bitcell", fanout * (G + K) * 2**n_bits * out_bits, u["lut_bitcell"],
                   latency=u["lut_bitcell"].latency)
        report.add("tg", fanout * (G + K) * 2**n_bits, u["tg"], latency=u["tg"].latency)
        return report
    if mode != "asp":
        raise ValueError(f"unknown mode {mode!r}")
    if ld is None:
        ld = max_subcell_bits(G, n_bits)
    if G * 2**ld > 2**n_bits or ld < 0:
        raise ConfigError(f"ld={ld} is not feasible for G={G}, n={n_bits}")
    L = 2**ld
    report.add("lut_bitcell", ((K + 2) // 2) * L * out_bits, u["lut_bitcell"],
               latency=u["lut_bitcell"].latency)
    report.add("decoder_line", fanout * (2 ** (n_bits - ld) + L), u["decoder_line"],
               latency=u["decoder_line"].latency)
    # mux stage and demux stage in series on the path
    report.add("tg", fanout * (K + 1) * (L + G), u["tg"], latency=2 * u["tg"].latency)
    return report


def encoder_cost(scheme, n_half: int, costs: UnitCosts = DEFAULT_UNIT_COSTS) -> CostReport:
    """Per-word-line encoder: instances and conversion-path latency.

    voltage: a 2N-bit DAC (2**2N - 1 settable levels) into a buffer.
    pwm: a (2**2N - 1)-stage delay chain into a buffer.
    hybrid: an N-bit DAC, a (2**N - 1)-stage chain, a transmission-gate mux
    and a pulse-control register, into a buffer. The (count - 1) convention
    collapses every scheme to a bare buffer in the degenerate N = 0 case.
    """
    from .inputgen import Scheme  # one-way dep: encoders price themselves here

    scheme = Scheme(scheme) if n_half > 0 else scheme
    if n_half < 0:
        raise ValueError("n_half must be >= 0")
    report = CostReport()
    u = costs
    if n_half == 0:
        report.add("buffer", 1, u["buffer"], latency=u["buffer"].latency)
        return report
    if scheme is Scheme.VOLTAGE:
        report.add("dac_level", 2 ** (2 * n_half) - 1, u["dac_level"], latency=u["dac_level"].latency)
    elif scheme is Scheme.PWM:
        stages = 2 ** (2 * n_half) - 1
        report.add("delay_stage", stages, u["delay_stage"], latency=stages * u["delay_stage"].latency)
    elif scheme is Scheme.HYBRID:
        stages = 2**n_half - 1
        report.add("dac_level", stages, u["dac_level"], latency=u["dac_level"].latency)
        report.add("delay_stage", stages, u["delay_stage"], latency=stages * u["delay_stage"].latency)
        report.add("tg", 1, u["tg"], latency=u["tg"].latency)
        report.add("register", 1, u["register"], latency=u["register"].latency)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    report.add("buffer", 1, u["buffer"], latency=u["buffer"].latency)
    return report


def crossbar_cell_count(net: KanNetwork) -> int:
    """Array cells across the network: per layer, each input contributes its
    basis rows plus one residual row into every output column."""
    return sum(
        layer.n_in * (layer.grid.n_bases + 1) * layer.n_out for layer in net.layers
    )


#: Bit lines only sum a bounded number of rows per analog pass.
TILE_ROWS = 256


def accelerator_cost(
    net: KanNetwork | None,
    n_bits: int = 8,
    out_bits: int = 6,
    scheme="hybrid",
    costs: UnitCosts = DEFAULT_UNIT_COSTS,
    tile_rows: int = TILE_ROWS,
) -> CostReport:
    """Whole-accelerator roll-up for a spline network.

    Per layer: one shared-table lookup path fanned out over the inputs, an
    encoder per word line (parallel in time), a crossbar cell per weight and
    an ADC per output column. Layers run sequentially; a layer whose word
    lines exceed one array tile takes multiple encode/MAC/convert passes.
    """
    total = CostReport()
    if net is None or not net.layers:
        return total
    n_half = max(1, out_bits // 2)
    for layer in net.layers:
        G, K = layer.grid.n_intervals, layer.grid.degree
        lookup = lookup_path_cost(
            "asp", G, K, n_bits, None, out_bits, fanout=layer.n_in, costs=costs
        )
        total.merge(lookup, serial=True)
        wordlines = layer.n_in * (layer.grid.n_bases + 1)
        passes = int(np.ceil(wordlines / tile_rows))
        enc = encoder_cost(scheme, n_half, costs)
        # word lines fire in parallel within a pass; passes serialize
        total.merge(enc, times=wordlines, serial=False)
        total.add("buffer", 0, costs["buffer"], latency=passes * enc.latency)
        total.add(
            "xbar_cell",
            layer.n_in * (layer.grid.n_bases + 1) * layer.n_out,
            costs["xbar_cell"],
            latency=passes * costs["xbar_cell"].latency,
        )
        total.add("adc", layer.n_out, costs["adc"], latency=passes * costs["adc"].latency)
    return total


def mlp_baseline_cost(
    param_count: int,
    n_out: int,
    costs: UnitCosts = DEFAULT_UNIT_COSTS,
    tile_rows: int = TILE_ROWS,
) -> CostReport:
    """Dense-array reference design priced with the same units: a flat
    weight array of ``param_count`` cells, pure-voltage encoders on every
    row, an ADC per output column, tiled into sequential array passes."""
    from .inputgen import Scheme

    report = CostReport()
    if param_count == 0:
        return report
    rows = int(np.ceil(param_count / max(n_out, 1)))
    passes = int(np.ceil(rows / tile_rows))
    report.add("xbar_cell", param_count, costs["xbar_cell"],
               latency=passes * costs["xbar_cell"].latency)
    enc = encoder_cost(Scheme.VOLTAGE, 4, costs)
    report.merge(enc, times=rows, serial=False)
    report.add("buffer", 0, costs["buffer"], latency=passes * enc.latency)
    report.add("adc", n_out, costs["adc"], latency=passes * costs["adc"].latency)
    return report
