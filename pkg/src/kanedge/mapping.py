"""Activation-probability row ordering and the quantized+analog pipeline.

Only K+1 of a layer's G+K basis functions fire for any given input, and which
ones depends on where the input distribution puts its mass. Estimating each
basis row's activation probability from a calibration distribution and
placing the likeliest rows nearest the bit-line clamp shields the dominant
MAC contributions from IR drop - no circuit or algorithm changes, just a row
permutation at program time.

The evaluation pipeline here runs a whole network through quantization,
table lookup, word-line levels, the resistive-ladder crossbar, the ADC, and
back to floats, layer by layer.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .crossbar import (
    CrossbarConfig,
    ProgrammedArray,
    calibrate_full_scale,
    ir_drop_mac,
    program,
    stochastic_mac,
)
from .errors import ConfigError
from .kan import KanNetwork, clamp_to_domain
from .quant import (
    QuantConfig,
    QuantizedLayer,
    SharedLut,
    build_lut,
    quantize_inputs,
    zero_code,
)
from .splines import SplineGrid


@dataclass(frozen=True)
class InputDistribution:
    """Calibration distribution over a layer's input domain.

    kinds: ``uniform``; ``gaussian`` (mu, sigma over the domain, tail mass
    clamped into the end intervals); ``histogram`` (empirical counts over
    input codes, length a multiple of the interval count).
    """

    kind: str
    mu: float = 0.0
    sigma: float = 1.0
    counts: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "histogram"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValueError("gaussian sigma must be > 0")
        if self.kind == "histogram" and not self.counts:
            raise ValueError("histogram distribution needs counts")


def _norm_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def interval_probabilities(grid: SplineGrid, dist: InputDistribution) -> np.ndarray:
    """Probability that an input lands in each of the G knot intervals
    (out-of-domain mass clamps into the end intervals)."""
    G = grid.n_intervals
    if dist.kind == "uniform":
        return np.full(G, 1.0 / G)
    if dist.kind == "gaussian":
        edges = grid.x_min + grid.step * np.arange(G + 1)
        cdf = _norm_cdf((edges - dist.mu) / dist.sigma)
        mass = np.diff(cdf)
        mass[0] += cdf[0]
        mass[-1] += 1.0 - cdf[-1]
        return mass / mass.sum()
    counts = np.asarray(dist.counts, dtype=np.float64)
    if counts.size % G != 0:
        raise ValueError(f"histogram length {counts.size} is not a multiple of G={G}")
    if np.any(counts < 0):
        raise ValueError("histogram counts must be >= 0")
    total = counts.sum()
    if total == 0:
        raise ValueError("histogram has zero total mass")
    return counts.reshape(G, -1).sum(axis=1) / total


def activation_probability(grid: SplineGrid, dist: InputDistribution) -> np.ndarray:
    """Probability that each of the G+K bases is active: basis i fires when
    the input's interval lies in [i-K, i] (clipped at the domain ends)."""
    q = interval_probabilities(grid, dist)
    K, G = grid.degree, grid.n_intervals
    p = np.empty(grid.n_bases)
    for i in range(grid.n_bases):
        lo, hi = max(0, i - K), min(G - 1, i)
        p[i] = q[lo : hi + 1].sum()
    return p


def probability_order(p) -> np.ndarray:
    """Stable descending sort: position 0 (nearest the clamp) gets the most
    probably active row; ties keep index order."""
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite")
    return np.argsort(-p, kind="stable").astype(np.int64)


def residual_activation_probability(grid: SplineGrid, dist: InputDistribution) -> float:
    """Probability the ReLU residual row carries current: P(input > 0)."""
    if dist.kind == "uniform":
        if grid.x_max <= 0:
            return 0.0
        return min(grid.x_max, grid.x_max - max(grid.x_min, 0.0)) / (grid.x_max - grid.x_min)
    if dist.kind == "gaussian":
        return float(1.0 - _norm_cdf(np.array((0.0 - dist.mu) / dist.sigma)))
    q = interval_probabilities(grid, dist)
    edges = grid.x_min + grid.step * np.arange(grid.n_intervals + 1)
    frac_pos = np.clip((edges[1:] - 0.0) / grid.step, 0.0, 1.0)
    return float(np.sum(q * frac_pos))


@dataclass(frozen=True)
class MappingPlan:
    """Per-feature-block activation probabilities and row permutation.

    ``p``/``order`` cover the spline rows; ``p_residual`` is the ReLU row's
    activation probability, used when residual rows join the ordering.
    """

    p: np.ndarray
    order: np.ndarray
    p_residual: float = 1.0

    @classmethod
    def from_distribution(cls, grid: SplineGrid, dist: InputDistribution) -> "MappingPlan":
        p = activation_probability(grid, dist)
        return cls(
            p=p,
            order=probability_order(p),
            p_residual=residual_activation_probability(grid, dist),
        )

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(
                {
                    "p": self.p.tolist(),
                    "order": self.order.tolist(),
                    "p_residual": self.p_residual,
                },
                fh,
                sort_keys=True,
            )

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "MappingPlan":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(
            p=np.array(payload["p"], dtype=np.float64),
            order=np.array(payload["order"], dtype=np.int64),
            p_residual=float(payload.get("p_residual", 1.0)),
        )


def full_row_order(
    n_in: int,
    n_bases: int,
    block_order: np.ndarray,
    interleave: bool = False,
    p: np.ndarray | None = None,
    p_residual: float = 1.0,
) -> np.ndarray:
    """Expand a per-feature-block spline-row permutation to the whole array.

    Default layout: each feature's block holds its permuted spline rows
    followed by its residual row, blocks in feature order along the bit
    line. With ``interleave`` every row of every feature (residuals
    included, ranked by ``p_residual``) is ordered globally by activation
    probability instead.
    """
    block_order = np.asarray(block_order, dtype=np.int64)
    if sorted(block_order.tolist()) != list(range(n_bases)):
        raise ValueError("block_order is not a permutation of the spline rows")
    stride = n_bases + 1
    if not interleave:
        blocks = [
            np.concatenate([f * stride + block_order, [f * stride + n_bases]])
            for f in range(n_in)
        ]
        return np.concatenate(blocks)
    if p is None:
        raise ValueError("interleaved ordering needs the probability vector")
    block_p = np.concatenate([np.asarray(p, dtype=np.float64), [p_residual]])
    tiled = np.tile(block_p, n_in)
    return np.argsort(-tiled, kind="stable").astype(np.int64)


@dataclass
class AnalogLayer:
    """One layer programmed onto a crossbar, with its dequantization scale."""

    array: ProgrammedArray
    qcfg: QuantConfig
    lut: SharedLut
    grid: SplineGrid
    out_scale: float
    zero_code: int
    relu_span: int


def build_analog_layer(
    layer, qcfg: QuantConfig, lut: SharedLut, xbar_template: CrossbarConfig,
    block_order: np.ndarray | None = None, interleave: bool = False,
    plan: MappingPlan | None = None,
) -> AnalogLayer:
    """Quantize a layer's weights and program them with a row placement.

    The residual weights are folded onto the spline-column scale so one ADC
    reading dequantizes the whole column; residual magnitudes beyond that
    scale saturate at the 8-bit limit.
    """
    grid = layer.grid
    q = QuantizedLayer.from_layer(layer)
    zc = zero_code(grid, qcfg)
    relu_span = max(qcfg.code_count - 1 - zc, 1)
    span = grid.x_max - grid.x_min
    h_q = span / qcfg.code_count
    # residual folded to the spline scale: w_fold * s_col ~= w_b * h_q * relu_span / level_max
    fold = h_q * relu_span / q.c_scale if q.c_scale else 0.0
    w_fold = np.clip(np.round(layer.w_b * fold), -127, 127).astype(np.int64)

    n_bases = grid.n_bases
    stride = n_bases + 1
    rows = layer.n_in * stride
    weights = np.zeros((rows, layer.n_out), dtype=np.int64)
    for f in range(layer.n_in):
        weights[f * stride : f * stride + n_bases] = q.c_q[f].T
        weights[f * stride + n_bases] = w_fold[f]

    if block_order is None:
        block_order = np.arange(n_bases, dtype=np.int64)
    order = full_row_order(
        layer.n_in,
        n_bases,
        block_order,
        interleave,
        plan.p if plan is not None else None,
        plan.p_residual if plan is not None else 1.0,
    )
    cfg = replace(
        xbar_template, rows=rows, cols=layer.n_out, input_max=qcfg.level_max
    )
    array = program(weights, order, cfg)
    out_scale = q.c_scale / qcfg.level_max
    return AnalogLayer(
        array=array, qcfg=qcfg, lut=lut, grid=grid, out_scale=out_scale,
        zero_code=zc, relu_span=relu_span,
    )


def _wordline_levels(alayer: AnalogLayer, x: np.ndarray) -> np.ndarray:
    """Word-line level vector (batch, rows) for a batch of float inputs."""
    qcfg, grid, lut = alayer.qcfg, alayer.grid, alayer.lut
    codes = quantize_inputs(clamp_to_domain(grid, x), grid, qcfg)
    g = codes >> qcfg.ld
    l = codes & (2**qcfg.ld - 1)
    act = lut.lookup_all(l)  # (batch, n_in, K+1)
    batch, n_in = codes.shape
    spline = np.zeros((batch, n_in, grid.n_bases), dtype=np.int64)
    cols = g[..., None] + np.arange(grid.degree + 1)
    np.put_along_axis(spline, cols, act, axis=-1)
    relu_codes = np.maximum(codes - alayer.zero_code, 0)
    relu_levels = np.rint(relu_codes * (qcfg.level_max / alayer.relu_span)).astype(np.int64)
    stride = grid.n_bases + 1
    levels = np.zeros((batch, n_in * stride), dtype=np.int64)
    for f in range(n_in):
        levels[:, f * stride : f * stride + grid.n_bases] = spline[:, f]
        levels[:, f * stride + grid.n_bases] = relu_levels[:, f]
    return levels


def calibrate_analog_layer(alayer: AnalogLayer, x: np.ndarray) -> AnalogLayer:
    """Fit the ADC range to the ideal MAC span of a calibration batch."""
    calibrate_full_scale(alayer.array, _wordline_levels(alayer, x))
    return alayer


def analog_layer_forward(
    alayer: AnalogLayer, x: np.ndarray, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Float outputs of one layer through the analog path (ADC included)."""
    levels = _wordline_levels(alayer, x)
    if rng is not None and alayer.array.cfg.error_table:
        res = stochastic_mac(alayer.array, levels, rng)
    else:
        res = ir_drop_mac(alayer.array, levels)
    cfg = alayer.array.cfg
    steps = 2**cfg.adc_bits - 1
    fs = alayer.array.full_scale
    analog_hat = res.adc_code / steps * (2.0 * fs) - fs
    mac_hat = analog_hat / (cfg.g_unit * cfg.v_read)
    return mac_hat * alayer.out_scale


def build_analog_network(
    net: KanNetwork,
    xbar_template: CrossbarConfig,
    n_bits: int = 8,
    out_bits: int = 6,
    block_order: np.ndarray | None = None,
    interleave: bool = False,
    plan: MappingPlan | None = None,
) -> list[AnalogLayer]:
    """Program every layer of a network; all layers share the input bit
    width, table output width and per-block row ordering."""
    layers = []
    for layer in net.layers:
        qcfg = QuantConfig.for_grid(layer.grid, n_bits, out_bits, signed=layer.grid.x_min < 0)
        lut = build_lut(layer.grid.degree, qcfg.ld, out_bits)
        layers.append(
            build_analog_layer(
                layer, qcfg, lut, xbar_template, block_order, interleave, plan
            )
        )
    return layers


def calibrate_analog_network(layers: list[AnalogLayer], x: np.ndarray) -> list[AnalogLayer]:
    """Calibrate every layer's ADC range on a batch, feeding each layer the
    exact (ideal-MAC) outputs of the previous one. Ideal MACs are placement
    invariant, so all row orderings share identical calibration."""
    from .crossbar import ideal_mac

    h = np.asarray(x, dtype=np.float64)
    for alayer in layers:
        levels = _wordline_levels(alayer, h)
        calibrate_full_scale(alayer.array, levels)
        h = ideal_mac(alayer.array, levels) * alayer.out_scale
    return layers


def analog_network_forward(
    layers: list[AnalogLayer], x: np.ndarray, rng: np.random.Generator | None = None
) -> np.ndarray:
    h = np.asarray(x, dtype=np.float64)
    for alayer in layers:
        h = analog_layer_forward(alayer, h, rng)
    return h


def evaluate_mapping(
    net: KanNetwork,
    lut: SharedLut,
    qcfg: QuantConfig,
    xbar_template: CrossbarConfig,
    x: np.ndarray,
    labels: np.ndarray,
    block_order: np.ndarray | None = None,
    seed: int = 0,
    interleave: bool = False,
    plan: MappingPlan | None = None,
) -> float:
    """Classification accuracy of the full quantized+analog pipeline under a
    given per-block row ordering. Deterministic given the seed."""
    for layer in net.layers:
        if (
            layer.grid.n_intervals != qcfg.n_intervals
            or layer.grid.degree != qcfg.degree
        ):
            raise ConfigError("network grids do not match the quantization config")
        if lut.degree != qcfg.degree or lut.ld != qcfg.ld:
            raise ConfigError("lookup table does not match the quantization config")
    layers = build_analog_network(
        net, xbar_template, qcfg.n_bits, qcfg.out_bits, block_order, interleave, plan
    )
    calibrate_analog_network(layers, x)
    rng = np.random.default_rng(seed) if xbar_template.error_table else None
    pred = analog_network_forward(layers, x, rng)
    return float(np.mean(np.argmax(pred, axis=-1) == labels))
