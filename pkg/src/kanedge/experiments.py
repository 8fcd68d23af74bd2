"""Canned evaluation sweeps behind the report pipelines.

The row-mapping comparison pairs grid sizes with array-height labels
(G = 7, 15, 30, 60 against 128, 256, 512, 1024), trains one single-layer
classifier per pair on the shipped surrogate task, and evaluates
probability-ordered versus natural row placement under identical per-seed
noise draws. The IR-drop solve is deterministic per placement, so it runs
once per (pair, placement) and only the noise is redrawn per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crossbar import (
    CrossbarConfig,
    _table_entry,
    adc_quantize,
    default_error_table,
    ir_drop_mac,
)
from .datasets import surrogate_task
from .kan import KanLayer, KanNetwork, TrainConfig, classification_accuracy, train
from .mapping import (
    InputDistribution,
    MappingPlan,
    _wordline_levels,
    build_analog_network,
    calibrate_analog_network,
)
from .splines import SplineGrid

#: Grid size paired with the array-height label it is evaluated against.
ARRAY_GRID_PAIRS = ((128, 7), (256, 15), (512, 30), (1024, 60))

#: Input distribution shared by the surrogate task and the calibration plan.
CALIBRATION_SIGMA = 0.30


@dataclass(frozen=True)
class MapCompareConfig:
    pairs: tuple = ARRAY_GRID_PAIRS
    n_seeds: int = 20
    r_wire: float = 6.0
    g_unit: float = 0.5
    v_read: float = 0.005
    adc_bits: int = 12
    degree: int = 3
    n_train: int = 2500
    n_val: int = 800
    margin: float = 0.8
    train_cfg: TrainConfig = TrainConfig(
        learning_rate=1.0, epochs=60, batch_size=32, seed=1, loss="cross-entropy"
    )
    seed: int = 0


def _train_model(G: int, degree: int, dataset, train_cfg: TrainConfig) -> KanNetwork:
    grid = SplineGrid(G, degree, -1.0, 1.0)
    net0 = KanNetwork(
        [KanLayer.random(dataset.x_train.shape[1], int(dataset.y_train.max()) + 1,
                         grid, np.random.default_rng(0), 0.3, 0.2)]
    )
    net, _ = train(net0, dataset, train_cfg)
    return net


def _seeded_accuracies(
    net: KanNetwork,
    dataset,
    xbar: CrossbarConfig,
    plan: MappingPlan,
    ordered: bool,
    n_seeds: int,
) -> np.ndarray:
    """Accuracy per noise seed for one placement; the deterministic IR-drop
    solve happens once, noise and ADC are redone per seed."""
    layers = build_analog_network(
        net,
        xbar,
        n_bits=8,
        out_bits=6,
        block_order=plan.order if ordered else None,
        interleave=ordered,
        plan=plan if ordered else None,
    )
    calibrate_analog_network(layers, dataset.x_val)
    if len(layers) != 1:
        raise ValueError("the mapping comparison expects single-layer models")
    alayer = layers[0]
    levels = _wordline_levels(alayer, dataset.x_val)
    base = ir_drop_mac(alayer.array, levels)
    gain, sigma = _table_entry(xbar.error_table, alayer.array.cfg.rows)
    fs = alayer.array.full_scale
    steps = 2**alayer.array.cfg.adc_bits - 1
    accs = np.empty(n_seeds)
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, 1.0, base.analog.shape) * (sigma * fs)
        code = adc_quantize(gain * base.analog + noise, fs, alayer.array.cfg.adc_bits)
        pred = code / steps * (2.0 * fs) - fs  # per-column dequant before argmax
        accs[seed] = np.mean(np.argmax(pred, axis=-1) == dataset.y_val)
    return accs


def map_compare_experiment(cfg: MapCompareConfig = MapCompareConfig()) -> dict:
    """Paired accuracy comparison, natural vs probability-ordered placement.

    Returns per-pair software accuracy, per-seed accuracies for both
    placements, and the mean benefit; all randomness is seed-derived.
    """
    dataset = surrogate_task(
        n_train=cfg.n_train,
        n_val=cfg.n_val,
        label_noise=0.0,
        input_sigma=CALIBRATION_SIGMA,
        margin=cfg.margin,
    )
    table = default_error_table()
    results = []
    for size_label, G in cfg.pairs:
        net = _train_model(G, cfg.degree, dataset, cfg.train_cfg)
        grid = net.layers[0].grid
        plan = MappingPlan.from_distribution(
            grid, InputDistribution("gaussian", 0.0, CALIBRATION_SIGMA)
        )
        xbar = CrossbarConfig(
            rows=1,
            cols=1,
            g_unit=cfg.g_unit,
            r_wire=cfg.r_wire,
            v_read=cfg.v_read,
            adc_bits=cfg.adc_bits,
            error_table=table,
        )
        acc_base = _seeded_accuracies(net, dataset, xbar, plan, False, cfg.n_seeds)
        acc_ordered = _seeded_accuracies(net, dataset, xbar, plan, True, cfg.n_seeds)
        results.append(
            {
                "array_size": size_label,
                "G": G,
                "rows_per_feature": grid.n_bases + 1,
                "rows_total": net.layers[0].n_in * (grid.n_bases + 1),
                "software_accuracy": classification_accuracy(
                    net, dataset.x_val, dataset.y_val
                ),
                "baseline_accuracy": acc_base.tolist(),
                "ordered_accuracy": acc_ordered.tolist(),
                "mean_benefit": float(np.mean(acc_ordered - acc_base)),
            }
        )
    return {"pairs": results, "n_seeds": cfg.n_seeds, "r_wire": cfg.r_wire}
