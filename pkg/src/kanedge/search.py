"""Constrained hyperparameter search with mid-training grid extension.

Two steps: candidate (architecture, K, G) tuples are screened against
hardware budgets with the analytical cost model; the surviving start then
trains in fixed-epoch rounds, extending the grid by E intervals whenever the
boundary-to-boundary validation loss keeps improving and the extended design
still fits the budgets. The first boundary that fails either test ends the
run - reverting to the checkpoint taken before the latest extension when it
was the loss that stalled.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .costs import CostReport, DEFAULT_UNIT_COSTS, UnitCosts, accelerator_cost
from .errors import InfeasibleError, NoFeasibleStartError
from .inputgen import MODE_PRESETS
from .kan import Dataset, KanLayer, KanNetwork, TrainConfig, eval_loss, network_grid_extend, train
from .quant import max_subcell_bits
from .splines import SplineGrid

#: Relative improvement below which validation loss counts as stalled.
LOSS_IMPROVE_RTOL = 1e-4


@dataclass(frozen=True)
class Constraints:
    """Hardware budgets; None leaves an axis unbounded."""

    area_max: float | None = None
    energy_max: float | None = None
    latency_max: float | None = None

    def __post_init__(self):
        for name in ("area_max", "energy_max", "latency_max"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0 when bounded")

    def admits(self, report: CostReport) -> bool:
        return (
            (self.area_max is None or report.area <= self.area_max)
            and (self.energy_max is None or report.energy <= self.energy_max)
            and (self.latency_max is None or report.latency <= self.latency_max)
        )


@dataclass(frozen=True)
class SearchConfig:
    candidates: tuple  # layer-width chains, e.g. ((17, 1, 14), (17, 14))
    degree: int = 3
    g_init: int = 5
    g_step: int = 5  # grid increment per extension
    epochs_per_round: int = 10
    g_max: int = 60
    mode: str = "accuracy"  # encoder preset: performance (N=4) / accuracy (N=2)
    n_bits: int = 8
    domain: tuple[float, float] = (-1.0, 1.0)
    train_cfg: TrainConfig = TrainConfig()
    seed: int = 0

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("need at least one candidate architecture")
        if self.g_init < 1 or self.g_step < 1:
            raise ValueError("g_init and g_step must be >= 1")
        if self.g_max < self.g_init:
            raise ValueError("g_max must be >= g_init")
        if self.mode not in MODE_PRESETS:
            raise ValueError(f"mode must be one of {sorted(MODE_PRESETS)}")

    @property
    def encoder_n_half(self) -> int:
        return MODE_PRESETS[self.mode]

    @property
    def out_bits(self) -> int:
        return 2 * self.encoder_n_half


@dataclass
class SearchOutcome:
    best_net: KanNetwork
    final_g: int
    trace: list = field(default_factory=list)  # per-boundary dicts

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump({"final_g": self.final_g, "trace": self.trace}, fh, sort_keys=True)


def _shape_network(arch, degree: int, g: int, domain) -> KanNetwork:
    grid = SplineGrid(g, degree, domain[0], domain[1])
    return KanNetwork(
        [KanLayer.zeros(a, b, grid) for a, b in zip(arch, arch[1:])]
    )


def feasible(
    arch,
    degree: int,
    g: int,
    constraints: Constraints,
    costs: UnitCosts = DEFAULT_UNIT_COSTS,
    n_bits: int = 8,
    out_bits: int = 4,
    scheme: str = "hybrid",
) -> tuple[bool, CostReport]:
    """Cost the design and compare component-wise against the budgets.

    Raises :class:`InfeasibleError` when no aligned quantization exists at
    all for (g, n_bits) - a different failure from a budget being exceeded.
    """
    max_subcell_bits(g, n_bits)  # raises InfeasibleError when unalignable
    net = _shape_network(arch, degree, g, (-1.0, 1.0))
    report = accelerator_cost(net, n_bits=n_bits, out_bits=out_bits, scheme=scheme, costs=costs)
    return constraints.admits(report), report


def _improved(prev: float, cur: float) -> bool:
    return cur < prev * (1.0 - LOSS_IMPROVE_RTOL)


def optimize(
    dataset: Dataset,
    constraints: Constraints,
    cfg: SearchConfig,
    costs: UnitCosts = DEFAULT_UNIT_COSTS,
) -> SearchOutcome:
    """Screen candidates, then train with gated grid extension.

    Every boundary checkpoint makes the revert exact: a stalled boundary
    returns the weights saved just before the latest extension, so the
    outcome never carries a grid the budgets rejected. Deterministic given
    cfg.seed.
    """
    start = None
    for arch in cfg.candidates:
        try:
            ok, report = feasible(
                arch, cfg.degree, cfg.g_init, constraints, costs,
                cfg.n_bits, cfg.out_bits,
            )
        except InfeasibleError:
            continue
        if ok:
            start = (tuple(arch), report)
            break
    if start is None:
        raise NoFeasibleStartError(
            f"none of {len(cfg.candidates)} candidates fits the budgets at "
            f"G={cfg.g_init}"
        )
    arch, report = start

    rng = np.random.default_rng(cfg.seed)
    grid = SplineGrid(cfg.g_init, cfg.degree, cfg.domain[0], cfg.domain[1])
    net = KanNetwork(
        [KanLayer.random(a, b, grid, rng, 0.3, 0.2) for a, b in zip(arch, arch[1:])]
    )
    g = cfg.g_init
    prev_val = eval_loss(net, dataset.x_val, dataset.y_val, cfg.train_cfg.loss)
    trace: list = []
    outcome_net = net
    final_g = g
    while True:
        round_cfg = TrainConfig(
            learning_rate=cfg.train_cfg.learning_rate,
            epochs=cfg.epochs_per_round,
            batch_size=cfg.train_cfg.batch_size,
            seed=int(rng.integers(0, 2**31 - 1)),
            loss=cfg.train_cfg.loss,
        )
        net, round_trace = train(net, dataset, round_cfg)
        best_val = min(round_trace["val_loss"])
        entry = {"G": g, "val_loss": best_val, "cost": report.as_dict()}

        if not _improved(prev_val, best_val):
            entry["decision"] = "revert-stop"
            trace.append(entry)
            # fall back to the checkpoint taken before the latest extension
            break
        g_next = g + cfg.g_step
        if g_next > cfg.g_max:
            entry["decision"] = "constraint-stop"
            trace.append(entry)
            outcome_net, final_g = net, g
            break
        try:
            ok, next_report = feasible(
                arch, cfg.degree, g_next, constraints, costs, cfg.n_bits, cfg.out_bits
            )
        except InfeasibleError:
            ok, next_report = False, None
        if not ok:
            entry["decision"] = "constraint-stop"
            trace.append(entry)
            outcome_net, final_g = net, g
            break
        entry["decision"] = "extend"
        trace.append(entry)
        outcome_net, final_g = net.copy(), g  # checkpoint at G_pre
        net = network_grid_extend(net, g_next)
        g = g_next
        report = next_report
        prev_val = best_val

    return SearchOutcome(best_net=outcome_net, final_g=final_g, trace=trace)
