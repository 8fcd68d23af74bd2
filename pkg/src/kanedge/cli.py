"""Command-line pipelines.

Every command takes ``--config`` (JSON or TOML), an optional ``--seed``
override, an output directory and a report format, validates its inputs,
and writes data files plus a manifest (input/output hashes, seed, version).
Exit codes: 0 success, 2 configuration error, 3 infeasible, 4 runtime or
divergence failure.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import costs as costs_mod
from .crossbar import CrossbarConfig, default_error_table, load_error_table
from .datasets import sine_regression, surrogate_task
from .errors import ConfigError, InfeasibleError, KanEdgeError, NoFeasibleStartError
from .experiments import MapCompareConfig, map_compare_experiment
from .inputgen import EncoderConfig, Scheme, compare_encoders, mac_yield
from .kan import (
    Dataset,
    KanLayer,
    KanNetwork,
    TrainConfig,
    classification_accuracy,
    load_model,
    save_model,
    train,
)
from .mapping import InputDistribution, MappingPlan, evaluate_mapping
from .quant import QuantConfig, build_lut, dump_lut_csv, max_subcell_bits
from .runio import (
    child_seed,
    load_config,
    worker_count,
    write_csv,
    write_json,
    write_manifest,
)
from .search import Constraints, SearchConfig, optimize
from .splines import SplineGrid

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4


def _build_dataset(section: dict, seed: int | None = None) -> Dataset:
    """Datasets default to their fixed shipped seeds so different commands
    see the same task; a config-level dataset seed overrides."""
    kind = section.get("kind", "surrogate")
    if kind == "surrogate":
        from .datasets import SURROGATE_SEED

        return surrogate_task(
            n_train=int(section.get("n_train", 2000)),
            n_val=int(section.get("n_val", 500)),
            input_sigma=float(section.get("input_sigma", 0.35)),
            label_noise=float(section.get("label_noise", 0.05)),
            margin=float(section.get("margin", 0.0)),
            seed=int(section["seed"]) if "seed" in section else SURROGATE_SEED,
        )
    if kind == "sine":
        return sine_regression(
            n_train=int(section.get("n_train", 300)),
            n_val=int(section.get("n_val", 100)),
            seed=int(section["seed"]) if "seed" in section else 0,
        )
    if kind == "csv":
        rows = np.loadtxt(section["path"], delimiter=",", skiprows=1)
        n_val = int(section.get("n_val", max(1, len(rows) // 5)))
        x, y = rows[:, :-1], rows[:, -1]
        if section.get("labels", True):
            y = y.astype(np.int64)
        return Dataset(x[:-n_val], y[:-n_val], x[-n_val:], y[-n_val:])
    raise ConfigError(f"unknown dataset kind {kind!r}")


def _train_config(section: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(section.get("learning_rate", 0.1)),
        epochs=int(section.get("epochs", 20)),
        batch_size=int(section.get("batch_size", 32)),
        seed=seed,
        loss=section.get("loss", "squared-error"),
    )


def _shared_grid(net: KanNetwork) -> SplineGrid:
    grids = {
        (l.grid.n_intervals, l.grid.degree, l.grid.x_min, l.grid.x_max)
        for l in net.layers
    }
    if len(grids) != 1:
        raise ConfigError("model layers use different grids; per-layer HAQ is not supported")
    return net.layers[0].grid


def _quant_config(net: KanNetwork, haq: dict) -> QuantConfig:
    grid = _shared_grid(net)
    if "G" in haq and int(haq["G"]) != grid.n_intervals:
        raise ConfigError(
            f"HAQ config G={haq['G']} does not match the model's G={grid.n_intervals}"
        )
    if "K" in haq and int(haq["K"]) != grid.degree:
        raise ConfigError(
            f"HAQ config K={haq['K']} does not match the model's K={grid.degree}"
        )
    return QuantConfig.for_grid(
        grid,
        n_bits=int(haq.get("n_bits", haq.get("n", 8))),
        out_bits=int(haq.get("out_bits", 6)),
        signed=bool(haq.get("signed", grid.x_min < 0)),
    )


def _crossbar_template(section: dict, error_table) -> CrossbarConfig:
    return CrossbarConfig(
        rows=1,
        cols=1,
        g_unit=float(section.get("g_unit", 0.5)),
        r_wire=float(section.get("r_wire", 0.0)),
        v_read=float(section.get("v_read", 0.005)),
        adc_bits=int(section.get("adc_bits", 10)),
        error_table=error_table,
    )


@click.group()
def main():
    """Spline-network quantization, analog-array simulation and cost tools."""


def _command(func):
    """Shared CLI surface: config path, seed override, output directory."""
    func = click.option("--config", "config_path", required=True, type=click.Path())(func)
    func = click.option("--seed", type=int, default=None, help="override the config seed")(func)
    func = click.option("--out", "out_dir", required=True, type=click.Path())(func)
    func = click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
        help="emit reports as CSV alongside JSON (csv) or JSON only (json)",
    )(func)
    return func


def _run(label, config_path, seed, out_dir, fmt, body):
    try:
        cfg = load_config(config_path)
        run_seed = seed if seed is not None else int(cfg.get("seed", 0))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        inputs = {"config": config_path}
        outputs, details = body(cfg, run_seed, out, fmt, inputs)
        write_manifest(out, label, run_seed, inputs, outputs, details)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (InfeasibleError, NoFeasibleStartError) as exc:
        click.echo(f"infeasible: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    except (KanEdgeError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@main.command("fit")
@_command
def cmd_fit(config_path, seed, out_dir, fmt):
    """Train a spline network and write the model file."""

    def body(cfg, run_seed, out, fmt, inputs):
        model = cfg.get("model", {})
        widths = [int(w) for w in model.get("widths", [1, 1])]
        grid = SplineGrid(
            int(model.get("G", 5)),
            int(model.get("K", 3)),
            float(model.get("x_min", -1.0)),
            float(model.get("x_max", 1.0)),
        )
        rng = np.random.default_rng(child_seed(run_seed, "fit", "init"))
        net = KanNetwork(
            [KanLayer.random(a, b, grid, rng, 0.3, 0.2) for a, b in zip(widths, widths[1:])]
        )
        dataset = _build_dataset(cfg.get("dataset", {}))
        tcfg = _train_config(cfg.get("train", {}), child_seed(run_seed, "fit", "train"))
        net, trace = train(net, dataset, tcfg)
        model_path = out / "model.json"
        save_model(net, model_path)
        outputs = [model_path]
        rows = [
            {"epoch": i, "train_loss": tl, "val_loss": vl}
            for i, (tl, vl) in enumerate(zip(trace["train_loss"], trace["val_loss"]))
        ]
        if fmt == "csv":
            trace_path = out / "loss_trace.csv"
            write_csv(trace_path, ["epoch", "train_loss", "val_loss"], rows)
            outputs.append(trace_path)
        report_path = out / "fit_report.json"
        write_json(report_path, {"widths": widths, "loss_trace": rows, "params": net.n_params})
        outputs.append(report_path)
        return outputs, {"params": net.n_params}

    _run("fit", config_path, seed, out_dir, fmt, body)


@main.command("quantize")
@_command
def cmd_quantize(config_path, seed, out_dir, fmt):
    """Build the shared lookup table and quantization report for a model."""

    def body(cfg, run_seed, out, fmt, inputs):
        inputs["model"] = cfg["model"]
        net = load_model(cfg["model"])
        qcfg = _quant_config(net, cfg.get("haq", {}))
        lut = build_lut(qcfg.degree, qcfg.ld, qcfg.out_bits)
        lut_path = out / "lut.csv"
        dump_lut_csv(lut, lut_path)
        from .quant import QuantizedLayer

        layers = [QuantizedLayer.from_layer(layer) for layer in net.layers]
        report = {
            "n_bits": qcfg.n_bits,
            "out_bits": qcfg.out_bits,
            "ld": qcfg.ld,
            "code_count": qcfg.code_count,
            "lut_entries": lut.n_entries,
            "stored_pieces": lut.stored_pieces,
            "layers": [
                {"c_scale": q.c_scale, "w_b_scale": q.w_b_scale} for q in layers
            ],
        }
        report_path = out / "quantize_report.json"
        write_json(report_path, report)
        return [lut_path, report_path], {"lut_entries": lut.n_entries, "ld": qcfg.ld}

    _run("quantize", config_path, seed, out_dir, fmt, body)


@main.command("sim")
@_command
def cmd_sim(config_path, seed, out_dir, fmt):
    """Accuracy of the full quantized + analog pipeline on a dataset."""

    def body(cfg, run_seed, out, fmt, inputs):
        inputs["model"] = cfg["model"]
        net = load_model(cfg["model"])
        qcfg = _quant_config(net, cfg.get("haq", {}))
        lut = build_lut(qcfg.degree, qcfg.ld, qcfg.out_bits)
        et_section = cfg.get("error_table")
        if isinstance(et_section, str):
            inputs["error_table"] = et_section
            table = load_error_table(et_section)
        elif isinstance(et_section, dict):
            table = et_section
        elif cfg.get("default_error_table", False):
            table = default_error_table()
        else:
            table = None
        xbar = _crossbar_template(cfg.get("crossbar", {}), table)
        dataset = _build_dataset(cfg.get("dataset", {}))
        mapping = cfg.get("mapping", {})
        grid = _shared_grid(net)
        order = None
        plan = None
        interleave = bool(mapping.get("interleave", False))
        if mapping.get("kind", "identity") == "probability":
            dist_section = mapping.get("dist", {"kind": "gaussian", "mu": 0.0, "sigma": 0.35})
            dist = InputDistribution(
                kind=dist_section.get("kind", "gaussian"),
                mu=float(dist_section.get("mu", 0.0)),
                sigma=float(dist_section.get("sigma", 1.0)),
                counts=tuple(dist_section["counts"]) if "counts" in dist_section else None,
            )
            plan = MappingPlan.from_distribution(grid, dist)
            order = plan.order
            plan.to_json(out / "mapping_plan.json")
        acc = evaluate_mapping(
            net, lut, qcfg, xbar, dataset.x_val, dataset.y_val,
            order, seed=child_seed(run_seed, "sim", "noise"),
            interleave=interleave, plan=plan,
        )
        software = classification_accuracy(net, dataset.x_val, dataset.y_val)
        report = {"accuracy": acc, "software_accuracy": software, "samples": len(dataset.x_val)}
        report_path = out / "sim_report.json"
        write_json(report_path, report)
        outputs = [report_path]
        if plan is not None:
            outputs.append(out / "mapping_plan.json")
        if fmt == "csv":
            csv_path = out / "sim_report.csv"
            write_csv(
                csv_path,
                ["accuracy", "software_accuracy", "samples"],
                [report],
            )
            outputs.append(csv_path)
        return outputs, {"accuracy": acc}

    _run("sim", config_path, seed, out_dir, fmt, body)


@main.command("sweep-inputgen")
@_command
def cmd_sweep_inputgen(config_path, seed, out_dir, fmt):
    """Encoder comparison sweep: yield, latency, area, power, merit figure."""

    def body(cfg, run_seed, out, fmt, inputs):
        schemes = [Scheme(s) for s in cfg.get("schemes", ["voltage", "hybrid", "pwm"])]
        n_halves = [int(n) for n in cfg.get("n_half", [3])]
        sigmas_i = [float(s) for s in cfg.get("sigma_i", [0.05])]
        sigmas_w = [float(s) for s in cfg.get("sigma_w", [0.0])]
        trials = int(cfg.get("trials", 20000))
        w_p1 = float(cfg.get("w_p1", 1.0))
        i1 = float(cfg.get("i1", 1.0))
        ucosts = (
            costs_mod.load_unit_costs(cfg["unit_costs"])
            if "unit_costs" in cfg
            else costs_mod.DEFAULT_UNIT_COSTS
        )
        points = [
            EncoderConfig(
                scheme, n, w_p1=w_p1, i1=i1, sigma_i=si, sigma_w=sw,
                seed=child_seed(run_seed, "sweep", scheme.value, n, si, sw),
            )
            for scheme in schemes
            for n in n_halves
            for si in sigmas_i
            for sw in sigmas_w
        ]

        def one(point: EncoderConfig) -> dict:
            row = compare_encoders([point], ucosts)[0]
            row["yield"] = mac_yield(point, trials)
            return row

        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            rows = list(pool.map(one, points))
        fields = [
            "scheme", "n_half", "sigma_i", "sigma_w", "yield",
            "latency_ns", "area", "power", "fom",
        ]
        csv_path = out / "inputgen_sweep.csv"
        write_csv(csv_path, fields, rows)
        report_path = out / "inputgen_sweep.json"
        write_json(report_path, {"rows": rows, "trials": trials})
        return [csv_path, report_path], {"points": len(rows)}

    _run("sweep-inputgen", config_path, seed, out_dir, fmt, body)


@main.command("map-compare")
@_command
def cmd_map_compare(config_path, seed, out_dir, fmt):
    """Row-mapping benefit across array sizes (natural vs probability order)."""

    def body(cfg, run_seed, out, fmt, inputs):
        pairs = tuple(
            (int(a), int(g)) for a, g in cfg.get("pairs", [[128, 7], [256, 15], [512, 30], [1024, 60]])
        )
        mcfg = MapCompareConfig(
            pairs=pairs,
            n_seeds=int(cfg.get("n_seeds", 20)),
            r_wire=float(cfg.get("r_wire", 6.0)),
            adc_bits=int(cfg.get("adc_bits", 12)),
            n_train=int(cfg.get("n_train", 2500)),
            n_val=int(cfg.get("n_val", 800)),
            train_cfg=_train_config(
                cfg.get("train", {"learning_rate": 1.0, "epochs": 60, "loss": "cross-entropy"}),
                1,
            ),
            seed=run_seed,
        )
        result = map_compare_experiment(mcfg)
        rows = []
        summary = []
        for entry in result["pairs"]:
            for s, (b, m) in enumerate(zip(entry["baseline_accuracy"], entry["ordered_accuracy"])):
                rows.append(
                    {
                        "array_size": entry["array_size"],
                        "G": entry["G"],
                        "rows_per_feature": entry["rows_per_feature"],
                        "seed": s,
                        "baseline_accuracy": b,
                        "ordered_accuracy": m,
                    }
                )
            summary.append(
                {
                    "array_size": entry["array_size"],
                    "G": entry["G"],
                    "rows_per_feature": entry["rows_per_feature"],
                    "software_accuracy": entry["software_accuracy"],
                    "mean_benefit": entry["mean_benefit"],
                }
            )
        csv_path = out / "map_compare.csv"
        write_csv(
            csv_path,
            ["array_size", "G", "rows_per_feature", "seed", "baseline_accuracy", "ordered_accuracy"],
            rows,
        )
        sum_path = out / "map_compare_summary.csv"
        write_csv(
            sum_path,
            ["array_size", "G", "rows_per_feature", "software_accuracy", "mean_benefit"],
            summary,
        )
        report_path = out / "map_compare.json"
        write_json(report_path, result)
        details = {
            "rows_per_feature": {str(e["array_size"]): e["rows_per_feature"] for e in result["pairs"]}
        }
        return [csv_path, sum_path, report_path], details

    _run("map-compare", config_path, seed, out_dir, fmt, body)


@main.command("cost")
@_command
def cmd_cost(config_path, seed, out_dir, fmt):
    """Lookup-path sweep and whole-design cost comparison tables."""

    def body(cfg, run_seed, out, fmt, inputs):
        if "unit_costs" in cfg:
            inputs["unit_costs"] = cfg["unit_costs"]
            ucosts = costs_mod.load_unit_costs(cfg["unit_costs"])
        else:
            ucosts = costs_mod.DEFAULT_UNIT_COSTS
        haq = cfg.get("haq", {})
        n_bits = int(haq.get("n_bits", 8))
        out_bits = int(haq.get("out_bits", 6))
        if "model" in cfg:
            inputs["model"] = cfg["model"]
            net = load_model(cfg["model"])
        else:
            model = cfg.get("design", {"widths": [17, 1, 14], "G": 5, "K": 3})
            grid = SplineGrid(int(model.get("G", 5)), int(model.get("K", 3)), -1.0, 1.0)
            widths = [int(w) for w in model["widths"]]
            net = KanNetwork(
                [KanLayer.zeros(a, b, grid) for a, b in zip(widths, widths[1:])]
            )
        scheme = cfg.get("scheme", "hybrid")

        sweep_rows = []
        for G in [int(g) for g in cfg.get("sweep_G", [8, 16, 32, 64])]:
            K = net.layers[0].grid.degree
            ld = max_subcell_bits(G, n_bits)
            conv = costs_mod.lookup_path_cost("conventional", G, K, n_bits, ld, out_bits, 1, ucosts)
            asp = costs_mod.lookup_path_cost("asp", G, K, n_bits, ld, out_bits, 1, ucosts)
            sweep_rows.append(
                {
                    "G": G, "K": K, "ld": ld,
                    "conventional_area": conv.area, "asp_area": asp.area,
                    "area_ratio": conv.area / asp.area,
                    "conventional_energy": conv.energy, "asp_energy": asp.energy,
                    "energy_ratio": conv.energy / asp.energy,
                    "conventional_lut_bits": costs_mod.lut_bit_count("conventional", G, K, n_bits, ld, out_bits),
                    "asp_lut_bits": costs_mod.lut_bit_count("asp", G, K, n_bits, ld, out_bits),
                }
            )
        kan_report = costs_mod.accelerator_cost(
            net, n_bits=n_bits, out_bits=out_bits, scheme=scheme, costs=ucosts
        )
        mlp_params = int(cfg.get("mlp_params", 190214))
        mlp_report = costs_mod.mlp_baseline_cost(mlp_params, net.n_out, ucosts)
        design_rows = [
            {
                "design": "kan",
                "params": net.n_params,
                "area": kan_report.area,
                "energy": kan_report.energy,
                "latency": kan_report.latency,
            },
            {
                "design": "mlp",
                "params": mlp_params,
                "area": mlp_report.area,
                "energy": mlp_report.energy,
                "latency": mlp_report.latency,
            },
        ]
        outputs = []
        if fmt == "csv":
            sweep_path = out / "lookup_sweep.csv"
            write_csv(sweep_path, list(sweep_rows[0].keys()), sweep_rows)
            compare_path = out / "design_compare.csv"
            write_csv(compare_path, ["design", "params", "area", "energy", "latency"], design_rows)
            outputs += [sweep_path, compare_path]
        report_path = out / "cost_report.json"
        write_json(
            report_path,
            {
                "lookup_sweep": sweep_rows,
                "designs": design_rows,
                "kan_breakdown": kan_report.as_dict(),
                "mlp_breakdown": mlp_report.as_dict(),
                "unit_costs_note": ucosts.note,
            },
        )
        outputs.append(report_path)
        return outputs, {"kan_params": net.n_params}

    _run("cost", config_path, seed, out_dir, fmt, body)


@main.command("search")
@_command
def cmd_search(config_path, seed, out_dir, fmt):
    """Constrained hyperparameter search with grid extension."""

    def body(cfg, run_seed, out, fmt, inputs):
        cons = cfg.get("constraints", {})
        constraints = Constraints(
            area_max=cons.get("area_max"),
            energy_max=cons.get("energy_max"),
            latency_max=cons.get("latency_max"),
        )
        scfg = SearchConfig(
            candidates=tuple(tuple(int(w) for w in c) for c in cfg.get("candidates", [[1, 1]])),
            degree=int(cfg.get("degree", 3)),
            g_init=int(cfg.get("g_init", 5)),
            g_step=int(cfg.get("g_step", 5)),
            epochs_per_round=int(cfg.get("epochs_per_round", 10)),
            g_max=int(cfg.get("g_max", 60)),
            mode=cfg.get("mode", "accuracy"),
            n_bits=int(cfg.get("n_bits", 8)),
            train_cfg=_train_config(cfg.get("train", {}), 0),
            seed=run_seed,
        )
        dataset = _build_dataset(cfg.get("dataset", {"kind": "sine"}))
        outcome = optimize(dataset, constraints, scfg)
        outcome_path = out / "search_outcome.json"
        outcome.to_json(outcome_path)
        model_path = out / "search_model.json"
        save_model(outcome.best_net, model_path)
        outputs = [outcome_path, model_path]
        if fmt == "csv":
            trace_path = out / "search_trace.csv"
            write_csv(
                trace_path,
                ["step", "G", "val_loss", "area", "energy", "latency", "decision"],
                [
                    {
                        "step": i,
                        "G": t["G"],
                        "val_loss": t["val_loss"],
                        "area": t["cost"]["area"],
                        "energy": t["cost"]["energy"],
                        "latency": t["cost"]["latency"],
                        "decision": t["decision"],
                    }
                    for i, t in enumerate(outcome.trace)
                ],
            )
            outputs.append(trace_path)
        return outputs, {"final_g": outcome.final_g}

    _run("search", config_path, seed, out_dir, fmt, body)


if __name__ == "__main__":
    main()
