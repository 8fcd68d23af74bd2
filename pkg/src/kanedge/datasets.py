"""Synthetic benchmark tasks.

The classification surrogate stands in for a real tabular benchmark of the
same shape (17 features, 14 classes): a fixed random spline-network teacher
labels Gaussian inputs, a small fraction of labels is re-rolled as noise.
Everything is deterministic in the seed.
"""

from __future__ import annotations

import numpy as np

from .kan import Dataset, KanLayer, KanNetwork, network_forward
from .splines import SplineGrid

SURROGATE_SEED = 20240917  # shipped fixed seed for the reference task


def surrogate_task(
    n_train: int = 2000,
    n_val: int = 500,
    n_features: int = 17,
    n_classes: int = 14,
    input_sigma: float = 0.35,
    label_noise: float = 0.05,
    margin: float = 0.0,
    domain: tuple[float, float] = (-1.0, 1.0),
    seed: int = SURROGATE_SEED,
) -> Dataset:
    """Teacher-labeled classification task with centered Gaussian inputs.

    ``margin`` > 0 keeps only samples whose teacher top-1/top-2 logit gap
    exceeds it, yielding a cleanly separable task.
    """
    rng = np.random.default_rng(seed)
    x_min, x_max = domain
    grid = SplineGrid(8, 3, x_min, x_max)
    teacher = KanNetwork(
        [KanLayer.random(n_features, n_classes, grid, rng, c_scale=0.8, w_scale=0.4)]
    )
    n = n_train + n_val
    xs, ys = [], []
    kept = 0
    while kept < n:
        draw = max(n - kept, 256)
        x = np.clip(rng.normal(0.0, input_sigma, (draw, n_features)), x_min, x_max)
        logits = network_forward(teacher, x)
        part = np.partition(logits, -2, axis=-1)
        keep = (part[:, -1] - part[:, -2]) > margin
        xs.append(x[keep])
        ys.append(np.argmax(logits[keep], axis=-1))
        kept += int(keep.sum())
    x = np.concatenate(xs)[:n]
    labels = np.concatenate(ys)[:n]
    flip = rng.random(n) < label_noise
    labels[flip] = rng.integers(0, n_classes, flip.sum())
    return Dataset(
        x_train=x[:n_train],
        y_train=labels[:n_train],
        x_val=x[n_train:],
        y_val=labels[n_train:],
    )


def sine_regression(
    n_train: int = 300,
    n_val: int = 100,
    seed: int = 0,
    domain: tuple[float, float] = (-1.0, 1.0),
) -> Dataset:
    """1-D sin(pi x) regression, handy for trainer and search tests."""
    rng = np.random.default_rng(seed)
    x_min, x_max = domain
    x = rng.uniform(x_min, x_max, (n_train + n_val, 1))
    y = np.sin(np.pi * x)
    return Dataset(x[:n_train], y[:n_train], x[n_train:], y[n_train:])


def reference_model(seed: int = SURROGATE_SEED) -> KanNetwork:
    """The stock 17 x 1 x 14 two-layer network (G=5, K=3, 279 parameters)
    used by examples and cost comparisons; weights are fixed by the seed."""
    rng = np.random.default_rng(seed)
    grid = SplineGrid(5, 3, -1.0, 1.0)
    return KanNetwork(
        [
            KanLayer.random(17, 1, grid, rng, 0.3, 0.2),
            KanLayer.random(1, 14, grid, rng, 0.3, 0.2),
        ]
    )
