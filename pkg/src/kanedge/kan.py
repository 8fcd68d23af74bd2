"""Floating-point KAN layers: forward, gradients, fitting and training.

Every edge (input i, output o) carries a spline with per-edge coefficients
plus a ReLU residual term, so a layer computes

    y_o = sum_i [ w_b[i,o] * relu(x_i) + sum_k c[i,o,k] * B_k(x_i) ].

This module is the exact float64 oracle the quantized and analog paths are
measured against.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import SingularFitError, TrainingDivergedError
from .splines import SplineGrid, basis_matrix, basis_matrix_derivative

MODEL_FILE_VERSION = 1


@dataclass
class KanLayer:
    """One spline layer: coefficients ``c`` of shape (n_in, n_out, n_bases)
    and residual weights ``w_b`` of shape (n_in, n_out)."""

    n_in: int
    n_out: int
    grid: SplineGrid
    c: np.ndarray
    w_b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        self.w_b = np.asarray(self.w_b, dtype=np.float64)
        expect_c = (self.n_in, self.n_out, self.grid.n_bases)
        if self.c.shape != expect_c:
            raise ValueError(f"c has shape {self.c.shape}, expected {expect_c}")
        if self.w_b.shape != (self.n_in, self.n_out):
            raise ValueError(
                f"w_b has shape {self.w_b.shape}, expected {(self.n_in, self.n_out)}"
            )
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.w_b))):
            raise ValueError("layer weights must be finite")

    @classmethod
    def zeros(cls, n_in: int, n_out: int, grid: SplineGrid) -> "KanLayer":
        return cls(
            n_in,
            n_out,
            grid,
            np.zeros((n_in, n_out, grid.n_bases)),
            np.zeros((n_in, n_out)),
        )

    @classmethod
    def random(
        cls, n_in: int, n_out: int, grid: SplineGrid, rng: np.random.Generator,
        c_scale: float = 0.3, w_scale: float = 0.3,
    ) -> "KanLayer":
        return cls(
            n_in,
            n_out,
            grid,
            rng.normal(0.0, c_scale, (n_in, n_out, grid.n_bases)),
            rng.normal(0.0, w_scale, (n_in, n_out)),
        )

    def copy(self) -> "KanLayer":
        return KanLayer(self.n_in, self.n_out, self.grid, self.c.copy(), self.w_b.copy())

    @property
    def n_params(self) -> int:
        # n_bases spline coefficients plus one residual weight per edge
        return self.n_in * self.n_out * (self.grid.n_bases + 1)


@dataclass
class KanNetwork:
    layers: list[KanLayer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(
                    f"layer chain mismatch: {a.n_out} outputs feed {b.n_in} inputs"
                )

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    def copy(self) -> "KanNetwork":
        return KanNetwork([layer.copy() for layer in self.layers])


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def layer_forward(layer: KanLayer, x: np.ndarray) -> np.ndarray:
    """Forward a batch (or single vector) of in-domain inputs.

    ``x``: shape (n_in,) or (batch, n_in); output matches the batch shape.
    Caller is responsible for clamping x into the grid domain first.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[-1] != layer.n_in:
        raise ValueError(f"input has {xb.shape[-1]} features, layer wants {layer.n_in}")
    bases = basis_matrix(layer.grid, xb)  # (batch, n_in, n_bases)
    y = np.einsum("bik,iok->bo", bases, layer.c)
    y += relu(xb) @ layer.w_b
    return y[0] if single else y


def clamp_to_domain(grid: SplineGrid, x: np.ndarray) -> np.ndarray:
    return np.clip(x, grid.x_min, grid.x_max)


def network_forward(net: KanNetwork, x: np.ndarray) -> np.ndarray:
    """Compose layers, clamping each activation into the next grid's domain."""
    h = np.asarray(x, dtype=np.float64)
    for layer in net.layers:
        h = clamp_to_domain(layer.grid, h)
        h = layer_forward(layer, h)
    return h


def layer_gradients(
    layer: KanLayer, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of ``layer_forward`` for a single input vector.

    Returns (grad_c, grad_wb, grad_x) for the scalar L = upstream . y.
    ReLU subgradient at 0 is taken as 0.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.shape != (layer.n_in,) or upstream.shape != (layer.n_out,):
        raise ValueError("layer_gradients expects a single input/upstream vector")
    bases = basis_matrix(layer.grid, x)  # (n_in, n_bases)
    dbases = basis_matrix_derivative(layer.grid, x)
    grad_c = bases[:, None, :] * upstream[None, :, None]
    grad_wb = relu(x)[:, None] * upstream[None, :]
    relu_mask = (x > 0.0).astype(np.float64)
    # dy_o/dx_i = w_b[i,o] * 1[x_i>0] + sum_k c[i,o,k] * B_k'(x_i)
    dy_dx = layer.w_b * relu_mask[:, None] + np.einsum("iok,ik->io", layer.c, dbases)
    grad_x = dy_dx @ upstream
    return grad_c, grad_wb, grad_x


def fit_edge_least_squares(grid: SplineGrid, xs, targets) -> np.ndarray:
    """Least-squares spline coefficients for target values at sample points.

    Raises :class:`SingularFitError` when the samples leave some basis
    supports uncovered (reporting which), or are too few.
    """
    xs = np.asarray(xs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != targets.shape[: xs.ndim]:
        raise ValueError("xs must be 1-D and match targets")
    design = basis_matrix(grid, xs)
    empty = np.flatnonzero(~np.any(design != 0.0, axis=0))
    if empty.size:
        raise SingularFitError(
            f"samples leave basis supports uncovered: {[int(i) for i in empty]}",
            basis_indices=[int(i) for i in empty],
        )
    rank = int(np.linalg.matrix_rank(design))
    if rank < grid.n_bases:
        # all supports touched but still deficient (too few / duplicated
        # samples): blame the null-space-dominant bases
        _, _, vt = np.linalg.svd(design, full_matrices=True)
        bad = np.argsort(-np.abs(vt[rank:]).max(axis=0))[: grid.n_bases - rank]
        raise SingularFitError(
            f"design matrix rank {rank} < {grid.n_bases} coefficients",
            basis_indices=sorted(int(b) for b in bad),
        )
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return coef


def grid_extend(layer: KanLayer, n_intervals_new: int, dense: int | None = None) -> KanLayer:
    """Refit every edge spline on a finer grid (same domain, same degree).

    The old spline is sampled densely and refit by least squares; the residual
    weights are untouched. ``n_intervals_new == n_intervals`` is a no-op copy.
    """
    old = layer.grid
    if n_intervals_new < old.n_intervals:
        raise ValueError(
            f"grid extension cannot shrink: {old.n_intervals} -> {n_intervals_new}"
        )
    if n_intervals_new == old.n_intervals:
        return layer.copy()
    new_grid = SplineGrid(n_intervals_new, old.degree, old.x_min, old.x_max)
    if dense is None:
        dense = max(8 * new_grid.n_bases, 256)
    xs = np.linspace(old.x_min, old.x_max, dense)
    old_vals = np.einsum("bk,iok->bio", basis_matrix(old, xs), layer.c)
    flat = old_vals.reshape(dense, layer.n_in * layer.n_out)
    coef = fit_edge_least_squares(new_grid, xs, flat)
    c_new = coef.reshape(new_grid.n_bases, layer.n_in, layer.n_out).transpose(1, 2, 0)
    return KanLayer(layer.n_in, layer.n_out, new_grid, np.ascontiguousarray(c_new), layer.w_b.copy())


def network_grid_extend(net: KanNetwork, n_intervals_new: int) -> KanNetwork:
    return KanNetwork([grid_extend(layer, n_intervals_new) for layer in net.layers])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    loss: str = "squared-error"  # or "cross-entropy"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in ("squared-error", "cross-entropy"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass
class Dataset:
    """Train/validation split; ``y`` is targets (regression) or integer
    class labels (cross-entropy)."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray

    def __post_init__(self):
        self.x_train = np.asarray(self.x_train, dtype=np.float64)
        self.x_val = np.asarray(self.x_val, dtype=np.float64)
        if len(self.x_train) == 0:
            raise ValueError("empty training set")


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _loss_and_grad(pred, y, kind: str):
    if kind == "squared-error":
        diff = pred - y
        return float(np.mean(diff**2)), 2.0 * diff / diff.size
    probs = _softmax(pred)
    n = len(y)
    loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
    grad = probs.copy()
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


def eval_loss(net: KanNetwork, x, y, kind: str) -> float:
    pred = network_forward(net, x)
    loss, _ = _loss_and_grad(pred, y, kind)
    return loss


def _forward_cached(net: KanNetwork, x: np.ndarray):
    caches = []
    h = x
    for layer in net.layers:
        pre = h
        h = clamp_to_domain(layer.grid, pre)
        bases = basis_matrix(layer.grid, h)
        caches.append((pre, h, bases))
        h = np.einsum("bik,iok->bo", bases, layer.c) + relu(h) @ layer.w_b
    return h, caches


def _backward(net: KanNetwork, caches, grad_out: np.ndarray):
    grads = [None] * len(net.layers)
    up = grad_out
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        pre, h, bases = caches[idx]
        grad_c = np.einsum("bik,bo->iok", bases, up)
        grad_wb = relu(h).T @ up
        grads[idx] = (grad_c, grad_wb)
        if idx > 0:
            dbases = basis_matrix_derivative(layer.grid, h)
            dy_dh = np.einsum("iok,bik->bio", layer.c, dbases)
            dy_dh += layer.w_b[None, :, :] * (h > 0.0)[:, :, None].astype(np.float64)
            up = np.einsum("bio,bo->bi", dy_dh, up)
            # clamp gradient: zero where the activation was clipped
            inside = (pre > layer.grid.x_min) & (pre < layer.grid.x_max)
            up = up * inside
    return grads


def train(
    net: KanNetwork, dataset: Dataset, cfg: TrainConfig
) -> tuple[KanNetwork, dict[str, list[float]]]:
    """Mini-batch SGD with a fixed learning rate; deterministic given cfg.seed.

    Returns the trained copy of ``net`` and per-epoch train/val loss traces.
    """
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    n = len(dataset.x_train)
    trace = {"train_loss": [], "val_loss": []}
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            xb, yb = dataset.x_train[sel], dataset.y_train[sel]
            pred, caches = _forward_cached(net, xb)
            loss, grad = _loss_and_grad(pred, yb, cfg.loss)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss became {loss}")
            epoch_loss += loss * len(sel)
            for layer, (gc, gw) in zip(net.layers, _backward(net, caches, grad)):
                layer.c -= cfg.learning_rate * gc
                layer.w_b -= cfg.learning_rate * gw
        trace["train_loss"].append(epoch_loss / n)
        val = eval_loss(net, dataset.x_val, dataset.y_val, cfg.loss)
        if not np.isfinite(val):
            raise TrainingDivergedError(f"validation loss became {val}")
        trace["val_loss"].append(val)
    return net, trace


def classification_accuracy(net: KanNetwork, x, labels) -> float:
    pred = network_forward(net, x)
    return float(np.mean(np.argmax(pred, axis=-1) == labels))


def save_model(net: KanNetwork, path: str | os.PathLike) -> None:
    """Versioned JSON dump; floats round-trip exactly (repr serialization)."""
    payload = {
        "version": MODEL_FILE_VERSION,
        "layers": [
            {
                "n_in": layer.n_in,
                "n_out": layer.n_out,
                "G": layer.grid.n_intervals,
                "K": layer.grid.degree,
                "x_min": layer.grid.x_min,
                "x_max": layer.grid.x_max,
                "c": layer.c.ravel().tolist(),
                "w_b": layer.w_b.ravel().tolist(),
            }
            for layer in net.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path: str | os.PathLike) -> KanNetwork:
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("version")
    if version != MODEL_FILE_VERSION:
        raise ValueError(f"unsupported model file version {version!r}")
    layers = []
    for spec in payload["layers"]:
        grid = SplineGrid(spec["G"], spec["K"], spec["x_min"], spec["x_max"])
        c = np.array(spec["c"], dtype=np.float64).reshape(
            spec["n_in"], spec["n_out"], grid.n_bases
        )
        w_b = np.array(spec["w_b"], dtype=np.float64).reshape(spec["n_in"], spec["n_out"])
        layers.append(KanLayer(spec["n_in"], spec["n_out"], grid, c, w_b))
    return KanNetwork(layers)
