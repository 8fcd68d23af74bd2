"""Behavioral word-line input encoders.

Three ways to turn a 2N-bit value into charge on a bit line capacitor:

- pure voltage: one unit-width pulse at one of 2**(2N) current levels;
- pure PWM: a fixed-current pulse whose width carries the value;
- hybrid: two pulses - the high N bits at a level held for 2**N units, the
  low N bits at a level held for one unit - so charge stays linear in the
  value while only 2**N distinct levels are ever needed.

In the ideal model all three deposit exactly ``x * I1 * W_p1``, which is what
makes them interchangeable in the MAC; they differ in worst-case latency and
in how drive noise maps onto decoded-level errors. Current-level noise is
scaled by how many levels a scheme packs into the fixed voltage swing
(relative to the hybrid's 2**N), so fewer levels mean wider noise margins.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Scheme(str, Enum):
    VOLTAGE = "voltage"
    PWM = "pwm"
    HYBRID = "hybrid"


#: Encoder presets: half bit width N fixed for throughput-oriented vs
#: noise-margin-oriented operation. Artifact defaults, not calibrated values.
MODE_PRESETS = {"performance": 4, "accuracy": 2}


@dataclass(frozen=True)
class EncoderConfig:
    scheme: Scheme
    n_half: int  # N; total input bits = 2N
    w_p1: float = 1.0  # unit pulse width, ns
    i1: float = 1.0  # unit current step, uA
    sigma_i: float = 0.0  # current-level noise std at hybrid spacing, uA
    sigma_w: float = 0.0  # pulse-width jitter std, ns
    seed: int = 0

    def __post_init__(self):
        if self.n_half < 1:
            raise ValueError("n_half must be >= 1")
        if self.w_p1 <= 0 or self.i1 <= 0:
            raise ValueError("w_p1 and i1 must be > 0")
        if self.sigma_i < 0 or self.sigma_w < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def value_count(self) -> int:
        return 2 ** (2 * self.n_half)

    @property
    def level_count(self) -> int:
        """Distinct drive levels the scheme uses (incl. the zero level)."""
        if self.scheme is Scheme.VOLTAGE:
            return 2 ** (2 * self.n_half)
        if self.scheme is Scheme.HYBRID:
            return 2**self.n_half
        return 2  # PWM: off and on

    def current(self, level) -> np.ndarray:
        """Drive current of a level index; levels are spaced by i1."""
        return np.asarray(level, dtype=np.float64) * self.i1

    @property
    def sigma_i_eff(self) -> float:
        """Per-level current noise after sharing the fixed swing among this
        scheme's levels (hybrid spacing is the reference)."""
        ref = 2**self.n_half - 1
        return self.sigma_i * (self.level_count - 1) / ref if ref else self.sigma_i


@dataclass(frozen=True)
class Waveform:
    """Ordered (current level index, width ns) segments."""

    segments: tuple[tuple[int, float], ...]

    def __post_init__(self):
        for level, width in self.segments:
            if width <= 0:
                raise ValueError("segment widths must be > 0")
            if level < 0:
                raise ValueError("segment levels must be >= 0")


@dataclass(frozen=True)
class ChargeResult:
    q: float  # uA*ns
    duration: float  # ns


def encode(x: int, cfg: EncoderConfig) -> Waveform:
    """Build the drive waveform for a 2N-bit value."""
    if not 0 <= x < cfg.value_count:
        raise ValueError(f"value {x} out of range [0, {cfg.value_count})")
    n = cfg.n_half
    if cfg.scheme is Scheme.HYBRID:
        hi, lo = x >> n, x & (2**n - 1)
        return Waveform(((hi, 2**n * cfg.w_p1), (lo, cfg.w_p1)))
    if cfg.scheme is Scheme.VOLTAGE:
        return Waveform(((x, cfg.w_p1),))
    # PWM: the scheme's single on-level held for x width units
    if x == 0:
        return Waveform(())
    return Waveform(((1, x * cfg.w_p1),))


def ideal_charge(w: Waveform, cfg: EncoderConfig) -> ChargeResult:
    q = sum(cfg.current(level) * width for level, width in w.segments)
    duration = sum(width for _, width in w.segments)
    return ChargeResult(q=float(q), duration=float(duration))


def noisy_charge(w: Waveform, cfg: EncoderConfig, rng: np.random.Generator) -> ChargeResult:
    """One noisy realization: independent per-segment current and width
    perturbations around the ideal drive."""
    q = 0.0
    duration = 0.0
    for level, width in w.segments:
        eps_i = rng.normal(0.0, cfg.sigma_i_eff) if cfg.sigma_i_eff > 0 else 0.0
        eps_w = rng.normal(0.0, cfg.sigma_w) if cfg.sigma_w > 0 else 0.0
        q += (float(cfg.current(level)) + eps_i) * (width + eps_w)
        duration += width
    return ChargeResult(q=q, duration=duration)


def encode_latency(scheme: Scheme, n_half: int, w_p1: float) -> float:
    """Fixed sampling window per scheme (worst case, independent of x)."""
    scheme = Scheme(scheme)
    if n_half < 1:
        raise ValueError("n_half must be >= 1")
    if scheme is Scheme.VOLTAGE:
        return w_p1
    if scheme is Scheme.HYBRID:
        return (2**n_half + 1) * w_p1
    return 2 ** (2 * n_half) * w_p1


def _batched_noisy_q(cfg: EncoderConfig, xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized noisy charge for an array of values (one draw per segment)."""
    n = cfg.n_half
    si, sw = cfg.sigma_i_eff, cfg.sigma_w
    if cfg.scheme is Scheme.HYBRID:
        hi, lo = xs >> n, xs & (2**n - 1)
        e_i = rng.normal(0.0, 1.0, (2, xs.size)) * si
        e_w = rng.normal(0.0, 1.0, (2, xs.size)) * sw
        q = (hi * cfg.i1 + e_i[0]) * (2**n * cfg.w_p1 + e_w[0])
        q += (lo * cfg.i1 + e_i[1]) * (cfg.w_p1 + e_w[1])
        return q
    if cfg.scheme is Scheme.VOLTAGE:
        e_i = rng.normal(0.0, 1.0, xs.size) * si
        e_w = rng.normal(0.0, 1.0, xs.size) * sw
        return (xs * cfg.i1 + e_i) * (cfg.w_p1 + e_w)
    e_i = rng.normal(0.0, 1.0, xs.size) * si
    e_w = rng.normal(0.0, 1.0, xs.size) * sw
    q = (cfg.i1 + e_i) * (xs * cfg.w_p1 + e_w)
    return np.where(xs == 0, 0.0, q)  # empty waveform carries no noise


def mac_yield(cfg: EncoderConfig, trials: int, rng: np.random.Generator | None = None) -> float:
    """Fraction of random values whose noisy charge decodes back to the same
    level after re-quantization to the ideal charge grid."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    xs = rng.integers(0, cfg.value_count, trials)
    q = _batched_noisy_q(cfg, xs, rng)
    decoded = np.clip(np.round(q / (cfg.i1 * cfg.w_p1)), 0, cfg.value_count - 1)
    return float(np.mean(decoded == xs))


def compare_encoders(
    cfgs: list[EncoderConfig], unit_costs=None, trials: int = 0
) -> list[dict]:
    """Figure-of-merit table across encoder configs.

    FOM = 1 / (area * power * latency), with area/power taken from the
    analytical encoder cost model and latency from the scheme's sampling
    window. Optionally appends a Monte-Carlo yield column.
    """
    from .costs import DEFAULT_UNIT_COSTS, encoder_cost  # local import: one-way dep

    costs = unit_costs if unit_costs is not None else DEFAULT_UNIT_COSTS
    rows = []
    for cfg in cfgs:
        report = encoder_cost(cfg.scheme, cfg.n_half, costs)
        lat = encode_latency(cfg.scheme, cfg.n_half, cfg.w_p1)
        area, power = report.area, report.energy
        row = {
            "scheme": cfg.scheme.value,
            "n_half": cfg.n_half,
            "sigma_i": cfg.sigma_i,
            "sigma_w": cfg.sigma_w,
            "area": area,
            "power": power,
            "latency_ns": lat,
            "fom": 1.0 / (area * power * lat),
        }
        if trials:
            row["yield"] = mac_yield(cfg, trials)
        rows.append(row)
    return rows


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    """Documented seed-splitting scheme for parallel trials: shard ``i`` of a
    run seeded ``s`` draws from ``default_rng((s, i))``."""
    return np.random.default_rng((seed, shard))
