"""Row ordering and the quantized+analog pipeline: exact order invariance at
zero wire resistance, probability math, and the paired placement benefit."""

import numpy as np
import pytest

from kanedge.crossbar import CrossbarConfig
from kanedge.errors import ConfigError
from kanedge.kan import KanLayer, KanNetwork
from kanedge.mapping import (
    InputDistribution,
    MappingPlan,
    activation_probability,
    build_analog_network,
    calibrate_analog_network,
    analog_network_forward,
    evaluate_mapping,
    full_row_order,
    interval_probabilities,
    probability_order,
    residual_activation_probability,
)
from kanedge.quant import QuantConfig, build_lut
from kanedge.splines import SplineGrid


@pytest.fixture
def grid():
    return SplineGrid(5, 3, -1.0, 1.0)


class TestIntervalProbabilities:
    def test_uniform(self, grid):
        q = interval_probabilities(grid, InputDistribution("uniform"))
        assert np.allclose(q, 0.2)

    def test_gaussian_tail_clamping(self, grid):
        q = interval_probabilities(grid, InputDistribution("gaussian", mu=0.0, sigma=10.0))
        # nearly flat distribution: all the tail mass lands in the end cells
        assert q.sum() == pytest.approx(1.0)
        assert q[0] > q[1] and q[-1] > q[-2]

    def test_histogram(self, grid):
        counts = np.zeros(160)
        counts[:32] = 2.0
        q = interval_probabilities(grid, InputDistribution("histogram", counts=tuple(counts)))
        assert q[0] == pytest.approx(1.0) and q[1:].sum() == 0.0

    def test_histogram_validation(self, grid):
        with pytest.raises(ValueError):
            interval_probabilities(grid, InputDistribution("histogram", counts=(1.0,) * 7))
        with pytest.raises(ValueError):
            interval_probabilities(grid, InputDistribution("histogram", counts=(0.0,) * 160))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            InputDistribution("triangular")


class TestActivationProbability:
    def test_uniform_example(self, grid):
        p = activation_probability(grid, InputDistribution("uniform"))
        want = np.array([1, 2, 3, 4, 4, 3, 2, 1]) / 5.0
        assert np.allclose(p, want)

    def test_support_width_always_k_plus_one(self, grid):
        # each single code activates exactly K+1 bases
        counts = np.zeros(160)
        counts[83] = 1.0  # one code, interval 2
        p = activation_probability(grid, InputDistribution("histogram", counts=tuple(counts)))
        assert int((p > 0).sum()) == grid.degree + 1

    def test_point_mass_in_first_interval(self, grid):
        counts = np.zeros(160)
        counts[:32] = 1.0
        p = activation_probability(grid, InputDistribution("histogram", counts=tuple(counts)))
        assert np.allclose(p[: grid.degree + 1], 1.0)
        assert not p[grid.degree + 1 :].any()


class TestProbabilityOrder:
    def test_uniform_gives_identity(self):
        assert probability_order(np.ones(6)).tolist() == list(range(6))

    def test_uniform_example_order(self, grid):
        p = activation_probability(grid, InputDistribution("uniform"))
        assert probability_order(p).tolist() == [3, 4, 2, 5, 1, 6, 0, 7]

    def test_reversal_up_to_ties(self):
        p = np.array([0.1, 0.4, 0.9, 0.7])
        fwd = probability_order(p)
        rev = probability_order(p[::-1].copy())
        assert fwd.tolist() == [2, 3, 1, 0]
        assert rev.tolist() == [1, 0, 2, 3]

    def test_always_a_bijection(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = rng.random(int(rng.integers(1, 40)))
            order = probability_order(p)
            assert sorted(order.tolist()) == list(range(len(p)))


class TestResidualProbability:
    def test_centered_gaussian(self, grid):
        assert residual_activation_probability(
            grid, InputDistribution("gaussian", 0.0, 0.3)
        ) == pytest.approx(0.5)

    def test_uniform_full_domain(self, grid):
        assert residual_activation_probability(grid, InputDistribution("uniform")) == pytest.approx(0.5)

    def test_positive_domain(self):
        grid = SplineGrid(5, 3, 0.0, 1.0)
        assert residual_activation_probability(grid, InputDistribution("uniform")) == pytest.approx(1.0)


class TestFullRowOrder:
    def test_block_layout(self):
        order = full_row_order(2, 3, np.array([2, 0, 1]))
        # per feature: permuted spline rows then the residual row
        assert order.tolist() == [2, 0, 1, 3, 6, 4, 5, 7]

    def test_interleave_by_probability(self):
        p = np.array([0.1, 0.9, 0.5])
        order = full_row_order(2, 3, np.arange(3), interleave=True, p=p, p_residual=0.7)
        # rank: basis1 (0.9), residual (0.7), basis2 (0.5), basis0 (0.1) per feature
        assert order.tolist() == [1, 5, 3, 7, 2, 6, 0, 4]

    def test_bad_block_order(self):
        with pytest.raises(ValueError):
            full_row_order(1, 3, np.array([0, 0, 2]))


class TestMappingPlan:
    def test_json_round_trip(self, grid, tmp_path):
        plan = MappingPlan.from_distribution(grid, InputDistribution("gaussian", 0.0, 0.4))
        path = tmp_path / "plan.json"
        plan.to_json(path)
        back = MappingPlan.from_json(path)
        assert np.array_equal(back.order, plan.order)
        assert np.allclose(back.p, plan.p)
        assert back.p_residual == plan.p_residual


def small_net(grid, seed=0):
    rng = np.random.default_rng(seed)
    return KanNetwork([KanLayer.random(4, 3, grid, rng, 0.4, 0.2)])


class TestEvaluateMapping:
    def test_zero_wire_order_invariant_bit_exact(self, grid):
        net = small_net(grid)
        cfg = QuantConfig.for_grid(grid, 8, 6, signed=True)
        lut = build_lut(3, cfg.ld, 6)
        xbar = CrossbarConfig(rows=1, cols=1, r_wire=0.0, adc_bits=10)
        rng = np.random.default_rng(1)
        x = np.clip(rng.normal(0, 0.4, (100, 4)), -1, 1)
        labels = rng.integers(0, 3, 100)
        accs = {evaluate_mapping(net, lut, cfg, xbar, x, labels, None)}
        for k in range(10):
            order = np.random.default_rng(k).permutation(grid.n_bases)
            accs.add(evaluate_mapping(net, lut, cfg, xbar, x, labels, order))
        assert len(accs) == 1

    def test_wire_resistance_breaks_invariance(self, grid):
        net = small_net(grid, 5)
        cfg = QuantConfig.for_grid(grid, 8, 6, signed=True)
        lut = build_lut(3, cfg.ld, 6)
        xbar = CrossbarConfig(rows=1, cols=1, r_wire=20.0, adc_bits=12)
        rng = np.random.default_rng(2)
        x = np.clip(rng.normal(0, 0.4, (200, 4)), -1, 1)
        net_f = build_analog_network(net, xbar, 8, 6)
        calibrate_analog_network(net_f, x)
        base = analog_network_forward(net_f, x)
        plan = MappingPlan.from_distribution(grid, InputDistribution("gaussian", 0.0, 0.4))
        net_s = build_analog_network(net, xbar, 8, 6, plan.order, True, plan)
        calibrate_analog_network(net_s, x)
        sam = analog_network_forward(net_s, x)
        assert not np.allclose(base, sam)

    def test_config_mismatch_rejected(self, grid):
        net = small_net(grid)
        cfg = QuantConfig.for_grid(SplineGrid(6, 3, -1.0, 1.0), 8, 6)
        lut = build_lut(3, cfg.ld, 6)
        xbar = CrossbarConfig(rows=1, cols=1)
        with pytest.raises(ConfigError):
            evaluate_mapping(net, lut, cfg, xbar, np.zeros((2, 4)), np.zeros(2, dtype=int))

    def test_deterministic_given_seed(self, grid):
        net = small_net(grid, 3)
        cfg = QuantConfig.for_grid(grid, 8, 6, signed=True)
        lut = build_lut(3, cfg.ld, 6)
        table = {"36": {"gain": 1.0, "sigma": 0.01}}
        xbar = CrossbarConfig(
            rows=1, cols=1, r_wire=1.0, adc_bits=10, error_table=table
        )
        rng = np.random.default_rng(4)
        x = np.clip(rng.normal(0, 0.4, (150, 4)), -1, 1)
        labels = rng.integers(0, 3, 150)
        a = evaluate_mapping(net, lut, cfg, xbar, x, labels, None, seed=9)
        b = evaluate_mapping(net, lut, cfg, xbar, x, labels, None, seed=9)
        assert a == b


class TestPlacementBenefit:
    def test_probability_order_beats_identity_under_droop(self):
        # compact version of the array-size sweep: one mid-size layer,
        # centered calibration, deep droop, paired noise seeds
        from kanedge.experiments import MapCompareConfig, map_compare_experiment
        from kanedge.kan import TrainConfig

        cfg = MapCompareConfig(
            pairs=((512, 30),),
            n_seeds=5,
            n_train=800,
            n_val=300,
            train_cfg=TrainConfig(
                learning_rate=1.0, epochs=25, batch_size=32, seed=1, loss="cross-entropy"
            ),
        )
        result = map_compare_experiment(cfg)
        entry = result["pairs"][0]
        sam = np.array(entry["ordered_accuracy"])
        base = np.array(entry["baseline_accuracy"])
        assert np.all(sam >= base)
        assert entry["rows_per_feature"] == 34
