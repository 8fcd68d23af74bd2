"""Cost-model formula arithmetic, orderings and report consistency."""

import numpy as np
import pytest

from kanedge.costs import (
    DEFAULT_UNIT_COSTS,
    CostReport,
    UnitCost,
    UnitCosts,
    accelerator_cost,
    crossbar_cell_count,
    encoder_cost,
    load_unit_costs,
    lookup_path_cost,
    lut_bit_count,
    mlp_baseline_cost,
    save_unit_costs,
)
from kanedge.errors import ConfigError
from kanedge.inputgen import Scheme
from kanedge.kan import KanLayer, KanNetwork
from kanedge.quant import max_subcell_bits
from kanedge.splines import SplineGrid


class TestLutBitArithmetic:
    def test_reference_point(self):
        # G=5, K=3, n=8, LD=5: 2 stored pieces x 32 cells vs 8 tables x 256
        assert lut_bit_count("asp", 5, 3, 8, 5, 6) == 2 * 32 * 6
        assert lut_bit_count("conventional", 5, 3, 8, 5, 6) == 8 * 256 * 6

    def test_shared_table_always_smaller(self):
        # aligned table beats per-basis tables for every feasible combo
        for n in (6, 8, 10):
            for K in (2, 3, 4):
                for G in range(1, 2**n + 1):
                    ld = max_subcell_bits(G, n)
                    asp = lut_bit_count("asp", G, K, n, ld, 6)
                    conv = lut_bit_count("conventional", G, K, n, ld, 6)
                    assert asp < conv

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            lut_bit_count("other", 5, 3, 8, 5, 6)


class TestLookupPathCost:
    def test_area_ratio_grows_with_grid(self):
        ratios = []
        for G in (8, 16, 32, 64):
            conv = lookup_path_cost("conventional", G, 3, 8, None, 6, 1)
            asp = lookup_path_cost("asp", G, 3, 8, None, 6, 1)
            ratios.append(conv.area / asp.area)
        assert all(a < b for a, b in zip(ratios, ratios[1:])), ratios

    def test_monotone_in_grid_at_fixed_ld(self):
        # holding the subdivision fixed, a bigger grid only adds hardware
        prev = None
        for G in (4, 8, 16, 32):
            rep = lookup_path_cost("asp", G, 3, 10, 3, 6, 1)
            if prev is not None:
                assert rep.area >= prev.area and rep.energy >= prev.energy
            prev = rep

    def test_monotone_in_fanout_and_out_bits(self):
        a1 = lookup_path_cost("asp", 8, 3, 8, None, 6, 1)
        a2 = lookup_path_cost("asp", 8, 3, 8, None, 6, 4)
        assert a2.area > a1.area and a2.energy > a1.energy
        b1 = lookup_path_cost("asp", 8, 3, 8, None, 4, 1)
        b2 = lookup_path_cost("asp", 8, 3, 8, None, 10, 1)
        assert b2.area > b1.area

    def test_shared_table_not_multiplied_by_fanout(self):
        one = lookup_path_cost("asp", 8, 3, 8, None, 6, 1)
        many = lookup_path_cost("asp", 8, 3, 8, None, 6, 17)
        assert many.breakdown["lut_bitcell"]["count"] == one.breakdown["lut_bitcell"]["count"]
        assert many.breakdown["decoder_line"]["count"] == 17 * one.breakdown["decoder_line"]["count"]

    def test_infeasible_ld(self):
        with pytest.raises(ConfigError):
            lookup_path_cost("asp", 64, 3, 8, 5, 6, 1)

    def test_breakdown_sums_to_totals(self):
        rep = lookup_path_cost("conventional", 16, 3, 8, None, 6, 3)
        assert rep.area == pytest.approx(sum(e["area"] for e in rep.breakdown.values()))
        assert rep.energy == pytest.approx(sum(e["energy"] for e in rep.breakdown.values()))
        assert rep.latency == pytest.approx(sum(e["latency"] for e in rep.breakdown.values()))


class TestEncoderCost:
    def test_degenerate_n_zero_is_buffer_only(self):
        for scheme in (Scheme.VOLTAGE, Scheme.HYBRID, Scheme.PWM):
            rep = encoder_cost(scheme, 0)
            assert set(rep.breakdown) == {"buffer"}
            assert rep.area == DEFAULT_UNIT_COSTS["buffer"].area

    def test_orderings_at_six_bits(self):
        v = encoder_cost(Scheme.VOLTAGE, 3)
        h = encoder_cost(Scheme.HYBRID, 3)
        p = encoder_cost(Scheme.PWM, 3)
        assert v.area > h.area and p.area > h.area
        assert v.energy > h.energy

    def test_voltage_dac_exponential_in_n(self):
        a = encoder_cost(Scheme.VOLTAGE, 2).breakdown["dac_level"]["count"]
        b = encoder_cost(Scheme.VOLTAGE, 4).breakdown["dac_level"]["count"]
        assert b > 2 * a

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            encoder_cost("laser", 3)


def reference_net(G=5, K=3):
    grid = SplineGrid(G, K, -1.0, 1.0)
    return KanNetwork([KanLayer.zeros(17, 1, grid), KanLayer.zeros(1, 14, grid)])


class TestAcceleratorCost:
    def test_parameter_count_reference(self):
        net = reference_net()
        assert net.n_params == 279
        assert crossbar_cell_count(net) == 279

    def test_zero_layer_cost(self):
        assert accelerator_cost(None).area == 0.0

    def test_kan_below_mlp_reference(self):
        kan = accelerator_cost(reference_net())
        mlp = mlp_baseline_cost(190_214, 14)
        assert kan.area < mlp.area
        assert kan.energy < mlp.energy
        assert kan.latency < mlp.latency

    def test_monotone_in_widths(self):
        grid = SplineGrid(5, 3, -1.0, 1.0)
        small = accelerator_cost(KanNetwork([KanLayer.zeros(4, 2, grid)]))
        big = accelerator_cost(KanNetwork([KanLayer.zeros(8, 2, grid)]))
        assert big.area > small.area and big.energy > small.energy

    def test_breakdown_consistency(self):
        rep = accelerator_cost(reference_net())
        assert rep.area == pytest.approx(sum(e["area"] for e in rep.breakdown.values()))

    def test_mlp_zero_params(self):
        assert mlp_baseline_cost(0, 14).area == 0.0


class TestUnitCostsFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "costs.json"
        save_unit_costs(DEFAULT_UNIT_COSTS, path)
        loaded = load_unit_costs(path)
        assert loaded.version == DEFAULT_UNIT_COSTS.version
        assert "not calibrated" in loaded.note
        for name in DEFAULT_UNIT_COSTS.units:
            assert loaded[name] == DEFAULT_UNIT_COSTS[name]

    def test_missing_primitive_rejected(self):
        with pytest.raises(ConfigError):
            UnitCosts(version=1, note="", units={"adc": UnitCost(1, 1, 1)})

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 1, "units": {"adc": {"area": 1}}}')
        with pytest.raises(ConfigError):
            load_unit_costs(path)

    def test_negative_cost_rejected(self):
        with pytest.raises(ValueError):
            UnitCost(-1.0, 0.0, 0.0)
