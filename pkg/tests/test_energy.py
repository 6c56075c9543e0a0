"""Operation counting and 45 nm energy arithmetic."""

import numpy as np
import pytest

from sedformer import (
    EnergyModel,
    ModelConfig,
    SedFormer,
    SuiteConfig,
    count_ann_layer,
    count_snn_layer,
    energy_estimate,
    make_windows,
    mcar_sparsify,
)
from sedformer.data import synth_suite_panel
from sedformer.energy import (
    CONFIG_NOTE,
    OpCounts,
    layer_energy,
    measure_spike_stats,
    model_energy_report,
    render_table,
)
from sedformer.errors import ConfigError


def test_mac_energy_hand_value():
    e = layer_energy("ann", OpCounts(n_mac=100), EnergyModel())
    assert e == 100 * 4.6
    assert abs(e - 460.0) < 1e-12


def test_sop_count_hand_values():
    assert count_snn_layer(0.5, 10, 4).sop == 20
    assert count_snn_layer(0.0, 10, 4).sop == 0
    assert count_snn_layer(1.0, 10, 4).sop == 40


def test_snn_energy_bundle():
    em = EnergyModel()
    e_half = layer_energy("snn", OpCounts(sop=20), em)
    e_quarter = layer_energy("snn", OpCounts(sop=10), em)
    assert e_half == 220.0
    assert e_quarter == e_half / 2  # energy linear in the spike count


def test_zero_steps_means_zero_activity():
    c = count_ann_layer(8, 8, 0)
    assert (c.n_mac, c.n_add, c.n_rd, c.n_wr, c.sop) == (0, 0, 0, 0, 0)
    assert energy_estimate([], EnergyModel())["total_pj"] == 0.0


def test_ann_counts_hand_values():
    c = count_ann_layer(8, 8, 5)
    assert c.n_mac == 320
    assert c.n_add == 8 * 7 * 5
    assert c.n_rd == 8 * 8 + 8 * 5
    assert c.n_wr == 8 * 5
    assert count_ann_layer(1, 4, 1).n_add == 0


def test_counts_scale_linearly():
    c = OpCounts(1, 2, 3, 4, 5)
    d = c.scaled(3)
    assert (d.n_mac, d.n_add, d.n_rd, d.n_wr, d.sop) == (3, 6, 9, 12, 15)
    em = EnergyModel()
    assert layer_energy("ann", c.scaled(2), em) == pytest.approx(
        2 * layer_energy("ann", c, em), rel=1e-15)


def test_validation_errors():
    with pytest.raises(ConfigError):
        count_ann_layer(0, 4, 1)
    with pytest.raises(ConfigError):
        count_ann_layer(4, 4, -1)
    with pytest.raises(ConfigError):
        count_snn_layer(1.5, 10, 4)
    with pytest.raises(ConfigError):
        count_snn_layer(-0.1, 10, 4)
    with pytest.raises(ConfigError):
        OpCounts(n_mac=-1)
    with pytest.raises(ConfigError):
        OpCounts(n_mac=1.5)
    with pytest.raises(ConfigError):
        EnergyModel(e_mac=-1.0)
    with pytest.raises(ConfigError):
        layer_energy("dense", OpCounts(), EnergyModel())


def test_estimate_breakdown_sums_and_labels():
    layers = [("a", "ann", OpCounts(n_mac=100)),
              ("b", "snn", OpCounts(sop=20))]
    rep = energy_estimate(layers, EnergyModel())
    assert rep["total_pj"] == pytest.approx(100 * 4.6 + 220.0, rel=1e-15)
    assert [r["layer"] for r in rep["layers"]] == ["a", "b"]
    assert rep["layers"][1]["sop"] == 20
    assert rep["note"] == CONFIG_NOTE


def _fixed_window_items(rate: float):
    cfg = SuiteConfig(n_series=1, n_variates=4, n_days=240, rate=rate, seed=3)
    values, _ = synth_suite_panel(cfg, 0)
    mask = np.stack([mcar_sparsify(values.shape[1], rate, seed=7, series_index=d)
                     for d in range(values.shape[0])])
    return make_windows(values, mask)[:2]


def test_model_report_monotone_in_sparsity():
    model = SedFormer(ModelConfig(n_variates=4, conv_channels=4, kernel_size=3,
                                  dim=8, heads=2, blocks=1, pool_stride=2, seed=0))
    totals = []
    for rate in (0.25, 0.5, 0.75):
        rep = model_energy_report(model, _fixed_window_items(rate))
        totals.append(rep["total_pj"])
        assert rep["dense_reference_pj"] > 0.0
        assert 0.0 <= rep["firing"]["pooled_rate"] <= 1.0
        assert rep["note"] == CONFIG_NOTE
    assert totals[0] > totals[1] > totals[2]


def test_spike_stats_and_table():
    model = SedFormer(ModelConfig(n_variates=4, conv_channels=4, kernel_size=3,
                                  dim=8, heads=2, blocks=1, pool_stride=2, seed=0))
    items = _fixed_window_items(0.5)
    stats = measure_spike_stats(model, items)
    assert stats["raw_events"] == sum(it.series.n_events for it in items)
    assert stats["pooled_events"] <= stats["raw_events"]
    text = render_table(model_energy_report(model, items))
    assert "encoder.conv" in text and "decoder" in text
    assert "dense-grid reference" in text
    assert "note:" in text
