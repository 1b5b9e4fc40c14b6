import json
import math

import numpy as np
import pytest

import causa


def lagged_pair(rho=0.8, n=1500, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    y[1:] += rho * x[:-1]
    return causa.TimeSeriesDataset(["X", "Y"], np.column_stack([x, y]))


def test_dataset_and_csv_round_trip():
    d = lagged_pair()
    assert d.num_vars == 2 and len(d) == 1500
    back = causa.parse_csv(causa.format_csv(d))
    assert back.var_names == ["X", "Y"]
    assert np.array_equal(back.values, d.values)


def test_csv_errors_raise_input_error():
    with pytest.raises(causa.InputError, match="column 'b'"):
        causa.parse_csv("a,b\n1,2\n3,nan\n")
    assert issubclass(causa.InputError, causa.Error)


def test_gaussian_mi_closed_form():
    rng = np.random.default_rng(1)
    x = rng.normal(size=10000)
    y = 0.8 * x + 0.6 * rng.normal(size=10000)
    d = causa.TimeSeriesDataset(["X", "Y"], np.column_stack([x, y]))
    i = causa.estimate_cmi(d, [("X", 0)], [("Y", 0)])
    assert abs(i - (-0.5 * math.log(1 - 0.64))) < 0.03  # about 3.5 standard errors at T = 10000


def test_test_dependence_and_te():
    d = lagged_pair()
    r = causa.test_dependence(d, [("X", 1)], [("Y", 0)])
    assert r.p_value < 1e-6 and r.dof_or_surrogates == 1
    te = causa.te_score("X", "Y", data=d)
    assert te.p_value < 1e-6
    s = causa.test_dependence(d, [("X", 1)], [("Y", 0)], config=causa.EstimatorConfig("gaussian", surrogates=99, seed=3))
    assert s.p_value == pytest.approx(0.01)


def test_filter_and_shrink():
    rng = np.random.default_rng(20)
    d = lagged_pair(seed=2)
    noise = rng.normal(size=(1500, 1))
    wide = causa.TimeSeriesDataset(["X", "Y", "W"], np.column_stack([d.values, noise]))
    f = causa.select_features(wide)
    assert ("X", 1) in f.structure["Y"]
    assert "W" not in f.selected_vars
    assert causa.shrink(wide, f).var_names == ["X", "Y"]
    assert json.loads(f.to_json())["selected_vars"] == ["X", "Y"]


def test_discover_both_modes_and_scoring():
    data, truth = causa.generate_toy("s2", n_vars=5, seed=4)
    window = causa.LagWindow(1, 2)
    runs = {}
    for mode in ("fpcmci", "pcmci"):
        cfg = causa.DiscoveryConfig(window=window, mode=mode)
        runs[mode] = causa.discover(data, cfg)
        report = json.loads(causa.run_report_json(runs[mode], cfg))
        assert report["config"]["mode"] == mode
        assert set(runs[mode].timings_ms) == {"filter", "pc", "mci", "total"}
    assert runs["fpcmci"].filter is not None and runs["pcmci"].filter is None
    assert runs["pcmci"].graph.nodes == data.var_names
    score = causa.score_graph(runs["fpcmci"].graph, truth)
    assert 0.0 <= score.f1 <= 1.0 and score.shd == score.fp + score.fn
    assert causa.discover(data, causa.DiscoveryConfig(window=window)).graph == runs["fpcmci"].graph


def test_graph_serialization():
    g = causa.CausalGraph(["X", "Y"], [("X", 1, "Y", 0.4, 0.001)], causa.LagWindow(1, 1), 0.05)
    assert causa.CausalGraph.from_json(g.to_json()) == g
    assert '"X" -> "Y"' in g.to_dot()
    assert g.edge_keys() == [("X", 1, "Y")]
    with pytest.raises(causa.InputError):
        causa.CausalGraph(["X", "Y"], [("X", 0, "Y")])


def test_var_generator_and_metrics():
    data, truth = causa.generate_var(3, 500, density=1.0, coeff_lo=0.0, coeff_hi=0.3)
    assert len(truth.edges) == 9
    assert causa.nmae([0, 2], [1, 1]) == 1.0
    assert causa.nrmse([0, 2], [1, 1]) == 1.0


def test_degenerate_data_raises_estimation_error():
    d = causa.TimeSeriesDataset(["a", "b"], np.column_stack([np.arange(100.0), np.full(100, 5.0)]))
    with pytest.raises(causa.EstimationError, match="zero variance"):
        causa.discover(d)
