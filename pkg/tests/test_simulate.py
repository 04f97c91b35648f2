import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rctopo.errors import DimensionMismatch, MalformedFile, NonStationaryFilter
from rctopo.network import DiscreteDynamics, discretize
from rctopo.simulate import (
    NoisePlan,
    TimeSeriesPanel,
    export_csv,
    generate_inputs,
    import_csv,
    rollout,
    simulate_panel,
)


def test_white_variance():
    p = generate_inputs(NoisePlan.uniform(1, 1.0, seed=3), 1, 10**6)
    # sd of the variance estimator is sqrt(2/N) ~ 0.0014
    assert p.values.var() == pytest.approx(1.0, abs=0.01)


def test_ar1_autocorrelation():
    x = generate_inputs(NoisePlan.uniform(1, 1.0, "ar1", (0.5,), seed=4), 1, 10**6).values[0]
    x = x - x.mean()
    r1 = np.dot(x[1:], x[:-1]) / np.dot(x, x)
    assert r1 == pytest.approx(0.5, abs=0.01)
    # stationary variance of AR(1) is 1 / (1 - a^2)
    assert x.var() == pytest.approx(4 / 3, rel=0.02)


def test_same_seed_same_panel():
    plan = NoisePlan.uniform(3, 2.0, "ar1", (0.3,), seed=11)
    np.testing.assert_array_equal(generate_inputs(plan, 3, 500).values,
                                  generate_inputs(plan, 3, 500).values)
    other = NoisePlan.uniform(3, 2.0, "ar1", (0.3,), seed=12)
    assert not np.array_equal(generate_inputs(plan, 3, 500).values,
                              generate_inputs(other, 3, 500).values)


def test_inputs_uncorrelated_across_nodes():
    v = generate_inputs(NoisePlan.uniform(5, 1.0, seed=0), 5, 10**5).values
    c = np.corrcoef(v)
    assert np.max(np.abs(c[~np.eye(5, dtype=bool)])) < 0.02


def test_fir_inputs_have_expected_variance():
    taps = (1.0, 0.5, 0.25)
    v = generate_inputs(NoisePlan.uniform(1, 1.0, "fir", taps, seed=1), 1, 2 * 10**5).values
    assert v.var() == pytest.approx(sum(t * t for t in taps), rel=0.02)


def test_plan_validation():
    with pytest.raises(NonStationaryFilter):
        generate_inputs(NoisePlan.uniform(2, 1.0, "ar1", (1.0,)), 2, 10)
    with pytest.raises(ValueError):
        generate_inputs(NoisePlan((1.0, 0.0)), 2, 10)
    with pytest.raises(DimensionMismatch):
        generate_inputs(NoisePlan.uniform(2), 3, 10)


def test_psd_shapes_and_values():
    w = np.array([0.0, np.pi])
    psd = NoisePlan.uniform(2, 1.0, "ar1", (0.5,)).psd(w)
    np.testing.assert_allclose(psd, [[4.0, 1 / 2.25]] * 2)
    np.testing.assert_allclose(NoisePlan.uniform(1, 2.0).psd(w), [[2.0, 2.0]])


def test_zero_dynamics_passes_inputs_through():
    P = TimeSeriesPanel(np.arange(12.0).reshape(2, 6))
    out = rollout(DiscreteDynamics(np.zeros((2, 2)), 1.0), P)
    # column k holds T(k+1) = P(k)
    np.testing.assert_array_equal(out.values, P.values)


def test_hand_iteration():
    A = np.array([[0.9, 0.1], [0.1, 0.9]])
    P = TimeSeriesPanel(np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]))
    out = rollout(DiscreteDynamics(A, 1.0), P).values
    np.testing.assert_allclose(out.T, [[1, 0], [1.9, 0.1], [2.72, 0.28]], atol=1e-14)


def test_rollout_dimension_check():
    with pytest.raises(DimensionMismatch):
        rollout(DiscreteDynamics(np.eye(3) * 0.5, 1.0), TimeSeriesPanel(np.ones((2, 4))))


@given(arrays(float, (3, 40), elements=st.floats(-5, 5)),
       arrays(float, (3, 40), elements=st.floats(-5, 5)),
       st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_rollout_linearity(p1, p2, a, b):
    dyn = DiscreteDynamics(np.array([[0.7, 0.1, 0.0], [0.1, 0.6, 0.1], [0.0, 0.1, 0.8]]), 1.0)
    lhs = rollout(dyn, TimeSeriesPanel(a * p1 + b * p2)).values
    rhs = a * rollout(dyn, TimeSeriesPanel(p1)).values + b * rollout(dyn, TimeSeriesPanel(p2)).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_five_zone_output_is_stationary(five_zone):
    dyn = discretize(five_zone)
    panel = simulate_panel(dyn, NoisePlan.uniform(5, 1.0, seed=2), 2 * 10**5, 1000)
    T = panel.values
    half = T[:, : 10**5]
    # the series is autocorrelated, so use a long-run standard error
    for row in half:
        x = row - row.mean()
        n = x.size
        acf = [np.dot(x[: n - k], x[k:]) / n for k in range(200)]
        lr_var = acf[0] + 2 * sum(acf[1:])
        assert abs(row.mean()) < 3 * np.sqrt(lr_var / n)
    v1, v2 = half.var(axis=1), T.var(axis=1)
    assert np.all(np.abs(v2 / v1 - 1) < 0.05)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    panel = TimeSeriesPanel(rng.standard_normal((4, 50)) * 1e3, 1.0, ("a", "b", "c", "d"))
    export_csv(panel, tmp_path / "p.csv")
    back = import_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.values, panel.values)
    assert back.node_labels == panel.node_labels


@given(arrays(float, (2, 7), elements=st.floats(-1e6, 1e6, allow_subnormal=False)))
@settings(max_examples=50, deadline=None)
def test_csv_round_trip_property(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "p.csv"
    panel = TimeSeriesPanel(values)
    export_csv(panel, path)
    np.testing.assert_array_equal(import_csv(path).values, values)


def test_ragged_row_named(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("1,2\n0.1,0.2\n0.3\n")
    with pytest.raises(MalformedFile, match="row 3"):
        import_csv(f)


def test_non_numeric_cell_named(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("1,2\n0.1,0.2\n0.3,abc\n")
    with pytest.raises(MalformedFile, match=r"row 3, column 2 \(2\).*'abc'"):
        import_csv(f)


def test_panel_rejects_non_finite():
    with pytest.raises(ValueError):
        TimeSeriesPanel(np.array([[1.0, np.nan]]))
