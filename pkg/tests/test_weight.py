import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multibump.errors import SpecError
from multibump.weight import WeightSpec, build_weight, eval_weight, sin_weight


def test_sin3_pattern():
    w = sin_weight(3)
    pat = w.pattern
    assert pat.n == 2
    # closed-form roots of sin(3 pi x)
    np.testing.assert_allclose(pat.sigma, [0.0, 2 / 3], atol=1e-10)
    np.testing.assert_allclose(pat.tau, [1 / 3, 1.0], atol=1e-10)


def test_sin5_pattern():
    pat = sin_weight(5).pattern
    assert pat.n == 3
    np.testing.assert_allclose(pat.sigma, [0.0, 0.4, 0.8], atol=1e-10)
    np.testing.assert_allclose(pat.tau, [0.2, 0.6, 1.0], atol=1e-10)


@pytest.mark.parametrize("m", [3, 5, 7])
def test_sin_growth_exponent_is_one(m):
    # sin vanishes linearly at each simple root
    np.testing.assert_allclose(sin_weight(m).pattern.gamma, 1.0, atol=0.05)


def test_sin1_single_interval():
    w = sin_weight(1)
    assert w.n == 1 and w.pattern.negative_intervals() == []


def test_eval_values():
    w = sin_weight(3)
    assert eval_weight(w, 1 / 6) == pytest.approx(1.0, abs=1e-15)
    assert eval_weight(w, 0.5) == pytest.approx(-1.0, abs=1e-15)
    assert eval_weight(w, 1 / 3) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("x", [-1e-9, 1.0 + 1e-9, 2.0])
def test_eval_rejects_outside_domain(x):
    with pytest.raises(SpecError):
        eval_weight(sin_weight(3), x)


def test_sign_consistency_and_sup():
    rng = np.random.default_rng(7)
    for m in (3, 5):
        w = sin_weight(m)
        for s, t in w.pattern.positive_intervals():
            assert np.all(w(rng.uniform(s, t, 1000)[1:-1]) > 0)
        for s, t in w.pattern.interior_negative_intervals():
            assert np.all(w(rng.uniform(s, t, 1000)[1:-1]) < 0)
        x = np.linspace(0, 1, 20001)
        assert np.max(np.abs(w(x))) <= w.sup_norm * (1 + 1e-12)
        assert np.max(np.abs(w(x))) == pytest.approx(w.sup_norm, rel=1e-8)


@pytest.mark.parametrize("m", [0, 2, 4, -3, 2.5])
def test_sin_rejects_bad_m(m):
    with pytest.raises(SpecError):
        WeightSpec("sin_multibump", m=m)


def piecewise_spec(gamma=(1.0, 2.0)):
    return {"kind": "piecewise_power", "L": 1.0, "sigma": [0.0, 0.6], "tau": [0.3, 1.0],
            "gamma": list(gamma), "c": [2.0, 3.0], "d": [1.5]}


def test_piecewise_pattern_and_exponents():
    w = build_weight(piecewise_spec())
    np.testing.assert_allclose(w.pattern.sigma, [0.0, 0.6], atol=1e-10)
    np.testing.assert_allclose(w.pattern.tau, [0.3, 1.0], atol=1e-10)
    np.testing.assert_allclose(w.pattern.gamma, [1.0, 2.0], atol=0.05)
    assert w(0.45) == pytest.approx(-1.5)
    # analytic sup: max of c*(half width)^gamma and the depths
    assert w.sup_norm == pytest.approx(max(2 * 0.15, 3 * 0.2 ** 2, 1.5))


def test_piecewise_with_boundary_negativity():
    spec = {"kind": "piecewise_power", "L": 2.0, "sigma": [0.2, 1.2], "tau": [0.8, 1.7],
            "gamma": [1.5, 1.0], "c": [1.0, 1.0], "d": [0.5, 1.0, 0.7]}
    w = build_weight(spec)
    np.testing.assert_allclose(w.pattern.sigma, [0.2, 1.2], atol=1e-10)
    np.testing.assert_allclose(w.pattern.tau, [0.8, 1.7], atol=1e-10)
    np.testing.assert_allclose(w.pattern.gamma, [1.5, 1.0], atol=0.05)
    assert w(0.0) < 0 and w(2.0) < 0


def test_piecewise_rejects_unordered_breakpoints():
    spec = piecewise_spec()
    spec["tau"] = [0.7, 1.0]
    with pytest.raises(SpecError):
        build_weight(spec)


def test_tabulated_needs_64_samples():
    x = np.linspace(0, 1, 63)
    with pytest.raises(SpecError):
        build_weight({"kind": "tabulated", "x": list(x), "a": list(np.sin(3 * np.pi * x))})


def test_tabulated_matches_sin():
    x = np.linspace(0, 1, 4001)
    w = build_weight({"kind": "tabulated", "x": list(x), "a": list(np.sin(3 * np.pi * x))})
    np.testing.assert_allclose(w.pattern.tau[0], 1 / 3, atol=1e-6)
    assert w.sup_norm == pytest.approx(1.0, abs=1e-6)


def test_touching_zero_rejected():
    # sin^2(2 pi x) touches zero at 1/2 without changing sign
    x = np.linspace(0, 1, 2001)
    a = np.sin(2 * np.pi * x) ** 2 * (1 - 2 * (x > 0.9))
    with pytest.raises(SpecError):
        build_weight({"kind": "tabulated", "x": list(x), "a": list(a)})


@settings(max_examples=25, deadline=None)
@given(m=st.sampled_from([1, 3, 5, 7, 9]), L=st.floats(0.5, 4.0))
def test_spec_json_round_trip(m, L):
    spec = WeightSpec("sin_multibump", L=L, m=m)
    assert WeightSpec.from_json(json.dumps(spec.to_dict())) == spec


def test_sin_scaled_domain():
    w = sin_weight(3, L=2.0)
    np.testing.assert_allclose(w.pattern.tau, [2 / 3, 2.0], atol=1e-10)
