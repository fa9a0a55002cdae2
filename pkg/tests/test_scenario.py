import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from twr.scenario import (ConditioningWarning, InterfererSpec, NodeId, Scenario, ScenarioError,
                          ScenarioFormatError, TieError, build_interference_profile, build_profile,
                          channel_variances, default_interferer_variances, load_scenario,
                          scenario_from_dict, swap_roles)


def _spec(**kw):
    return InterfererSpec(**{"count": 2, "power": 0.1, **kw})


def _scenario(D=0.5, omega=0.5, t1=None, t2=None, r=None):
    t1 = t1 or _spec()
    return Scenario(P=100.0, v=3.0, D=D, omega=omega,
                    interferers={NodeId.T1: t1, NodeId.T2: t2 or t1, NodeId.R: r or t1})


def test_channel_variances():
    assert channel_variances(0.5, 3) == (1.0, 8.0, 8.0)
    assert channel_variances(0.5, 2) == (1.0, 4.0, 4.0)
    o = channel_variances(0.8, 4)
    np.testing.assert_allclose(o, (1.0, 625.0, 0.8 ** -4), rtol=1e-12)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ScenarioError):
            channel_variances(bad, 3)


def test_default_variances():
    assert default_interferer_variances(1) == [1.0]
    np.testing.assert_allclose(default_interferer_variances(2), [0.1, 1.0])
    np.testing.assert_allclose(default_interferer_variances(5), [0.1, 0.325, 0.55, 0.775, 1.0])


def test_profile_single_interferer():
    p = build_profile(InterfererSpec(1, 1.0, (1.0,)))
    np.testing.assert_allclose(p.xi, [1.0])
    np.testing.assert_allclose(p.phi, [1.0])
    assert p.gamma1 == 1.0 and p.gamma2 == 2.0


def test_profile_two_interferers():
    p = build_profile(InterfererSpec(2, 1.0, (1.0, 2.0)))
    np.testing.assert_allclose(p.phi, [-1.0, 1.0])
    assert p.gamma1 == 3.0 and p.gamma2 == 14.0


def test_profile_small_power_against_simulation():
    # Frozen from the closed form; 10^6 simulated sums must agree within 4 stderr.
    p = build_profile(InterfererSpec(2, 0.1, (0.1, 1.0)))
    np.testing.assert_allclose(p.xi, [0.01, 0.1])
    np.testing.assert_allclose(p.phi, [-1 / 0.09, 1 / 0.09], rtol=1e-12)
    assert math.isclose(p.gamma1, 0.11, rel_tol=1e-12)
    rng = np.random.default_rng(7)
    x = rng.exponential(0.01, 10**6) + rng.exponential(0.1, 10**6)
    for moment, want in ((x, p.gamma1), (x ** 2, p.gamma2)):
        assert abs(moment.mean() - want) < 4 * moment.std() / 1e3


@settings(max_examples=60, deadline=None)
@given(L=st.integers(1, 6), power=st.floats(1e-2, 1e2),
       seed=st.integers(0, 2**31))
def test_profile_moment_identities(L, power, seed):
    rng = np.random.default_rng(seed)
    var = np.sort(rng.uniform(0.05, 1.0, L))
    if L > 1 and np.min(np.diff(var)) / var.max() < 0.05:
        var = np.linspace(0.1, 1.0, L)
    p = build_profile(InterfererSpec(L, power, tuple(var)))
    assert abs(np.sum(p.phi * p.xi) - 1) < 1e-9
    assert abs(np.sum(p.phi * p.xi ** 2) / p.gamma1 - 1) < 1e-9
    # E[G^2] = 2 sum phi xi^3 for a sum-of-exponentials density.
    assert abs(2 * np.sum(p.phi * p.xi ** 3) / p.gamma2 - 1) < 1e-9
    assert math.isclose(p.gamma2, p.xi.sum() ** 2 + np.sum(p.xi ** 2), rel_tol=1e-12)


@pytest.mark.parametrize("L", [1, 2, 3, 5, 8])
def test_density_normalized_and_nonnegative(L):
    p = build_profile(InterfererSpec(L, 0.7))
    hi = 50 * p.gamma1
    area, _ = integrate.quad(lambda t: float(p.pdf(t)), 0, hi, points=[p.xi.min(), p.xi.max()],
                             limit=200, epsabs=1e-13)
    assert abs(area - 1) < 1e-6
    t = np.linspace(0, hi, 20001)
    assert p.pdf(t).min() >= -1e-12


def test_ties():
    spec = InterfererSpec(3, 1.0, (0.5, 0.5, 1.0))
    with pytest.raises(TieError):
        build_profile(spec)
    with pytest.warns(ConditioningWarning):
        p = build_profile(spec, tie_policy="perturb")
    assert len(set(p.xi.tolist())) == 3
    assert p.ill_conditioned


def test_conditioning_warning():
    with pytest.warns(ConditioningWarning):
        p = build_profile(InterfererSpec(2, 1.0, (0.5, 0.5002)))
    assert p.ill_conditioned


def test_invalid_specs():
    with pytest.raises(ScenarioError):
        InterfererSpec(0, 1.0)
    with pytest.raises(ScenarioError):
        InterfererSpec(2, 1.0, (1.0,))
    with pytest.raises(ScenarioError):
        InterfererSpec(1, -1.0)
    with pytest.raises(ScenarioError):
        build_profile(InterfererSpec(2, 0.0))
    with pytest.raises(ScenarioError):
        _scenario(omega=1.0)


def test_derived_snrs():
    s = _scenario(D=0.25)
    np.testing.assert_allclose(s.mean_snrs, (100.0, 100 * 0.75 ** -3, 100 * 0.25 ** -3))


def test_swap_roles():
    s = _scenario()
    assert swap_roles(s) == s
    a = _scenario(D=0.3, omega=0.6, t1=_spec(power=0.2), t2=_spec(power=0.05))
    b = swap_roles(a)
    assert math.isclose(b.D, 0.7) and math.isclose(b.omega, 0.4)
    assert b.interferers[NodeId.T1] == a.interferers[NodeId.T2]
    back = swap_roles(b)
    assert math.isclose(back.D, a.D) and math.isclose(back.omega, a.omega)
    assert dict(back.interferers) == dict(a.interferers)


def test_interference_profile_lookup():
    prof = build_interference_profile(_scenario())
    assert prof["R"].gamma1 == prof[NodeId.R].gamma1


def test_json_roundtrip(tmp_path):
    doc = {"P_dB": 20, "D": 0.5, "omega": 0.5,
           "interferers": {"T1": {"L": 2, "P_I_dB": 0}, "T2": {"L": 2, "P_I_dB": None},
                           "R": {"L": 1, "P_I_dB": 3, "variances": [0.5]}}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    s = load_scenario(path)
    assert s.P == pytest.approx(100.0) and s.v == 3.0
    assert s.interferers[NodeId.T2].power == 0.0
    assert s.interferers[NodeId.R].variances == (0.5,)
    with pytest.raises(ScenarioFormatError):
        scenario_from_dict({"P_dB": 20})
    with pytest.raises(ScenarioFormatError):
        scenario_from_dict({**doc, "interferers": {"T1": {"L": 2}}})
