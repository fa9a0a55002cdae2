import math

import numpy as np
import pytest

from twr import mcsim, presets
from twr.mcsim import ChannelDraw, block_rng, sample_draw, sinr
from twr.scenario import InterfererSpec, NodeId, Scenario, build_profile


def _free(P=10.0, omega=0.5, D=0.5):
    z = InterfererSpec(1, 0.0)
    return Scenario(P=P, v=3.0, D=D, omega=omega, interferers={n: z for n in NodeId})


def test_hand_computed_sinr():
    d = ChannelDraw(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    t = sinr(d, _free(), NodeId.T1)
    assert math.isclose(t.harmonic, 1.25)
    assert math.isclose(t.min_bound, 1 + 1 / 3)
    # Exact form adds (G_R + 1)/(G_R + w1 G_T1 + w1 + 1) = 2/3 to the denominator.
    assert math.isclose(t.exact, 1 + (1 / 3) / (4 / 3 + 2 / 3))


def test_broken_uplink():
    d = ChannelDraw(2.0, 0.0, 5.0, 1.0, 1.0, 1.0)
    t = sinr(d, _free(), NodeId.T1)
    assert t.harmonic == t.min_bound == t.exact == 1.0


def test_terminal_two_mirrors_terminal_one():
    s = presets.asymmetric_scenario(20, 20, 25, 15).with_(D=0.3, omega=0.7)
    d = sample_draw(s, block_rng(3, 0), 1000)
    mirror = ChannelDraw(d.gamma0, d.gamma2, d.gamma1, d.Gamma_T2, d.Gamma_T1, d.Gamma_R)
    from twr.scenario import swap_roles
    a = sinr(d, s, NodeId.T2)
    b = sinr(mirror, swap_roles(s), NodeId.T1)
    np.testing.assert_allclose(a.exact, b.exact, rtol=1e-13)
    np.testing.assert_allclose(a.min_bound, b.min_bound, rtol=1e-13)


def test_ordering_on_many_draws():
    s = presets.fig4_scenario(15.0).with_(omega=0.3, D=0.6)
    d = sample_draw(s, block_rng(11, 0), 10**6)
    for term in (NodeId.T1, NodeId.T2):
        t = sinr(d, s, term)
        assert np.all(t.exact <= t.harmonic)
        assert np.all(t.harmonic <= t.min_bound)


def test_sample_moments():
    s = presets.fig4_scenario(10.0)
    d = sample_draw(s, block_rng(5, 0), 10**6)
    for x, mean in zip((d.gamma0, d.gamma1, d.gamma2), s.mean_snrs):
        assert abs(x.mean() - mean) < 4 * x.std() / 1e3
    for node, x in ((NodeId.T1, d.Gamma_T1), (NodeId.R, d.Gamma_R)):
        p = build_profile(s.interferers[node])
        assert abs(x.mean() - p.gamma1) < 4 * x.std() / 1e3
        assert abs((x ** 2).mean() - p.gamma2) < 4 * (x ** 2).std() / 1e3


def test_zero_interference_draws():
    d = sample_draw(_free(), block_rng(0, 0), 1000)
    assert np.all(d.Gamma_T1 == 0) and np.all(d.Gamma_R == 0)


def test_scalar_draw():
    d = sample_draw(_free(), block_rng(0, 0))
    assert isinstance(d.gamma0, float)


def test_outage_limits():
    s = presets.fig3_scenario(20.0)
    assert mcsim.estimate_outage(s, 1e-12, n=20000, seed=1).mean == 0.0
    assert mcsim.estimate_outage(s, 1e9, n=20000, seed=1).mean == 1.0


def test_protocol_is_combination_of_terminals():
    s = presets.fig3_scenario(15.0)
    r = mcsim.simulate(s, n=50000, seed=4, ber=None, rate=False)
    p1, p2 = r["outage_T1"].mean, r["outage_T2"].mean
    assert math.isclose(r["outage_pro"].mean, p1 + p2 - p1 * p2)
    assert r["outage_sys"].mean >= max(p1, p2)


def test_degenerate_ber_and_rate():
    tiny = _free(P=1e-300)
    assert mcsim.estimate_sum_ber(tiny, 0.5, 1.0, n=1000).mean == pytest.approx(1.0)
    assert mcsim.estimate_sum_rate(tiny, n=1000).mean == pytest.approx(0.0, abs=1e-200)


def test_ber_kernel_value():
    # Deterministic unit SINR at both terminals: 2 * 0.5 * erfc(1).
    assert math.isclose(2 * 0.5 * math.erfc(1.0), 0.1572992070502851, rel_tol=1e-15)


def test_rate_kernel_value():
    assert math.isclose(2 * math.log2(1 + 7) / 3, 2.0)


def test_simulate_matches_single_estimators():
    s = presets.fig3_scenario(20.0)
    r = mcsim.simulate(s, n=70000, seed=9)
    assert r["outage_pro"] == mcsim.estimate_outage(s, 7.0, n=70000, seed=9)
    assert r["ber"] == mcsim.estimate_sum_ber(s, n=70000, seed=9)
    assert r["rate"] == mcsim.estimate_sum_rate(s, n=70000, seed=9)


def test_outage_curve_matches_single_thresholds():
    s = presets.fig3_scenario(20.0)
    curve = mcsim.outage_curve(s, [3.0, 7.0], n=70000, seed=2, kind="system")
    assert curve[1] == mcsim.estimate_outage(s, 7.0, n=70000, seed=2, kind="system")


def test_thread_count_does_not_change_results(monkeypatch):
    s = presets.fig4_scenario(20.0)
    monkeypatch.setenv("TWR_THREADS", "1")
    a = mcsim.simulate(s, n=200000, seed=12)
    monkeypatch.setenv("TWR_THREADS", "4")
    b = mcsim.simulate(s, n=200000, seed=12)
    assert a == b


def test_protocol_close_to_system_at_high_snr():
    gaps = []
    for p in (10.0, 30.0):
        r = mcsim.simulate(presets.fig3_scenario(p), n=200000, seed=8, ber=None, rate=False)
        gaps.append(abs(r["outage_pro"].mean - r["outage_sys"].mean))
    assert gaps[1] < gaps[0]


# Regression anchors: 10^6 draws, seed 2024, exact SINR. The values are
# frozen from the first run and must reproduce bit-for-bit.
ANCHORS = [
    ("outage", 0.011841734524, 1.3008142791436314e-4),
    ("ber", 1.9908940665674748e-4, 4.953494250004237e-6),
    ("rate", 4.815520055402706, 7.116264932371142e-4),
]


@pytest.mark.parametrize("kind,mean,se", ANCHORS)
def test_regression_anchors(kind, mean, se):
    if kind == "outage":
        est = mcsim.estimate_outage(presets.fig3_scenario(20.0), 7.0, n=10**6, seed=2024)
    elif kind == "ber":
        est = mcsim.estimate_sum_ber(presets.fig4_scenario(25.0), 0.5, 1.0, n=10**6, seed=2024)
    else:
        est = mcsim.estimate_sum_rate(presets.fig5_scenario(20.0), n=10**6, seed=2024)
    assert math.isclose(est.mean, mean, rel_tol=1e-10)
    assert math.isclose(est.stderr, se, rel_tol=1e-8)


def test_mutation_hook_changes_sinr(monkeypatch):
    s = presets.fig3_scenario(20.0)
    d = ChannelDraw(10.0, 10.0, 10.0, 2.0, 2.0, 1.0)
    base = sinr(d, s).min_bound
    monkeypatch.setenv("TWR_MUTATION", "drop_omega_gamma_t")
    assert sinr(d, s).min_bound > base
    monkeypatch.setenv("TWR_MUTATION", "no_such_fault")
    with pytest.raises(ValueError):
        sinr(d, s)
