import math

import numpy as np
import pytest

from conftest import (
    EX1_THETA0,
    EX1_THETA1,
    EX2_THETA0,
    EX2_THETA1,
    P01,
    P10,
    closed_form_mu,
)
from mlmr.analysis import (
    analyze,
    b_constant,
    find_t1,
    gaps,
    l_threshold,
    mean_rewards,
    regret_trace,
    theorem1_bound,
    theorem2_bound,
)
from mlmr.errors import AllArmsOptimal, DivergenceCapExceeded, ThresholdViolated
from mlmr.markov import ChainSpec, ProblemInstance
from mlmr.matching import enumerate_matchings
from mlmr.policies import ConstantL, MLMRPolicy, OraclePolicy, UniformRandomPolicy, log_log, power
from mlmr.rng import RandomStream


def spreadsheet_scalars(theta0, theta1, m=2):
    """Every bound ingredient from the raw two-state tables, cell by cell."""
    p01, p10 = np.array(P01), np.array(P10)
    t0, t1 = np.array(theta0), np.array(theta1)
    pi0 = p10 / (p01 + p10)
    pi1 = p01 / (p01 + p10)
    mu = t0 * pi0 + t1 * pi1
    arms = [sum(mu[i, a[i]] for i in range(m)) for a in enumerate_matchings(m, 4)]
    best = max(arms)
    subopt = [best - v for v in arms if best - v > 1e-12]
    return dict(
        mu_star=best,
        delta_min=min(subopt),
        delta_max=best - min(arms),
        pi_min=min(pi0.min(), pi1.min()),
        theta_max=max(t0.max(), t1.max()),
        theta_min=min(t0.min(), t1.min()),
        eps_min=(p01 + p10).min(),
        eps_max=(p01 + p10).max(),
        a=(t0.sum() + t1.sum()) / min(pi0.min(), pi1.min()),
    )


def constant_bound_by_hand(s, L, n, m=2, nres=4, smax=2, smin=2):
    log_term = 4 * m**3 * nres * L * math.log(n) / s["delta_min"] ** 2
    conf = smax / s["pi_min"] * (1 + s["eps_max"] * math.sqrt(L) / (10 * smin * s["theta_min"]))
    return (log_term + m * nres + m**2 * nres * conf * math.pi / 3) * s["delta_max"] + s["a"]


# -- mean rewards and gaps -----------------------------------------------------------

def test_mean_rewards_closed_form(ex1, ex2):
    np.testing.assert_allclose(mean_rewards(ex1), closed_form_mu(EX1_THETA0, EX1_THETA1), atol=1e-12)
    np.testing.assert_allclose(mean_rewards(ex2), closed_form_mu(EX2_THETA0, EX2_THETA1), atol=1e-12)


def test_mean_rewards_single_state():
    r = np.array([[0.1, 0.7, 0.4]])
    assert np.array_equal(mean_rewards(ProblemInstance.constant(r)), r)


def test_gaps_reference_values(ex1, ex2):
    assert gaps(ex1)[0] == pytest.approx(0.1706, abs=5e-5)
    assert gaps(ex2)[0] == pytest.approx(0.0091, abs=5e-5)


def test_gaps_all_optimal():
    c = ChainSpec.two_state(0.3, 0.4, 0.2, 0.9)
    with pytest.raises(AllArmsOptimal):
        gaps(ProblemInstance(((c, c), (c, c))))


def test_pair_delta_min_by_enumeration(ex2):
    mu = mean_rewards(ex2)
    _, _, pair = gaps(ex2)
    vals = {a: mu[0, a[0]] + mu[1, a[1]] for a in enumerate_matchings(2, 4)}
    best = max(vals.values())
    for i in range(2):
        for j in range(4):
            cands = [best - v for a, v in vals.items() if a[i] == j and best - v > 1e-12]
            assert pair[i, j] == pytest.approx(min(cands), abs=1e-15)


def test_analysis_invariants(ex1, ex2):
    for inst, t0, t1 in ((ex1, EX1_THETA0, EX1_THETA1), (ex2, EX2_THETA0, EX2_THETA1)):
        a = analyze(inst)
        s = spreadsheet_scalars(t0, t1)
        assert a.optimal_matching == (0, 2)
        assert a.mu_star == pytest.approx(sum(a.mu[i, j] for i, j in enumerate(a.optimal_matching)), abs=1e-15)
        assert a.mu_star == pytest.approx(s["mu_star"], abs=1e-12)
        assert a.delta_min <= a.delta_max
        assert a.delta_max == pytest.approx(s["delta_max"], abs=1e-12)
        assert a.pi_min == pytest.approx(s["pi_min"], abs=1e-12)
        assert (a.eps_min, a.eps_max) == pytest.approx((s["eps_min"], s["eps_max"]), abs=1e-12)
        assert a.a_bound >= 0
        assert a.a_bound == pytest.approx(s["a"], rel=1e-12)
        assert (a.s_max, a.s_min) == (2, 2)


# -- threshold and bounds ------------------------------------------------------------

def test_threshold_example1(ex1):
    thr = l_threshold(ex1)
    assert thr == pytest.approx(130 * 0.64 * 4 / 1.1, rel=1e-12)
    assert thr == pytest.approx(302.545, abs=1e-3)
    assert math.ceil(thr) == 303


def test_threshold_trivial():
    inst = ProblemInstance.constant([[1.0, 0.5]])
    assert l_threshold(inst) == pytest.approx(90.0)


def test_threshold_example2(ex2):
    s = spreadsheet_scalars(EX2_THETA0, EX2_THETA1)
    assert s["theta_max"] == 0.8
    assert l_threshold(ex2) == pytest.approx(l_threshold(analyze(ex2)))
    assert l_threshold(ex2) == pytest.approx(302.5454545, abs=1e-6)


def test_constant_bound_n1_drops_log_term(ex1):
    s = spreadsheet_scalars(EX1_THETA0, EX1_THETA1)
    conf = 2 / s["pi_min"] * (1 + s["eps_max"] * math.sqrt(303) / (10 * 2 * s["theta_min"]))
    expected = (8 + 4 * 4 * conf * math.pi / 3) * s["delta_max"] + s["a"]
    assert theorem1_bound(ex1, 303, 1) == pytest.approx(expected, rel=1e-12)


def test_constant_bound_spreadsheet_oracle(ex1):
    s = spreadsheet_scalars(EX1_THETA0, EX1_THETA1)
    assert theorem1_bound(ex1, 303, 10**6) == pytest.approx(constant_bound_by_hand(s, 303, 10**6), rel=1e-9)
    assert theorem1_bound(ex1, 303, 10**6, include_a=False) == pytest.approx(
        constant_bound_by_hand(s, 303, 10**6) - s["a"], rel=1e-9)


def test_constant_bound_monotone(ex1):
    a = analyze(ex1)
    ns = np.unique(np.geomspace(1, 10**9, 200).astype(int))
    vals = [theorem1_bound(a, 303, int(n)) for n in ns]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_constant_bound_threshold_violated(ex1):
    with pytest.raises(ThresholdViolated):
        theorem1_bound(ex1, 2, 100)


def test_schedule_bound_constant_above_threshold(ex1):
    a = analyze(ex1)
    sched = ConstantL(400.0)
    assert find_t1(sched, (60 + 80) * 0.64 * 4 / 1.1) == 1
    assert b_constant(a, sched) == 1.0
    n = 10**5
    conf = a.s_max / a.pi_min * (1 + a.eps_max / (10 * a.s_min * a.theta_min))
    expected = (4 * 8 * 4 * 400 * math.log(n) / a.delta_min**2 + 8 + 16 * conf * math.pi / 3) * a.delta_max + a.a_bound
    assert theorem2_bound(a, sched, n) == pytest.approx(expected, rel=1e-12)


def test_schedule_bound_log_log_summation_oracle(ex1):
    a = analyze(ex1)
    c = 200.0
    sched = log_log(c)
    thr = (60 + 40 * 2) * a.theta_max**2 * a.s_max**2 / a.eps_min
    t = 1
    while min(c * math.log(math.log(t + math.e)), t) < thr:
        t += 1
    assert find_t1(sched, thr) == t
    total = 0.0
    for u in range(1, t):
        L = min(c * math.log(math.log(u + math.e)), u)
        expo = -(L * a.eps_min - 90 * 4 * 0.64) / (20 * 4 * 0.64) + 0.5
        total += 2 * u**expo
    conf = a.s_max / a.pi_min * (1 + a.eps_max / (10 * a.s_min * a.theta_min))
    assert b_constant(a, sched) == pytest.approx(1 + 2 * conf * total, rel=1e-9)
    assert theorem2_bound(a, sched, 10**5) > theorem1_bound(a, 303, 10**5)


def test_schedule_bound_identity_schedule(ex1):
    a = analyze(ex1)
    thr = (60 + 80) * 0.64 * 4 / 1.1
    assert find_t1(power(1.0, 1.0), thr) == math.ceil(thr)


def test_schedule_bound_divergence_cap(ex1):
    with pytest.raises(DivergenceCapExceeded):
        theorem2_bound(ex1, log_log(1.0), 100)


# -- regret traces ---------------------------------------------------------------------

def test_oracle_regret_zero_on_single_state():
    inst = ProblemInstance.constant([[0.3, 0.9, 0.1], [0.5, 0.2, 0.8]])
    tr = regret_trace(inst, OraclePolicy(inst), 500, RandomStream(0))
    assert np.all(np.abs(tr.regret) < 1e-9)


def test_uniform_random_linear_regret():
    w = np.array([[0.3, 0.9, 0.1], [0.5, 0.2, 0.8]])
    inst = ProblemInstance.constant(w)
    vals = [w[0, a[0]] + w[1, a[1]] for a in enumerate_matchings(2, 3)]
    slope = max(vals) - np.mean(vals)
    horizon = 6000
    finals = [
        regret_trace(inst, UniformRandomPolicy(2, 3, RandomStream(r, 1)), horizon, RandomStream(r)).regret[-1]
        for r in range(10)
    ]
    assert np.mean(finals) / horizon == pytest.approx(slope, abs=0.01)


def test_bookkeeping_identity(ex1):
    tr = regret_trace(ex1, MLMRPolicy(2, 4, ConstantL(2.0)), 5000, RandomStream(4))
    t = np.arange(1, 5001)
    assert np.max(np.abs(t * tr.mu_star - tr.regret - tr.cumulative_reward)) < 1e-9
    for cp, counts in zip(tr.checkpoints, tr.counts):
        assert np.all(counts.sum(axis=1) == cp)
