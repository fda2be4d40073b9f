"""Instance statistics, regret bounds and single-run regret traces."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    AllArmsOptimal,
    DivergenceCapExceeded,
    NotComputable,
    ThresholdViolated,
    ValidationError,
)
from .markov import ProblemInstance, eigenvalue_gap, pack_instance, sample_next, stationary_distribution
from .matching import DEFAULT_CAP, enumerate_matchings, max_weight_matching
from .policies import MLMRPolicy

OPTIMAL_TOL = 1e-12
T1_CAP = 10**9
BLOCK = 1 << 16


@dataclass(frozen=True, eq=False)
class InstanceAnalysis:
    """Every scalar the regret bounds are built from.

    ``eps`` holds the per-pair eigenvalue gaps (NaN where the spectrum is
    complex); ``eps_min``/``eps_max`` are NaN whenever any pair is NaN.
    ``a_bound`` is sum of all state rewards over pi_min, an upper bound on
    the transient constant of the regret decomposition.
    """

    num_users: int
    num_resources: int
    mu: np.ndarray
    mu_star: float
    optimal_matching: tuple
    delta_min: float
    delta_max: float
    pair_delta_min: np.ndarray
    pi_min: float
    s_max: int
    s_min: int
    theta_max: float
    theta_min: float
    eps: np.ndarray
    eps_max: float
    eps_min: float
    a_bound: float


def mean_rewards(instance):
    m, n = instance.shape
    mu = np.empty((m, n))
    for i, j, c in instance.pairs():
        mu[i, j] = float(c.rewards @ stationary_distribution(c))
    return mu


def gaps(instance, cap=DEFAULT_CAP, mu=None):
    """Return (delta_min, delta_max, per-pair delta_min matrix) by arm enumeration.

    The per-pair entry is the smallest gap among strictly suboptimal arms
    that use the pair (inf when no such arm exists).
    """
    if mu is None:
        mu = mean_rewards(instance)
    m, n = mu.shape
    arms = list(enumerate_matchings(m, n, cap))
    idx = np.arange(m)
    values = np.array([mu[idx, list(a)].sum() for a in arms])
    mu_star = values.max()
    deltas = mu_star - values
    sub = deltas > OPTIMAL_TOL
    if not np.any(sub):
        raise AllArmsOptimal("every arm attains the optimal mean; delta_min is undefined")
    pair = np.full((m, n), np.inf)
    for a, d, s in zip(arms, deltas, sub):
        if s:
            for i, j in enumerate(a):
                if d < pair[i, j]:
                    pair[i, j] = d
    return float(deltas[sub].min()), float(deltas.max()), pair


def analyze(instance, cap=DEFAULT_CAP):
    m, n = instance.shape
    pis = {}
    mu = np.empty((m, n))
    eps = np.empty((m, n))
    for i, j, c in instance.pairs():
        pi = stationary_distribution(c)
        pis[i, j] = pi
        mu[i, j] = float(c.rewards @ pi)
        try:
            eps[i, j] = eigenvalue_gap(c)
        except NotComputable:
            eps[i, j] = np.nan
    optimal, mu_star = max_weight_matching(mu)
    delta_min, delta_max, pair = gaps(instance, cap, mu=mu)
    pi_min = min(float(p.min()) for p in pis.values())
    sizes = [c.num_states for _, _, c in instance.pairs()]
    thetas = np.concatenate([c.rewards for _, _, c in instance.pairs()])
    return InstanceAnalysis(
        num_users=m,
        num_resources=n,
        mu=mu,
        mu_star=mu_star,
        optimal_matching=optimal,
        delta_min=delta_min,
        delta_max=delta_max,
        pair_delta_min=pair,
        pi_min=pi_min,
        s_max=max(sizes),
        s_min=min(sizes),
        theta_max=float(thetas.max()),
        theta_min=float(thetas.min()),
        eps=eps,
        eps_max=float(eps.max()),
        eps_min=float(eps.min()),
        a_bound=float(thetas.sum()) / pi_min,
    )


def _as_analysis(obj):
    if isinstance(obj, InstanceAnalysis):
        return obj
    if isinstance(obj, ProblemInstance):
        return analyze(obj)
    raise TypeError(f"expected ProblemInstance or InstanceAnalysis, got {type(obj).__name__}")


def _threshold(a, base):
    if math.isnan(a.eps_min):
        raise NotComputable("eps_min undefined: some pair has a complex spectrum")
    return (base + 40 * a.num_users) * a.theta_max**2 * a.s_max**2 / a.eps_min


def l_threshold(instance):
    """Smallest constant L for which the logarithmic bound holds."""
    return _threshold(_as_analysis(instance), 50)


def _confidence_factor(a, sqrt_l):
    if a.theta_min == 0:
        return math.inf
    return a.s_max / a.pi_min * (1 + a.eps_max * sqrt_l / (10 * a.s_min * a.theta_min))


def theorem1_bound(instance, L, n, include_a=True):
    """Upper bound on expected regret after n slots for constant L."""
    a = _as_analysis(instance)
    thr = _threshold(a, 50)
    if L < thr:
        raise ThresholdViolated(f"L = {L} is below the threshold {thr:.6g}")
    if n < 1:
        raise ValidationError("n must be at least 1")
    m, nres = a.num_users, a.num_resources
    bracket = (
        4 * m**3 * nres * L * math.log(n) / a.delta_min**2
        + m * nres
        + m**2 * nres * _confidence_factor(a, math.sqrt(L)) * math.pi / 3
    )
    return bracket * a.delta_max + (a.a_bound if include_a else 0.0)


def find_t1(schedule, threshold, cap=T1_CAP):
    """Smallest t >= 1 with schedule(t) >= threshold, by galloping then bisection.

    Relies on the schedule being non-decreasing.
    """
    if schedule(1) >= threshold:
        return 1
    lo, hi = 1, 2
    while schedule(hi) < threshold:
        lo, hi = hi, hi * 2
        if lo >= cap:
            raise DivergenceCapExceeded(f"schedule stays below {threshold:.6g} up to t = {cap}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if schedule(mid) >= threshold:
            hi = mid
        else:
            lo = mid
    if hi > cap:
        raise DivergenceCapExceeded(f"schedule stays below {threshold:.6g} up to t = {cap}")
    return hi


def b_constant(instance, schedule, t1=None):
    """The finite-sum constant B collecting the slots before the schedule clears its threshold."""
    a = _as_analysis(instance)
    if t1 is None:
        t1 = find_t1(schedule, _threshold(a, 60))
    m = a.num_users
    denom = 20 * a.s_max**2 * a.theta_max**2
    offset = (40 * m + 10) * a.s_max**2 * a.theta_max**2
    total = 0.0
    for start in range(1, t1, 1 << 20):
        ts = np.arange(start, min(start + (1 << 20), t1), dtype=np.float64)
        expo = -(schedule.values(ts) * a.eps_min - offset) / denom + 0.5
        total += float(np.sum(2.0 * ts**expo))
    return 1 + m * _confidence_factor(a, 1.0) * total


def theorem2_bound(instance, schedule, n, include_a=True):
    """Upper bound on expected regret after n slots for a diverging schedule L(n)."""
    a = _as_analysis(instance)
    if n < 1:
        raise ValidationError("n must be at least 1")
    t1 = find_t1(schedule, _threshold(a, 60))
    b = b_constant(a, schedule, t1)
    m, nres = a.num_users, a.num_resources
    bracket = (
        4 * m**3 * nres * schedule(n) * math.log(n) / a.delta_min**2
        + m * nres * b
        + m**2 * nres * _confidence_factor(a, 1.0) * math.pi / 3
    )
    return bracket * a.delta_max + (a.a_bound if include_a else 0.0)


# -- simulation ----------------------------------------------------------------

class Environment:
    """The grid of rested chains; each play advances only the played pairs."""

    def __init__(self, instance, rng):
        self.instance = instance
        self.rng = rng
        m, n = instance.shape
        self.cur = np.zeros((m, n), dtype=np.int64)
        self.plays = np.zeros((m, n), dtype=np.int64)

    def play(self, matching):
        rewards = []
        for i, j in enumerate(matching):
            spec = self.instance.chains[i][j]
            s = int(self.cur[i, j])
            rewards.append(float(spec.rewards[s]))
            self.cur[i, j] = sample_next(spec, s, self.rng.uniform())
            self.plays[i, j] += 1
        return rewards


@dataclass(eq=False)
class RunTrace:
    """One replication: per-slot rewards plus play counts at each checkpoint."""

    mu_star: float
    step_rewards: np.ndarray
    checkpoints: np.ndarray
    counts: list

    @property
    def cumulative_reward(self):
        return np.cumsum(self.step_rewards)

    @property
    def regret(self):
        t = np.arange(1, len(self.step_rewards) + 1)
        return t * self.mu_star - self.cumulative_reward


def default_checkpoints(horizon):
    pts = []
    p = 1
    while p < horizon:
        pts.append(p)
        p *= 2
    pts.append(horizon)
    return pts


def regret_trace(instance, policy, horizon, rng, checkpoints=None, mu_star=None, fast=True):
    """Run ``policy`` for ``horizon`` slots against a fresh environment.

    MLMR main-loop slots go through the compiled block kernel when
    ``fast`` is set; the result is identical to the slot-by-slot path.
    """
    m, n = instance.shape
    if horizon < m * n:
        raise ValidationError(f"horizon {horizon} is shorter than the {m * n}-slot initialization")
    if mu_star is None:
        mu_star = max_weight_matching(mean_rewards(instance))[1]
    stops = sorted(set(checkpoints if checkpoints is not None else default_checkpoints(horizon)))
    if stops and (stops[0] < 1 or stops[-1] > horizon):
        raise ValidationError("checkpoints must lie in [1, horizon]")
    env = Environment(instance, rng)
    rewards = np.empty(horizon)
    snaps = []
    use_block = fast and isinstance(policy, MLMRPolicy)
    packed = pack_instance(instance) if use_block else None
    t = 0
    for stop in stops + [horizon]:
        while t < stop:
            if use_block and not policy.in_init:
                t = _mlmr_run(policy, env, packed, t, min(stop, t + BLOCK), rewards)
                continue
            a = policy.choose()
            r = env.play(a)
            policy.update(a, r)
            total = 0.0
            for y in r:
                total += y
            rewards[t] = total
            t += 1
        if len(snaps) < len(stops):
            snaps.append(env.plays.copy())
    return RunTrace(mu_star, rewards, np.array(stops, dtype=np.int64), snaps)


def _mlmr_run(policy, env, packed, t, stop, rewards):
    state = policy.state
    steps = stop - t
    ts = np.arange(state.t, state.t + steps, dtype=np.float64)
    lvals = policy.schedule.values(ts)
    m, n = state.shape
    u = env.rng.uniforms(steps * m).reshape(steps, m)
    before = state.counts.copy()
    cum, rew, nst = packed
    state.t = _kernels.mlmr_block(
        state.theta_hat, state.counts, env.cur, cum, rew, nst, state.t, lvals, u, rewards[t:stop]
    )
    env.plays += state.counts - before
    return stop
