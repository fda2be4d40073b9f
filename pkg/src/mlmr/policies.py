"""MLMR and baseline policies.

Every policy exposes ``choose() -> matching`` and ``update(matching,
rewards)``, where a matching is a tuple giving the resource of each user
and ``rewards[i]`` is what user i observed.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import NotInitialized, ValidationError
from .matching import DEFAULT_CAP, enumerate_matchings, max_weight_matching


# -- exploration schedules ---------------------------------------------------

@dataclass(frozen=True)
class ConstantL:
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise ValidationError("L must be positive")

    def __call__(self, t):
        return float(self.L)

    def values(self, ts):
        return np.full(len(ts), float(self.L))

    def __str__(self):
        return f"constant({self.L:g})"


@dataclass(frozen=True)
class SequenceL:
    """A non-decreasing, diverging schedule L(n), clamped so that L(n) <= n.

    ``fn`` must accept a float64 array of time indices and return L values
    elementwise.
    """

    fn: object
    name: str = "custom"

    def __call__(self, t):
        return float(self.values(np.array([t], dtype=np.float64))[0])

    def values(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        return np.minimum(np.asarray(self.fn(ts), dtype=np.float64), ts)

    def check_monotone(self, upto=10**6, samples=2000):
        ts = np.unique(np.geomspace(1, upto, samples).round())
        vals = self.values(ts)
        if np.any(np.diff(vals) < 0):
            raise ValidationError(f"schedule {self.name} is not non-decreasing")

    def __str__(self):
        return self.name


def log_log(c):
    """L(n) = c * ln(ln(n + e))."""
    return SequenceL(lambda t: c * np.log(np.log(t + math.e)), f"log_log({c:g})")


def power(c, a):
    """L(n) = c * n**a with 0 < a <= 1."""
    if not 0 < a <= 1:
        raise ValidationError("power schedule exponent must lie in (0, 1]")
    return SequenceL(lambda t: c * t**a, f"power({c:g}, {a:g})")


_SCHEDULE_RE = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def parse_schedule(text):
    """Parse ``constant(L)``, ``log_log(c)`` or ``power(c, a)``."""
    m = _SCHEDULE_RE.match(text)
    if not m:
        raise ValidationError(f"cannot parse schedule {text!r}")
    name, raw = m.group(1), m.group(2)
    try:
        args = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"non-numeric schedule argument in {text!r}") from None
    forms = {"constant": (ConstantL, 1), "log_log": (log_log, 1), "power": (power, 2)}
    if name not in forms:
        raise ValidationError(f"unknown schedule {name!r}; expected one of {sorted(forms)}")
    ctor, arity = forms[name]
    if len(args) != arity:
        raise ValidationError(f"{name} takes {arity} argument(s), got {len(args)}")
    return ctor(*args)


# -- MLMR ----------------------------------------------------------------------

@dataclass
class PolicyState:
    """Per-pair sample means and play counts plus the number of completed slots."""

    theta_hat: np.ndarray
    counts: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, m, n):
        return cls(np.zeros((m, n)), np.zeros((m, n), dtype=np.int64), 0)

    @property
    def shape(self):
        return self.theta_hat.shape

    def copy(self):
        return PolicyState(self.theta_hat.copy(), self.counts.copy(), self.t)


def mlmr_init_schedule(m, n):
    """One matching per pair (p, q) in row-major order, each containing (p, q).

    User i is placed on resource (q + i - p) mod n, a cyclic shift that keeps
    the assignment injective because |i - p| < m <= n.
    """
    if m > n:
        raise ValidationError(f"M ≤ N required, got M={m} > N={n}")
    return [tuple((q + i - p) % n for i in range(m)) for p in range(m) for q in range(n)]


def mlmr_index(state, schedule):
    """Edge weights theta_hat + sqrt(L ln t / counts) at the current slot count."""
    if np.any(state.counts == 0):
        raise NotInitialized("every pair must be played once before the index is defined")
    if state.t < 1:
        raise NotInitialized("index needs at least one completed slot")
    lnt = math.log(state.t)
    L = schedule(state.t)
    return state.theta_hat + np.sqrt(L * lnt / state.counts)


def mlmr_choose(state, schedule):
    assignment, _ = max_weight_matching(mlmr_index(state, schedule))
    return assignment


def mlmr_update(state, played, rewards):
    """Fold one slot's observations into the running means, in place."""
    th, cn = state.theta_hat, state.counts
    for i, j in enumerate(played):
        c = int(cn[i, j])
        th[i, j] = (float(th[i, j]) * c + float(rewards[i])) / (c + 1)
        cn[i, j] = c + 1
    state.t += 1
    return state


class MLMRPolicy:
    name = "mlmr"

    def __init__(self, m, n, schedule=None):
        self.schedule = schedule if schedule is not None else ConstantL(2.0)
        self.state = PolicyState.zeros(m, n)
        self.init_schedule = mlmr_init_schedule(m, n)

    @property
    def in_init(self):
        return self.state.t < len(self.init_schedule)

    def choose(self):
        if self.in_init:
            return self.init_schedule[self.state.t]
        return mlmr_choose(self.state, self.schedule)

    def update(self, matching, rewards):
        mlmr_update(self.state, matching, rewards)

    def storage_size(self):
        return self.state.theta_hat.size + self.state.counts.size + 1


# -- baselines -----------------------------------------------------------------

class UCB1Arms:
    """UCB1 over whole matchings, ignoring that arms share pairs.

    Arm k's index is its mean summed reward plus sqrt(L ln t / T_k); each
    arm is played once, in enumeration order, before the index is used.
    """

    name = "ucb1_arms"

    def __init__(self, m, n, L=2.0, cap=DEFAULT_CAP):
        self.arms = list(enumerate_matchings(m, n, cap))
        self.L = float(L)
        self.means = np.zeros(len(self.arms))
        self.plays = np.zeros(len(self.arms), dtype=np.int64)
        self.t = 0
        self._lookup = {a: k for k, a in enumerate(self.arms)}

    def choose(self):
        if self.t < len(self.arms):
            return self.arms[self.t]
        bonus = np.sqrt(self.L * math.log(self.t) / self.plays)
        return self.arms[int(np.argmax(self.means + bonus))]

    def update(self, matching, rewards):
        k = self._lookup[tuple(matching)]
        c = int(self.plays[k])
        total = 0.0
        for r in rewards:
            total += float(r)
        self.means[k] = (float(self.means[k]) * c + total) / (c + 1)
        self.plays[k] = c + 1
        self.t += 1


class OraclePolicy:
    """Always plays the best matching under the true mean rewards."""

    name = "oracle"

    def __init__(self, instance):
        from .analysis import mean_rewards

        self.matching, _ = max_weight_matching(mean_rewards(instance))

    def choose(self):
        return self.matching

    def update(self, matching, rewards):
        pass


class UniformRandomPolicy:
    """Plays a uniformly random matching each slot (partial Fisher-Yates)."""

    name = "uniform_random"

    def __init__(self, m, n, rng):
        self.m, self.n = m, n
        self.rng = rng

    def choose(self):
        pool = list(range(self.n))
        for i in range(self.m):
            k = i + self.rng.integer(self.n - i)
            pool[i], pool[k] = pool[k], pool[i]
        return tuple(pool[: self.m])

    def update(self, matching, rewards):
        pass
