"""Rested Markov reward chains for user-resource pairs.

Each pair (i, j) owns an independent finite chain that only moves when the
pair is played.  Playing a pair reads the reward of the current state and
then samples the next state.
"""

from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NotComputable, SingularSystem, ValidationError

ROW_SUM_TOL = 1e-12
IMAG_TOL = 1e-9


def _freeze(a):
    a.setflags(write=False)
    return a


def _period(adj):
    """Period of an irreducible chain from BFS levels: gcd of level[u] + 1 - level[v]."""
    n = adj.shape[0]
    level = [-1] * n
    level[0] = 0
    queue = [0]
    for u in queue:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
    g = 0
    for u in range(n):
        for v in np.flatnonzero(adj[u]):
            g = gcd(g, abs(level[u] + 1 - level[v]))
    return g


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Transition matrix and per-state rewards of one pair's chain.

    Validation is strict unless ``assume_valid`` is set: rows must be
    stochastic, the chain irreducible and aperiodic, rewards finite and
    non-negative.  ``assume_valid`` skips only the irreducibility and
    aperiodicity checks, so deterministic cycles can still be built for
    testing.
    """

    transition: np.ndarray
    rewards: np.ndarray
    assume_valid: bool = False
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = np.array(self.transition, dtype=np.float64)
        r = np.array(self.rewards, dtype=np.float64).reshape(-1)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise ValidationError("transition must be a non-empty square matrix")
        n = p.shape[0]
        if r.shape[0] != n:
            raise ValidationError(f"rewards has length {r.shape[0]}, expected {n} states")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValidationError("transition entries must lie in [0, 1] (row-stochastic)")
        bad = np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise ValidationError(
                f"row {row} sums to {p[row].sum():.15g}; transition must be row-stochastic"
            )
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValidationError("rewards must be finite and non-negative")
        if not self.assume_valid:
            adj = p > 0
            ncomp, _ = connected_components(adj, directed=True, connection="strong")
            if ncomp != 1:
                raise ValidationError("chain is not irreducible")
            if not np.any(np.diag(p) > 0) and _period(adj) != 1:
                raise ValidationError("chain is not aperiodic")
        # Cumulative rows summed left to right; the kernels sample against these.
        cum = np.empty_like(p)
        for z in range(n):
            acc = 0.0
            for y in range(n):
                acc += p[z, y]
                cum[z, y] = acc
        object.__setattr__(self, "transition", _freeze(p))
        object.__setattr__(self, "rewards", _freeze(r))
        object.__setattr__(self, "cumulative", _freeze(cum))

    @property
    def num_states(self):
        return self.transition.shape[0]

    @classmethod
    def two_state(cls, p01, p10, theta0, theta1, **kw):
        return cls([[1.0 - p01, p01], [p10, 1.0 - p10]], [theta0, theta1], **kw)

    @classmethod
    def constant(cls, reward):
        """Single-state chain that always pays ``reward``."""
        return cls([[1.0]], [reward])


@dataclass
class ChainState:
    current: int = 0


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """M users by N resources grid of mutually independent chains."""

    chains: tuple

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.chains)
        if not rows or not rows[0]:
            raise ValidationError("instance needs at least one user and one resource")
        n = len(rows[0])
        if any(len(row) != n for row in rows):
            raise ValidationError("chains grid is ragged")
        if len(rows) > n:
            raise ValidationError(f"M ≤ N required, got M={len(rows)} > N={n}")
        for row in rows:
            for c in row:
                if not isinstance(c, ChainSpec):
                    raise ValidationError("every grid entry must be a ChainSpec")
        object.__setattr__(self, "chains", rows)

    @property
    def num_users(self):
        return len(self.chains)

    @property
    def num_resources(self):
        return len(self.chains[0])

    @property
    def shape(self):
        return self.num_users, self.num_resources

    def pairs(self):
        for i, row in enumerate(self.chains):
            for j, c in enumerate(row):
                yield i, j, c

    @classmethod
    def two_state(cls, p01, p10, theta0, theta1):
        """Build from four M×N tables of the two-state parameterization."""
        p01, p10, theta0, theta1 = (np.asarray(a, dtype=np.float64) for a in (p01, p10, theta0, theta1))
        if not (p01.shape == p10.shape == theta0.shape == theta1.shape) or p01.ndim != 2:
            raise ValidationError("two-state tables must all be M×N matrices of equal shape")
        m, n = p01.shape
        return cls(tuple(
            tuple(ChainSpec.two_state(p01[i, j], p10[i, j], theta0[i, j], theta1[i, j]) for j in range(n))
            for i in range(m)
        ))

    @classmethod
    def constant(cls, rewards):
        r = np.asarray(rewards, dtype=np.float64)
        return cls(tuple(tuple(ChainSpec.constant(x) for x in row) for row in r))


def stationary_distribution(spec):
    """Solve pi P = pi with one balance equation replaced by sum(pi) = 1."""
    p = spec.transition
    n = p.shape[0]
    if n == 1:
        return np.ones(1)
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"stationary system is singular: {exc}") from None
    if not np.all(np.isfinite(pi)) or np.any(pi <= 0):
        raise SingularSystem("stationary solution is not strictly positive")
    return pi


def eigenvalue_gap(spec, allow_complex=False):
    """One minus the second-largest eigenvalue of the transition matrix.

    Two-state chains use the closed form p01 + p10 (their spectrum is
    {1, 1 - p01 - p10}); the gap can exceed 1 when p01 + p10 > 1.  A
    single-state chain has no second eigenvalue and reports a gap of 1.
    General chains are ranked by real part; a spectrum with complex
    eigenvalues raises NotComputable unless ``allow_complex`` is set.
    """
    p = spec.transition
    n = p.shape[0]
    if n == 1:
        return 1.0
    if n == 2:
        return float(p[0, 1] + p[1, 0])
    try:
        lam = np.linalg.eigvals(p)
    except np.linalg.LinAlgError as exc:
        raise NotComputable(f"eigen-solve did not converge: {exc}") from None
    if not allow_complex and np.any(np.abs(lam.imag) > IMAG_TOL):
        raise NotComputable("transition matrix has a complex spectrum")
    re = np.sort(lam.real)[::-1]
    return float(1.0 - re[1])


def sample_next(spec, current, u):
    """Next state for uniform ``u``: first z with u < cumulative[current, z]."""
    row = spec.cumulative[current]
    last = row.shape[0] - 1
    for z in range(last):
        if u < row[z]:
            return z
    return last


def step_chain(state, spec, rng):
    """Play the pair once: returns (next state, reward of the state before the move)."""
    reward = float(spec.rewards[state.current])
    nxt = sample_next(spec, state.current, rng.uniform())
    return ChainState(nxt), reward


def pack_instance(instance):
    """Flatten an instance into padded arrays consumed by the kernels.

    Returns (cumulative[M, N, S, S], rewards[M, N, S], num_states[M, N]) with
    S the largest state count; padding is never read.
    """
    m, n = instance.shape
    s = max(c.num_states for _, _, c in instance.pairs())
    cum = np.ones((m, n, s, s))
    rew = np.zeros((m, n, s))
    nst = np.zeros((m, n), dtype=np.int64)
    for i, j, c in instance.pairs():
        k = c.num_states
        cum[i, j, :k, :k] = c.cumulative
        rew[i, j, :k] = c.rewards
        nst[i, j] = k
    return cum, rew, nst
