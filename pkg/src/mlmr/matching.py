"""Maximum-weight bipartite matching of M users onto N >= M resources."""

from itertools import permutations
from math import perm

import numpy as np

from . import _kernels
from .errors import CapExceeded, ValidationError

DEFAULT_CAP = 10**6


def max_weight_matching(w):
    """Best injective assignment for the M×N weight matrix ``w``.

    Returns ``(assignment, total)`` where ``assignment[i]`` is the resource
    of user i.  Ties are broken towards the lexicographically smallest
    assignment.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] == 0:
        raise ValidationError("weight matrix must be a non-empty 2-D array")
    m, n = w.shape
    if m > n:
        raise ValidationError(f"M ≤ N required, got {m}×{n} weights")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    assign, total = _kernels.max_weight_matching(w.tolist() if _kernels.BACKEND == "python" else w)
    return tuple(assign), total


def num_arms(m, n):
    return perm(n, m)


def enumerate_matchings(m, n, cap=DEFAULT_CAP):
    """Yield every injective assignment of m users to n resources in lexicographic order."""
    if m > n:
        raise ValidationError(f"M ≤ N required, got M={m} > N={n}")
    count = perm(n, m)
    if count > cap:
        raise CapExceeded(f"P({n},{m}) = {count} arms exceeds the cap of {cap}")
    # permutations of range(n) come out in lexicographic order
    return permutations(range(n), m)


def matching_value(w, assignment):
    total = 0.0
    for i, j in enumerate(assignment):
        total += w[i][j]
    return total
