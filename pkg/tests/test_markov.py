import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlmr.errors import NotComputable, SingularSystem, ValidationError
from mlmr.markov import (
    ChainSpec,
    ChainState,
    ProblemInstance,
    eigenvalue_gap,
    sample_next,
    stationary_distribution,
    step_chain,
)
from mlmr.rng import RandomStream

THREE = [[0.1, 0.6, 0.3], [0.4, 0.2, 0.4], [0.5, 0.3, 0.2]]
BIRTH_DEATH = [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]]


def power_iteration(p, iters=5000):
    p = np.asarray(p)
    x = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(iters):
        x = x @ p
    return x


def visit_frequencies(spec, steps, seed):
    rng = RandomStream(seed)
    u = rng.uniforms(steps).tolist()
    counts = [0] * spec.num_states
    s = 0
    for x in u:
        counts[s] += 1
        s = sample_next(spec, s, x)
    return np.array(counts) / steps


def char_poly_3(p):
    """Coefficients of det(lambda I - P) for a 3×3 matrix, by cofactor expansion."""
    (a, b, c), (d, e, f), (g, h, i) = p
    tr = a + e + i
    minors = (e * i - f * h) + (a * i - c * g) + (a * e - b * d)
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return 1.0, -tr, minors, -det


def deflated_roots(p):
    """Roots other than 1: divide the cubic by (lambda - 1), solve the quadratic."""
    _, c2, c1, c0 = char_poly_3(p)
    q1 = c2 + 1.0
    q0 = c1 + q1
    disc = cmath.sqrt(q1 * q1 - 4 * q0)
    return (-q1 + disc) / 2, (-q1 - disc) / 2


# -- validation ----------------------------------------------------------------

def test_row_sum_rejected():
    with pytest.raises(ValidationError, match="row-stochastic"):
        ChainSpec([[0.5, 0.4], [0.5, 0.5]], [0, 1])


def test_negative_reward_rejected():
    with pytest.raises(ValidationError):
        ChainSpec([[0.5, 0.5], [0.5, 0.5]], [-1, 1])


def test_reducible_rejected():
    with pytest.raises(ValidationError, match="irreducible"):
        ChainSpec([[1.0, 0.0], [0.5, 0.5]], [0, 1])


def test_periodic_rejected_and_escape_hatch():
    cyc = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
    with pytest.raises(ValidationError, match="aperiodic"):
        ChainSpec(cyc, [0, 1, 2])
    assert ChainSpec(cyc, [0, 1, 2], assume_valid=True).num_states == 3


def test_aperiodic_without_self_loop_accepted():
    # cycles of length 2 and 3 -> gcd 1
    p = [[0, 0.5, 0.5], [1, 0, 0], [0, 1, 0]]
    assert ChainSpec(p, [0, 0, 0]).num_states == 3


def test_instance_requires_m_le_n():
    c = ChainSpec.constant(1.0)
    with pytest.raises(ValidationError, match="M ≤ N"):
        ProblemInstance(((c,), (c,)))


def test_spec_is_immutable():
    c = ChainSpec.two_state(0.5, 0.6, 0, 1)
    with pytest.raises(ValueError):
        c.transition[0, 0] = 1.0


# -- stationary distribution ------------------------------------------------------

def test_stationary_two_state_closed_form():
    pi = stationary_distribution(ChainSpec.two_state(0.5, 0.6, 0, 1))
    np.testing.assert_allclose(pi, [0.6 / 1.1, 0.5 / 1.1], atol=1e-15)


def test_stationary_symmetric():
    np.testing.assert_allclose(stationary_distribution(ChainSpec.two_state(0.5, 0.5, 0, 1)), [0.5, 0.5])


def test_stationary_three_state_oracles():
    spec = ChainSpec(THREE, [0, 1, 2])
    pi = stationary_distribution(spec)
    assert np.max(np.abs(pi @ spec.transition - pi)) < 1e-10
    assert abs(pi.sum() - 1) < 1e-12
    np.testing.assert_allclose(pi, power_iteration(THREE), atol=1e-12)
    np.testing.assert_allclose(visit_frequencies(spec, 10**6, 11), pi, atol=0.01)


def test_stationary_singular_system():
    # Two closed classes slip past validation with the escape hatch.
    spec = ChainSpec([[1, 0], [0, 1]], [0, 1], assume_valid=True)
    with pytest.raises(SingularSystem):
        stationary_distribution(spec)


@st.composite
def positive_chains(draw):
    n = draw(st.integers(1, 5))
    rows = [draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)) for _ in range(n)]
    p = np.array(rows)
    p /= p.sum(axis=1, keepdims=True)
    p[:, -1] = 1.0 - p[:, :-1].sum(axis=1)
    return ChainSpec(p, np.arange(n, dtype=float))


@settings(max_examples=100, deadline=None)
@given(positive_chains())
def test_stationary_residual_property(spec):
    pi = stationary_distribution(spec)
    assert np.max(np.abs(pi @ spec.transition - pi)) < 1e-10
    assert abs(pi.sum() - 1) < 1e-12
    assert np.all(pi > 0)


# -- eigenvalue gap ------------------------------------------------------------------

def test_gap_two_state_reference_value():
    assert eigenvalue_gap(ChainSpec.two_state(0.5, 0.6, 0, 1)) == pytest.approx(1.1, abs=1e-15)


def test_gap_symmetric_half():
    assert eigenvalue_gap(ChainSpec.two_state(0.5, 0.5, 0, 1)) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.01, 0.99))
def test_gap_two_state_closed_form_matches_general_path(p01, p10):
    spec = ChainSpec.two_state(p01, p10, 0, 1)
    lam = np.sort(np.linalg.eigvals(spec.transition).real)[::-1]
    assert eigenvalue_gap(spec) == pytest.approx(1 - lam[1], abs=1e-10)
    assert eigenvalue_gap(spec) == pytest.approx(p01 + p10, abs=1e-10)


def test_gap_three_state_complex_spectrum():
    spec = ChainSpec(THREE, [0, 1, 2])
    with pytest.raises(NotComputable):
        eigenvalue_gap(spec)
    r1, r2 = deflated_roots(THREE)
    expected = 1 - max(r1.real, r2.real)
    assert eigenvalue_gap(spec, allow_complex=True) == pytest.approx(expected, abs=1e-12)


def test_gap_three_state_real_spectrum():
    r1, r2 = deflated_roots(BIRTH_DEATH)
    assert abs(r1.imag) < 1e-15 and abs(r2.imag) < 1e-15
    expected = 1 - max(r1.real, r2.real)
    assert eigenvalue_gap(ChainSpec(BIRTH_DEATH, [0, 0, 1])) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5)


def test_gap_single_state():
    assert eigenvalue_gap(ChainSpec.constant(0.3)) == 1.0


# -- stepping ------------------------------------------------------------------------

def test_step_deterministic_cycle():
    spec = ChainSpec([[0, 1, 0], [0, 0, 1], [1, 0, 0]], [5.0, 6.0, 7.0], assume_valid=True)
    state, r = step_chain(ChainState(0), spec, RandomStream(0))
    assert (state.current, r) == (1, 5.0)


def test_step_alternating():
    spec = ChainSpec.two_state(1.0, 1.0, 0.25, 0.75, assume_valid=True)
    rng = RandomStream(0)
    state = ChainState(0)
    seen = []
    for _ in range(6):
        state, r = step_chain(state, spec, rng)
        seen.append(r)
    assert seen == [0.25, 0.75] * 3


def test_step_reproducible():
    spec = ChainSpec(THREE, [0, 1, 2])

    def run(seed):
        rng, state, out = RandomStream(seed), ChainState(0), []
        for _ in range(500):
            state, r = step_chain(state, spec, rng)
            out.append((state.current, r))
        return out

    assert run(5) == run(5)
    assert run(5) != run(6)


def test_pair_11_empirical_mean_reward(ex1):
    spec = ex1.chains[0][0]
    rng = RandomStream(123)
    u = rng.uniforms(10**6).tolist()
    s, total = 0, 0.0
    rewards = spec.rewards.tolist()
    for x in u:
        total += rewards[s]
        s = sample_next(spec, s, x)
    assert total / 10**6 == pytest.approx(0.6909, abs=0.005)


def test_empirical_frequencies_examples(ex1):
    for i, j, spec in ex1.pairs():
        if (i + j) % 3:
            continue
        freq = visit_frequencies(spec, 200_000, 100 + i * 4 + j)
        np.testing.assert_allclose(freq, stationary_distribution(spec), atol=0.01)
