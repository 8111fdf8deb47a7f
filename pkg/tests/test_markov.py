import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zdpgg import (
    DeterminantMismatch,
    GameSpec,
    NonErgodicChain,
    ReducedStrategy,
    controlled_matrix,
    determinant_ratio,
    dot_via_determinant,
    expand_strategy,
    expected_payoffs,
    extortion_strategy,
    linear_combination,
    payoff_matrix,
    pinned_total,
    pinning_alphas,
    regularity,
    stationary,
    state_actions,
    state_index,
    transition_matrix,
)

C, D = True, False


def brute_transition(spec, profile):
    """Entry by entry from the per-player conditional probabilities."""
    n, s = spec.n_players, spec.n_states
    probs = [expand_strategy(spec, p, k + 1) for k, p in enumerate(profile)]
    m = np.zeros((s, s))
    for i in range(s):
        for j in range(s):
            nxt = state_actions(j, n)
            val = 1.0
            for k in range(n):
                q = probs[k][i]
                val *= q if nxt[k] else 1 - q
            m[i, j] = val
    return m


def power_stationary(m, iters=20000):
    v = np.full(m.shape[0], 1.0 / m.shape[0])
    # lazy chain to avoid periodic oscillation
    lazy = 0.5 * (m + np.eye(m.shape[0]))
    for _ in range(iters):
        v = v @ lazy
    return v


def random_profile(n, rng):
    return [ReducedStrategy.random(n, rng) for _ in range(n)]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_transition_matches_brute_force(n, rng):
    spec = GameSpec(n, 1.3)
    for _ in range(10):
        prof = random_profile(n, rng)
        assert transition_matrix(spec, prof) == pytest.approx(brute_transition(spec, prof), abs=1e-15)


def test_transition_cdd_to_cdc(spec3, rng):
    x, y, z = random_profile(3, rng)
    m = transition_matrix(spec3, [x, y, z])
    expected = x.pc[0] * (1 - y.pd[1]) * z.pd[1]
    assert m[state_index((C, D, D)), state_index((C, D, C))] == pytest.approx(expected, abs=1e-15)


def test_transition_accepts_full_vectors(spec3, ref_pin):
    full = [expand_strategy(spec3, ref_pin, 1), np.full(8, 0.3), np.full(8, 0.7)]
    red = [ref_pin, ReducedStrategy.constant(3, 0.3), ReducedStrategy.constant(3, 0.7)]
    assert transition_matrix(spec3, full) == pytest.approx(transition_matrix(spec3, red), abs=0)
    with pytest.raises(ValueError):
        transition_matrix(spec3, full[:2])
    with pytest.raises(ValueError):
        transition_matrix(spec3, [np.full(4, 0.5)] * 3)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_constant_half(n):
    spec = GameSpec(n, 1.5)
    prof = [ReducedStrategy.constant(n, 0.5)] * n
    m = transition_matrix(spec, prof)
    assert np.all(m == 2.0 ** -n)
    assert regularity(m).is_regular
    assert stationary(m) == pytest.approx(np.full(spec.n_states, 2.0 ** -n), abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_rows_stochastic(n, seed):
    rng = np.random.default_rng(seed)
    spec = GameSpec(n, 1.2)
    m = transition_matrix(spec, random_profile(n, rng))
    assert np.all(m >= 0) and np.all(m <= 1)
    assert np.abs(m.sum(axis=1) - 1).max() < 1e-12


def test_regularity_examples(spec3, ref_pin, rng):
    # a focal repeat-own-move player splits the chain into the states where
    # it cooperated and those where it defected
    prof = [ReducedStrategy.repeat(3)] + random_profile(3, rng)[1:]
    rep = regularity(transition_matrix(spec3, prof))
    assert not rep.is_regular and rep.reason == "reducible" and rep.communicating_classes == 2
    # everybody repeating: every state is absorbing
    rep = regularity(transition_matrix(spec3, [ReducedStrategy.repeat(3)] * 3))
    assert rep.communicating_classes == 8
    half = ReducedStrategy.constant(3, 0.5)
    assert regularity(transition_matrix(spec3, [ref_pin, half, half])).is_regular


def test_regularity_periodic():
    rep = regularity(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
    assert rep.reason == "periodic" and rep.period == 3 and not rep.is_regular
    # player 1 flips its own move, player 2 copies player 1: DC <-> CD
    spec = GameSpec(2, 1.5)
    flip = ReducedStrategy([0.0, 0.0], [1.0, 1.0])
    copy = ReducedStrategy([0.0, 1.0], [0.0, 1.0])
    m = transition_matrix(spec, [flip, copy])
    rep = regularity(m)
    assert rep.communicating_classes == 1 and rep.period == 2
    assert stationary(m) == pytest.approx([0, 0.5, 0.5, 0], abs=1e-12)


def test_regularity_rejects_non_stochastic():
    with pytest.raises(ValueError):
        regularity(np.array([[0.5, 0.4], [0.5, 0.5]]))


def test_stationary_raises_on_two_closed_classes(spec3):
    with pytest.raises(NonErgodicChain):
        expected_payoffs(spec3, [ReducedStrategy.repeat(3)] * 3)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_stationary_against_power_iteration(n, rng):
    spec = GameSpec(n, 1.4)
    for _ in range(5):
        m = transition_matrix(spec, random_profile(n, rng))
        v = stationary(m)
        assert v == pytest.approx(power_stationary(m), abs=1e-10)
        assert v.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.abs(v @ m - v).max() < 1e-9


def test_stationary_against_eig(rng):
    spec = GameSpec(4, 2.0)
    m = transition_matrix(spec, random_profile(4, rng))
    w, vecs = np.linalg.eig(m.T)
    ev = np.real(vecs[:, np.argmin(np.abs(w - 1))])
    assert stationary(m) == pytest.approx(ev / ev.sum(), abs=1e-12)


def test_ref_pin_against_always_c(spec3, ref_pin):
    allc = ReducedStrategy.always_cooperate(3)
    e = expected_payoffs(spec3, [ref_pin, allc, allc], check=True)
    assert e[1] + e[2] == pytest.approx(2.30244, abs=1e-5)
    assert e[1] + e[2] == pytest.approx(pinned_total(spec3, 0.08, 0.31), abs=1e-9)


def test_ref_pin_against_always_c_long_simulation(spec3, ref_pin):
    # independent oracle: empirical state frequencies of a 10^7 step walk
    from zdpgg import play_match

    allc = ReducedStrategy.always_cooperate(3)
    e = play_match(spec3, [ref_pin, allc, allc], rounds=10**7, discard=1000, seed=99)
    assert e[1] + e[2] == pytest.approx(2.30244, abs=1e-3)


def test_expected_payoffs_examples(spec3):
    allc = ReducedStrategy.always_cooperate(3)
    assert expected_payoffs(spec3, [allc] * 3) == pytest.approx([1.6] * 3, abs=1e-12)
    half = ReducedStrategy.constant(3, 0.5)
    assert expected_payoffs(spec3, [half] * 3) == pytest.approx([1.3] * 3, abs=1e-12)
    ext = extortion_strategy(spec3, 0.5, 0.2)
    e = expected_payoffs(spec3, [ext, allc, allc], check=True)
    assert e[0] - 1 == pytest.approx(0.5 * ((e[1] - 1) + (e[2] - 1)), abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_determinant_ratio_matches_solve(n, rng):
    spec = GameSpec(n, 1.5)
    u = payoff_matrix(spec)
    for _ in range(20):
        prof = random_profile(n, rng)
        e = expected_payoffs(spec, prof)
        for k in range(n):
            assert determinant_ratio(spec, prof, u[k]) == pytest.approx(e[k], abs=1e-9)
        assert determinant_ratio(spec, prof, np.ones(spec.n_states)) == pytest.approx(1.0, abs=1e-12)


def test_determinant_is_proportional_to_stationary(spec3, rng):
    prof = random_profile(3, rng)
    v = stationary(transition_matrix(spec3, prof))
    w = rng.random(8)
    ratio = dot_via_determinant(spec3, prof, w) / dot_via_determinant(spec3, prof, np.ones(8))
    assert ratio == pytest.approx(v @ w, abs=1e-12)


def test_controlled_columns_depend_on_one_player(spec3, rng):
    prof = random_profile(3, rng)
    a = controlled_matrix(spec3, prof)
    for k in range(3):
        target = 7 - (1 << (2 - k))
        own_c = np.array([state_actions(i, 3)[k] for i in range(8)])
        expected = expand_strategy(spec3, prof[k], k + 1) - own_c
        assert a[:, target] == pytest.approx(expected, abs=1e-14)


def test_zero_determinant_for_pinning(spec3, ref_pin, rng):
    alphas = pinning_alphas(spec3, 0.08, 0.31, targets=[2, 3])
    u = alphas[0] + alphas[1:] @ payoff_matrix(spec3)
    for _ in range(5):
        prof = [ref_pin] + random_profile(3, rng)[1:]
        assert abs(dot_via_determinant(spec3, prof, u)) < 1e-9
        assert abs(linear_combination(spec3, prof, alphas)) < 1e-9


def test_linear_combination_identities(spec3, rng):
    prof = random_profile(3, rng)
    e = expected_payoffs(spec3, prof)
    assert linear_combination(spec3, prof, [-e[1], 0, 1, 0]) == pytest.approx(0, abs=1e-12)
    alphas = rng.normal(size=4)
    assert linear_combination(spec3, prof, alphas) == pytest.approx(alphas[0] + alphas[1:] @ e, abs=1e-12)
    with pytest.raises(ValueError):
        linear_combination(spec3, prof, [1, 2])


def test_relabeling_equivariance(rng):
    spec = GameSpec(4, 1.7)
    prof = random_profile(4, rng)
    e = expected_payoffs(spec, prof)
    perm = [0, 3, 1, 2]
    e_perm = expected_payoffs(spec, [prof[k] for k in perm])
    assert e_perm == pytest.approx(e[perm], abs=1e-12)


def test_symmetric_profile_symmetric_distribution(spec3):
    s = ReducedStrategy([0.9, 0.4, 0.3], [0.6, 0.2, 0.1])
    v = stationary(transition_matrix(spec3, [s] * 3))
    for i in range(8):
        acts = state_actions(i, 3)
        rotated = state_index(acts[1:] + acts[:1])
        assert v[i] == pytest.approx(v[rotated], abs=1e-13)


def test_cross_check_raises_on_mismatch(spec3, monkeypatch, rng):
    import zdpgg.markov as mk

    monkeypatch.setattr(mk, "determinant_ratio", lambda *a, **k: 99.0)
    with pytest.raises(DeterminantMismatch):
        mk.expected_payoffs(spec3, random_profile(3, rng), check=True)


def test_dense_cap():
    spec = GameSpec(13, 2.0)
    with pytest.raises(ValueError, match="N <= 12"):
        transition_matrix(spec, [ReducedStrategy.constant(13, 0.5)] * 13)
