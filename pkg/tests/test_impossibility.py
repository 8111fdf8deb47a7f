import numpy as np
import pytest

from zdpgg import (
    GameSpec,
    ReducedStrategy,
    collusion_feasibility,
    expected_payoffs,
    linear_combination,
    pinning_alphas,
    self_pin_feasibility,
    single_player_feasibility,
)


@pytest.mark.parametrize("n,r", [(3, 1.6), (2, 1.5), (5, 4.9), (16, 15.9), (8, 1.01)])
def test_self_pin_infeasible(n, r):
    rep = self_pin_feasibility(GameSpec(n, r))
    assert not rep.feasible
    assert rep.lp_distance < 1e-9
    assert rep.max_p_dd <= 0.0


def test_self_pin_witness(spec3):
    rep = self_pin_feasibility(spec3)
    assert rep.best_corner == (1.0, 0.0)
    assert "p_dd <= 0" in rep.witness


def test_self_pin_bound_formula(spec3):
    # any strategy of the form alpha_1 u^1 + alpha_0 with a genuine p_dd > 0
    # leaves [0, 1] somewhere
    from zdpgg.impossibility import _self_pin_constraints

    coef, const = _self_pin_constraints(spec3)
    g = np.linspace(0, 1, 101)
    x, y = np.meshgrid(g, g)
    vals = coef[:, :1, None] * x + coef[:, 1:, None] * y + const[:, None, None]
    ok = np.all((vals >= -1e-12) & (vals <= 1 + 1e-12), axis=0)
    assert np.all(y[ok] <= 1e-12)


def test_collusion_against_pinning_target(spec3):
    alphas = pinning_alphas(spec3, 0.08, 0.31, targets=[3])
    rep = collusion_feasibility(spec3, alphas, samples=100, seed=1)
    assert not rep.consistent and rep.residual > 1e-3 and rep.solved_pairs is None
    assert rep.starts == 100 and rep.cross_product_gap > 0


def test_collusion_zero_target(spec3):
    rep = collusion_feasibility(spec3, np.zeros(4), samples=20, seed=0)
    assert rep.consistent and rep.residual < 1e-9
    assert rep.cross_product_gap == 0.0


def test_positive_control(spec3):
    alphas = pinning_alphas(spec3, 0.08, 0.31, targets=[2, 3])
    resid, strat = single_player_feasibility(spec3, alphas, player=1)
    assert resid < 1e-9
    assert strat.pc == pytest.approx([0.21667, 0.14833, 0.08], abs=1e-5)


def test_collusive_pair_pins_third_player(spec3, rng):
    # mu < 0 and xi/|mu| inside [r/3 + 1, r]: every joint-column target is a
    # product of two probabilities, and the pair really pins player 3
    alphas = [0.157, 0.0, 0.0, -0.1]
    rep = collusion_feasibility(spec3, alphas, samples=200, seed=0)
    assert rep.consistent
    p, q = rep.solved_pairs
    for _ in range(10):
        third = ReducedStrategy.random(3, rng)
        e = expected_payoffs(spec3, [p, q, third])
        assert e[2] == pytest.approx(1.57, abs=1e-8)
        assert linear_combination(spec3, [p, q, third], alphas) == pytest.approx(0, abs=1e-9)


def test_collusion_deterministic(spec3):
    alphas = pinning_alphas(spec3, 0.08, 0.31, targets=[3])
    a = collusion_feasibility(spec3, alphas, samples=30, seed=4)
    b = collusion_feasibility(spec3, alphas, samples=30, seed=4)
    assert a == b


def test_collusion_argument_errors(spec3):
    with pytest.raises(ValueError):
        collusion_feasibility(GameSpec(2, 1.5), np.zeros(3))
    with pytest.raises(ValueError):
        collusion_feasibility(spec3, np.zeros(4), colluders=(1, 1))
    with pytest.raises(ValueError):
        collusion_feasibility(spec3, np.zeros(3))


def test_collusion_other_pair_and_size():
    spec = GameSpec(4, 1.3)
    alphas = pinning_alphas(spec, 0.5, 0.5, targets=[1, 4])
    rep = collusion_feasibility(spec, alphas, samples=20, seed=0, colluders=(2, 3))
    assert rep.residual > 1e-3
