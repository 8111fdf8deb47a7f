"""Checks of the two negative results about zero-determinant control.

* A single player cannot pin its *own* long-run payoff.
* Two players acting jointly can only enforce a relation through the column
  they control together, whose entries are products ``p_i * q_i`` of their
  cooperation probabilities.  :func:`collusion_feasibility` searches for
  such products numerically and reports the residual it reaches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, linprog, lsq_linear

from .game import GameSpec, ReducedStrategy, _opponent_counts, action_matrix, payoff_matrix
from .pinning import pinning_params

CONSISTENT_TOL = 1e-9


@dataclass(frozen=True)
class SelfPinReport:
    """Outcome of trying to pin one's own payoff.

    ``max_p_dd`` is the largest ``p_dd`` the binding inequality
    ``p_dd <= (N-r)(p_cc-1)/(r(N-1))`` allows over the unit square, attained
    at ``best_corner``.  ``lp_distance`` is the largest distance (in the
    ``(1 - p_cc) + p_dd`` sense) from the singular point that still satisfies
    every probability constraint; zero means only the singular strategy
    survives.
    """

    feasible: bool
    witness: str
    best_corner: tuple[float, float]
    max_p_dd: float
    lp_distance: float


def _self_pin_constraints(spec: GameSpec) -> tuple[np.ndarray, np.ndarray]:
    # rows: value = a*p_cc + b*p_dd + c for each pc[n], pd[n]
    n, r = spec.n_players, spec.factor
    k = np.arange(n)
    w = np.concatenate([r * (k + 1) / n, (r * k + n) / n])
    const = np.concatenate([np.ones(n), np.zeros(n)])
    coef = np.stack([(w - 1) / (r - 1), (r - w) / (r - 1)], axis=1)
    return coef, const + (1 - w) / (r - 1)


def self_pin_feasibility(spec: GameSpec) -> SelfPinReport:
    """Can the focal player enforce ``E^1 = const``?  Always no for 1 < r <= N."""
    n, r = spec.n_players, spec.factor

    def bound(p_cc):
        return (n - r) * (p_cc - 1) / (r * (n - 1))

    corner = max(((0.0, bound(0.0)), (1.0, bound(1.0))), key=lambda c: c[1])
    coef, const = _self_pin_constraints(spec)
    # maximise (1 - p_cc) + p_dd subject to 0 <= coef @ x + const <= 1
    res = linprog(
        c=[1.0, -1.0],
        A_ub=np.vstack([coef, -coef]),
        b_ub=np.concatenate([1 - const, const]),
        bounds=[(0, 1), (0, 1)],
        method="highs",
    )
    distance = 1.0 - res.fun if res.status == 0 else -np.inf
    feasible = bool(res.status == 0 and distance > CONSISTENT_TOL)
    witness = (
        f"pc[0] <= 1 requires p_dd <= (N-r)(p_cc-1)/(r(N-1)); "
        f"at p_cc={corner[0]:g} this gives p_dd <= {corner[1]:.3g}"
    )
    return SelfPinReport(feasible, witness, corner, corner[1], float(max(distance, 0.0)))


@dataclass(frozen=True)
class CollusionReport:
    """Result of the multi-start search for a collusive pair.

    ``residual`` is the smallest max-abs mismatch of the joint-column
    equations found; ``solved_pairs`` holds the two colluders' strategies
    when ``consistent``.  ``cross_product_gap`` evaluates
    ``max |(1 + T1) T2 - T3 T4|`` over the per-count targets, the
    compatibility condition of the simplified same-count model.
    """

    consistent: bool
    residual: float
    solved_pairs: tuple[ReducedStrategy, ReducedStrategy] | None
    cross_product_gap: float
    starts: int
    best_start: int


def _targets(spec: GameSpec, alphas) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.size != spec.n_players + 1:
        raise ValueError(f"expected {spec.n_players + 1} coefficients, got {alphas.size}")
    return alphas[0] + alphas[1:] @ payoff_matrix(spec)


def _unknown_index(n: int, player: int, offset: int) -> np.ndarray:
    own_c = action_matrix(n)[:, player - 1]
    n_opp = _opponent_counts(n)[:, player - 1]
    return offset + np.where(own_c, 0, n) + n_opp


def _cross_product_gap(spec: GameSpec, t: np.ndarray, colluders) -> float:
    n = spec.n_players
    a, b = colluders
    others = [k for k in range(1, n + 1) if k not in colluders]
    gap = 0.0
    for m in range(len(others) + 1):
        theta = {}
        for ca in (True, False):
            for cb in (True, False):
                acts = [False] * n
                acts[a - 1], acts[b - 1] = ca, cb
                for k in others[:m]:
                    acts[k - 1] = True
                idx = int("".join("0" if c else "1" for c in acts), 2)
                theta[ca, cb] = t[idx]
        t1, t2 = theta[True, True], theta[False, False]
        t3, t4 = theta[True, False], theta[False, True]
        gap = max(gap, abs((1 + t1) * t2 - t3 * t4))
    return gap


def collusion_feasibility(
    spec: GameSpec,
    alphas,
    samples: int = 1000,
    seed: int = 0,
    colluders: tuple[int, int] = (1, 2),
) -> CollusionReport:
    """Search for two strategies whose joint column equals a payoff combination.

    Parameters
    ----------
    spec : GameSpec
        Needs N >= 3.
    alphas : array-like of length N+1
        ``[alpha_0, alpha_1, ..., alpha_N]``; the target column is
        ``alpha_0 + sum_X alpha_X u^X``.
    samples : int
        Number of random starts of the bounded least-squares solve.
    seed : int
        Start ``s`` draws its initial point from ``default_rng([seed, s])``.
    colluders : pair of player indices

    Returns
    -------
    CollusionReport
        ``consistent`` is True only if some start reached a residual below
        1e-9.  The search is empirical and proves nothing when it fails.
    """
    n = spec.n_players
    if n < 3:
        raise ValueError("collusion needs at least three players")
    a, b = colluders
    if a == b or not (1 <= a <= n and 1 <= b <= n):
        raise ValueError(f"invalid colluders {colluders!r}")
    t = _targets(spec, alphas)
    acts = action_matrix(n)
    both_c = (acts[:, a - 1] & acts[:, b - 1]).astype(float)
    rhs = t + both_c
    ia = _unknown_index(n, a, 0)
    ib = _unknown_index(n, b, 2 * n)
    rows = np.arange(spec.n_states)

    def fun(z):
        return z[ia] * z[ib] - rhs

    def jac(z):
        j = np.zeros((spec.n_states, 4 * n))
        j[rows, ia] = z[ib]
        j[rows, ib] += z[ia]
        return j

    best, best_z, best_start = np.inf, None, -1
    for s in range(samples):
        z0 = np.random.default_rng([seed, s]).random(4 * n)
        sol = least_squares(fun, z0, jac=jac, bounds=(0.0, 1.0), method="dogbox",
                            xtol=1e-10, ftol=1e-10, gtol=1e-10, max_nfev=50)
        resid = float(np.max(np.abs(fun(sol.x))))
        if resid < best:
            best, best_z, best_start = resid, sol.x, s
        if best < CONSISTENT_TOL * 1e-3:
            break
    consistent = best < CONSISTENT_TOL
    pairs = None
    if consistent:
        pairs = (
            ReducedStrategy(best_z[:n], best_z[n:2 * n]),
            ReducedStrategy(best_z[2 * n:3 * n], best_z[3 * n:]),
        )
    return CollusionReport(
        consistent=consistent,
        residual=best,
        solved_pairs=pairs,
        cross_product_gap=_cross_product_gap(spec, t, (a, b)),
        starts=s + 1 if samples else 0,
        best_start=best_start,
    )


def single_player_feasibility(spec: GameSpec, alphas, player: int = 1):
    """Positive control: solve for one player's column equal to the target.

    The equations are linear, so a bounded linear least-squares solve is
    exact.  Returns ``(residual, strategy)``.
    """
    n = spec.n_players
    t = _targets(spec, alphas)
    own_c = action_matrix(n)[:, player - 1].astype(float)
    idx = _unknown_index(n, player, 0)
    design = np.zeros((spec.n_states, 2 * n))
    design[np.arange(spec.n_states), idx] = 1.0
    sol = lsq_linear(design, t + own_c, bounds=(0.0, 1.0), tol=1e-15)
    resid = float(np.max(np.abs(design @ sol.x - t - own_c)))
    return resid, ReducedStrategy(sol.x[:n], sol.x[n:])


def pinning_alphas(spec: GameSpec, p_cc: float, p_dd: float, targets) -> np.ndarray:
    """``[xi, alpha_1..alpha_N]`` with ``mu`` on each target player's payoff."""
    params = pinning_params(spec, p_cc, p_dd)
    alphas = np.zeros(spec.n_players + 1)
    alphas[0] = params.xi
    for k in targets:
        alphas[k] = params.mu
    return alphas
