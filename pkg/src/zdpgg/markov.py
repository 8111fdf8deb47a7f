"""Markov chain of the repeated stage game and long-run payoffs.

Long-run payoffs are computed two independent ways: a direct solve for the
stationary vector, and the determinant identity in which each player's
strategy occupies a column of ``M - I`` after elementary column operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .exceptions import DeterminantMismatch, NonErgodicChain
from .game import (
    GameSpec,
    ReducedStrategy,
    action_matrix,
    expand_strategy,
    payoff_matrix,
    validate_full_strategy,
)

MAX_DENSE_PLAYERS = 12
ROW_SUM_TOL = 1e-12
CROSS_CHECK_TOL = 1e-9
CROSS_CHECK_MAX_PLAYERS = 10


def expand_profile(spec: GameSpec, profile: Sequence) -> list[np.ndarray]:
    """Full strategy vectors for a profile of reduced or full strategies."""
    if len(profile) != spec.n_players:
        raise ValueError(f"expected {spec.n_players} strategies, got {len(profile)}")
    out = []
    for k, s in enumerate(profile, start=1):
        if isinstance(s, ReducedStrategy):
            out.append(expand_strategy(spec, s, k))
        else:
            out.append(validate_full_strategy(spec, s, name=f"strategy of player {k}"))
    return out


def _strategy_stack(spec: GameSpec, strategies) -> np.ndarray:
    if spec.n_players > MAX_DENSE_PLAYERS:
        raise ValueError(
            f"dense chain analysis is limited to N <= {MAX_DENSE_PLAYERS}, got N={spec.n_players}"
        )
    return np.stack(expand_profile(spec, strategies))


def transition_matrix(spec: GameSpec, strategies) -> np.ndarray:
    """Row-stochastic transition matrix of shape (2**N, 2**N).

    ``M[i, j]`` is the probability that the round after state ``i`` ends in
    state ``j``.  Players act independently, so each row is the Kronecker
    product of the per-player ``[P(C), P(D)]`` pairs in bit order.
    """
    q = _strategy_stack(spec, strategies)  # (N, S)
    n_states = spec.n_states
    rows = np.ones((n_states, 1))
    for k in range(spec.n_players):
        pair = np.stack([q[k], 1.0 - q[k]], axis=1)  # bit 0 = C first
        rows = (rows[:, :, None] * pair[:, None, :]).reshape(n_states, -1)
    return rows


@dataclass(frozen=True)
class RegularityReport:
    """Structure of the support graph of a transition matrix.

    ``communicating_classes`` counts closed classes; the stationary
    distribution is unique exactly when it is 1.
    """

    is_regular: bool
    reason: str  # "ok", "reducible" or "periodic"
    communicating_classes: int
    period: int

    @property
    def unique_stationary(self) -> bool:
        return self.communicating_classes == 1


def _check_stochastic(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {m.shape}")
    if np.any(m < 0) or np.any(m > 1):
        raise ValueError("transition matrix entries must lie in [0, 1]")
    err = np.abs(m.sum(axis=1) - 1.0)
    if np.any(err > ROW_SUM_TOL * max(1.0, math.log2(m.shape[0]))):
        raise ValueError(f"rows do not sum to 1 (max error {err.max():.3e})")
    return m


def _period(graph: csr_matrix, nodes: np.ndarray) -> int:
    # gcd of level[u] + 1 - level[v] over all edges, with BFS levels
    sub = graph[nodes][:, nodes].tocoo()
    order, pred = breadth_first_order(sub.tocsr(), 0, directed=True, return_predecessors=True)
    level = np.zeros(nodes.size, dtype=np.int64)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    diffs = np.abs(level[sub.row] + 1 - level[sub.col])
    return int(np.gcd.reduce(diffs)) if diffs.size else 0


def regularity(m) -> RegularityReport:
    """Decide irreducibility and aperiodicity from the positive-entry support."""
    m = _check_stochastic(m)
    graph = csr_matrix(m > 0)
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    # a class is closed when no edge leaves it
    coo = graph.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_classes = set(labels[coo.row[leaving]].tolist())
    closed = [c for c in range(n_comp) if c not in open_classes]
    periods = [_period(graph, np.flatnonzero(labels == c)) for c in closed]
    period = periods[0] if len(periods) == 1 else 0
    if n_comp > 1:
        return RegularityReport(False, "reducible", len(closed), period)
    if period != 1:
        return RegularityReport(False, "periodic", 1, period)
    return RegularityReport(True, "ok", 1, 1)


def stationary(m, report: RegularityReport | None = None) -> np.ndarray:
    """Unique stationary distribution of a transition matrix.

    Solves ``(M^T - I) v = 0`` with the last equation replaced by
    ``sum(v) = 1`` using LU with partial pivoting.  Chains whose stationary
    distribution is unique but which have transient states (one closed
    class) are accepted; chains with several closed classes raise
    :class:`NonErgodicChain`.
    """
    m = np.asarray(m, dtype=float)
    if report is None:
        report = regularity(m)
    if not report.unique_stationary:
        raise NonErgodicChain(
            f"chain has {report.communicating_classes} closed classes; "
            "the stationary distribution depends on the initial state",
            closed_classes=report.communicating_classes,
        )
    n = m.shape[0]
    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    v = np.linalg.solve(a, b)
    v[v < 0] = 0.0
    return v / v.sum()


def controlled_matrix(spec: GameSpec, strategies) -> np.ndarray:
    """``M - I`` after the column operations that isolate each player.

    For player k, every column of a state in which k cooperates is added to
    the column of the state in which only k cooperates.  That column then
    holds the player's own strategy minus its cooperation indicator, a
    quantity that depends on nobody else.  The last column (all defect) is
    untouched and is the one later replaced by a payoff vector.
    """
    m = transition_matrix(spec, strategies)
    a = m - np.eye(spec.n_states)
    acts = action_matrix(spec.n_players)
    n = spec.n_players
    for k in range(n):
        target = (1 << n) - 1 - (1 << (n - 1 - k))  # only player k+1 cooperates
        a[:, target] = a[:, acts[:, k]].sum(axis=1)
    return a


def _with_last_column(spec: GameSpec, strategies, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != spec.n_states:
        raise ValueError(f"u must have {spec.n_states} entries, got {u.size}")
    a = controlled_matrix(spec, strategies)
    a[:, -1] = u
    return a


def dot_via_determinant(spec: GameSpec, strategies, u) -> float:
    """det(p~1, ..., p~N, u): proportional to the stationary average of u."""
    return float(np.linalg.det(_with_last_column(spec, strategies, u)))


def determinant_ratio(spec: GameSpec, strategies, u) -> float:
    """Long-run average of ``u`` as det(..., u) / det(..., 1).

    Evaluated with log-determinants so the ratio survives the under/overflow
    of the raw determinants for larger N.
    """
    a = _with_last_column(spec, strategies, u)
    sign_u, log_u = np.linalg.slogdet(a)
    a[:, -1] = 1.0
    sign_1, log_1 = np.linalg.slogdet(a)
    if sign_1 == 0:
        raise NonErgodicChain("normalising determinant vanishes")
    if sign_u == 0:
        return 0.0
    return float(sign_u * sign_1 * math.exp(log_u - log_1))


def expected_payoffs(spec: GameSpec, strategies, check: bool = False) -> np.ndarray:
    """Long-run expected payoff of every player.

    Parameters
    ----------
    spec : GameSpec
    strategies : sequence of ReducedStrategy or full strategy vectors
        One per player, in player order.
    check : bool, default=False
        Also evaluate every payoff through the determinant ratio and raise
        :class:`DeterminantMismatch` on disagreement beyond 1e-9.  Skipped for
        N > 10.

    Returns
    -------
    ndarray of shape (N,)
    """
    m = transition_matrix(spec, strategies)
    v = stationary(m)
    payoffs = payoff_matrix(spec) @ v
    if check and spec.n_players <= CROSS_CHECK_MAX_PLAYERS:
        u = payoff_matrix(spec)
        for k in range(spec.n_players):
            via_det = determinant_ratio(spec, strategies, u[k])
            if abs(via_det - payoffs[k]) > CROSS_CHECK_TOL * (1 + abs(payoffs[k])):
                raise DeterminantMismatch(
                    f"player {k + 1}: stationary {payoffs[k]!r} vs determinant {via_det!r}"
                )
    return payoffs


def linear_combination(spec: GameSpec, strategies, alphas) -> float:
    """``alpha_0 + sum_X alpha_X E^X`` with ``alphas = [alpha_0, alpha_1, ..., alpha_N]``."""
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.size != spec.n_players + 1:
        raise ValueError(f"expected {spec.n_players + 1} coefficients, got {alphas.size}")
    return float(alphas[0] + alphas[1:] @ expected_payoffs(spec, strategies))
