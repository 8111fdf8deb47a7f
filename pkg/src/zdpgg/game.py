"""Stage game: state indexing, payoff vectors and memory-one strategies.

States of an N-player round are indexed by an N-bit integer.  Player 1 owns
the most significant bit, and a bit is 0 for cooperation and 1 for
defection, so for three players the order is CCC, CCD, CDC, ..., DDD.
Players are numbered from 1 in the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exceptions import InvalidGame

MAX_PLAYERS = 16
PROB_TOL = 1e-12


@dataclass(frozen=True)
class GameSpec:
    """An N-player public goods game with unit endowment.

    Parameters
    ----------
    n_players : int
        Group size N, between 2 and 16.
    factor : float
        Multiplication factor r of the public pot, 1 < r <= N.
    """

    n_players: int
    factor: float
    endowment: float = field(default=1.0, init=False)

    def __post_init__(self):
        n, r = self.n_players, self.factor
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise InvalidGame(f"n_players must be an integer, got {n!r}")
        if not 2 <= n <= MAX_PLAYERS:
            raise InvalidGame(f"n_players must lie in [2, {MAX_PLAYERS}], got {n}")
        try:
            r = float(r)
        except (TypeError, ValueError):
            raise InvalidGame(f"factor must be a real number, got {self.factor!r}") from None
        if not math.isfinite(r) or r <= 1.0:
            raise InvalidGame(f"factor must satisfy r > 1, got r={r}")
        if r > n:
            raise InvalidGame(f"factor must satisfy r <= N={n}, got r={r}")
        object.__setattr__(self, "n_players", int(n))
        object.__setattr__(self, "factor", r)

    @property
    def n_states(self) -> int:
        return 1 << self.n_players

    @property
    def critical_factor(self) -> float:
        """N/(N-1): below it strategies increase with the cooperator count."""
        return self.n_players / (self.n_players - 1)

    @property
    def payoff_range(self) -> tuple[float, float]:
        n, r = self.n_players, self.factor
        return r / n, 1.0 + r * (n - 1) / n


@lru_cache(maxsize=None)
def action_matrix(n_players: int) -> np.ndarray:
    """Boolean array of shape (2**N, N); entry [i, k] is True if player k+1
    cooperates in state i."""
    idx = np.arange(1 << n_players)
    shifts = np.arange(n_players - 1, -1, -1)
    acts = ((idx[:, None] >> shifts[None, :]) & 1) == 0
    acts.setflags(write=False)
    return acts


@lru_cache(maxsize=None)
def _opponent_counts(n_players: int) -> np.ndarray:
    acts = action_matrix(n_players)
    counts = acts.sum(axis=1, keepdims=True) - acts
    counts.setflags(write=False)
    return counts


def _check_player(player: int, n_players: int) -> int:
    if not 1 <= player <= n_players:
        raise ValueError(f"player must lie in [1, {n_players}], got {player}")
    return player - 1


def state_index(actions: Sequence[bool], n_players: int | None = None) -> int:
    """Encode a tuple of actions (True = cooperate) as a state index."""
    actions = list(actions)
    if n_players is not None and len(actions) != n_players:
        raise ValueError(f"expected {n_players} actions, got {len(actions)}")
    if not actions:
        raise ValueError("actions must not be empty")
    index = 0
    for cooperate in actions:
        index = (index << 1) | (0 if cooperate else 1)
    return index


def state_actions(index: int, n_players: int) -> tuple[bool, ...]:
    """Inverse of :func:`state_index`."""
    if not 0 <= index < (1 << n_players):
        raise ValueError(f"state index {index} out of range for N={n_players}")
    return tuple(bool(v) for v in action_matrix(n_players)[index])


def state_label(index: int, n_players: int) -> str:
    return "".join("C" if a else "D" for a in state_actions(index, n_players))


def opponent_cooperators(state: int, player: int, n_players: int) -> int:
    """Number of cooperators among ``player``'s opponents in ``state``."""
    k = _check_player(player, n_players)
    if not 0 <= state < (1 << n_players):
        raise ValueError(f"state index {state} out of range for N={n_players}")
    return int(_opponent_counts(n_players)[state, k])


def payoff_matrix(spec: GameSpec) -> np.ndarray:
    """Payoffs of every player in every state, shape (N, 2**N)."""
    n = spec.n_players
    acts = action_matrix(n)
    total_c = acts.sum(axis=1)
    # only 2N distinct values; evaluate each exactly, e.g. all-C gives r
    r = rational(spec.factor)
    table = np.array([[float(r * c / n + 1 - own) for c in range(n + 1)] for own in (0, 1)])
    u = table[acts.T.astype(int), total_c[None, :]]
    u.setflags(write=False)
    return u


def payoff_vector(spec: GameSpec, player: int) -> np.ndarray:
    """Stage payoff of ``player`` in each of the 2**N states."""
    k = _check_player(player, spec.n_players)
    return payoff_matrix(spec)[k]


def _as_prob_array(values, n: int, name: str, tol: float = PROB_TOL) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
        bad = int(np.argmax((arr < -tol) | (arr > 1.0 + tol)))
        raise ValueError(f"{name}[{bad}]={arr[bad]!r} is not a probability")
    arr = np.clip(arr, 0.0, 1.0)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ReducedStrategy:
    """Memory-one strategy that only sees the number of cooperating opponents.

    ``pc[n]`` is the probability of cooperating after the player cooperated
    and ``n`` opponents cooperated; ``pd[n]`` is the same after the player
    defected.  Entries within 1e-12 outside [0, 1] are clamped, larger
    violations raise ``ValueError``.
    """

    pc: np.ndarray
    pd: np.ndarray

    def __post_init__(self):
        pc = np.asarray(self.pc, dtype=float).reshape(-1)
        n = pc.size
        if n < 2:
            raise ValueError("a reduced strategy needs at least 2 entries per list")
        object.__setattr__(self, "pc", _as_prob_array(pc, n, "pc"))
        object.__setattr__(self, "pd", _as_prob_array(self.pd, n, "pd"))

    @property
    def n_players(self) -> int:
        return self.pc.size

    def __eq__(self, other):
        if not isinstance(other, ReducedStrategy):
            return NotImplemented
        return np.array_equal(self.pc, other.pc) and np.array_equal(self.pd, other.pd)

    def __hash__(self):
        return hash((self.pc.tobytes(), self.pd.tobytes()))

    def __repr__(self):
        return f"ReducedStrategy(pc={self.pc.tolist()}, pd={self.pd.tolist()})"

    def as_array(self) -> np.ndarray:
        """The 2N entries as ``[pc..., pd...]``."""
        return np.concatenate([self.pc, self.pd])

    @classmethod
    def from_array(cls, values) -> "ReducedStrategy":
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size % 2:
            raise ValueError("a reduced strategy has an even number of entries")
        half = values.size // 2
        return cls(values[:half], values[half:])

    @classmethod
    def always_cooperate(cls, n_players: int) -> "ReducedStrategy":
        return cls(np.ones(n_players), np.ones(n_players))

    @classmethod
    def always_defect(cls, n_players: int) -> "ReducedStrategy":
        return cls(np.zeros(n_players), np.zeros(n_players))

    @classmethod
    def constant(cls, n_players: int, p: float) -> "ReducedStrategy":
        return cls(np.full(n_players, p), np.full(n_players, p))

    @classmethod
    def repeat(cls, n_players: int) -> "ReducedStrategy":
        """The singular strategy: keep playing whatever was played last."""
        return cls(np.ones(n_players), np.zeros(n_players))

    @classmethod
    def wsls(cls, n_players: int) -> "ReducedStrategy":
        """Win-stay lose-shift.

        Keep cooperating only after full mutual cooperation, and switch to
        cooperation after a defection unless every opponent cooperated.
        """
        pc = np.zeros(n_players)
        pc[-1] = 1.0
        pd = np.ones(n_players)
        pd[-1] = 0.0
        return cls(pc, pd)

    @classmethod
    def random(cls, n_players: int, rng: np.random.Generator) -> "ReducedStrategy":
        """Each of the 2N entries drawn independently from U[0, 1]."""
        values = rng.random(2 * n_players)
        return cls(values[:n_players], values[n_players:])


def expand_strategy(spec: GameSpec, reduced: ReducedStrategy, player: int) -> np.ndarray:
    """Full 2**N strategy vector of ``player`` from its reduced form."""
    k = _check_player(player, spec.n_players)
    if reduced.n_players != spec.n_players:
        raise ValueError(
            f"reduced strategy is for N={reduced.n_players}, game has N={spec.n_players}"
        )
    probs = expand_values(spec.n_players, reduced.pc, reduced.pd, player)
    probs.setflags(write=False)
    return probs


def expand_values(n_players: int, pc, pd, player: int = 1) -> np.ndarray:
    """Spread per-count values over the 2**N states without validation."""
    k = _check_player(player, n_players)
    own_c = action_matrix(n_players)[:, k]
    n_opp = _opponent_counts(n_players)[:, k]
    return np.where(own_c, np.asarray(pc, dtype=float)[n_opp], np.asarray(pd, dtype=float)[n_opp])


def zd_column(spec: GameSpec, reduced: ReducedStrategy, player: int) -> np.ndarray:
    """The column of the transition structure controlled by ``player`` alone.

    Equal to the expanded strategy minus 1 on states where the player
    cooperated.
    """
    probs = expand_strategy(spec, reduced, player)
    own_c = action_matrix(spec.n_players)[:, player - 1]
    return probs - own_c


def rational(x) -> Fraction:
    """Exact value of the shortest decimal that round-trips to ``x``.

    Closed forms such as r/(r(N-1) - N) cancel badly near the critical
    factor; evaluating them on the decimal the caller wrote and rounding
    once at the end gives correctly rounded results.
    """
    return Fraction(repr(float(x)))


def snap_probabilities(values, tol: float = PROB_TOL) -> np.ndarray:
    """Move entries within ``tol`` of 0 or 1 onto the bound."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    v[v <= tol] = 0.0
    v[v >= 1.0 - tol] = 1.0
    return v


def validate_full_strategy(spec: GameSpec, probs, name: str = "strategy") -> np.ndarray:
    return _as_prob_array(probs, spec.n_states, name)
