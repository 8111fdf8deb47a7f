"""Monte Carlo play of the repeated game and scatter datasets.

Every trial owns an independent random stream derived from the master seed
and the trial index, so results do not depend on the order or the thread in
which trials run.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .exceptions import NonErgodicChain
from .game import GameSpec, ReducedStrategy, expand_strategy, payoff_matrix
from .markov import expected_payoffs

DEFAULT_DISCARD = 1000
CHUNK_ROUNDS = 1 << 15
GENERATOR_KINDS = ("uniform_random_reduced", "always_c", "always_d", "wsls", "constant")
MAX_RESAMPLES = 1000


@numba.njit(nogil=True, cache=True)
def _advance(probs, uniforms, state, skip, counts):
    # probs: (N, S) cooperation probabilities; uniforms: (rounds, N)
    n_rounds, n = uniforms.shape
    for t in range(n_rounds):
        nxt = 0
        for k in range(n):
            nxt = (nxt << 1) | (uniforms[t, k] >= probs[k, state])
        state = nxt
        if t >= skip:
            counts[state] += 1
    return state


def _seed_sequence(seed: int, trial: int | None, stream: int) -> np.random.SeedSequence:
    if trial is None:
        return np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.SeedSequence(entropy=seed, spawn_key=(trial, stream))


def _visit_counts(probs: np.ndarray, rounds: int, discard: int, rng, initial_state: int) -> np.ndarray:
    n, n_states = probs.shape
    counts = np.zeros(n_states, dtype=np.int64)
    state, done = initial_state, 0
    while done < rounds:
        size = min(CHUNK_ROUNDS, rounds - done)
        u = rng.random((size, n))
        state = _advance(probs, u, state, max(discard - done, 0), counts)
        done += size
    return counts


def play_match(
    spec: GameSpec,
    strategies: Sequence[ReducedStrategy],
    rounds: int,
    discard: int = DEFAULT_DISCARD,
    seed: int = 0,
    initial_state: int | None = None,
) -> np.ndarray:
    """Simulate one match and return every player's average payoff.

    Parameters
    ----------
    spec : GameSpec
    strategies : sequence of N ReducedStrategy
    rounds : int
        Rounds played; must exceed ``discard``.
    discard : int, default=1000
        Leading rounds left out of the average.
    seed : int
    initial_state : int, optional
        Outcome before round 1; defaults to everybody defecting.

    Returns
    -------
    ndarray of shape (N,)
    """
    return _play(spec, strategies, rounds, discard, np.random.default_rng(_seed_sequence(seed, None, 1)),
                 initial_state)


def _play(spec, strategies, rounds, discard, rng, initial_state=None):
    rounds, discard = int(rounds), int(discard)
    if discard < 0 or rounds <= discard:
        raise ValueError(f"need rounds > discard >= 0, got rounds={rounds}, discard={discard}")
    if len(strategies) != spec.n_players:
        raise ValueError(f"expected {spec.n_players} strategies, got {len(strategies)}")
    if initial_state is None:
        initial_state = spec.n_states - 1
    if not 0 <= initial_state < spec.n_states:
        raise ValueError(f"initial_state {initial_state} out of range")
    probs = np.stack([expand_strategy(spec, s, k) for k, s in enumerate(strategies, start=1)])
    counts = _visit_counts(probs, rounds, discard, rng, int(initial_state))
    return payoff_matrix(spec) @ counts / (rounds - discard)


@dataclass(frozen=True)
class OpponentGenerator:
    """How the focal player's N-1 opponents are drawn in each trial.

    ``kind`` is one of ``uniform_random_reduced`` (each of the 2N entries
    i.i.d. uniform), ``always_c``, ``always_d``, ``wsls`` or ``constant``;
    the last uses ``p``.
    """

    kind: str = "uniform_random_reduced"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}")
        if self.kind == "constant":
            if self.p is None or not 0.0 <= float(self.p) <= 1.0:
                raise ValueError(f"constant generator needs 0 <= p <= 1, got {self.p!r}")

    def draw(self, n_players: int, rng: np.random.Generator) -> list[ReducedStrategy]:
        count = n_players - 1
        if self.kind == "uniform_random_reduced":
            return [ReducedStrategy.random(n_players, rng) for _ in range(count)]
        if self.kind == "always_c":
            return [ReducedStrategy.always_cooperate(n_players)] * count
        if self.kind == "always_d":
            return [ReducedStrategy.always_defect(n_players)] * count
        if self.kind == "wsls":
            return [ReducedStrategy.wsls(n_players)] * count
        return [ReducedStrategy.constant(n_players, float(self.p))] * count

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["p"] = float(self.p)
        return out


@dataclass
class SweepDataset:
    """One ``(focal payoff, mean opponent payoff)`` point per trial.

    ``payoffs`` keeps every player's payoff (focal first); ``points`` is
    derived from it.
    """

    payoffs: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        if self.payoffs.shape[0] == 0:
            return np.empty((0, 2))
        return np.column_stack([self.payoffs[:, 0], self.payoffs[:, 1:].mean(axis=1)])

    def __len__(self):
        return self.payoffs.shape[0]

    def surplus(self) -> np.ndarray:
        """Points shifted by the free-rider baseline 1."""
        return self.points - 1.0

    def rows(self):
        """``(trial, focal_payoff, mean_opponent_payoff)`` tuples."""
        for t, (f, m) in enumerate(self.points):
            yield t, float(f), float(m)


def _strategy_meta(s: ReducedStrategy) -> dict:
    return {"pc": s.pc.tolist(), "pd": s.pd.tolist()}


def _base_meta(spec, focal, generator, trials, seed, **extra) -> dict:
    meta = {
        "n_players": spec.n_players,
        "factor": spec.factor,
        "focal": _strategy_meta(focal),
        "generator": generator.describe(),
        "trials": int(trials),
        "seed": int(seed),
    }
    meta.update(extra)
    return meta


def _check_focal(spec, focal):
    if focal.n_players != spec.n_players:
        raise ValueError(f"focal strategy is for N={focal.n_players}, game has N={spec.n_players}")


def sweep(
    spec: GameSpec,
    focal: ReducedStrategy,
    generator: OpponentGenerator,
    trials: int,
    rounds: int,
    seed: int,
    discard: int = DEFAULT_DISCARD,
    initial_state: int | None = None,
    n_jobs: int = 1,
) -> SweepDataset:
    """Simulated matches of ``focal`` (player 1) against drawn opponents.

    Trial ``t`` draws its opponents and its play from two streams keyed by
    ``(seed, t)``.  ``n_jobs`` threads share the trials; ``n_jobs=-1`` uses
    every CPU.  The dataset is the same for any ``n_jobs``.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if discard < 0 or rounds <= discard:
        raise ValueError(f"need rounds > discard >= 0, got rounds={rounds}, discard={discard}")
    _check_focal(spec, focal)
    out = np.empty((trials, spec.n_players))

    def run(t):
        opp_rng = np.random.default_rng(_seed_sequence(seed, t, 0))
        play_rng = np.random.default_rng(_seed_sequence(seed, t, 1))
        profile = [focal] + generator.draw(spec.n_players, opp_rng)
        out[t] = _play(spec, profile, rounds, discard, play_rng, initial_state)

    _run_all(run, trials, n_jobs)
    meta = _base_meta(spec, focal, generator, trials, seed, rounds_per_trial=int(rounds),
                      discard=int(discard),
                      initial_state=int(spec.n_states - 1 if initial_state is None else initial_state))
    return SweepDataset(out, meta)


def _run_all(fn, trials, n_jobs):
    if n_jobs is None or n_jobs == 0:
        n_jobs = 1
    if n_jobs < 0:
        n_jobs = os.cpu_count() or 1
    if n_jobs == 1:
        for t in range(trials):
            fn(t)
        return
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        # list() re-raises the first worker exception
        list(pool.map(fn, range(trials)))


def analytic_sweep(
    spec: GameSpec,
    focal: ReducedStrategy,
    generator: OpponentGenerator,
    trials: int,
    seed: int,
) -> SweepDataset:
    """Noise-free counterpart of :func:`sweep`.

    Opponents are drawn from the same per-trial stream as in :func:`sweep`,
    and payoffs come from the stationary solve.  A profile whose chain has
    several closed classes is redrawn from the same stream; the number of
    redraws is stored in ``meta["resampled"]``.
    """
    trials = int(trials)
    if trials < 0:
        raise ValueError(f"trials must be non-negative, got {trials}")
    _check_focal(spec, focal)
    out = np.empty((trials, spec.n_players))
    resampled = 0
    for t in range(trials):
        rng = np.random.default_rng(_seed_sequence(seed, t, 0))
        for attempt in range(MAX_RESAMPLES):
            profile = [focal] + generator.draw(spec.n_players, rng)
            try:
                out[t] = expected_payoffs(spec, profile)
                break
            except NonErgodicChain:
                resampled += 1
        else:
            raise NonErgodicChain(f"trial {t}: no profile with a unique stationary distribution "
                                  f"after {MAX_RESAMPLES} draws")
    meta = _base_meta(spec, focal, generator, trials, seed, resampled=resampled, analytic=True)
    return SweepDataset(out, meta)


def hull_area(points: np.ndarray) -> float:
    """Area of the convex hull of 2-D points (0 for degenerate sets)."""
    points = np.asarray(points, dtype=float)
    if len(points) < 3:
        return 0.0
    try:
        return float(ConvexHull(points).volume)
    except QhullError:
        return 0.0
