"""Pinning strategies: fixing the opponents' total expected payoff.

A pinning strategy is parameterised by its two extreme probabilities,
``p_cc`` (cooperate after full mutual cooperation, ``pc[N-1]``) and ``p_dd``
(cooperate after full mutual defection, ``pd[0]``).  All other entries
follow, and the opponents' total long-run payoff is pinned to ``-xi/mu``
whatever they play.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _geometry
from .exceptions import DegenerateFactor, InfeasiblePinning, SingularStrategy
from .game import PROB_TOL, GameSpec, ReducedStrategy, rational, snap_probabilities

SINGULAR_POINT = (1.0, 0.0)
REGIMES = ("low_r", "critical_r", "high_r", "empty")


@dataclass(frozen=True)
class PinningParams:
    mu: float
    xi: float
    p_cc: float
    p_dd: float

    @property
    def gamma(self) -> float:
        """Slope parameter (1 - p_cc) / p_dd of the line through (1, 0)."""
        if self.p_dd == 0:
            return math.inf
        return (1.0 - self.p_cc) / self.p_dd

    @property
    def pinned_total(self) -> float:
        return -self.xi / self.mu


def _check_point(p_cc: float, p_dd: float, tol: float = PROB_TOL) -> tuple[float, float]:
    p_cc, p_dd = float(p_cc), float(p_dd)
    for name, v in (("p_cc", p_cc), ("p_dd", p_dd)):
        if not (-tol <= v <= 1 + tol):
            raise InfeasiblePinning(f"{name}={v!r} is not a probability", f"0 <= {name} <= 1")
    if abs(p_cc - 1.0) <= tol and abs(p_dd) <= tol:
        raise SingularStrategy(
            "(p_cc, p_dd) = (1, 0) is the singular repeat-own-move strategy; it pins nothing"
        )
    return p_cc, p_dd


def pinning_params(spec: GameSpec, p_cc: float, p_dd: float) -> PinningParams:
    """Scale ``mu`` and offset ``xi`` of the pinning relation for a control point."""
    n = spec.n_players
    if spec.factor == 1.0:
        raise DegenerateFactor("pinning is undefined for r = 1")
    p_cc, p_dd = _check_point(p_cc, p_dd)
    r, x, y = rational(spec.factor), rational(p_cc), rational(p_dd)
    mu = -(1 - x + y) / ((n - 1) * (r - 1))
    xi = (1 - x + r * y) / (r - 1)
    return PinningParams(mu=float(mu), xi=float(xi), p_cc=p_cc, p_dd=p_dd)


def _raw_entries(spec: GameSpec, params: PinningParams) -> tuple[np.ndarray, np.ndarray]:
    # exact evaluation from the control point, so pc[N-1] and pd[0] return it
    n = spec.n_players
    r, x, y = rational(spec.factor), rational(params.p_cc), rational(params.p_dd)
    mu = -(1 - x + y) / ((n - 1) * (r - 1))
    xi = (1 - x + r * y) / (r - 1)
    pc = [1 + mu * (r * (k + 1) * (n - 1) + (n - 1 - k) * n) / n + xi for k in range(n)]
    pd = [mu * (r * k * (n - 1) + (n - 1 - k) * n) / n + xi for k in range(n)]
    return np.array(pc, dtype=float), np.array(pd, dtype=float)


def pinning_regime(spec: GameSpec) -> str:
    """Which of the three factor regimes (or the empty one) ``spec`` is in."""
    n, r = spec.n_players, spec.factor
    tol = 1e-12 * n
    crit = spec.critical_factor
    if abs(r - crit) <= tol:
        return "critical_r"
    if r < crit:
        return "low_r"
    if n > 2 and r <= n / (n - 2) + tol:
        return "high_r"
    return "empty"


def _region_halfplanes(spec: GameSpec, regime: str) -> list[tuple[tuple[float, float, float], str]]:
    # (a, b, c) means a*p_cc + b*p_dd + c >= 0
    n, r = spec.n_players, spec.factor
    k = r * n - n - r
    if regime == "low_r":
        return [
            ((r, k, r * n - n - r), "pc[0] >= 0"),
            ((-k, -r, 2 * r * n - r - 2 * n), f"pd[{n - 1}] <= 1"),
        ]
    if regime == "high_r":
        return [
            ((-r, -k, r), "pc[0] <= 1"),
            ((k, r, -k), f"pd[{n - 1}] >= 0"),
        ]
    return []


@dataclass(frozen=True)
class FeasibleRegion:
    """Control points ``(p_cc, p_dd)`` that yield a valid pinning strategy.

    ``vertices`` run counterclockwise from the lexicographically smallest
    one; two vertices denote a segment.  Membership is closed, minus
    ``excluded_points``.
    """

    case_tag: str
    vertices: tuple[tuple[float, float], ...]
    excluded_points: tuple[tuple[float, float], ...]
    halfplanes: tuple[tuple[tuple[float, float, float], str], ...]

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def area(self) -> float:
        return _geometry.polygon_area(self.vertices)

    def contains(self, p_cc, p_dd, tol: float = PROB_TOL):
        inside = _geometry.polygon_contains(self.vertices, p_cc, p_dd, tol)
        for ex, ey in self.excluded_points:
            inside &= np.hypot(np.asarray(p_cc) - ex, np.asarray(p_dd) - ey) > tol
        return inside

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform points from the region by rejection from the unit square."""
        if self.is_empty or self.area <= 0:
            raise InfeasiblePinning(f"region ({self.case_tag}) has no interior to sample")
        out = np.empty((0, 2))
        while len(out) < size:
            pts = rng.random((4 * size, 2))
            out = np.vstack([out, pts[self.contains(pts[:, 0], pts[:, 1])]])
        return out[:size]


def feasible_region(spec: GameSpec) -> FeasibleRegion:
    """Exact feasible region of pinning control points for ``spec``."""
    n, r = spec.n_players, spec.factor
    regime = pinning_regime(spec)
    halfplanes = _region_halfplanes(spec, regime)
    if regime == "empty":
        verts = []
    elif regime == "critical_r":
        verts = list(_geometry.UNIT_SQUARE)
    elif regime == "low_r":
        verts = _geometry.intersect_unit_square([hp for hp, _ in halfplanes])
    else:
        k = r * n - n - r
        verts = [(0.0, 1.0), (0.0, k / r), ((2 * r - r * n + n) / r, 1.0), SINGULAR_POINT]
    verts = _geometry.canonical_vertices(verts)
    excluded = ()
    if verts and _geometry.polygon_contains(verts, *SINGULAR_POINT, tol=1e-9):
        excluded = (SINGULAR_POINT,)
    return FeasibleRegion(regime, tuple(verts), excluded, tuple(halfplanes))


def pinning_strategy(spec: GameSpec, p_cc: float, p_dd: float) -> ReducedStrategy:
    """Reduced pinning strategy with control point ``(p_cc, p_dd)``.

    Raises
    ------
    SingularStrategy
        For the point (1, 0).
    InfeasiblePinning
        If any of the 2N probabilities leaves [0, 1]; the error names the
        violated constraint.
    """
    params = pinning_params(spec, p_cc, p_dd)
    pc, pd = _raw_entries(spec, params)
    violation, label = 0.0, None
    for name, vals in (("pc", pc), ("pd", pd)):
        for i, v in enumerate(vals):
            if -v > violation:
                violation, label = -v, f"{name}[{i}] >= 0"
            if v - 1 > violation:
                violation, label = v - 1, f"{name}[{i}] <= 1"
    if violation > PROB_TOL:
        detail = label
        for hp, hp_label in _region_halfplanes(spec, pinning_regime(spec)):
            if hp_label == label:
                detail = f"{label}, i.e. {_geometry.format_halfplane(hp)}"
        raise InfeasiblePinning(
            f"(p_cc, p_dd) = ({params.p_cc!r}, {params.p_dd!r}) violates {detail} "
            f"by {violation:.3g}",
            detail,
        )
    pc, pd = snap_probabilities(pc), snap_probabilities(pd)
    pc[-1] = min(max(params.p_cc, 0.0), 1.0)
    pd[0] = min(max(params.p_dd, 0.0), 1.0)
    return ReducedStrategy(pc, pd)


def pinned_total(spec: GameSpec, p_cc: float, p_dd: float) -> float:
    """Opponents' total long-run payoff enforced by the control point."""
    n = spec.n_players
    p_cc, p_dd = _check_point(p_cc, p_dd)
    r, x, y = rational(spec.factor), rational(p_cc), rational(p_dd)
    denom = 1 - x + y
    if denom == 0:
        raise SingularStrategy("1 - p_cc + p_dd vanishes")
    return float((n - 1) + (r - 1) * (n - 1) * y / denom)


def pinned_total_gamma(spec: GameSpec, gamma: float) -> float:
    """Pinned total along the line ``gamma * p_dd + p_cc = 1``."""
    n, r = spec.n_players, spec.factor
    if gamma <= -1:
        raise ValueError(f"gamma must exceed -1, got {gamma}")
    if math.isinf(gamma):
        return float(n - 1)
    return (n - 1) + (r - 1.0) * (n - 1) / (1.0 + gamma)


def pinning_bounds(spec: GameSpec) -> tuple[float, float]:
    """Smallest and largest opponent totals a pinning strategy can enforce.

    At the critical factor N/(N-1) the range is open and the limits
    ``(N-1, r(N-1))`` are returned.
    """
    n, r = spec.n_players, spec.factor
    regime = pinning_regime(spec)
    if regime == "empty":
        raise InfeasiblePinning(
            f"no pinning strategy exists for N={n}, r={r} (r > N/(N-2) = {n / (n - 2):.6g})",
            f"r <= N/(N-2)",
        )
    if regime in ("low_r", "critical_r"):
        return float(n - 1), r * (n - 1)
    return r * (n - 2 + 1 / n), (n - 1) + r * (1 - 1 / n)


def max_factor_for_pinning(n_players: int) -> float:
    """Largest r admitting a pinning strategy: N/(N-2), or N itself for N=2."""
    if n_players < 2:
        raise ValueError("n_players must be at least 2")
    if n_players == 2:
        return 2.0
    return n_players / (n_players - 2)


def max_players_for_pinning(factor: float) -> int:
    """Largest group size N with factor <= N/(N-2), i.e. floor(2r/(r-1))."""
    if factor <= 1:
        raise DegenerateFactor(f"factor must exceed 1, got {factor}")
    return int(math.floor(2 * factor / (factor - 1) + 1e-9))
