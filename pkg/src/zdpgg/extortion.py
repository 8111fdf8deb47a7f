"""Extortion strategies: own surplus = chi * opponents' total surplus.

Surplus is measured against the free-rider baseline 1.  The strategy is
fixed by the extortion ratio ``chi`` and a positive scale ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFactor, InfeasibleExtortion
from .game import PROB_TOL, GameSpec, ReducedStrategy, expand_values, rational, snap_probabilities

CHI_TOL = 1e-12


@dataclass(frozen=True)
class ChiBounds:
    lower: float
    upper: float = math.inf

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.upper)

    def __contains__(self, chi) -> bool:
        return self.lower - CHI_TOL <= chi <= self.upper + CHI_TOL


@dataclass(frozen=True)
class ExtortionParams:
    chi: float
    phi: float

    def effective_ratio(self, n_players: int) -> float:
        """Ratio against the *average* opponent surplus, chi * (N-1)."""
        return self.chi * (n_players - 1)


def _upper_bounded(spec: GameSpec) -> bool:
    n, r = spec.n_players, spec.factor
    return r > spec.critical_factor + 1e-12 * n


def chi_bounds(spec: GameSpec) -> ChiBounds:
    """Admissible extortion ratios.

    The lower bound 1/(N-1) always applies; for r > N/(N-1) the ratio is
    also capped at r / (r(N-1) - N).
    """
    n = spec.n_players
    lower = 1.0 / (n - 1)
    if _upper_bounded(spec):
        r = rational(spec.factor)
        return ChiBounds(lower, float(r / (r * (n - 1) - n)))
    return ChiBounds(lower)


def _check_chi(spec: GameSpec, chi: float) -> float:
    chi = float(chi)
    bounds = chi_bounds(spec)
    n, r = spec.n_players, spec.factor
    if chi < bounds.lower - CHI_TOL:
        raise InfeasibleExtortion(
            f"chi={chi!r} is below the lower bound 1/(N-1) = {bounds.lower:.6g}: "
            f"pc[{n - 1}] would exceed 1",
            f"chi >= 1/(N-1) = {bounds.lower:.6g}",
        )
    if chi > bounds.upper + CHI_TOL:
        raise InfeasibleExtortion(
            f"chi={chi!r} exceeds the upper bound r/(r(N-1)-N) = {bounds.upper:.6g}: "
            f"pd[n] would decrease in n and pd[{n - 1}] turn negative",
            f"chi <= r/(r(N-1)-N) = {bounds.upper:.6g}",
        )
    return min(max(chi, bounds.lower), bounds.upper)


def phi_max(spec: GameSpec, chi: float) -> float:
    """Largest admissible scale N / (N - r + chi*r*(N-1)) for ratio ``chi``."""
    chi = _check_chi(spec, chi)
    n, r = spec.n_players, spec.factor
    return n / (n - r + chi * r * (n - 1))


def _entries(spec: GameSpec, chi: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    n = spec.n_players
    r, chi, phi = rational(spec.factor), rational(chi), rational(phi)
    pc, pd = [], []
    for k in range(n):
        slope = r * k / n - chi * (r * k * (n - 1) - k * n) / n
        offset = (r - n) / n - chi * r * (n - 1) / n
        pc.append(float(1 + phi * slope + phi * offset))
        pd.append(float(phi * slope))
    return np.array(pc), np.array(pd)


def extortion_strategy(spec: GameSpec, chi: float, phi: float | None = None) -> ReducedStrategy:
    """Reduced chi-extortion strategy.

    Parameters
    ----------
    spec : GameSpec
    chi : float
        Extortion ratio, within :func:`chi_bounds`.
    phi : float, optional
        Scale in (0, phi_max]; defaults to phi_max / 2.

    Raises
    ------
    InfeasibleExtortion
        Naming the violated inequality.
    """
    chi = _check_chi(spec, chi)
    pmax = phi_max(spec, chi)
    if phi is None:
        phi = pmax / 2
    phi = float(phi)
    if not phi > 0:
        raise InfeasibleExtortion(
            f"phi={phi!r} must be positive: with phi <= 0 some pc[n] exceeds 1 "
            "or the strategy is the singular repeat-own-move strategy",
            "phi > 0",
        )
    if phi > pmax * (1 + CHI_TOL):
        raise InfeasibleExtortion(
            f"phi={phi!r} exceeds phi_max = N/(N - r + chi*r*(N-1)) = {pmax:.6g}: pc[0] < 0",
            f"phi <= {pmax:.6g}",
        )
    pc, pd = _entries(spec, chi, phi)
    lo = min(pc.min(), pd.min())
    hi = max(pc.max(), pd.max())
    if lo < -PROB_TOL or hi > 1 + PROB_TOL:
        raise InfeasibleExtortion(
            f"(chi, phi) = ({chi!r}, {phi!r}) gives probabilities outside [0, 1]",
            "0 <= pc[n], pd[n] <= 1",
        )
    pd[0] = 0.0
    return ReducedStrategy(snap_probabilities(pc), snap_probabilities(pd))


def fit_phi(spec: GameSpec, chi: float, full_strategy) -> float:
    """Least-squares scale reproducing a given full strategy vector.

    Every entry is affine in ``phi`` once ``chi`` is fixed, so the fit is a
    one-dimensional linear regression.
    """
    target = np.asarray(full_strategy, dtype=float)
    n = spec.n_players
    pc0, pd0 = _entries(spec, chi, 0.0)
    pc1, pd1 = _entries(spec, chi, 1.0)
    base = expand_values(n, pc0, pd0)
    incr = expand_values(n, pc1 - pc0, pd1 - pd0)
    return float(incr @ (target - base) / (incr @ incr))


def effective_ratio_limit(factor: float) -> float:
    """Large-N limit of the largest effective ratio chi_max * (N-1): r/(r-1)."""
    if factor <= 1:
        raise DegenerateFactor(f"factor must exceed 1, got {factor}")
    return factor / (factor - 1.0)


def effective_ratio_bound(n_players: int, factor: float) -> float:
    """chi_max * (N-1) = r(N-1) / (r(N-1) - N); infinite when r <= N/(N-1)."""
    if factor <= 1:
        raise DegenerateFactor(f"factor must exceed 1, got {factor}")
    r = rational(factor)
    denom = r * (n_players - 1) - n_players
    if denom <= 1e-12 * n_players:
        return math.inf
    return float(r * (n_players - 1) / denom)
