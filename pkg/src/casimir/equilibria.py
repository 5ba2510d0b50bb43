"""Equilibrium analysis for force-versus-separation curves.

Locates zero-force separations, classifies their stability, sweeps a
family of curves over a control parameter, and brackets fold points
where a stable/unstable pair appears or disappears.

Force callables follow the package sign convention: positive means
attractive. A stable equilibrium is therefore a zero crossed from
below (repulsive at smaller gaps, attractive at larger ones), which
is the same thing as a positive force slope at the crossing.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import (
    BracketError,
    ConvergenceError,
    QuadratureError,
    find_root_bracketed,
    scan_sign_changes,
)
from .scattering import AccuracyError, EvaluationError

__all__ = [
    "EquilibriumPoint",
    "ParameterScan",
    "FoldPoint",
    "find_equilibria",
    "scan_parameter",
    "find_fold",
]

DEFAULT_RANGE = (1.0e-8, 5.0e-7)
"""Separation window scanned when none is given, in meters."""

MERGE_TOL = 1.0e-9
"""Roots closer than this merge into a single near-fold point."""

_SLOPE_STEP = 1.0e-2
"""Relative half-step for the central-difference stability probe."""

_SCAN_ERRORS = (
    BracketError,
    ConvergenceError,
    QuadratureError,
    AccuracyError,
    EvaluationError,
    FloatingPointError,
    OverflowError,
    ZeroDivisionError,
)


@dataclass(frozen=True)
class EquilibriumPoint:
    """A zero-force separation together with its stability.

    Attributes
    ----------
    separation : float
        Gap at which the force vanishes, in meters.
    kind : str
        ``"stable"`` when the force slope at the root is positive,
        ``"unstable"`` when it is negative.
    slope_sign : int
        Sign of the central-difference slope used for the call,
        ``0`` only in the degenerate tangent case.
    residual : float
        Magnitude of the force left at the reported separation.
    near_fold : bool
        True when this point stands in for two roots closer than the
        merge tolerance, or when the slope probe was degenerate. Such
        a point represents a coalescing stable/unstable pair.
    """

    separation: float
    kind: str
    slope_sign: int
    residual: float
    near_fold: bool = False


@dataclass(frozen=True)
class ParameterScan:
    """Equilibria of a force family at each value of a control parameter.

    ``results[i]`` holds the sorted equilibria found at ``values[i]``,
    or None when that value failed; ``errors[i]`` then carries the
    failure text. A failed value never aborts the rest of the scan.
    """

    parameter: str
    values: tuple[float, ...]
    results: tuple[tuple[EquilibriumPoint, ...] | None, ...]
    errors: tuple[str | None, ...]

    def counts(self) -> tuple[int | None, ...]:
        """Number of equilibria per value, None where the value failed."""
        return tuple(None if r is None else len(r) for r in self.results)

    def to_csv(self) -> str:
        """Render the scan as CSV with one row per parameter value.

        Columns are ``parameter, d_stable, d_unstable, flags``. Floats
        use a fixed exponent format so a rerun is byte-identical.
        Multiple roots of one kind join with ';' inside the cell.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["parameter", "d_stable", "d_unstable", "flags"])
        for value, points, error in zip(self.values, self.results, self.errors):
            if points is None:
                writer.writerow([f"{value:.9e}", "", "", f"error: {error}"])
                continue
            stable = ";".join(
                f"{p.separation:.9e}" for p in points if p.kind == "stable"
            )
            unstable = ";".join(
                f"{p.separation:.9e}" for p in points if p.kind == "unstable"
            )
            flags = "near_fold" if any(p.near_fold for p in points) else ""
            writer.writerow([f"{value:.9e}", stable, unstable, flags])
        return buf.getvalue()


@dataclass(frozen=True)
class FoldPoint:
    """Parameter value where a stable/unstable pair coalesces.

    ``separation`` is the gap at which the pair meets, taken from the
    last parameter value on the two-root side of the bisection.
    """

    parameter_value: float
    separation: float


def _classified_point(
    force: Callable[[float], float],
    separation: float,
    residual: float,
    near_fold: bool,
) -> EquilibriumPoint:
    h = _SLOPE_STEP * separation
    slope = force(separation + h) - force(separation - h)
    if slope > 0.0:
        kind, sign = "stable", 1
    elif slope < 0.0:
        kind, sign = "unstable", -1
    else:
        kind, sign, near_fold = "unstable", 0, True
    return EquilibriumPoint(separation, kind, sign, residual, near_fold)


def find_equilibria(
    force: Callable[[float], float],
    d_range: tuple[float, float] = DEFAULT_RANGE,
    grid_points: int = 60,
    *,
    merge_tol: float = MERGE_TOL,
) -> list[EquilibriumPoint]:
    """Locate and classify every zero of a force curve in a window.

    The window is sampled on a log-spaced grid, each sign change is
    refined with the bracketed root solver, and each root is labeled
    stable or unstable from the sign of a central-difference slope
    with half-step 1e-2 of the separation. Roots closer together than
    ``merge_tol`` collapse into one point flagged ``near_fold``.

    Parameters
    ----------
    force : callable
        Maps separation in meters to force, positive attractive.
    d_range : pair of float
        Window (lo, hi) in meters, 0 < lo < hi.
    grid_points : int
        Number of grid nodes; zeros that fit between adjacent nodes
        without a sign change at either one go undetected.

    Returns
    -------
    list of EquilibriumPoint, sorted by separation.
    """
    lo, hi = float(d_range[0]), float(d_range[1])
    if not 0.0 < lo < hi:
        raise ValueError("d_range must satisfy 0 < lo < hi")
    if int(grid_points) < 2:
        raise ValueError("grid_points must be at least 2")
    grid = np.geomspace(lo, hi, int(grid_points))

    roots: list[tuple[float, float]] = []
    for a, b in scan_sign_changes(force, grid):
        try:
            result = find_root_bracketed(force, a, b)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"root refinement failed on bracket "
                f"({a:.6e}, {b:.6e}) m: {err}"
            ) from err
        roots.append((result.root, abs(result.residual)))
    roots.sort()

    points: list[EquilibriumPoint] = []
    i = 0
    while i < len(roots):
        j = i + 1
        while j < len(roots) and roots[j][0] - roots[j - 1][0] < merge_tol:
            j += 1
        if j == i + 1:
            d, res = roots[i]
            points.append(_classified_point(force, d, res, near_fold=False))
        else:
            d = sum(r[0] for r in roots[i:j]) / (j - i)
            points.append(
                _classified_point(force, d, abs(force(d)), near_fold=True)
            )
        i = j
    return points


def scan_parameter(
    family: Callable[[float], Callable[[float], float]],
    values: Sequence[float],
    d_range: tuple[float, float] = DEFAULT_RANGE,
    *,
    parameter: str = "parameter",
    grid_points: int = 60,
    jobs: int = 1,
    merge_tol: float = MERGE_TOL,
) -> ParameterScan:
    """Find equilibria at each value of a force-family parameter.

    ``family(value)`` must return the force curve for that parameter
    value. Numerical failures at one value are recorded as text and
    the scan moves on. With ``jobs`` above one the values run on a
    thread pool; the result order always matches the input order.
    """
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValueError("values must be non-empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("values must be strictly increasing")

    def solve(value: float):
        try:
            found = find_equilibria(
                family(value), d_range, grid_points, merge_tol=merge_tol
            )
        except _SCAN_ERRORS as err:
            return None, f"{type(err).__name__}: {err}"
        return tuple(found), None

    if int(jobs) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            outcomes = list(pool.map(solve, vals))
    else:
        outcomes = [solve(v) for v in vals]

    return ParameterScan(
        parameter=str(parameter),
        values=vals,
        results=tuple(r for r, _ in outcomes),
        errors=tuple(e for _, e in outcomes),
    )


def _effective_count(points: Sequence[EquilibriumPoint]) -> int:
    """Count equilibria with a merged near-fold pair counting as two."""
    return len(points) + sum(1 for p in points if p.near_fold)


def _coalescing_separation(points: Sequence[EquilibriumPoint]) -> float:
    """Gap at which the vanishing pair meets, from the two-root side."""
    for p in points:
        if p.near_fold:
            return p.separation
    if len(points) == 1:
        return points[0].separation
    best_gap = np.inf
    best_mid = points[0].separation
    for a, b in zip(points, points[1:]):
        gap = b.separation - a.separation
        if a.kind != b.kind and gap < best_gap:
            best_gap = gap
            best_mid = 0.5 * (a.separation + b.separation)
    if np.isinf(best_gap):
        gaps = [
            (b.separation - a.separation, 0.5 * (a.separation + b.separation))
            for a, b in zip(points, points[1:])
        ]
        best_mid = min(gaps)[1]
    return best_mid


def find_fold(
    family: Callable[[float], Callable[[float], float]],
    p_range: tuple[float, float],
    d_range: tuple[float, float] = DEFAULT_RANGE,
    *,
    grid_points: int = 60,
    ptol: float = 5.0e-10,
    merge_tol: float = MERGE_TOL,
) -> FoldPoint:
    """Bracket the parameter value where an equilibrium pair vanishes.

    The equilibrium count (a merged near-fold point counting as two)
    must differ by exactly two between the ends of ``p_range``; equal
    counts raise BracketError, as does a difference of one, which
    signals a root leaving the separation window through a boundary
    rather than a fold. Bisection then narrows the parameter interval
    to ``ptol``. The reported separation is the midpoint of the
    closest stable/unstable pair at the last parameter value where
    the pair still existed.
    """
    p_lo, p_hi = float(p_range[0]), float(p_range[1])
    if not p_lo < p_hi:
        raise ValueError("p_range must satisfy lo < hi")
    if not ptol > 0.0:
        raise ValueError("ptol must be positive")

    def solve(value: float) -> list[EquilibriumPoint]:
        return find_equilibria(
            family(value), d_range, grid_points, merge_tol=merge_tol
        )

    pts_lo, pts_hi = solve(p_lo), solve(p_hi)
    n_lo, n_hi = _effective_count(pts_lo), _effective_count(pts_hi)
    if n_lo == n_hi:
        raise BracketError(
            f"equilibrium count is {n_lo} at both ends of the parameter "
            f"bracket ({p_lo:.6e}, {p_hi:.6e}); a fold needs the counts "
            "to differ"
        )
    if abs(n_lo - n_hi) != 2:
        raise BracketError(
            f"equilibrium counts {n_lo} and {n_hi} at the bracket ends "
            "differ by a number other than two; that is a root crossing "
            "the separation window boundary, not a fold"
        )
    if n_lo > n_hi:
        p_many, p_few, pts_many = p_lo, p_hi, pts_lo
        n_many, n_few = n_lo, n_hi
    else:
        p_many, p_few, pts_many = p_hi, p_lo, pts_hi
        n_many, n_few = n_hi, n_lo

    while abs(p_many - p_few) > ptol:
        mid = 0.5 * (p_many + p_few)
        pts_mid = solve(mid)
        n_mid = _effective_count(pts_mid)
        if n_mid == n_many:
            p_many, pts_many = mid, pts_mid
        elif n_mid == n_few:
            p_few = mid
        else:
            raise ConvergenceError(
                f"equilibrium count {n_mid} at parameter {mid:.6e} matches "
                f"neither bracket end ({n_many} and {n_few}); the bracket "
                "may contain more than one fold"
            )

    return FoldPoint(
        parameter_value=0.5 * (p_many + p_few),
        separation=_coalescing_separation(pts_many),
    )
