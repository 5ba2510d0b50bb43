"""Gravity-balanced levitation of spheres over a slab in a fluid.

Balances the fluctuation force on a sphere against its buoyant weight
to find suspension heights, pairs radii of two different materials so
both float at a common height, and assembles the two-sphere bound
design from the paired radii. Slab-sphere and sphere-sphere pieces are
treated independently (the additive approximation); every design
record carries an explicit marker to that effect.

Sign conventions: the scattering force is positive when attractive,
which for a sphere above a slab points downward. Net vertical force
here is positive upward, so a stable height has negative net-force
slope (push the sphere up and the net force pulls it back down).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .constants import G_STANDARD
from .equilibria import MERGE_TOL, EquilibriumPoint, find_equilibria
from .materials import MaterialDb
from .numerics import ConvergenceError
from .planar import LayerStack
from .scattering import (
    AccuracyError,
    PlateSphereGeometry,
    SphereBody,
    SphereSphereGeometry,
    WaveBasis,
    _wiscombe_floor,
    casimir_force,
)

__all__ = [
    "ConfigurationError",
    "PairingRangeError",
    "SuspendedSphere",
    "SuspensionResult",
    "HeightCurve",
    "DiclusterDesign",
    "net_vertical_force",
    "solve_heights",
    "height_curve",
    "pair_radii",
    "design_dicluster",
]


class ConfigurationError(Exception):
    """A suspension input is unusable (most often a missing density)."""


class PairingRangeError(ValueError):
    """Requested common height is outside an achievable height range."""


@dataclass(frozen=True)
class SuspendedSphere:
    """A sphere floating in a fluid above a layered slab.

    ``g`` is the gravitational acceleration; ``buoyancy`` subtracts the
    displaced-fluid weight from the sphere weight (the default). With
    it off the bare sphere mass is used.
    """

    sphere: SphereBody
    slab: LayerStack
    fluid: str = "ethanol"
    g: float = G_STANDARD
    buoyancy: bool = True


@dataclass(frozen=True)
class SuspensionResult:
    """Suspension heights of one sphere, or the finding that none exist.

    ``stable_height`` is the surface-surface gap of the restoring
    equilibrium, ``center_height`` adds the sphere radius, and
    ``unstable_height`` is the lower tipping point below which the
    sphere falls onto the slab (present in configurations whose force
    turns attractive up close). ``stiffness`` is the net-force slope
    dF/dh at the stable height, negative when restoring. A sphere that
    cannot float anywhere in the scanned window comes back with
    ``suspendable`` False and the heights None; that is a result, not
    an error.
    """

    suspendable: bool
    stable_height: float | None
    center_height: float | None
    unstable_height: float | None
    stiffness: float | None


@dataclass(frozen=True)
class HeightCurve:
    """Suspension heights across a radius grid for one sphere material.

    Entries are NaN where the quantity does not exist at that radius
    (no stable height, or no unstable companion).
    """

    radii: tuple[float, ...]
    stable: tuple[float, ...]
    center: tuple[float, ...]
    unstable: tuple[float, ...]

    def to_csv(self) -> str:
        """Table with columns radius, h_stable, L_center, h_unstable."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["radius", "h_stable", "L_center", "h_unstable"])
        for r, h, lc, hu in zip(self.radii, self.stable, self.center,
                                self.unstable):
            writer.writerow([
                f"{r:.9e}",
                "" if math.isnan(h) else f"{h:.9e}",
                "" if math.isnan(lc) else f"{lc:.9e}",
                "" if math.isnan(hu) else f"{hu:.9e}",
            ])
        return buf.getvalue()


@dataclass(frozen=True)
class DiclusterDesign:
    """Two spheres bound at a mutual gap while floating at one height.

    ``gap`` is the stable surface-surface separation between the
    spheres, None when ``feasible`` is False. ``additive_approx``
    is always True: the slab-sphere and sphere-sphere problems were
    solved independently, so the record is a design starting point,
    not an exact three-body solution.
    """

    radius_a: float
    radius_b: float
    material_a: str
    material_b: str
    gap: float | None
    feasible: bool
    common_height: float | None = None
    mode: str | None = None
    additive_approx: bool = True


def _density(db: MaterialDb, name: str) -> float:
    rho = db.get(name).mass_density
    if rho is None:
        raise ConfigurationError(
            f"material '{name}' has no mass density; suspension needs one"
        )
    return rho


def sphere_weight(cfg: SuspendedSphere, db: MaterialDb | None = None) -> float:
    """Weight of the sphere in the fluid, in N, positive downward.

    Buoyancy (when enabled) enters through the density difference, so
    a sphere lighter than the fluid has negative weight and rises.
    """
    db = db or MaterialDb.builtin()
    rho = _density(db, cfg.sphere.material)
    if cfg.buoyancy:
        rho -= _density(db, cfg.fluid)
    volume = (4.0 / 3.0) * math.pi * cfg.sphere.radius**3
    return rho * volume * cfg.g


def _auto_basis(radius: float, h_lo: float) -> WaveBasis:
    """Multipole order adequate down to the smallest scanned height.

    The hottest frequency still contributing at gap h has size
    parameter of order 4 R / h; the engine's own adequacy guard
    backstops this estimate.
    """
    x_est = 4.0 * radius / h_lo
    return WaveBasis(max(6, math.ceil(_wiscombe_floor(x_est)) + 2))


def net_vertical_force(cfg: SuspendedSphere, h: float,
                       basis: WaveBasis | None = None,
                       db: MaterialDb | None = None) -> float:
    """Net upward force on the sphere at surface-surface height h, in N.

    The fluctuation force (positive attractive, pulling down) and the
    fluid weight both enter with a minus sign:
    F_net = -F_casimir(h) - weight. Levitation needs the fluctuation
    force repulsive with magnitude equal to the weight.
    """
    if h <= 0.0:
        raise ValueError("height must be positive")
    db = db or MaterialDb.builtin()
    weight = sphere_weight(cfg, db)
    basis = basis or _auto_basis(cfg.sphere.radius, h)
    geom = PlateSphereGeometry(cfg.slab, cfg.sphere, cfg.fluid, h)
    return -casimir_force(geom, basis, db=db) - weight


def _settle_points(force_for_basis, d_range, grid_points, basis,
                   merge_tol) -> tuple[list[EquilibriumPoint], WaveBasis]:
    """find_equilibria with the basis enlarged on adequacy failures."""
    attempts = 3
    for k in range(attempts):
        try:
            points = find_equilibria(force_for_basis(basis), d_range,
                                     grid_points, merge_tol=merge_tol)
            return points, basis
        except AccuracyError as err:
            if (k == attempts - 1 or err.advised_lmax is None
                    or err.advised_lmax <= basis.lmax):
                raise
            basis = WaveBasis(err.advised_lmax + 2)
    raise AssertionError("unreachable")


def solve_heights(cfg: SuspendedSphere, h_range: tuple[float, float],
                  *, grid_points: int = 40,
                  basis: WaveBasis | None = None,
                  db: MaterialDb | None = None,
                  merge_tol: float = MERGE_TOL) -> SuspensionResult:
    """Find the suspension heights of a sphere inside a height window.

    Scans the net vertical force on a log grid, refines its zeros, and
    classifies them. The reported stable height is the highest stable
    zero (the one a sphere lowered from far away settles into); the
    unstable height is the highest unstable zero below it. Without any
    stable zero the result is flagged not suspendable.
    """
    db = db or MaterialDb.builtin()
    weight = sphere_weight(cfg, db)
    base = basis or _auto_basis(cfg.sphere.radius, h_range[0])

    def force_for_basis(b: WaveBasis):
        def pulled_down(h: float) -> float:
            geom = PlateSphereGeometry(cfg.slab, cfg.sphere, cfg.fluid, h)
            return casimir_force(geom, b, db=db) + weight

        return pulled_down

    points, used = _settle_points(force_for_basis, h_range, grid_points,
                                  base, merge_tol)

    stables = [p for p in points if p.kind == "stable"]
    if not stables:
        unstables = [p for p in points if p.kind == "unstable"]
        h_u = unstables[-1].separation if unstables else None
        return SuspensionResult(False, None, None, h_u, None)

    h_c = stables[-1].separation
    below = [p.separation for p in points
             if p.kind == "unstable" and p.separation < h_c]
    h_u = below[-1] if below else None

    net = force_for_basis(used)
    step = 1e-2 * h_c
    stiffness = -(net(h_c + step) - net(h_c - step)) / (2.0 * step)
    return SuspensionResult(True, h_c, h_c + cfg.sphere.radius, h_u,
                            stiffness)


def height_curve(material: str, slab: LayerStack,
                 radii: Sequence[float],
                 h_range: tuple[float, float],
                 fluid: str = "ethanol",
                 *, g: float = G_STANDARD, buoyancy: bool = True,
                 grid_points: int = 24, jobs: int = 1,
                 db: MaterialDb | None = None) -> HeightCurve:
    """Suspension heights of one material across a radius grid.

    Radii run independently (optionally on a thread pool); a radius
    with no stable height contributes NaN rows rather than failing the
    curve.
    """
    rads = tuple(float(r) for r in radii)
    if not rads:
        raise ValueError("radii must be non-empty")
    if any(b <= a for a, b in zip(rads, rads[1:])):
        raise ValueError("radii must be strictly increasing")
    db = db or MaterialDb.builtin()

    def solve(radius: float):
        cfg = SuspendedSphere(SphereBody(radius, material), slab, fluid,
                              g=g, buoyancy=buoyancy)
        res = solve_heights(cfg, h_range, grid_points=grid_points, db=db)
        nan = float("nan")
        return (
            res.stable_height if res.suspendable else nan,
            res.center_height if res.suspendable else nan,
            res.unstable_height if res.unstable_height is not None else nan,
        )

    if int(jobs) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            rows = list(pool.map(solve, rads))
    else:
        rows = [solve(r) for r in rads]

    return HeightCurve(
        radii=rads,
        stable=tuple(r[0] for r in rows),
        center=tuple(r[1] for r in rows),
        unstable=tuple(r[2] for r in rows),
    )


def _achievable(curve: HeightCurve, mode: str) -> tuple[np.ndarray, np.ndarray]:
    values = np.array(curve.stable if mode == "match_h" else curve.center)
    radii = np.array(curve.radii)
    ok = np.isfinite(values)
    return radii[ok], values[ok]


def _invert_curve(radii: np.ndarray, values: np.ndarray,
                  target: float) -> tuple[float, PchipInterpolator]:
    spline = PchipInterpolator(radii, values)
    dense = np.linspace(radii[0], radii[-1], 40 * len(radii))
    sampled = spline(dense) - target
    hits = np.flatnonzero(np.sign(sampled[:-1]) != np.sign(sampled[1:]))
    if sampled[0] == 0.0:
        return float(dense[0]), spline
    if len(hits) == 0:
        # target equals an endpoint value within float wiggle
        idx = int(np.argmin(np.abs(sampled)))
        return float(dense[idx]), spline
    i = int(hits[0])
    lo, hi = dense[i], dense[i + 1]
    flo, fhi = sampled[i], sampled[i + 1]
    # secant inside one dense cell is plenty for a starting candidate
    return float(lo - flo * (hi - lo) / (fhi - flo)), spline


def pair_radii(material_a: str, material_b: str, slab: LayerStack,
               fluid: str = "ethanol", mode: str = "match_h",
               target: float = 0.0,
               *, radius_range: tuple[float, float] = (2.0e-8, 4.0e-7),
               grid: int = 40,
               h_range: tuple[float, float] = (3.0e-8, 3.0e-6),
               grid_points: int = 24, jobs: int = 1,
               height_tol: float = 5.0e-10, g: float = G_STANDARD,
               buoyancy: bool = True,
               db: MaterialDb | None = None) -> tuple[float, float]:
    """Radii at which two sphere materials float at the same height.

    Builds each material's height-versus-radius curve on a radius
    grid, interpolates it with a monotone piecewise cubic, inverts the
    interpolant at the target, and polishes each candidate radius with
    direct solves until the achieved height is within ``height_tol``
    of the target. ``mode`` selects the matched quantity: "match_h"
    for the surface gap, "match_L" for the center height.
    """
    if mode not in ("match_h", "match_L"):
        raise ValueError(f"unknown mode '{mode}'")
    if target <= 0.0:
        raise ValueError("target height must be positive")
    db = db or MaterialDb.builtin()
    rads = np.geomspace(radius_range[0], radius_range[1], int(grid))

    curves: dict[str, HeightCurve] = {}
    for name in dict.fromkeys((material_a, material_b)):
        curves[name] = height_curve(name, slab, rads, h_range, fluid,
                                    g=g, buoyancy=buoyancy,
                                    grid_points=grid_points, jobs=jobs,
                                    db=db)

    spans = {}
    for name, curve in curves.items():
        radii, values = _achievable(curve, mode)
        if len(radii) < 2:
            raise PairingRangeError(
                f"material '{name}' is suspendable at fewer than two grid "
                "radii; no height range to match against"
            )
        spans[name] = (radii, values, float(values.min()),
                       float(values.max()))

    lo = max(s[2] for s in spans.values())
    hi = min(s[3] for s in spans.values())
    for name, (_, _, vmin, vmax) in spans.items():
        if not vmin <= target <= vmax:
            overlap = (f"[{lo:.4g}, {hi:.4g}] m" if lo <= hi
                       else "empty")
            raise PairingRangeError(
                f"target {target:.4g} m is outside the achievable "
                f"{'gap' if mode == 'match_h' else 'center'} range "
                f"[{vmin:.4g}, {vmax:.4g}] m of material '{name}'; "
                f"overlap of both materials: {overlap}"
            )

    def polish(name: str) -> float:
        radii, values, _, _ = spans[name]
        candidate, spline = _invert_curve(radii, values, target)
        slope_fn = spline.derivative()
        span = radii[-1] - radii[0]
        radius = float(np.clip(candidate, radii[0], radii[-1]))
        for _ in range(6):
            cfg = SuspendedSphere(SphereBody(radius, name), slab, fluid,
                                  g=g, buoyancy=buoyancy)
            res = solve_heights(cfg, h_range, grid_points=grid_points,
                                db=db)
            if not res.suspendable:
                raise ConvergenceError(
                    f"radius polish left the suspendable region of "
                    f"'{name}' at R = {radius:.4g} m"
                )
            value = (res.stable_height if mode == "match_h"
                     else res.center_height)
            miss = value - target
            if abs(miss) <= height_tol:
                return radius
            slope = float(slope_fn(radius))
            if abs(slope) < 1e-6:
                slope = math.copysign(1e-6, slope if slope != 0.0 else 1.0)
            step = float(np.clip(-miss / slope, -0.1 * span, 0.1 * span))
            radius = float(np.clip(radius + step, radii[0], radii[-1]))
        raise ConvergenceError(
            f"pairing for '{name}' did not reach the target height within "
            f"{height_tol:.2g} m after 6 direct solves"
        )

    r_a = polish(material_a)
    r_b = r_a if material_b == material_a else polish(material_b)
    return r_a, r_b


def design_dicluster(radius_a: float, radius_b: float,
                     fluid: str = "ethanol",
                     *, material_a: str = "si", material_b: str = "teflon",
                     common_height: float | None = None,
                     mode: str | None = None,
                     d_range: tuple[float, float] = (4.0e-8, 4.0e-7),
                     grid_points: int = 24,
                     basis: WaveBasis | None = None,
                     db: MaterialDb | None = None,
                     merge_tol: float = MERGE_TOL) -> DiclusterDesign:
    """Stable mutual gap of a paired two-sphere design.

    Solves the sphere-sphere problem alone for the given radii (the
    additive approximation; the slab's presence would shift the true
    gap) and records the stable surface-surface separation the pair
    settles into from large distance. No stable separation makes the
    design infeasible, which is a result rather than an error.
    """
    db = db or MaterialDb.builtin()
    body_a = SphereBody(radius_a, material_a)
    body_b = SphereBody(radius_b, material_b)
    base = basis or _auto_basis(max(radius_a, radius_b), d_range[0])

    def force_for_basis(b: WaveBasis):
        def force(d: float) -> float:
            geom = SphereSphereGeometry(body_a, body_b, fluid, d)
            return casimir_force(geom, b, db=db)

        return force

    points, _ = _settle_points(force_for_basis, d_range, grid_points,
                               base, merge_tol)
    stables = [p for p in points if p.kind == "stable"]
    gap = stables[-1].separation if stables else None
    return DiclusterDesign(
        radius_a=radius_a,
        radius_b=radius_b,
        material_a=material_a,
        material_b=material_b,
        gap=gap,
        feasible=gap is not None,
        common_height=common_height,
        mode=mode,
    )
