"""Quadrature over semi-infinite domains and bracketed root finding.

The frequency and transverse-wavevector integrals that appear in
fluctuation-force calculations run over (0, inf) with integrands that
decay exponentially past a geometry-dependent scale. A Gauss-Legendre
rule composed with the rational map x = s*t/(1-t) handles them all; the
scale parameter s is chosen per integral so nodes cluster where the
integrand peaks. The same module provides the sign-scan plus Brent
bracketing iteration that every equilibrium search downstream uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QuadratureError(Exception):
    """Integrand evaluated to a non-finite value at a quadrature node."""


class BracketError(Exception):
    """Root bracket does not straddle a sign change."""


class ConvergenceError(Exception):
    """Iteration budget exhausted before reaching tolerance."""


@dataclass(frozen=True)
class SemiInfiniteRule:
    """Nodes and weights for integrating f over (0, inf).

    Built from an n-point Gauss-Legendre rule on t in (0, 1) mapped
    through x = scale * t / (1 - t). Endpoints are never sampled, so
    integrands that diverge at 0 (Drude permittivities) or are defined
    only for x > 0 are safe.
    """

    n: int
    scale: float
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, n: int = 40, scale: float = 1.0) -> "SemiInfiniteRule":
        if n < 2:
            raise ValueError("rule needs at least 2 nodes")
        if scale <= 0.0:
            raise ValueError("scale must be positive")
        y, wy = np.polynomial.legendre.leggauss(n)
        t = 0.5 * (y + 1.0)
        wt = 0.5 * wy
        nodes = scale * t / (1.0 - t)
        weights = scale * wt / (1.0 - t) ** 2
        nodes.setflags(write=False)
        weights.setflags(write=False)
        return cls(n=n, scale=scale, nodes=nodes, weights=weights)

    def refined(self, factor: int = 2) -> "SemiInfiniteRule":
        """Same mapping with `factor` times the node count (convergence checks)."""
        return SemiInfiniteRule.build(n=self.n * factor, scale=self.scale)


def integrate_semi_infinite(f, rule: SemiInfiniteRule) -> float:
    """Sum w_i * f(x_i) under the rational transform.

    `f` may be vectorized over a node array or accept scalars; scalar
    callables are detected by a failed array call. Non-finite values
    raise QuadratureError naming the offending node.
    """
    try:
        values = np.asarray(f(rule.nodes), dtype=float)
        if values.shape != rule.nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        values = np.array([float(f(x)) for x in rule.nodes])
    if not np.all(np.isfinite(values)):
        i = int(np.flatnonzero(~np.isfinite(values))[0])
        raise QuadratureError(
            f"integrand not finite at node {i} (x = {rule.nodes[i]:.6g})"
        )
    return float(np.dot(rule.weights, values))


@dataclass(frozen=True)
class RootResult:
    """Outcome of a bracketed root search."""

    root: float
    residual: float
    slope_sign: int
    iterations: int


def _slope_sign(f, x: float) -> int:
    h = 1e-6 * max(abs(x), 1e-12)
    df = f(x + h) - f(x - h)
    if df > 0.0:
        return 1
    if df < 0.0:
        return -1
    return 0


def find_root_bracketed(f, a: float, b: float, tol: float = 1e-12,
                        max_iter: int = 200) -> RootResult:
    """Brent-style bracketing iteration for a root of f in [a, b].

    Combines inverse quadratic interpolation, secant steps and bisection
    fallback; converges to |x - root| <= tol * |x| (plus a small absolute
    floor) for continuous f with f(a) * f(b) < 0.
    """
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return RootResult(a, 0.0, _slope_sign(f, a), 0)
    if fb == 0.0:
        return RootResult(b, 0.0, _slope_sign(f, b), 0)
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a:.6g}, {b:.6g}]")

    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    d = e = b - a

    for it in range(1, max_iter + 1):
        if np.sign(fb) != np.sign(fc):
            # keep the bracket [b, c]
            pass
        else:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb

        xtol = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * tol * max(abs(b), 1e-300)
        m = 0.5 * (c - b)
        if abs(m) <= xtol or fb == 0.0:
            return RootResult(b, abs(fb), _slope_sign(f, b), it)

        if abs(e) >= xtol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                # secant
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                # inverse quadratic
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * m * q - abs(xtol * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = m
                e = m
        else:
            d = m
            e = m

        a, fa = b, fb
        b = b + (d if abs(d) > xtol else xtol * np.sign(m))
        fb = f(b)

    raise ConvergenceError(f"no convergence after {max_iter} iterations")


def scan_sign_changes(f, grid) -> list[tuple[float, float]]:
    """Brackets [x_i, x_{i+1}] where f changes sign along an increasing grid.

    Exact zeros attach to the bracket on their left (the first grid point
    is the only exception, having no left neighbor).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be 1-D with at least 2 points")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing")

    values = np.array([float(f(x)) for x in grid])
    brackets = []
    for i in range(len(grid) - 1):
        lo, hi = values[i], values[i + 1]
        if hi == 0.0:
            # zero attaches to this (left) bracket
            if np.sign(lo) != 0.0:
                brackets.append((float(grid[i]), float(grid[i + 1])))
        elif lo == 0.0:
            if i == 0 and np.sign(hi) != 0.0:
                brackets.append((float(grid[i]), float(grid[i + 1])))
            # otherwise already attached to the bracket ending at grid[i]
        elif np.sign(lo) != np.sign(hi):
            brackets.append((float(grid[i]), float(grid[i + 1])))
    return brackets
