import math

import numpy as np
import pytest

from casimir.numerics import (
    BracketError,
    QuadratureError,
    SemiInfiniteRule,
    find_root_bracketed,
    integrate_semi_infinite,
    scan_sign_changes,
)


def test_rule_nodes_positive_increasing():
    rule = SemiInfiniteRule.build(n=40, scale=3.0)
    assert rule.nodes[0] > 0.0
    assert np.all(np.diff(rule.nodes) > 0.0)
    assert np.all(rule.weights > 0.0)


def test_exponential_integral():
    rule = SemiInfiniteRule.build(n=40, scale=1.0)
    val = integrate_semi_infinite(lambda x: np.exp(-x), rule)
    assert abs(val - 1.0) < 1e-8


def test_gamma_four():
    rule = SemiInfiniteRule.build(n=40, scale=3.0)
    val = integrate_semi_infinite(lambda x: x**3 * np.exp(-x), rule)
    assert abs(val - 6.0) < 1e-6


def test_bose_integral():
    rule = SemiInfiniteRule.build(n=40, scale=1.0)
    val = integrate_semi_infinite(
        lambda x: x * np.exp(-x) / (1.0 - np.exp(-x)), rule
    )
    assert abs(val - math.pi**2 / 6.0) < 1e-6


def test_scalar_callable_accepted():
    rule = SemiInfiniteRule.build(n=20, scale=1.0)
    val = integrate_semi_infinite(lambda x: math.exp(-x), rule)
    assert abs(val - 1.0) < 1e-6


def test_nonfinite_integrand_reports_node():
    rule = SemiInfiniteRule.build(n=10, scale=1.0)
    with pytest.raises(QuadratureError, match="node"):
        integrate_semi_infinite(lambda x: np.where(x > 1.0, np.inf, 1.0), rule)


def test_doubling_convergence_on_lifshitz_like_integrand():
    # exponential kernel with a geometric-series denominator, the shape the
    # pressure integrals produce
    def f(x):
        r = 0.8 * np.exp(-x)
        return x**2 * r / (1.0 - r)

    rule = SemiInfiniteRule.build(n=40, scale=2.0)
    coarse = integrate_semi_infinite(f, rule)
    fine = integrate_semi_infinite(f, rule.refined())
    assert abs(fine - coarse) / abs(fine) < 1e-6


def test_root_cos():
    res = find_root_bracketed(math.cos, 1.0, 2.0, tol=1e-12)
    assert abs(res.root - math.pi / 2.0) < 1e-10
    assert res.slope_sign == -1
    assert res.residual < 1e-10
    assert 1.0 <= res.root <= 2.0


def test_root_sqrt2():
    res = find_root_bracketed(lambda x: x * x - 2.0, 1.0, 2.0)
    assert abs(res.root - math.sqrt(2.0)) < 1e-10
    assert res.slope_sign == 1


def test_root_odd_multiplicity():
    res = find_root_bracketed(lambda x: (x - 1.0) ** 3, 0.0, 2.0, tol=1e-10)
    assert abs(res.root - 1.0) < 1e-6


def test_root_requires_sign_change():
    with pytest.raises(BracketError):
        find_root_bracketed(lambda x: 1.0 + x * x, 0.0, 1.0)


def test_root_invariant_under_positive_rescaling():
    f = lambda x: math.tanh(x - 0.7354)
    r1 = find_root_bracketed(f, 0.0, 2.0, tol=1e-13)
    r2 = find_root_bracketed(lambda x: 1e7 * f(x), 0.0, 2.0, tol=1e-13)
    assert abs(r1.root - r2.root) <= 1e-9 * abs(r1.root)


def test_scan_sin():
    brackets = scan_sign_changes(math.sin, [1.0, 2.0, 3.0, 4.0])
    assert brackets == [(3.0, 4.0)]


def test_scan_constant():
    assert scan_sign_changes(lambda x: 2.5, np.linspace(0, 1, 10)) == []


def test_scan_cubic_two_roots_in_range():
    # roots at 1 and 2 inside the grid span, third root at 4 outside
    f = lambda x: (x - 1.0) * (x - 2.0) * (x - 4.0)
    grid = np.linspace(0.5, 3.0, 100)
    brackets = scan_sign_changes(f, grid)
    assert len(brackets) == 2
    assert brackets[0][0] < 1.0 < brackets[0][1]
    assert brackets[1][0] < 2.0 < brackets[1][1]


def test_scan_zero_attaches_left():
    grid = [0.0, 1.0, 2.0, 3.0]
    f = lambda x: x - 2.0  # exact zero on a grid point
    brackets = scan_sign_changes(f, grid)
    assert brackets == [(1.0, 2.0)]


def test_scan_rejects_bad_grid():
    with pytest.raises(ValueError):
        scan_sign_changes(math.sin, [1.0, 1.0, 2.0])


def test_random_roots_recovered():
    rng = np.random.default_rng(20260816)
    for _ in range(25):
        r = rng.uniform(-5.0, 5.0)
        f = lambda x: (x - r) * (1.0 + 0.3 * math.cos(x))
        res = find_root_bracketed(f, r - 1.7, r + 2.3, tol=1e-12)
        assert abs(res.root - r) < 1e-8 * max(1.0, abs(r))
