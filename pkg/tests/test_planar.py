"""Reflection and pressure checks for the planar module.

The key oracle here is an independent 2x2 transfer-matrix evaluation of
the multilayer reflection coefficient, written straight from field
continuity conditions. It shares no code with the production recursion.
"""

import math

import numpy as np
import pytest

from casimir.constants import C, HBAR, NM
from casimir.materials import MaterialDb, permittivity_at
from casimir.numerics import SemiInfiniteRule
from casimir.planar import (
    DenominatorError,
    Layer,
    LayerStack,
    PlanarGap,
    fresnel_reflection,
    lifshitz_energy_per_area,
    lifshitz_pressure,
    normalized_pressure,
    perfect_metal_pressure,
)

DB = MaterialDb.builtin()


def transfer_matrix_reflection(stack, fluid, xi, k, pol, db):
    """Oracle: characteristic-matrix reflection for a layered wall.

    Field F and its matched derivative G (F' for TE, F'/eps for TM) are
    continuous; each layer of thickness t maps (F, G) by
    [[cosh(kappa t), sinh(kappa t)/eta], [eta sinh(kappa t), cosh]]
    with eta = kappa (TE) or kappa/eps (TM). The terminating half-space
    admits only the decaying solution (F, G) ~ (1, -eta_N).
    """

    def kap(eps):
        return math.sqrt(eps * (xi / C) ** 2 + k * k)

    def eta(eps):
        kp = kap(eps)
        return kp if pol == "TE" else kp / eps

    eps_list = [permittivity_at(db.get(lay.material).model, xi)
                for lay in stack.layers]

    vec = np.array([1.0, -eta(eps_list[-1])])
    for lay, eps in zip(reversed(stack.layers[:-1]), reversed(eps_list[:-1])):
        kp = kap(eps)
        et = eta(eps)
        ch = math.cosh(kp * lay.thickness)
        sh = math.sinh(kp * lay.thickness)
        inv = np.array([[ch, -sh / et], [-et * sh, ch]])
        vec = inv @ vec

    eps_f = permittivity_at(db.get(fluid).model, xi)
    ef = eta(eps_f)
    f0, g0 = vec
    return (ef * f0 + g0) / (ef * f0 - g0)


def random_stack(rng):
    solids = ["si", "sio2", "teflon", "gold"]
    n_finite = rng.integers(0, 3)
    layers = []
    for _ in range(n_finite):
        layers.append(Layer(str(rng.choice(solids)),
                            float(rng.uniform(5e-9, 2e-7))))
    layers.append(Layer(str(rng.choice(solids))))
    return LayerStack(tuple(layers))


def test_reflection_matches_transfer_matrix_oracle():
    rng = np.random.default_rng(20260815)
    for _ in range(100):
        stack = random_stack(rng)
        fluid = str(rng.choice(["ethanol", "vacuum"]))
        xi = 10.0 ** rng.uniform(13.0, math.log10(2e16))
        k = 10.0 ** rng.uniform(5.0, 8.0)
        for pol in ("TE", "TM"):
            r = fresnel_reflection(stack, fluid, xi, k, pol, DB)
            r_tm = transfer_matrix_reflection(stack, fluid, xi, k, pol, DB)
            assert r == pytest.approx(r_tm, abs=1e-10, rel=1e-10)


def test_half_space_closed_form():
    xi, k = 3.0e15, 2.0e7
    eps_f = permittivity_at(DB.get("ethanol").model, xi)
    eps_1 = permittivity_at(DB.get("si").model, xi)
    kf = math.sqrt(eps_f * (xi / C) ** 2 + k * k)
    k1 = math.sqrt(eps_1 * (xi / C) ** 2 + k * k)
    wall = LayerStack.half_space("si")
    r_te = fresnel_reflection(wall, "ethanol", xi, k, "TE", DB)
    r_tm = fresnel_reflection(wall, "ethanol", xi, k, "TM", DB)
    assert r_te == pytest.approx((kf - k1) / (kf + k1), rel=1e-14)
    assert r_tm == pytest.approx(
        (eps_1 * kf - eps_f * k1) / (eps_1 * kf + eps_f * k1), rel=1e-14
    )


def test_reflection_bounded_by_unity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        stack = random_stack(rng)
        xi = 10.0 ** rng.uniform(13.0, 16.0)
        k = 10.0 ** rng.uniform(5.0, 8.0)
        for pol in ("TE", "TM"):
            r = fresnel_reflection(stack, "ethanol", xi, k, pol, DB)
            assert abs(r) <= 1.0 + 1e-12


def test_perfect_metal_reflection_constants():
    wall = LayerStack.half_space("perfect-metal")
    for xi in (1e13, 1e15, 1e17):
        for k in (1e5, 1e7, 1e9):
            assert fresnel_reflection(wall, "vacuum", xi, k, "TE", DB) == -1.0
            assert fresnel_reflection(wall, "vacuum", xi, k, "TM", DB) == 1.0


def test_index_matched_wall_is_dark():
    wall = LayerStack.half_space("ethanol")
    r = fresnel_reflection(wall, "ethanol", 2e15, 3e7, "TM", DB)
    assert r == pytest.approx(0.0, abs=1e-15)
    gap = PlanarGap(wall, LayerStack.half_space("si"), "ethanol", 100 * NM)
    assert lifshitz_pressure(gap, DB) == pytest.approx(0.0, abs=1e-12)


def test_thick_film_approaches_half_space():
    # The film-bulk difference decays only algebraically, roughly as
    # (d/t)^3: long-wavelength modes keep seeing the backing.
    d = 100 * NM
    bulk = LayerStack.half_space("si")
    other = LayerStack.half_space("sio2")
    p_bulk = lifshitz_pressure(PlanarGap(bulk, other, "ethanol", d), DB)
    errs = []
    for mult in (10, 20, 40):
        film = LayerStack.slab("si", mult * d, "teflon")
        p_film = lifshitz_pressure(PlanarGap(film, other, "ethanol", d), DB)
        errs.append(abs(p_film - p_bulk) / abs(p_bulk))
    assert errs[0] < 1e-2
    assert errs[1] < 1e-3
    assert errs[2] < errs[1] < errs[0]


def test_wall_swap_symmetry():
    a = LayerStack.slab("sio2", 30 * NM, "si")
    b = LayerStack.half_space("teflon")
    d = 80 * NM
    p_ab = lifshitz_pressure(PlanarGap(a, b, "ethanol", d), DB)
    p_ba = lifshitz_pressure(PlanarGap(b, a, "ethanol", d), DB)
    assert p_ab == pytest.approx(p_ba, rel=1e-13)


def test_perfect_metal_vacuum_benchmark():
    pm = LayerStack.half_space("perfect-metal")
    for d in (50 * NM, 100 * NM, 500 * NM):
        gap = PlanarGap(pm, pm, "vacuum", d)
        ratio = lifshitz_pressure(gap, DB) / perfect_metal_pressure(d)
        assert ratio == pytest.approx(1.0, abs=1e-3)
        assert normalized_pressure(gap, DB) == pytest.approx(ratio, rel=1e-14)


def test_mirror_pair_always_attracts():
    wall = LayerStack.half_space("si")
    for d in (20 * NM, 100 * NM, 400 * NM):
        gap = PlanarGap(wall, wall, "ethanol", d)
        assert lifshitz_pressure(gap, DB) > 0.0


@pytest.mark.parametrize("wall_a,wall_b,d", [
    ("teflon", "si", 120 * NM),
    ("teflon", "sio2", 100 * NM),
    ("sio2", "si", 29 * NM),
])
def test_quadrature_doubling_is_converged(wall_a, wall_b, d):
    gap = PlanarGap(
        LayerStack.half_space(wall_a),
        LayerStack.half_space(wall_b),
        "ethanol",
        d,
    )
    r40 = (SemiInfiniteRule.build(40, 0.2 * math.pi * C / d),
           SemiInfiniteRule.build(40, 1 / d))
    r80 = (r40[0].refined(2), r40[1].refined(2))
    p40 = lifshitz_pressure(gap, DB, *r40)
    p80 = lifshitz_pressure(gap, DB, *r80)
    assert p40 == pytest.approx(p80, rel=1e-6)


def test_energy_per_area_matches_pressure_derivative():
    gap = PlanarGap(
        LayerStack.half_space("si"),
        LayerStack.half_space("sio2"),
        "ethanol",
        150 * NM,
    )
    d = gap.separation
    h = 1e-3 * d
    rules = (SemiInfiniteRule.build(40, 0.2 * math.pi * C / d),
             SemiInfiniteRule.build(40, 1 / d))
    e_hi = lifshitz_energy_per_area(gap.at(d + h), DB, *rules)
    e_lo = lifshitz_energy_per_area(gap.at(d - h), DB, *rules)
    p = lifshitz_pressure(gap, DB, *rules)
    assert (e_hi - e_lo) / (2 * h) == pytest.approx(p, rel=1e-5)


def test_energy_perfect_metal_benchmark():
    pm = LayerStack.half_space("perfect-metal")
    d = 100 * NM
    e = lifshitz_energy_per_area(PlanarGap(pm, pm, "vacuum", d), DB)
    ideal = -HBAR * C * math.pi**2 / (720.0 * d**3)
    assert e == pytest.approx(ideal, rel=1e-3)
    assert e < 0.0


def test_denominator_guard_trips():
    pm = LayerStack.half_space("perfect-metal")
    gap = PlanarGap(pm, pm, "vacuum", 1e-9)
    loose_xi = SemiInfiniteRule.build(8, 1e3)
    loose_k = SemiInfiniteRule.build(8, 1e-3)
    with pytest.raises(DenominatorError):
        lifshitz_pressure(gap, DB, loose_xi, loose_k)


def test_stack_validation():
    with pytest.raises(ValueError):
        LayerStack(tuple())
    with pytest.raises(ValueError):
        LayerStack((Layer("si", 50 * NM),))
    with pytest.raises(ValueError):
        LayerStack((Layer("si"), Layer("sio2")))
    with pytest.raises(ValueError):
        Layer("si", -3 * NM)
    with pytest.raises(ValueError):
        PlanarGap(LayerStack.half_space("si"),
                  LayerStack.half_space("si"), "ethanol", 0.0)


def test_unknown_material_is_reported():
    wall = LayerStack.half_space("unobtanium")
    with pytest.raises(KeyError):
        fresnel_reflection(wall, "ethanol", 1e15, 1e7, "TE", DB)
