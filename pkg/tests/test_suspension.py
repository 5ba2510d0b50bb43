"""Tests for gravity-balanced suspension and dicluster design.

Physical anchors, measured with the pinned scattering engine: a 30 nm
silicon sphere over gold in ethanol balances near h_u = 274 nm and
h_c = 329 nm; teflon over gold is repulsive at every height so only a
stable root exists; a (100, 100) nm silicon-teflon sphere pair crosses
from repulsion to attraction between 150 and 210 nm. Synthetic checks
cover the weight formula, the buoyancy toggle, and the failure modes.
"""

import math

import numpy as np
import pytest

from casimir.constants import G_STANDARD
from casimir.planar import LayerStack
from casimir.scattering import SphereBody, WaveBasis, casimir_force
from casimir.scattering import PlateSphereGeometry
from casimir.suspension import (
    ConfigurationError,
    DiclusterDesign,
    PairingRangeError,
    SuspendedSphere,
    design_dicluster,
    height_curve,
    net_vertical_force,
    pair_radii,
    solve_heights,
    sphere_weight,
)

NM = 1.0e-9
GOLD = LayerStack.half_space("gold")


def si_sphere(radius):
    return SuspendedSphere(SphereBody(radius, "si"), GOLD)


def test_sphere_weight_uses_density_difference():
    cfg = si_sphere(30.0 * NM)
    volume = (4.0 / 3.0) * math.pi * (30.0 * NM) ** 3
    expected = (2330.0 - 789.0) * volume * G_STANDARD
    assert sphere_weight(cfg) == pytest.approx(expected, rel=1e-12)

    bare = SuspendedSphere(SphereBody(30.0 * NM, "si"), GOLD,
                           buoyancy=False)
    assert sphere_weight(bare) == pytest.approx(
        2330.0 * volume * G_STANDARD, rel=1e-12)


def test_missing_density_raises_configuration_error():
    cfg = SuspendedSphere(SphereBody(30.0 * NM, "perfect-metal"), GOLD)
    with pytest.raises(ConfigurationError, match="mass density"):
        net_vertical_force(cfg, 200.0 * NM)
    watery = SuspendedSphere(SphereBody(30.0 * NM, "si"), GOLD,
                             fluid="vacuum")
    with pytest.raises(ConfigurationError, match="mass density"):
        net_vertical_force(watery, 200.0 * NM)


def test_matched_sphere_feels_nothing():
    cfg = SuspendedSphere(SphereBody(50.0 * NM, "ethanol"), GOLD)
    assert net_vertical_force(cfg, 150.0 * NM) == pytest.approx(0.0, abs=1e-30)


def test_far_field_net_force_is_pure_weight():
    cfg = si_sphere(30.0 * NM)
    far = net_vertical_force(cfg, 5.0e-6)
    assert far == pytest.approx(-sphere_weight(cfg), rel=1e-2)


def test_height_must_be_positive():
    with pytest.raises(ValueError, match="height"):
        net_vertical_force(si_sphere(30.0 * NM), 0.0)


def test_gold_silicon_has_both_heights():
    res = solve_heights(si_sphere(30.0 * NM), (150.0 * NM, 2500.0 * NM))
    assert res.suspendable
    assert 250.0 * NM < res.unstable_height < 300.0 * NM
    assert 305.0 * NM < res.stable_height < 355.0 * NM
    assert res.unstable_height < res.stable_height
    assert res.center_height == pytest.approx(res.stable_height + 30.0 * NM)
    assert res.stiffness < 0.0

    cfg = si_sphere(30.0 * NM)
    assert abs(net_vertical_force(cfg, res.stable_height,
                                  basis=WaveBasis(8))) < 1e-22


def test_repulsion_below_stable_height():
    # levitation over gold rests on a repulsive window under h_c
    basis = WaveBasis(8)
    for material in ("si", "teflon"):
        body = SphereBody(30.0 * NM, material)
        geom = PlateSphereGeometry(GOLD, body, "ethanol", 310.0 * NM)
        assert casimir_force(geom, basis) < 0.0


def test_teflon_gold_has_no_unstable_height():
    cfg = SuspendedSphere(SphereBody(40.0 * NM, "teflon"), GOLD)
    res = solve_heights(cfg, (80.0 * NM, 2000.0 * NM), grid_points=24)
    assert res.suspendable
    assert res.unstable_height is None
    assert res.stiffness < 0.0


def test_same_material_wall_cannot_suspend():
    cfg = SuspendedSphere(SphereBody(20.0 * NM, "si"),
                          LayerStack.half_space("si"))
    res = solve_heights(cfg, (50.0 * NM, 1500.0 * NM))
    assert not res.suspendable
    assert res.stable_height is None
    assert res.center_height is None
    assert res.stiffness is None


def test_height_curve_trends_and_csv():
    radii = (10.0 * NM, 20.0 * NM, 40.0 * NM)
    curve = height_curve("si", GOLD, radii, (150.0 * NM, 2000.0 * NM),
                         grid_points=22, jobs=3)
    stable = np.array(curve.stable)
    center = np.array(curve.center)
    unstable = np.array(curve.unstable)
    assert np.all(np.isfinite(stable))
    assert np.all(np.isfinite(unstable))
    # shrinking the sphere raises the surface gap but lowers the
    # center height
    assert stable[0] > stable[1] > stable[2]
    assert center[0] < center[1] < center[2]

    text = curve.to_csv()
    lines = text.splitlines()
    assert lines[0] == "radius,h_stable,L_center,h_unstable"
    assert len(lines) == 4
    assert curve.to_csv() == text


def test_height_curve_marks_unsuspendable_radii():
    curve = height_curve("si", LayerStack.half_space("si"),
                         (20.0 * NM,), (50.0 * NM, 1500.0 * NM),
                         grid_points=20)
    assert math.isnan(curve.stable[0])
    row = curve.to_csv().splitlines()[1]
    assert row.startswith("2.000000000e-08,,")


def test_pair_radii_self_match_round_trip():
    probe = solve_heights(si_sphere(25.0 * NM), (150.0 * NM, 1500.0 * NM),
                          grid_points=18)
    target = probe.stable_height
    r_a, r_b = pair_radii("si", "si", GOLD, mode="match_h", target=target,
                          radius_range=(12.0 * NM, 45.0 * NM), grid=6,
                          h_range=(150.0 * NM, 1500.0 * NM),
                          grid_points=18, jobs=3)
    assert r_a == r_b
    assert abs(r_a - 25.0 * NM) < 5.0 * NM

    check = solve_heights(si_sphere(r_a), (150.0 * NM, 1500.0 * NM),
                          grid_points=18)
    assert abs(check.stable_height - target) <= 1.0 * NM


def test_pair_radii_rejects_unreachable_target():
    with pytest.raises(PairingRangeError, match="overlap"):
        pair_radii("si", "si", GOLD, mode="match_h", target=1.0e-5,
                   radius_range=(15.0 * NM, 40.0 * NM), grid=4,
                   h_range=(150.0 * NM, 1200.0 * NM), grid_points=12,
                   jobs=3)


def test_pair_radii_validates_mode_and_target():
    with pytest.raises(ValueError, match="mode"):
        pair_radii("si", "teflon", GOLD, mode="weird", target=300.0 * NM)
    with pytest.raises(ValueError, match="target"):
        pair_radii("si", "teflon", GOLD, mode="match_h", target=0.0)


def test_dicluster_design_for_equal_pair():
    design = design_dicluster(100.0 * NM, 100.0 * NM,
                              d_range=(60.0 * NM, 260.0 * NM),
                              grid_points=10, basis=WaveBasis(14))
    assert isinstance(design, DiclusterDesign)
    assert design.feasible
    assert design.additive_approx
    assert 150.0 * NM < design.gap < 210.0 * NM
    assert design.material_a == "si" and design.material_b == "teflon"


def test_dicluster_index_matched_is_infeasible():
    design = design_dicluster(80.0 * NM, 80.0 * NM,
                              material_a="ethanol", material_b="ethanol",
                              d_range=(60.0 * NM, 260.0 * NM),
                              grid_points=8, basis=WaveBasis(8))
    assert not design.feasible
    assert design.gap is None
    assert design.additive_approx
