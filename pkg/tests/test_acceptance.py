"""Whole-library acceptance runs.

Each test here pins one externally visible behavior of the package:
planar benchmark values, equilibrium positions and kinds, scattering
convergence, suspension and pairing findings, oracle agreement, and CLI
determinism. Every test reports a one-line verdict through the
`acceptance` fixture so the end-of-run summary carries a PASS/FAIL line
per numbered check with the measured values inline.

Shared expensive results (slab equilibria, the R = 200 nm sphere
curves) are computed once and cached at module scope; the criteria that
reuse them read the cache.
"""

import math
import time

import numpy as np
import pytest

from casimir.constants import C, NM
from casimir.equilibria import _effective_count, find_equilibria, find_fold
from casimir.materials import MaterialDb, find_crossings
from casimir.planar import (
    LayerStack,
    PlanarGap,
    fresnel_reflection,
    lifshitz_pressure,
    perfect_metal_pressure,
)
from casimir.scattering import (
    PlateSphereGeometry,
    SphereBody,
    SphereSphereGeometry,
    WaveBasis,
    _default_xi_rule,
    _kz_rule,
    _plate_block,
    casimir_force,
    plate_roundtrip,
    translation_matrix,
)
from casimir.suspension import (
    SuspendedSphere,
    design_dicluster,
    height_curve,
    solve_heights,
)

from test_cli import run_cli, write_config, TEF_SI
from test_planar import random_stack, transfer_matrix_reflection
from test_scattering import gauge_real, projection_oracle

DB = MaterialDb.builtin()
XI_UNIT = 2.0 * math.pi * C / 1e-6  # rad/s per (2 pi c / um)

_cache: dict[str, object] = {}


def slab_gap(wall_a, wall_b, d):
    return PlanarGap(wall_a, wall_b, "ethanol", d)


def slab_force(wall_a, wall_b):
    def force(d):
        return lifshitz_pressure(slab_gap(wall_a, wall_b, d))

    return force


def plate_sphere_force(sphere_material, radius, lmax):
    stack = LayerStack.half_space("si")
    body = SphereBody(radius, sphere_material)
    basis = WaveBasis(lmax)

    def force(d):
        geom = PlateSphereGeometry(stack, body, "ethanol", d)
        return casimir_force(geom, basis, _default_xi_rule(d, 40))

    return force


def teflon_si_slab():
    """Equilibria of the teflon/si half-space pair, with wall time."""
    if "teflon_si" not in _cache:
        force = slab_force(LayerStack.half_space("teflon"),
                           LayerStack.half_space("si"))
        t0 = time.perf_counter()
        points = find_equilibria(force, (20 * NM, 400 * NM), grid_points=60)
        _cache["teflon_si"] = (points, time.perf_counter() - t0)
    return _cache["teflon_si"]


def sio2_si_slab():
    if "sio2_si" not in _cache:
        force = slab_force(LayerStack.half_space("sio2"),
                           LayerStack.half_space("si"))
        points = find_equilibria(force, (15 * NM, 200 * NM), grid_points=60)
        _cache["sio2_si"] = points
    return _cache["sio2_si"]


SPHERE_WINDOWS = {"teflon": (75 * NM, 200 * NM), "sio2": (50 * NM, 140 * NM)}


def sphere_equilibrium(sphere_material):
    """Stable separation of the R = 200 nm sphere over si, with timing."""
    key = f"sphere_{sphere_material}"
    if key not in _cache:
        force = plate_sphere_force(sphere_material, 200 * NM, lmax=20)
        t0 = time.perf_counter()
        points = find_equilibria(force, SPHERE_WINDOWS[sphere_material],
                                 grid_points=18)
        elapsed = time.perf_counter() - t0
        stable = [p for p in points if p.kind == "stable"]
        assert len(stable) == 1, (
            f"expected one stable zero for {sphere_material}, "
            f"found {len(stable)} among {len(points)} points"
        )
        _cache[key] = (stable[0].separation, elapsed)
    return _cache[key]


def test_c01_ideal_mirror_vacuum_pressure(acceptance):
    mirror = LayerStack.half_space("perfect-metal")
    t0 = time.perf_counter()
    worst = 0.0
    for d in (50 * NM, 100 * NM, 500 * NM):
        gap = PlanarGap(mirror, mirror, "vacuum", d)
        ratio = lifshitz_pressure(gap) / perfect_metal_pressure(d)
        worst = max(worst, abs(ratio - 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 1.0
    acceptance(1, ok,
               f"ideal-mirror vacuum pressure off the 240 d^4 benchmark by "
               f"{worst:.1e} at 50/100/500 nm in {elapsed:.2f} s "
               f"(bounds 1e-3, 1 s)")
    assert ok


def test_c02_teflon_si_slabs_single_stable_equilibrium(acceptance):
    points, elapsed = teflon_si_slab()
    d_nm = points[0].separation / NM if points else float("nan")
    ok = (len(points) == 1 and points[0].kind == "stable"
          and 96.0 < d_nm < 144.0 and elapsed < 10.0)
    acceptance(2, ok,
               f"teflon-si half spaces: {len(points)} equilibrium, stable at "
               f"{d_nm:.1f} nm (band 96-144) in {elapsed:.1f} s (<10)")
    assert ok


def test_c03_sio2_si_slabs_unstable_then_stable(acceptance):
    points = sio2_si_slab()
    kinds = [p.kind for p in points]
    seps = [p.separation / NM for p in points]
    ok = (kinds == ["unstable", "stable"]
          and 23.2 < seps[0] < 34.8 and 72.0 < seps[1] < 108.0)
    acceptance(3, ok,
               f"sio2-si half spaces: kinds {kinds} at "
               f"{', '.join(f'{s:.1f}' for s in seps)} nm "
               f"(bands 23.2-34.8 then 72-108)")
    assert ok


def test_c04_teflon_sio2_slabs_strictly_attractive(acceptance):
    force = slab_force(LayerStack.half_space("teflon"),
                       LayerStack.half_space("sio2"))
    samples = np.geomspace(20 * NM, 500 * NM, 25)
    pressures = [force(d) for d in samples]
    points = find_equilibria(force, (20 * NM, 500 * NM), grid_points=60)
    ok = all(p > 0.0 for p in pressures) and not points
    acceptance(4, ok,
               f"teflon-sio2 half spaces attractive at all 25 samples over "
               f"20-500 nm (min pressure {min(pressures):.3e} Pa), "
               f"{len(points)} zero crossings")
    assert ok


def test_c05_sio2_ethanol_permittivity_crossings(acceptance):
    crossings = find_crossings(DB.get("sio2").model, DB.get("ethanol").model,
                               (0.05 * XI_UNIT, 100.0 * XI_UNIT),
                               grid_points=600)
    in_units = [c / XI_UNIT for c in crossings]
    ok = (len(in_units) == 2
          and 2.6 * 0.8 <= in_units[0] <= 2.6 * 1.2
          and 26.4 * 0.8 <= in_units[1] <= 26.4 * 1.2)
    acceptance(5, ok,
               f"sio2/ethanol permittivity crossings at "
               f"{', '.join(f'{v:.2f}' for v in in_units)} x 2 pi c/um "
               f"(bands 2.08-3.12 and 21.1-31.7)")
    assert ok


def test_c06_sphere_equilibria_at_200nm_radius(acceptance):
    d_tef, t_tef = sphere_equilibrium("teflon")
    d_sio2, t_sio2 = sphere_equilibrium("sio2")
    slab_tef = teflon_si_slab()[0][0].separation
    slab_sio2 = sio2_si_slab()[1].separation

    ok = (84 * NM < d_tef < 126 * NM
          and 62.4 * NM < d_sio2 < 93.6 * NM
          and d_tef < slab_tef and d_sio2 < slab_sio2
          and t_tef < 300.0 and t_sio2 < 300.0)
    acceptance(6, ok,
               f"R=200 nm over si: teflon stable at {d_tef / NM:.1f} nm "
               f"(band 84-126, slab {slab_tef / NM:.1f}), sio2 at "
               f"{d_sio2 / NM:.1f} nm (band 62.4-93.6, slab "
               f"{slab_sio2 / NM:.1f}); curves {t_tef:.0f} s/{t_sio2:.0f} s "
               f"(<300 each)")
    assert ok


def test_c07_multipole_convergence_near_equilibria(acceptance):
    # the relative difference is undefined at the zero itself, so probe
    # both sides of each equilibrium where the root position is decided
    worst = 0.0
    for material in ("teflon", "sio2"):
        d_c, _ = sphere_equilibrium(material)
        stack = LayerStack.half_space("si")
        body = SphereBody(200 * NM, material)
        for d in (0.9 * d_c, 1.1 * d_c):
            geom = PlateSphereGeometry(stack, body, "ethanol", d)
            rule = _default_xi_rule(d, 40)
            f20 = casimir_force(geom, WaveBasis(20), rule)
            f25 = casimir_force(geom, WaveBasis(25), rule)
            worst = max(worst, abs(f20 - f25) / abs(f25))
    ok = worst < 0.01
    acceptance(7, ok,
               f"force change lmax 20 -> 25 at 0.9/1.1 of both equilibria: "
               f"worst {worst:.2e} (< 1e-2)")
    assert ok


def test_c08_equilibrium_grows_as_radius_shrinks(acceptance):
    curves = [
        (350.0, (70 * NM, 160 * NM), 35),
        (120.0, (85 * NM, 200 * NM), 18),
        (50.0, (100 * NM, 240 * NM), 14),
        (25.0, (110 * NM, 260 * NM), 10),
    ]
    d_c = {200.0: sphere_equilibrium("teflon")[0] / NM}
    for r_nm, window, lmax in curves:
        force = plate_sphere_force("teflon", r_nm * NM, lmax)
        points = find_equilibria(force, window, grid_points=12)
        stable = [p for p in points if p.kind == "stable"]
        assert len(stable) == 1
        d_c[r_nm] = stable[0].separation / NM

    ordered = [d_c[r] for r in (25.0, 50.0, 120.0, 200.0, 350.0)]
    monotone = all(a > b for a, b in zip(ordered, ordered[1:]))

    # small-sphere force scaling at a fixed 200 nm center height
    center = 200 * NM
    radii = np.array([5 * NM, 10 * NM, 20 * NM])
    stack = LayerStack.half_space("si")
    forces = []
    for r in radii:
        geom = PlateSphereGeometry(stack, SphereBody(float(r), "teflon"),
                                   "ethanol", center - float(r))
        rule = _default_xi_rule(geom.gap, 40)
        forces.append(abs(casimir_force(geom, WaveBasis(8), rule)))
    slope = float(np.polyfit(np.log(radii), np.log(forces), 1)[0])

    ok = monotone and abs(slope - 3.0) <= 0.1
    chain = " > ".join(f"{r:.0f}:{d_c[r]:.1f}"
                       for r in (25.0, 50.0, 120.0, 200.0, 350.0))
    acceptance(8, ok,
               f"teflon-sphere d_c grows as R shrinks ({chain} nm) and "
               f"|F| ~ R^3 at fixed 200 nm center: slope {slope:.3f} "
               f"(3.0 +- 0.1)")
    assert ok


def slab_family_stable(slab_material, wall_material, thickness):
    stack = LayerStack.slab(slab_material, thickness, "ethanol")
    wall = LayerStack.half_space(wall_material)
    points = find_equilibria(slab_force(stack, wall), (18 * NM, 220 * NM),
                             grid_points=70)
    stables = [p.separation for p in points if p.kind == "stable"]
    assert stables, f"no stable zero for {slab_material} at t={thickness}"
    return max(stables) / NM


def test_c09_material_swap_reverses_thickness_trend(acceptance):
    ts = (30 * NM, 50 * NM, 100 * NM)
    sio2_family = [slab_family_stable("sio2", "si", t) for t in ts]
    si_family = [slab_family_stable("si", "sio2", t) for t in ts]
    thinner_shrinks = sio2_family[0] < sio2_family[1] < sio2_family[2]
    thinner_grows = si_family[0] > si_family[1] > si_family[2]
    ok = thinner_shrinks and thinner_grows
    acceptance(9, ok,
               f"t = 30/50/100 nm: sio2 film over si d_c = "
               f"{'/'.join(f'{v:.1f}' for v in sio2_family)} nm (shrinks as "
               f"t drops), si film over sio2 d_c = "
               f"{'/'.join(f'{v:.1f}' for v in si_family)} nm (grows)")
    assert ok


def test_c10_fold_in_film_thickness_and_normal_form(acceptance):
    wall = LayerStack.half_space("si")

    def family(t):
        stack = LayerStack.slab("sio2", t, "ethanol")
        return slab_force(stack, wall)

    fold = find_fold(family, (20 * NM, 30 * NM), (18 * NM, 220 * NM),
                     grid_points=70, ptol=0.5 * NM)
    t_c = fold.parameter_value
    n_below = _effective_count(
        find_equilibria(family(t_c - 2 * NM), (18 * NM, 220 * NM),
                        grid_points=70))
    n_above = _effective_count(
        find_equilibria(family(t_c + 2 * NM), (18 * NM, 220 * NM),
                        grid_points=70))

    synthetic = find_fold(lambda mu: (lambda d: (d - 1.0) ** 2 - mu),
                          (-0.2, 0.2), (0.5, 2.0), grid_points=120,
                          ptol=1e-4)
    mu_c = synthetic.parameter_value

    ok = (20 * NM < t_c < 30 * NM and n_below == 0 and n_above == 2
          and abs(mu_c) <= 1e-3)
    acceptance(10, ok,
               f"sio2-film fold at t_c = {t_c / NM:.2f} nm (count "
               f"{n_below} -> {n_above} across it, bisected to 0.5 nm); "
               f"normal form mu_c = {mu_c:.1e} (|mu_c| <= 1e-3)")
    assert ok


def test_c11_gold_si_suspension_gap_claim(acceptance):
    gold = LayerStack.half_space("gold")
    heights = {}
    for r_nm in (45.0, 25.0, 5.0):
        cfg = SuspendedSphere(SphereBody(r_nm * NM, "si"), gold)
        res = solve_heights(cfg, (220 * NM, 600 * NM), grid_points=16)
        heights[r_nm] = res

    both_exist = all(r.suspendable and r.unstable_height is not None
                     for r in heights.values())
    h_c = {r: res.stable_height / NM for r, res in heights.items()}
    l_c = {r: res.center_height / NM for r, res in heights.items()}
    gaps = {r: (res.stable_height - res.unstable_height) / NM
            for r, res in heights.items()}
    rising_h = h_c[5.0] > h_c[25.0] > h_c[45.0]
    falling_l = l_c[5.0] < l_c[25.0] < l_c[45.0]
    wide_gaps = all(g > 200.0 for g in gaps.values())

    ok = both_exist and rising_h and falling_l and wide_gaps
    detail = (
        f"gold-si: stable+unstable exist and h_c rises / L_c falls as R "
        f"shrinks ({both_exist}/{rising_h}/{falling_l}), but the stable-"
        f"unstable gap is {'/'.join(f'{gaps[r]:.0f}' for r in (45.0, 25.0, 5.0))} nm "
        f"at R = 45/25/5 nm, saturating near 56 nm instead of exceeding "
        f"200 nm"
    )
    if ok:
        acceptance(11, True,
                   "gold-si suspension: all four height claims hold, gap "
                   f"{min(gaps.values()):.0f} nm minimum")
        return
    acceptance(11, False, detail)
    pytest.fail(detail)


def test_c12_dicluster_gap_and_pairing_report(acceptance):
    design = design_dicluster(368.39 * NM, 176.64 * NM,
                              d_range=(75 * NM, 280 * NM), grid_points=18)
    gap_ok = (design.feasible
              and 80 * NM <= design.gap <= 180 * NM)

    # pairing report: compare what each matching mode can reach. The
    # teflon partners float at their printed radii; the si radii do
    # not, so the modes are judged on the reachable si bands.
    gold = LayerStack.half_space("gold")
    tef_h, tef_l = [], []
    for r_nm in (32.67, 176.64, 262.09):
        cfg = SuspendedSphere(SphereBody(r_nm * NM, "teflon"), gold)
        res = solve_heights(cfg, (250 * NM, 800 * NM), grid_points=12)
        assert res.suspendable, f"teflon R={r_nm} nm should float"
        tef_h.append(res.stable_height / NM)
        tef_l.append(res.center_height / NM)

    curve = height_curve("si", gold,
                         np.array([10.0, 40.0, 70.0, 368.39]) * NM,
                         (200 * NM, 1500 * NM), grid_points=22)
    stable = np.array(curve.stable)
    center = np.array(curve.center)
    si_printed_sinks = bool(np.isnan(stable[-1]))
    si_h = stable[np.isfinite(stable)] / NM
    si_l = center[np.isfinite(center)] / NM
    h_hits = sum(si_h.min() <= t <= si_h.max() for t in tef_h)
    l_hits = sum(si_l.min() <= t <= si_l.max() for t in tef_l)
    closer = ("match_h" if h_hits > l_hits
              else "match_L" if l_hits > h_hits else "neither mode")

    ok = gap_ok and si_printed_sinks and len(si_h) == 3
    acceptance(12, ok,
               f"pair (368.39, 176.64) nm: stable mutual gap "
               f"{design.gap / NM:.0f} nm (band 80-180); pairing report: "
               f"printed radius sets unreachable with this material data "
               f"(si sinks at 368.4 nm; floats at 10-70 nm with stable "
               f"heights {si_h.min():.0f}-{si_h.max():.0f} nm, centers "
               f"pinned at {si_l.min():.0f}-{si_l.max():.0f} nm), "
               f"{closer} comes closer: {h_hits}/3 printed-partner heights "
               f"reachable vs {l_hits}/3 centers")
    assert ok


def test_c13_oracle_suites(acceptance):
    # analytic force vs finite difference on seeded random configs
    rng = np.random.default_rng(20260816)
    solids = ["si", "sio2", "teflon", "gold"]
    worst_fd = 0.0
    for _ in range(20):
        r1 = float(rng.uniform(40, 120)) * NM
        d = float(rng.uniform(100, 250)) * NM
        fluid = str(rng.choice(["ethanol", "vacuum"]))
        if rng.random() < 0.5:
            geom = PlateSphereGeometry(
                LayerStack.half_space(str(rng.choice(solids))),
                SphereBody(r1, str(rng.choice(solids))), fluid, d)
        else:
            r2 = float(rng.uniform(40, 120)) * NM
            geom = SphereSphereGeometry(
                SphereBody(r1, str(rng.choice(solids))),
                SphereBody(r2, str(rng.choice(solids))), fluid, d)
        basis = WaveBasis(12)
        rule = _default_xi_rule(geom.gap, 24)
        f_an = casimir_force(geom, basis, rule)
        f_fd = casimir_force(geom, basis, rule, method="fd")
        worst_fd = max(worst_fd, abs(f_an - f_fd) / abs(f_fd))

    # per-m block determinants against the dense operator
    worst_det = 0.0
    xi = 2.0 * math.pi * C / 1e-6
    det_cases = [
        (3, "si", SphereBody(100 * NM, "sio2"), 90 * NM),
        (4, "gold", SphereBody(150 * NM, "teflon"), 120 * NM),
    ]
    for lmax, wall, body, d in det_cases:
        geom = PlateSphereGeometry(LayerStack.half_space(wall), body,
                                   "ethanol", d)
        full = plate_roundtrip(geom, xi, WaveBasis(lmax))
        _, logdet = np.linalg.slogdet(np.eye(full.shape[0]) - full)
        rule_k = _kz_rule(2.0 * geom.center_height, 40)
        total = 0.0
        for m in range(0, lmax + 1):
            block, _ = _plate_block(geom, xi, lmax, m, rule_k, DB, False)
            _, ld = np.linalg.slogdet(np.eye(block.shape[0]) - block)
            total += ld if m == 0 else 2.0 * ld
        worst_det = max(worst_det, abs(logdet - total) / abs(total))

    # multilayer reflection against the transfer-matrix oracle
    worst_fresnel = 0.0
    for _ in range(40):
        stack = random_stack(rng)
        fluid = str(rng.choice(["ethanol", "vacuum"]))
        xi_r = 10.0 ** rng.uniform(13.0, math.log10(2e16))
        k = 10.0 ** rng.uniform(5.0, 8.0)
        for pol in ("TE", "TM"):
            r = fresnel_reflection(stack, fluid, xi_r, k, pol, DB)
            r_tm = transfer_matrix_reflection(stack, fluid, xi_r, k, pol, DB)
            worst_fresnel = max(worst_fresnel, abs(r - r_tm))

    # translation matrix against the projection oracle
    worst_translation = 0.0
    for wavelength, distance in ((1e-6, 400 * NM), (0.5e-6, 250 * NM)):
        xi_t = 2.0 * math.pi * C / wavelength
        prod = translation_matrix(xi_t, distance, "vacuum", WaveBasis(2),
                                  n_nodes=80)
        oracle, labels = projection_oracle(xi_t, distance, 2,
                                           n_theta=96, n_phi=64)
        gauged, leak = gauge_real(oracle, labels)
        assert leak < 1e-12
        scale = np.max(np.abs(gauged))
        worst_translation = max(worst_translation,
                                np.max(np.abs(gauged - prod)) / scale)

    ok = (worst_fd < 1e-4 and worst_det < 1e-10
          and worst_fresnel < 1e-10 and worst_translation < 1e-8)
    acceptance(13, ok,
               f"oracles: fd {worst_fd:.1e} (<1e-4), block det "
               f"{worst_det:.1e} (<1e-10), fresnel {worst_fresnel:.1e} "
               f"(<1e-10), translation {worst_translation:.1e} (<1e-8)")
    assert ok


def test_c14_cli_reruns_are_byte_identical(acceptance, capsys, tmp_path):
    cfg = write_config(tmp_path, TEF_SI)
    commands = [
        ["force", "--config", cfg, "--jobs", "2"],
        ["force", "--config", cfg, "--format", "json"],
        ["eps", "--materials", "sio2,ethanol", "--xi", "0.1:100:80",
         "--crossings", "--jobs", "1"],
        ["fold", "--family", "synthetic"],
    ]
    identical = []
    for argv in commands:
        code_a, out_a, _ = run_cli(capsys, argv)
        code_b, out_b, _ = run_cli(capsys, argv)
        identical.append(code_a == 0 and code_b == 0 and out_a == out_b)
    ok = all(identical)
    acceptance(14, ok,
               f"{sum(identical)}/{len(commands)} repeated CLI runs "
               f"byte-identical (force csv+json, eps --crossings, "
               f"fold synthetic)")
    assert ok
