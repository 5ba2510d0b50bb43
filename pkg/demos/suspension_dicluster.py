"""Levitation heights over a gold wall, and a two-sphere cluster design.

Gravity pulls a sphere down, the fluctuation force near a gold wall in
ethanol pushes some materials up.  Where the two balance, the sphere
floats.  This demo solves the balance for a few radii, shows that heavy
silicon spheres stop floating once the radius is large enough, and then
sizes the gap inside a silicon-teflon pair treated as a rigid cluster.
"""

from __future__ import annotations

import time

from casimir import (
    NM,
    LayerStack,
    MaterialDb,
    SphereBody,
    SuspendedSphere,
    WaveBasis,
    design_dicluster,
    solve_heights,
)

DB = MaterialDb.builtin()
GOLD = LayerStack.half_space("gold")


def float_or_sink(material: str, radius_nm: float) -> None:
    cfg = SuspendedSphere(
        sphere=SphereBody(material, radius_nm * NM),
        slab=GOLD,
        fluid="ethanol",
    )
    res = solve_heights(cfg, (200e-9, 1.5e-6), grid_points=20, db=DB)
    if not res.suspendable:
        print(f"  {material:7s} R = {radius_nm:6.1f} nm   sinks")
        return
    line = (
        f"  {material:7s} R = {radius_nm:6.1f} nm   floats at "
        f"h = {res.stable_height / NM:6.1f} nm "
        f"(center {res.center_height / NM:6.1f} nm"
    )
    if res.unstable_height is not None:
        line += f", unstable zero at {res.unstable_height / NM:6.1f} nm"
    print(line + ")")


def main() -> None:
    t0 = time.perf_counter()

    print("== suspension over a gold wall in ethanol ==")
    print("surface height h is measured wall to sphere bottom.\n")
    for material, radius_nm in [
        ("teflon", 60.0),
        ("teflon", 180.0),
        ("si", 70.0),
        ("si", 120.0),
    ]:
        float_or_sink(material, radius_nm)
    print("\nteflon floats across this whole range.  silicon is three")
    print("times denser, its weight grows with the cube of the radius")
    print("while the push from the wall saturates, so somewhere above")
    print("R = 90 nm the balance point disappears and the sphere sinks.")

    print("\n== dicluster gap ==")
    print("a silicon and a teflon sphere, glued into one rigid object,")
    print("can hover with zero net force even when the silicon sphere")
    print("alone would sink.  the design question is the surface gap")
    print("between them that zeroes the pair force.")
    design = design_dicluster(
        100 * NM,
        100 * NM,
        d_range=(40e-9, 400e-9),
        grid_points=18,
        basis=WaveBasis(14),
    )
    if design.feasible:
        print(
            f"\nsi R = 100 nm + teflon R = 100 nm: "
            f"stable gap = {design.gap / NM:.1f} nm"
        )
        print("the pair force is repulsive at short range and attractive")
        print("farther out, so the zero is a stable resting gap.")
    else:
        print("\nno stable gap in the window for this pair.")

    print(f"\n[{time.perf_counter() - t0:.1f} s]")


if __name__ == "__main__":
    main()
