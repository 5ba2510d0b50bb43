"""Planar force curves, their equilibria, and a fold in film thickness.

Three things happen here. First the two half-space pairs with opposite
characters: teflon-ethanol-si crosses zero once (a stable spacing),
sio2-ethanol-si crosses twice (an unstable spacing below a stable one).
Then a finite sio2 film on an ethanol backing replaces the sio2 wall,
and thinning the film drags the equilibria together. Finally the fold
finder brackets the thickness where they merge and vanish.
"""

import numpy as np

from casimir import (
    LayerStack,
    PlanarGap,
    find_equilibria,
    find_fold,
    lifshitz_pressure,
)
from casimir.constants import NM


def pressure_curve(wall_a, wall_b, gaps):
    return [lifshitz_pressure(PlanarGap(wall_a, wall_b, "ethanol", d))
            for d in gaps]


def describe(points):
    if not points:
        return "no equilibria"
    return ", ".join(f"{p.kind} at {p.separation / NM:.1f} nm"
                     for p in points)


def main():
    si = LayerStack.half_space("si")
    teflon = LayerStack.half_space("teflon")
    sio2 = LayerStack.half_space("sio2")

    gaps = np.geomspace(20 * NM, 400 * NM, 12)
    print("pressure in Pa (positive pulls the walls together):")
    print(f"{'gap_nm':>8} {'teflon|si':>12} {'sio2|si':>12}")
    tef_curve = pressure_curve(teflon, si, gaps)
    sio2_curve = pressure_curve(sio2, si, gaps)
    for d, p1, p2 in zip(gaps, tef_curve, sio2_curve):
        print(f"{d / NM:8.1f} {p1:12.4g} {p2:12.4g}")

    for name, wall in (("teflon", teflon), ("sio2", sio2)):
        points = find_equilibria(lambda d: lifshitz_pressure(
            PlanarGap(wall, si, "ethanol", d)), (15 * NM, 400 * NM),
            grid_points=60)
        print(f"{name}-ethanol-si equilibria: {describe(points)}")

    print("\nfinite sio2 film (ethanol backing) facing the si wall:")

    def family(t):
        stack = LayerStack.slab("sio2", t, "ethanol")
        return lambda d: lifshitz_pressure(PlanarGap(stack, si, "ethanol", d))

    for t_nm in (100.0, 60.0, 40.0, 30.0, 25.0, 21.0):
        points = find_equilibria(family(t_nm * NM), (18 * NM, 220 * NM),
                                 grid_points=70)
        print(f"  t = {t_nm:5.1f} nm: {describe(points)}")

    fold = find_fold(family, (20 * NM, 30 * NM), (18 * NM, 220 * NM),
                     grid_points=70, ptol=0.5 * NM)
    print(f"\nthe pair merges at t_c = {fold.parameter_value / NM:.2f} nm "
          f"(last seen near d = {fold.separation / NM:.1f} nm); below that "
          "thickness the film no longer supplies enough repulsion and "
          "every spacing is attractive.")


if __name__ == "__main__":
    main()
