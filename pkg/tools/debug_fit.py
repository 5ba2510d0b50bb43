"""Per-m-block comparison of oracle vs candidate translation blocks."""
import math
import sys

import numpy as np

sys.path.insert(0, "src")
sys.path.insert(0, "tools")

from casimir.constants import C
from casimir.numerics import SemiInfiniteRule
from casimir.scattering import _flip_cross_blocks

from pin_scattering import (oracle_translation_complex, gauge_map,
                            candidate_block, extract_blocks)

np.set_printoptions(precision=6, suppress=False, linewidth=140)

lmax = 2
xi = 1.0 * 2.0 * math.pi * C / 1e-6
L = 400e-9
kappa = xi / C

oracle_c, labels = oracle_translation_complex(xi, L, lmax, direction=-1.0)
rule = SemiInfiniteRule.build(n=60, scale=1.0 / L)
kz = kappa + rule.nodes

for c_n in (1j, -1j):
    gauged, leak = gauge_map(oracle_c, labels, c_n, 1.0)
    oblocks = extract_blocks(gauged, lmax)
    print(f"\n===== gauge c_N={c_n} (leak {leak:.1e}) =====")
    for m in (-2, -1, 0, 1, 2):
        cand = candidate_block(lmax, abs(m), kappa, kz, rule.weights, L,
                               True, 1.0, 1.0, 1.0)
        if m < 0:
            cand = _flip_cross_blocks(cand)
        ref = oblocks[m]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.abs(ref) > 1e-12 * np.max(np.abs(ref)),
                             cand / ref, np.nan)
        print(f"\n-- m={m}: cand/oracle (src_parity=(-1)^l, q=+1,+1, g=+1)")
        print(ratio)
