"""
Joint manifold ascent versus block-coordinate ascent
====================================================

Both methods maximize the approximate bound over the analog phases and the
digital precoder on the power sphere, from the same starting point. The
joint method steps in both variables at once; the baseline alternates.
"""
import numpy as np

from mmhybrid import algorithm1, build_signal_set, build_statistical_csi, fixture_angles
from mmhybrid import jensen_gap, make_rng
from mmhybrid.optimizer import algorithm2, block_coordinate_ascent, initial_digital

csi = build_statistical_csi(fixture_angles("example2"), Nr=16, Nt=64)
signals = build_signal_set("qpsk", 4)
sigma2 = 10.0 ** 2.25                      # SNR = -22.5 dB

design = algorithm1(csi.A_t, 4, make_rng(2))
Phi0 = np.angle(design.F_bar)
B0 = initial_digital(csi.A_t, design.F_bar, 4)

joint = algorithm2(csi, design.partition, Phi0, B0, signals, sigma2, eps=0.0, max_iter=60)
block = block_coordinate_ascent(csi, design.partition, Phi0, B0, signals, sigma2,
                                eps=0.0, max_iter=60)

shift = jensen_gap(csi.Nr)
print(f"{'iter':>4} {'joint':>9} {'block':>9}")
for i in (0, 1, 2, 5, 10, 16, 30, 60):
    print(f"{i:4d} {joint.objective_trace[i] + shift:9.5f} {block.objective_trace[i] + shift:9.5f}")

# With its own line search in each block the alternating baseline is not
# slow here: it settles within a few iterations, and the joint method
# catches up by about iteration 30.
# Objective traces never decrease: the line search only accepts a step
# once it meets the sufficient-increase test.
print("\nmonotone violations:", joint.monotone_violations, block.monotone_violations)
