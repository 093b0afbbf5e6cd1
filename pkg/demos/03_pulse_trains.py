"""Multiple-pulse double-quantum cycles vs their effective Hamiltonian.

Shows three things on the six-spin ring and the twelve-spin system:

1. the propagator of one eight- or sixteen-pulse cycle converges to
   exp(-i H_DQ t_c) as the cycle time shrinks (cubic in t_c for these
   time-symmetric cycles);
2. a bare double-quantum block cannot fully convert the all-down state
   into an equal superposition of the two extremes: the calibration scan
   reports the honest transfer ceiling;
3. the full pulse-train protocol still round-trips cleanly, and does so
   better the shorter the cycles.
"""

import numpy as np

from spincat import (
    aht_convergence,
    build_cat_protocol,
    build_preset,
    calibrate_dq_duration,
    coherence_profile,
    fidelity,
)

b6 = build_preset("benzene6")
b12 = build_preset("benzene12")

print("cycle-propagator deviation from exp(-i H_DQ t_c), six-spin ring:")
tcs = np.geomspace(2e-4, 2e-3, 7)
dev8 = aht_convergence(b6, "1H", "eight", tcs)
dev16 = aht_convergence(b6, "1H", "sixteen", tcs)
print(f"  {'t_c [ms]':>10s} {'eight':>12s} {'sixteen':>12s}")
for tc, d8, d16 in zip(tcs, dev8, dev16):
    print(f"  {tc * 1e3:10.3f} {d8:12.3e} {d16:12.3e}")
slope8 = np.polyfit(np.log(tcs), np.log(dev8), 1)[0]
slope16 = np.polyfit(np.log(tcs), np.log(dev16), 1)[0]
print(f"  log-log slopes: {slope8:.2f} and {slope16:.2f} "
      "(time-symmetric cycles: cubic)")

print("\ncalibrated double-quantum blocks (equal-superposition transfer):")
for system, channel in ((b12, "13C"), (b12, "1H")):
    t_block, achieved = calibrate_dq_duration(system, channel)
    print(f"  {channel:4s}: best block {t_block * 1e3:7.3f} ms, "
          f"transfer fidelity {achieved:.4f}")
print("  the ceiling below 1 is leakage into intermediate states; the")
print("  idealized protocol mode replaces the block by the selective")
print("  extreme-pair rotation the train is engineered to approximate.")

print("\npulse-train round trip vs cycle count (fixed block duration):")
for factor in (1, 3, 10):
    p = build_cat_protocol(b12, "pulse_train",
                           {"cycles_c": 10 * factor, "cycles_h": 10 * factor})
    states = p.run_steps("BCDEFGHIJ")
    rt = fidelity(states["J"], p.initial)
    w12 = coherence_profile(states["E"], 12)[24]
    print(f"  {10 * factor:4d} cycles: round trip {rt:.8f}, "
          f"12Q weight after E {w12:.4f}")
