"""Walk through the twelve-spin cat-state protocol step by step.

Builds the fully labeled benzene system, runs the preparation chain
A (pseudopure |d>_C |d>_H) -> B (carbon superposition) -> C (proton
superposition) -> D (heteronuclear phase delay) -> E (cat state), prints
the fidelity of each intermediate against its closed-form target, then
undoes everything with the time-reversed steps G-J and checks that the
initial state comes back.
"""

import numpy as np

from spincat import (
    build_cat_protocol,
    build_preset,
    cat_state,
    coherence_profile,
    fidelity,
    het_coupling_sum,
)

system = build_preset("benzene12")
tau = 1.0 / (2.0 * het_coupling_sum(system))

print("system:", system.name)
print(f"  summed heteronuclear coupling: {het_coupling_sum(system):.2f} Hz")
print(f"  phase-delay unit tau = {tau * 1e6:.1f} us")
print(f"  strongest couplings [Hz]: C-H {system.couplings[0, 6]:.1f}, "
      f"C-C {system.couplings[6, 7]:.1f}, H-H {system.couplings[0, 1]:.1f}")
print()

protocol = build_cat_protocol(system, "ideal_dq")
states = protocol.run_steps("BCDE")

formulas = {
    "A": "|d>_C |d>_H",
    "B": "(|u>_C + |d>_C)|d>_H / sqrt(2)",
    "C": "(|u>_C + |d>_C)(|u>_H + |d>_H) / 2",
    "D": "(|uu> - i|ud> - i|du> + |dd>) / 2",
    "E": "(|u>_C|u>_H + |d>_C|d>_H) / sqrt(2)",
}
print("preparation chain:")
for step in "ABCDE":
    fid = fidelity(states[step], protocol.expected[step])
    print(f"  after {step}: fidelity {fid:.12f} vs {formulas[step]}")

# the four extreme amplitudes after the delay show the -i phase factors
psi_d = states["D"]
picks = [0, system.channel_mask("1H"), system.channel_mask("13C"), 4095]
amps = np.array([psi_d[i] for i in picks]) / psi_d[0] * 0.5
print("\nstep-D amplitudes on (uu, ud, du, dd), global phase removed:")
print(" ", np.round(amps, 10))

profile = coherence_profile(states["E"], system.n_spins)
print("\ncoherence orders of the cat state:")
for q in range(-12, 13):
    w = profile[q + 12]
    if w > 1e-9:
        print(f"  q = {q:+3d}: weight {w:.6f}")
print("the +-12 entries are the twelve-quantum coherence; a classical")
print("mixture of |uu> and |dd> would put all its weight at q = 0.")

final = protocol.run_steps("BCDEFGHIJ")["J"]
print(f"\nround trip B-E then G-J: fidelity to the initial state "
      f"{fidelity(final, protocol.initial):.12f}")
print(f"cat fidelity vs closed form: "
      f"{fidelity(states['E'], cat_state(system)):.12f}")
