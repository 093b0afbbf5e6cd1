"""Acceptance suite: the ten headline checks, one test per criterion.

Each test prints a PASS line once its assertions hold (run with ``-s`` to
see them live); the test name carries the criterion number so the plain
``pytest -v`` listing doubles as the pass/fail report.
"""

import time

import numpy as np
import pytest

from spincat.cli import main
from spincat.measurement import (
    acquire_fid,
    cat_signature,
    mq_order_scan,
    peak_census,
    spectrum,
)
from spincat.propagate import dense_propagator, expm_action
from spincat.relaxation import (
    MEASURED_CAT_LIFETIME_S,
    RelaxationModel,
    apply_dephasing,
    default_model,
    dephase_rate,
    lifetime_experiment,
)
from spincat.sequences import (
    CatRotation,
    Delay,
    EffectiveDQ,
    HardPulse,
    PulseSequence,
    aht_convergence,
    build_cat_protocol,
    cat_state,
    run_final,
)
from spincat.states import (
    basis_state,
    coherence_profile,
    fidelity,
    labeled_state,
)
from spincat.systems import (
    HET_PHASE_TIME,
    Channel,
    SpinSystem,
    build_preset,
    free_hamiltonian,
    het_coupling_sum,
)

B12 = build_preset("benzene12")
B6 = build_preset("benzene6")


def report(n, text):
    print(f"\nACCEPTANCE {n:2d}: {text} ... PASS")


def test_criterion_01_cat_state_construction():
    t0 = time.perf_counter()
    system = build_preset("benzene12")  # cold caches: timing counts the build
    proto = build_cat_protocol(system, "ideal_dq")
    state_e = proto.run_steps("BCDE")["E"]
    elapsed = time.perf_counter() - t0

    target = cat_state(system)
    fid = fidelity(state_e, target)
    prof = coherence_profile(state_e, 12)
    assert fid >= 0.9999
    assert prof[12 + 12] == pytest.approx(0.25, abs=1e-6)
    assert prof[12 - 12] == pytest.approx(0.25, abs=1e-6)
    assert elapsed < 10.0
    report(1, f"A-E cat fidelity {fid:.6f}, 12Q weights "
              f"{prof[24]:.8f}/{prof[0]:.8f}, {elapsed:.2f} s")


def test_criterion_02_step_d_phase_factors():
    proto = build_cat_protocol(B12, "ideal_dq")
    psi = proto.run_steps("BCD")["D"]
    idx = [0, B12.channel_mask("1H"), B12.channel_mask("13C"), 4095]
    amps = np.array([psi[i] for i in idx])
    target = np.array([1.0, -1j, -1j, 1.0]) / 2.0
    phase = amps[0] / abs(amps[0])
    dev = np.abs(amps / phase - target).max()
    assert dev < 1e-8
    report(2, f"step-D amplitudes match (1,-i,-i,1)/2, max dev {dev:.2e}")


def test_criterion_03_tau_calibration():
    h = free_hamiltonian(B12)
    tau = HET_PHASE_TIME
    up = expm_action(h, labeled_state("u", "u", B12), tau)
    down = expm_action(h, labeled_state("d", "u", B12), tau)
    acc = np.angle(up[0]) - np.angle(down[B12.channel_mask("1H")])
    dev = abs(abs(((acc + np.pi) % (2.0 * np.pi)) - np.pi) - np.pi)
    assert dev < 1e-6
    assert het_coupling_sum(B12) * 2.0 * tau == pytest.approx(1.0, rel=1e-6)
    report(3, f"proton 6Q phase after tau = pi (dev {dev:.2e})")


def test_criterion_04_round_trip():
    proto = build_cat_protocol(B12, "ideal_dq")
    fid_ideal = fidelity(proto.run_steps("BCDEFGHIJ")["J"], proto.initial)
    assert fid_ideal >= 0.9999

    fids = []
    for factor in (1, 3, 10):  # one decade of cycle times
        p = build_cat_protocol(B12, "pulse_train",
                               {"cycles_c": 10 * factor, "cycles_h": 10 * factor})
        fids.append(fidelity(p.run_steps("BCDEFGHIJ")["J"], p.initial))
    assert fids[0] >= 0.95
    assert fids[0] < fids[1] < fids[2]
    report(4, f"round trip: ideal {fid_ideal:.6f}; train {fids[0]:.6f} -> "
              f"{fids[2]:.8f} over a cycle-time decade")


def test_criterion_05_spectral_signatures():
    spec_dd = spectrum(acquire_fid(labeled_state("d", "d", B12), B12, "1H"))
    spec_uu = spectrum(acquire_fid(labeled_state("u", "u", B12), B12, "1H"))
    peaks_dd = peak_census(spec_dd, 0.1)
    peaks_uu = peak_census(spec_uu, 0.1)
    assert len(peaks_dd) == 1
    assert len(peaks_uu) == 1
    assert peaks_uu[0][0] == pytest.approx(-peaks_dd[0][0], rel=1e-6)
    assert peaks_uu[0][1].real == pytest.approx(-peaks_dd[0][1].real, rel=1e-6)

    cat = build_cat_protocol(B12).run_steps("BCDE")["E"]
    spec_cat = spectrum(acquire_fid(cat, B12, "1H"))
    sig = cat_signature(spec_cat, spec_dd, spec_uu, tolerance=1e-6)
    assert sig.passed
    report(5, f"1 peak each, mirrored/sign-flipped; cat deviation "
              f"{sig.max_deviation:.2e}")


def test_criterion_06_aht_convergence():
    tcs = np.geomspace(2e-4, 2e-3, 7)
    smallest = {}
    for cycle in ("eight", "sixteen"):
        devs = aht_convergence(B6, "1H", cycle, tcs)
        slope = np.polyfit(np.log(tcs), np.log(devs), 1)[0]
        assert slope >= 1.8
        assert np.all(np.diff(devs) > 0)
        smallest[cycle] = devs[0]
        assert devs[0] < 1e-3  # same double-quantum target for both cycles
    report(6, f"log-log slopes >= 1.8; smallest-cycle deviations "
              f"{smallest['eight']:.2e} / {smallest['sixteen']:.2e}")


def test_criterion_07_sparse_dense_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        coup = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                coup[i, j] = coup[j, i] = rng.uniform(-300.0, 300.0)
        n_ch = int(rng.integers(1, 3))
        channels = tuple(Channel(lb, rng.uniform(-40.0, 40.0))
                         for lb in ("1H", "13C")[:n_ch])
        system = SpinSystem(channels,
                            tuple(int(rng.integers(0, n_ch)) for _ in range(n)),
                            coup, "random")
        h = free_hamiltonian(system)
        psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi /= np.linalg.norm(psi)
        t = rng.uniform(0.0, 0.05)
        err = np.abs(expm_action(h, psi, t)
                     - dense_propagator(h, t) @ psi).max()
        worst = max(worst, err)
    assert worst < 1e-9
    report(7, f"100 randomized 2-4 spin trials, worst amplitude error {worst:.2e}")


def test_criterion_08_mq_scan_cross_check():
    tau6 = 1e-3
    prep6 = PulseSequence((CatRotation("1H", np.pi / 4.0, np.pi / 2.0),
                           Delay(tau6), EffectiveDQ("1H", 1.5e-3, 1),
                           HardPulse("1H", 0.4, 0.1)))
    init6 = basis_state(63, 6)
    scan6 = mq_order_scan(prep6, B6, init6, 16)
    prof6 = coherence_profile(run_final(prep6, init6, B6), 6)
    dev = np.abs(scan6.amplitudes - prof6).max()
    assert dev < 1e-6

    proto = build_cat_protocol(B12)
    scan12 = mq_order_scan(proto.sequence("BCDE"), B12, proto.initial, 32)
    offcenter = {q: scan12.weight(q) for q in range(-12, 13) if q != 0}
    assert scan12.weight(12) == pytest.approx(0.25, abs=1e-6)
    assert scan12.weight(-12) == pytest.approx(0.25, abs=1e-6)
    others = max(abs(v) for q, v in offcenter.items() if abs(q) != 12)
    assert others < 1e-6  # |q| = 12 dominates every other nonzero order
    report(8, f"N=6 scan matches profile (dev {dev:.2e}); N=12 content "
              f"0.25/0.25 at q = +-12")


def test_criterion_09_relaxation_properties():
    rng = np.random.default_rng(7)
    s4 = SpinSystem((Channel("1H"),), (0,) * 4, np.zeros((4, 4)))
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    m = default_model()
    once = apply_dephasing(rho, 0.03, m, s4)
    twice = apply_dephasing(apply_dephasing(rho, 0.015, m, s4), 0.015, m, s4)
    assert np.abs(once - twice).max() < 1e-12          # semigroup
    assert abs(np.trace(once) - 1.0) < 1e-12           # trace preserved
    uniform = RelaxationModel(t2={"1H": 0.25, "13C": 0.25})
    r1 = dephase_rate((4094, 4095), uniform, B12)
    r6 = dephase_rate((B12.channel_mask("1H"), 4095), uniform, B12)
    r12 = dephase_rate((0, 4095), uniform, B12)
    assert r12 > r6 > r1                               # order monotonicity

    proto = build_cat_protocol(B12)
    delays = [0.002 * k for k in range(1, 9)]
    injected = RelaxationModel(t2={"1H": 0.1, "13C": 0.1})
    curve = lifetime_experiment(proto, delays, "cat_coherence", injected)
    assert curve.time_constant == pytest.approx(1.0 / 120.0, rel=0.02)

    predicted = lifetime_experiment(proto, delays, "cat_coherence",
                                    default_model())
    assert predicted.time_constant == pytest.approx(21.2e-3, rel=0.02)
    lo, hi = MEASURED_CAT_LIFETIME_S
    assert not lo <= predicted.time_constant <= hi  # the documented mismatch
    report(9, f"semigroup/trace/monotonicity hold; injected rate recovered; "
              f"model 12Q lifetime {predicted.time_constant * 1e3:.2f} ms vs "
              f"measured {lo * 1e3:.1f}-{hi * 1e3:.1f} ms (reported side by side)")


def test_criterion_10_determinism(tmp_path):
    out = tmp_path / "out"
    cfg_file = tmp_path / "det.cfg"
    cfg_file.write_text(
        "system preset benzene12\nexperiment catdemo\n"
        f"out {out}\n")
    names = ("catdemo_report.txt", "profile_E.csv", "state_cat_spectrum.csv",
             "state_dd_fid.csv", "config_echo.txt")
    assert main(["catdemo", "--config", str(cfg_file)]) == 0
    first = {n: (out / n).read_bytes() for n in names}
    assert main(["catdemo", "--config", str(cfg_file)]) == 0
    for n in names:
        assert (out / n).read_bytes() == first[n]
    report(10, "repeated catdemo runs produce bit-identical files")
