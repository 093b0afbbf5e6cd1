"""Command-line entry point: run one experiment per invocation.

Usage::

    spincat <experiment> [--config FILE] [--out DIR] [--mode ideal|train]
            [--no-header]
    spincat plotscript [--out DIR]

The experiment name is the subcommand; flags override the corresponding
config keys (never the other way around).  Every run writes the fully
materialized config next to its results, and all output files are
bit-identical across runs of the same config: the optional header line
carries only the tool version, experiment name and a config hash.

Exit codes: 0 success, 2 configuration error, 3 physics/dimension error,
4 fit failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_system, echo_config, parse_config, EXPERIMENTS
from .measurement import (
    FitError,
    acquire_fid,
    cat_signature,
    mq_order_scan,
    peak_census,
    spectrum,
)
from .relaxation import (
    MEASURED_CAT_LIFETIME_S,
    RelaxationModel,
    lifetime_experiment,
)
from .sequences import (
    aht_convergence,
    build_cat_protocol,
    parse_sequence,
    run,
    run_final,
)
from .states import (
    coherence_profile,
    fidelity,
    labeled_state,
    pseudopure,
)
from .systems import DimensionError

__all__ = ["main", "execute"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_FIT = 4


def _header(cfg: RunConfig) -> str:
    digest = hashlib.sha256(echo_config(cfg).encode()).hexdigest()[:16]
    return f"# spincat {__version__} experiment={cfg.experiment} config={digest}\n"


class _Out:
    """Output directory helper that prepends the deterministic header."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def write(self, name: str, body: str, header: bool | None = None):
        use_header = self.cfg.header if header is None else header
        text = (_header(self.cfg) if use_header else "") + body
        path = self.dir / name
        path.write_text(text)
        self.written.append(name)
        return path


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real!r},{x.imag!r}"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _csv(rows, columns) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _initial_state(cfg: RunConfig, system):
    proton, carbon = cfg.initial[1], cfg.initial[0]  # e.g. "dd" = d_C d_H
    psi = labeled_state(proton, carbon, system)
    if cfg.epsilon < 1.0:
        return pseudopure(psi, cfg.epsilon)
    return psi


def _load_sequence(cfg: RunConfig):
    if cfg.sequence_file:
        text = Path(cfg.sequence_file).read_text()
    elif cfg.sequence_lines:
        text = "\n".join(cfg.sequence_lines)
    else:
        raise ConfigError("this experiment needs a sequence (file or seq lines)")
    try:
        return parse_sequence(text, name="config")
    except ValueError as exc:
        raise ConfigError(str(exc))


def _model(cfg: RunConfig) -> RelaxationModel:
    return RelaxationModel(t1=dict(cfg.t1), t2=dict(cfg.t2),
                           dephasing=cfg.dephasing)


def _protocol(cfg: RunConfig, system):
    mode = "ideal_dq" if cfg.mode == "ideal" else "pulse_train"
    params = {"f_delay": cfg.fdelay}
    if mode == "pulse_train":
        params["cycles_c"] = cfg.cycles.get("13C", 10)
        params["cycles_h"] = cfg.cycles.get("1H", 10)
        if "13C" in cfg.cycle_time:
            params["cycle_time_c"] = cfg.cycle_time["13C"]
        if "1H" in cfg.cycle_time:
            params["cycle_time_h"] = cfg.cycle_time["1H"]
    return build_cat_protocol(system, mode, params)


def _spectrum_of(cfg: RunConfig, state, system):
    fid = acquire_fid(
        state, system, cfg.observe,
        tip_angle=math.radians(cfg.tip_deg),
        dwell=cfg.dwell_s or None,
        n_points=cfg.points,
    )
    lb = None if cfg.broaden_hz < 0 else cfg.broaden_hz
    return fid, spectrum(fid, lb_hz=lb)


def _write_spectrum(out: _Out, stem: str, fid, spec):
    out.write(f"{stem}_fid.csv", _csv(
        ((t, s.real, s.imag) for t, s in zip(fid.times, fid.samples)),
        ("time_s", "real", "imag")))
    out.write(f"{stem}_spectrum.csv", _csv(
        ((f, a.real, a.imag, abs(a)) for f, a in zip(spec.freqs, spec.amps)),
        ("freq_hz", "real", "imag", "abs")))


def _kv_report(pairs) -> str:
    return "\n".join(f"{k} = {_fmt(v)}" for k, v in pairs) + "\n"


# ---------------------------------------------------------------------------
# experiments

def _exp_run(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    seq = _load_sequence(cfg)
    initial = _initial_state(cfg, system)
    model = _model(cfg)
    trajectory = run(seq, initial, system, relax_model=model, promote=True)
    rows = []
    for k, state in enumerate(trajectory):
        label = "initial" if k == 0 else type(seq.events[k - 1]).__name__
        prof = coherence_profile(state, system.n_spins)
        dominant = int(np.argmax(prof)) - system.n_spins
        rows.append((k, label, fidelity(trajectory[0], state), dominant))
    out.write("trajectory.csv", _csv(rows, ("step", "event", "fidelity_to_initial",
                                            "dominant_order")))
    prof = coherence_profile(trajectory[-1], system.n_spins)
    out.write("final_profile.csv", _csv(
        ((q - system.n_spins, w) for q, w in enumerate(prof)),
        ("order", "weight")))
    return EXIT_OK


def _exp_spectrum(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    state = _initial_state(cfg, system)
    if cfg.sequence_file or cfg.sequence_lines:
        seq = _load_sequence(cfg)
        state = run_final(seq, state, system, relax_model=_model(cfg), promote=True)
    fid, spec = _spectrum_of(cfg, state, system)
    _write_spectrum(out, "acquisition", fid, spec)
    peaks = peak_census(spec, cfg.threshold)
    out.write("peaks.csv", _csv(
        ((f, a.real, a.imag, abs(a)) for f, a in peaks),
        ("freq_hz", "real", "imag", "abs")))
    return EXIT_OK


def _exp_catdemo(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    protocol = _protocol(cfg, system)

    states = protocol.run_steps("BCDE")
    report = []
    for step in "ABCDE":
        expect = protocol.expected.get(step)
        if expect is not None:
            report.append((f"fidelity_step_{step}",
                           fidelity(states[step], expect)))

    prof = coherence_profile(states["E"], system.n_spins)
    n = system.n_spins
    out.write("profile_E.csv", _csv(
        ((q - n, w) for q, w in enumerate(prof)), ("order", "weight")))
    report.append(("weight_plus12", prof[n + 12] if n >= 12 else 0.0))
    report.append(("weight_minus12", prof[n - 12] if n >= 12 else 0.0))

    final = protocol.run_steps("BCDEFGHIJ")["J"]
    roundtrip = fidelity(final, protocol.initial)
    report.append(("roundtrip_fidelity", roundtrip))

    # the four verification spectra
    dd = labeled_state("d", "d", system)
    uu = labeled_state("u", "u", system)
    eps = cfg.epsilon
    fid_dd, spec_dd = _spectrum_of(cfg, pseudopure(dd, eps), system)
    fid_uu, spec_uu = _spectrum_of(cfg, pseudopure(uu, eps), system)
    fid_cat, spec_cat = _spectrum_of(cfg, pseudopure(states["E"], eps), system)
    fid_back, spec_back = _spectrum_of(cfg, pseudopure(final, eps), system)
    _write_spectrum(out, "state_dd", fid_dd, spec_dd)
    _write_spectrum(out, "state_uu", fid_uu, spec_uu)
    _write_spectrum(out, "state_cat", fid_cat, spec_cat)
    _write_spectrum(out, "state_roundtrip", fid_back, spec_back)

    sig = cat_signature(spec_cat, spec_dd, spec_uu)
    report.append(("cat_signature_deviation", sig.max_deviation))
    report.append(("cat_signature_passed", sig.passed))
    report.append(("peaks_dd", len(peak_census(spec_dd, cfg.threshold))))
    report.append(("peaks_uu", len(peak_census(spec_uu, cfg.threshold))))
    out.write("catdemo_report.txt", _kv_report(report))
    return EXIT_OK


def _exp_mqscan(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    if cfg.sequence_file or cfg.sequence_lines:
        prep = _load_sequence(cfg)
        initial = _initial_state(cfg, system)
        if not isinstance(initial, np.ndarray):
            raise ConfigError("mqscan needs a pure initial state (epsilon 1)")
    else:
        protocol = _protocol(cfg, system)
        prep = protocol.sequence("BCDE")
        initial = protocol.initial
    scan = mq_order_scan(prep, system, initial, cfg.orders)
    direct = coherence_profile(run_final(prep, initial, system), system.n_spins)
    out.write("mqscan.csv", _csv(
        ((int(q), a, w) for q, a, w in zip(scan.orders, scan.amplitudes, direct)),
        ("order", "amplitude", "direct_weight")))
    return EXIT_OK


def _exp_lifetime(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    protocol = _protocol(cfg, system)
    model = _model(cfg)
    curve = lifetime_experiment(protocol, cfg.delays, cfg.observable, model, system)
    out.write("decay.csv", _csv(zip(curve.delays, curve.values),
                                ("delay_s", "value")))
    pairs = [
        ("observable", curve.observable),
        ("time_constant_s", curve.time_constant),
        ("amplitude", curve.amplitude),
        ("log_residual", curve.residual),
        ("flagged", curve.flagged),
        ("model_dephasing", model.dephasing),
    ]
    if cfg.observable == "cat_coherence":
        # model consequence vs the directly measured value: they disagree,
        # and both belong in the record
        lo, hi = MEASURED_CAT_LIFETIME_S
        pairs.append(("measured_reference_range_s", f"{lo!r}..{hi!r}"))
    out.write("fit.txt", _kv_report(pairs))
    if curve.flagged and not math.isinf(curve.time_constant):
        raise FitError(f"decay fit rejected: log residual {curve.residual:.3f}")
    return EXIT_OK


def _exp_ahtcheck(cfg: RunConfig, out: _Out) -> int:
    system = build_system(cfg)
    if system.n_spins > 8:
        raise DimensionError("ahtcheck needs a small system (try benzene6)")
    channel = cfg.observe if any(
        c.label == cfg.observe for c in system.channels) else system.channels[0].label
    tcs = np.asarray(sorted(cfg.ahtgrid), dtype=float)
    dev8 = aht_convergence(system, channel, "eight", tcs)
    dev16 = aht_convergence(system, channel, "sixteen", tcs)
    out.write("ahtcheck.csv", _csv(
        zip(tcs, dev8, dev16), ("cycle_time_s", "dev_eight", "dev_sixteen")))
    slope8 = np.polyfit(np.log(tcs), np.log(dev8), 1)[0]
    slope16 = np.polyfit(np.log(tcs), np.log(dev16), 1)[0]
    out.write("ahtcheck_report.txt", _kv_report([
        ("channel", channel),
        ("slope_eight", slope8),
        ("slope_sixteen", slope16),
        ("dev_eight_smallest", dev8[0]),
        ("dev_sixteen_smallest", dev16[0]),
    ]))
    return EXIT_OK


def _exp_plotscript(out_dir: str) -> int:
    """Emit a gnuplot script covering the CSVs an experiment may have written."""
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    lines = [
        "# gnuplot script for spincat outputs; run from the output directory",
        "set datafile separator ','",
        "set key autotitle columnhead",
    ]
    plots = {
        "acquisition_spectrum.csv": "using 1:2 with lines title 'spectrum (real)'",
        "state_dd_spectrum.csv": "using 1:2 with lines title 'dd (real)'",
        "state_uu_spectrum.csv": "using 1:2 with lines title 'uu (real)'",
        "state_cat_spectrum.csv": "using 1:2 with lines title 'cat (real)'",
        "profile_E.csv": "using 1:2 with impulses title 'coherence orders'",
        "mqscan.csv": "using 1:2 with impulses title 'order scan'",
        "decay.csv": "using 1:2 with linespoints title 'decay'",
        "ahtcheck.csv": "using 1:2 with linespoints title 'eight', '' using 1:3 "
                        "with linespoints title 'sixteen'",
    }
    for fname, style in plots.items():
        lines.append(f"if (system('[ -e {fname} ] && echo 1') eq '1') {{")
        if fname in ("ahtcheck.csv",):
            lines.append("  set logscale xy")
        lines.append(f"  plot '{fname}' {style}")
        lines.append("  pause -1 'press return'")
        if fname in ("ahtcheck.csv",):
            lines.append("  unset logscale xy")
        lines.append("}")
    (path / "plots.gp").write_text("\n".join(lines) + "\n")
    return EXIT_OK


_RUNNERS = {
    "run": _exp_run,
    "spectrum": _exp_spectrum,
    "catdemo": _exp_catdemo,
    "mqscan": _exp_mqscan,
    "lifetime": _exp_lifetime,
    "ahtcheck": _exp_ahtcheck,
}


def execute(cfg: RunConfig) -> int:
    """Run one experiment; writes outputs plus the echoed config."""
    cfg.validate()
    out = _Out(cfg)
    out.write("config_echo.txt", echo_config(cfg), header=False)
    return _RUNNERS[cfg.experiment](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spincat",
        description="Spin-cluster simulator: cat-state protocol, spectra, "
                    "coherence-order scans, relaxation lifetimes.",
        epilog="exit codes: 0 ok, 2 config error, 3 physics/dimension error, "
               "4 fit failure",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS + ("plotscript",):
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file (see docs for the format)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--mode", choices=["ideal", "train"],
                       help="protocol realization (overrides config)")
        p.add_argument("--no-header", action="store_true",
                       help="omit the metadata header line in outputs")
    args = parser.parse_args(argv)

    try:
        if args.experiment == "plotscript":
            return _exp_plotscript(args.out or ".")
        if args.config:
            cfg = parse_config(Path(args.config).read_text())
        else:
            cfg = RunConfig()
        # flags override config
        cfg.experiment = args.experiment
        if args.out:
            cfg.out = args.out
        if args.mode:
            cfg.mode = args.mode
        if args.no_header:
            cfg.header = False
        return execute(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"error: fit: {exc}", file=sys.stderr)
        return EXIT_FIT
    except FileNotFoundError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DimensionError, ValueError, KeyError) as exc:
        print(f"error: physics: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
