"""Line-oriented run configuration: parsing, defaults, canonical echo.

A config is plain text, one ``keyword arguments...`` pair per line, ``#``
comments, case-insensitive keywords.  Unknown keywords are hard errors with
the offending line number -- there is no silent typo tolerance.  Parsing
materializes every default into the returned :class:`RunConfig`, and
:func:`echo_config` renders that object back into a complete, canonical
config text, so ``parse(echo(parse(text)))`` equals ``parse(text)``.

Recognized keys::

    experiment run|spectrum|catdemo|mqscan|lifetime|ahtcheck
    system preset <name> | system spins <n>
    channel <label> <offset_hz>        # explicit systems
    spin <index> <channel-label>       # explicit systems
    coupling <i> <j> <hz>              # explicit systems
    offset <label> <hz>                # override a preset offset
    scale <x>                          # overall coupling multiplier
    mode ideal|train
    epsilon <x>                        # pseudopure purity fraction
    initial dd|uu|ud|du                # proton/carbon extreme labels
    sequence <path>                    # sequence file (text format)
    seq <event line>                   # inline sequence, repeatable
    observe <channel>
    tip <deg> | dwell <s> | points <n> | broaden <hz> | threshold <frac>
    orders <K>                         # phase increments for mqscan
    delays <s,s,...>                   # lifetime sweep
    observable cat_coherence|cat_diagonal|six_q
    t1 <channel> <s> | t2 <channel> <s>
    dephasing independent|collective
    fdelay <s>                         # step-F duration
    cycles <channel> <n> | cycletime <channel> <s>
    ahtgrid <s,s,...>                  # cycle times for ahtcheck
    out <dir>
    header on|off
    seed <n>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .systems import SpinSystem, Channel, build_preset

__all__ = ["ConfigError", "RunConfig", "parse_config", "echo_config",
           "build_system"]

EXPERIMENTS = ("run", "spectrum", "catdemo", "mqscan", "lifetime", "ahtcheck")


class ConfigError(ValueError):
    """Malformed configuration text or values."""


@dataclass
class RunConfig:
    """Fully materialized run description; every field has a concrete value
    after :func:`parse_config`."""

    experiment: str = ""
    preset: str = "benzene12"
    explicit_spins: int = 0
    explicit_channels: list = field(default_factory=list)   # (label, offset)
    explicit_assign: list = field(default_factory=list)     # (spin, label)
    explicit_couplings: list = field(default_factory=list)  # (i, j, hz)
    offsets: dict = field(default_factory=dict)
    scale: float = 1.0
    mode: str = "ideal"
    epsilon: float = 1.0
    initial: str = "dd"
    sequence_file: str = ""
    sequence_lines: list = field(default_factory=list)
    observe: str = "1H"
    tip_deg: float = 5.0
    dwell_s: float = 0.0           # 0 = automatic
    points: int = 4096
    broaden_hz: float = -1.0       # -1 = automatic, 0 = off
    threshold: float = 0.1
    orders: int = 32
    delays: list = field(default_factory=lambda: [0.002 * k for k in range(1, 9)])
    observable: str = "cat_coherence"
    t1: dict = field(default_factory=lambda: {"1H": 1.7, "13C": 2.5})
    t2: dict = field(default_factory=lambda: {"1H": 0.25, "13C": 0.26})
    dephasing: str = "independent"
    fdelay: float = 0.0
    cycles: dict = field(default_factory=lambda: {"1H": 10, "13C": 10})
    cycle_time: dict = field(default_factory=dict)  # empty = calibrated
    ahtgrid: list = field(default_factory=lambda: [
        float(x) for x in np.geomspace(2e-4, 2e-3, 7)])
    out: str = "."
    header: bool = True
    seed: int = 0

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {', '.join(EXPERIMENTS)}; "
                f"got {self.experiment!r}"
            )
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.mode not in ("ideal", "train"):
            raise ConfigError(f"mode must be ideal or train, got {self.mode!r}")
        if self.initial not in ("dd", "uu", "ud", "du"):
            raise ConfigError(f"initial must be dd/uu/ud/du, got {self.initial!r}")
        if self.observable not in ("cat_coherence", "cat_diagonal", "six_q"):
            raise ConfigError(f"unknown observable {self.observable!r}")
        if self.dephasing not in ("independent", "collective"):
            raise ConfigError(f"unknown dephasing {self.dephasing!r}")


def _float(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ConfigError(f"line {lineno}: {what} expects a number, got {tok!r}")


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ConfigError(f"line {lineno}: {what} expects an integer, got {tok!r}")


def parse_config(text: str) -> RunConfig:
    """Parse config text into a fully populated :class:`RunConfig`.

    Raises :class:`ConfigError` naming the line for any unknown keyword,
    malformed value, or missing experiment.
    """
    cfg = RunConfig()
    saw_experiment = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0].lower()
        args = parts[1:]

        def need(n, usage):
            if len(args) != n:
                raise ConfigError(f"line {lineno}: usage: {usage}")

        if kw == "experiment":
            need(1, "experiment <name>")
            cfg.experiment = args[0].lower()
            saw_experiment = True
        elif kw == "system":
            need(2, "system preset <name> | system spins <n>")
            if args[0].lower() == "preset":
                cfg.preset = args[1]
                cfg.explicit_spins = 0
            elif args[0].lower() == "spins":
                cfg.explicit_spins = _int(args[1], lineno, "system spins")
                cfg.preset = ""
            else:
                raise ConfigError(f"line {lineno}: system expects preset|spins")
        elif kw == "channel":
            need(2, "channel <label> <offset_hz>")
            cfg.explicit_channels.append(
                (args[0], _float(args[1], lineno, "channel offset")))
        elif kw == "spin":
            need(2, "spin <index> <channel-label>")
            cfg.explicit_assign.append((_int(args[0], lineno, "spin index"), args[1]))
        elif kw == "coupling":
            need(3, "coupling <i> <j> <hz>")
            cfg.explicit_couplings.append(
                (_int(args[0], lineno, "coupling i"),
                 _int(args[1], lineno, "coupling j"),
                 _float(args[2], lineno, "coupling value")))
        elif kw == "offset":
            need(2, "offset <label> <hz>")
            cfg.offsets[args[0]] = _float(args[1], lineno, "offset")
        elif kw == "scale":
            need(1, "scale <x>")
            cfg.scale = _float(args[0], lineno, "scale")
        elif kw == "mode":
            need(1, "mode ideal|train")
            cfg.mode = args[0].lower()
        elif kw == "epsilon":
            need(1, "epsilon <x>")
            cfg.epsilon = _float(args[0], lineno, "epsilon")
        elif kw == "initial":
            need(1, "initial dd|uu|ud|du")
            cfg.initial = args[0].lower()
        elif kw == "sequence":
            need(1, "sequence <path>")
            cfg.sequence_file = args[0]
        elif kw == "seq":
            if not args:
                raise ConfigError(f"line {lineno}: empty seq line")
            cfg.sequence_lines.append(" ".join(args))
        elif kw == "observe":
            need(1, "observe <channel>")
            cfg.observe = args[0]
        elif kw == "tip":
            need(1, "tip <deg>")
            cfg.tip_deg = _float(args[0], lineno, "tip")
        elif kw == "dwell":
            need(1, "dwell <s>")
            cfg.dwell_s = _float(args[0], lineno, "dwell")
        elif kw == "points":
            need(1, "points <n>")
            cfg.points = _int(args[0], lineno, "points")
        elif kw == "broaden":
            need(1, "broaden <hz>")
            cfg.broaden_hz = _float(args[0], lineno, "broaden")
        elif kw == "threshold":
            need(1, "threshold <frac>")
            cfg.threshold = _float(args[0], lineno, "threshold")
        elif kw == "orders":
            need(1, "orders <K>")
            cfg.orders = _int(args[0], lineno, "orders")
        elif kw == "delays":
            need(1, "delays <s,s,...>")
            cfg.delays = [_float(t, lineno, "delays") for t in args[0].split(",")]
        elif kw == "observable":
            need(1, "observable <name>")
            cfg.observable = args[0].lower()
        elif kw in ("t1", "t2"):
            need(2, f"{kw} <channel> <s>")
            val = math.inf if args[1].lower() in ("inf", "infinity") else _float(
                args[1], lineno, kw)
            getattr(cfg, kw)[args[0]] = val
        elif kw == "dephasing":
            need(1, "dephasing independent|collective")
            cfg.dephasing = args[0].lower()
        elif kw == "fdelay":
            need(1, "fdelay <s>")
            cfg.fdelay = _float(args[0], lineno, "fdelay")
        elif kw == "cycles":
            need(2, "cycles <channel> <n>")
            cfg.cycles[args[0]] = _int(args[1], lineno, "cycles")
        elif kw == "cycletime":
            need(2, "cycletime <channel> <s>")
            cfg.cycle_time[args[0]] = _float(args[1], lineno, "cycletime")
        elif kw == "ahtgrid":
            need(1, "ahtgrid <s,s,...>")
            cfg.ahtgrid = [_float(t, lineno, "ahtgrid") for t in args[0].split(",")]
        elif kw == "out":
            need(1, "out <dir>")
            cfg.out = args[0]
        elif kw == "header":
            need(1, "header on|off")
            if args[0].lower() not in ("on", "off"):
                raise ConfigError(f"line {lineno}: header expects on|off")
            cfg.header = args[0].lower() == "on"
        elif kw == "seed":
            need(1, "seed <n>")
            cfg.seed = _int(args[0], lineno, "seed")
        else:
            raise ConfigError(f"line {lineno}: unknown keyword {parts[0]!r}")

    if not saw_experiment:
        raise ConfigError("missing experiment line")
    cfg.validate()
    return cfg


def echo_config(cfg: RunConfig) -> str:
    """Canonical, complete text for a config (defaults included)."""
    lines = [f"experiment {cfg.experiment}"]
    if cfg.preset:
        lines.append(f"system preset {cfg.preset}")
    else:
        lines.append(f"system spins {cfg.explicit_spins}")
        for label, off in cfg.explicit_channels:
            lines.append(f"channel {label} {off!r}")
        for spin, label in cfg.explicit_assign:
            lines.append(f"spin {spin} {label}")
        for i, j, hz in cfg.explicit_couplings:
            lines.append(f"coupling {i} {j} {hz!r}")
    for label in sorted(cfg.offsets):
        lines.append(f"offset {label} {cfg.offsets[label]!r}")
    lines.append(f"scale {cfg.scale!r}")
    lines.append(f"mode {cfg.mode}")
    lines.append(f"epsilon {cfg.epsilon!r}")
    lines.append(f"initial {cfg.initial}")
    if cfg.sequence_file:
        lines.append(f"sequence {cfg.sequence_file}")
    for sl in cfg.sequence_lines:
        lines.append(f"seq {sl}")
    lines.append(f"observe {cfg.observe}")
    lines.append(f"tip {cfg.tip_deg!r}")
    lines.append(f"dwell {cfg.dwell_s!r}")
    lines.append(f"points {cfg.points}")
    lines.append(f"broaden {cfg.broaden_hz!r}")
    lines.append(f"threshold {cfg.threshold!r}")
    lines.append(f"orders {cfg.orders}")
    lines.append("delays " + ",".join(repr(d) for d in cfg.delays))
    lines.append(f"observable {cfg.observable}")
    for label in sorted(cfg.t1):
        lines.append(f"t1 {label} {'inf' if math.isinf(cfg.t1[label]) else repr(cfg.t1[label])}")
    for label in sorted(cfg.t2):
        lines.append(f"t2 {label} {'inf' if math.isinf(cfg.t2[label]) else repr(cfg.t2[label])}")
    lines.append(f"dephasing {cfg.dephasing}")
    lines.append(f"fdelay {cfg.fdelay!r}")
    for label in sorted(cfg.cycles):
        lines.append(f"cycles {label} {cfg.cycles[label]}")
    for label in sorted(cfg.cycle_time):
        lines.append(f"cycletime {label} {cfg.cycle_time[label]!r}")
    lines.append("ahtgrid " + ",".join(repr(t) for t in cfg.ahtgrid))
    lines.append(f"out {cfg.out}")
    lines.append(f"header {'on' if cfg.header else 'off'}")
    lines.append(f"seed {cfg.seed}")
    return "\n".join(lines) + "\n"


def build_system(cfg: RunConfig) -> SpinSystem:
    """Instantiate the system a config describes."""
    if cfg.preset:
        system = build_preset(cfg.preset, scale=None if cfg.scale == 1.0 else cfg.scale)
        if cfg.offsets:
            system = system.with_offsets(cfg.offsets)
        return system
    n = cfg.explicit_spins
    if n <= 0:
        raise ConfigError("explicit system needs 'system spins <n>'")
    if not cfg.explicit_channels:
        raise ConfigError("explicit system needs at least one channel line")
    labels = [c[0] for c in cfg.explicit_channels]
    channels = tuple(
        Channel(label, cfg.offsets.get(label, off))
        for label, off in cfg.explicit_channels
    )
    channel_of = [0] * n
    assigned = set()
    for spin, label in cfg.explicit_assign:
        if label not in labels:
            raise ConfigError(f"spin {spin} assigned to unknown channel {label!r}")
        if not 0 <= spin < n:
            raise ConfigError(f"spin index {spin} out of range")
        channel_of[spin] = labels.index(label)
        assigned.add(spin)
    coup = np.zeros((n, n))
    for i, j, hz in cfg.explicit_couplings:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ConfigError(f"bad coupling pair ({i}, {j})")
        coup[i, j] = coup[j, i] = hz * cfg.scale
    return SpinSystem(channels, tuple(channel_of), coup, name="custom")
