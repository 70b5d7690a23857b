"""Run configuration: sectioned ``key = value`` files parsed into a RunSpec.

Example::

    [run]
    command = check
    outdir = out/z2

    [graph]
    kind = lattice
    N = 2
    radius = 60

    [model]
    sigma = 1.8

Every section and key is optional; omitted values take the defaults below.
Unknown sections and keys are rejected with the line they appear on.
"""

import configparser
import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

from .hypothesis import check_thetas

COMMANDS = ("build", "check", "verify-proof", "simulate", "sweep")
GRAPH_KINDS = ("lattice", "cyclic", "product", "file")
METRIC_KINDS = ("default", "euclidean", "natural", "product", "table")


class ConfigError(ValueError):
    """Invalid config; ``section`` and ``key`` locate the offending entry."""

    def __init__(self, message, section=None, key=None):
        super().__init__(message)
        self.section, self.key = section, key


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


def _dt(text):
    text = text.strip()
    return "auto" if text == "auto" else float(text)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunSection:
    command: str = "check"
    outdir: str = "out"
    seed: int = 0


@dataclass(frozen=True)
class GraphSection:
    kind: str = "lattice"
    N: int = 1
    radius: int = 100
    m: int = 5
    K: int = 1
    p: float = 2.0
    measure_rule: str = "sum"
    path: str = ""


@dataclass(frozen=True)
class MetricSection:
    kind: str = "default"
    path: str = ""
    samples: int = 10000


@dataclass(frozen=True)
class ModelSection:
    sigma: float = 2.0
    alpha: float = 1.0
    theta1: float | None = None
    theta2: float | None = None
    x0: str = "origin"


@dataclass(frozen=True)
class PotentialSection:
    time: str = "constant"
    time_scale: float = 1.0
    beta: float = 0.0
    rate: float = 0.0
    space: str = "constant"
    space_scale: float = 1.0
    gamma: float = 0.0


@dataclass(frozen=True)
class CheckSection:
    R0: float = 1.5
    radii: tuple = (4.0, 8.0, 16.0, 32.0)
    times: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


@dataclass(frozen=True)
class VerifySection:
    radii: tuple = (8.0, 16.0)
    s: float = 3.0
    time_points: int = 0
    band_check: bool = False


@dataclass(frozen=True)
class SimulateSection:
    t_max: float = 1000.0
    dt: float | str = "auto"
    scheme: str = "explicit-euler"
    initial: str = "indicator"
    amplitude: float = 0.01
    support: float = 5.0
    blow_up_threshold: float = 1e10
    decay_threshold: float = 1e-14
    boundary_mass_tolerance: float = 1e-8
    reaction_limit: float | None = 0.05
    record_every: int = 1
    confirm: bool = True


@dataclass(frozen=True)
class SweepSection:
    sigmas: tuple = (2.0, 4.0)
    amplitudes: tuple = (0.001, 0.01)


_CONVERTERS = {
    int: int, float: float, str: str, bool: _bool, tuple: _floats,
    float | None: _opt_float, float | str: _dt,
}

SECTIONS = {
    "run": RunSection, "graph": GraphSection, "metric": MetricSection, "model": ModelSection,
    "potential": PotentialSection, "check": CheckSection, "verify": VerifySection,
    "simulate": SimulateSection, "sweep": SweepSection,
}


@dataclass(frozen=True)
class RunSpec:
    run: RunSection = RunSection()
    graph: GraphSection = GraphSection()
    metric: MetricSection = MetricSection()
    model: ModelSection = ModelSection()
    potential: PotentialSection = PotentialSection()
    check: CheckSection = CheckSection()
    verify: VerifySection = VerifySection()
    simulate: SimulateSection = SimulateSection()
    sweep: SweepSection = SweepSection()

    @property
    def command(self) -> str:
        return self.run.command

    @property
    def outdir(self) -> Path:
        return Path(self.run.outdir)

    def replace(self, section: str, **changes) -> "RunSpec":
        part = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: part})


def _converter(f):
    return _CONVERTERS[f.type]


def _line_numbers(text):
    """Map ``(section, key)`` to its line number, first occurrence wins."""
    where, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), lineno)
        elif line and line[0] not in "#;" and section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            where.setdefault((section, key), lineno)
    return where


def parse_config_text(text: str, source: str = "<config>", base: Path | None = None) -> RunSpec:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        msg = exc.message if hasattr(exc, "message") else str(exc)
        prefix = f"{source}:{lineno}" if lineno else source
        raise ConfigError(f"{prefix}: {msg.splitlines()[0]}") from None
    where = _line_numbers(text)

    def fail(section, key, msg):
        lineno = where.get((section, key)) or where.get((section, None))
        raise ConfigError(f"{source}:{lineno}: {msg}" if lineno else f"{source}: {msg}")

    parts = {}
    for section in parser.sections():
        cls = SECTIONS.get(section)
        if cls is None:
            fail(section, None, f"unknown section [{section}]")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in fields:
                fail(section, key, f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _converter(fields[key])(raw)
            except ValueError as exc:
                fail(section, key, f"bad value for {section}.{key}: {exc}")
        try:
            parts[section] = cls(**values)
        except (TypeError, ValueError) as exc:
            fail(section, None, str(exc))
    spec = RunSpec(**parts)
    if base is not None:
        for section in ("graph", "metric"):
            path = getattr(spec, section).path
            if path:
                spec = spec.replace(section, path=str(_resolve(path, base)))
    try:
        validate(spec)
    except ConfigError as exc:
        if exc.section is None:
            raise ConfigError(f"{source}: {exc}") from None
        fail(exc.section, exc.key, str(exc))
    return spec


def parse_config(path) -> RunSpec:
    """Read and validate a config file."""
    path = Path(path)
    return parse_config_text(path.read_text(), str(path), path.parent)


def validate(spec: RunSpec) -> None:
    """Raise ConfigError on the first constraint violation."""
    def bad(section, key, msg):
        raise ConfigError(msg, section, key)

    if spec.run.command not in COMMANDS:
        bad("run", "command", f"unknown command {spec.run.command!r}; expected one of {COMMANDS}")
    g = spec.graph
    if g.kind not in GRAPH_KINDS:
        bad("graph", "kind", f"unknown graph kind {g.kind!r}; expected one of {GRAPH_KINDS}")
    if g.N < 1:
        bad("graph", "N", "lattice dimension must be >= 1")
    if g.radius < 1:
        bad("graph", "radius", "window radius must be >= 1")
    if g.m < 2 or g.K < 1:
        bad("graph", "m", "cyclic factor needs m >= 2 and K >= 1")
    if not 1 <= g.p <= 2:
        bad("graph", "p", f"p={g.p} must lie in [1, 2]")
    if g.measure_rule not in ("sum", "max", "product"):
        bad("graph", "measure_rule", f"unknown measure rule {g.measure_rule!r}")
    if g.kind == "file" and not Path(g.path).is_file():
        bad("graph", "path", f"graph file not found: {g.path!r}")
    mk = spec.metric.kind
    if mk not in METRIC_KINDS:
        bad("metric", "kind", f"unknown metric kind {mk!r}; expected one of {METRIC_KINDS}")
    if mk == "table" and not Path(spec.metric.path).is_file():
        bad("metric", "path", f"metric table not found: {spec.metric.path!r}")
    allowed = {"lattice": ("default", "euclidean", "natural", "table"),
               "cyclic": ("default", "natural", "table"),
               "product": ("default", "product"),
               "file": ("default", "natural", "table")}[g.kind]
    if mk not in allowed:
        bad("metric", "kind", f"metric {mk!r} is not available for graph kind {g.kind!r}")
    m = spec.model
    if not m.sigma > 1:
        bad("model", "sigma", "sigma must exceed 1")
    if not 0 <= m.alpha <= 1:
        bad("model", "alpha", f"alpha={m.alpha} must lie in [0, 1]")
    theta1 = 2 * (1 + m.alpha) if m.theta1 is None else m.theta1
    theta2 = 2.0 if m.theta2 is None else m.theta2
    try:
        check_thetas(theta1, theta2, m.alpha)
    except ValueError as exc:
        bad("model", "theta1" if m.theta1 is not None else "theta2", str(exc))
    pot = spec.potential
    if pot.time not in ("constant", "power", "exponential"):
        bad("potential", "time", f"unknown time profile {pot.time!r}")
    if pot.space not in ("constant", "power"):
        bad("potential", "space", f"unknown space profile {pot.space!r}")
    if pot.time_scale <= 0 or pot.space_scale <= 0:
        bad("potential", None, "potential scales must be positive")
    if not spec.check.R0 >= 1:
        bad("check", "R0", f"R0={spec.check.R0} must be at least 1")
    for section, key, values in (("check", "radii", spec.check.radii),
                                 ("check", "times", spec.check.times),
                                 ("verify", "radii", spec.verify.radii)):
        if any(b <= a for a, b in zip(values, values[1:])) or any(v <= 0 for v in values):
            bad(section, key, f"{section}.{key} must be positive and strictly increasing")
    s = spec.simulate
    if not s.t_max > 0:
        bad("simulate", "t_max", "t_max must be positive")
    if s.dt != "auto" and not s.dt > 0:
        bad("simulate", "dt", "dt must be positive or 'auto'")
    if s.scheme not in ("explicit-euler", "semi-implicit-linear"):
        bad("simulate", "scheme", f"unknown scheme {s.scheme!r}")
    if s.initial not in ("indicator", "constant"):
        bad("simulate", "initial", f"unknown initial profile {s.initial!r}")
    if s.amplitude < 0:
        bad("simulate", "amplitude", "amplitude must be nonnegative")
    if s.record_every < 1:
        bad("simulate", "record_every", "record_every must be >= 1")
    if any(x <= 1 for x in spec.sweep.sigmas):
        bad("sweep", "sigmas", "sigma must exceed 1")
    if not spec.sweep.amplitudes or any(a <= 0 for a in spec.sweep.amplitudes):
        bad("sweep", "amplitudes", "sweep amplitudes must be positive")


def _resolve(path: str, base: Path | None) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


def apply_overrides(spec: RunSpec, overrides) -> RunSpec:
    """Apply ``section.key=value`` strings on top of ``spec`` and revalidate."""
    for item in overrides:
        name, sep, raw = item.partition("=")
        section, dot, key = name.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        cls = SECTIONS.get(section)
        fields = {f.name: f for f in dataclasses.fields(cls)} if cls else {}
        if key not in fields:
            raise ConfigError(f"override {item!r}: unknown key {name.strip()!r}")
        try:
            value = _converter(fields[key])(raw.strip())
        except ValueError as exc:
            raise ConfigError(f"override {item!r}: {exc}") from None
        spec = spec.replace(section, **{key: value})
    try:
        validate(spec)
    except ConfigError as exc:
        where = f"{exc.section}.{exc.key}" if exc.key else (exc.section or "config")
        raise ConfigError(f"{where}: {exc}", exc.section, exc.key) from None
    return spec


def emit_config(spec: RunSpec) -> str:
    """Canonical text form; ``parse_config_text(emit_config(s)) == s``."""
    out = []
    for name in SECTIONS:
        part = getattr(spec, name)
        out.append(f"[{name}]")
        for f in dataclasses.fields(part):
            out.append(f"{f.name} = {_fmt(getattr(part, f.name))}")
        out.append("")
    return "\n".join(out)
