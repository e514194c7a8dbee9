"""INI-style run configuration.

Sections: ``[physical] [qubit] [postselect] [numerics] [detector] [sweep]``.
Numeric values may be plain numbers or simple arithmetic with ``pi``
(``k_x0 = pi/4``).  :func:`dumps` writes every float with ``repr`` so
a dumped file reloads to bit-identical parameters.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .detector import DetectorSetup
from .errors import DomainError, WVAError
from .hilbert import Grid1D, PhysicalParams, QubitState
from .weakvalue import Outcome, PostselectionSpec

SECTIONS = ("physical", "qubit", "postselect", "numerics", "detector", "sweep")
ENGINES = ("effective", "exact-linear", "exact-sin")
DISPOSALS = ("project", "trace")

# config key -> PhysicalParams field
PHYSICAL_KEYS = {
    "lambda": "wavelength",
    "Omega0_over_2pi": "Omega0_over_2pi",
    "k_x0": "k_x0",
    "delta_over_2pi": "delta_over_2pi",
    "t": "t",
    "Delta": "Delta",
    "m": "m",
    "chi": "chi",
    "delta0": "delta0",
    "omega_c_over_2pi": "omega_c_over_2pi",
}


_KEYS = {
    "physical": (*PHYSICAL_KEYS, "Omega_xc_over_delta"),
    "qubit": ("alpha", "beta", "theta"),
    "postselect": ("eta", "outcome"),
    "numerics": ("engine", "n_points", "half_width", "n_max", "cavity_disposal", "keep_gc_prime", "method"),
    "detector": ("x_pos", "l", "N", "trials", "chi", "delta0", "seed"),
    "sweep": ("parameter", "start", "stop", "steps", "scale"),
}


class ConfigError(WVAError):
    """Unparseable or inconsistent configuration (exit code 2)."""


@dataclass(frozen=True)
class Numerics:
    n_points: int = 1024
    half_width: float = 8.0
    n_max: int = 4
    cavity_disposal: str = "project"
    keep_gc_prime: bool = False
    method: str = "eigh"

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.n_points, self.half_width)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def values(self):
        import numpy as np

        if self.steps < 1:
            raise ConfigError("sweep needs at least one step")
        if self.scale == "log":
            if self.start <= 0 or self.stop <= 0:
                raise ConfigError("log sweeps need positive start and stop")
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class DetectorConfig:
    x_pos: float = 1.5
    l: float = 1.0
    N: int = 1_000_000
    trials: int = 10_000
    chi: Optional[float] = None
    delta0: Optional[float] = None

    def setup(self, physical: PhysicalParams, seed: Optional[int]) -> DetectorSetup:
        return DetectorSetup(
            x_pos=self.x_pos,
            l=self.l,
            N=self.N,
            chi=physical.chi if self.chi is None else self.chi,
            delta0=physical.delta0 if self.delta0 is None else self.delta0,
            seed=seed,
        )


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    qubit: QubitState = field(default_factory=lambda: QubitState(math.sqrt(0.5), math.sqrt(0.5), math.pi / 2))
    postselect: PostselectionSpec = field(default_factory=lambda: PostselectionSpec(math.pi / 4))
    engine: str = "effective"
    numerics: Numerics = field(default_factory=Numerics)
    detector: Optional[DetectorConfig] = None
    sweep: Optional[SweepSpec] = None
    seed: Optional[int] = None


# ---------------------------------------------------------------------------
# Value parsing
# ---------------------------------------------------------------------------

_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos,
}
_NAMES = {"pi": math.pi}


def parse_number(text: str) -> float:
    """Evaluate a number or an arithmetic expression over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
            return lineno
    return None


class _Reader:
    def __init__(self, parser, text, source):
        self.parser, self.text, self.source = parser, text, source

    def fail(self, section, key, msg):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    def has(self, section, key=None):
        if not self.parser.has_section(section):
            return False
        return key is None or self.parser.has_option(section, key)

    def number(self, section, key, default=None):
        if not self.has(section, key):
            if default is None:
                self.fail(section, key, "missing required value")
            return default
        raw = self.parser.get(section, key)
        try:
            return parse_number(raw)
        except ValueError as exc:
            self.fail(section, key, str(exc))

    def integer(self, section, key, default=None):
        if self.has(section, key):
            raw = self.parser.get(section, key).strip()
            if re.fullmatch(r"[+-]?\d+", raw):
                # exact for seeds beyond 2**53, which a float would round
                return int(raw)
        v = self.number(section, key, default)
        if v is None or v != int(v):
            self.fail(section, key, f"expected an integer, got {v!r}")
        return int(v)

    def string(self, section, key, default, choices=None):
        if not self.has(section, key):
            return default
        v = self.parser.get(section, key).strip()
        if choices and v not in choices:
            self.fail(section, key, f"expected one of {', '.join(choices)}, got {v!r}")
        return v

    def boolean(self, section, key, default):
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            self.fail(section, key, str(exc))


def loads(text: str, source: str = "<config>") -> RunConfig:
    """Parse configuration text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (Delta vs delta)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
    r = _Reader(parser, text, source)
    for section in parser.sections():
        for key in parser.options(section):
            if key not in _KEYS[section]:
                r.fail(section, key, f"unknown key (allowed: {', '.join(_KEYS[section])})")

    # [physical]
    base = PhysicalParams()
    values = {}
    for key, attr in PHYSICAL_KEYS.items():
        if r.has("physical", key):
            values[attr] = r.number("physical", key)
    physical = replace(base, **values)
    if r.has("physical", "Omega_xc_over_delta"):
        if "delta_over_2pi" in values:
            r.fail("physical", "Omega_xc_over_delta", "give either delta_over_2pi or Omega_xc_over_delta")
        ratio = r.number("physical", "Omega_xc_over_delta")
        if ratio <= 0:
            r.fail("physical", "Omega_xc_over_delta", "must be positive")
        physical = replace(physical, delta_over_2pi=physical.Omega0_over_2pi * math.sin(physical.k_x0) / ratio)

    # [qubit]
    default_q = RunConfig().qubit
    if r.has("qubit"):
        theta = r.number("qubit", "theta", default_q.theta)
        has_a, has_b = r.has("qubit", "alpha"), r.has("qubit", "beta")
        if has_a and has_b:
            alpha, beta = r.number("qubit", "alpha"), r.number("qubit", "beta")
        elif has_b:
            beta = r.number("qubit", "beta")
            alpha = math.sqrt(max(0.0, 1 - beta * beta))
        elif has_a:
            alpha = r.number("qubit", "alpha")
            beta = math.sqrt(max(0.0, 1 - alpha * alpha))
        else:
            alpha, beta = default_q.alpha, default_q.beta
        try:
            qubit = QubitState(alpha, beta, theta)
        except DomainError as exc:
            r.fail("qubit", "alpha" if has_a else "beta", str(exc))
    else:
        qubit = default_q

    # [postselect]
    eta = r.number("postselect", "eta", RunConfig().postselect.eta)
    outcome = r.string("postselect", "outcome", "ground", [o.value for o in Outcome])
    spec = PostselectionSpec(eta, Outcome(outcome))

    # [numerics]
    dn = Numerics()
    engine = r.string("numerics", "engine", "effective", ENGINES)
    numerics = Numerics(
        n_points=r.integer("numerics", "n_points", dn.n_points),
        half_width=r.number("numerics", "half_width", dn.half_width),
        n_max=r.integer("numerics", "n_max", dn.n_max),
        cavity_disposal=r.string("numerics", "cavity_disposal", dn.cavity_disposal, DISPOSALS),
        keep_gc_prime=r.boolean("numerics", "keep_gc_prime", dn.keep_gc_prime),
        method=r.string("numerics", "method", dn.method, ("eigh", "pade")),
    )
    try:
        numerics.grid
    except DomainError as exc:
        r.fail("numerics", "n_points", str(exc))

    # [detector]
    detector = None
    seed = None
    if r.has("detector"):
        dd = DetectorConfig()
        detector = DetectorConfig(
            x_pos=r.number("detector", "x_pos", dd.x_pos),
            l=r.number("detector", "l", dd.l),
            N=r.integer("detector", "N", dd.N),
            trials=r.integer("detector", "trials", dd.trials),
            chi=r.number("detector", "chi", None) if r.has("detector", "chi") else None,
            delta0=r.number("detector", "delta0", None) if r.has("detector", "delta0") else None,
        )
        if r.has("detector", "seed"):
            seed = r.integer("detector", "seed")
            if not 0 <= seed < 2**64:
                r.fail("detector", "seed", f"seed must be an unsigned 64-bit integer, got {seed}")
        try:
            detector.setup(physical, seed)
        except DomainError as exc:
            r.fail("detector", "l", str(exc))

    # [sweep]
    sweep = None
    if r.has("sweep"):
        sweep = SweepSpec(
            parameter=r.string("sweep", "parameter", None) or r.fail("sweep", "parameter", "missing"),
            start=r.number("sweep", "start"),
            stop=r.number("sweep", "stop"),
            steps=r.integer("sweep", "steps"),
            scale=r.string("sweep", "scale", "linear", ("linear", "log")),
        )
        if sweep.steps < 1:
            r.fail("sweep", "steps", "zero-length sweep")
        try:
            resolve_path(sweep.parameter)
        except ConfigError as exc:
            r.fail("sweep", "parameter", str(exc))

    return RunConfig(physical, qubit, spec, engine, numerics, detector, sweep, seed)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return loads(text, str(path))


def dumps(cfg: RunConfig) -> str:
    """Serialize a configuration; floats are written with ``repr``."""
    p = cfg.physical
    lines = ["[physical]"]
    for key, attr in PHYSICAL_KEYS.items():
        v = getattr(p, attr)
        if v is not None:
            lines.append(f"{key} = {v!r}")
    q = cfg.qubit
    lines += ["", "[qubit]", f"alpha = {q.alpha!r}", f"beta = {q.beta!r}", f"theta = {q.theta!r}"]
    lines += ["", "[postselect]", f"eta = {cfg.postselect.eta!r}", f"outcome = {cfg.postselect.outcome.value}"]
    n = cfg.numerics
    lines += ["", "[numerics]", f"engine = {cfg.engine}", f"n_points = {n.n_points}",
              f"half_width = {n.half_width!r}", f"n_max = {n.n_max}",
              f"cavity_disposal = {n.cavity_disposal}", f"keep_gc_prime = {str(n.keep_gc_prime).lower()}",
              f"method = {n.method}"]
    if cfg.detector is not None or cfg.seed is not None:
        # the seed lives in [detector]; default detector settings change no output
        d = cfg.detector or DetectorConfig()
        lines += ["", "[detector]", f"x_pos = {d.x_pos!r}", f"l = {d.l!r}", f"N = {d.N}", f"trials = {d.trials}"]
        if d.chi is not None:
            lines.append(f"chi = {d.chi!r}")
        if d.delta0 is not None:
            lines.append(f"delta0 = {d.delta0!r}")
        if cfg.seed is not None:
            lines.append(f"seed = {cfg.seed}")
    if cfg.sweep is not None:
        s = cfg.sweep
        lines += ["", "[sweep]", f"parameter = {s.parameter}", f"start = {s.start!r}", f"stop = {s.stop!r}",
                  f"steps = {s.steps}", f"scale = {s.scale}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parameter paths
# ---------------------------------------------------------------------------

_PATHS = {
    **{f"physical.{k}": ("physical", a) for k, a in PHYSICAL_KEYS.items()},
    "physical.Omega_xc_over_delta": ("physical", "Omega_xc_over_delta"),
    "qubit.alpha": ("qubit", "alpha"),
    "qubit.beta": ("qubit", "beta"),
    "qubit.theta": ("qubit", "theta"),
    "postselect.eta": ("postselect", "eta"),
    "detector.x_pos": ("detector", "x_pos"),
    "detector.l": ("detector", "l"),
    "detector.N": ("detector", "N"),
}


def resolve_path(path: str) -> tuple[str, str]:
    """Map a sweep path such as ``postselect.eta`` to ``(section, attribute)``."""
    try:
        return _PATHS[path]
    except KeyError:
        raise ConfigError(
            f"unknown parameter path {path!r}; numeric leaves are: {', '.join(sorted(_PATHS))}"
        ) from None


def with_value(cfg: RunConfig, path: str, value: float) -> RunConfig:
    """Copy of ``cfg`` with one numeric leaf replaced.

    Setting ``qubit.alpha`` or ``qubit.beta`` adjusts the other amplitude to
    keep the qubit normalized.
    """
    section, attr = resolve_path(path)
    value = float(value)
    if section == "physical":
        p = cfg.physical
        if attr == "Omega_xc_over_delta":
            p = replace(p, delta_over_2pi=p.Omega0_over_2pi * math.sin(p.k_x0) / value)
        else:
            p = replace(p, **{attr: value})
        return replace(cfg, physical=p)
    if section == "qubit":
        q = cfg.qubit
        if attr == "theta":
            return replace(cfg, qubit=QubitState(q.alpha, q.beta, value))
        other = math.sqrt(max(0.0, 1.0 - value * value))
        a, b = (value, other) if attr == "alpha" else (other, value)
        return replace(cfg, qubit=QubitState(a, b, q.theta))
    if section == "postselect":
        return replace(cfg, postselect=replace(cfg.postselect, eta=value))
    d = cfg.detector or DetectorConfig()
    if attr == "N":
        value = int(value)
    return replace(cfg, detector=replace(d, **{attr: value}))


def field_names(cls) -> list[str]:
    return [f.name for f in fields(cls)]
