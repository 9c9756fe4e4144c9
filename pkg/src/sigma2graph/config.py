"""Run configuration: flat ``section.key = value`` text with validation.

Every field is addressed as ``section.name``; the same names are accepted as
``--section.name=value`` command-line overrides.
"""
import dataclasses
import hashlib
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import InputError

NON_RESULT_KEYS = ("run.out", "run.threads")
COMMANDS = ("solve-dirichlet", "solve-entire", "barriers", "oracle-radial", "verify")


@dataclass
class RunSection:
    command: str = "solve-dirichlet"
    dim: int = 2
    seed: int = 0
    out: str = ""
    threads: int = 0


@dataclass
class CurvatureSpec:
    name: str = "constant"
    h: float = 1.0
    amp: float = 0.1
    file: str = ""


@dataclass
class BarrierSpec:
    kind: str = "hyperboloid"
    h1: float = 1.0
    h2: float = 1.0
    f_amp: float = 0.0
    f_mode: int = 1
    f_file: str = ""
    lower_file: str = ""
    upper_file: str = ""


@dataclass
class DomainSpec:
    R: float = 3.0
    R0: float = 2.0
    h: float = 0.03125
    schedule: tuple = (4.0, 8.0, 16.0)


@dataclass
class SolverSection:
    tol: float = 1e-10
    stage_tol: Optional[float] = None
    max_newton: int = 60
    damping: float = 1.0
    continuation: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    linear: str = "auto"
    entire_tol: float = 1e-8


@dataclass
class VerifySection:
    samples: int = 10_000
    ilt_samples: int = 100_000
    pairs: int = 100
    radial_cases: int = 10


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    curvature: CurvatureSpec = field(default_factory=CurvatureSpec)
    barrier: BarrierSpec = field(default_factory=BarrierSpec)
    domain: DomainSpec = field(default_factory=DomainSpec)
    solver: SolverSection = field(default_factory=SolverSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def keys(self):
        return [f"{s.name}.{f.name}" for s in fields(self) for f in fields(getattr(self, s.name))]

    def get(self, key):
        section, name = _split(self, key)
        return getattr(getattr(self, section), name)

    def set(self, key, text):
        section, name = _split(self, key)
        sec = getattr(self, section)
        kind = {f.name: f for f in fields(sec)}[name]
        setattr(sec, name, _convert(key, text, kind.type, kind.default))

    def to_text(self):
        return "".join(f"{k} = {_format(self.get(k))}\n" for k in self.keys())

    def digest(self):
        """Hash of every key that can change results (output location excluded)."""
        text = "".join(f"{k} = {_format(self.get(k))}\n" for k in self.keys()
                       if k not in NON_RESULT_KEYS)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def copy(self):
        return dataclasses.replace(self, **{s.name: dataclasses.replace(getattr(self, s.name))
                                            for s in fields(self)})


def _split(cfg, key):
    section, dot, name = key.partition(".")
    if not dot or section not in {s.name for s in fields(cfg)}:
        raise InputError(f"unknown config key {key!r}")
    if name not in {f.name for f in fields(getattr(cfg, section))}:
        raise InputError(f"unknown config key {key!r}")
    return section, name


def _convert(key, text, kind, default):
    text = text.strip()
    try:
        if kind in ("int", int):
            return int(text)
        if kind in ("float", float):
            return float(text)
        if kind in ("tuple", tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
        if "Optional" in str(kind):
            return None if text in ("", "none", "None") else float(text)
    except ValueError:
        raise InputError(f"{key}: cannot parse {text!r} as {getattr(kind, '__name__', kind)}")
    return text


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_text(text, cfg=None):
    """Parse ``key = value`` lines (``#`` comments) on top of ``cfg``."""
    cfg = cfg.copy() if cfg is not None else RunConfig()
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise InputError(f"line {num}: expected key = value, got {line!r}")
        cfg.set(key.strip(), value)
    return cfg


def load(path, cfg=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, cfg)


def _need(ok, key, msg):
    if not ok:
        raise InputError(f"{key}: {msg}")


def validate(cfg):
    """Check every numeric field against the preconditions of its module."""
    r, c, b, d, s, v = cfg.run, cfg.curvature, cfg.barrier, cfg.domain, cfg.solver, cfg.verify
    _need(r.command in COMMANDS, "run.command", f"must be one of {COMMANDS}")
    _need(r.dim in (2, 3), "run.dim", "only n = 2 or 3 is supported")
    _need(r.seed >= 0, "run.seed", "must be nonnegative")
    _need(r.threads >= 0, "run.threads", "must be nonnegative")
    _need(c.h > 0, "curvature.h", "must be positive")
    _need(b.kind in ("hyperboloid", "treibergs", "grid"), "barrier.kind",
          "must be hyperboloid, treibergs or grid")
    if b.kind != "grid":
        _need(b.h2 > 0, "barrier.h2", "must be positive")
        _need(b.h1 >= b.h2, "barrier.h1", f"pinching violated: h1={b.h1} < h2={b.h2}")
    if b.kind == "treibergs":
        _need(r.dim == 2, "barrier.kind", "Treibergs barriers are implemented for n = 2")
    if b.kind == "grid":
        _need(b.lower_file and b.upper_file, "barrier.lower_file", "grid barriers need both files")
    _need(d.h > 0, "domain.h", "must be positive")
    _need(d.R > 0, "domain.R", "must be positive")
    _need(abs(2 * d.R / d.h - round(2 * d.R / d.h)) < 1e-9, "domain.R",
          f"2R/h must be an integer (R={d.R}, h={d.h})")
    _need(d.R0 > 0, "domain.R0", "must be positive")
    sched = d.schedule
    _need(len(sched) > 0, "domain.schedule", "must not be empty")
    _need(all(b_ > a for a, b_ in zip(sched, sched[1:])), "domain.schedule",
          "must be strictly increasing")
    _need(sched[0] > d.R0, "domain.schedule", f"first radius must exceed R0={d.R0}")
    for R in sched:
        _need(abs(2 * R / d.h - round(2 * R / d.h)) < 1e-9, "domain.schedule",
              f"2R/h must be an integer for R={R}")
    _need(s.tol > 0, "solver.tol", "must be positive")
    _need(s.stage_tol is None or s.stage_tol > 0, "solver.stage_tol", "must be positive")
    _need(s.max_newton > 0, "solver.max_newton", "must be positive")
    _need(0 < s.damping <= 1, "solver.damping", "must lie in (0, 1]")
    cont = s.continuation
    _need(len(cont) > 0 and cont[-1] == 1.0 and min(cont) >= 0, "solver.continuation",
          "must lie in [0, 1] and end at 1")
    _need(all(b_ > a for a, b_ in zip(cont, cont[1:])), "solver.continuation",
          "must be strictly increasing")
    _need(s.linear in ("auto", "direct", "gmres"), "solver.linear", "must be auto, direct or gmres")
    _need(s.entire_tol > 0, "solver.entire_tol", "must be positive")
    _need(v.samples > 0, "verify.samples", "must be positive")
    _need(v.ilt_samples >= 10_000, "verify.ilt_samples", "needs at least 10000 samples")
    _need(v.pairs > 0, "verify.pairs", "must be positive")
    _need(v.radial_cases > 0, "verify.radial_cases", "must be positive")
    return cfg
