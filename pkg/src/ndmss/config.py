"""Experiment configuration files.

INI-style text with named sections and ``key = value`` lines::

    [model]
    n_sites = 4
    V = 2.0
    g = 0.5, 1.0, 2.0     # one value, or a comma-separated sweep list
    gamma = 1.0
    boundary = periodic   # or open

    [ansatz]
    alpha = 1             # integers or fractions such as 1/2
    beta = 1
    init_scale = 0.01
    init_seed = 0

    [sampler]
    n_chains = 150
    n_samples_per_chain = 20
    burn_in_sweeps = 10
    max_flips_per_move = 1
    seed = 1234

    [optimizer]
    n_iterations = 2000
    learning_rate = 0.005
    schedule = constant   # or exponential (with decay_rate)
    decay_rate = 0.0
    sr_enabled = true
    sr_diag_shift = 5e-4
    solver_tolerance = 1e-6
    observable_interval = 1
    checkpoint_interval = 100

    [run]
    mode = exact-summation   # or sampled
    parallel_points = 1

    [output]
    directory = results
    formats = jsonl, csv

Only ``model.n_sites`` is required. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .optimizer import MODES, OptimizerConfig
from .sampler import SamplerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelBlock:
    n_sites: int
    V: float = 2.0
    g: tuple[float, ...] = (1.0,)
    gamma: float = 1.0
    boundary: str = "periodic"


@dataclass(frozen=True)
class AnsatzBlock:
    alpha: Fraction = Fraction(1)
    beta: Fraction = Fraction(1)
    init_scale: float = 0.01
    init_seed: int = 0


@dataclass(frozen=True)
class RunBlock:
    mode: str = "exact-summation"
    parallel_points: int = 1


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "results"
    formats: tuple[str, ...] = ("jsonl", "csv")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelBlock
    ansatz: AnsatzBlock = field(default_factory=AnsatzBlock)
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig(150, 20, 10, 1, 1234))
    optimizer: OptimizerConfig = field(default_factory=lambda: OptimizerConfig(n_iterations=2000))
    run: RunBlock = field(default_factory=RunBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        def conv(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, tuple):
                return [conv(v) for v in x]
            return x

        return {
            name: {k: conv(v) for k, v in dataclasses.asdict(getattr(self, name)).items()}
            for name in ("model", "ansatz", "sampler", "optimizer", "run", "output")
        }

    def with_point(self, g: float) -> "ExperimentConfig":
        return dataclasses.replace(self, model=dataclasses.replace(self.model, g=(g,)))


_SECTIONS = {
    "model": ModelBlock,
    "ansatz": AnsatzBlock,
    "sampler": SamplerConfig,
    "optimizer": OptimizerConfig,
    "run": RunBlock,
    "output": OutputBlock,
}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in text.split(",") if x.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _strings(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


_PARSERS = {
    int: int,
    float: float,
    str: str.strip,
    bool: _bool,
    Fraction: Fraction,
    "floats": _floats,
    "strings": _strings,
    "seed": int,
}


def _kind(block, name):
    if (block, name) == (ModelBlock, "g"):
        return "floats"
    if (block, name) == (OutputBlock, "formats"):
        return "strings"
    if name == "seed":
        return "seed"
    ann = {f.name: f.type for f in dataclasses.fields(block)}[name]
    for key, typ in (("bool", bool), ("int", int), ("float", float), ("Fraction", Fraction), ("str", str)):
        if ann == key or ann == typ:
            return typ
    raise AssertionError(f"unhandled field type {ann!r}")


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    def fail(section, key, msg):
        line = _line_of(text, section, key)
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    blocks = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
    for section, block in _SECTIONS.items():
        if not cp.has_section(section):
            continue
        names = {f.name for f in dataclasses.fields(block)}
        values = {}
        for key, raw in cp.items(section):
            if key not in names:
                fail(section, key, "unknown field")
            try:
                values[key] = _PARSERS[_kind(block, key)](raw)
            except (ValueError, ZeroDivisionError) as exc:
                fail(section, key, f"cannot parse {raw!r} ({exc})")
        blocks[section] = (values, block)

    if "model" not in blocks or "n_sites" not in blocks["model"][0]:
        raise ConfigError(f"{source}: [model] n_sites: required field missing")

    defaults = ExperimentConfig(ModelBlock(1))
    kwargs = {}
    for section in _SECTIONS:
        if section in blocks:
            values, block = blocks[section]
            base = getattr(defaults, section) if section != "model" else None
            try:
                kwargs[section] = dataclasses.replace(base, **values) if base is not None else block(**values)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{source}: [{section}] {exc}") from exc
    cfg = dataclasses.replace(defaults, **kwargs)
    _validate(cfg, fail)
    return cfg


def _validate(cfg: ExperimentConfig, fail) -> None:
    m = cfg.model
    if m.n_sites < 1:
        fail("model", "n_sites", "must be >= 1")
    if not m.gamma > 0:
        fail("model", "gamma", "must be positive")
    if m.boundary not in ("periodic", "open"):
        fail("model", "boundary", "must be 'periodic' or 'open'")
    for name in ("alpha", "beta"):
        size = getattr(cfg.ansatz, name) * m.n_sites
        if size.denominator != 1 or size <= 0:
            fail("ansatz", name, f"{name} * n_sites must be a positive integer")
    if cfg.ansatz.init_scale < 0:
        fail("ansatz", "init_scale", "must be non-negative")
    if cfg.run.mode not in MODES:
        fail("run", "mode", f"must be one of {MODES}")
    if cfg.run.parallel_points < 1:
        fail("run", "parallel_points", "must be >= 1")
    try:
        cfg.sampler.validate(m.n_sites)
    except ValueError as exc:
        fail("sampler", str(exc).split()[0], str(exc))
    try:
        cfg.optimizer.validate()
    except ValueError as exc:
        key = str(exc).split()[0]
        fail("optimizer", key, str(exc))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config_text(text, str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back to the file format (round-trips through ``parse_config_text``)."""
    lines = []
    for section, values in cfg.to_dict().items():
        lines.append(f"[{section}]")
        for k, v in values.items():
            if isinstance(v, list):
                v = ", ".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            elif k == "seed" and isinstance(v, (list, tuple)):
                v = v[0]
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)
