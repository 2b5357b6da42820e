"""Flat dotted key = value experiment configuration.

Every key has a type and a default; ``to_text`` writes every key in a
fixed order, so parse(to_text(c)) == c and equal configs hash equally.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from .errors import ParseError

PROTOCOLS = ("dial-nizk", "dial-pc", "graph-iso")
CONSTRUCTIONS = ("nizk", "pc", "cr", "rv", "decider")
INVERTERS = ("canonical", "distributional", "noisy", "conditional")
MODES = ("exact", "mc")
FORMATS = ("json", "csv", "tsv-table")


def _frac(s: str) -> Fraction:
    return Fraction(s.strip())


def _ints(s: str) -> tuple[int, ...]:
    s = s.strip()
    return tuple(int(p) for p in s.split(",")) if s else ()


def _fmt_ints(v: tuple[int, ...]) -> str:
    return ",".join(str(i) for i in v)


def _choice(options):
    def parse(s: str) -> str:
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = "dial-nizk"
    eps_c: Fraction = Fraction(0)
    eps_s: Fraction = Fraction(0)
    eps_z: Fraction = Fraction(0)
    m: int = 10
    m_list: tuple[int, ...] = ()
    ell_z: int = 4
    rounds: int = 1
    tag_seed: int = 0
    proof_bits: int = 4
    verifier_noise: Fraction = Fraction(0)
    verifier_coin_bits: int = 0
    instance_bits: int = 4
    yes_instance: str = "1010"
    no_instance: str = "0010"
    construction: str = "nizk"
    decider_reduce: str = "nizk"
    inverter: str = "distributional"
    level_k_inverter: str = "distributional"
    inverter_base: str = "distributional"
    inverter_delta: Fraction = Fraction(0)
    retry_cap: int = 1 << 14
    p: int = 8
    q: int = 16
    tau: Fraction = Fraction(1, 8)
    preset: str = "none"
    trials: int = 1000
    trials_no: int = -1
    deviation_trials: int = 2000
    seed: int = 1
    mode: str = "mc"
    workers: int = 1
    budget: int = 1 << 24
    out: str = "results"
    format: str = "json"

    def __post_init__(self):
        _check(self)

    @property
    def arm_trials(self) -> dict[str, int]:
        return {"yes": self.trials, "no": self.trials if self.trials_no < 0 else self.trials_no}

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# key -> (attribute, parser, formatter)
SCHEMA: dict[str, tuple[str, object, object]] = {
    "protocol.kind": ("protocol", _choice(PROTOCOLS), str),
    "protocol.eps_c": ("eps_c", _frac, str),
    "protocol.eps_s": ("eps_s", _frac, str),
    "protocol.eps_z": ("eps_z", _frac, str),
    "protocol.m": ("m", int, str),
    "protocol.m_list": ("m_list", _ints, _fmt_ints),
    "protocol.ell_z": ("ell_z", int, str),
    "protocol.rounds": ("rounds", int, str),
    "protocol.tag_seed": ("tag_seed", int, str),
    "protocol.proof_bits": ("proof_bits", int, str),
    "protocol.verifier_noise": ("verifier_noise", _frac, str),
    "protocol.verifier_coin_bits": ("verifier_coin_bits", int, str),
    "protocol.instance_bits": ("instance_bits", int, str),
    "instances.yes": ("yes_instance", str.strip, str),
    "instances.no": ("no_instance", str.strip, str),
    "construction.kind": ("construction", _choice(CONSTRUCTIONS), str),
    "construction.decider_reduce": ("decider_reduce", _choice(("nizk", "pc", "cr")), str),
    "inverter.kind": ("inverter", _choice(INVERTERS), str),
    "inverter.level_k": ("level_k_inverter", _choice(INVERTERS), str),
    "inverter.base": ("inverter_base", _choice(("canonical", "distributional")), str),
    "inverter.delta": ("inverter_delta", _frac, str),
    "inverter.retry_cap": ("retry_cap", int, str),
    "params.p": ("p", int, str),
    "params.q": ("q", int, str),
    "params.tau": ("tau", _frac, str),
    "params.preset": ("preset", _choice(("none", "coupled")), str),
    "run.trials": ("trials", int, str),
    "run.trials_no": ("trials_no", int, str),
    "run.deviation_trials": ("deviation_trials", int, str),
    "run.seed": ("seed", int, str),
    "run.mode": ("mode", _choice(MODES), str),
    "run.workers": ("workers", int, str),
    "run.budget": ("budget", int, str),
    "output.dir": ("out", str.strip, str),
    "output.format": ("format", _choice(FORMATS), str),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _, _) in SCHEMA.items()}


def _check(c: ExperimentConfig):
    for name in ("eps_c", "eps_s", "eps_z", "verifier_noise", "inverter_delta"):
        v = getattr(c, name)
        if not 0 <= v <= 1:
            raise ValueError(f"{_ATTR_TO_KEY[name]} = {v} outside [0, 1]")
    if c.trials < 0 or c.deviation_trials < 1 or c.workers < 1 or c.budget < 1:
        raise ValueError("run.trials >= 0, run.deviation_trials >= 1, run.workers >= 1, run.budget >= 1")
    if not 0 <= c.seed < 1 << 64:
        raise ValueError("run.seed must be an unsigned 64-bit integer")
    if c.p < 1 or c.q < 1 or c.tau <= 0:
        raise ValueError("params need p >= 1, q >= 1, tau > 0")
    if c.retry_cap < 1:
        raise ValueError("inverter.retry_cap must be positive")
    if c.rounds < 1:
        raise ValueError("protocol.rounds must be positive")


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line_no)
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in SCHEMA:
            raise ParseError(f"unknown key {key!r}", line_no)
        attr, parse, _ = SCHEMA[key]
        if attr in values:
            raise ParseError(f"duplicate key {key!r}", line_no)
        try:
            values[attr] = parse(val)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{key}: {exc}", line_no) from None
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def to_text(c: ExperimentConfig) -> str:
    lines = []
    section = None
    for key, (attr, _, fmt) in SCHEMA.items():
        head = key.split(".")[0]
        if head != section:
            if section is not None:
                lines.append("")
            lines.append(f"# {head}")
            section = head
        lines.append(f"{key} = {fmt(getattr(c, attr))}")
    return "\n".join(lines) + "\n"


assert {f.name for f in fields(ExperimentConfig)} == set(_ATTR_TO_KEY), "schema out of sync"
