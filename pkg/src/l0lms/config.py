"""Flat ``key = value`` experiment files.

Layout::

    # shared blocks
    [system]
    kind = general          # general | cluster
    n_large = 8
    small_var = 0
    seed = 0

    [signal]
    kind = white            # white | ar1
    variance = 1

    [run]
    L = 128
    noise_var = 1e-4
    iterations = 5000
    runs = 100

    # one block per algorithm, label after the dot
    [algorithm.lms]
    variant = lms
    mu = 0.01

Keys inside ``[system]`` and ``[signal]`` may be written bare or with their
prefix (``kind`` or ``system.kind``). A file with no ``[algorithm.*]`` block
may put the algorithm keys at the top level; the label is then the variant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .filters import DEFAULT_BETA, DEFAULT_DELTA, DEFAULT_Q, AlgorithmConfig, Variant
from .signals import SignalKind, SignalSpec
from .sim import TrialConfig
from .systems import ChangeEvent, SystemSpec, build_system

__all__ = ["ConfigError", "parse_config", "emit_config", "describe"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _choice(*options):
    def conv(text):
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return conv


def _variant(text):
    return Variant.parse(text)


# key -> (converter, constraint, description of constraint)
_ALGO_KEYS = {
    "variant": (_variant, None, ""),
    "mu": (_float, lambda v: v > 0, "> 0"),
    "kappa": (_float, lambda v: v >= 0, ">= 0"),
    "beta": (_float, lambda v: v > 0, "> 0"),
    "q": (_int, lambda v: v >= 1, ">= 1"),
    "delta": (_float, lambda v: v > 0, "> 0"),
}

_SHARED_KEYS = {
    "L": (_int, lambda v: v >= 1, ">= 1"),
    "system.kind": (_choice("general", "cluster"), None, ""),
    "system.n_large": (_int, lambda v: v >= 1, ">= 1"),
    "system.small_var": (_float, lambda v: v >= 0, ">= 0"),
    "system.min_large": (_float, lambda v: 0 <= v < 3, "in [0, 3)"),
    "system.delay": (_int, lambda v: v >= 0, ">= 0"),
    "system.span": (_int, lambda v: v >= 1, ">= 1"),
    "system.gain_db": (_float, None, ""),
    "system.seed": (_int, lambda v: v >= 0, ">= 0"),
    "signal.kind": (_choice("white", "ar1"), None, ""),
    "signal.variance": (_float, lambda v: v > 0, "> 0"),
    "signal.ar_coeff": (_float, lambda v: abs(v) < 1, "|a| < 1"),
    "signal.normalize": (_bool, None, ""),
    "noise_var": (_float, lambda v: v >= 0, ">= 0"),
    "iterations": (_int, lambda v: v >= 1, ">= 1"),
    "runs": (_int, lambda v: v >= 1, ">= 1"),
    "seed": (_int, lambda v: v >= 0, ">= 0"),
    "change.at": (_int, lambda v: v >= 1, ">= 1"),
    "change.delay": (_int, lambda v: v >= 0, ">= 0"),
    "change.gain_db": (_float, None, ""),
}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z0-9_.\-]+)\s*\]$")


@dataclass
class _Entry:
    value: object
    line: int


def _canonical(section: str | None, key: str) -> str:
    if section in ("system", "signal") and "." not in key:
        return f"{section}.{key}"
    return key


def _section_accepts(section: str | None, key: str) -> bool:
    if section in ("system", "signal"):
        return key.startswith(section + ".")
    return True


def parse_config(text: str) -> list[tuple[str, TrialConfig, int]]:
    """Parse an experiment file into ``(label, TrialConfig, runs)`` triples.

    Raises
    ------
    ConfigError
        On unknown keys, unparsable values or violated constraints; the
        message carries the offending line number.
    """
    shared: dict[str, _Entry] = {}
    algos: dict[str, dict[str, _Entry]] = {}
    algo_lines: dict[str, int] = {}
    top_algo: dict[str, _Entry] = {}
    section = None
    label = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name.startswith("algorithm."):
                label = name[len("algorithm."):]
                if not label:
                    raise ConfigError("empty algorithm label", lineno)
                if label in algos:
                    raise ConfigError(f"duplicate algorithm block {label!r}", lineno)
                algos[label] = {}
                algo_lines[label] = lineno
                section = "algorithm"
            elif name in ("system", "signal", "run"):
                section, label = name, None
            else:
                raise ConfigError(f"unknown section [{name}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, _, value = (p.strip() for p in line.partition("="))
        if not key or not value:
            raise ConfigError("empty key or value", lineno)

        if section == "algorithm" or (section is None and key in _ALGO_KEYS):
            table, target = _ALGO_KEYS, (algos[label] if section == "algorithm" else top_algo)
            ckey = key
        else:
            ckey = _canonical(section, key)
            if not _section_accepts(section, ckey):
                raise ConfigError(f"key {key!r} does not belong in [{section}]", lineno)
            table, target = _SHARED_KEYS, shared
        if ckey not in table:
            raise ConfigError(f"unknown key {key!r}", lineno)
        conv, check, desc = table[ckey]
        try:
            parsed = conv(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key} = {value!r}: {exc}", lineno) from None
        if check is not None and not check(parsed):
            raise ConfigError(f"{key} must be {desc}, got {value}", lineno)
        if ckey in target:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        target[ckey] = _Entry(parsed, lineno)

    if top_algo:
        if algos:
            line = min(e.line for e in top_algo.values())
            raise ConfigError("top-level algorithm keys mixed with [algorithm.*] blocks", line)
        if "variant" not in top_algo:
            raise ConfigError("missing key 'variant'", min(e.line for e in top_algo.values()))
        name = top_algo["variant"].value.value
        algos[name] = top_algo
        algo_lines[name] = top_algo["variant"].line
    if not algos:
        raise ConfigError("no algorithm defined")

    def get(key, default=None):
        e = shared.get(key)
        return default if e is None else e.value

    def where(*keys):
        lines = [shared[k].line for k in keys if k in shared]
        return min(lines) if lines else None

    if "L" not in shared:
        raise ConfigError("missing key 'L'")
    length = get("L")
    kind = get("system.kind", "general")
    try:
        spec = SystemSpec(
            kind=kind,
            length=length,
            seed=get("system.seed", 0),
            n_large=get("system.n_large", min(8, length)) if kind == "general" else 0,
            small_var=get("system.small_var", 0.0) if kind == "general" else 0.0,
            min_large=get("system.min_large", 0.0) if kind == "general" else 0.0,
            delay=get("system.delay", 0) if kind == "cluster" else 0,
            span=get("system.span", length) if kind == "cluster" else 0,
            gain_db=get("system.gain_db", 0.0) if kind == "cluster" else 0.0,
        )
        system = build_system(spec)
    except ValueError as exc:
        raise ConfigError(f"invalid system: {exc}", where("L", "system.kind", "system.n_large",
                                                          "system.delay", "system.span")) from None

    try:
        signal = SignalSpec(
            SignalKind(get("signal.kind", "white")),
            variance=get("signal.variance", 1.0),
            ar_coeff=get("signal.ar_coeff", 0.0),
            normalize=get("signal.normalize", False),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid signal: {exc}", where("signal.kind")) from None

    change = None
    if "change.at" in shared or "change.delay" in shared:
        if "change.at" not in shared or "change.delay" not in shared:
            raise ConfigError("change.at and change.delay must be given together",
                              where("change.at", "change.delay"))
        change = ChangeEvent(get("change.at"), get("change.delay"), get("change.gain_db", 0.0))
    elif "change.gain_db" in shared:
        raise ConfigError("change.gain_db given without change.at", where("change.gain_db"))

    runs = get("runs", 100)
    out = []
    for label, entries in algos.items():
        if "variant" not in entries:
            raise ConfigError(f"algorithm {label!r} has no variant", algo_lines[label])
        vals = {k: e.value for k, e in entries.items()}
        try:
            algo = AlgorithmConfig(**vals)
            cfg = TrialConfig(algo, system, signal=signal, noise_var=get("noise_var", 1e-3),
                              iterations=get("iterations", 1000), change=change,
                              seed=get("seed", 0))
        except ValueError as exc:
            raise ConfigError(f"algorithm {label!r}: {exc}", algo_lines[label]) from None
        out.append((label, cfg, runs))
    return out


def _num(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _system_lines(spec: SystemSpec) -> list[str]:
    lines = [f"kind = {spec.kind}", f"seed = {spec.seed}"]
    if spec.kind == "general":
        lines += [f"n_large = {spec.n_large}", f"small_var = {_num(spec.small_var)}",
                  f"min_large = {_num(spec.min_large)}"]
    else:
        lines += [f"delay = {spec.delay}", f"span = {spec.span}", f"gain_db = {_num(spec.gain_db)}"]
    return lines


def _algo_lines(algo: AlgorithmConfig) -> list[str]:
    return [f"variant = {algo.variant.value}", f"mu = {_num(algo.mu)}", f"kappa = {_num(algo.kappa)}",
            f"beta = {_num(algo.beta)}", f"q = {algo.q}", f"delta = {_num(algo.delta)}"]


def emit_config(configs: list[tuple[str, TrialConfig, int]]) -> str:
    """Inverse of :func:`parse_config` for configs sharing everything but the algorithm."""
    if not configs:
        raise ValueError("nothing to emit")
    _, first, runs = configs[0]
    for label, cfg, r in configs[1:]:
        same = (cfg.system == first.system and cfg.signal == first.signal
                and cfg.noise_var == first.noise_var and cfg.iterations == first.iterations
                and cfg.change == first.change and cfg.seed == first.seed and r == runs)
        if not same:
            raise ValueError(f"config {label!r} does not share the first config's setup")
    if first.system.meta.length != first.length:
        raise ValueError("system metadata does not describe the response")
    sig = first.signal
    lines = ["[system]", *_system_lines(first.system.meta), "",
             "[signal]", f"kind = {sig.kind.value}", f"variance = {_num(sig.variance)}",
             f"ar_coeff = {_num(sig.ar_coeff)}", f"normalize = {str(sig.normalize).lower()}", "",
             "[run]", f"L = {first.length}", f"noise_var = {_num(first.noise_var)}",
             f"iterations = {first.iterations}", f"runs = {runs}", f"seed = {first.seed}"]
    if first.change is not None:
        ch = first.change
        lines += [f"change.at = {ch.at_iteration}", f"change.delay = {ch.new_delay}",
                  f"change.gain_db = {_num(ch.gain_db)}"]
    for label, cfg, _ in configs:
        lines += ["", f"[algorithm.{label}]", *_algo_lines(cfg.algo)]
    return "\n".join(lines) + "\n"


def describe(label: str, cfg: TrialConfig, runs: int) -> str:
    """Every resolved parameter of one config, one ``key = value`` per line."""
    lines = [f"[{label}]", *_algo_lines(cfg.algo), f"gamma = {_num(cfg.algo.gamma)}",
             *(f"system.{ln}" for ln in _system_lines(cfg.system.meta)),
             f"system.energy = {_num(cfg.system.energy)}",
             f"signal.kind = {cfg.signal.kind.value}", f"signal.variance = {_num(cfg.signal.variance)}",
             f"signal.ar_coeff = {_num(cfg.signal.ar_coeff)}",
             f"signal.normalize = {str(cfg.signal.normalize).lower()}",
             f"L = {cfg.length}", f"noise_var = {_num(cfg.noise_var)}",
             f"iterations = {cfg.iterations}", f"runs = {runs}"]
    if cfg.change is not None:
        lines += [f"change.at = {cfg.change.at_iteration}", f"change.delay = {cfg.change.new_delay}",
                  f"change.gain_db = {_num(cfg.change.gain_db)}"]
    return "\n".join(lines) + "\n"
