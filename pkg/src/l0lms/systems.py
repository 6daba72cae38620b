"""Ground-truth sparse impulse responses and abrupt path changes."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "SystemSpec",
    "ImpulseResponse",
    "ChangeEvent",
    "gen_general_sparse",
    "gen_cluster_sparse",
    "apply_change",
    "build_system",
]


@dataclass(frozen=True)
class SystemSpec:
    """Generator parameters; enough to rebuild the response exactly.

    ``kind == "general"`` uses ``n_large`` and ``small_var``;
    ``kind == "cluster"`` uses ``delay``, ``span`` and ``gain_db``.
    """

    kind: str
    length: int
    seed: int = 0
    n_large: int = 0
    small_var: float = 0.0
    min_large: float = 0.0
    delay: int = 0
    span: int = 0
    gain_db: float = 0.0


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    h: np.ndarray
    large_idx: frozenset
    meta: SystemSpec

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 1 or h.size == 0:
            raise ValueError("impulse response must be a non-empty 1-D vector")
        if not np.all(np.isfinite(h)):
            raise ValueError("impulse response must be finite")
        idx = frozenset(int(i) for i in self.large_idx)
        if any(i < 0 or i >= h.size for i in idx):
            raise ValueError("large_idx out of range")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "large_idx", idx)

    def __eq__(self, other):
        if not isinstance(other, ImpulseResponse):
            return NotImplemented
        return (self.meta == other.meta and self.large_idx == other.large_idx
                and np.array_equal(self.h, other.h))

    def __hash__(self):
        return hash((self.meta, self.large_idx, self.h.tobytes()))

    def __len__(self):
        return self.h.size

    @property
    def energy(self) -> float:
        """``||h||^2``, the MSD of an all-zero estimate."""
        return float(np.dot(self.h, self.h))

    def active_region(self) -> tuple[int, int]:
        """Half-open ``[start, stop)`` holding the non-zero part."""
        if self.meta.kind == "cluster":
            return self.meta.delay, self.meta.delay + self.meta.span
        nz = np.flatnonzero(self.h)
        if nz.size == 0:
            return 0, 0
        return int(nz[0]), int(nz[-1]) + 1

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "value"])
        for i, v in enumerate(self.h):
            writer.writerow([i, repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class ChangeEvent:
    """Relocate the active cluster to ``new_delay`` and rescale it, from ``at_iteration`` on."""

    at_iteration: int
    new_delay: int
    gain_db: float = 0.0

    def __post_init__(self):
        if self.at_iteration < 1:
            raise ValueError("at_iteration must be >= 1")
        if self.new_delay < 0:
            raise ValueError("new_delay must be >= 0")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) % 2**64)


def gen_general_sparse(l: int, n_large: int, small_var: float, seed: int,
                       min_large: float = 0.0) -> ImpulseResponse:
    """Sparse response with ``n_large`` standard-normal taps at random positions.

    The remaining taps are Gaussian with variance ``small_var`` (exact zeros
    when ``small_var == 0``). With ``min_large > 0`` any large tap whose
    magnitude falls below it is redrawn, i.e. the large values follow a
    standard normal truncated to ``|v| >= min_large``.
    """
    if l < 1 or n_large < 1:
        raise ValueError("l and n_large must be >= 1")
    if n_large > l:
        raise ValueError(f"n_large={n_large} exceeds length l={l}")
    if small_var < 0:
        raise ValueError("small_var must be >= 0")
    if not 0 <= min_large < 3:
        raise ValueError("min_large must lie in [0, 3)")
    rng = _rng(seed)
    idx = rng.choice(l, size=n_large, replace=False)
    vals = rng.standard_normal(n_large)
    low = np.abs(vals) < min_large
    while low.any():
        vals[low] = rng.standard_normal(int(low.sum()))
        low = np.abs(vals) < min_large
    h = np.zeros(l)
    h[idx] = vals
    rest = np.setdiff1d(np.arange(l), idx)
    if small_var > 0 and rest.size:
        h[rest] = rng.normal(0.0, np.sqrt(small_var), rest.size)
    meta = SystemSpec("general", l, int(seed), n_large=n_large, small_var=float(small_var),
                      min_large=float(min_large))
    return ImpulseResponse(h, frozenset(idx.tolist()), meta)


def _cluster_shape(span: int, seed: int) -> np.ndarray:
    k = np.arange(span)
    tau = span / 4.0
    return np.exp(-k / tau) * _rng(seed).standard_normal(span)


def gen_cluster_sparse(l: int, delay: int, span: int, gain_db: float, seed: int) -> ImpulseResponse:
    """Single-cluster echo-path surrogate.

    ``h[delay + k] = g * exp(-k / tau) * u_k`` for ``0 <= k < span`` with
    ``u_k`` standard normal, ``tau = span / 4`` and ``g = 10**(gain_db/20)``;
    zero elsewhere.
    """
    if span < 1 or delay < 0:
        raise ValueError("span must be >= 1 and delay >= 0")
    if delay + span > l:
        raise ValueError(f"cluster [{delay}, {delay + span}) does not fit in length {l}")
    h = np.zeros(l)
    h[delay:delay + span] = 10.0 ** (gain_db / 20.0) * _cluster_shape(span, seed)
    meta = SystemSpec("cluster", l, int(seed), delay=delay, span=span, gain_db=float(gain_db))
    return ImpulseResponse(h, frozenset(range(delay, delay + span)), meta)


def apply_change(ir: ImpulseResponse, ev: ChangeEvent) -> ImpulseResponse:
    """Shift the active region to ``ev.new_delay`` and scale it by ``ev.gain_db``."""
    start, stop = ir.active_region()
    width = stop - start
    l = len(ir)
    if ev.new_delay + width > l:
        raise ValueError(
            f"shifted region [{ev.new_delay}, {ev.new_delay + width}) does not fit in length {l}"
        )
    g = 10.0 ** (ev.gain_db / 20.0)
    h = np.zeros(l)
    h[ev.new_delay:ev.new_delay + width] = g * ir.h[start:stop]
    shift = ev.new_delay - start
    large = frozenset(i + shift for i in ir.large_idx)
    meta = ir.meta
    if meta.kind == "cluster":
        meta = replace(meta, delay=ev.new_delay, gain_db=meta.gain_db + ev.gain_db)
    return ImpulseResponse(h, large, meta)


def build_system(spec: SystemSpec) -> ImpulseResponse:
    """Regenerate a response from its recorded parameters."""
    if spec.kind == "general":
        return gen_general_sparse(spec.length, spec.n_large, spec.small_var, spec.seed,
                                  spec.min_large)
    if spec.kind == "cluster":
        return gen_cluster_sparse(spec.length, spec.delay, spec.span, spec.gain_db, spec.seed)
    raise ValueError(f"unknown system kind {spec.kind!r}")
