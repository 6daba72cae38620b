"""Seeded excitation/noise sources and desired-signal synthesis."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .systems import ImpulseResponse

__all__ = [
    "SignalKind",
    "SignalSpec",
    "gen_white",
    "color_ar1",
    "normalize_power",
    "synth_desired",
    "generate_input",
]


class SignalKind(str, enum.Enum):
    WHITE = "white"
    AR1 = "ar1"


@dataclass(frozen=True)
class SignalSpec:
    kind: SignalKind = SignalKind.WHITE
    variance: float = 1.0
    ar_coeff: float = 0.0
    normalize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        if not self.variance > 0:
            raise ValueError(f"signal variance must be > 0, got {self.variance}")
        if not abs(self.ar_coeff) < 1:
            raise ValueError(f"ar_coeff must satisfy |a| < 1, got {self.ar_coeff}")
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "ar_coeff", float(self.ar_coeff))
        object.__setattr__(self, "normalize", bool(self.normalize))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed) % 2**64)


def gen_white(n: int, variance: float, seed) -> np.ndarray:
    """``n`` i.i.d. zero-mean Gaussian samples of the given variance."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if variance < 0:
        raise ValueError("variance must be >= 0")
    return np.sqrt(variance) * _rng(seed).standard_normal(n)


def color_ar1(u: np.ndarray, a: float) -> np.ndarray:
    """First-order autoregressive filter ``x(n) = a x(n-1) + u(n)``, zero past."""
    if not abs(a) < 1:
        raise ValueError(f"AR coefficient must satisfy |a| < 1, got {a}")
    u = np.asarray(u, dtype=float)
    x = np.empty_like(u)
    acc = 0.0
    for i, ui in enumerate(u):
        acc = a * acc + ui
        x[i] = acc
    return x


def normalize_power(x: np.ndarray) -> np.ndarray:
    """Scale ``x`` to unit sample variance."""
    x = np.asarray(x, dtype=float)
    var = np.var(x)
    if not var > 0:
        raise ValueError("cannot normalize a zero-power sequence")
    return x / np.sqrt(var)


def synth_desired(x: np.ndarray, h, noise_var: float, seed,
                  h_after=None, change_at: int | None = None) -> np.ndarray:
    """Noisy output of the unknown system driven by ``x``.

    ``d(n) = sum_k h[k] x(n-k) + v(n)`` with ``x(m) = 0`` for ``m < 0`` and
    ``v`` white Gaussian of variance ``noise_var``. When ``h_after`` and
    ``change_at`` are given the system switches to ``h_after`` for
    ``n >= change_at``.
    """
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    x = np.asarray(x, dtype=float)
    hv = h.h if isinstance(h, ImpulseResponse) else np.asarray(h, dtype=float)
    n = x.size
    d = np.convolve(x, hv)[:n]
    if h_after is not None:
        if change_at is None:
            raise ValueError("change_at is required with h_after")
        hb = h_after.h if isinstance(h_after, ImpulseResponse) else np.asarray(h_after, dtype=float)
        d[change_at:] = np.convolve(x, hb)[change_at:n]
    if noise_var > 0:
        d = d + gen_white(n, noise_var, seed)
    return d


def generate_input(spec: SignalSpec, n: int, seed) -> np.ndarray:
    """Excitation sequence of length ``n`` described by ``spec``."""
    x = gen_white(n, spec.variance, seed)
    if spec.kind is SignalKind.AR1:
        x = color_ar1(x, spec.ar_coeff)
    if spec.normalize:
        x = normalize_power(x)
    return x
