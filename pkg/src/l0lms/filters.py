"""LMS-family update recursions with an optional l0 zero attractor.

Four variants share one update path:

* ``LMS``     -- ``w += mu * e * x``
* ``NLMS``    -- ``w += mu * e * x / (delta + x.x)``
* ``L0LMS``   -- LMS plus ``kappa * f`` where ``f`` caches the zero attractor
* ``L0NLMS``  -- NLMS plus the same attraction term

The attractor cache ``f`` is refreshed sequentially: at iteration ``n`` only
the coefficients ``j`` with ``j % q == n % q`` get a fresh value, the rest
reuse whatever was computed on earlier iterations. The refresh happens before
the weight update and uses the pre-update weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Variant",
    "AlgorithmConfig",
    "FilterState",
    "InputTap",
    "DivergenceError",
    "compute_error",
    "sgn",
    "attractor_exact",
    "attractor_taylor",
    "attractor_taylor_vec",
    "update_indices",
    "step",
    "trajectory",
]


class DivergenceError(RuntimeError):
    """A coefficient became non-finite."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"adaptive filter diverged at iteration {iteration}")


class Variant(str, enum.Enum):
    LMS = "lms"
    NLMS = "nlms"
    L0LMS = "l0lms"
    L0NLMS = "l0nlms"

    @property
    def normalized(self) -> bool:
        return self in (Variant.NLMS, Variant.L0NLMS)

    @property
    def attracting(self) -> bool:
        return self in (Variant.L0LMS, Variant.L0NLMS)

    @classmethod
    def parse(cls, text: "str | Variant") -> "Variant":
        if isinstance(text, Variant):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        for v in cls:
            if v.value == key:
                return v
        raise ValueError(f"unknown variant {text!r}; expected one of {[v.value for v in cls]}")


DEFAULT_DELTA = 1e-5
DEFAULT_BETA = 5.0
DEFAULT_Q = 4


@dataclass(frozen=True)
class AlgorithmConfig:
    """Algorithm variant plus its tuning constants.

    ``kappa`` and ``beta`` only matter for the attracting variants and
    ``delta`` only for the normalized ones; they are still validated.
    """

    variant: Variant = Variant.LMS
    mu: float = 1e-2
    kappa: float = 0.0
    beta: float = DEFAULT_BETA
    q: int = DEFAULT_Q
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        for name in ("mu", "kappa", "beta", "delta"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ValueError(f"{name} must be a finite real, got {val!r}")
            object.__setattr__(self, name, float(val))
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be an integer >= 1, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))

    @property
    def gamma(self) -> float:
        """Weight of the l0 penalty in the cost, ``kappa / mu``."""
        return self.kappa / self.mu


@dataclass
class FilterState:
    w: np.ndarray
    f_cache: np.ndarray
    n: int = 0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.f_cache = np.asarray(self.f_cache, dtype=float)
        if self.w.ndim != 1 or self.w.shape != self.f_cache.shape:
            raise ValueError("w and f_cache must be 1-D vectors of equal length")
        if self.n < 0:
            raise ValueError("iteration index must be nonnegative")

    @classmethod
    def zeros(cls, length: int) -> "FilterState":
        if length < 1:
            raise ValueError("filter length must be >= 1")
        return cls(np.zeros(length), np.zeros(length), 0)

    @property
    def length(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "FilterState":
        return FilterState(self.w.copy(), self.f_cache.copy(), self.n)


@dataclass(frozen=True)
class InputTap:
    """Regressor ``[x(n), x(n-1), ..., x(n-L+1)]`` and desired sample ``d(n)``."""

    x_vec: np.ndarray = field(repr=False)
    d: float

    def __post_init__(self):
        x = np.asarray(self.x_vec, dtype=float)
        if x.ndim != 1:
            raise ValueError("x_vec must be 1-D")
        if not np.all(np.isfinite(x)) or not math.isfinite(self.d):
            raise ValueError("tap values must be finite")
        object.__setattr__(self, "x_vec", x)


def compute_error(state: FilterState, tap: InputTap) -> float:
    """Return ``d - x.w`` without touching the state."""
    if tap.x_vec.shape[0] != state.length:
        raise ValueError(
            f"regressor length {tap.x_vec.shape[0]} does not match filter length {state.length}"
        )
    return float(tap.d - np.dot(tap.x_vec, state.w))


def sgn(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def attractor_exact(x: float, beta: float) -> float:
    """Gradient of the exponential l0 surrogate, ``-beta*sgn(x)*exp(-beta*|x|)``.

    Only used as a reference for :func:`attractor_taylor`.
    """
    return -beta * sgn(x) * math.exp(-beta * abs(x))


def attractor_taylor(x: float, beta: float) -> float:
    """Piecewise-linear zero attractor ``f_beta(x)``.

    Nonzero only on ``[-1/beta, 0)`` and ``(0, 1/beta]``, where it equals
    ``beta**2 * x + beta`` and ``beta**2 * x - beta`` respectively. Both
    branches vanish at ``|x| = 1/beta`` so the function is continuous
    everywhere except at the origin.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    edge = 1.0 / beta
    if -edge <= x < 0:
        return beta * beta * x + beta
    if 0 < x <= edge:
        return beta * beta * x - beta
    return 0.0


def attractor_taylor_vec(w: np.ndarray, beta: float) -> np.ndarray:
    """Vectorized ``f_beta``: ``-beta * max(0, 1 - beta*|w|) * sign(w)``."""
    return -beta * np.maximum(0.0, 1.0 - beta * np.abs(w)) * np.sign(w)


def update_indices(n: int, q: int, l: int) -> np.ndarray:
    """Coefficients whose attractor is refreshed at iteration ``n``.

    Returns the sorted residue class ``{j in [0, l) : j % q == n % q}``.
    """
    if q < 1 or l < 1:
        raise ValueError("q and l must be >= 1")
    if q > l:
        raise ValueError(f"partial-update divisor q={q} exceeds filter length l={l}")
    if n < 0:
        raise ValueError("iteration index must be nonnegative")
    return np.arange(n % q, l, q)


def _advance(w: np.ndarray, f: np.ndarray, n: int, x: np.ndarray, d: float,
             cfg: AlgorithmConfig) -> float:
    # In-place update shared by step() and the simulation loop; returns e.
    e = d - np.dot(x, w)
    if cfg.variant.attracting:
        t = n % cfg.q
        f[t::cfg.q] = attractor_taylor_vec(w[t::cfg.q], cfg.beta)
    if cfg.variant.normalized:
        g = cfg.mu * e / (cfg.delta + np.dot(x, x))
    else:
        g = cfg.mu * e
    w += g * x
    if cfg.variant.attracting:
        w += cfg.kappa * f
    return float(e)


def step(state: FilterState, tap: InputTap, cfg: AlgorithmConfig) -> tuple[FilterState, float]:
    """Advance the filter by one sample.

    Parameters
    ----------
    state : FilterState
        Current coefficients, attractor cache and iteration index. Not modified.
    tap : InputTap
        Regressor and desired sample for this iteration.
    cfg : AlgorithmConfig
        Variant and constants.

    Returns
    -------
    (FilterState, float)
        The advanced state and the a-priori error ``e(n)``.

    Raises
    ------
    DivergenceError
        If any updated coefficient is not finite.
    """
    if tap.x_vec.shape[0] != state.length:
        raise ValueError(
            f"regressor length {tap.x_vec.shape[0]} does not match filter length {state.length}"
        )
    if cfg.variant.attracting and cfg.q > state.length:
        raise ValueError(f"q={cfg.q} exceeds filter length {state.length}")
    new = state.copy()
    e = _advance(new.w, new.f_cache, state.n, tap.x_vec, tap.d, cfg)
    if not np.all(np.isfinite(new.w)):
        raise DivergenceError(state.n)
    new.n = state.n + 1
    return new, e


def trajectory(x_regs: np.ndarray, d: np.ndarray, cfg: AlgorithmConfig) -> np.ndarray:
    """Weights after every update, starting from the zero state.

    ``x_regs[n]`` is the regressor of iteration ``n``. Row ``n`` of the
    result holds ``w(n)``, so the array has ``len(d) + 1`` rows.
    """
    x_regs = np.asarray(x_regs, dtype=float)
    d = np.asarray(d, dtype=float)
    if x_regs.ndim != 2 or x_regs.shape[0] != d.shape[0]:
        raise ValueError("need one regressor row per desired sample")
    n_iter, l = x_regs.shape
    if cfg.variant.attracting and cfg.q > l:
        raise ValueError(f"q={cfg.q} exceeds filter length {l}")
    w = np.zeros(l)
    f = np.zeros(l)
    out = np.empty((n_iter + 1, l))
    out[0] = w
    for n in range(n_iter):
        _advance(w, f, n, x_regs[n], d[n], cfg)
        if not np.all(np.isfinite(w)):
            raise DivergenceError(n)
        out[n + 1] = w
    return out
