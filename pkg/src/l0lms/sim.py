"""Monte-Carlo learning curves and the experiment presets."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .filters import AlgorithmConfig, DivergenceError, Variant, _advance
from .signals import SignalKind, SignalSpec, generate_input, synth_desired
from .systems import (
    ChangeEvent,
    ImpulseResponse,
    apply_change,
    gen_cluster_sparse,
    gen_general_sparse,
)

__all__ = [
    "TrialConfig",
    "LearningCurve",
    "SteadyStateStats",
    "msd",
    "derive_seed",
    "run_trial",
    "monte_carlo",
    "steady_state",
    "reach_level",
    "trailing_mean_db",
    "preset",
    "PRESET_IDS",
    "DEFAULT_WINDOW",
    "DEFAULT_TOL_DB",
]

DEFAULT_WINDOW = 2000
DEFAULT_TOL_DB = 1.0

EXCITATION_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class TrialConfig:
    algo: AlgorithmConfig
    system: ImpulseResponse
    signal: SignalSpec = field(default_factory=SignalSpec)
    noise_var: float = 1e-3
    iterations: int = 1000
    change: Optional[ChangeEvent] = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        if self.algo.variant.attracting and self.algo.q > len(self.system):
            raise ValueError(f"q={self.algo.q} exceeds filter length {len(self.system)}")
        if self.change is not None:
            start, stop = self.system.active_region()
            if self.change.new_delay + (stop - start) > len(self.system):
                raise ValueError("change event moves the active region past the filter length")

    @property
    def length(self) -> int:
        return len(self.system)


@dataclass(frozen=True, eq=False)
class LearningCurve:
    """Per-iteration MSD, ``msd[n]`` measured after ``n`` updates."""

    msd: np.ndarray
    runs: int = 1
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.msd, dtype=float)
        if m.ndim != 1 or not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("MSD values must be finite and nonnegative")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        object.__setattr__(self, "msd", m)

    def __len__(self):
        return self.msd.size

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.msd)


@dataclass(frozen=True)
class SteadyStateStats:
    level_db: float
    reach_iteration: Optional[int]
    window: int
    tol_db: float

    @property
    def reached(self) -> bool:
        return self.reach_iteration is not None


def msd(w_est, w_true) -> float:
    """Squared Euclidean deviation ``||w_est - w_true||^2``."""
    a = np.asarray(w_est, dtype=float)
    b = np.asarray(w_true, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    dw = a - b
    return float(np.dot(dw, dw))


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trial seed; depends only on ``(base_seed, index)``."""
    ss = np.random.SeedSequence([int(base_seed) % 2**64, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _streams(seed: int):
    root = int(seed) % 2**64
    return (np.random.SeedSequence([root, EXCITATION_STREAM]),
            np.random.SeedSequence([root, NOISE_STREAM]))


def run_trial(cfg: TrialConfig, label: str = "") -> LearningCurve:
    """One realization of the adaptive identification experiment."""
    n_iter = cfg.iterations
    l = cfg.length
    ex_seed, noise_seed = _streams(cfg.seed)
    x = generate_input(cfg.signal, n_iter, ex_seed)
    h0 = cfg.system.h
    h1 = None
    at = n_iter
    if cfg.change is not None:
        h1 = apply_change(cfg.system, cfg.change).h
        at = min(cfg.change.at_iteration, n_iter)
    d = synth_desired(x, h0, cfg.noise_var, noise_seed,
                      h_after=h1, change_at=at if h1 is not None else None)

    # regressors[n] == [x(n), x(n-1), ..., x(n-L+1)] with zero history
    padded = np.concatenate([np.zeros(l - 1), x])
    regressors = np.lib.stride_tricks.sliding_window_view(padded, l)[:, ::-1]

    w = np.zeros(l)
    f = np.zeros(l)
    out = np.empty(n_iter)
    algo = cfg.algo
    h = h0
    for n in range(n_iter):
        if n == at:
            h = h1
        dw = w - h
        m = float(np.dot(dw, dw))
        if not math.isfinite(m):
            raise DivergenceError(n - 1)
        out[n] = m
        _advance(w, f, n, regressors[n], d[n], algo)
    if not np.all(np.isfinite(w)):
        raise DivergenceError(n_iter - 1)
    return LearningCurve(out, 1, label)


def _trial_msd(args):
    cfg, base_seed, i = args
    return run_trial(replace(cfg, seed=derive_seed(base_seed, i))).msd


def monte_carlo(cfg: TrialConfig, runs: int, base_seed: int, label: str = "",
                workers: int = 1) -> LearningCurve:
    """Ensemble-average ``runs`` independent trials.

    Trial ``i`` uses ``derive_seed(base_seed, i)``. Curves are summed in
    trial-index order, so the result does not depend on ``workers``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    jobs = [(cfg, base_seed, i) for i in range(runs)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(_trial_msd, jobs))
    else:
        curves = [_trial_msd(j) for j in jobs]
    total = np.zeros(cfg.iterations)
    for c in curves:
        total += c
    return LearningCurve(total / runs, runs, label)


def trailing_mean_db(curve_db: np.ndarray, window: int) -> np.ndarray:
    """``out[k]`` is the mean of ``curve_db[k : k + window]``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if np.isneginf(curve_db).any():
        # cumulative sums cannot carry -inf; fall back to a direct moving mean
        v = np.lib.stride_tricks.sliding_window_view(curve_db, window)
        return v.mean(axis=1)
    c = np.concatenate([[0.0], np.cumsum(curve_db)])
    return (c[window:] - c[:-window]) / window


def reach_level(curve: LearningCurve, level_db: float, window: int,
                start: int = 0, stop: Optional[int] = None) -> Optional[int]:
    """First ``n`` in ``[start, stop)`` whose trailing-window mean dB-MSD is <= ``level_db``.

    The trailing window covers ``n - window + 1 .. n`` and must lie inside the
    segment, so the earliest possible answer is ``start + window - 1``.
    Returns ``None`` when the level is never reached.
    """
    stop = len(curve) if stop is None else stop
    seg = curve.db[start:stop]
    if window > seg.size:
        return None
    tm = trailing_mean_db(seg, window)
    slack = 1e-12 * max(1.0, abs(level_db)) if math.isfinite(level_db) else 0.0
    hits = np.flatnonzero(tm <= level_db + slack)
    if hits.size == 0:
        return None
    return int(start + hits[0] + window - 1)


def steady_state(curve: LearningCurve, window: int = DEFAULT_WINDOW,
                 tol_db: float = DEFAULT_TOL_DB, start: int = 0,
                 stop: Optional[int] = None) -> SteadyStateStats:
    """Steady-state level and the iteration at which it is first reached.

    The level is the mean dB-MSD over the last ``window`` samples of the
    segment ``[start, stop)``; ``reach_iteration`` is the first ``n`` whose
    trailing-window mean is within ``tol_db`` of that level. A curve that only
    gets there inside the final window was still falling while the level was
    measured and is reported as not reached. For a curve with a change event
    call this once per segment.
    """
    if window < 1 or tol_db <= 0:
        raise ValueError("window must be >= 1 and tol_db > 0")
    stop = len(curve) if stop is None else stop
    if not 0 <= start < stop <= len(curve):
        raise ValueError(f"bad segment [{start}, {stop}) for a curve of length {len(curve)}")
    if window >= stop - start:
        raise ValueError(f"window={window} must be shorter than the segment ({stop - start})")
    seg_db = curve.db[start:stop]
    level = float(np.mean(seg_db[-window:]))
    reach = reach_level(curve, level + tol_db, window, start, stop)
    if reach is not None and reach >= stop - window:
        reach = None
    return SteadyStateStats(level, reach, window, tol_db)


# ----------------------------------------------------------------------------
# presets
# ----------------------------------------------------------------------------

PRESET_IDS = ("exp1", "exp2", "exp3")

EXP2_KAPPAS = (2e-5, 8e-5)
# "large" taps kept outside the attraction range (-1/beta, 1/beta) for beta = 5
LARGE_FLOOR = 0.2
EXP3_LCN = (8, 16, 32, 64, 128)
EXP3_KAPPAS = (8e-5, 5.5e-5, 4.5e-5, 3.5e-5, 1e-6)

_OVERRIDE_KEYS = {"runs", "seed", "iterations", "change_at", "system_seed"}


def _exp1(o):
    iterations = o.get("iterations", 60_000)
    change_at = o.get("change_at", iterations // 2)
    system = gen_cluster_sparse(500, delay=100, span=96, gain_db=0.0, seed=o["system_seed"])
    change = ChangeEvent(change_at, new_delay=300, gain_db=-6.0)
    signal = SignalSpec(SignalKind.AR1, variance=1.0, ar_coeff=0.8, normalize=True)
    base = dict(system=system, signal=signal, noise_var=1e-3, iterations=iterations,
                change=change, seed=o["seed"])
    return [
        ("nlms", TrialConfig(AlgorithmConfig(Variant.NLMS, mu=1.0), **base)),
        ("l0nlms", TrialConfig(AlgorithmConfig(Variant.L0NLMS, mu=1.0, kappa=8e-6, beta=5.0, q=4),
                               **base)),
    ]


def _exp2(o):
    system = gen_general_sparse(128, 8, 0.0, seed=o["system_seed"], min_large=LARGE_FLOOR)
    base = dict(system=system, signal=SignalSpec(SignalKind.WHITE, 1.0), noise_var=1e-4,
                iterations=o.get("iterations", 5000), seed=o["seed"])
    out = [("lms", TrialConfig(AlgorithmConfig(Variant.LMS, mu=1e-2), **base))]
    for k in EXP2_KAPPAS:
        algo = AlgorithmConfig(Variant.L0LMS, mu=1e-2, kappa=k, beta=5.0, q=4)
        out.append((f"l0lms_k{k:g}", TrialConfig(algo, **base)))
    return out


def _exp3(o):
    common = dict(signal=SignalSpec(SignalKind.WHITE, 1.0), noise_var=1e-3,
                  iterations=o.get("iterations", 10_000), seed=o["seed"])
    out = []
    for lcn, k in zip(EXP3_LCN, EXP3_KAPPAS):
        system = gen_general_sparse(128, lcn, 1e-4, seed=o["system_seed"], min_large=LARGE_FLOOR)
        algo = AlgorithmConfig(Variant.L0LMS, mu=6e-3, kappa=k, beta=5.0, q=4)
        out.append((f"l0lms_lcn{lcn}", TrialConfig(algo, system=system, **common)))
    # LMS is insensitive to sparsity; one reference on the densest system
    ref = gen_general_sparse(128, EXP3_LCN[-1], 1e-4, seed=o["system_seed"],
                             min_large=LARGE_FLOOR)
    out.append(("lms", TrialConfig(AlgorithmConfig(Variant.LMS, mu=6e-3), system=ref, **common)))
    return out


def preset(exp_id: str, overrides: Optional[dict] = None) -> list[tuple[str, TrialConfig, int]]:
    """Configurations for one of the three reproduction experiments.

    ``overrides`` may set ``runs`` (default 100), ``seed`` (trial seed,
    default 0), ``system_seed`` (default 0), ``iterations`` and, for exp1,
    ``change_at`` (default: half the horizon).
    """
    o = dict(overrides or {})
    unknown = set(o) - _OVERRIDE_KEYS
    if unknown:
        raise ValueError(f"unknown preset overrides: {sorted(unknown)}")
    o.setdefault("seed", 0)
    o.setdefault("system_seed", 0)
    runs = o.get("runs", 100)
    builders = {"exp1": _exp1, "exp2": _exp2, "exp3": _exp3}
    if exp_id not in builders:
        raise ValueError(f"unknown preset {exp_id!r}; expected one of {PRESET_IDS}")
    return [(label, cfg, runs) for label, cfg in builders[exp_id](o)]
