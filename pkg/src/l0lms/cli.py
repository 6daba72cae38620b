"""Command-line driver: ``l0lms run --preset exp2 --out results/``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, describe, parse_config
from .filters import DEFAULT_DELTA, DivergenceError
from .sim import (
    DEFAULT_TOL_DB,
    DEFAULT_WINDOW,
    PRESET_IDS,
    LearningCurve,
    TrialConfig,
    monte_carlo,
    preset,
    steady_state,
)

log = logging.getLogger("l0lms")


@dataclass(frozen=True)
class RunRequest:
    output_dir: Path
    preset: Optional[str] = None
    config_path: Optional[Path] = None
    runs_override: Optional[int] = None
    seed: int = 0
    system_seed: int = 0
    linear: bool = False
    workers: int = 1

    def __post_init__(self):
        if (self.preset is None) == (self.config_path is None):
            raise ValueError("exactly one of preset / config_path must be given")
        if self.runs_override is not None and self.runs_override < 1:
            raise ValueError("runs must be >= 1")


def summary_window(cfg: TrialConfig) -> tuple[int, int, int]:
    """``(start, stop, window)`` used for the summary statistics.

    Statistics are taken on the last segment (after the change event if there
    is one); the window is capped at a tenth of that segment.
    """
    start = 0
    if cfg.change is not None and cfg.change.at_iteration < cfg.iterations:
        start = cfg.change.at_iteration
    seg = cfg.iterations - start
    window = min(DEFAULT_WINDOW, max(1, seg // 10))
    return start, cfg.iterations, window


def _fmt_db(v: float) -> str:
    if np.isneginf(v):
        return "-inf"
    return f"{v:.6f}"


def _fmt_lin(v: float) -> str:
    return f"{v:.6e}"


def _load(req: RunRequest) -> tuple[str, list[tuple[str, TrialConfig, int]]]:
    if req.preset is not None:
        overrides = {"seed": req.seed, "system_seed": req.system_seed}
        if req.runs_override is not None:
            overrides["runs"] = req.runs_override
        return req.preset, preset(req.preset, overrides)
    path = Path(req.config_path)
    configs = parse_config(path.read_text())
    if req.runs_override is not None:
        configs = [(label, cfg, req.runs_override) for label, cfg, _ in configs]
    return path.stem, configs


def _meta_text(name: str, configs, req: RunRequest) -> str:
    head = [
        f"experiment = {name}",
        f"source = {'preset' if req.preset else req.config_path}",
        f"base_seed = {req.seed}",
        "msd = squared euclidean norm ||w - h||^2, ensemble mean over runs",
        "msd_index = value after n updates (row 0 is the all-zero initial filter)",
        "trial_seed = SeedSequence([base_seed, trial]); excitation stream 0, noise stream 1",
        f"units = {'linear' if req.linear else 'dB (10*log10), zero rendered as -inf'}",
        f"steady_state.tol_db = {DEFAULT_TOL_DB}",
        f"steady_state.window = min({DEFAULT_WINDOW}, segment // 10), last segment only",
        f"delta.default = {DEFAULT_DELTA}",
        "regressor.history = zero padded",
        "",
    ]
    return "\n".join(head) + "\n".join(describe(label, cfg, runs) for label, cfg, runs in configs)


def run(req: RunRequest) -> int:
    """Execute every configuration of the request and write the result files.

    Returns 0 on success, 1 if any configuration diverged.
    """
    name, configs = _load(req)
    out = Path(req.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    curves: dict[str, Optional[LearningCurve]] = {}
    summary = []
    status = 0
    for label, cfg, runs in configs:
        log.info("%s: %s, %d runs x %d iterations", name, label, runs, cfg.iterations)
        try:
            curve = monte_carlo(cfg, runs, req.seed, label, workers=req.workers)
        except DivergenceError as exc:
            log.error("%s: %s", label, exc)
            curves[label] = None
            summary.append([label, "diverged", f"iteration {exc.iteration}", runs, req.seed])
            status = 1
            continue
        curves[label] = curve
        start, stop, window = summary_window(cfg)
        if window < stop - start:
            st = steady_state(curve, window, DEFAULT_TOL_DB, start, stop)
            level = _fmt_db(st.level_db)
            reach = "not reached" if st.reach_iteration is None else str(st.reach_iteration)
        else:
            level, reach = "", ""
        summary.append([label, level, reach, runs, req.seed])

    n_rows = max(cfg.iterations for _, cfg, _ in configs)
    labels = [label for label, _, _ in configs]
    fmt = _fmt_lin if req.linear else _fmt_db
    with open(out / f"{name}_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", *labels])
        cols = []
        for label in labels:
            c = curves[label]
            if c is None:
                cols.append(["nan"] * n_rows)
            else:
                vals = c.msd if req.linear else c.db
                col = [fmt(v) for v in vals]
                cols.append(col + [""] * (n_rows - len(col)))
        for i in range(n_rows):
            w.writerow([i, *(col[i] for col in cols)])

    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "level_db", "reach_iteration", "runs", "seed"])
        w.writerows(summary)

    (out / f"{name}_meta.txt").write_text(_meta_text(name, configs, req))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l0lms", description="l0-norm constrained LMS experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a preset or a config file and write CSV learning curves")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESET_IDS)
    src.add_argument("--config", type=Path, help="key=value experiment file")
    r.add_argument("--out", type=Path, required=True, help="output directory")
    r.add_argument("--runs", type=int, help="override the ensemble size")
    r.add_argument("--seed", type=int, default=0, help="base seed for the trial realizations")
    r.add_argument("--system-seed", type=int, default=0, help="seed of the preset's unknown system")
    r.add_argument("--linear", action="store_true", help="write linear MSD instead of dB")
    r.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    r.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        req = RunRequest(args.out, preset=args.preset, config_path=args.config,
                         runs_override=args.runs, seed=args.seed, system_seed=args.system_seed,
                         linear=args.linear, workers=args.workers)
        return run(req)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"l0lms: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
