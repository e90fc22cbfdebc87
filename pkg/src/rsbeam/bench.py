"""Monte-Carlo benchmark over random channel draws.

Per-trial channel seeds are derived from (master_seed, trial) through a
splittable seed sequence, so records do not depend on execution order or on
the degree of parallelism. The CSV file is the data contract; plotting lives
outside the package (see docs/plotting.md).
"""

from __future__ import annotations

import dataclasses
import json
from time import perf_counter

import numpy as np

from .beamstruct import kkt_residuals
from .model import LN2, SystemConfig, generate_channel
from .solver import solve, solve_sdma

CSV_COLUMNS = (
    "trial",
    "seed",
    "wsr_nats",
    "wsr_bits",
    "outer_iters",
    "inner_iters",
    "time_s",
    "power_used",
    "y_nats",
    "converged",
    "kkt_resid",
    "sdma_wsr_nats",
)

TIMING_MODES = ("wall", "off")


@dataclasses.dataclass(frozen=True, eq=False)
class TrialRecord:
    """One Monte-Carlo trial. wall_time is measured (always > 0); every other
    field is a pure function of (cfg, master_seed, trial)."""

    trial: int
    seed: int
    wsr_nats: float
    wsr_bits: float
    outer_iters: int
    inner_iters: int
    wall_time: float
    power_used: float
    y_nats: float
    c: np.ndarray
    converged: bool
    kkt_resid: float
    sdma_wsr_nats: float | None


def trial_seed(master_seed, trial) -> int:
    """Channel seed of one trial: counter-keyed, independent of all others."""
    ss = np.random.SeedSequence((int(master_seed), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(cfg, master_seed, trial, compare_sdma=False, collect_trace=False):
    """Solve one random instance. Returns (TrialRecord, trace_entries)."""
    seed = trial_seed(master_seed, trial)
    H = generate_channel(cfg, seed)
    entries = [] if collect_trace else None
    sink = None
    if collect_trace:
        def sink(entry, _t=trial, _out=entries):
            _out.append({"trial": _t, **entry})
    t0 = perf_counter()
    sol = solve(H, cfg, trace_sink=sink)
    wall = perf_counter() - t0
    kkt = kkt_residuals(
        sol.W, sol.duals.y, sol.duals.lam, sol.duals.mu, sol.aux, H, cfg.sigma2, cfg
    ).max_residual()
    sdma = None
    if compare_sdma:
        sdma = solve_sdma(H, cfg).report.wsr
    record = TrialRecord(
        trial=trial,
        seed=seed,
        wsr_nats=sol.report.wsr,
        wsr_bits=sol.report.wsr / LN2,
        outer_iters=sol.outer_iterations,
        inner_iters=sol.inner_iterations,
        wall_time=max(wall, 1e-9),
        power_used=float(np.vdot(sol.W, sol.W).real),
        y_nats=sol.report.y,
        c=sol.report.c,
        converged=sol.converged,
        kkt_resid=kkt,
        sdma_wsr_nats=sdma,
    )
    return record, entries


def run_montecarlo(
    cfg: SystemConfig,
    trials,
    master_seed,
    parallel=1,
    compare_sdma=False,
    collect_trace=False,
):
    """Run `trials` independent instances. Returns (records, summary, traces).

    parallel > 1 distributes whole trials over worker processes; records come
    back in trial order and are identical to a serial run.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if parallel is None or int(parallel) == 1:
        out = [
            run_trial(cfg, master_seed, t, compare_sdma, collect_trace)
            for t in range(trials)
        ]
    else:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=int(parallel))(
            delayed(run_trial)(cfg, master_seed, t, compare_sdma, collect_trace)
            for t in range(trials)
        )
    records = [r for r, _ in out]
    traces = None
    if collect_trace:
        traces = [e for _, entries in out for e in entries]
    wsr = np.array([r.wsr_nats for r in records])
    wall = np.array([r.wall_time for r in records])
    summary = {
        "trials": trials,
        "converged": int(sum(r.converged for r in records)),
        "wsr_nats_mean": float(wsr.mean()),
        "wsr_nats_std": float(wsr.std()),
        "wsr_bits_mean": float(wsr.mean() / LN2),
        "wall_time_mean": float(wall.mean()),
        "wall_time_std": float(wall.std()),
    }
    return records, summary, traces


def _fmt(x):
    return "%.12g" % x


def format_csv(records, timing="wall") -> str:
    """Render records as CSV text (12 significant digits, fixed header).

    timing="off" writes 0 in the time_s column so the file is a pure function
    of the run configuration, byte-identical across repeats and parallelism.
    """
    if timing not in TIMING_MODES:
        raise ValueError("timing must be one of %s, got %r" % (TIMING_MODES, timing))
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.trial),
                    str(r.seed),
                    _fmt(r.wsr_nats),
                    _fmt(r.wsr_bits),
                    str(r.outer_iters),
                    str(r.inner_iters),
                    _fmt(r.wall_time) if timing == "wall" else "0",
                    _fmt(r.power_used),
                    _fmt(r.y_nats),
                    "1" if r.converged else "0",
                    _fmt(r.kkt_resid),
                    "" if r.sdma_wsr_nats is None else _fmt(r.sdma_wsr_nats),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(records, path, timing="wall"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(records, timing=timing))


def write_trace(traces, path):
    """One JSON object per line: outer-iteration state of every trial."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for entry in traces:
            fh.write(json.dumps(entry, sort_keys=True))
            fh.write("\n")
