"""Outer alternating optimization for weighted sum-rate beamforming.

One outer iteration refreshes the auxiliary variables at the current
beamformers (which makes the surrogate touch the true rates), then hands the
resulting convex subproblem to the dual fixed-point inner solver. Progress is
measured on the true weighted sum rate, so the iteration is a monotone ascent
up to the inner solver's tolerance.
"""

from __future__ import annotations

import dataclasses
from time import perf_counter

import numpy as np

from .beamstruct import DualState, hfpi_solve
from .fp_core import AuxiliaryState, make_aux
from .model import RateReport, SystemConfig, _split_common_rate, evaluate
from .validation import check_channel


@dataclasses.dataclass(frozen=True, eq=False)
class Solution:
    """Result of one solver run.

    W is the final beamforming matrix, report its true-rate evaluation, duals
    and aux the state of the last inner solve, wsr_trace the per-outer-
    iteration weighted sum rate (entry 0 is the initializer). wall_time is
    measured and therefore the one field excluded from the bit-for-bit
    determinism contract.
    """

    W: np.ndarray
    report: RateReport
    duals: DualState | None
    aux: AuxiliaryState | None
    outer_iterations: int
    inner_iterations: int
    converged: bool
    wsr_trace: np.ndarray
    wall_time: float


def allocate_common_rate(delta, r0) -> np.ndarray:
    """Optimal split of the decodable common rate across users.

    Gives min(r0) entirely to the user with the largest weight (lowest index
    on ties), zero to everyone else. r0 must be non-negative.
    """
    delta = np.asarray(delta, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    if delta.ndim != 1 or delta.shape != r0.shape:
        raise ValueError(
            "delta and r0 must be 1-D with matching shapes, got %s and %s"
            % (delta.shape, r0.shape)
        )
    if np.any(r0 < 0):
        raise ValueError("common rates must be non-negative")
    return _split_common_rate(delta, r0)


def initialize_beamformers(H, cfg: SystemConfig) -> np.ndarray:
    """Matched-filter private beams plus a dominant-direction common beam.

    Each private beam points along its user's channel, the common beam along
    the dominant left singular vector of H, with the power budget split
    equally across beams. Zero channel columns get a zero beam and their
    share is redistributed equally among the remaining beams.
    """
    H = check_channel(H, cfg.L, cfg.K)
    L, K = cfg.L, cfg.K
    norms = np.linalg.norm(H, axis=0)
    active = norms > 0
    W = np.zeros((L, K + 1), dtype=np.complex128)
    n_beams = int(active.sum()) + (1 if active.any() else 0)
    if n_beams == 0:
        return W
    share = cfg.Pt / n_beams
    u = np.linalg.svd(H)[0][:, 0]
    W[:, 0] = np.sqrt(share) * u
    idx = np.flatnonzero(active)
    W[:, 1 + idx] = np.sqrt(share) * H[:, idx] / norms[idx]
    return W


def _initialize_private_only(H, cfg: SystemConfig) -> np.ndarray:
    """Matched-filter private beams only; the common column stays zero."""
    H = check_channel(H, cfg.L, cfg.K)
    W = np.zeros((cfg.L, cfg.K + 1), dtype=np.complex128)
    norms = np.linalg.norm(H, axis=0)
    idx = np.flatnonzero(norms > 0)
    if idx.size == 0:
        return W
    share = cfg.Pt / idx.size
    W[:, 1 + idx] = np.sqrt(share) * H[:, idx] / norms[idx]
    return W


def _ao_loop(H, cfg, W, lam0, trace_sink, inner_sink=None):
    t_start = perf_counter()
    sigma2 = cfg.sigma2
    report = evaluate(W, H, cfg)
    wsr = report.wsr
    trace = [wsr]
    lam = lam0.copy()
    mu = 1.0
    best_wsr, best = wsr, (W, report, None, None)
    duals = None
    aux = None
    inner_total = 0
    inner_ok = True
    converged = False
    n = 0
    for n in range(1, cfg.max_outer + 1):
        aux = make_aux(W, H, sigma2)
        W_new, duals, _ = hfpi_solve(H, sigma2, aux, cfg, lam, mu, iter_sink=inner_sink)
        inner_total += duals.n_iter
        inner_ok = inner_ok and duals.converged
        if cfg.warm_start:
            lam = duals.lam.copy()
            mu = duals.mu
        else:
            lam = lam0.copy()
            mu = 1.0
        report_new = evaluate(W_new, H, cfg)
        wsr_new = report_new.wsr
        trace.append(wsr_new)
        if trace_sink is not None:
            trace_sink(
                {
                    "n": n,
                    "wsr": wsr_new,
                    "lambda": duals.lam.tolist(),
                    "mu": duals.mu,
                    "residuals": {
                        "complementarity": float(np.max(np.abs(duals.compl_residuals))),
                        "power": duals.power_residual,
                        "inner_iterations": duals.n_iter,
                        "inner_converged": duals.converged,
                    },
                }
            )
        if wsr_new > best_wsr:
            best_wsr, best = wsr_new, (W_new, report_new, duals, aux)
        delta_wsr = abs(wsr_new - wsr)
        W, report, wsr = W_new, report_new, wsr_new
        if delta_wsr < cfg.tol_outer:
            converged = True
            break
    if best_wsr > wsr:
        # ascent broke somewhere (unconverged inner solve): keep the best seen
        W, report, best_duals, best_aux = best
        duals = best_duals if best_duals is not None else duals
        aux = best_aux if best_aux is not None else aux
    return Solution(
        W=W,
        report=report,
        duals=duals,
        aux=aux,
        outer_iterations=n,
        inner_iterations=inner_total,
        converged=converged and inner_ok,
        wsr_trace=np.asarray(trace),
        wall_time=perf_counter() - t_start,
    )


def solve(H, cfg: SystemConfig, W_init=None, trace_sink=None, inner_sink=None) -> Solution:
    """Maximize the weighted sum rate with a common plus K private streams.

    Deterministic for identical (H, cfg, W_init): no randomness anywhere in
    the pipeline. trace_sink, when given, receives one dict per outer
    iteration (wsr, duals, residuals); inner_sink one dict per dual
    fixed-point iteration inside every inner solve. A custom W_init must
    satisfy the power budget; by default the matched-filter initializer is
    used.
    """
    H = check_channel(H, cfg.L, cfg.K)
    if W_init is None:
        W = initialize_beamformers(H, cfg)
    else:
        W = np.array(W_init, dtype=np.complex128)
    lam0 = np.full(cfg.K, cfg.delta_max / cfg.K)
    return _ao_loop(H, cfg, W, lam0, trace_sink, inner_sink)


def solve_sdma(H, cfg: SystemConfig, W_init=None, trace_sink=None) -> Solution:
    """Private-streams-only baseline under the same alternating scheme.

    The common beam is pinned to zero (its auxiliary variables, combining
    weights and epigraph duals all vanish, so the iteration never resurrects
    it) and the common-rate constraint drops out; everything else matches
    solve().
    """
    H = check_channel(H, cfg.L, cfg.K)
    if W_init is None:
        W = _initialize_private_only(H, cfg)
    else:
        W = np.array(W_init, dtype=np.complex128)
        W[:, 0] = 0.0
    lam0 = np.zeros(cfg.K)
    return _ao_loop(H, cfg, W, lam0, trace_sink)
