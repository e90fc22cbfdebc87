"""Independent cross-checks for the production solver.

Everything in this module is written directly against the problem
definitions, not against the solver internals: an exhaustive vertex
enumeration for the common-rate split, a projected-subgradient reference
solver for the convex inner subproblem, and a random-restart search with
coordinate refinement for near-global certification at desk scale. Agreement
between these and the fast path is the correctness evidence the test suite
leans on.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

from .model import SystemConfig, evaluate
from .solver import solve
from .validation import as_user_vector, check_channel


def lp_allocate(delta, r0):
    """Solve the common-rate split LP by enumerating its vertices.

    max sum_k delta_k c_k  s.t.  c >= 0, sum(c) <= min_k r0[k].

    The feasible set is a simplex, so the optimum is at one of K+1 vertices:
    the origin or min(r0) on a single coordinate. Strict improvement while
    scanning in index order reproduces the lowest-index tie rule.

    Returns (c, value).
    """
    delta = np.asarray(delta, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    if delta.ndim != 1 or delta.shape != r0.shape:
        raise ValueError("delta and r0 must be 1-D with matching shapes")
    if np.any(r0 < 0):
        raise ValueError("common rates must be non-negative")
    y = np.min(r0)
    best_c = np.zeros_like(delta)
    best_v = 0.0
    for i in range(delta.size):
        v = delta[i] * y
        if v > best_v:
            best_v = v
            best_c = np.zeros_like(delta)
            best_c[i] = y
    return best_c, float(best_v)


class ReferenceSolution(NamedTuple):
    W: np.ndarray
    y: float
    objective: float
    converged: bool
    steps: int


def _surrogate_problem(H, sigma2, aux, cfg):
    """Objective and supergradient of the concave inner subproblem.

    F(W) = max(delta) * min_k g_common[k](W) + sum_k delta_k g_private[k](W),
    i.e. the epigraph variable y eliminated at its optimum. The min term makes
    F nonsmooth; the supergradient picks the lowest-index active user.
    """
    Hh = H.conj().T
    K = H.shape[1]
    idx = np.arange(K)
    delta = cfg.delta
    wmax = cfg.delta_max
    lin_c = np.sqrt(1.0 + aux.alpha_c) * aux.beta_c
    b_c = aux.beta_c.real**2 + aux.beta_c.imag**2
    const_c = np.log1p(aux.alpha_c) - aux.alpha_c
    lin_p = np.sqrt(1.0 + aux.alpha_p) * aux.beta_p
    b_p = aux.beta_p.real**2 + aux.beta_p.imag**2
    const_p = np.log1p(aux.alpha_p) - aux.alpha_p
    dbp = delta * b_p

    def value_and_grad(W):
        G = Hh @ W
        P = G.real**2 + G.imag**2
        S_all = P.sum(axis=1) + sigma2
        S_priv = S_all - P[:, 0]
        g0 = const_c + 2.0 * (np.conj(lin_c) * G[:, 0]).real - b_c * S_all
        own = G[idx, 1 + idx]
        gp = const_p + 2.0 * (np.conj(lin_p) * own).real - b_p * S_priv
        m = int(np.argmin(g0))
        F = wmax * g0[m] + float(np.dot(delta, gp))

        grad = np.empty_like(W)
        grad[:, 0] = (wmax * (lin_c[m] - b_c[m] * G[m, 0])) * H[:, m]
        M = (-dbp)[:, None] * G[:, 1:]
        M[m, :] -= (wmax * b_c[m]) * G[m, 1:]
        M[idx, idx] += delta * lin_p
        grad[:, 1:] = H @ M
        return F, grad, float(g0[m])

    return value_and_grad


def _project_ball(W, Pt):
    p = float(np.vdot(W, W).real)
    if p > Pt:
        W = W * np.sqrt(Pt / p)
    return W


def reference_inner_solve(
    H, sigma2, aux, cfg: SystemConfig, max_steps=100_000, grad_tol=1e-6
) -> ReferenceSolution:
    """Projected subgradient ascent on the concave inner subproblem.

    Uses a diminishing target-level step rule (step toward the best value
    seen plus a level that halves whenever the iterate path since the last
    halving exceeds a fixed budget), projecting every iterate onto the power
    ball. Stops once the projected-gradient mapping norm at a fixed probe
    step falls below grad_tol, or after max_steps steps; the best iterate is
    returned either way. Fully deterministic.
    """
    H = check_channel(H, cfg.L, cfg.K)
    if sigma2 is None:
        sigma2 = cfg.sigma2
    sigma2 = as_user_vector(sigma2, cfg.K, "sigma2", positive=True)
    Pt = cfg.Pt
    fun = _surrogate_problem(H, sigma2, aux, cfg)

    W = np.zeros((cfg.L, cfg.K + 1), dtype=np.complex128)
    F, grad, _ = fun(W)
    F_best = F
    W_best = W.copy()
    level = 0.5 * max(1.0, abs(F))
    path = 0.0
    path_budget = 2.0 * np.sqrt(Pt)
    probe = 0.01
    converged = False
    steps = 0

    for steps in range(1, max_steps + 1):
        gn2 = float(np.vdot(grad, grad).real)
        if gn2 <= 1e-30:
            converged = True
            break
        step = (F_best + level - F) / gn2
        W_next = _project_ball(W + step * grad, Pt)
        path += step * np.sqrt(gn2)
        if path > path_budget:
            level = max(0.5 * level, 1e-14)
            path = 0.0
        W = W_next
        F, grad, _ = fun(W)
        if F > F_best:
            F_best = F
            W_best = W.copy()
        if steps % 64 == 0:
            gm = float(np.linalg.norm(_project_ball(W + probe * grad, Pt) - W)) / probe
            if gm < grad_tol:
                converged = True
                break

    F_best, _, y_best = fun(W_best)
    return ReferenceSolution(
        W=W_best, y=y_best, objective=F_best, converged=converged, steps=steps
    )


class SearchResult(NamedTuple):
    W: np.ndarray
    wsr: float
    base_wsr: float
    gap: float


def _random_ball_point(L, K, Pt, seed_key):
    """Uniform draw from the power ball: sphere direction times a radius
    factor u^(1/(2n)) for n complex dimensions."""
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    n = L * (K + 1)
    Z = rng.standard_normal((L, K + 1)) + 1j * rng.standard_normal((L, K + 1))
    Z /= np.linalg.norm(Z)
    r = rng.uniform() ** (1.0 / (2 * n))
    return np.sqrt(Pt) * r * Z


def _refine_coordinates(W, H, cfg, budget):
    """Greedy pattern search over the real coordinates of W.

    Accepts any single-coordinate move (projected back onto the power ball)
    that improves the true weighted sum rate; halves the step once a full
    sweep brings no improvement. budget caps objective evaluations.
    """
    W = W.copy()
    f = evaluate(W, H, cfg).wsr
    h = 0.25 * np.sqrt(cfg.Pt / (cfg.L * (cfg.K + 1)))
    evals = 0
    while evals < budget and h > 1e-9:
        improved = False
        for l in range(cfg.L):
            for j in range(cfg.K + 1):
                for part in (1.0, 1.0j):
                    for sgn in (1.0, -1.0):
                        if evals >= budget:
                            return W, f
                        W_try = W.copy()
                        W_try[l, j] += sgn * h * part
                        W_try = _project_ball(W_try, cfg.Pt)
                        f_try = evaluate(W_try, H, cfg).wsr
                        evals += 1
                        if f_try > f:
                            W, f = W_try, f_try
                            improved = True
                            break
        if not improved:
            h *= 0.5
    return W, f


def global_search(
    H, cfg: SystemConfig, restarts, refine_steps=500, seed=0, n_jobs=1, polish=25
) -> SearchResult:
    """Random-restart search for a near-global weighted sum rate.

    Two-stage multistart. Stage one runs the solver from `restarts` random
    feasible starts (drawn from the power ball with per-restart seeds derived
    from `seed`) at a coarsened tolerance whose only job is locating basins.
    Stage two re-solves the `polish` best coarse candidates at the caller's
    tolerances, warm-started from the coarse iterate, alongside the solver's
    own default-initializer run. Coordinate refinement is applied to the best
    polished candidate. All reductions are by value with lowest restart index
    on ties, so the result does not depend on n_jobs.
    """
    H = check_channel(H, cfg.L, cfg.K)
    base = solve(H, cfg)
    coarse_cfg = dataclasses.replace(
        cfg,
        tol_outer=max(cfg.tol_outer, 1e-2),
        tol_inner=max(cfg.tol_inner, 1e-3),
    )

    def run_coarse(r):
        W0 = _random_ball_point(cfg.L, cfg.K, cfg.Pt, (int(seed), int(r)))
        return solve(H, coarse_cfg, W_init=W0)

    if n_jobs == 1:
        coarse = [run_coarse(r) for r in range(int(restarts))]
    else:
        from joblib import Parallel, delayed

        coarse = Parallel(n_jobs=n_jobs)(
            delayed(run_coarse)(r) for r in range(int(restarts))
        )

    coarse_wsr = np.array([s.report.wsr for s in coarse])
    # stable sort keeps the lowest index on exact value ties
    order = np.argsort(-coarse_wsr, kind="stable")[: max(int(polish), 1)]
    candidates = [(base.report.wsr, base.W)]
    for r in order:
        polished = solve(H, cfg, W_init=coarse[int(r)].W)
        candidates.append((polished.report.wsr, polished.W))
    best_idx = int(np.argmax([v for v, _ in candidates]))
    W_best = candidates[best_idx][1]
    W_ref, wsr_ref = _refine_coordinates(W_best, H, cfg, refine_steps)
    return SearchResult(
        W=W_ref, wsr=wsr_ref, base_wsr=base.report.wsr, gap=wsr_ref - base.report.wsr
    )
