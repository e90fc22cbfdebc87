"""Closed-form beamformer structure and the dual fixed-point inner solver.

With the auxiliary variables frozen, the remaining problem in (W, y) is
concave with linear constraints, and its stationarity conditions give every
beamformer in closed form as a regularized channel combiner:

    w_0 = (H Theta_c H^H + mu I)^{-1} H d_c
    w_k = d_p[k] (H Theta_p H^H + mu I)^{-1} h_k

where Theta_c, Theta_p, d_c, d_p collect the auxiliary variables, the
per-user weights lambda on the common-rate epigraph constraints, and the rate
weights delta. The inner solver never touches W directly: it iterates
multiplicative fixed-point updates on (lambda, mu) until complementary
slackness holds, materializing W from the duals at each step. One Hermitian
factorization per gram matrix is shared by all beams that use it; no inverse
is ever formed explicitly.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import NumericalError
from .fp_core import AuxiliaryState, _g_common_from_tables
from .model import SystemConfig
from .validation import as_user_vector, check_channel

# Floor on the power price: keeps both regularized systems positive definite.
MU_FLOOR = 1e-12

# Clamp for surrogate values entering the update ratios; keeps every ratio in
# (0, 1] even while the surrogate is still far from tight.
EPS_G = 1e-6


@dataclasses.dataclass(frozen=True, eq=False)
class StructureCoefficients:
    """Coefficients of the closed-form beamformer structure.

    theta_c, theta_p are non-negative per-user loadings of the two gram
    matrices; d_c, d_p the complex combining weights of the right-hand sides.
    """

    theta_c: np.ndarray
    theta_p: np.ndarray
    d_c: np.ndarray
    d_p: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class DualState:
    """Dual variables and residuals at an inner-solver exit.

    lam are the epigraph weights (sum preserved by every update), mu the
    power price (floored at MU_FLOOR), m the worst-user index, y the smallest
    common-stream surrogate value. power_residual is trace(W W^H) - Pt;
    compl_residuals[k] = lam[k] * (y - g_common[k]).
    """

    lam: np.ndarray
    mu: float
    m: int
    y: float
    power_residual: float
    compl_residuals: np.ndarray
    converged: bool
    n_iter: int
    clamp_events: int


def build_coefficients(aux: AuxiliaryState, lam, delta) -> StructureCoefficients:
    """Collect the quadratic loadings and combining weights for given duals."""
    lam = np.asarray(lam, dtype=float)
    delta = np.asarray(delta, dtype=float)
    b_c = aux.beta_c.real**2 + aux.beta_c.imag**2
    b_p = aux.beta_p.real**2 + aux.beta_p.imag**2
    theta_c = lam * b_c
    return StructureCoefficients(
        theta_c=theta_c,
        theta_p=delta * b_p + theta_c,
        d_c=np.sqrt(1.0 + aux.alpha_c) * aux.beta_c * lam,
        d_p=np.sqrt(1.0 + aux.alpha_p) * aux.beta_p * delta,
    )


def _materialize(H, Hh, theta_c, theta_p, d_c, d_p, mu):
    """Solve the two regularized Hermitian systems for all K+1 beams."""
    L = H.shape[0]
    A = (H * theta_c) @ Hh
    A.flat[:: L + 1] += mu
    try:
        fac = cho_factor(A, lower=True, check_finite=False)
        w0 = cho_solve(fac, H @ d_c, check_finite=False)
        A = (H * theta_p) @ Hh
        A.flat[:: L + 1] += mu
        # one factorization covers every private beam
        fac = cho_factor(A, lower=True, check_finite=False)
        Wp = cho_solve(fac, H * d_p, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError("beamformer system factorization failed: %s" % exc) from exc
    W = np.empty((L, H.shape[1] + 1), dtype=np.complex128)
    W[:, 0] = w0
    W[:, 1:] = Wp
    return W


def beamformers_from_duals(H, coeffs: StructureCoefficients, mu) -> np.ndarray:
    """Beamforming matrix of the closed-form structure at the given duals."""
    H = check_channel(H)
    mu = float(mu)
    if not mu >= MU_FLOOR:
        raise ValueError("mu must be at least MU_FLOOR=%g, got %r" % (MU_FLOOR, mu))
    return _materialize(
        H, H.conj().T, coeffs.theta_c, coeffs.theta_p, coeffs.d_c, coeffs.d_p, mu
    )


def hfpi_solve(H, sigma2, aux, cfg: SystemConfig, lambda_init, mu_init, iter_sink=None):
    """Inner solver: fixed-point iteration on the duals (lambda, mu).

    Per iteration: materialize W from the current duals, read off the
    common-stream surrogate values h0 and the transmit power, then

      lam[k] <- lam[k] * (h0[m] + rho) / (h0[k] + rho)   for k != m,
      lam[m] <- absorbs the freed mass (sum of lam is preserved exactly),
      mu     <- mu * (power + rho) / (Pt + rho),

    with m the worst (smallest h0) user and both ratio terms clamped below at
    EPS_G. Exits once the complementarity residuals and the power condition
    both hold at cfg.tol_inner: either the relative power residual is below
    tol, or the power price sits at its floor with the iterate strictly
    inside the budget (a slack power constraint, where complementarity
    mu * (power - Pt) is already zero to machine precision). The returned
    beamformer is rescaled onto the power ball when the raw iterate sits
    slightly above it, and the exit test is applied to that rescaled iterate.
    On hitting cfg.max_inner the best iterate seen (smallest worst-case
    residual) is returned with converged=False.

    iter_sink, when given, receives one dict per iteration with the duals
    that produced the iterate and its residuals.

    Returns (W, DualState, y).
    """
    H = np.asarray(H, dtype=np.complex128)
    L, K = H.shape
    sigma2 = as_user_vector(sigma2, K, "sigma2", positive=True)
    delta = cfg.delta
    Pt, rho, tol = cfg.Pt, cfg.rho, cfg.tol_inner

    lam = np.asarray(lambda_init, dtype=float).copy()
    if lam.shape != (K,):
        raise ValueError("lambda_init must have shape (%d,), got %s" % (K, lam.shape))
    if np.any(lam < 0):
        raise ValueError("lambda_init must be non-negative")
    lam_sum = float(lam.sum())
    mu = max(float(mu_init), MU_FLOOR)

    Hh = H.conj().T
    # constants of the frozen surrogate
    sq_c = np.sqrt(1.0 + aux.alpha_c)
    lin_c = sq_c * aux.beta_c                       # conj() of this multiplies the gain
    b_c = aux.beta_c.real**2 + aux.beta_c.imag**2
    const_c = np.log1p(aux.alpha_c) - aux.alpha_c
    b_p = aux.beta_p.real**2 + aux.beta_p.imag**2
    d_p = np.sqrt(1.0 + aux.alpha_p) * aux.beta_p * delta
    theta_p_base = delta * b_p

    clamp_events = 0
    best_score = np.inf
    best = None
    n_iter = cfg.max_inner

    for t in range(1, cfg.max_inner + 1):
        theta_c = lam * b_c
        W = _materialize(H, Hh, theta_c, theta_p_base + theta_c, lin_c * lam, d_p, mu)
        power = float(np.vdot(W, W).real)
        G = Hh @ W
        P = G.real**2 + G.imag**2
        lin_term = (np.conj(lin_c) * G[:, 0]).real
        quad_term = P.sum(axis=1)
        h0 = const_c + 2.0 * lin_term - b_c * (quad_term + sigma2)
        m = int(np.argmin(h0))
        pres_rel = abs(power - Pt) / Pt
        cmax_raw = float(np.max(lam * (h0 - h0[m])))
        score = max(cmax_raw, pres_rel)

        if iter_sink is not None:
            iter_sink(
                {
                    "iteration": t,
                    "lambda": lam.tolist(),
                    "mu": mu,
                    "residuals": {"complementarity": cmax_raw, "power": pres_rel},
                }
            )

        if score < best_score:
            best_score = score
            best = (W, lam.copy(), mu, power, lin_term, quad_term)

        # The power constraint can be slack at the subproblem optimum; the
        # multiplicative map then drives mu to its floor and the relative
        # power residual stalls, while power complementarity mu*(power - Pt)
        # is already satisfied. Exit on either form of the power condition.
        interior = mu <= MU_FLOOR and power <= Pt
        if pres_rel < tol or interior:
            W_out, h0_out, m_out, cmax_out, power_out = _exit_candidate(
                W, lam, mu, power, lin_term, quad_term, const_c, b_c, sigma2, Pt
            )
            if cmax_out < tol:
                state = DualState(
                    lam=lam.copy(),
                    mu=mu,
                    m=m_out,
                    y=float(h0_out[m_out]),
                    power_residual=power_out - Pt,
                    compl_residuals=lam * (h0_out[m_out] - h0_out),
                    converged=True,
                    n_iter=t,
                    clamp_events=clamp_events,
                )
                return W_out, state, state.y

        # fixed-point updates from the raw iterate; h0[m] is the minimum, so
        # clamping can only occur at all when it occurs there
        hp = h0 + rho
        if h0[m] + rho < EPS_G:
            clamp_events += int((hp < EPS_G).sum())
            hp = np.maximum(hp, EPS_G)
        ratio = hp[m] / hp                          # in (0, 1], exactly 1 at m
        lam = ratio * lam
        lam[m] = max(0.0, lam_sum - (float(lam.sum()) - lam[m]))
        mu = max(MU_FLOOR, mu * (power + rho) / (Pt + rho))

    # iteration cap: hand back the best iterate, flagged
    W, lam_b, mu_b, power, lin_term, quad_term = best
    W_out, h0_out, m_out, cmax_out, power_out = _exit_candidate(
        W, lam_b, mu_b, power, lin_term, quad_term, const_c, b_c, sigma2, Pt
    )
    state = DualState(
        lam=lam_b,
        mu=mu_b,
        m=m_out,
        y=float(h0_out[m_out]),
        power_residual=power_out - Pt,
        compl_residuals=lam_b * (h0_out[m_out] - h0_out),
        converged=False,
        n_iter=n_iter,
        clamp_events=clamp_events,
    )
    return W_out, state, state.y


def _exit_candidate(W, lam, mu, power, lin_term, quad_term, const_c, b_c, sigma2, Pt):
    """Feasibility-rescaled iterate and its residuals.

    Scaling by s <= 1 turns every gain g into s*g, so the surrogate values can
    be updated without touching the gram solves.
    """
    if power > Pt:
        s = np.sqrt(Pt / power)
        W = W * s
        h0 = const_c + 2.0 * s * lin_term - b_c * (s * s * quad_term + sigma2)
        power = power * s * s
    else:
        h0 = const_c + 2.0 * lin_term - b_c * (quad_term + sigma2)
    m = int(np.argmin(h0))
    cmax = float(np.max(lam * (h0 - h0[m])))
    return W, h0, m, cmax, power


@dataclasses.dataclass(frozen=True, eq=False)
class KktResiduals:
    """Stationarity, dual-feasibility and complementarity residuals.

    All entries are non-negative magnitudes; max_residual() is their maximum.
    """

    stationarity_common: float
    stationarity_private: float
    weight_sum: float
    complementarity: float
    power_price: float
    power_slack: float
    epigraph_slack: float

    def max_residual(self) -> float:
        return max(
            self.stationarity_common,
            self.stationarity_private,
            self.weight_sum,
            self.complementarity,
            self.power_price,
            self.power_slack,
            self.epigraph_slack,
        )


def kkt_residuals(W, y, lam, mu, aux, H, sigma2, cfg: SystemConfig) -> KktResiduals:
    """Residuals of the stationarity system at (W, y, lam, mu).

    Measures how far the point is from satisfying the closed-form structure,
    the weight-sum identity sum(lam) = max(delta), complementary slackness on
    the epigraph and power constraints, and primal feasibility.
    """
    H = check_channel(H, cfg.L, cfg.K)
    sigma2 = as_user_vector(sigma2, cfg.K, "sigma2", positive=True)
    lam = np.asarray(lam, dtype=float)
    coeffs = build_coefficients(aux, lam, cfg.delta)
    Hh = H.conj().T
    L = cfg.L

    A_c = (H * coeffs.theta_c) @ Hh
    A_c.flat[:: L + 1] += mu
    res_c = float(np.linalg.norm(A_c @ W[:, 0] - H @ coeffs.d_c))
    A_p = (H * coeffs.theta_p) @ Hh
    A_p.flat[:: L + 1] += mu
    res_p = float(np.max(np.linalg.norm(A_p @ W[:, 1:] - H * coeffs.d_p, axis=0)))

    G = Hh @ W
    P = G.real**2 + G.imag**2
    g0 = _g_common_from_tables(G, P, sigma2, aux)
    power = float(np.vdot(W, W).real)
    return KktResiduals(
        stationarity_common=res_c,
        stationarity_private=res_p,
        weight_sum=abs(float(lam.sum()) - cfg.delta_max),
        complementarity=float(np.max(np.abs(lam * (y - g0)))),
        power_price=abs(mu * (power - cfg.Pt)),
        power_slack=max(power - cfg.Pt, 0.0),
        epigraph_slack=float(np.max(np.maximum(y - g0, 0.0))),
    )
