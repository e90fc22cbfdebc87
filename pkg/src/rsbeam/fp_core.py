"""Concave surrogate of the weighted sum rate via auxiliary variables.

Every log-rate term log(1 + gamma) is rewritten with two auxiliary variables
per stream: a scalar alpha (SINR stand-in) and a complex scalar beta (scaled
receive gain). With (alpha, beta) held fixed the surrogate

    g = log(1 + alpha) - alpha + 2 sqrt(1 + alpha) Re{conj(beta) h^H w}
        - |beta|^2 (signal + interference + noise power)

is concave quadratic in the beamformers, and maximizing over alpha and beta
in closed form recovers log(1 + gamma) exactly. Only two streams matter per
user: the common stream (index 0) and the user's own private stream.

The quadratic total in g runs over the streams the receiver has not removed:
all K+1 beams for the common stream, the K private beams for a private
stream. Noise variances keep every denominator strictly positive.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import sinr, stream_gains
from .validation import (
    as_user_vector,
    check_beamformer,
    check_channel,
    check_stream_index,
    check_user_index,
)


@dataclasses.dataclass(frozen=True, eq=False)
class AuxiliaryState:
    """Per-user auxiliary variables, one row per tracked stream.

    alpha_c[k], beta_c[k] belong to the common stream at user k;
    alpha_p[k], beta_p[k] to user k's private stream.
    """

    alpha_c: np.ndarray
    alpha_p: np.ndarray
    beta_c: np.ndarray
    beta_p: np.ndarray


def _tables(W, H, sigma2):
    """Precomputed gain tables: G, |G|^2, own-stream power, totals."""
    K = H.shape[1]
    G = stream_gains(W, H)
    P = G.real**2 + G.imag**2
    own = P[np.arange(K), 1 + np.arange(K)]
    S_p = P[:, 1:].sum(axis=1) + sigma2      # private beams + noise
    S_c = S_p + P[:, 0]                      # every beam + noise
    return G, P, own, S_p, S_c


def update_alpha(W, H, sigma2):
    """Optimal alpha given W: the current SINRs. Returns (alpha_c, alpha_p)."""
    _, P, own, S_p, _ = _tables(W, H, sigma2)
    alpha_c = P[:, 0] / S_p
    alpha_p = own / (S_p - own)
    return alpha_c, alpha_p


def update_beta(W, H, sigma2, alpha):
    """Optimal beta given W and alpha. Returns (beta_c, beta_p).

    beta = sqrt(1 + alpha) h^H w / (signal + interference + noise), where the
    denominator includes the decoded stream itself.
    """
    alpha_c, alpha_p = alpha
    G, _, _, S_p, S_c = _tables(W, H, sigma2)
    K = H.shape[1]
    beta_c = np.sqrt(1.0 + alpha_c) * G[:, 0] / S_c
    beta_p = np.sqrt(1.0 + alpha_p) * G[np.arange(K), 1 + np.arange(K)] / S_p
    return beta_c, beta_p


def make_aux(W, H, sigma2) -> AuxiliaryState:
    """Auxiliary state at the closed-form optimum for the given beamformers."""
    sigma2 = np.asarray(sigma2, dtype=float)
    alpha = update_alpha(W, H, sigma2)
    beta_c, beta_p = update_beta(W, H, sigma2, alpha)
    return AuxiliaryState(alpha_c=alpha[0], alpha_p=alpha[1], beta_c=beta_c, beta_p=beta_p)


def g_value(W, H, sigma2, alpha_ik, beta_ik, k, i) -> float:
    """Quadratic surrogate of stream i's rate at user k for fixed (alpha, beta)."""
    H = check_channel(H)
    L, K = H.shape
    W = check_beamformer(W, L, K)
    k = check_user_index(k, K)
    i = check_stream_index(i, K)
    s2 = as_user_vector(sigma2, K, "sigma2", positive=True)
    g = H[:, k].conj() @ W
    p = g.real**2 + g.imag**2
    # the receiver has stripped nothing for i = 0, the common beam for i >= 1
    total = float(p.sum()) if i == 0 else float(p[1:].sum())
    a = float(alpha_ik)
    b = complex(beta_ik)
    lin = 2.0 * np.sqrt(1.0 + a) * (np.conj(b) * g[i]).real
    return float(np.log1p(a) - a + lin - abs(b) ** 2 * (total + s2[k]))


def f_value(W, H, sigma2, alpha_ik, k, i) -> float:
    """Surrogate after maximizing over beta, still a function of alpha.

    Equals log(1 + alpha) - alpha + (1 + alpha) gamma / (1 + gamma); concave
    in alpha with its maximum log(1 + gamma) at alpha = gamma.
    """
    a = float(alpha_ik)
    gam = sinr(W, H, sigma2, k, i)
    return float(np.log1p(a) - a + (1.0 + a) * gam / (1.0 + gam))


def _g_common_from_tables(G, P, sigma2, aux):
    S_c = P.sum(axis=1) + sigma2
    lin = np.sqrt(1.0 + aux.alpha_c) * (np.conj(aux.beta_c) * G[:, 0]).real
    b2 = aux.beta_c.real**2 + aux.beta_c.imag**2
    return np.log1p(aux.alpha_c) - aux.alpha_c + 2.0 * lin - b2 * S_c


def _g_private_from_tables(G, P, sigma2, aux):
    K = G.shape[0]
    idx = np.arange(K)
    S_p = P[:, 1:].sum(axis=1) + sigma2
    lin = np.sqrt(1.0 + aux.alpha_p) * (np.conj(aux.beta_p) * G[idx, 1 + idx]).real
    b2 = aux.beta_p.real**2 + aux.beta_p.imag**2
    return np.log1p(aux.alpha_p) - aux.alpha_p + 2.0 * lin - b2 * S_p


def g_common_all(W, H, sigma2, aux) -> np.ndarray:
    """Vector of common-stream surrogate values, one entry per user."""
    G = stream_gains(W, H)
    P = G.real**2 + G.imag**2
    return _g_common_from_tables(G, P, np.asarray(sigma2, dtype=float), aux)


def g_private_all(W, H, sigma2, aux) -> np.ndarray:
    """Vector of private-stream surrogate values, one entry per user."""
    G = stream_gains(W, H)
    P = G.real**2 + G.imag**2
    return _g_private_from_tables(G, P, np.asarray(sigma2, dtype=float), aux)


def fp_objective(W, y, aux, H, cfg) -> float:
    """Surrogate objective: max(delta) * y + sum_k delta_k g_private[k].

    y is the epigraph variable for the decodable common rate, constrained by
    y <= g_common[k] for every user.
    """
    gp = g_private_all(W, H, cfg.sigma2, aux)
    return float(cfg.delta_max * y + np.dot(cfg.delta, gp))
