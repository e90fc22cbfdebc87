"""Downlink system model: channels, SINRs, achievable rates, rate reports.

A transmitter with L antennas serves K single-antenna users. It superposes a
common stream (beamformer w_0, decoded by every user) on top of K private
streams (beamformers w_1..w_K). Each user first decodes the common stream with
all private streams acting as interference, strips it, then decodes its own
private stream with only the other private streams interfering.

Rates are natural-log rates (nats) everywhere inside the package; conversion
to bits happens only at reporting boundaries.
"""

from __future__ import annotations

import dataclasses
import json
import numbers

import numpy as np

from .exceptions import ChannelFileError, ConfigError, InfeasibleBeamformerError
from .validation import (
    as_user_vector,
    check_beamformer,
    check_channel,
    check_stream_index,
    check_user_index,
)

LN2 = float(np.log(2.0))
RATE_UNITS = ("nats", "bits")

# Relative slack on the power budget tolerated by evaluate().
POWER_SLACK = 1e-6


@dataclasses.dataclass(frozen=True, eq=False)
class SystemConfig:
    """Problem data and solver knobs for one downlink instance.

    Parameters
    ----------
    L : int
        Transmit antennas.
    K : int
        Single-antenna users.
    Pt : float
        Transmit power budget, trace(W W^H) <= Pt.
    sigma2 : float or array_like
        Per-user noise variances; a scalar is broadcast to all users.
    delta : float or array_like
        Per-user rate weights, non-negative with at least one positive entry;
        a scalar is broadcast.
    rho : float
        Damping offset in the dual fixed-point updates.
    tol_outer, tol_inner : float
        Stopping tolerances of the outer alternating loop and the inner dual
        iteration.
    max_outer, max_inner : int
        Iteration caps.
    rate_unit : str
        "nats" or "bits"; affects reporting only, never the internal math.
    warm_start : bool
        Reuse the dual variables across outer iterations (True) or reset them
        every time (False, for ablations).
    """

    L: int
    K: int
    Pt: float
    sigma2: float | np.ndarray = 1.0
    delta: float | np.ndarray = 1.0
    rho: float = 0.5
    tol_outer: float = 1e-4
    tol_inner: float = 1e-4
    max_outer: int = 500
    max_inner: int = 2000
    rate_unit: str = "nats"
    warm_start: bool = True

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if not isinstance(self.L, numbers.Integral) or self.L < 1:
            raise ConfigError("L must be a positive integer, got %r" % (self.L,))
        if not isinstance(self.K, numbers.Integral) or self.K < 1:
            raise ConfigError("K must be a positive integer, got %r" % (self.K,))
        set_("L", int(self.L))
        set_("K", int(self.K))
        if not np.isfinite(self.Pt) or self.Pt <= 0:
            raise ConfigError("Pt must be a positive finite power, got %r" % (self.Pt,))
        set_("Pt", float(self.Pt))
        try:
            set_("sigma2", as_user_vector(self.sigma2, self.K, "sigma2", positive=True))
            set_("delta", as_user_vector(self.delta, self.K, "delta", nonnegative=True))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not np.any(self.delta > 0):
            raise ConfigError("delta must have at least one positive weight")
        if not np.isfinite(self.rho) or self.rho <= 0:
            raise ConfigError("rho must be positive, got %r" % (self.rho,))
        set_("rho", float(self.rho))
        for name in ("tol_outer", "tol_inner"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError("%s must be positive, got %r" % (name, v))
            set_(name, float(v))
        for name in ("max_outer", "max_inner"):
            v = getattr(self, name)
            if not isinstance(v, numbers.Integral) or v < 1:
                raise ConfigError("%s must be a positive integer, got %r" % (name, v))
            set_(name, int(v))
        if self.rate_unit not in RATE_UNITS:
            raise ConfigError(
                "rate_unit must be one of %s, got %r" % (RATE_UNITS, self.rate_unit)
            )
        set_("warm_start", bool(self.warm_start))

    @property
    def delta_max(self) -> float:
        return float(np.max(self.delta))


@dataclasses.dataclass(frozen=True, eq=False)
class RateReport:
    """Achievable rates of one beamforming matrix, all in nats.

    r0[k] is the common-stream rate seen at user k, rp[k] the private rate of
    user k, c the common-rate split across users (c >= 0, sum(c) <= min(r0)),
    y = min(r0) the decodable common rate, totals = c + rp, and wsr the
    weighted sum rate sum_k delta_k * totals[k].
    """

    r0: np.ndarray
    rp: np.ndarray
    c: np.ndarray
    y: float
    wsr: float
    totals: np.ndarray


def generate_channel(cfg: SystemConfig, seed) -> np.ndarray:
    """Draw an i.i.d. unit-variance complex Gaussian channel matrix.

    Entry (l, k) is (a + jb) / sqrt(2) with a, b standard normal, so each
    entry has unit second moment. The draw order (full real block, then full
    imaginary block) is fixed, which makes the matrix bit-reproducible for a
    given (cfg.L, cfg.K, seed) across runs.
    """
    rng = np.random.default_rng(int(seed))
    re = rng.standard_normal((cfg.L, cfg.K))
    im = rng.standard_normal((cfg.L, cfg.K))
    return (re + 1j * im) / np.sqrt(2.0)


def stream_gains(W, H) -> np.ndarray:
    """Table of complex stream gains h_k^H w_j, shape (K, K+1)."""
    return H.conj().T @ W


def sinr(W, H, sigma2, k, i) -> float:
    """SINR of stream i measured at user k.

    Stream 0 (common) is decoded against all K private streams. A private
    stream i is decoded after the common stream has been removed, so only the
    other private streams interfere. The common beamformer never appears in
    any denominator.
    """
    H = check_channel(H)
    L, K = H.shape
    W = check_beamformer(W, L, K)
    k = check_user_index(k, K)
    i = check_stream_index(i, K)
    s2 = as_user_vector(sigma2, K, "sigma2", positive=True)
    g = H[:, k].conj() @ W
    p = g.real**2 + g.imag**2
    priv = float(np.sum(p[1:]))
    if i == 0:
        num, den = p[0], priv + s2[k]
    else:
        num, den = p[i], priv - p[i] + s2[k]
    return float(num / den)


def rate(W, H, sigma2, k, i) -> float:
    """Achievable rate log(1 + SINR) of stream i at user k, in nats."""
    return float(np.log1p(sinr(W, H, sigma2, k, i)))


def _rate_vectors(W, H, sigma2):
    """Per-user common and private rates, vectorized. Returns (r0, rp)."""
    G = stream_gains(W, H)
    P = G.real**2 + G.imag**2
    priv = P[:, 1:].sum(axis=1)
    own = P[np.arange(H.shape[1]), 1 + np.arange(H.shape[1])]
    r0 = np.log1p(P[:, 0] / (priv + sigma2))
    rp = np.log1p(own / (priv - own + sigma2))
    return r0, rp


def _split_common_rate(delta, r0):
    """Optimal common-rate split: everything to the heaviest user.

    The split maximizes sum_k delta_k c_k subject to c >= 0 and
    sum(c) <= min_k r0[k]; the maximum sits at the vertex that gives the whole
    decodable common rate min(r0) to the largest weight (lowest index on
    ties).
    """
    c = np.zeros_like(delta)
    c[int(np.argmax(delta))] = np.min(r0)
    return c


def evaluate(W, H, cfg: SystemConfig) -> RateReport:
    """True achievable rates of W under cfg, with the optimal common split.

    Raises InfeasibleBeamformerError when trace(W W^H) exceeds the power
    budget by more than a relative slack of POWER_SLACK.
    """
    H = check_channel(H, cfg.L, cfg.K)
    W = check_beamformer(W, cfg.L, cfg.K)
    power = float(np.vdot(W, W).real)
    if power > cfg.Pt * (1.0 + POWER_SLACK):
        raise InfeasibleBeamformerError(power, cfg.Pt)
    r0, rp = _rate_vectors(W, H, cfg.sigma2)
    c = _split_common_rate(cfg.delta, r0)
    totals = c + rp
    return RateReport(
        r0=r0,
        rp=rp,
        c=c,
        y=float(np.min(r0)),
        wsr=float(np.dot(cfg.delta, totals)),
        totals=totals,
    )


def nats_to_bits(x):
    return np.asarray(x, dtype=float) / LN2 if np.ndim(x) else float(x) / LN2


def convert_rate(x, unit):
    """Convert a nat-valued rate quantity to the requested reporting unit."""
    if unit not in RATE_UNITS:
        raise ValueError("unknown rate unit %r" % (unit,))
    return nats_to_bits(x) if unit == "bits" else x


# ----------------------- channel file round-trip -----------------------

def save_channel_file(path, H, sigma2):
    """Write a channel instance as JSON with keys L, K, sigma2, H_re, H_im."""
    H = check_channel(H)
    L, K = H.shape
    s2 = as_user_vector(sigma2, K, "sigma2", positive=True)
    payload = {
        "L": L,
        "K": K,
        "sigma2": s2.tolist(),
        "H_re": H.real.tolist(),
        "H_im": H.imag.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def _require(payload, key):
    if key not in payload:
        raise ChannelFileError("missing field %r" % (key,))
    return payload[key]


def _as_matrix(rows, L, K, key):
    if not isinstance(rows, list) or len(rows) != L:
        raise ChannelFileError("%s must be a list of %d rows" % (key, L))
    out = np.empty((L, K))
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != K:
            raise ChannelFileError(
                "%s: row %d must have %d entries, got %r" % (key, r, K, row)
            )
        for c, v in enumerate(row):
            if not isinstance(v, numbers.Real) or not np.isfinite(v):
                raise ChannelFileError(
                    "%s: entry [%d][%d] must be a finite number, got %r" % (key, r, c, v)
                )
            out[r, c] = float(v)
    return out


def load_channel_file(path):
    """Read a channel instance written by save_channel_file.

    Returns (H, sigma2). Malformed files raise ChannelFileError naming the
    offending field (or the line/column for JSON syntax errors).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ChannelFileError(
                "invalid JSON at line %d column %d: %s" % (exc.lineno, exc.colno, exc.msg)
            ) from None
    if not isinstance(payload, dict):
        raise ChannelFileError("top-level value must be an object")
    L = _require(payload, "L")
    K = _require(payload, "K")
    if not isinstance(L, numbers.Integral) or L < 1:
        raise ChannelFileError("L must be a positive integer, got %r" % (L,))
    if not isinstance(K, numbers.Integral) or K < 1:
        raise ChannelFileError("K must be a positive integer, got %r" % (K,))
    s2_raw = _require(payload, "sigma2")
    if not isinstance(s2_raw, list) or len(s2_raw) != K:
        raise ChannelFileError("sigma2 must be a list of %d entries" % (K,))
    for idx, v in enumerate(s2_raw):
        if not isinstance(v, numbers.Real) or not np.isfinite(v) or v <= 0:
            raise ChannelFileError(
                "sigma2[%d] must be a positive finite number, got %r" % (idx, v)
            )
    H_re = _as_matrix(_require(payload, "H_re"), int(L), int(K), "H_re")
    H_im = _as_matrix(_require(payload, "H_im"), int(L), int(K), "H_im")
    return H_re + 1j * H_im, np.asarray(s2_raw, dtype=float)
