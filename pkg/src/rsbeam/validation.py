"""Input validation helpers shared by the functional core and the estimators."""

import numbers

import numpy as np


def check_channel(H, n_antennas=None, n_users=None):
    """Validate a channel matrix and return it as a complex128 array.

    Column k holds the channel vector of user k, so the expected shape is
    (antennas, users). Real-valued input is promoted to complex.
    """
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError("channel matrix must be 2-D, got shape %s" % (H.shape,))
    L, K = H.shape
    if L < 1 or K < 1:
        raise ValueError("channel matrix must be at least 1 x 1, got shape %s" % (H.shape,))
    if n_antennas is not None and L != n_antennas:
        raise ValueError("channel has %d antenna rows, expected %d" % (L, n_antennas))
    if n_users is not None and K != n_users:
        raise ValueError("channel has %d user columns, expected %d" % (K, n_users))
    H = H.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(H.real)) or not np.all(np.isfinite(H.imag)):
        raise ValueError("channel matrix contains non-finite entries")
    return H


def check_beamformer(W, n_antennas=None, n_users=None):
    """Validate a beamforming matrix: column 0 common, columns 1..K private."""
    W = np.asarray(W)
    if W.ndim != 2:
        raise ValueError("beamforming matrix must be 2-D, got shape %s" % (W.shape,))
    if n_antennas is not None and W.shape[0] != n_antennas:
        raise ValueError(
            "beamforming matrix has %d rows, expected %d" % (W.shape[0], n_antennas)
        )
    if n_users is not None and W.shape[1] != n_users + 1:
        raise ValueError(
            "beamforming matrix has %d columns, expected %d (common + one per user)"
            % (W.shape[1], n_users + 1)
        )
    W = W.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(W.real)) or not np.all(np.isfinite(W.imag)):
        raise ValueError("beamforming matrix contains non-finite entries")
    return W


def as_user_vector(x, n_users, name, positive=False, nonnegative=False):
    """Broadcast a scalar or length-K sequence to a float64 vector of length K."""
    if isinstance(x, numbers.Real):
        v = np.full(n_users, float(x))
    else:
        v = np.asarray(x, dtype=float)
        if v.shape != (n_users,):
            raise ValueError(
                "%s must be a scalar or length-%d vector, got shape %s"
                % (name, n_users, v.shape)
            )
        v = v.copy()
    if not np.all(np.isfinite(v)):
        raise ValueError("%s contains non-finite entries" % name)
    if positive and not np.all(v > 0):
        raise ValueError("%s must be strictly positive" % name)
    if nonnegative and not np.all(v >= 0):
        raise ValueError("%s must be non-negative" % name)
    return v


def check_user_index(k, n_users):
    if not isinstance(k, numbers.Integral) or not 0 <= k < n_users:
        raise ValueError("user index %r out of range [0, %d)" % (k, n_users))
    return int(k)


def check_stream_index(i, n_users):
    """Stream 0 is the common stream; streams 1..K are the private ones."""
    if not isinstance(i, numbers.Integral) or not 0 <= i <= n_users:
        raise ValueError("stream index %r out of range [0, %d]" % (i, n_users))
    return int(i)
