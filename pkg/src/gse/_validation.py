"""Small input checks shared by the public functions and estimators."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np
from sklearn.utils import check_array


def check_positive(value, name):
    if not isinstance(value, Real) or not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_theta(theta, allow_one=False):
    theta = check_positive(theta, "theta")
    if theta > 1 or (theta == 1 and not allow_one):
        raise ValueError(f"theta must lie in (0, 1){' or equal 1' if allow_one else ''}, got {theta}")
    return theta


def check_eta(eta, dim, theta=None):
    """Return the shift as a float vector of length ``dim`` (``None`` means 0)."""
    if eta is None:
        return np.zeros(dim)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.shape == (1,) and dim > 1:
        eta = np.full(dim, eta[0])
    if eta.shape != (dim,):
        raise ValueError(f"eta must have length {dim}, got shape {eta.shape}")
    if not np.all(np.isfinite(eta)):
        raise ValueError("eta must be finite")
    if theta is not None and (np.any(eta < 0) or np.any(eta > theta + 1e-15)):
        raise ValueError(f"eta must lie in [0, theta]^d, got {eta}")
    return eta


def as_points(x, dim):
    """Coerce ``x`` to an array of points with trailing axis ``dim``.

    For ``dim == 1`` a bare array of scalars is accepted and treated as a
    list of points.
    """
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}, got shape {x.shape}")
    return x


def check_points(X, dim):
    """sklearn-style validation for a 2-D batch of points."""
    X = np.asarray(X, dtype=float)
    if dim == 1 and X.ndim == 1:
        X = X[:, None]
    X = check_array(X, ensure_2d=True, dtype=np.float64)
    if X.shape[1] != dim:
        raise ValueError(f"X has {X.shape[1]} features, expected {dim}")
    return X
