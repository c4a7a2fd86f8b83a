"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import DataError, DomainError


def default_beta(m):
    """Default prior hyperparameter ``1 - 2**(1 - m)``."""
    return 1.0 - 2.0 ** (1 - m)


def check_alphabet_size(m):
    if not isinstance(m, numbers.Integral) or m < 2:
        raise DomainError(f"alphabet size must be an integer >= 2, got {m!r}")
    return int(m)


def check_depth(depth):
    if not isinstance(depth, numbers.Integral) or depth < 0:
        raise DomainError(f"maximum depth must be a non-negative integer, got {depth!r}")
    return int(depth)


def check_beta(beta, m=None):
    """Return a valid prior hyperparameter, resolving ``None`` to the default."""
    if beta is None:
        if m is None:
            raise DomainError("beta=None needs the alphabet size to pick the default")
        return default_beta(m)
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    return beta


def check_symbols(x, m=None, name="sequence"):
    """Coerce ``x`` to a 1-D int64 array of symbols in ``{0, ..., m-1}``.

    When ``m`` is None only non-negativity is checked.
    """
    arr = np.asarray(x)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
            raise DataError(f"{name} contains non-integer values")
    elif arr.dtype.kind not in "iub":
        raise DataError(f"{name} must contain integers, got dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise DataError(f"{name} contains negative symbols")
    if m is not None and arr.max() >= m:
        raise DataError(f"{name} contains symbol {int(arr.max())} outside alphabet of size {m}")
    return arr


def infer_alphabet_size(x):
    """Smallest alphabet ``{0, ..., m-1}`` containing every symbol, with ``m >= 2``."""
    arr = np.asarray(x)
    if arr.size == 0:
        return 2
    return max(2, int(arr.max()) + 1)


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
