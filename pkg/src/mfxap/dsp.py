"""Streaming signal-processing primitives.

Everything here works on plain float64 arrays and accepts an optional
leading batch shape, so a whole set of Monte Carlo trials can be advanced
with one call.  The last axis is always time (most recent sample first)
or taps.
"""

from dataclasses import dataclass

import numba
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, NumericalError

__all__ = [
    "WhiteGaussian",
    "AR1",
    "generate_noise",
    "DelayLine",
    "fir_filter_step",
    "FilteredRegressor",
    "push_filtered_sample",
    "solve_regularized",
    "gram_solve",
    "pseudo_apply",
    "sgn_vec",
]


@dataclass(frozen=True)
class WhiteGaussian:
    """I.i.d. zero-mean Gaussian samples with standard deviation ``sigma``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(f"white-gaussian sigma must be > 0, got {self.sigma!r}")

    @property
    def variance(self):
        return self.sigma**2

    def autocorrelation(self, lags):
        lags = np.abs(np.asarray(lags))
        return np.where(lags == 0, self.variance, 0.0)


@dataclass(frozen=True)
class AR1:
    """First-order autoregressive process ``x(n) = a x(n-1) + sigma g(n)``.

    The first sample is drawn from the stationary distribution so the
    sequence has no start-up transient.
    """

    a: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(f"ar1 sigma must be > 0, got {self.sigma!r}")
        if not abs(self.a) < 1:
            raise ConfigurationError(f"ar1 coefficient must satisfy |a| < 1, got {self.a!r}")

    @property
    def variance(self):
        return self.sigma**2 / (1.0 - self.a**2)

    def autocorrelation(self, lags):
        return self.variance * self.a ** np.abs(np.asarray(lags))


def generate_noise(seed, count, model=WhiteGaussian()):
    """Draw ``count`` samples of ``model`` from a PCG64 stream seeded by ``seed``.

    The result is bit-identical for identical arguments.
    """
    if count < 0:
        raise ConfigurationError(f"count must be >= 0, got {count}")
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal(count)
    if isinstance(model, WhiteGaussian):
        return model.sigma * g
    if isinstance(model, AR1):
        x = np.empty(count)
        if count == 0:
            return x
        x[0] = np.sqrt(model.variance) * g[0]
        drive = model.sigma * g
        # explicit loop: the recursion must hold exactly, sample by sample
        prev = x[0]
        a = model.a
        for n in range(1, count):
            prev = a * prev + drive[n]
            x[n] = prev
        return x
    raise ConfigurationError(f"unknown noise model {model!r}")


class DelayLine:
    """Fixed-length tapped delay line; ``window()[..., 0]`` is the newest sample."""

    def __init__(self, length, batch_shape=()):
        if length < 1:
            raise ConfigurationError(f"delay line length must be >= 1, got {length}")
        self.buffer = np.zeros(tuple(batch_shape) + (int(length),))

    @property
    def length(self):
        return self.buffer.shape[-1]

    def push(self, sample):
        self.buffer[..., 1:] = self.buffer[..., :-1]
        self.buffer[..., 0] = sample

    def window(self, n=None):
        if n is None:
            return self.buffer
        return self.buffer[..., :n]

    def reset(self, mask=None):
        if mask is None:
            self.buffer[...] = 0.0
        else:
            self.buffer[mask] = 0.0


@numba.njit(cache=True)
def _fir_ascending(window, h, out):
    # window, h: (B, M); plain left-to-right accumulation, no reassociation
    nb, m = window.shape
    for t in range(nb):
        acc = 0.0
        for j in range(m):
            acc += h[t, j] * window[t, j]
        out[t] = acc


def fir_filter_step(line, h):
    """Current output ``sum_m h[m] x(n-m)`` of an FIR filter fed by ``line``.

    Products are accumulated in ascending tap order, so ``N`` successive
    calls reproduce a direct double-loop convolution bit for bit.  ``h`` may
    carry the same batch shape as the line, or be an ``ImpulseResponse``.
    """
    h = np.asarray(getattr(h, "taps", h), dtype=float)
    m = h.shape[-1]
    if line.length < m:
        raise ConfigurationError(f"delay line of length {line.length} is shorter than filter ({m} taps)")
    batch = line.buffer.shape[:-1]
    window = line.buffer.reshape(-1, line.length)[:, :m]
    taps = np.broadcast_to(h, batch + (m,)).reshape(-1, m)
    out = np.empty(window.shape[0])
    _fir_ascending(window, taps, out)
    return out.reshape(batch) if batch else out[0]


class FilteredRegressor:
    """The K x L filtered-input matrix of an affine projection filter.

    Row ``k`` holds ``[x_f(n-k), ..., x_f(n-k-L+1)]``.  The matrix is kept
    explicitly (contiguous, so products go through BLAS) and shifted on
    every push.  The K x K Gram matrix ``rows @ rows.T`` is updated at
    O(K L) cost: its lower-right block is the previous upper-left block.
    """

    def __init__(self, order, length, batch_shape=()):
        if order < 1 or length < 1:
            raise ConfigurationError(f"need K >= 1 and L >= 1, got K={order}, L={length}")
        if order > length:
            raise ConfigurationError(f"projection order K={order} exceeds filter length L={length}")
        self.order = int(order)
        self.length = int(length)
        batch_shape = tuple(batch_shape)
        self.rows = np.zeros(batch_shape + (self.order, self.length))
        self.gram = np.zeros(batch_shape + (self.order, self.order))
        self._spare = None

    @classmethod
    def from_samples(cls, samples, order, length):
        """Rebuild the regressor from a sample list (oldest first) by pushing."""
        reg = cls(order, length)
        for x in samples:
            reg.push(x)
        return reg

    @classmethod
    def from_history(cls, history, order, length):
        """Build a regressor from ``L + K - 1`` samples, newest first."""
        history = np.asarray(history, dtype=float)
        if history.shape[-1] != length + order - 1:
            raise ConfigurationError(
                f"history needs L + K - 1 = {length + order - 1} samples, got {history.shape[-1]}"
            )
        reg = cls(order, length, history.shape[:-1])
        reg.rows[...] = sliding_window_view(history, length, axis=-1)
        reg.gram[...] = reg.rows @ np.swapaxes(reg.rows, -1, -2)
        return reg

    @property
    def batch_shape(self):
        return self.rows.shape[:-2]

    @property
    def history(self):
        """The ``L + K - 1`` distinct samples, newest first."""
        return np.concatenate([self.rows[..., 0, :], self.rows[..., -1, self.length - self.order + 1 :]], axis=-1)

    def push(self, sample):
        # shift into a second buffer: one copy, no overlap temporaries
        old = self.rows
        rows = self._spare if self._spare is not None else np.empty_like(old)
        rows[..., 1:, :] = old[..., :-1, :]
        rows[..., 0, 1:] = old[..., 0, :-1]
        rows[..., 0, 0] = sample
        self.rows, self._spare = rows, old
        self.gram[..., 1:, 1:] = self.gram[..., :-1, :-1]
        first = (rows @ rows[..., 0, :, None])[..., 0]
        self.gram[..., 0, :] = first
        self.gram[..., :, 0] = first
        return self

    def times(self, w):
        """``U_f w``; ``w`` has shape batch + (L,)."""
        return (self.rows @ w[..., :, None])[..., 0]

    def transpose_times(self, z):
        """``U_f^T z``; ``z`` has shape batch + (K,)."""
        return (z[..., None, :] @ self.rows)[..., 0, :]

    def copy(self):
        new = FilteredRegressor.__new__(FilteredRegressor)
        new.order, new.length = self.order, self.length
        new.rows = self.rows.copy()
        new.gram = self.gram.copy()
        new._spare = None
        return new

    def reset(self, mask=None):
        if mask is None:
            self.rows[...] = 0.0
            self.gram[...] = 0.0
        else:
            self.rows[mask] = 0.0
            self.gram[mask] = 0.0


def push_filtered_sample(reg, x_f):
    """Return a new regressor with ``x_f`` shifted in as the newest sample."""
    return reg.copy().push(x_f)


@numba.njit(cache=True)
def _cholesky_solve(gram, delta, rhs, out):
    # gram: (B, K, K), rhs/out: (B, K); a non-positive pivot poisons the row with NaN
    nb, k = rhs.shape
    low = np.empty((k, k))
    tmp = np.empty(k)
    for t in range(nb):
        for i in range(k):
            for j in range(i + 1):
                acc = gram[t, i, j]
                if i == j:
                    acc += delta
                for m in range(j):
                    acc -= low[i, m] * low[j, m]
                if i == j:
                    low[i, i] = np.sqrt(acc) if acc > 0.0 else np.nan
                else:
                    low[i, j] = acc / low[j, j]
        for i in range(k):
            acc = rhs[t, i]
            for m in range(i):
                acc -= low[i, m] * tmp[m]
            tmp[i] = acc / low[i, i]
        for i in range(k - 1, -1, -1):
            acc = tmp[i]
            for m in range(i + 1, k):
                acc -= low[m, i] * out[t, m]
            out[t, i] = acc / low[i, i]


def solve_regularized(gram, delta, rhs):
    """Batched ``(gram + delta I)^{-1} rhs`` by Cholesky factorisation.

    Rows whose matrix is not positive definite come back as NaN.
    """
    gram = np.asarray(gram, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    k = gram.shape[-1]
    batch = rhs.shape[:-1]
    g2 = np.ascontiguousarray(np.broadcast_to(gram, batch + (k, k)).reshape(-1, k, k))
    r2 = np.ascontiguousarray(rhs.reshape(-1, k))
    out = np.empty_like(r2)
    _cholesky_solve(g2, float(delta), r2, out)
    return out.reshape(batch + (k,))


def gram_solve(reg, delta, rhs, iteration=None):
    """Solve ``(U_f U_f^T + delta I) z = rhs`` without forming an inverse."""
    k = reg.order
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[-1] != k:
        raise ConfigurationError(f"rhs has length {rhs.shape[-1]}, expected K={k}")
    if delta < 0:
        raise ConfigurationError(f"delta must be >= 0, got {delta!r}")
    z = solve_regularized(reg.gram, delta, rhs)
    if not np.all(np.isfinite(z)):
        where = "" if iteration is None else f" at iteration {iteration}"
        raise NumericalError(f"Gram solve broke down{where} (matrix not positive definite)", iteration)
    return z


def pseudo_apply(reg, delta, v, iteration=None):
    """Regularised pseudo-inverse product ``U_f^T (U_f U_f^T + delta I)^{-1} v``."""
    return reg.transpose_times(gram_solve(reg, delta, v, iteration))


def sgn_vec(w):
    """Elementwise signum with ``sgn(0) = 0``."""
    return np.sign(w)
