"""Weight-update rules of the modified filtered-x affine projection family.

All four rules share one kernel,

    w + U_f^T (U_f U_f^T + delta I)^{-1} r  -  c,

and differ only in the right-hand side ``r`` and the correction ``c``:

============  =================================  ====================
variant       r                                  c
============  =================================  ====================
FxAP          mu * e_measured                    0
MFxAP         mu * e_hat                         0
ZA-MFxAP      mu * e_hat + rho * U_f sgn(w)      (rho / mu) sgn(w)
RZA-MFxAP     mu * e_hat + rho' * U_f psi(w)     (rho' / mu) psi(w)
============  =================================  ====================

Folding the attraction term into ``r`` means one K x K solve per update.
Because ``x + 0.0 == x``, switching a penalty off reproduces MFxAP bit for bit.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dsp import sgn_vec, solve_regularized
from .errors import ConfigurationError, DivergenceError

__all__ = [
    "Variant",
    "AlgorithmConfig",
    "psi",
    "fxap_update",
    "mfxap_update",
    "za_mfxap_update",
    "rza_mfxap_update",
    "update",
]


class Variant(str, Enum):
    FXAP = "FxAP"
    MFXAP = "MFxAP"
    ZA_MFXAP = "ZA-MFxAP"
    RZA_MFXAP = "RZA-MFxAP"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("_", "-")
        for v in cls:
            if v.value.upper() == key:
                return v
        aliases = {"ZA": cls.ZA_MFXAP, "RZA": cls.RZA_MFXAP}
        if key in aliases:
            return aliases[key]
        raise ConfigurationError(
            f"unknown algorithm {name!r}; expected one of {[v.value for v in cls]}"
        )

    @property
    def modified(self):
        """True when the variant adapts on the reconstructed error vector."""
        return self is not Variant.FXAP


@dataclass(frozen=True)
class AlgorithmConfig:
    """Parameters of one adaptive filter.

    ``rho`` is the zero-attraction strength of ZA-MFxAP and ``rho_prime``
    the reweighted strength of RZA-MFxAP; the penalty weights ``alpha`` and
    ``gamma`` are derived from them, so changing ``mu`` also rescales the
    ``-alpha sgn(w)`` pull.
    """

    variant: Variant
    order: int
    mu: float
    delta: float = 0.002
    rho: float = 1e-7
    rho_prime: float = 1e-7
    epsilon: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if int(self.order) != self.order or self.order < 1:
            raise ConfigurationError(f"projection order K must be an integer >= 1, got {self.order!r}")
        for name in ("mu", "delta", "rho", "rho_prime"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value!r}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigurationError(f"epsilon must be finite and > 0, got {self.epsilon!r}")
        if self.mu == 0 and self.strength > 0:
            raise ConfigurationError(
                f"{self.variant.value} with mu = 0 needs a zero attraction strength "
                "(alpha = rho / mu would be infinite)"
            )

    @property
    def strength(self):
        """Attraction strength actually used by this variant."""
        if self.variant is Variant.ZA_MFXAP:
            return self.rho
        if self.variant is Variant.RZA_MFXAP:
            return self.rho_prime
        return 0.0

    @property
    def alpha(self):
        return self.rho / self.mu if self.rho else 0.0

    @property
    def gamma(self):
        return self.rho_prime / (self.mu * self.epsilon) if self.rho_prime else 0.0

    def with_segment(self, mu=None, epsilon=None):
        changes = {}
        if mu is not None:
            changes["mu"] = mu
        if epsilon is not None:
            changes["epsilon"] = epsilon
        return replace(self, **changes) if changes else self


def psi(w, epsilon):
    """Reweighting vector ``sgn(w) / (1 + epsilon |w|)``."""
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be > 0, got {epsilon!r}")
    return sgn_vec(w) / (1.0 + epsilon * np.abs(w))


def _kernel(w, reg, delta, rhs, correction, cfg, iteration, check):
    w_next = w + reg.transpose_times(solve_regularized(reg.gram, delta, rhs))
    if correction is not None:
        w_next = w_next - correction
    if check and not np.all(np.isfinite(w_next)):
        where = "" if iteration is None else f" at iteration {iteration}"
        raise DivergenceError(
            f"{cfg.variant.value} (mu={cfg.mu:g}) diverged{where}",
            iteration=iteration,
            variant=cfg.variant.value,
            mu=cfg.mu,
        )
    return w_next


def mfxap_update(w, reg, e_hat, cfg, iteration=None, check=True):
    """``w + mu U_f^+ e_hat``: the modified filtered-x AP recursion."""
    return _kernel(w, reg, cfg.delta, cfg.mu * np.asarray(e_hat), None, cfg, iteration, check)


def fxap_update(w, reg, e_meas, cfg, iteration=None, check=True):
    """Same algebra as :func:`mfxap_update`, fed with the measured error history."""
    return mfxap_update(w, reg, e_meas, cfg, iteration, check)


def za_mfxap_update(w, reg, e_hat, cfg, iteration=None, check=True):
    """Zero-attracting update (l1 penalty, sign of the current weights)."""
    s = sgn_vec(w)
    rhs = cfg.mu * np.asarray(e_hat) + cfg.rho * reg.times(s)
    return _kernel(w, reg, cfg.delta, rhs, cfg.alpha * s, cfg, iteration, check)


def rza_mfxap_update(w, reg, e_hat, cfg, iteration=None, check=True):
    """Reweighted zero-attracting update (log-sum penalty)."""
    p = psi(w, cfg.epsilon)
    rhs = cfg.mu * np.asarray(e_hat) + cfg.rho_prime * reg.times(p)
    # gamma * epsilon == rho' / mu
    shrink = cfg.rho_prime / cfg.mu if cfg.rho_prime else 0.0
    return _kernel(w, reg, cfg.delta, rhs, shrink * p, cfg, iteration, check)


_UPDATES = {
    Variant.FXAP: fxap_update,
    Variant.MFXAP: mfxap_update,
    Variant.ZA_MFXAP: za_mfxap_update,
    Variant.RZA_MFXAP: rza_mfxap_update,
}


def update(w, reg, error, cfg, iteration=None, check=True):
    """Dispatch on ``cfg.variant``.  ``error`` is e_hat, or the measured errors for FxAP."""
    return _UPDATES[cfg.variant](w, reg, error, cfg, iteration, check)
