"""Synthetic acoustic paths with controlled sparsity.

Three density classes are used throughout: *sparse* (a single unit tap at
index 3), *partially-sparse* (a random subset of a non-sparse path's taps)
and *non-sparse* (almost every tap active).  Non-sparse responses are
zero-mean Gaussian taps under an exponentially decaying envelope with time
constant ``L / 4``, normalised to unit energy.
"""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ImpulseResponse",
    "SparsityClass",
    "NONSPARSE_DENSITY",
    "PARTIAL_DENSITY",
    "density",
    "support_size",
    "make_sparse",
    "make_nonsparse",
    "make_partially_sparse",
    "make_path",
    "convolve",
    "unit_impulse",
]

NONSPARSE_DENSITY = Fraction(785, 800)
PARTIAL_DENSITY = Fraction(73, 800)
SPARSE_TAP = 3


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Finite impulse response; ``taps`` is stored as a read-only float array."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float).reshape(-1)
        if taps.size == 0:
            raise ConfigurationError("an impulse response needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ConfigurationError("impulse response taps must be finite")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return self.taps.size

    def __eq__(self, other):
        if not isinstance(other, ImpulseResponse):
            return NotImplemented
        return self.taps.shape == other.taps.shape and bool(np.array_equal(self.taps, other.taps))

    def __hash__(self):
        return hash(self.taps.tobytes())

    @property
    def density(self):
        return density(self)

    @property
    def norm(self):
        return float(np.sqrt(np.sum(self.taps**2)))

    def to_text(self):
        d = self.density
        lines = [f"# length={len(self)} density={d.numerator}/{d.denominator}"]
        lines.extend(format(t, ".17g") for t in self.taps)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        taps = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                taps.append(float(line))
            except ValueError:
                raise ConfigurationError(f"line {lineno}: not a number: {raw!r}") from None
        return cls(np.array(taps))

    def save(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SparsityClass:
    """A density class, e.g. ``SparsityClass("partially-sparse", Fraction(73, 800))``.

    ``target_density`` is read as a fraction of the path length, so the
    same class scales to any ``L``: ``nonzero_count(64)`` for 73/800 is 6.
    """

    kind: str
    target_density: Fraction = None

    KINDS = ("sparse", "partially-sparse", "non-sparse")

    def __post_init__(self):
        kind = self.kind.strip().lower().replace("_", "-")
        if kind == "nonsparse":
            kind = "non-sparse"
        if kind == "partially-sparse" or kind == "partial":
            kind = "partially-sparse"
        if kind not in self.KINDS:
            raise ConfigurationError(f"unknown sparsity class {self.kind!r}; expected one of {self.KINDS}")
        object.__setattr__(self, "kind", kind)
        d = self.target_density
        if d is None:
            d = {"sparse": None, "partially-sparse": PARTIAL_DENSITY, "non-sparse": NONSPARSE_DENSITY}[kind]
        elif not isinstance(d, Fraction):
            d = Fraction(d).limit_denominator(1_000_000) if isinstance(d, float) else Fraction(d)
        if d is not None and not 0 < d <= 1:
            raise ConfigurationError(f"density must lie in (0, 1], got {d}")
        object.__setattr__(self, "target_density", d)

    def nonzero_count(self, length):
        if self.kind == "sparse":
            return 1
        return _count(self.target_density, length)

    def realized_density(self, length):
        return Fraction(self.nonzero_count(length), length)


def _count(d, length):
    n = round(Fraction(d) * length) if not isinstance(d, float) else round(d * length)
    return int(n)


def _taps(h):
    return h.taps if isinstance(h, ImpulseResponse) else np.asarray(h, dtype=float)


def support_size(h):
    return int(np.count_nonzero(_taps(h)))


def density(h):
    """Fraction of taps that are exactly nonzero."""
    t = _taps(h)
    return Fraction(int(np.count_nonzero(t)), t.size)


def unit_impulse(length=1, delay=0):
    taps = np.zeros(length)
    taps[delay] = 1.0
    return ImpulseResponse(taps)


def make_sparse(length):
    """Unit tap at index 3 (the fourth coefficient), zeros elsewhere."""
    if length < SPARSE_TAP + 1:
        raise ConfigurationError(f"a sparse path needs L >= {SPARSE_TAP + 1}, got {length}")
    return unit_impulse(length, SPARSE_TAP)


def make_nonsparse(length, density=NONSPARSE_DENSITY, seed=0):
    """Random decaying response with exactly ``round(density * L)`` nonzero taps."""
    if length < 1:
        raise ConfigurationError(f"length must be >= 1, got {length}")
    if not 0 < density <= 1:
        raise ConfigurationError(f"density must lie in (0, 1], got {density}")
    count = _count(density, length)
    if count < 1:
        raise ConfigurationError(f"density {density} leaves no nonzero tap at L={length}")
    rng = np.random.Generator(np.random.PCG64(seed))
    positions = np.sort(rng.choice(length, size=count, replace=False))
    values = rng.standard_normal(count) * np.exp(-positions / (length / 4.0))
    # a standard normal draw of exactly 0.0 would silently lower the density
    values[values == 0.0] = np.finfo(float).tiny
    taps = np.zeros(length)
    taps[positions] = values
    taps /= np.sqrt(np.sum(taps**2))
    return ImpulseResponse(taps)


def make_partially_sparse(base, density=PARTIAL_DENSITY, seed=0):
    """Zero all but a seeded random subset of ``base``'s nonzero taps."""
    base = base if isinstance(base, ImpulseResponse) else ImpulseResponse(base)
    length = len(base)
    count = _count(density, length)
    support = np.flatnonzero(base.taps)
    if count > support.size:
        raise ConfigurationError(
            f"requested density {density} ({count} taps) exceeds the base density "
            f"{support.size}/{length}"
        )
    if count == support.size:
        return base
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = rng.choice(support, size=count, replace=False)
    taps = np.zeros(length)
    taps[keep] = base.taps[keep]
    return ImpulseResponse(taps)


def make_path(sparsity, length, seed=0):
    """Realise a :class:`SparsityClass` at ``length`` taps.

    A partially-sparse path is carved out of the non-sparse path drawn
    with the same seed, so the two are nested the way a pruned room
    response would be.
    """
    if sparsity.kind == "sparse":
        return make_sparse(length)
    if sparsity.kind == "non-sparse":
        return make_nonsparse(length, sparsity.target_density, seed)
    base = make_nonsparse(length, NONSPARSE_DENSITY, seed)
    return make_partially_sparse(base, sparsity.target_density, seed)


def convolve(a, b):
    """Full linear convolution, accumulated in ascending index of ``a``."""
    ta, tb = _taps(a), _taps(b)
    out = np.zeros(ta.size + tb.size - 1)
    for m in range(ta.size):
        out[m : m + tb.size] += ta[m] * tb
    return ImpulseResponse(out)
