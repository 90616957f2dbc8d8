"""Test-signal generators for strictly and approximately sparse vectors.

Large coefficients have magnitude ``scale * (1 - nu)`` with
``nu ~ Uniform[0, jitter]`` and ``scale = sqrt(M) / K`` (optionally capped at
one for signals that must themselves fit fixed-point registers). Phases are
uniform on [0, 2 pi). The approximately sparse model adds a tail
``scale * exp(-decay * p / K)`` for ``p = K+1, ..., N``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidSpecError, RangeError


@dataclass(frozen=True)
class SpectralVector:
    """Length-N complex coefficient vector with its K-element support."""

    coefficients: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=complex)
        supp = np.asarray(self.support, dtype=int)
        if coef.ndim != 1:
            raise InvalidSpecError("coefficients must be one-dimensional")
        if len(np.unique(supp)) != len(supp):
            raise InvalidSpecError("support indices must be distinct")
        if len(supp) and (supp.min() < 0 or supp.max() >= len(coef)):
            raise InvalidSpecError("support index out of range")
        coef.setflags(write=False)
        supp.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "support", supp)

    @property
    def N(self):
        return len(self.coefficients)

    @property
    def K(self):
        return len(self.support)

    def energy(self):
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def is_strictly_sparse(self):
        mask = np.ones(self.N, dtype=bool)
        mask[self.support] = False
        return not np.any(self.coefficients[mask])


@dataclass(frozen=True)
class TailSpec:
    """Exponential tail ``exp(-decay * p / K)``; decay=1 gives exp(-p/K)."""

    decay: float = 1.0

    def __post_init__(self):
        if not self.decay > 0:
            raise InvalidSpecError("tail decay must be positive")


@dataclass(frozen=True)
class SignalSpec:
    N: int
    K: int
    M: int
    amplitude_jitter_max: float = 0.0
    tail: Optional[TailSpec] = None
    rng_seed: int = 0
    cap_at_one: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise InvalidSpecError("K must be at least 1")
        if self.K >= self.N:
            raise InvalidSpecError(f"K={self.K} must be smaller than N={self.N}")
        if not 1 <= self.M <= self.N:
            raise InvalidSpecError(f"M={self.M} must lie in [1, N={self.N}]")
        if not 0.0 <= self.amplitude_jitter_max < 1.0:
            raise InvalidSpecError("amplitude_jitter_max must lie in [0, 1)")

    @property
    def scale(self):
        s = np.sqrt(self.M) / self.K
        return min(s, 1.0) if self.cap_at_one else s


def amplitude_bound(M, K, cap_at_one=True):
    """Largest coefficient magnitude keeping partial-DFT measurements in range."""
    s = np.sqrt(M) / K
    return min(s, 1.0) if cap_at_one else s


def _large_part(spec, rng):
    perm = rng.permutation(spec.N)
    nu = rng.uniform(0.0, spec.amplitude_jitter_max, spec.K)
    phase = rng.uniform(0.0, 2 * np.pi, spec.K)
    x = np.zeros(spec.N, dtype=complex)
    x[perm[: spec.K]] = spec.scale * (1.0 - nu) * np.exp(1j * phase)
    return x, perm


def _check_range(x, spec):
    bound = spec.scale
    if np.max(np.abs(x)) > bound * (1 + 1e-12):
        raise RangeError(f"coefficient magnitude exceeds {bound:.6g}")


def generate_sparse(spec):
    """Strictly K-sparse signal at uniformly random distinct positions."""
    if spec.tail is not None:
        raise InvalidSpecError("generate_sparse requires tail=None")
    rng = np.random.default_rng(spec.rng_seed)
    x, perm = _large_part(spec, rng)
    _check_range(x, spec)
    return SpectralVector(x, perm[: spec.K])


def generate_nonsparse(spec):
    """Approximately sparse signal; shares its K large coefficients with
    :func:`generate_sparse` for the same seed."""
    if spec.tail is None:
        raise InvalidSpecError("generate_nonsparse requires an exponential tail")
    rng = np.random.default_rng(spec.rng_seed)
    x, perm = _large_part(spec, rng)
    p = np.arange(spec.K + 1, spec.N + 1)
    tail_phase = rng.uniform(0.0, 2 * np.pi, spec.N - spec.K)
    x[perm[spec.K:]] = spec.scale * np.exp(-spec.tail.decay * p / spec.K) * np.exp(1j * tail_phase)
    _check_range(x, spec)
    return SpectralVector(x, perm[: spec.K])


def generate(spec):
    return generate_sparse(spec) if spec.tail is None else generate_nonsparse(spec)


def tail_energy(spec):
    """Closed-form ||X - X_K||^2 for the nonsparse model (0 without tail)."""
    if spec.tail is None:
        return 0.0
    p = np.arange(spec.K + 1, spec.N + 1)
    return float(np.sum((spec.scale * np.exp(-spec.tail.decay * p / spec.K)) ** 2))


def sparse_truncation(x, K):
    """Keep the K largest-magnitude coefficients.

    Returns ``(x_k, residual_energy)`` where ``residual_energy`` is
    ``||x - x_k||^2``. Ties are broken in favour of the lower index.
    """
    if isinstance(x, SpectralVector):
        coef = x.coefficients
    else:
        coef = np.asarray(x, dtype=complex)
    if not 1 <= K <= len(coef):
        raise InvalidSpecError(f"K={K} must lie in [1, {len(coef)}]")
    order = np.argsort(-np.abs(coef), kind="stable")
    keep = np.sort(order[:K])
    out = np.zeros_like(coef)
    out[keep] = coef[keep]
    rest = np.delete(coef, keep)
    return SpectralVector(out, keep), float(np.sum(np.abs(rest) ** 2))
