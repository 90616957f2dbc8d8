"""Measurement matrices, measurements, back-projection and coherence."""
import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import frames
from .errors import DimensionError, InvalidSpecError, QcsError
from .families import Family, sigma_mu_sq, welch_bound_sq
from .signal_model import SpectralVector


@dataclass(frozen=True)
class SensingMatrix:
    """Immutable M x N measurement matrix with unit-energy columns."""

    entries: np.ndarray
    family: Family
    rng_seed: Optional[int] = None
    row_selector: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        a = np.array(self.entries)
        if a.ndim != 2:
            raise DimensionError("entries must be a 2-D array")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "family", Family(self.family))
        if self.row_selector is not None:
            rs = np.array(self.row_selector)
            rs.setflags(write=False)
            object.__setattr__(self, "row_selector", rs)

    @property
    def M(self):
        return self.entries.shape[0]

    @property
    def N(self):
        return self.entries.shape[1]

    @property
    def H(self):
        return self.entries.conj().T

    def gram(self):
        return self.H @ self.entries

    def column_energies(self):
        return np.sum(np.abs(self.entries) ** 2, axis=0)


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    sigma_mu_sq_theoretical: float
    sigma_mu_sq_empirical: float
    K_max_unique: int
    welch_bound: float


def _entries(A):
    return A.entries if isinstance(A, SensingMatrix) else np.asarray(A)


def _normalize_columns(a):
    return a / np.linalg.norm(a, axis=0, keepdims=True)


def _dft_rows(rows, N, M):
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(rows, k) / N) / np.sqrt(M)


def build_matrix(family, M, N, seed=0):
    """Build a measurement matrix of the given family with unit-energy columns.

    Random families draw from ``numpy.random.default_rng(seed)``; the
    Gaussian and uniform families are column-normalised per realisation.
    """
    family = Family(family)
    if not 1 <= M <= N:
        raise InvalidSpecError(f"need 1 <= M <= N, got M={M}, N={N}")
    rng = np.random.default_rng(seed)
    rows = None
    if family is Family.PARTIAL_DFT:
        rows = np.sort(rng.choice(N, size=M, replace=False))
        a = _dft_rows(rows, N, M)
    elif family is Family.RANDOM_PARTIAL_DFT:
        rows = rng.uniform(0.0, N, size=M)
        a = _normalize_columns(_dft_rows(rows, N, M))
    elif family is Family.ETF:
        a = frames.equiangular_tight_frame(M, N)
        seed = None
    elif family is Family.GAUSSIAN:
        a = _normalize_columns(rng.standard_normal((M, N)) / np.sqrt(M))
    elif family is Family.UNIFORM:
        # zero-mean with variance 1/M before normalisation
        half_width = np.sqrt(3.0 / M)
        a = _normalize_columns(rng.uniform(-half_width, half_width, (M, N)))
    else:
        a = rng.choice(np.array([-1.0, 1.0]), size=(M, N)) / np.sqrt(M)
    return SensingMatrix(a, family, seed, rows)


def _coef(x):
    return x.coefficients if isinstance(x, SpectralVector) else np.asarray(x)


def measure(A, x):
    """Exact (unquantised) measurements y = A X."""
    a, c = _entries(A), _coef(x)
    if a.shape[1] != c.shape[0]:
        raise DimensionError(f"matrix has {a.shape[1]} columns, signal has length {c.shape[0]}")
    return a @ c


def initial_estimate(A, y):
    """Back-projection X0 = A^H y."""
    a = _entries(A)
    y = np.asarray(y)
    if a.shape[0] != y.shape[0]:
        raise DimensionError(f"matrix has {a.shape[0]} rows, y has length {y.shape[0]}")
    return a.conj().T @ y


def offdiagonal(G):
    return G[~np.eye(G.shape[0], dtype=bool)]


def coherence_report(A):
    a = _entries(A)
    M, N = a.shape
    fam = A.family if isinstance(A, SensingMatrix) else None
    G = a.conj().T @ a
    off = offdiagonal(G)
    mu = float(np.max(np.abs(off))) if off.size else 0.0
    emp = float(np.mean(np.abs(off - off.mean()) ** 2)) if off.size else 0.0
    theo = sigma_mu_sq(fam, M, N) if fam is not None else float("nan")
    # imported here: theory builds on this module's types
    from .theory import uniqueness_bound

    k_max = N if mu < 1e-12 else uniqueness_bound(mu)
    return CoherenceReport(mu, theo, emp, k_max, math.sqrt(welch_bound_sq(M, N)))


def save_matrix(A, path):
    """Write a matrix as CSV, one row per matrix row, entries interleaved re,im.

    The first line is a ``# family=..., M=..., N=..., seed=...`` comment.
    """
    a = _entries(A)
    fam = A.family.value if isinstance(A, SensingMatrix) else "unknown"
    seed = A.rng_seed if isinstance(A, SensingMatrix) else None
    inter = np.empty((a.shape[0], 2 * a.shape[1]))
    inter[:, 0::2] = a.real
    inter[:, 1::2] = np.imag(a)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# family={fam}, M={a.shape[0]}, N={a.shape[1]}, seed={seed}\n")
        w = csv.writer(fh)
        for row in inter:
            w.writerow([repr(float(v)) for v in row])


def load_matrix(path):
    meta = {}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split(","):
                    if "=" in item:
                        key, val = item.split("=", 1)
                        meta[key.strip()] = val.strip()
                continue
            if line.strip():
                rows.append([float(v) for v in line.split(",")])
    inter = np.array(rows)
    if inter.ndim != 2 or inter.shape[1] % 2:
        raise QcsError(f"{path}: expected an even number of columns (re,im pairs)")
    a = inter[:, 0::2] + 1j * inter[:, 1::2]
    if not np.any(a.imag):
        a = a.real
    fam = meta.get("family", "unknown")
    try:
        fam = Family(fam)
    except ValueError:
        raise QcsError(f"{path}: unknown matrix family {fam!r}") from None
    seed = meta.get("seed")
    seed = None if seed in (None, "None") else int(seed)
    return SensingMatrix(a, fam, seed)
