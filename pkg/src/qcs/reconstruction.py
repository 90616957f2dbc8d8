"""Sparse reconstruction: matching pursuit, hard thresholding, Bayesian pruning."""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    DivergenceError,
    IllConditionedError,
    InvalidSpecError,
    RankDeficiencyError,
)
from .sensing import SensingMatrix

CONDITION_LIMIT = 1e12
# noise-variance floor relative to the mean power of a real measurement component
SIGMA2_FLOOR = 1e-12


class Algorithm(str, Enum):
    OMP = "omp"
    IHT = "iht"
    BAYESIAN = "bayesian"

    @classmethod
    def _missing_(cls, value):
        if value == "bayes":
            return cls.BAYESIAN
        return None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class AlgoConfig:
    K: int
    overshoot_fraction: float = 0.05
    overshoot_min_k: int = 20
    iht_iterations: int = 100
    iht_tau: float = 1.0
    iht_patience: int = 10
    iht_tol: float = 1e-12
    bayes_threshold: float = 1e2
    bayes_max_iterations: int = 1000
    bayes_tol: float = 1e-6
    bayes_warmup: int = 4
    bayes_refit: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise InvalidSpecError("assumed sparsity K must be at least 1")
        if self.overshoot_fraction < 0:
            raise InvalidSpecError("overshoot_fraction must be non-negative")
        if self.iht_iterations < 1:
            raise InvalidSpecError("iht_iterations must be at least 1")
        if not 0 < self.iht_tau < 2:
            raise InvalidSpecError("iht_tau must lie in (0, 2)")
        if self.bayes_max_iterations < 1:
            raise InvalidSpecError("bayes_max_iterations must be at least 1")
        if self.bayes_warmup < 0:
            raise InvalidSpecError("bayes_warmup must be non-negative")

    def omp_iterations(self):
        if self.K >= self.overshoot_min_k:
            return self.K + math.ceil(self.K * self.overshoot_fraction)
        return self.K


@dataclass
class ReconstructionOutput:
    X_R: np.ndarray
    support: np.ndarray
    residual_norm: float
    algorithm: Algorithm
    iterations_used: int
    error_energy_vs_truth: Optional[float] = None
    converged: bool = True
    residual_history: list = field(default_factory=list, repr=False)


def _entries(A):
    return A.entries if isinstance(A, SensingMatrix) else np.asarray(A)


def _check_dims(a, y):
    if a.shape[0] != len(y):
        raise DimensionError(f"matrix has {a.shape[0]} rows, y has length {len(y)}")


def solve_on_support(A, y, support):
    """Least-squares coefficients on ``support``: pinv(A_K) y.

    Uses a column-pivoted QR. Raises :class:`RankDeficiencyError` when the
    estimated condition number of A_K exceeds ``CONDITION_LIMIT``.
    """
    a = _entries(A)
    y = np.asarray(y)
    _check_dims(a, y)
    support = np.asarray(support, dtype=int)
    if len(support) == 0:
        return np.zeros(0, dtype=np.result_type(a, y))
    if len(support) > a.shape[0]:
        raise RankDeficiencyError(f"support size {len(support)} exceeds M={a.shape[0]}")
    sub = a[:, support]
    Q, R, piv = scipy.linalg.qr(sub, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    cond = np.inf if diag[-1] == 0 else diag[0] / diag[-1]
    if cond > CONDITION_LIMIT:
        raise RankDeficiencyError(f"selected columns are rank deficient (cond ~ {cond:.3g})", cond)
    z = scipy.linalg.solve_triangular(R, Q.conj().T @ y)
    out = np.empty_like(z)
    out[piv] = z
    return out


def _finish(x, a, y, support, algo, iters, truth, converged, history):
    resid = float(np.linalg.norm(y - a @ x))
    err = None
    if truth is not None:
        t = truth.coefficients if hasattr(truth, "coefficients") else np.asarray(truth)
        err = float(np.sum(np.abs(x - t) ** 2))
    return ReconstructionOutput(x, np.asarray(support, dtype=int), resid, algo, iters, err,
                                converged, history)


def reconstruct_omp(A, y, cfg, truth=None):
    """Greedy support detection with a least-squares refit per step.

    Each iteration picks the largest |A^H e| (lowest index on ties), re-solves
    on the grown support and updates the residual. For ``K >= overshoot_min_k``
    a few extra iterations are run, after which the K largest coefficients
    are kept and refitted.
    """
    a = _entries(A)
    y = np.asarray(y)
    _check_dims(a, y)
    M, N = a.shape
    n_iter = cfg.omp_iterations()
    if n_iter > M:
        raise InvalidSpecError(f"{n_iter} iterations exceed M={M} measurements")
    aH = a.conj().T
    selected = []
    chosen = np.zeros(N, dtype=bool)
    e = y.astype(complex)
    coef = np.zeros(0, dtype=complex)
    history = [float(np.linalg.norm(e))]
    for _ in range(n_iter):
        corr = np.abs(aH @ e)
        corr[chosen] = -1.0
        k = int(np.argmax(corr))
        selected.append(k)
        chosen[k] = True
        coef = solve_on_support(a, y, selected)
        e = y - a[:, selected] @ coef
        history.append(float(np.linalg.norm(e)))
    support = np.array(selected, dtype=int)
    if n_iter > cfg.K:
        keep = np.sort(support[np.argsort(-np.abs(coef), kind="stable")[: cfg.K]])
        support = keep
        coef = solve_on_support(a, y, support)
    order = np.argsort(support)
    support, coef = support[order], coef[order]
    x = np.zeros(N, dtype=complex)
    x[support] = coef
    return _finish(x, a, y, support, Algorithm.OMP, n_iter, truth, True, history)


def _hard_threshold(v, K):
    keep = np.sort(np.argsort(-np.abs(v), kind="stable")[:K])
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out, keep


def reconstruct_iht(A, y, cfg, truth=None):
    """Iterative hard thresholding started from zero.

    Stops after ``iht_iterations`` or once the support has been stable for
    ``iht_patience`` iterations and the residual norm changes by less than
    ``iht_tol * ||y||``.
    """
    a = _entries(A)
    y = np.asarray(y)
    _check_dims(a, y)
    aH = a.conj().T
    x = np.zeros(a.shape[1], dtype=complex)
    ref = float(np.linalg.norm(aH @ y)) ** 2
    y_norm = float(np.linalg.norm(y))
    support = np.zeros(0, dtype=int)
    stable = 0
    r_norm = y_norm
    history = [r_norm]
    converged = False
    it = 0
    for it in range(1, cfg.iht_iterations + 1):
        g = x + cfg.iht_tau * (aH @ (y - a @ x))
        x, new_support = _hard_threshold(g, cfg.K)
        energy = float(np.sum(np.abs(x) ** 2))
        if not np.isfinite(energy) or (ref > 0 and energy > 1e8 * ref):
            raise DivergenceError(f"IHT diverged at iteration {it}; reduce tau={cfg.iht_tau}")
        stable = stable + 1 if np.array_equal(new_support, support) else 0
        support = new_support
        new_r = float(np.linalg.norm(y - a @ x))
        history.append(new_r)
        small_change = abs(new_r - r_norm) <= cfg.iht_tol * max(y_norm, np.finfo(float).tiny)
        r_norm = new_r
        if stable >= cfg.iht_patience and small_change:
            converged = True
            break
    if y_norm == 0:
        support = np.zeros(0, dtype=int)
        converged = True
    return _finish(x, a, y, support, Algorithm.IHT, it, truth, converged, history)


def _composite(a, y):
    ar, ai = a.real, np.imag(a)
    phi = np.block([[ar, -ai], [ai, ar]])
    t = np.concatenate([y.real, np.imag(y)])
    return phi, t


def _cho(H):
    try:
        return scipy.linalg.cho_factor(H)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise IllConditionedError(f"posterior covariance inversion failed: {exc}") from exc


def _posterior(a, y, active, d, sigma2):
    """Posterior mean and covariance diagonal for the active columns.

    Complex form of the composite real system: its covariance is the real
    representation of (A_S^H A_S / sigma2 + D)^-1. Past M active columns the
    Woodbury identity keeps the factorisation at M x M.
    """
    P = a[:, active]
    M, n = P.shape
    if n <= M:
        H = P.conj().T @ P / sigma2 + np.diag(d)
        cf = _cho(H)
        Sigma = scipy.linalg.cho_solve(cf, np.eye(n))
        V = Sigma @ (P.conj().T @ y) / sigma2
        return V, np.real(np.diag(Sigma))
    dinv = 1.0 / d
    PD = P * dinv
    C = sigma2 * np.eye(M) + PD @ P.conj().T
    cf = _cho(C)
    W = scipy.linalg.cho_solve(cf, P)
    V = dinv * (P.conj().T @ scipy.linalg.cho_solve(cf, y))
    sdiag = dinv - dinv ** 2 * np.real(np.sum(P.conj() * W, axis=0))
    return V, sdiag


def reconstruct_bayesian(A, y, cfg, truth=None):
    """Sparse Bayesian learning with relevance pruning.

    Complex data follow the real composite system
    [Re y; Im y] = [[Re A, -Im A], [Im A, Re A]] [Re X; Im X] with the real
    and imaginary parts of a coefficient sharing one precision d_k (updated
    as gamma_k / |V_k|^2). That system is solved in its equivalent complex
    form. Starts from d = 1 and sigma^2 = 1.

    The data are rescaled so that ||y||^2 / K = 1, which makes the pruning
    threshold a fraction of the typical coefficient power; the estimate is
    scaled back on exit. No column is pruned during the first
    ``bayes_warmup`` passes. Afterwards columns whose precision exceeds
    ``bayes_threshold`` are removed, and the loop stops once nothing is
    pruned and every precision changed by less than ``bayes_tol``
    (relative), or after ``bayes_max_iterations``.

    With ``bayes_refit`` the K strongest survivors are kept and refitted by
    least squares, as for the overshooting matching pursuit.
    """
    a = _entries(A).astype(complex)
    y = np.asarray(y)
    _check_dims(a, y)
    M, N = a.shape
    x = np.zeros(N, dtype=complex)
    y_energy = float(np.sum(np.abs(y) ** 2))
    if y_energy == 0:
        return _finish(x, a, y, np.zeros(0, dtype=int), Algorithm.BAYESIAN, 0, truth, True, [0.0])
    scale = math.sqrt(y_energy / cfg.K)
    yn = y.astype(complex) / scale
    floor = SIGMA2_FLOOR * float(np.sum(np.abs(yn) ** 2)) / (2 * M)
    active = np.arange(N)
    d = np.ones(N)
    sigma2 = 1.0
    V = np.zeros(N, dtype=complex)
    converged = False
    history = []
    it = 0
    for it in range(1, cfg.bayes_max_iterations + 1):
        if len(active) == 0:
            converged = True
            break
        V, sdiag = _posterior(a, yn, active, d, sigma2)
        if not np.all(np.isfinite(V)):
            raise IllConditionedError("posterior mean is not finite")
        gamma = 2.0 - 2.0 * d * sdiag
        power = np.abs(V) ** 2
        with np.errstate(divide="ignore"):
            d_new = np.where(power > 0, gamma / power, np.inf)
        resid = yn - a[:, active] @ V
        r2 = float(np.sum(np.abs(resid) ** 2))
        history.append(math.sqrt(r2) * scale)
        dof = 2 * M - float(np.sum(gamma))
        sigma2 = max(r2 / dof if dof > 0 else sigma2, floor)
        if it > cfg.bayes_warmup:
            keep = np.abs(d_new) <= cfg.bayes_threshold
        else:
            keep = np.isfinite(d_new)
        change = np.max(np.abs(d_new[keep] - d[keep]) / d[keep]) if np.any(keep) else 0.0
        pruned = not np.all(keep)
        active, d, V = active[keep], d_new[keep], V[keep]
        if it > cfg.bayes_warmup and not pruned and change < cfg.bayes_tol:
            converged = True
            break
    if cfg.bayes_refit and len(active):
        order = np.argsort(-np.abs(V), kind="stable")[: cfg.K]
        active = np.sort(active[order])
        V = solve_on_support(a, yn, active)
    if len(active):
        x[active] = V * scale
    return _finish(x, a, y, np.sort(active), Algorithm.BAYESIAN, it, truth, converged, history)


def reconstruct(algorithm, A, y, cfg, truth=None):
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.OMP:
        return reconstruct_omp(A, y, cfg, truth)
    if algorithm is Algorithm.IHT:
        return reconstruct_iht(A, y, cfg, truth)
    return reconstruct_bayesian(A, y, cfg, truth)
