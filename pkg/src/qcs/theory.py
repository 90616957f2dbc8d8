"""Closed-form expected reconstruction error and SNR predictions.

The expected error energy E||X_R - X_K||^2 is the sum of three terms:

* quantisation: ``K * sigma_e^2`` (fixed point) or
  ``K^2 / M * sigma_X^2 * sigma_e^2`` (floating point),
* nonsparsity: ``K * sigma_mu^2 * ||X - X_K||^2``,
* folding: ``K / M * sigma_z^2``.
"""
import math
from dataclasses import dataclass, field

from .errors import InvalidSpecError, UndefinedSNRError
from .families import Family, sigma_mu_sq
from .quantizer import ArithmeticMode

BERNOULLI_TABLE_MAX_K = 8
PRINTED_SLOPE_K = 3.01
PRINTED_SLOPE_B = 6.02
PRINTED_OFFSET = 7.78


def sigma_e_sq(B, complex=True):
    """Quantisation-noise variance for step 2**-B."""
    if B < 1:
        raise InvalidSpecError("B must be at least 1")
    delta = 2.0 ** -B
    return delta ** 2 / (6.0 if complex else 12.0)


@dataclass(frozen=True)
class ScenarioSpec:
    N: int
    M: int
    K: int
    B: int
    family: Family = Family.PARTIAL_DFT
    complex_signal: bool = True
    tail_energy: float = 0.0
    sigma_z_sq: float = 0.0
    signal_energy_K: float = 1.0
    mode: ArithmeticMode = ArithmeticMode.FIXED_POINT
    sigma_X_sq: float = 0.0
    bernoulli_correction: bool = True

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "mode", ArithmeticMode(self.mode))
        if not 1 <= self.K <= self.M <= self.N:
            raise InvalidSpecError(f"need 1 <= K <= M <= N, got K={self.K}, M={self.M}, N={self.N}")
        for name in ("tail_energy", "sigma_z_sq", "signal_energy_K", "sigma_X_sq"):
            if getattr(self, name) < 0:
                raise InvalidSpecError(f"{name} must be non-negative")


@dataclass(frozen=True)
class TheoryPrediction:
    expected_error_energy: float
    snr_th_db: float
    dominant_term: str
    components: dict = field(default_factory=dict)
    notes: tuple = ()


def quantization_multiplier(spec):
    if spec.family is Family.BERNOULLI and spec.bernoulli_correction:
        return bernoulli_small_k_correction(spec.K, spec.M)
    return 1.0


def predict(spec):
    se = sigma_e_sq(spec.B, spec.complex_signal)
    if spec.mode is ArithmeticMode.FIXED_POINT:
        quant = spec.K * se * quantization_multiplier(spec)
    else:
        quant = spec.K ** 2 / spec.M * spec.sigma_X_sq * se
    smu = sigma_mu_sq(spec.family, spec.M, spec.N)
    components = {
        "quantization": quant,
        "nonsparsity": spec.K * smu * spec.tail_energy,
        "folding": spec.K / spec.M * spec.sigma_z_sq,
    }
    total = sum(components.values())
    notes = []
    if spec.sigma_z_sq > 0 and spec.family is not Family.PARTIAL_DFT:
        notes.append("folding term derived for partial Fourier matrices (A A^H = N/M I)")
    if total <= 0:
        if spec.signal_energy_K == 0:
            raise UndefinedSNRError("zero predicted error with zero signal energy")
        snr = math.inf
    elif spec.signal_energy_K == 0:
        snr = -math.inf
    else:
        snr = 10 * math.log10(spec.signal_energy_K / total)
    dominant = max(components, key=components.get)
    return TheoryPrediction(total, snr, dominant, components, tuple(notes))


def snr_th_db(signal_energy_K, K, sigma_mu_sq_value, tail_energy, sigma_e_sq_value):
    """SNR_th = 10 log10(||X_K||^2 / (K sigma_mu^2 ||X - X_K||^2 + K sigma_e^2))."""
    return 10 * math.log10(
        signal_energy_K / (K * sigma_mu_sq_value * tail_energy + K * sigma_e_sq_value)
    )


def snr_db(signal_energy, error_energy):
    if error_energy <= 0:
        if signal_energy == 0:
            raise UndefinedSNRError("zero error with zero signal")
        return math.inf
    return 10 * math.log10(signal_energy / error_energy)


def log_error_db(K, B):
    """10 log10(K 2^-2B / 6), the exact form of 3.01 log2 K - 6.02 B - 7.78."""
    if K < 1 or B < 1:
        raise InvalidSpecError("K and B must be at least 1")
    return 10 * math.log10(K * 2.0 ** (-2 * B) / 6)


def log_error_db_printed(K, B):
    return PRINTED_SLOPE_K * math.log2(K) - PRINTED_SLOPE_B * B - PRINTED_OFFSET


def _largest_int_below(bound):
    # K < bound, guarding against bound landing a hair above an integer
    nearest = round(bound)
    if abs(bound - nearest) < 1e-9 * max(1.0, abs(bound)):
        k = nearest - 1
    else:
        k = math.floor(bound)
    return max(int(k), 0)


def uniqueness_bound(mu, M=None, B=None):
    """Largest K satisfying the coherence condition K < (1 + 1/mu) / 2.

    With ``B`` given, the worst-case quantisation term sqrt(M) * delta / mu
    is subtracted inside the bracket. Returns 0 when no K >= 1 qualifies.
    """
    if not 0 < mu <= 1:
        raise InvalidSpecError(f"mu must lie in (0, 1], got {mu}")
    bound = 1.0 + 1.0 / mu
    if B is not None:
        if M is None:
            raise InvalidSpecError("the quantised bound needs M")
        bound -= math.sqrt(M) * 2.0 ** -B / mu
    return _largest_int_below(bound / 2)


def detection_diagnostics(K, M, N, family, B, complex=True):
    """Gaussian approximations of the initial estimate (diagnostic only).

    Returns the mean and variance at a unit-amplitude support position and
    at a zero position: N(1, (K-1) sigma_mu^2 + sigma_e^2) and
    N(0, K sigma_mu^2 + sigma_e^2).
    """
    smu = sigma_mu_sq(family, M, N)
    se = sigma_e_sq(B, complex)
    return {
        "on_support": (1.0, (K - 1) * smu + se),
        "off_support": (0.0, K * smu + se),
    }


def level_sharing_factor(K, M):
    """Variance multiplier when M measurements fall on 2**K equiprobable
    sign-pattern levels.

    Rounding is odd-symmetric, so levels L and -L carry errors of opposite
    sign and add coherently after back-projection: there are 2**(K-1)
    independent groups. A group hit by n ~ Binomial(M, 2**(1-K))
    measurements contributes n**2 / M; summing the expectation over groups
    gives 1 + (M - 1) 2**(1-K).
    """
    return 1.0 + (M - 1) * 2.0 ** (1 - K)


def bernoulli_small_k_correction(K, M):
    """Multiplier on sigma_e^2 for Bernoulli matrices and small sparsity.

    K = 1 gives M / 2 (half the measurements share each error value);
    2 <= K <= BERNOULLI_TABLE_MAX_K uses :func:`level_sharing_factor`;
    larger K returns 1.
    """
    if K < 1 or M < 1:
        raise InvalidSpecError("K and M must be positive")
    if K == 1:
        return M / 2
    if K <= BERNOULLI_TABLE_MAX_K:
        return level_sharing_factor(K, M)
    return 1.0


def expected_signal_energy(M, K, jitter, cap_at_one=False):
    """E||X_K||^2 for magnitudes scale * (1 - nu), nu ~ U[0, jitter]."""
    scale = math.sqrt(M) / K
    if cap_at_one:
        scale = min(scale, 1.0)
    if jitter == 0:
        mean_sq = 1.0
    else:
        lo = 1.0 - jitter
        mean_sq = (1.0 - lo ** 3) / (3 * jitter)
    return K * scale ** 2 * mean_sq


def floating_sigma_x_sq(signal_energy_K, K, complex=True):
    """Per-real-component coefficient variance used by the floating-point model."""
    return signal_energy_K / (K * (2 if complex else 1))

