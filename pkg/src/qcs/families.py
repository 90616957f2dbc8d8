"""Measurement-matrix families and their interference variances."""
from enum import Enum


class Family(str, Enum):
    PARTIAL_DFT = "partial_dft"
    RANDOM_PARTIAL_DFT = "random_partial_dft"
    ETF = "etf"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    BERNOULLI = "bernoulli"

    def __str__(self):
        return self.value


RANDOM_FAMILIES = (
    Family.RANDOM_PARTIAL_DFT,
    Family.GAUSSIAN,
    Family.UNIFORM,
    Family.BERNOULLI,
)


def welch_bound_sq(M, N):
    """Squared Welch bound (N - M) / (M (N - 1)); zero when N == 1."""
    if N <= 1:
        return 0.0
    return (N - M) / (M * (N - 1))


def sigma_mu_sq(family, M, N):
    """Variance of an off-diagonal entry of A^H A for a unit-column family.

    Partial DFT and equiangular tight frames share the Welch value
    (N - M) / (M (N - 1)); every random family gives 1 / M.
    """
    family = Family(family)
    if family in (Family.PARTIAL_DFT, Family.ETF):
        return welch_bound_sq(M, N)
    return 1.0 / M
