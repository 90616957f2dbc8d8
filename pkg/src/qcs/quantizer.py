"""B-bit register models for measurements and coefficients.

Fixed point: mid-tread rounding on the grid ``k * 2**-B`` with the register
range [-1, 1 - 2**-B]; out-of-range values saturate to the nearest end level.
Floating point: multiplicative relative error ``y (1 + e)`` with
``e ~ Uniform[-delta/2, delta/2]`` drawn independently per real component.
"""
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidSpecError
from .signal_model import SpectralVector


class ArithmeticMode(str, Enum):
    FIXED_POINT = "fixed_point"
    FLOATING_POINT = "floating_point"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class QuantizerSpec:
    B: int
    mode: ArithmeticMode = ArithmeticMode.FIXED_POINT
    complex_input: bool = True

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise InvalidSpecError(f"B must be a positive integer, got {self.B}")
        object.__setattr__(self, "mode", ArithmeticMode(self.mode))

    @property
    def delta(self):
        return 2.0 ** -self.B

    @property
    def noise_variance(self):
        """delta^2/12 for real input, delta^2/6 when both parts are quantised."""
        return self.delta ** 2 / (6.0 if self.complex_input else 12.0)


@dataclass(frozen=True)
class FoldingSpec:
    """Pre-measurement perturbation of the coefficients.

    ``B_z=None`` means "use the measurement register length".
    ``additive_noise_sigma`` is the standard deviation of complex Gaussian
    noise (total complex variance sigma**2, sigma**2/2 per real part) added
    to every coefficient.
    """

    quantize_coefficients: bool = True
    B_z: Optional[int] = None
    additive_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.additive_noise_sigma < 0:
            raise InvalidSpecError("additive_noise_sigma must be non-negative")
        if self.B_z is not None and self.B_z < 1:
            raise InvalidSpecError("B_z must be at least 1")

    @property
    def active(self):
        return self.quantize_coefficients or self.additive_noise_sigma > 0


class Quantized(NamedTuple):
    values: np.ndarray
    error: np.ndarray
    saturated: int


def _quantize_real(v, delta):
    q = np.round(v / delta) * delta
    clipped = np.clip(q, -1.0, 1.0 - delta)
    return clipped, int(np.count_nonzero(clipped != q))


def quantize_fixed(y, spec):
    """Round every real component to the B-bit grid.

    Returns ``Quantized(values, error, saturated)`` where
    ``error = y - values`` and ``saturated`` counts clipped components.
    """
    if spec.mode is not ArithmeticMode.FIXED_POINT:
        raise InvalidSpecError("quantize_fixed needs a fixed-point spec")
    y = np.asarray(y)
    if np.iscomplexobj(y):
        re, s_re = _quantize_real(y.real, spec.delta)
        im, s_im = _quantize_real(y.imag, spec.delta)
        q = re + 1j * im
        sat = s_re + s_im
    else:
        q, sat = _quantize_real(y.astype(float), spec.delta)
    return Quantized(q, y - q, sat)


def quantize_floating(y, spec, rng=None):
    if spec.mode is not ArithmeticMode.FLOATING_POINT:
        raise InvalidSpecError("quantize_floating needs a floating-point spec")
    rng = np.random.default_rng(rng)
    y = np.asarray(y)
    h = spec.delta / 2
    if np.iscomplexobj(y):
        e_re = rng.uniform(-h, h, y.shape)
        e_im = rng.uniform(-h, h, y.shape)
        q = y.real * (1 + e_re) + 1j * y.imag * (1 + e_im)
    else:
        q = y * (1 + rng.uniform(-h, h, y.shape))
    return Quantized(q, y - q, 0)


def quantize(y, spec, rng=None):
    if spec.mode is ArithmeticMode.FIXED_POINT:
        return quantize_fixed(y, spec)
    return quantize_floating(y, spec, rng)


def fold_coefficients(x, fold, seed=None, B=None):
    """Return X + z: B_z-bit quantisation of the nonzero coefficients plus
    optional additive complex Gaussian noise on all N coefficients.

    ``B`` supplies the register length when ``fold.B_z`` is None. The
    returned vector keeps the support of ``x``.
    """
    if not fold.active:
        raise InvalidSpecError("folding spec has neither quantisation nor noise")
    coef = np.array(x.coefficients if isinstance(x, SpectralVector) else x, dtype=complex)
    support = x.support if isinstance(x, SpectralVector) else np.flatnonzero(coef)
    if fold.quantize_coefficients:
        bits = fold.B_z if fold.B_z is not None else B
        if bits is None:
            raise InvalidSpecError("coefficient quantisation needs B_z or B")
        nz = coef != 0
        coef[nz] = quantize_fixed(coef[nz], QuantizerSpec(bits)).values
    if fold.additive_noise_sigma > 0:
        rng = np.random.default_rng(seed)
        s = fold.additive_noise_sigma / np.sqrt(2)
        coef = coef + s * (rng.standard_normal(coef.shape) + 1j * rng.standard_normal(coef.shape))
    return SpectralVector(coef, support)
