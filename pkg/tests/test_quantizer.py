import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcs.errors import InvalidSpecError
from qcs.quantizer import (
    ArithmeticMode,
    FoldingSpec,
    QuantizerSpec,
    fold_coefficients,
    quantize,
    quantize_fixed,
    quantize_floating,
)
from qcs.signal_model import SignalSpec, generate

unit = st.floats(-1.5, 1.5, allow_nan=False)
bits = st.integers(1, 30)


def test_spec_accessors():
    s = QuantizerSpec(6)
    assert s.delta == 2.0 ** -6
    assert s.noise_variance == pytest.approx(4.0690104e-5, rel=1e-7)
    assert QuantizerSpec(1, complex_input=False).noise_variance == 1 / 48
    with pytest.raises(InvalidSpecError):
        QuantizerSpec(0)
    with pytest.raises(InvalidSpecError):
        QuantizerSpec(2.5)


def test_zero_maps_to_zero():
    q = quantize_fixed(np.array([0.0]), QuantizerSpec(6))
    assert q.values[0] == 0 and q.error[0] == 0 and q.saturated == 0


def test_point_seven_two_bits():
    q = quantize_fixed(np.array([0.7]), QuantizerSpec(2))
    assert q.values[0] == 0.75
    assert q.error[0] == pytest.approx(-0.05, abs=1e-15)


def test_saturation_clamps_and_counts():
    spec = QuantizerSpec(3)
    q = quantize_fixed(np.array([0.99, 1.7, -1.3, -1.0, 0.2 + 1.2j]), spec)
    np.testing.assert_array_equal(q.values[:4], [0.875, 0.875, -1.0, -1.0])
    assert q.values[4] == pytest.approx(0.25 + 0.875j)
    assert q.saturated == 4


def test_complex_parts_independent():
    spec = QuantizerSpec(4)
    z = np.array([0.31 - 0.77j])
    q = quantize_fixed(z, spec)
    assert q.values[0].real == quantize_fixed(np.array([0.31]), spec).values[0]
    assert q.values[0].imag == quantize_fixed(np.array([-0.77]), spec).values[0]


def test_fixed_point_error_statistics():
    rng = np.random.default_rng(0)
    spec = QuantizerSpec(8)
    h = 1 - spec.delta / 2
    v = rng.uniform(-h, h, 10 ** 6)
    e = quantize_fixed(v, spec).error
    assert abs(e.mean()) < 1e-3 * spec.delta
    assert e.var() == pytest.approx(spec.delta ** 2 / 12, rel=0.05)


def test_floating_constant_input_variance():
    spec = QuantizerSpec(6, ArithmeticMode.FLOATING_POINT, complex_input=False)
    c = 0.37
    out = quantize_floating(np.full(200_000, c), spec, np.random.default_rng(1)).values
    assert out.var() == pytest.approx(c ** 2 * spec.delta ** 2 / 12, rel=0.02)
    assert out.mean() == pytest.approx(c, abs=1e-5)


def test_floating_zero_and_mode_checks():
    fs = QuantizerSpec(6, "floating_point")
    assert np.all(quantize_floating(np.zeros(5, complex), fs, 3).values == 0)
    with pytest.raises(InvalidSpecError):
        quantize_floating(np.zeros(2), QuantizerSpec(6), 0)
    with pytest.raises(InvalidSpecError):
        quantize_fixed(np.zeros(2), fs)
    q = quantize(np.array([0.5 + 0.5j]), fs, 4)
    assert np.all(np.abs(q.error) <= 0.5 * fs.delta / 2 * np.sqrt(2))


def test_floating_is_seeded():
    fs = QuantizerSpec(5, "floating_point")
    y = np.linspace(-1, 1, 9) + 0.1j
    np.testing.assert_array_equal(quantize(y, fs, 7).values, quantize(y, fs, 7).values)


def test_fold_quantisation_keeps_zeros():
    x = generate(SignalSpec(N=64, K=4, M=32, cap_at_one=True, amplitude_jitter_max=0.3, rng_seed=2))
    z = fold_coefficients(x, FoldingSpec(B_z=5))
    mask = np.ones(64, bool)
    mask[x.support] = False
    assert np.all(z.coefficients[mask] == 0)
    d = z.coefficients[x.support] - x.coefficients[x.support]
    assert np.all(np.abs(d.real) <= 2 ** -6) and np.all(np.abs(d.imag) <= 2 ** -6)
    np.testing.assert_array_equal(z.support, x.support)


def test_fold_large_bits_is_identity():
    x = generate(SignalSpec(N=32, K=3, M=16, cap_at_one=True, rng_seed=4))
    z = fold_coefficients(x, FoldingSpec(B_z=50))
    np.testing.assert_allclose(z.coefficients, x.coefficients, atol=1e-15)


def test_fold_noise_variance():
    x = np.zeros(200_000, complex)
    z = fold_coefficients(x, FoldingSpec(quantize_coefficients=False, additive_noise_sigma=0.1), seed=5)
    c = z.coefficients
    assert np.mean(np.abs(c) ** 2) == pytest.approx(0.01, rel=0.02)
    assert np.var(c.real) == pytest.approx(0.005, rel=0.02)


def test_fold_spec_validation():
    with pytest.raises(InvalidSpecError):
        FoldingSpec(additive_noise_sigma=-1)
    with pytest.raises(InvalidSpecError):
        FoldingSpec(B_z=0)
    with pytest.raises(InvalidSpecError):
        fold_coefficients(np.ones(3), FoldingSpec(quantize_coefficients=False))
    with pytest.raises(InvalidSpecError):
        fold_coefficients(np.ones(3), FoldingSpec())
    out = fold_coefficients(np.full(3, 0.3), FoldingSpec(), B=2)
    np.testing.assert_array_equal(out.coefficients, [0.25, 0.25, 0.25])


@given(st.lists(unit, min_size=1, max_size=40), bits)
def test_idempotent(vals, B):
    spec = QuantizerSpec(B)
    once = quantize_fixed(np.array(vals), spec).values
    np.testing.assert_array_equal(quantize_fixed(once, spec).values, once)


@given(unit, unit, bits)
def test_monotone(a, b, B):
    lo, hi = min(a, b), max(a, b)
    q = quantize_fixed(np.array([lo, hi]), QuantizerSpec(B)).values
    assert q[0] <= q[1]


@given(st.lists(unit, min_size=1, max_size=40), bits)
def test_error_bound(vals, B):
    spec = QuantizerSpec(B)
    v = np.array(vals)
    q = quantize_fixed(v, spec)
    excess = np.maximum(np.abs(v) - (1 - spec.delta / 2), 0)
    assert np.all(np.abs(q.error) <= spec.delta / 2 + excess + 1e-15)
    inside = np.abs(v) <= 1 - spec.delta / 2
    assert np.all(np.abs(q.error[inside]) <= spec.delta / 2)
    assert np.all(q.values >= -1) and np.all(q.values <= 1 - spec.delta)
    # every output sits on the grid
    np.testing.assert_array_equal(q.values / spec.delta, np.round(q.values / spec.delta))
