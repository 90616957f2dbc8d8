import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcs import frames
from qcs.errors import DimensionError, InvalidSpecError, QcsError, UnsupportedConfigurationError
from qcs.families import Family, sigma_mu_sq, welch_bound_sq
from qcs.sensing import (
    build_matrix,
    coherence_report,
    initial_estimate,
    load_matrix,
    measure,
    offdiagonal,
    save_matrix,
)
from qcs.signal_model import SignalSpec, generate

# (256 - 128) / (128 * 255)
DFT_SIGMA_MU_SQ = 3.9215686e-3


def test_table_value_partial_dft():
    assert sigma_mu_sq("partial_dft", 128, 256) == pytest.approx(DFT_SIGMA_MU_SQ, rel=1e-7)
    assert sigma_mu_sq("gaussian", 128, 256) == 1 / 128
    assert welch_bound_sq(4, 1) == 0.0


@pytest.mark.parametrize("family", list(Family))
def test_unit_columns_and_unit_diagonal(family):
    M, N = (8, 16) if family is Family.ETF else (12, 40)
    A = build_matrix(family, M, N, seed=4)
    np.testing.assert_allclose(A.column_energies(), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diag(A.gram()).real, 1.0, atol=1e-12)


def test_full_partial_dft_is_unitary():
    A = build_matrix("partial_dft", 8, 8, seed=1)
    np.testing.assert_allclose(A.gram(), np.eye(8), atol=1e-12)
    rep = coherence_report(A)
    assert rep.mu < 1e-12
    assert rep.K_max_unique == 8


def test_partial_dft_rows_distinct_and_sorted():
    A = build_matrix("partial_dft", 100, 128, seed=9)
    rows = A.row_selector
    assert len(np.unique(rows)) == 100
    assert np.all(np.diff(rows) > 0)
    assert rows.min() >= 0 and rows.max() < 128


def test_bernoulli_entries_exact():
    A = build_matrix("bernoulli", 16, 32, seed=2)
    assert set(np.unique(A.entries)) == {-1 / 4, 1 / 4}


def test_gaussian_offdiagonal_variance():
    A = build_matrix("gaussian", 128, 256, seed=0)
    rep = coherence_report(A)
    assert rep.sigma_mu_sq_empirical == pytest.approx(1 / 128, rel=0.1)


def test_random_families_reproducible():
    for fam in ("random_partial_dft", "gaussian", "uniform", "bernoulli", "partial_dft"):
        a = build_matrix(fam, 6, 10, seed=123).entries
        b = build_matrix(fam, 6, 10, seed=123).entries
        np.testing.assert_array_equal(a, b)


def test_uniform_entries_bounded_before_normalisation():
    # entries lie in +-sqrt(3/M) then are scaled by 1/||column||
    A = build_matrix("uniform", 50, 60, seed=5)
    assert np.all(np.abs(A.entries) < 1)
    assert not np.iscomplexobj(A.entries)


def test_etf_meets_welch_bound():
    A = build_matrix("etf", 128, 256)
    rep = coherence_report(A)
    assert rep.mu == pytest.approx(math.sqrt(1 / 255), abs=1e-10)
    assert abs(rep.mu - rep.welch_bound) < 1e-10
    assert rep.K_max_unique == 8
    off = np.abs(offdiagonal(A.gram()))
    assert np.ptp(off) < 1e-10


@pytest.mark.parametrize("M,N", [(1, 5), (7, 8), (8, 16), (3, 6), (6, 12), (7, 14), (9, 18), (16, 32)])
def test_supported_etfs(M, N):
    assert frames.is_supported(M, N)
    A = frames.equiangular_tight_frame(M, N)
    G = A.conj().T @ A
    np.testing.assert_allclose(np.diag(G).real, 1, atol=1e-12)
    off = np.abs(offdiagonal(G))
    np.testing.assert_allclose(off, math.sqrt(welch_bound_sq(M, N)), atol=1e-10)
    # tight: A A^H = (N/M) I
    np.testing.assert_allclose(A @ A.conj().T, N / M * np.eye(M), atol=1e-9)


def test_real_constructions_are_real():
    # N = 6: 5 is a prime = 1 mod 4, symmetric Paley
    assert not np.iscomplexobj(frames.equiangular_tight_frame(3, 6))
    assert np.iscomplexobj(frames.equiangular_tight_frame(4, 8))


def test_conference_matrix_identities():
    for n in (4, 8, 12, 16):
        S = frames.skew_conference_matrix(n)
        np.testing.assert_array_equal(S.T, -S)
        np.testing.assert_array_equal(S @ S.T, (n - 1) * np.eye(n))
    for n in (6, 14, 18):
        C = frames.symmetric_conference_matrix(n)
        np.testing.assert_array_equal(C.T, C)
        np.testing.assert_array_equal(C @ C.T, (n - 1) * np.eye(n))


@pytest.mark.parametrize("M,N", [(100, 256), (5, 9), (0, 4)])
def test_unsupported_etf(M, N):
    with pytest.raises(UnsupportedConfigurationError):
        frames.etf_gram(M, N)
    assert not frames.is_supported(M, N)


def test_build_matrix_rejects_bad_dims():
    with pytest.raises(InvalidSpecError):
        build_matrix("gaussian", 10, 5)


def test_measure_linearity_and_single_column():
    A = build_matrix("partial_dft", 16, 32, seed=3)
    assert np.all(measure(A, np.zeros(32)) == 0)
    x = np.zeros(32, complex)
    x[5] = 0.3 - 0.2j
    np.testing.assert_allclose(measure(A, x), (0.3 - 0.2j) * A.entries[:, 5])
    with pytest.raises(DimensionError):
        measure(A, np.zeros(31))
    with pytest.raises(DimensionError):
        initial_estimate(A, np.zeros(15))


def test_example_signal_measurements_below_one():
    for seed in range(20):
        x = generate(SignalSpec(N=256, K=10, M=128, amplitude_jitter_max=0.4, rng_seed=seed))
        A = build_matrix("partial_dft", 128, 256, seed=seed)
        assert np.max(np.abs(measure(A, x))) < 1


def test_initial_estimate_unitary_case():
    A = build_matrix("partial_dft", 16, 16, seed=0)
    x = generate(SignalSpec(N=16, K=3, M=16, rng_seed=1))
    np.testing.assert_allclose(initial_estimate(A, measure(A, x)), x.coefficients, atol=1e-12)


def test_initial_estimate_statistics_single_coefficient():
    # unit coefficient at k1: E{X0(k1)} = 1 and var{X0(k)} = sigma_mu^2 elsewhere
    M, N, k1 = 64, 128, 17
    x = np.zeros(N, complex)
    x[k1] = 1.0
    others = []
    for seed in range(200):
        A = build_matrix("gaussian", M, N, seed=seed)
        x0 = initial_estimate(A, measure(A, x))
        assert x0[k1] == pytest.approx(1.0, abs=1e-12)
        others.append(np.delete(x0, k1))
    others = np.concatenate(others)
    assert np.mean(np.abs(others) ** 2) == pytest.approx(1 / M, rel=0.05)


def test_save_load_roundtrip(tmp_path):
    for fam, M, N in (("partial_dft", 6, 10), ("bernoulli", 4, 9), ("etf", 4, 8)):
        A = build_matrix(fam, M, N, seed=42)
        path = tmp_path / f"{fam}.csv"
        save_matrix(A, path)
        B = load_matrix(path)
        np.testing.assert_array_equal(A.entries, B.entries)
        assert B.family is A.family
        assert B.rng_seed == A.rng_seed
    with open(path, encoding="utf-8") as fh:
        assert fh.readline().startswith("# family=etf, M=4, N=8")


def test_load_rejects_odd_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# family=gaussian\n1.0,2.0,3.0\n")
    with pytest.raises(QcsError):
        load_matrix(p)


def test_matrix_is_immutable():
    A = build_matrix("gaussian", 4, 8, seed=0)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 2.0


@given(st.sampled_from(["partial_dft", "random_partial_dft", "gaussian", "uniform", "bernoulli"]),
       st.integers(1, 24), st.integers(0, 24), st.integers(0, 2 ** 32))
def test_projection_associativity(family, M, extra, seed):
    N = M + extra
    A = build_matrix(family, M, N, seed=seed)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    np.testing.assert_allclose(initial_estimate(A, measure(A, x)), A.gram() @ x, atol=1e-10)
    np.testing.assert_allclose(A.column_energies(), 1.0, atol=1e-12)
