"""Deterministic equiangular tight frames (ETFs).

Supported (M, N) pairs:

* ``M == N``: orthonormal basis (coherence 0).
* ``M == 1``: N unimodular scalars (coherence 1).
* ``M == N - 1``: regular simplex (coherence 1 / (N - 1)).
* ``N == 2 M`` where N is a power of two, or N = p + 1 for a prime
  p = 3 (mod 4): complex ETF built from a skew-symmetric conference matrix.
* ``N == 2 M`` where N = p + 1 for a prime p = 1 (mod 4): real ETF built
  from a symmetric (Paley) conference matrix.

Anything else raises :class:`UnsupportedConfigurationError`.
"""
import numpy as np

from .errors import UnsupportedConfigurationError


def _is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def _jacobsthal(p):
    """Q[i, j] = Legendre symbol of (j - i) mod p."""
    squares = np.zeros(p, dtype=int)
    squares[(np.arange(1, p) ** 2) % p] = 1
    chi = np.where(squares == 1, 1, -1)
    chi[0] = 0
    idx = (np.arange(p)[None, :] - np.arange(p)[:, None]) % p
    return chi[idx]


def _paley_conference(p):
    Q = _jacobsthal(p)
    n = p + 1
    C = np.zeros((n, n), dtype=int)
    C[0, 1:] = 1
    C[1:, 0] = 1 if p % 4 == 1 else -1
    C[1:, 1:] = Q
    return C


def skew_conference_matrix(n):
    """Skew-symmetric conference matrix S of order n: S.T == -S, S S.T == (n-1) I.

    Powers of two use the doubling S -> [[S, S + I], [S - I, -S]] starting
    from order 2; n = p + 1 with p = 3 (mod 4) prime uses Paley's construction.
    """
    if _is_power_of_two(n) and n >= 2:
        S = np.array([[0, 1], [-1, 0]])
        while S.shape[0] < n:
            eye = np.eye(S.shape[0], dtype=int)
            S = np.block([[S, S + eye], [S - eye, -S]])
        return S
    p = n - 1
    if _is_prime(p) and p % 4 == 3:
        return _paley_conference(p)
    raise UnsupportedConfigurationError(f"no skew conference matrix of order {n}")


def symmetric_conference_matrix(n):
    p = n - 1
    if _is_prime(p) and p % 4 == 1:
        return _paley_conference(p)
    raise UnsupportedConfigurationError(f"no symmetric conference matrix of order {n}")


def _frame_from_gram(G, M):
    # G = A^H A with rank M; the top-M eigenpairs give A = sqrt(L) U^H
    w, U = np.linalg.eigh(G)
    w, U = w[::-1][:M], U[:, ::-1][:, :M]
    A = np.sqrt(np.clip(w, 0.0, None))[:, None] * U.conj().T
    return A / np.linalg.norm(A, axis=0, keepdims=True)


def etf_gram(M, N):
    """Gram matrix of the supported ETF with N unit vectors in dimension M."""
    if not 1 <= M <= N:
        raise UnsupportedConfigurationError(f"ETF needs 1 <= M <= N, got M={M}, N={N}")
    if M == N:
        return np.eye(N)
    if M == 1:
        return np.ones((N, N))
    if M == N - 1:
        return (N * np.eye(N) - np.ones((N, N))) / (N - 1)
    if N == 2 * M:
        try:
            S = skew_conference_matrix(N)
            return np.eye(N) + 1j * S / np.sqrt(N - 1)
        except UnsupportedConfigurationError:
            pass
        try:
            C = symmetric_conference_matrix(N)
            return np.eye(N) + C / np.sqrt(N - 1)
        except UnsupportedConfigurationError:
            pass
    raise UnsupportedConfigurationError(
        f"no equiangular tight frame construction for M={M}, N={N}; "
        "supported: M=N, M=1, M=N-1, and N=2M with N a power of two or N-1 prime"
    )


def is_supported(M, N):
    try:
        etf_gram(M, N)
    except UnsupportedConfigurationError:
        return False
    return True


def equiangular_tight_frame(M, N):
    """Return an M x N ETF with unit-norm columns.

    Real-valued whenever the underlying construction is real (identity,
    simplex, symmetric Paley); complex for the skew constructions.
    """
    G = etf_gram(M, N)
    if M == N:
        return np.eye(N)
    if M == 1:
        return np.ones((1, N))
    A = _frame_from_gram(G, M)
    if not np.iscomplexobj(G):
        A = A.real
    return A
