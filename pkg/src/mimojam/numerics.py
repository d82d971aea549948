"""
Complex matrix kernels shared by the channel, PHY and metric modules.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Vectors are kept as single-column (or single-row) 2-D arrays so that the
matrix algebra reads like the math.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "HERMITIAN_RTOL",
    "COND_CAP",
    "sample_complex_gaussian",
    "hermitian",
    "left_pinv",
    "right_pinv",
    "max_eigenpair",
]

HERMITIAN_RTOL = 1e-9
COND_CAP = 1e12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a Gram matrix is singular or too ill-conditioned to invert."""


def sample_complex_gaussian(rows: int, cols: int, variance: float,
                            rng: np.random.Generator) -> np.ndarray:
    """
    Draw a ``rows x cols`` matrix of i.i.d. circularly-symmetric complex
    Gaussian entries with mean 0 and total variance `variance`.

    The real and imaginary parts each carry ``variance / 2``.

    Parameters
    ----------
    rows, cols : int
        Matrix shape, both at least 1.
    variance : float
        Total per-entry variance, ``E|x|^2``. Must be non-negative.
    rng : numpy.random.Generator
        Random stream owned by the caller.

    Returns
    -------
    numpy.ndarray
        Complex array of shape ``(rows, cols)``.

    Examples
    --------
    >>> rng = np.random.default_rng(0)
    >>> sample_complex_gaussian(2, 2, 0.0, rng)
    array([[0.+0.j, 0.+0.j],
           [0.+0.j, 0.+0.j]])
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"shape must be positive, got ({rows}, {cols})")
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    # One call, viewed as complex: keeps the draw order fixed for a given seed.
    raw = rng.standard_normal((rows, 2 * cols))
    out = raw.view(np.complex128)
    out *= np.sqrt(variance / 2.0)
    return out


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def _checked_gram_inverse(gram: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(gram)):
        raise SingularMatrixError(f"{what}: non-finite entries")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > COND_CAP:
        raise SingularMatrixError(f"{what}: condition number {cond:.3g} exceeds {COND_CAP:.0e}")


def left_pinv(h: np.ndarray) -> np.ndarray:
    """
    Left pseudo-inverse ``(H^H H)^{-1} H^H`` of a tall, full column rank matrix.

    Raises
    ------
    ValueError
        If `h` has fewer rows than columns.
    SingularMatrixError
        If ``H^H H`` is singular or its condition number exceeds `COND_CAP`.
    """
    h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    n, m = h.shape
    if n < m:
        raise ValueError(f"left_pinv needs rows >= cols, got {h.shape}")
    hh = hermitian(h)
    gram = hh @ h
    _checked_gram_inverse(gram, "left_pinv")
    return np.linalg.solve(gram, hh)


def right_pinv(x: np.ndarray) -> np.ndarray:
    """
    Right pseudo-inverse ``X^H (X X^H)^{-1}`` of a wide, full row rank matrix.

    Mirror image of `left_pinv`: ``x @ right_pinv(x)`` is the identity.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.complex128))
    m, k = x.shape
    if k < m:
        raise ValueError(f"right_pinv needs cols >= rows, got {x.shape}")
    xh = hermitian(x)
    gram = x @ xh
    _checked_gram_inverse(gram, "right_pinv")
    # X^H G^{-1} == (G^{-H} X)^H and G is Hermitian
    return hermitian(np.linalg.solve(gram, x))


def _check_hermitian(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    asym = np.abs(a - hermitian(a)).max(initial=0.0)
    if asym > HERMITIAN_RTOL * scale:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3g} vs scale {scale:.3g})")


def max_eigenpair(a: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Largest eigenvalue of a Hermitian PSD matrix and a unit-norm eigenvector.

    2x2 inputs use the closed form; anything larger goes through LAPACK's
    Hermitian solver. With a repeated top eigenvalue the returned vector is
    whichever one the algorithm lands on, deterministically.

    Returns
    -------
    lam : float
        The maximal eigenvalue (clipped at 0 from below).
    v : numpy.ndarray
        Column vector of shape ``(n, 1)`` with ``||v|| = 1``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    _check_hermitian(a)
    n = a.shape[0]
    if n == 1:
        return max(float(a[0, 0].real), 0.0), np.ones((1, 1), dtype=np.complex128)
    if n == 2:
        p, d = a[0, 0].real, a[1, 1].real
        b = 0.5 * (a[0, 1] + np.conj(a[1, 0]))
        half = 0.5 * (p - d)
        lam = 0.5 * (p + d) + np.hypot(half, abs(b))
        if abs(b) == 0.0:
            v = np.array([[1.0], [0.0]] if p >= d else [[0.0], [1.0]], dtype=np.complex128)
        else:
            v1 = np.array([[b], [lam - p]], dtype=np.complex128)
            v2 = np.array([[lam - d], [np.conj(b)]], dtype=np.complex128)
            v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
            v /= np.linalg.norm(v)
        return max(float(lam), 0.0), v
    w, vecs = np.linalg.eigh(a)
    return max(float(w[-1]), 0.0), vecs[:, -1:].copy()
