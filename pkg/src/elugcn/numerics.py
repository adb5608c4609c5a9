"""Dense linear-algebra kernels used throughout the pipeline.

All kernels work on plain float64 ``numpy`` arrays (row-major). Reductions
go through numpy, whose sums are pairwise, so repeated runs on the same
machine give bit-identical results.
"""

import numpy as np

from .errors import SingularMatrixError

#: Largest matrix accepted by :func:`small_inverse` by default. The solver
#: targets class-count-sized systems, not general dense inversion.
SMALL_INVERSE_MAX = 64

#: Pivot magnitude below which a matrix is reported singular.
PIVOT_TOL = 1e-12


def small_inverse(m, max_size=SMALL_INVERSE_MAX):
    """Invert a small square matrix by LU factorization with partial pivoting.

    Parameters
    ----------
    m : ndarray, shape (c, c)
        Matrix to invert, c <= ``max_size``.
    max_size : int
        Guard on the accepted dimension.

    Returns
    -------
    ndarray, shape (c, c)
        Inverse such that ``m @ inv`` matches the identity to ~1e-8 per
        entry for well-conditioned inputs.

    Raises
    ------
    SingularMatrixError
        If any pivot falls below ``PIVOT_TOL`` in magnitude.
    ValueError
        If ``m`` is not square or exceeds ``max_size``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    c = m.shape[0]
    if c > max_size:
        raise ValueError(f"matrix of size {c} exceeds small-inverse bound {max_size}")

    # Factor PA = LU in place, solving against the identity afterwards.
    lu = m.copy()
    perm = np.arange(c)
    for col in range(c):
        pivot_row = col + int(np.argmax(np.abs(lu[col:, col])))
        if abs(lu[pivot_row, col]) < PIVOT_TOL:
            raise SingularMatrixError(
                f"pivot {abs(lu[pivot_row, col]):.3e} below tolerance {PIVOT_TOL:.0e} "
                f"at column {col}"
            )
        if pivot_row != col:
            lu[[col, pivot_row]] = lu[[pivot_row, col]]
            perm[[col, pivot_row]] = perm[[pivot_row, col]]
        factors = lu[col + 1 :, col] / lu[col, col]
        lu[col + 1 :, col] = factors
        lu[col + 1 :, col + 1 :] -= np.outer(factors, lu[col, col + 1 :])

    inv = np.zeros((c, c))
    rhs = np.eye(c)[perm]
    # Forward substitution (unit lower triangle), then back substitution.
    for i in range(c):
        rhs[i] -= lu[i, :i] @ rhs[:i]
    for i in range(c - 1, -1, -1):
        inv[i] = (rhs[i] - lu[i, i + 1 :] @ inv[i + 1 :]) / lu[i, i]
    return inv


def woodbury_apply(h, beta, r):
    """Apply ``(h @ h.T + beta*I)^{-1}`` to ``r`` without an n-by-n matrix.

    Uses the low-rank identity
    ``(HH^T + bI)^{-1} = (1/b)I - (1/b^2) H (I_c + (1/b)H^T H)^{-1} H^T``
    so the only inversion is a c-by-c system; cost O(n c^2 + c^3).

    Parameters
    ----------
    h : ndarray, shape (n, c)
    beta : float
        Strictly positive ridge shift.
    r : ndarray, shape (n, m)
        Right-hand side.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    h = np.asarray(h, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    core = np.eye(h.shape[1]) + (h.T @ h) / beta
    # Mathematically nonsingular for beta > 0; small_inverse still guards.
    z = small_inverse(core) @ (h.T @ r)
    return r / beta - h @ z / (beta * beta)


def softmax_rows(m):
    """Row-wise softmax with max-subtraction; each row sums to 1."""
    m = np.asarray(m, dtype=np.float64)
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def logsumexp(values):
    """log(sum(exp(values))) over all entries, stabilized by the max."""
    values = np.asarray(values, dtype=np.float64).ravel()
    top = values.max()
    return float(top + np.log(np.sum(np.exp(values - top))))


def finite_diff_check(f, grad, x, h=1e-4):
    """Compare an analytic gradient against central finite differences.

    Parameters
    ----------
    f : callable
        Scalar-valued function of a 1-D parameter vector.
    grad : ndarray or callable
        Analytic gradient at ``x`` (or a callable evaluated at ``x``).
    x : ndarray
        Point to check at; not modified.
    h : float
        Central-difference step.

    Returns
    -------
    float
        ``max_i |cd_i - grad_i| / (|grad_i| + 1e-8)``.
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(grad(x) if callable(grad) else grad, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ValueError(f"gradient shape {analytic.shape} != point shape {x.shape}")
    worst = 0.0
    probe = x.copy()
    for i in range(x.size):
        orig = probe[i]
        probe[i] = orig + h
        up = f(probe)
        probe[i] = orig - h
        down = f(probe)
        probe[i] = orig
        cd = (up - down) / (2.0 * h)
        err = abs(cd - analytic[i]) / (abs(analytic[i]) + 1e-8)
        worst = max(worst, err)
    return worst
