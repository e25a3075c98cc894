"""Dense complex linear algebra for small state spaces.

Everything operates on plain numpy arrays: complex128 vectors for states and
complex128 square matrices for Hermitian operators. The eigensolver is a
cyclic Jacobi iteration with complex rotations, which is ample for the
dimensions handled here (a few up to a few tens) and keeps the exact
propagator free of external solver dependencies.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError, NumericalError

HERMITICITY_TOL = 1e-12
NORMALIZATION_TOL = 1e-9

_JACOBI_OFF_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


def as_vector(entries) -> np.ndarray:
    """Validate and return a complex amplitude vector (dim >= 2, finite)."""
    v = np.ascontiguousarray(entries, dtype=np.complex128)
    if v.ndim != 1:
        raise InputError(f"expected a 1-d vector, got shape {v.shape}")
    if v.shape[0] < 2:
        raise InputError(f"vector dimension must be >= 2, got {v.shape[0]}")
    if not np.all(np.isfinite(v.view(np.float64))):
        raise InputError("vector has non-finite entries")
    return v


def as_state(entries) -> np.ndarray:
    """Validate a unit-norm state vector (|norm - 1| <= 1e-9)."""
    v = as_vector(entries)
    nrm = norm(v)
    if abs(nrm - 1.0) > NORMALIZATION_TOL:
        raise InputError(f"state vector is not normalized: |psi| = {nrm!r}")
    return v


def as_hermitian(matrix) -> np.ndarray:
    """Validate a Hermitian matrix (entrywise equal to its adjoint within 1e-12)."""
    m = np.ascontiguousarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise InputError("matrix has non-finite entries")
    dev = np.max(np.abs(m - m.conj().T))
    if dev > HERMITICITY_TOL:
        raise InputError(f"matrix is not Hermitian: max |M - M^dag| = {dev:.3e}")
    return m


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Inner product <u|v>, conjugate-linear in the first argument."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise InputError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(u, v))


def norm(v: np.ndarray) -> float:
    return math.sqrt(np.vdot(v, v).real)


def apply(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product H|v>."""
    h = np.asarray(h)
    v = np.asarray(v)
    if h.ndim != 2 or h.shape[1] != v.shape[0]:
        raise InputError(f"dimension mismatch: {h.shape} applied to {v.shape}")
    return h @ v


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """One complex Jacobi rotation zeroing a[p, q] (and a[q, p]), in place."""
    w = a[p, q]
    aw = abs(w)
    if aw == 0.0:
        return
    phase = w / aw  # e^{i arg(w)}
    theta = 0.5 * math.atan2(2.0 * aw, a[q, q].real - a[p, p].real)
    c = math.cos(theta)
    s = math.sin(theta)
    sm = s * np.conj(phase)  # column factor, e^{-i arg(w)}
    sp = s * phase

    ap = a[:, p].copy()
    aq = a[:, q].copy()
    a[:, p] = c * ap - sm * aq
    a[:, q] = s * ap + c * np.conj(phase) * aq
    rp = a[p, :].copy()
    rq = a[q, :].copy()
    a[p, :] = c * rp - sp * rq
    a[q, :] = s * rp + c * phase * rq
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - sm * vq
    v[:, q] = s * vp + c * np.conj(phase) * vq


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return math.sqrt(np.sum(np.abs(off) ** 2))


def hermitian_eigen(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues, eigenvectors) with eigenvalues ascending and
    eigenvectors as the columns of a unitary matrix, so that
    H = V diag(w) V^dag.
    """
    h = as_hermitian(matrix)
    n = h.shape[0]
    a = h.copy()
    v = np.eye(n, dtype=np.complex128)

    converged = _offdiag_norm(a) <= _JACOBI_OFF_TOL
    for _ in range(_JACOBI_MAX_SWEEPS):
        if converged:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotate(a, v, p, q)
        converged = _offdiag_norm(a) <= _JACOBI_OFF_TOL
    if not converged:
        raise NumericalError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def expm_apply(h: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
    """Exact propagator action e^{-iHt}|v> via eigendecomposition."""
    h = np.asarray(h)
    v = np.asarray(v)
    if h.shape[0] != v.shape[0]:
        raise InputError(f"dimension mismatch: {h.shape} vs {v.shape}")
    w, vecs = hermitian_eigen(h)
    coeffs = vecs.conj().T @ v
    return vecs @ (np.exp(-1j * w * t) * coeffs)
