"""Small dense linear-algebra kernels.

Matrix exponentials (Pade scaling-and-squaring and eigendecomposition),
phi-functions for exponential integrators, closed-form 2x2 singular values
and Gram-Schmidt basis extension. All routines accept stacked arrays of
shape ``(..., n, n)`` where that makes sense.
"""
import math

import numpy as np

# Diagonal [8/8] Pade coefficients for exp: c_k = (16-k)! 8! / (16! k! (8-k)!)
_PADE8 = [math.factorial(16 - k) * math.factorial(8)
          / (math.factorial(16) * math.factorial(k) * math.factorial(8 - k))
          for k in range(9)]
_PADE_THETA = 0.5


def _norm1(a):
    return np.abs(a).sum(axis=-2).max(axis=-1)


def expm_pade(a):
    """exp(a) by scaling and squaring with a diagonal [8/8] Pade approximant.

    The input is scaled by 2**-s so that its 1-norm is at most 0.5, where the
    [8/8] approximant is accurate to well below double precision.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] == 0:
        return a.copy()
    nrm = float(np.max(_norm1(a)))
    s = 0 if nrm <= _PADE_THETA else int(math.ceil(math.log2(nrm / _PADE_THETA)))
    x = a / (2.0 ** s)
    eye = np.broadcast_to(np.eye(a.shape[-1], dtype=complex), a.shape)
    u = np.zeros_like(x)
    v = np.zeros_like(x)
    p = eye.copy()
    for k, c in enumerate(_PADE8):
        if k:
            p = p @ x
        if k % 2:
            u = u + c * p
        else:
            v = v + c * p
    # numerator v + u, denominator v - u
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm_eig(a, cond_max=1e8):
    """exp(a) through an eigendecomposition; falls back to Pade if the
    eigenvector matrix is ill conditioned (defective or nearly so)."""
    a = np.asarray(a, dtype=complex)
    lam, vec = np.linalg.eig(a)
    if np.max(np.linalg.cond(vec)) > cond_max:
        return expm_pade(a)
    return (vec * np.exp(lam)[..., None, :]) @ np.linalg.inv(vec)


def phi1(z):
    """phi_1(z) = (e^z - 1)/z elementwise, with a series near z = 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zs = z[small]
    out[small] = 1 + zs / 2 + zs**2 / 6 + zs**3 / 24 + zs**4 / 120
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def phi2(z):
    """phi_2(z) = (e^z - 1 - z)/z^2 elementwise, with a series near z = 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 0.1
    zs = z[small]
    acc = np.zeros_like(zs)
    term = np.ones_like(zs) / 2.0
    for k in range(2, 14):
        acc = acc + term
        term = term * zs / (k + 1)
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / zb**2
    return out


def phi_matrices_eig(a, cond_max=1e8):
    """(exp(a), phi_1(a), phi_2(a)) via eigendecomposition.

    Returns None when the eigenvector matrix is too ill conditioned, so the
    caller can switch to :func:`phi_matrices_pade`.
    """
    a = np.asarray(a, dtype=complex)
    lam, vec = np.linalg.eig(a)
    if np.max(np.linalg.cond(vec)) > cond_max:
        return None
    inv = np.linalg.inv(vec)
    out = []
    for fn in (np.exp, phi1, phi2):
        out.append((vec * fn(lam)[..., None, :]) @ inv)
    return tuple(out)


def phi_matrices_pade(a):
    """(exp(a), phi_1(a), phi_2(a)) from the exponential of an augmented
    block matrix [[a, I, 0], [0, 0, I], [0, 0, 0]]."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    big = np.zeros(a.shape[:-2] + (3 * n, 3 * n), dtype=complex)
    big[..., :n, :n] = a
    big[..., :n, n:2 * n] = np.eye(n)
    big[..., n:2 * n, 2 * n:] = np.eye(n)
    e = expm_pade(big)
    return e[..., :n, :n], e[..., :n, n:2 * n], e[..., :n, 2 * n:]


def sv2x2(m):
    """Closed-form (sigma_max, sigma_min) of stacked 2x2 matrices."""
    m = np.asarray(m)
    f2 = (np.abs(m) ** 2).sum(axis=(-1, -2))
    det = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    disc = np.sqrt(np.maximum(f2 * f2 - 4.0 * det * det, 0.0))
    smax = np.sqrt((f2 + disc) / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        smin = np.where(smax > 0, det / smax, 0.0)
    return smax, smin


def extend_basis(q, vectors, tol=1e-10):
    """Extend the orthonormal columns ``q`` by ``vectors`` (columns).

    Classical Gram-Schmidt with one reorthogonalisation pass. A vector is
    accepted when its component orthogonal to the current basis has norm
    above ``tol`` relative to its own norm. The original columns come first
    in the result (prefix property).
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    if vectors.ndim == 2 and vectors.shape[0] != q.shape[0]:
        vectors = vectors.T
    cols = [q[:, j] for j in range(q.shape[1])]
    basis = q
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        w = v / nv
        for _ in range(2):
            if basis.shape[1]:
                w = w - basis @ (basis.conj().T @ w)
        nw = np.linalg.norm(w)
        if nw > tol:
            cols.append(w / nw)
            basis = np.column_stack(cols)
    if not cols:
        return np.zeros((q.shape[0], 0), dtype=complex)
    return np.column_stack(cols)


def orthonormality_defect(q):
    """max |Q^H Q - I| entrywise."""
    if q.shape[1] == 0:
        return 0.0
    g = q.conj().T @ q
    return float(np.max(np.abs(g - np.eye(q.shape[1]))))
