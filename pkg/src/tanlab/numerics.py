"""Dense symmetric eigensolver, thin SVD and matrix norms.

The in-house solvers are cyclic Jacobi methods using a round-robin
(tournament) ordering, so that each round applies ``n // 2`` disjoint
rotations at once as vectorised numpy updates.  ``method="lapack"`` routes
the same calls to numpy's LAPACK bindings; the two routes are cross-checked
in the test suite and the fast one is used on the experiment hot paths.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

ASYMMETRY_TOL = 1e-12
_EPS = np.finfo(np.float64).eps
_MAX_SWEEPS = 60


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues


class ThinSvd(NamedTuple):
    left_vectors: np.ndarray
    singular_values: np.ndarray  # descending, >= 0
    right_vectors: np.ndarray


class MatrixNorms(NamedTuple):
    operator_norm: float
    frobenius_norm: float
    spectral_radius: float | None  # None unless the input is symmetric


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-D finite float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def max_asymmetry(a: np.ndarray) -> float:
    """Largest |a_ij - a_ji| relative to max |a_ij| (0 for the zero matrix)."""
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.T)) / scale)


def check_symmetric(a) -> np.ndarray:
    arr = as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be square, got shape {arr.shape}")
    asym = max_asymmetry(arr)
    if asym > ASYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric: max relative asymmetry {asym:.3e}")
    return arr


def round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering every (p, q), p < q, once per sweep.

    Circle-method tournament schedule: ``n - 1`` rounds (``n`` rounds for odd
    ``n``, one index resting each round).
    """
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a < 0 or b < 0:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotation(alpha, beta, gamma):
    """Jacobi rotation (c, s) zeroing gamma in [[alpha, gamma], [gamma, beta]]."""
    active = gamma != 0.0
    safe_gamma = np.where(active, gamma, 1.0)
    zeta = (beta - alpha) / (2.0 * safe_gamma)
    t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t


def _needs_rotation(alpha, beta, gamma, floor):
    return (np.abs(gamma) > _EPS * np.sqrt(np.abs(alpha * beta))) & (np.abs(gamma) > floor)


def jacobi_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic two-sided Jacobi on a symmetric matrix; unsorted (w, V)."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return a.diagonal().copy(), v
    rounds = round_robin_pairs(n)
    floor = 1e-3 * _EPS * scale
    for _ in range(_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= n * _EPS * scale:
            break
        rotated = False
        for p, q in rounds:
            alpha, beta, gamma = a[p, p], a[q, q], a[p, q]
            needs = _needs_rotation(alpha, beta, gamma, floor)
            if not needs.any():
                continue
            rotated = True
            c, s = _rotation(alpha, beta, np.where(needs, gamma, 0.0))
            ap, aq = a[:, p], a[:, q]
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            vp, vq = v[:, p], v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        if not rotated:
            break
    else:  # pragma: no cover - quadratic convergence makes this unreachable
        raise RuntimeError("Jacobi eigensolver did not converge")
    return a.diagonal().copy(), v


def sym_eig(a, method: str = "jacobi") -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix, eigenvalues descending.

    Within a repeated eigenvalue any orthonormal basis may be returned.
    """
    arr = check_symmetric(a)
    arr = 0.5 * (arr + arr.T)
    if method == "jacobi":
        w, v = jacobi_eig(arr)
    elif method == "lapack":
        w, v = np.linalg.eigh(arr)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")[::-1]
    return EigenDecomposition(w[order], v[:, order])


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns of ``u`` not in ``keep`` by an orthonormal completion."""
    if keep.all():
        return u
    rows, cols = u.shape
    good = u[:, keep]
    missing = cols - good.shape[1]
    # fixed-seed candidates projected off span(good) twice, then orthonormalised
    cand = np.random.default_rng(0).standard_normal((rows, missing))
    for _ in range(2):
        cand -= good @ (good.T @ cand)
    fill, _ = np.linalg.qr(cand)
    out = u.copy()
    out[:, ~keep] = fill
    return out


def jacobi_svd(x: np.ndarray) -> ThinSvd:
    """One-sided (Hestenes) Jacobi SVD of a matrix with rows >= cols."""
    g = np.array(x, dtype=np.float64, copy=True)
    rows, cols = g.shape
    v = np.eye(cols)
    floor = 1e-3 * _EPS * float(np.sum(g * g))
    if cols > 1 and floor > 0.0:
        rounds = round_robin_pairs(cols)
        for _ in range(_MAX_SWEEPS):
            rotated = False
            for p, q in rounds:
                gp, gq = g[:, p], g[:, q]
                alpha = np.einsum("ij,ij->j", gp, gp)
                beta = np.einsum("ij,ij->j", gq, gq)
                gamma = np.einsum("ij,ij->j", gp, gq)
                needs = _needs_rotation(alpha, beta, gamma, floor)
                if not needs.any():
                    continue
                rotated = True
                c, s = _rotation(alpha, beta, np.where(needs, gamma, 0.0))
                g[:, p] = c * gp - s * gq
                g[:, q] = s * gp + c * gq
                vp, vq = v[:, p], v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
            if not rotated:
                break
        else:  # pragma: no cover
            raise RuntimeError("Jacobi SVD did not converge")
    sigma = np.linalg.norm(g, axis=0)
    order = np.argsort(sigma, kind="stable")[::-1]
    sigma, g, v = sigma[order], g[:, order], v[:, order]
    cutoff = sigma[0] * rows * _EPS if sigma[0] > 0 else 0.0
    keep = sigma > cutoff
    u = np.zeros_like(g)
    u[:, keep] = g[:, keep] / sigma[keep]
    u = _complete_basis(u, keep)
    return ThinSvd(u, sigma, v)


def thin_svd(x, method: str = "jacobi") -> ThinSvd:
    """Reduced SVD ``x = U diag(s) V^T`` with ``k = min(rows, cols)`` columns."""
    arr = as_matrix(x)
    if method == "lapack":
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
        return ThinSvd(u, s, vt.T)
    if method != "jacobi":
        raise ValueError(f"unknown method {method!r}")
    if arr.shape[0] >= arr.shape[1]:
        return jacobi_svd(arr)
    t = jacobi_svd(arr.T)
    return ThinSvd(t.right_vectors, t.singular_values, t.left_vectors)


def operator_norm(a, method: str = "lapack") -> float:
    arr = as_matrix(a)
    if method == "lapack":
        return float(np.linalg.norm(arr, 2))
    return float(thin_svd(arr, method=method).singular_values[0])


def spectral_radius(a, method: str = "lapack") -> float:
    """max |lambda_i| of a symmetric matrix; rejects asymmetric input."""
    arr = check_symmetric(a)
    if method == "lapack":
        w = np.linalg.eigvalsh(0.5 * (arr + arr.T))
    else:
        w = sym_eig(arr, method=method).eigenvalues
    return float(np.max(np.abs(w)))


def matrix_norms(a, method: str = "jacobi") -> MatrixNorms:
    arr = as_matrix(a)
    op = float(thin_svd(arr, method=method).singular_values[0])
    fro = float(np.sqrt(np.sum(arr * arr)))
    rho = None
    if arr.shape[0] == arr.shape[1] and max_asymmetry(arr) <= ASYMMETRY_TOL:
        rho = spectral_radius(arr, method=method)
    return MatrixNorms(op, fro, rho)
