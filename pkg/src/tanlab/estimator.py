"""Local PCA tangent estimate and subspace comparison.

PCA here is taken about the reference point (no mean subtraction): the
estimate is the top-m eigenspace of ``M = X X^T / K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .numerics import _complete_basis, as_matrix, thin_svd

ORTHONORMAL_TOL = 1e-8
DEGENERATE_GAP = 1e-12
METHODS = ("lapack", "svd", "jacobi")


@dataclass(frozen=True)
class TangentEstimate:
    basis: np.ndarray  # (n, m) orthonormal columns
    eigenvalues: np.ndarray  # descending; the full spectrum of M unless truncated
    u2_frobenius: float
    angle: float  # radians
    projection_distance: float
    degenerate_gap: bool

    @property
    def angle_degrees(self) -> float:
        return float(np.degrees(self.angle))


def _top_eig_lapack(x: np.ndarray, m: int, full_spectrum: bool) -> tuple[np.ndarray, np.ndarray]:
    n, K = x.shape
    if K >= n:
        M = (x @ x.T) / K
        if full_spectrum or m + 1 >= n:
            w, v = np.linalg.eigh(M)
        else:
            w, v = scipy.linalg.eigh(M, subset_by_index=(n - m - 1, n - 1), check_finite=False)
        return w[::-1], v[:, ::-1][:, :m]
    # fewer samples than ambient dimensions: work with the K x K Gram matrix
    w, v = np.linalg.eigh((x.T @ x) / K)
    w, v = w[::-1], v[:, ::-1]
    w = np.maximum(w, 0.0)
    top = w[:m]
    keep = top > top[0] * K * np.finfo(float).eps if top[0] > 0 else np.zeros(m, bool)
    u = np.zeros((n, m))
    u[:, keep] = (x @ v[:, :m][:, keep]) / np.sqrt(K * top[keep])
    u = _orthonormalise(u, keep)
    eig = np.concatenate([w, np.zeros(n - K)]) if full_spectrum else w[:m + 1]
    return eig, u


def _orthonormalise(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    out = u.copy()
    if keep.any():
        q, r = np.linalg.qr(u[:, keep])
        out[:, keep] = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return _complete_basis(out, keep)


def _top_eig_svd(x: np.ndarray, m: int, method: str) -> tuple[np.ndarray, np.ndarray]:
    n, K = x.shape
    svd = thin_svd(x / np.sqrt(K), method="jacobi" if method == "jacobi" else "lapack")
    w = svd.singular_values ** 2
    if w.size < n:
        w = np.concatenate([w, np.zeros(n - w.size)])
    return w, svd.left_vectors[:, :m]


def local_pca(x, m: int, method: str = "lapack", full_spectrum: bool = True,
              reference=None) -> TangentEstimate:
    """Top-m eigenspace of X X^T / K for the n x K data matrix ``x``.

    ``method``: ``"lapack"`` (eigh of M, or of the K x K Gram matrix when
    K < n), ``"svd"`` (LAPACK thin SVD of X) or ``"jacobi"`` (in-house
    one-sided Jacobi SVD of X).  ``reference`` is the true tangent frame,
    defaulting to the first m coordinate axes.
    """
    arr = as_matrix(x)
    n, K = arr.shape
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    if K < m:
        raise ValueError(f"need at least m={m} samples, got K={K}")
    if method == "lapack":
        w, u = _top_eig_lapack(arr, m, full_spectrum)
    elif method in ("svd", "jacobi"):
        w, u = _top_eig_svd(arr, m, method)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    scale = max(float(w[0]), 0.0)
    gap = float(w[m - 1] - w[m]) if w.size > m else float(w[m - 1])
    degenerate = gap < DEGENERATE_GAP * scale or scale == 0.0
    e = canonical_frame(n, m) if reference is None else reference
    u2 = float(np.linalg.norm(u[m:])) if reference is None else float(np.linalg.norm(u - e @ (e.T @ u)))
    return TangentEstimate(u, w, u2, subspace_angle(u, e), projection_distance(u, e), degenerate)


def estimate_angle(x, m: int) -> float:
    """Angle (radians) between the PCA estimate and the first m axes; fast path."""
    arr = np.asarray(x, dtype=np.float64)
    _, u = _top_eig_lapack(arr, m, full_spectrum=False)
    return _angle_from_blocks(u[:m], u[m:])


def canonical_frame(n: int, m: int) -> np.ndarray:
    return np.eye(n, m)


def _check_frame(u, name: str) -> np.ndarray:
    arr = as_matrix(u)
    err = np.linalg.norm(arr.T @ arr - np.eye(arr.shape[1]))
    if err > ORTHONORMAL_TOL:
        raise ValueError(f"{name} is not column-orthonormal (error {err:.2e})")
    return arr


def _angle_from_blocks(overlap: np.ndarray, residual: np.ndarray) -> float:
    """Angle from the overlap E^T U and the residual (I - E E^T) U.

    cos^2 theta is the product of cos^2 of the principal angles.  Each factor
    is taken from whichever of cosines or sines is better conditioned, and
    the total is assembled in log space so that tiny angles keep full
    relative precision.
    """
    m = overlap.shape[1]
    cos = np.clip(np.linalg.svd(overlap, compute_uv=False), 0.0, 1.0)  # descending
    sin = np.linalg.svd(residual, compute_uv=False)[:m] if residual.size else np.zeros(m)
    sin = np.clip(np.concatenate([sin, np.zeros(m - sin.size)]), 0.0, 1.0)
    sin = np.sort(sin)  # ascending, paired with descending cosines
    cos2 = cos * cos
    with np.errstate(divide="ignore"):
        logcos2 = np.where(cos2 < 0.5, np.log(cos2), np.log1p(-sin * sin))
    total = float(np.sum(logcos2))
    c2 = np.exp(total)
    s2 = -np.expm1(total)
    return float(np.arctan2(np.sqrt(s2), np.sqrt(c2))) + 0.0  # no -0.0


def subspace_angle(u, e) -> float:
    """theta with cos^2 theta = det(W^T W), W = E^T U, in radians within [0, pi/2]."""
    u = _check_frame(u, "U")
    e = _check_frame(e, "E")
    if u.shape != e.shape:
        raise ValueError(f"frames must have equal shape, got {u.shape} and {e.shape}")
    overlap = e.T @ u
    return _angle_from_blocks(overlap, u - e @ overlap)


def projection_distance(u, e) -> float:
    """||E E^T - U U^T||_F, formed explicitly."""
    u = _check_frame(u, "U")
    e = _check_frame(e, "E")
    if u.shape != e.shape:
        raise ValueError(f"frames must have equal shape, got {u.shape} and {e.shape}")
    return float(np.linalg.norm(e @ e.T - u @ u.T))


def prefix_angles(x, m: int, k_list) -> np.ndarray:
    """Angles (radians) for the leading-column prefixes x[:, :K], K in ``k_list``.

    The scatter matrix is accumulated incrementally over the sorted prefix
    sizes, so a whole K grid costs about one pass over the data.
    """
    arr = np.asarray(x, dtype=np.float64)
    n = arr.shape[0]
    ks = np.asarray(k_list, dtype=int)
    order = np.argsort(ks, kind="stable")
    out = np.empty(ks.size)
    scatter = np.zeros((n, n))
    done = 0
    for idx in order:
        K = int(ks[idx])
        if K < m:
            raise ValueError(f"need at least m={m} samples, got K={K}")
        if K < n:
            out[idx] = estimate_angle(arr[:, :K], m)
            continue
        if K > done:
            block = arr[:, done:K]
            scatter += block @ block.T
            done = K
        w, v = scipy.linalg.eigh(scatter / K, subset_by_index=(n - m, n - 1), check_finite=False)
        u = v[:, ::-1]
        out[idx] = _angle_from_blocks(u[:m], u[m:])
    return out


class FactoredPCA:
    """Local PCA for data of the form X = G @ Phi with G = blockdiag(I_m, C).

    With G = Q R (reduced QR) the top eigenvectors of X X^T / K are Q w, w the
    top eigenvectors of R (Phi Phi^T / K) R^T, so the n x n problem shrinks
    to the width of Phi.  Exact up to rounding.
    """

    def __init__(self, m: int, coef: np.ndarray):
        coef = np.asarray(coef, dtype=np.float64)
        L, r = coef.shape
        self.m, self.n = m, m + L
        g = np.zeros((self.n, m + r))
        g[:m, :m] = np.eye(m)
        g[m:, m:] = coef
        self.q, self.r = np.linalg.qr(g)

    def top_frame(self, gram: np.ndarray) -> np.ndarray:
        s = self.r @ gram @ self.r.T
        s = 0.5 * (s + s.T)
        w, v = np.linalg.eigh(s)
        return self.q @ v[:, ::-1][:, :self.m]

    def angle(self, gram: np.ndarray) -> float:
        u = self.top_frame(gram)
        return _angle_from_blocks(u[:self.m], u[self.m:])
