"""Synthetic manifold germs at a reference point.

A point near P is ``[x, f_1(x), ..., f_{n-m}(x)]`` where ``x`` is the tangent
coordinate vector and every normal coordinate ``f_l`` vanishes together
with its gradient at the origin.  Four families are provided:

``quadratic``     f_l = q_l(x) = 1/2 sum_j K_lj <x, v_lj>^2
``smooth1_exp``   f_l = 1 - exp(q_l(x))
``smooth2_sin``   f_l = sin(q_l(x))
``smooth3_poly``  f_l = sum_j (1/2 K_lj x_j^2 + a_lj x_j^3 + b_lj x_j^4 + c_lj x_j^5)

Note that the second-order Taylor part of ``smooth1_exp`` is ``-q_l``, so
its principal curvatures are ``-K_lj``; the remainder used for the
deviation constant is taken against that Taylor part.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .rng import SeedLike, as_key, make_rng

FAMILIES = ("quadratic", "smooth1_exp", "smooth2_sin", "smooth3_poly")
POLY_COEFF_RANGE = (0.0, 10.0)
CS_SAFETY = 1.2
_FULL_GRID_MAX_M = 4
_SOBOL_LOG2 = 17  # 131072 >= 1e5 low-discrepancy points
_RESTARTS = 1000
_ASCENT_ITERS = 60


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CurvatureSpectrum:
    """Principal curvatures ``kappa[l, j]`` and optional eigenvector frames."""

    m: int
    n: int
    kappa: np.ndarray
    rotations: np.ndarray | None = None  # (n-m, m, m), columns v_{l,j}
    kmax: float = field(default=0.0)

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        kappa = _frozen(self.kappa)
        if kappa.shape != (self.n - self.m, self.m):
            raise ValueError(f"kappa must have shape {(self.n - self.m, self.m)}, got {kappa.shape}")
        object.__setattr__(self, "kappa", kappa)
        declared = float(self.kmax) if self.kmax else float(np.max(np.abs(kappa), initial=0.0))
        if np.max(np.abs(kappa), initial=0.0) > declared * (1 + 1e-12):
            raise ValueError("curvature exceeds declared kmax")
        object.__setattr__(self, "kmax", declared)
        if self.rotations is not None:
            rot = _frozen(self.rotations)
            if rot.shape != (self.n - self.m, self.m, self.m):
                raise ValueError("rotations must have shape (n-m, m, m)")
            gram = np.einsum("lij,lik->ljk", rot, rot) - np.eye(self.m)
            if np.max(np.linalg.norm(gram, axis=(1, 2))) > 1e-10 * self.m:
                raise ValueError("rotation matrices are not orthonormal")
            object.__setattr__(self, "rotations", rot)


def generate_spectrum(m: int, n: int, kmax: float, seed: SeedLike, *,
                      force_extreme: bool = False,
                      random_rotations: bool = False) -> CurvatureSpectrum:
    """Row l: magnitudes i.i.d. U[0, kmax]^m, then one fair random sign per row.

    ``force_extreme`` sets one randomly chosen entry to +-kmax (keeping its
    row's sign) so that kmax is attained; ``random_rotations`` draws Haar
    frames V_l instead of the identity.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    rng = make_rng(seed)
    mags = rng.uniform(0.0, kmax, size=(n - m, m)) if kmax > 0 else np.zeros((n - m, m))
    signs = 2.0 * rng.integers(0, 2, size=n - m) - 1.0
    kappa = mags * signs[:, None]
    if force_extreme and kmax > 0:
        l, j = rng.integers(0, n - m), rng.integers(0, m)
        kappa[l, j] = signs[l] * kmax
    rotations = None
    if random_rotations:
        g = rng.standard_normal((n - m, m, m))
        q, r = np.linalg.qr(g)
        rotations = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    return CurvatureSpectrum(m, n, kappa, rotations, kmax=float(kmax))


@dataclass(frozen=True)
class EmbeddingSpec:
    family: str
    spectrum: CurvatureSpectrum
    poly_coeffs: np.ndarray | None = None  # (n-m, m, 3): a, b, c
    seed: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if (self.poly_coeffs is not None) != (self.family == "smooth3_poly"):
            raise ValueError("poly_coeffs must be given exactly for smooth3_poly")
        if self.poly_coeffs is not None:
            coeffs = _frozen(self.poly_coeffs)
            if coeffs.shape != (self.n - self.m, self.m, 3):
                raise ValueError(f"poly_coeffs must have shape {(self.n - self.m, self.m, 3)}")
            lo, hi = POLY_COEFF_RANGE
            if coeffs.min() < lo or coeffs.max() > hi:
                raise ValueError(f"poly_coeffs must lie in [{lo}, {hi}]")
            object.__setattr__(self, "poly_coeffs", coeffs)
            if self.spectrum.rotations is not None:
                raise ValueError("smooth3_poly is axis-aligned; rotations are not allowed")

    @property
    def m(self) -> int:
        return self.spectrum.m

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def kmax(self) -> float:
        return self.spectrum.kmax

    def to_dict(self) -> dict:
        sp = self.spectrum
        return {
            "family": self.family,
            "m": sp.m,
            "n": sp.n,
            "kmax": sp.kmax,
            "kappa": sp.kappa.tolist(),
            "poly_coeffs": None if self.poly_coeffs is None else self.poly_coeffs.tolist(),
            "rotations": None if sp.rotations is None else sp.rotations.tolist(),
            "seed": None if self.seed is None else list(self.seed),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> EmbeddingSpec:
        spectrum = CurvatureSpectrum(int(d["m"]), int(d["n"]), np.asarray(d["kappa"], dtype=float),
                                     None if d.get("rotations") is None else np.asarray(d["rotations"]),
                                     kmax=float(d["kmax"]))
        coeffs = d.get("poly_coeffs")
        seed = d.get("seed")
        return cls(d["family"], spectrum, None if coeffs is None else np.asarray(coeffs, dtype=float),
                   None if seed is None else tuple(int(s) for s in seed))

    @classmethod
    def from_json(cls, text: str) -> EmbeddingSpec:
        return cls.from_dict(json.loads(text))


def generate_embedding(family: str, m: int, n: int, kmax: float, seed: SeedLike, **kwargs) -> EmbeddingSpec:
    """Random embedding of the given family; spectrum and coefficients use separate child streams."""
    key = as_key(seed)
    spectrum = generate_spectrum(m, n, kmax, key + (0,), **kwargs)
    coeffs = None
    if family == "smooth3_poly":
        lo, hi = POLY_COEFF_RANGE
        coeffs = make_rng(key + (1,)).uniform(lo, hi, size=(n - m, m, 3))
    return EmbeddingSpec(family, spectrum, coeffs, seed=key)


def _points(spec: EmbeddingSpec, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    pts = arr.reshape(1, -1) if single else arr
    if pts.ndim != 2 or pts.shape[1] != spec.m:
        raise ValueError(f"tangent vectors must have length m={spec.m}, got shape {arr.shape}")
    return pts, single


def _quadratic(spec: EmbeddingSpec, pts: np.ndarray) -> np.ndarray:
    sp = spec.spectrum
    if sp.rotations is None:
        return 0.5 * (pts * pts) @ sp.kappa.T
    proj = np.einsum("km,lmj->klj", pts, sp.rotations)
    return 0.5 * np.einsum("klj,lj->kl", proj * proj, sp.kappa)


def quadratic_part(spec: EmbeddingSpec, x) -> np.ndarray:
    """q_l(x) for every normal direction; (n-m,) for one point or (K, n-m)."""
    pts, single = _points(spec, x)
    q = _quadratic(spec, pts)
    return q[0] if single else q


def _normal(spec: EmbeddingSpec, pts: np.ndarray) -> np.ndarray:
    if spec.family == "smooth3_poly":
        c = spec.poly_coeffs
        x2 = pts * pts
        x3 = x2 * pts
        return (0.5 * x2 @ spec.spectrum.kappa.T + x3 @ c[:, :, 0].T
                + (x2 * x2) @ c[:, :, 1].T + (x3 * x2) @ c[:, :, 2].T)
    q = _quadratic(spec, pts)
    if spec.family == "quadratic":
        return q
    if spec.family == "smooth1_exp":
        return -np.expm1(q)
    return np.sin(q)


def normal_part(spec: EmbeddingSpec, x) -> np.ndarray:
    pts, single = _points(spec, x)
    f = _normal(spec, pts)
    return f[0] if single else f


def evaluate_embedding(spec: EmbeddingSpec, x) -> np.ndarray:
    """Point(s) in R^n: tangent coordinates followed by the normal coordinates."""
    pts, single = _points(spec, x)
    out = np.hstack([pts, _normal(spec, pts)])
    return out[0] if single else out


def taylor_quadratic(spec: EmbeddingSpec, x) -> np.ndarray:
    """Second-order Taylor part of each f_l at the origin."""
    q = quadratic_part(spec, x)
    return -q if spec.family == "smooth1_exp" else q


def remainder(spec: EmbeddingSpec, x) -> np.ndarray:
    """Higher-order remainder f_l(x) - (Taylor quadratic part)."""
    pts, single = _points(spec, x)
    if spec.family == "quadratic":
        r = np.zeros((pts.shape[0], spec.n - spec.m))
    elif spec.family == "smooth3_poly":
        c = spec.poly_coeffs
        x3 = pts ** 3
        r = x3 @ c[:, :, 0].T + (x3 * pts) @ c[:, :, 1].T + (x3 * pts * pts) @ c[:, :, 2].T
    else:
        q = _quadratic(spec, pts)
        r = -(np.expm1(q) - q) if spec.family == "smooth1_exp" else np.sin(q) - q
    return r[0] if single else r


def _remainder_rowwise(spec: EmbeddingSpec, x: np.ndarray) -> np.ndarray:
    """Remainder of normal l at x[l, p]; x has shape (n-m, P, m)."""
    if spec.family == "smooth3_poly":
        c = spec.poly_coeffs
        x3 = x ** 3
        return np.einsum("lpj,lj->lp", x3, c[:, :, 0]) + np.einsum("lpj,lj->lp", x3 * x, c[:, :, 1]) \
            + np.einsum("lpj,lj->lp", x3 * x * x, c[:, :, 2])
    sp = spec.spectrum
    proj = x if sp.rotations is None else np.einsum("lpm,lmj->lpj", x, sp.rotations)
    q = 0.5 * np.einsum("lpj,lj->lp", proj * proj, sp.kappa)
    return -(np.expm1(q) - q) if spec.family == "smooth1_exp" else np.sin(q) - q


@dataclass(frozen=True)
class DeviationEstimate:
    cs: float
    per_normal: np.ndarray
    grid_resolution: int
    domain_halfwidth: float


def _ratio(r: np.ndarray, norms: np.ndarray, nu: float) -> np.ndarray:
    mask = norms >= 1e-6 * nu
    out = np.zeros_like(r)
    np.divide(np.abs(r), norms ** 3, out=out, where=mask)
    return out


def estimate_cs(spec: EmbeddingSpec, nu: float, grid_points_per_axis: int = 21,
                seed: SeedLike = 0, safety: float = CS_SAFETY) -> DeviationEstimate:
    """Upper estimate of C_s = max_l sup |R_l(x)| / ||x||^3 over [-nu, nu]^m.

    Full tensor grid for m <= 4; otherwise 2^17 scrambled Sobol points plus
    1000 restarts of projected stochastic ascent per normal direction.  The
    empirical maxima are inflated by ``safety``.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if grid_points_per_axis < 3:
        raise ValueError("grid_points_per_axis must be >= 3")
    m, L = spec.m, spec.n - spec.m
    if spec.family == "quadratic":
        return DeviationEstimate(0.0, np.zeros(L), grid_points_per_axis, nu)

    best = np.zeros(L)
    if m <= _FULL_GRID_MAX_M:
        axis = np.linspace(-nu, nu, grid_points_per_axis)
        mesh = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
        resolution = grid_points_per_axis
        for chunk in np.array_split(mesh, max(1, mesh.shape[0] * L // 2_000_000)):
            ratios = _ratio(remainder(spec, chunk), np.linalg.norm(chunk, axis=1)[:, None], nu)
            best = np.maximum(best, ratios.max(axis=0))
    else:
        rng = make_rng(seed)
        sobol = qmc.Sobol(d=m, scramble=True, seed=rng)
        pts = nu * (2.0 * sobol.random_base2(_SOBOL_LOG2) - 1.0)
        resolution = pts.shape[0]
        argbest = np.zeros(L, dtype=np.intp)
        for start in range(0, pts.shape[0], max(1, 2_000_000 // L)):
            chunk = pts[start:start + max(1, 2_000_000 // L)]
            ratios = _ratio(remainder(spec, chunk), np.linalg.norm(chunk, axis=1)[:, None], nu)
            idx = ratios.argmax(axis=0)
            better = ratios[idx, np.arange(L)] > best
            best = np.where(better, ratios[idx, np.arange(L)], best)
            argbest = np.where(better, start + idx, argbest)
        best = np.maximum(best, _local_ascent(spec, nu, pts[argbest], rng))
    return DeviationEstimate(float(safety * best.max(initial=0.0)), safety * best, resolution, nu)


def _local_ascent(spec: EmbeddingSpec, nu: float, seeds: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Projected random-perturbation hill climbing on |R_l(x)| / ||x||^3, per normal."""
    L, m = seeds.shape
    x = rng.uniform(-nu, nu, size=(L, _RESTARTS, m))
    x[:, 0, :] = seeds
    val = _ratio(_remainder_rowwise(spec, x), np.linalg.norm(x, axis=2), nu)
    step = 0.25 * nu
    for it in range(_ASCENT_ITERS):
        trial = np.clip(x + step * rng.standard_normal(x.shape), -nu, nu)
        tval = _ratio(_remainder_rowwise(spec, trial), np.linalg.norm(trial, axis=2), nu)
        up = tval > val
        x = np.where(up[..., None], trial, x)
        val = np.where(up, tval, val)
        if it % 10 == 9:
            step *= 0.5
    return val.max(axis=1)


def envelope_spec(family: str, m: int, kmax: float) -> EmbeddingSpec:
    """Worst-case germ whose C_s bounds that of every random draw of ``family``.

    For the exp/sin families the remainder depends on q_l only and |q_l| is
    largest when every curvature equals kmax, so two normals (+kmax, -kmax)
    cover both signs.  For the polynomial family the remainder does not
    involve the curvatures and is largest with all coefficients at 10.
    """
    kappa = np.vstack([np.full(m, kmax), np.full(m, -kmax)])
    spectrum = CurvatureSpectrum(m, m + 2, kappa, kmax=kmax)
    coeffs = None
    if family == "smooth3_poly":
        coeffs = np.full((2, m, 3), POLY_COEFF_RANGE[1])
    return EmbeddingSpec(family, spectrum, coeffs)


@dataclass(frozen=True)
class PolynomialFeatures:
    """Normal block written as ``coef @ features(x).T`` for polynomial germs.

    ``degrees[i]`` is the homogeneous degree of feature i, so scaling the
    tangent coordinates by nu scales feature i by nu**degrees[i].
    """

    coef: np.ndarray  # (n-m, r)
    degrees: np.ndarray  # (r,)
    kind: str

    def features(self, coords: np.ndarray) -> np.ndarray:
        x = np.asarray(coords, dtype=np.float64)
        if self.kind == "axis":
            return x * x
        if self.kind == "poly":
            x2 = x * x
            return np.hstack([x2, x2 * x, x2 * x2, x2 * x2 * x])
        i, j = np.triu_indices(x.shape[1])
        return x[:, i] * x[:, j]


def polynomial_features(spec: EmbeddingSpec) -> PolynomialFeatures | None:
    """Exact low-rank factor of the normal coordinates, or None for exp/sin germs."""
    sp = spec.spectrum
    m = sp.m
    if spec.family == "smooth3_poly":
        c = spec.poly_coeffs
        coef = np.hstack([0.5 * sp.kappa, c[:, :, 0], c[:, :, 1], c[:, :, 2]])
        return PolynomialFeatures(coef, np.repeat([2, 3, 4, 5], m), "poly")
    if spec.family != "quadratic":
        return None
    if sp.rotations is None:
        return PolynomialFeatures(0.5 * sp.kappa, np.full(m, 2), "axis")
    # q_l = 1/2 x^T H_l x with H_l = V_l diag(kappa_l) V_l^T, in the basis x_i x_j (i <= j)
    h = np.einsum("lij,lj,lkj->lik", sp.rotations, sp.kappa, sp.rotations)
    i, j = np.triu_indices(m)
    coef = np.where(i == j, 0.5, 1.0) * h[:, i, j]
    return PolynomialFeatures(coef, np.full(i.size, 2), "pairs")
