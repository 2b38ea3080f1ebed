"""Closed-form sampling-width, sample-count and angle bounds.

Notation: m intrinsic and n ambient dimension, ``kmax`` the largest absolute
principal curvature, ``nu`` the half-width of the tangent sampling cube and
``cs`` the cubic deviation constant of a smooth embedding (0 for quadratic
germs).  ``R`` counts the effective correlated normal directions: n - m
when the normal correlation matrix D is dense, 1 when it is diagonal.
Matrices whose structure sits in between (sparse D) fall between the two
regimes and are not modelled separately.  Logarithms are natural.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .manifold import EmbeddingSpec, quadratic_part
from .rng import SeedLike, make_rng

STRUCTURES = ("dense", "diagonal")
S3_SHRINK = 0.99


def correlation_r(structure: str, m: int, n: int) -> int:
    if structure == "dense":
        return n - m
    if structure == "diagonal":
        return 1
    raise ValueError(f"unknown correlation structure {structure!r}; expected one of {STRUCTURES}")


def _check_dims(m: int, n: int) -> None:
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")


def l_const(m: int, kmax: float) -> float:
    """L = m (5m + 4) kmax^2 / 180, the scale of every entry of D divided by nu^4."""
    return m * (5 * m + 4) * kmax * kmax / 180.0


def expected_norm4(m: int, nu: float) -> float:
    """E ||x||^4 for x uniform on [-nu, nu]^m."""
    return m * (5 * m + 4) * nu ** 4 / 45.0


def d_entry_bound(m: int, nu: float, kmax: float) -> float:
    return l_const(m, kmax) * nu ** 4


def nu_bound_quad(m: int, n: int, kmax: float, structure: str = "dense") -> float:
    """Largest admissible width for quadratic germs, via the explicit radical."""
    _check_dims(m, n)
    if not kmax > 0:
        raise ValueError("kmax must be positive (a flat germ admits any width)")
    r = correlation_r(structure, m, n)
    return math.sqrt(60.0 / (m * r * (5 * m + 4) * kmax * kmax))


def nu_bound_quad_rl(m: int, n: int, kmax: float, structure: str = "dense") -> float:
    """Same bound written as 1 / sqrt(3 R L)."""
    _check_dims(m, n)
    if not kmax > 0:
        raise ValueError("kmax must be positive (a flat germ admits any width)")
    return 1.0 / math.sqrt(3.0 * correlation_r(structure, m, n) * l_const(m, kmax))


def ambient_width_estimate(nu: float, n: int, m: int) -> float:
    """Heuristic order of the ambient-space radius covered by a tangent width nu.

    nu * sqrt(n / m); an order-of-magnitude guide only, not a bound.
    """
    if m > n or m < 1:
        raise ValueError("need 1 <= m <= n")
    return nu * math.sqrt(n / m)


def expected_quadratic_gram(spec: EmbeddingSpec, nu: float, mc_samples: int = 100_000,
                            seed: SeedLike = 0) -> tuple[np.ndarray, float]:
    """Monte-Carlo estimate of D_lk = E[q_l(x) q_k(x)] and its spectral radius."""
    if mc_samples < 1000:
        raise ValueError("mc_samples must be >= 1000")
    rng = make_rng(seed)
    L = spec.n - spec.m
    d = np.zeros((L, L))
    done = 0
    chunk = max(1000, 4_000_000 // max(L, 1))
    while done < mc_samples:
        k = min(chunk, mc_samples - done)
        x = nu * (2.0 * rng.random((k, spec.m)) - 1.0)
        q = quadratic_part(spec, x)
        d += q.T @ q
        done += k
    d /= mc_samples
    rho = float(np.max(np.abs(np.linalg.eigvalsh(d)))) if L else 0.0
    return d, rho


@dataclass(frozen=True)
class BoundParams:
    m: int
    n: int
    kmax: float
    nu: float
    cs: float = 0.0
    s1: float = 0.5
    s2: float = 2 * math.e
    s3: float | None = None
    p1: float = 0.01
    p2: float = 0.01
    p3: float = 0.01
    tau: float = 0.1
    structure: str = "dense"

    def __post_init__(self):
        _check_dims(self.m, self.n)
        correlation_r(self.structure, self.m, self.n)
        if not self.kmax > 0:
            raise ValueError("kmax must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.cs < 0:
            raise ValueError("cs must be non-negative")
        if not 0 < self.s1 < 1:
            raise ValueError("s1 must lie in (0, 1)")
        if not self.s2 > math.e:
            raise ValueError("s2 must exceed e (log(s2/e) must be positive)")
        if self.s3 is not None and not self.s3 > 0:
            raise ValueError("s3 must be positive")
        for name in ("p1", "p2", "p3", "tau"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def r(self) -> int:
        return correlation_r(self.structure, self.m, self.n)

    @property
    def rl(self) -> float:
        return self.r * l_const(self.m, self.kmax)

    def with_(self, **changes) -> BoundParams:
        return BoundParams(**{**asdict(self), **changes})


def sample_constants(p: BoundParams) -> dict[str, float]:
    m, n, k, nu = p.m, p.n, p.kmax, p.nu
    return {
        "L": l_const(m, k),
        "R_M": m + 0.25 * (n - m) * m * m * nu * nu * k * k,
        "R_D": 0.25 * (n - m) * m * m * k * k,
        "R_sigma": m * m * k * k / 12.0 * max(n - m, p.r * (5 * m + 4) / 15.0),
        "R_B": 0.5 * m ** 1.5 * math.sqrt(n - m) * k,
    }


@dataclass(frozen=True)
class KBounds:
    k1: float
    k2: float
    k3: float
    k_bound: float

    @property
    def k_ceil(self) -> int:
        return math.ceil(self.k_bound)


def k_bounds(p: BoundParams, s3: float | None = None) -> KBounds:
    """Sample counts above which the three spectral events hold jointly w.p. >= 1 - p1 - p2 - p3."""
    s3 = p.s3 if s3 is None else s3
    if s3 is None or not s3 > 0:
        raise ValueError("k_bounds needs a positive s3")
    c = sample_constants(p)
    m, n, nu = p.m, p.n, p.nu
    k1 = 6.0 * c["R_M"] / (1.0 - p.s1) ** 2 * math.log((n - m + 1) / p.p1)
    k2 = c["R_D"] / (p.s2 * p.rl) * math.log((n - m) / p.p2) / math.log(p.s2 / math.e)
    k3 = (nu ** 6 * c["R_sigma"] + c["R_B"] * nu ** 3 * s3 / 3.0) / (s3 * s3 / 2.0) * math.log(n / p.p3)
    return KBounds(k1, k2, k3, max(k1, k2, k3))


@dataclass(frozen=True)
class SmoothTerms:
    delta_nu: float
    b1_fbound: float
    d1_fbound: float
    beta2: float
    beta3: float
    beta4: float
    alpha: float
    nu_bound_smooth: float
    sigma_inf: float
    sigma_f: float


def _inv_root(x: float, power: float) -> float:
    return math.inf if x == 0 else x ** (-1.0 / power)


def smooth_width_terms(p: BoundParams) -> tuple[float, float, float, float, float]:
    """(beta2, beta3, beta4, alpha, nu_bound_smooth); independent of nu."""
    m, n, cs, k = p.m, p.n, p.cs, p.kmax
    beta2 = 4.0 * cs * m * m * math.sqrt(n - m)
    beta3 = 2.0 * (n - m) * cs * m ** 2.5 * k
    beta4 = 2.0 * (n - m) * m ** 3 * cs * cs
    alpha = min(_inv_root(3.0 * (beta2 + p.rl), 2), _inv_root(3.0 * beta3, 3), _inv_root(3.0 * beta4, 4))
    nu_s = math.sqrt(p.s1 / (3.0 * ((beta2 + p.s2 * p.rl) + beta3 * alpha + beta4 * alpha * alpha)))
    return beta2, beta3, beta4, alpha, nu_s


def additive_terms(p: BoundParams) -> tuple[float, float, float]:
    """(delta(nu), ||B1||_F bound, ||D1||_F bound) from the cubic remainder."""
    m, n, cs, k, nu = p.m, p.n, p.cs, p.kmax, p.nu
    delta = cs * m ** 1.5 * nu ** 3
    b1 = math.sqrt(m * (n - m)) * cs * m ** 1.5 * nu ** 4
    d1 = (n - m) * cs * m ** 2.5 * nu ** 5 * (cs * math.sqrt(m) * nu + k)
    return delta, b1, d1


def sigma_inf(p: BoundParams) -> float:
    """Large-K bias term; needs only the K = infinity denominator to be positive."""
    _, b1, d1 = additive_terms(p)
    den = p.nu ** 2 / 3.0 - p.rl * p.nu ** 4 - 2.0 * (b1 + d1)
    if den <= 0:
        raise ValueError("width too large for smooth regime: nu^2/3 - RL nu^4 - 2(B1 + D1) <= 0")
    return b1 / den


def smooth_terms(p: BoundParams) -> SmoothTerms:
    nu = p.nu
    beta2, beta3, beta4, alpha, nu_s = smooth_width_terms(p)
    delta, b1, d1 = additive_terms(p)
    den_inf = nu * nu / 3.0 - p.rl * nu ** 4 - 2.0 * (b1 + d1)
    den_f = (p.s1 * nu * nu / 3.0 - p.s2 * p.rl * nu ** 4) - 2.0 * (b1 + d1)
    if den_inf <= 0:
        raise ValueError("width too large for smooth regime: nu^2/3 - RL nu^4 - 2(B1 + D1) <= 0")
    if den_f <= 0:
        raise ValueError("width too large for smooth regime: (s1 nu^2/3 - s2 RL nu^4) - 2(B1 + D1) <= 0")
    return SmoothTerms(delta, b1, d1, beta2, beta3, beta4, alpha, nu_s, b1 / den_inf, b1 / den_f)


def s3_bound(p: BoundParams, case: str = "quad") -> float:
    """Largest admissible operator-norm threshold for the off-diagonal block."""
    nu = p.nu
    gap = p.s1 * nu * nu / 3.0 - p.s2 * p.rl * nu ** 4
    if case == "quad":
        limit = math.sqrt(p.s1 / p.s2) * nu_bound_quad(p.m, p.n, p.kmax, p.structure)
        if not nu < limit:
            raise ValueError(f"precondition violated: nu < sqrt(s1/s2) * nu_bound_quad ({nu:.6g} >= {limit:.6g})")
        return gap * p.tau / math.sqrt(p.m)
    if case == "smooth":
        nu_s = smooth_width_terms(p)[4]
        if not nu < nu_s:
            raise ValueError(f"precondition violated: nu < nu_bound_smooth ({nu:.6g} >= {nu_s:.6g})")
        t = smooth_terms(p)
        return (gap - 2.0 * (t.b1_fbound + t.d1_fbound)) * math.sqrt(p.tau ** 2 / p.m + t.sigma_f ** 2) - t.b1_fbound
    raise ValueError(f"unknown case {case!r}; expected 'quad' or 'smooth'")


def angle_bound(tau: float, m: int, sigma_f: float = 0.0) -> float:
    """arccos sqrt((1 - tau^2 - m sigma_f^2)^m), in radians."""
    if tau < 0 or sigma_f < 0:
        raise ValueError("tau and sigma_f must be non-negative")
    loss = tau * tau + m * sigma_f * sigma_f
    if not loss < 1:
        raise ValueError("need tau^2 + m sigma_f^2 < 1")
    # arccos(sqrt(c)) written as atan2(sqrt(1-c), sqrt(c)) for accuracy near 0
    logc = m * math.log1p(-loss)
    return math.atan2(math.sqrt(-math.expm1(logc)), math.sqrt(math.exp(logc))) + 0.0


@dataclass(frozen=True)
class BoundReport:
    L: float
    R_M: float
    R_D: float
    R_sigma: float
    R_B: float
    nu_bound_quad: float
    nu_bound_smooth: float
    delta_nu: float
    b1_fbound: float
    d1_fbound: float
    beta2: float
    beta3: float
    beta4: float
    alpha: float
    sigma_inf: float
    sigma_f: float
    s3_bound_quad: float
    s3_bound_smooth: float
    k1: float
    k2: float
    k3: float
    k_bound: float
    angle_bound_quad: float
    angle_bound_smooth: float
    params: BoundParams | None = field(default=None, compare=False)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "params"]

    def values(self) -> list[float]:
        return [getattr(self, name) for name in self.field_names()]

    def csv_header(self) -> str:
        return ",".join(self.field_names())

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in self.values())

    def to_dict(self) -> dict:
        out: dict = {name: _json_float(getattr(self, name)) for name in self.field_names()}
        if self.params is not None:
            out["params"] = asdict(self.params)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _json_float(v: float):
    return v if math.isfinite(v) else None


def _try(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return math.nan


def bound_report(p: BoundParams) -> BoundReport:
    """Evaluate everything at one parameter point; NaN where a precondition fails.

    When ``p.s3`` is unset the sample counts use s3 = 0.99 * (smooth s3 bound
    if cs > 0 else quadratic s3 bound).
    """
    c = sample_constants(p)
    nu_q = nu_bound_quad(p.m, p.n, p.kmax, p.structure)
    beta2, beta3, beta4, alpha, nu_s = smooth_width_terms(p)
    st = _try(smooth_terms, p)
    nan = math.nan
    delta, b1, d1, s_inf, s_f = (nan,) * 5 if isinstance(st, float) else (
        st.delta_nu, st.b1_fbound, st.d1_fbound, st.sigma_inf, st.sigma_f)
    if isinstance(st, float):
        delta, b1, d1 = additive_terms(p)
        s_inf = _try(sigma_inf, p)
    s3q = _try(s3_bound, p, "quad")
    s3s = _try(s3_bound, p, "smooth")
    s3 = p.s3 if p.s3 is not None else S3_SHRINK * (s3s if p.cs > 0 else s3q)
    kb = _try(k_bounds, p, s3) if math.isfinite(s3) else nan
    k1 = 6.0 * c["R_M"] / (1.0 - p.s1) ** 2 * math.log((p.n - p.m + 1) / p.p1)
    k2 = c["R_D"] / (p.s2 * p.rl) * math.log((p.n - p.m) / p.p2) / math.log(p.s2 / math.e)
    k3 = nan if isinstance(kb, float) else kb.k3
    k_all = nan if isinstance(kb, float) else kb.k_bound
    ang_q = _try(angle_bound, p.tau, p.m, 0.0)
    ang_s = _try(angle_bound, p.tau, p.m, s_f) if math.isfinite(s_f) else nan
    return BoundReport(c["L"], c["R_M"], c["R_D"], c["R_sigma"], c["R_B"], nu_q, nu_s, delta, b1, d1,
                       beta2, beta3, beta4, alpha, s_inf, s_f, s3q, s3s, k1, k2, k3, k_all,
                       ang_q, ang_s, params=p)
