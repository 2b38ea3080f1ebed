"""Uniform tangent-coordinate clouds and their embeddings.

A cloud for ``(master_seed, grid_index, trial_index)`` is drawn once at
unit half-width and scaled by ``nu``, and its first ``K`` rows do not depend
on the total size.  Sweeps therefore reuse the same random numbers across
``nu`` steps and nested ``K`` values.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .manifold import EmbeddingSpec, normal_part
from .rng import CLOUD, make_rng


@dataclass(frozen=True)
class SampleCloud:
    coords: np.ndarray  # (K, m), entries in [-nu, nu]
    nu: float
    master_seed: int
    trial_index: int
    grid_index: tuple[int, ...] = ()

    @property
    def K(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]

    def prefix(self, k: int) -> SampleCloud:
        if not 1 <= k <= self.K:
            raise ValueError(f"prefix size must be in [1, {self.K}]")
        return SampleCloud(self.coords[:k], self.nu, self.master_seed, self.trial_index, self.grid_index)

    def scaled(self, nu: float) -> SampleCloud:
        if nu < 0 or self.nu == 0:
            raise ValueError("can only rescale a cloud of positive width to a non-negative width")
        return SampleCloud(self.coords * (nu / self.nu), nu, self.master_seed, self.trial_index, self.grid_index)


def cloud_key(master_seed: int, trial_index: int, grid_index: int | Sequence[int] = ()) -> tuple[int, ...]:
    grid = (grid_index,) if isinstance(grid_index, (int, np.integer)) else tuple(grid_index)
    return (int(master_seed), *(int(g) for g in grid), int(trial_index), CLOUD)


def sample_cloud(m: int, nu: float, K: int, master_seed: int, trial_index: int = 0,
                 grid_index: int | Sequence[int] = ()) -> SampleCloud:
    """K i.i.d. points uniform on [-nu, nu]^m (53-bit uniforms mapped by nu*(2u-1))."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    if not nu >= 0:
        raise ValueError("nu must be non-negative")
    rng = make_rng(cloud_key(master_seed, trial_index, grid_index))
    coords = nu * (2.0 * rng.random((K, m)) - 1.0)
    grid = (grid_index,) if isinstance(grid_index, (int, np.integer)) else tuple(grid_index)
    return SampleCloud(coords, float(nu), int(master_seed), int(trial_index), grid)


def embed_coords(spec: EmbeddingSpec, coords: np.ndarray) -> np.ndarray:
    """n x K data matrix with columns [x_i; f(x_i)]."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != spec.m:
        raise ValueError(f"cloud dimension {coords.shape[-1]} does not match m={spec.m}")
    out = np.empty((spec.n, coords.shape[0]))
    out[:spec.m] = coords.T
    out[spec.m:] = normal_part(spec, coords).T
    return out


def embed_cloud(spec: EmbeddingSpec, cloud: SampleCloud) -> np.ndarray:
    return embed_coords(spec, cloud.coords)


def write_clouds_csv(clouds: Iterable[SampleCloud], out=None) -> str | None:
    """Rows ``trial,i,x_1..x_m``; returns the text when ``out`` is None."""
    clouds = list(clouds)
    if not clouds:
        raise ValueError("no clouds to write")
    m = clouds[0].m
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "i"] + [f"x_{j + 1}" for j in range(m)])
    for c in clouds:
        for i, row in enumerate(c.coords):
            w.writerow([c.trial_index, i] + [repr(float(v)) for v in row])
    return buf.getvalue() if out is None else None
