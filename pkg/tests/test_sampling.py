import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tanlab.manifold import generate_embedding, normal_part
from tanlab.sampling import cloud_key, embed_cloud, sample_cloud, write_clouds_csv


@given(st.integers(1, 6), st.floats(0, 10), st.integers(1, 300), st.integers(0, 2 ** 31 - 1), st.integers(0, 50))
@settings(max_examples=60, deadline=None)
def test_cloud_in_cube_and_deterministic(m, nu, K, seed, trial):
    a = sample_cloud(m, nu, K, seed, trial)
    assert a.coords.shape == (K, m)
    assert np.all(np.abs(a.coords) <= nu)
    np.testing.assert_array_equal(a.coords, sample_cloud(m, nu, K, seed, trial).coords)


def test_prefix_property():
    big = sample_cloud(3, 0.5, 1000, 7, 2, (1, 4))
    small = sample_cloud(3, 0.5, 100, 7, 2, (1, 4))
    np.testing.assert_array_equal(big.coords[:100], small.coords)
    np.testing.assert_array_equal(big.prefix(100).coords, small.coords)


def test_width_scaling_shares_random_numbers():
    a = sample_cloud(2, 1.0, 50, 3)
    b = sample_cloud(2, 0.25, 50, 3)
    np.testing.assert_allclose(a.coords * 0.25, b.coords, rtol=1e-15)
    np.testing.assert_allclose(a.scaled(0.25).coords, b.coords, rtol=1e-15)


def test_streams_differ_by_trial_and_grid():
    base = sample_cloud(2, 1.0, 20, 3, 0, (0,)).coords
    assert not np.array_equal(base, sample_cloud(2, 1.0, 20, 3, 1, (0,)).coords)
    assert not np.array_equal(base, sample_cloud(2, 1.0, 20, 3, 0, (1,)).coords)
    assert not np.array_equal(base, sample_cloud(2, 1.0, 20, 4, 0, (0,)).coords)
    assert cloud_key(3, 0, 5) == cloud_key(3, 0, (5,))


def test_uniform_moments():
    x = sample_cloud(3, 2.0, 200_000, 1).coords
    np.testing.assert_allclose(x.mean(axis=0), 0, atol=0.02)
    np.testing.assert_allclose((x ** 2).mean(axis=0), 4 / 3, rtol=0.01)


def test_zero_width_and_rejections():
    assert np.all(sample_cloud(2, 0.0, 5, 0).coords == 0)
    with pytest.raises(ValueError):
        sample_cloud(2, -1.0, 5, 0)
    with pytest.raises(ValueError):
        sample_cloud(2, 1.0, 0, 0)
    with pytest.raises(ValueError):
        sample_cloud(2, 1.0, 5, 0).prefix(6)


def test_embed_cloud_layout():
    spec = generate_embedding("smooth2_sin", 3, 8, 4.0, 0)
    cloud = sample_cloud(3, 0.1, 40, 0)
    x = embed_cloud(spec, cloud)
    assert x.shape == (8, 40)
    np.testing.assert_array_equal(x[:3], cloud.coords.T)
    np.testing.assert_array_equal(x[3:], normal_part(spec, cloud.coords).T)
    with pytest.raises(ValueError):
        embed_cloud(spec, sample_cloud(2, 0.1, 4, 0))


def test_csv_round_trip():
    clouds = [sample_cloud(2, 0.3, 4, 9, t) for t in range(2)]
    text = write_clouds_csv(clouds)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["trial", "i", "x_1", "x_2"]
    assert len(rows) == 9
    assert float(rows[6][2]) == clouds[1].coords[1, 0]
    buf = io.StringIO()
    assert write_clouds_csv(clouds, buf) is None and buf.getvalue() == text
