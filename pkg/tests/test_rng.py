"""Counter-based stream determinism and exact-sampler distribution checks."""

import numpy as np
import pytest

from conftest import poisson_chi2_pvalue
from radnoise.errors import DomainError
from radnoise.rng import RandomStream, derive_key, poisson_at_slots, sample_poisson, standard_normals


def test_derive_key_is_stable_and_injective_on_parts():
    assert derive_key(1, "a") == derive_key(1, "a")
    assert derive_key(1, "a") != derive_key(1, "b")
    assert derive_key(1, "ab") != derive_key(1, "a", "b")
    assert derive_key(1, 2.0) != derive_key(1, 2)


def test_uniforms_are_pure_functions_of_slot_and_draw():
    stream = RandomStream(derive_key(7))
    slots = np.arange(100, dtype=np.uint64)
    first = stream.uniforms(slots, 0)
    again = stream.uniforms(slots, 0)
    np.testing.assert_array_equal(first, again)
    # shuffled slot order yields the same values per slot
    perm = np.random.default_rng(0).permutation(100)
    shuffled = stream.uniforms(slots[perm], 0)
    np.testing.assert_array_equal(shuffled, first[perm])
    # draws and keys decorrelate
    assert not np.array_equal(first, stream.uniforms(slots, 1))
    assert not np.array_equal(first, RandomStream(derive_key(8)).uniforms(slots, 0))


def test_uniforms_live_in_open_unit_interval_and_look_uniform():
    stream = RandomStream(derive_key(3))
    u = stream.uniforms(np.arange(200_000, dtype=np.uint64), 0)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 3.0 * (1.0 / np.sqrt(12 * u.size))
    # crude equidistribution: 10 bins within 5 sigma each
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    expected = u.size / 10
    assert np.abs(hist - expected).max() < 5 * np.sqrt(expected)


def test_standard_normals_moments():
    stream = RandomStream(derive_key(11))
    z = standard_normals(stream, np.arange(400_000, dtype=np.uint64))
    n = z.size
    assert abs(z.mean()) < 3.0 / np.sqrt(n)
    assert abs(z.std(ddof=1) - 1.0) < 0.01


def test_sample_poisson_zero_mean_is_always_zero():
    stream = RandomStream(derive_key(1))
    assert sample_poisson(0.0, stream) == 0
    assert int(sample_poisson(0.0, stream, size=1000).sum()) == 0


def test_sample_poisson_rejects_bad_mean():
    stream = RandomStream(derive_key(1))
    with pytest.raises(DomainError):
        sample_poisson(-1.0, stream)
    with pytest.raises(DomainError):
        sample_poisson(float("nan"), stream)


def test_sample_poisson_monte_carlo_moments():
    # lam = 500, 1e6 draws: CLT bound on the mean, 2% on the variance
    stream = RandomStream(derive_key(2024))
    draws = sample_poisson(500.0, stream, size=1_000_000)
    mean = draws.mean()
    assert abs(mean - 500.0) <= 3.0 * np.sqrt(500.0 / 1_000_000)
    var = draws.var(ddof=1)
    assert abs(var / 500.0 - 1.0) <= 0.02


@pytest.mark.parametrize("lam", [0.5, 5.0, 50.0, 500.0])
def test_sample_poisson_chi_square_exactness(lam):
    # covers both sampler branches (inversion < 10 <= rejection)
    stream = RandomStream(derive_key(99, lam))
    draws = sample_poisson(lam, stream, size=100_000)
    assert poisson_chi2_pvalue(draws, lam) > 0.001


def test_poisson_at_slots_is_slot_stationary():
    stream = RandomStream(derive_key(5))
    lam = np.full(1000, 7.0)
    slots = np.arange(1000, dtype=np.uint64)
    a = poisson_at_slots(stream, lam, slots)
    b = poisson_at_slots(stream, lam[::2], slots[::2])
    np.testing.assert_array_equal(a[::2], b)


def test_substreams_are_independent():
    base = RandomStream(derive_key(17))
    a = base.substream("one").uniforms(np.arange(100_000, dtype=np.uint64), 0)
    b = base.substream("two").uniforms(np.arange(100_000, dtype=np.uint64), 0)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 0.01
