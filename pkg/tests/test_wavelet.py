import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavetok.wavelet import FAMILIES, Subbands, dwt2_level, idwt2_level, kernels_1d, kernels_2d


def brute_force_dwt(plane, name):
    """Direct periodic correlation of each 2D kernel anchored at (2i, 2j)."""
    plane = np.asarray(plane, dtype=np.float64)
    n = plane.shape[0]
    out = []
    for k in kernels_2d(name):
        sub = np.zeros((n // 2, n // 2))
        for i in range(n // 2):
            for j in range(n // 2):
                for a in range(k.shape[0]):
                    for b in range(k.shape[1]):
                        sub[i, j] += k[a, b] * plane[(2 * i + a) % n, (2 * j + b) % n]
        out.append(sub)
    return out


def test_db1_kernels():
    lo, hi = kernels_1d("db1")
    assert lo == pytest.approx([0.70710678, 0.70710678], abs=1e-8)
    assert hi == pytest.approx([0.70710678, -0.70710678], abs=1e-8)


def test_coif1_rounds_to_published_values():
    lo, hi = kernels_1d("coif1")
    assert np.round(lo, 3).tolist() == [-0.016, -0.073, 0.385, 0.853, 0.338, -0.073]
    assert np.round(hi, 3).tolist() == [0.073, 0.338, -0.853, 0.385, 0.073, -0.016]


@pytest.mark.parametrize("name", FAMILIES)
def test_kernel_orthonormality(name):
    lo, hi = kernels_1d(name)
    assert np.linalg.norm(lo) == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.norm(hi) == pytest.approx(1.0, abs=1e-6)
    assert abs(lo @ hi) < 1e-6
    assert abs(hi.sum()) < 1e-6
    # even shifts are orthogonal too
    for s in range(2, len(lo), 2):
        assert abs(lo[s:] @ lo[:-s]) < 1e-12
        assert abs(lo[s:] @ hi[:-s]) < 1e-12


def test_unknown_family():
    with pytest.raises(ValueError, match="unknown"):
        kernels_1d("db9")
    with pytest.raises(ValueError):
        kernels_2d("db9")


def test_db1_2d_kernels():
    ll, lh, hl, hh = kernels_2d("db1")
    assert ll == pytest.approx(np.full((2, 2), 0.5))
    assert hh == pytest.approx(np.array([[0.5, -0.5], [-0.5, 0.5]]))
    assert lh == pytest.approx(np.array([[0.5, -0.5], [0.5, -0.5]]))
    assert hl == pytest.approx(np.array([[0.5, 0.5], [-0.5, -0.5]]))


@pytest.mark.parametrize("name", FAMILIES)
def test_2d_kernels_unit_norm(name):
    for k in kernels_2d(name):
        assert np.linalg.norm(k) == pytest.approx(1.0, abs=1e-6)


def test_haar_2x2_arithmetic():
    a, b, c, d = 0.1, 0.7, 0.4, 0.9
    s = dwt2_level([[a, b], [c, d]], "db1")
    assert s.approx[0, 0] == pytest.approx((a + b + c + d) / 2, abs=1e-6)
    assert s.h[0, 0] == pytest.approx((a - b + c - d) / 2, abs=1e-6)
    assert s.v[0, 0] == pytest.approx((a + b - c - d) / 2, abs=1e-6)
    assert s.d[0, 0] == pytest.approx((a - b - c + d) / 2, abs=1e-6)


@pytest.mark.parametrize("name,tol", [("db1", 1e-7), ("coif1", 1e-5)])
def test_constant_plane(name, tol):
    s = dwt2_level(np.full((16, 16), 0.37), name)
    assert s.approx == pytest.approx(np.full((8, 8), 2 * 0.37), abs=1e-5)
    for det in s.details:
        assert np.abs(det).max() <= tol


def test_constant_inverse():
    c = 0.42
    half = np.zeros((4, 4), np.float32)
    out = idwt2_level(Subbands(np.full((4, 4), 2 * c, np.float32), half, half, half), "db1")
    assert out == pytest.approx(np.full((8, 8), c), abs=1e-6)


@pytest.mark.parametrize("name", FAMILIES)
@pytest.mark.parametrize("n", [6, 8, 12])
def test_matches_brute_force(name, n):
    if n < len(kernels_1d(name)[0]):
        pytest.skip("plane smaller than kernel")
    x = np.random.default_rng(n).standard_normal((n, n)).astype(np.float32)
    s = dwt2_level(x, name)
    for got, want in zip((s.approx, s.h, s.v, s.d), brute_force_dwt(x, name)):
        assert np.abs(got - want).max() < 1e-5


def test_haar_round_trip_exact():
    x = np.random.default_rng(1).random((32, 32), dtype=np.float32)
    assert np.abs(idwt2_level(dwt2_level(x, "db1"), "db1") - x).max() <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FAMILIES), st.integers(4, 16).map(lambda k: 2 * k), st.integers(0, 2**31))
def test_perfect_reconstruction_and_parseval(name, n, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, (n, n)).astype(np.float32)
    s = dwt2_level(x, name)
    assert np.abs(idwt2_level(s, name) - x).max() <= 1e-5
    energy = sum(float(np.sum(b.astype(np.float64) ** 2)) for b in (s.approx, s.h, s.v, s.d))
    assert energy == pytest.approx(float(np.sum(x.astype(np.float64) ** 2)), rel=1e-4)


def test_input_validation():
    with pytest.raises(ValueError, match="even"):
        dwt2_level(np.zeros((7, 7)), "db1")
    with pytest.raises(ValueError, match="smaller"):
        dwt2_level(np.zeros((4, 4)), "coif1")
    with pytest.raises(ValueError):
        Subbands(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((3, 3)), np.zeros((2, 2)))
