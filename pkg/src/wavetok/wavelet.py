"""Orthonormal 2D wavelet kernels and single-level periodic transforms.

A level maps an ``N x N`` plane to four ``N/2 x N/2`` subbands. Entry
``(i, j)`` of a subband is the correlation of its 2D kernel with the plane
window anchored at ``(2i, 2j)``, wrapping around the plane edges.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_S2 = np.sqrt(2.0)
_S7 = np.sqrt(7.0)

_LOWPASS = {
    "db1": np.array([1.0, 1.0]) / _S2,
    # Coiflet-1 in closed form; rounds to (-0.016, -0.073, 0.385, 0.853, 0.338, -0.073)
    "coif1": np.array(
        [-3.0 + _S7, 1.0 - _S7, 14.0 - 2.0 * _S7, 14.0 + 2.0 * _S7, 5.0 + _S7, 1.0 - _S7]
    ) / (16.0 * _S2),
}

FAMILIES = tuple(_LOWPASS)


@dataclass(frozen=True)
class WaveletFamily:
    name: str
    k_l: np.ndarray
    k_h: np.ndarray

    @property
    def length(self) -> int:
        return len(self.k_l)


@dataclass
class Subbands:
    """Output of one analysis level: approximation plus h/v/d details."""

    approx: np.ndarray
    h: np.ndarray
    v: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        shapes = {a.shape for a in (self.approx, self.h, self.v, self.d)}
        if len(shapes) != 1:
            raise ValueError(f"subband shapes differ: {sorted(shapes)}")

    @property
    def details(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.h, self.v, self.d


def kernels_1d(name: str) -> tuple[np.ndarray, np.ndarray]:
    """Low-pass and high-pass 1D kernels of a wavelet family (float64)."""
    try:
        lo = _LOWPASS[name]
    except KeyError:
        raise ValueError(f"unknown wavelet family {name!r}; choose from {FAMILIES}") from None
    n = len(lo)
    # quadrature mirror: k_h[i] = (-1)^(i+1) k_l[n-1-i]
    sign = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
    hi = sign * lo[::-1]
    # the published Haar kernel uses the opposite overall sign
    if n == 2:
        hi = -hi
    return lo.copy(), hi


def family(name: str) -> WaveletFamily:
    lo, hi = kernels_1d(name)
    return WaveletFamily(name, lo, hi)


def kernels_2d(name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(K_ll, K_lh, K_hl, K_hh)`` as outer products of the 1D kernels."""
    lo, hi = kernels_1d(name)
    return np.outer(lo, lo), np.outer(lo, hi), np.outer(hi, lo), np.outer(hi, hi)


@lru_cache(maxsize=64)
def _analysis_matrices(name: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    # row i holds the kernel placed at columns 2i .. 2i+len-1 (mod n)
    lo, hi = kernels_1d(name)
    a_lo = np.zeros((n // 2, n))
    a_hi = np.zeros((n // 2, n))
    rows = np.arange(n // 2)
    for t in range(len(lo)):
        cols = (2 * rows + t) % n
        np.add.at(a_lo, (rows, cols), lo[t])
        np.add.at(a_hi, (rows, cols), hi[t])
    a_lo = a_lo.astype(np.float32)
    a_hi = a_hi.astype(np.float32)
    a_lo.setflags(write=False)
    a_hi.setflags(write=False)
    return a_lo, a_hi


def _name(fam) -> str:
    return fam.name if isinstance(fam, WaveletFamily) else fam


def dwt2_level(plane, fam) -> Subbands:
    """One level of 2D analysis with stride (2, 2) and periodic extension."""
    name = _name(fam)
    plane = np.asarray(plane, dtype=np.float32)
    if plane.ndim != 2 or plane.shape[0] != plane.shape[1]:
        raise ValueError(f"expected a square plane, got shape {plane.shape}")
    n = plane.shape[0]
    if n % 2:
        raise ValueError(f"plane size must be even, got {n}")
    klen = len(kernels_1d(name)[0])
    if n < klen:
        raise ValueError(f"plane size {n} is smaller than the {name} kernel length {klen}")
    a_lo, a_hi = _analysis_matrices(name, n)
    rows_lo = a_lo @ plane
    rows_hi = a_hi @ plane
    return Subbands(
        approx=rows_lo @ a_lo.T,
        h=rows_lo @ a_hi.T,
        v=rows_hi @ a_lo.T,
        d=rows_hi @ a_hi.T,
    )


def idwt2_level(sub: Subbands, fam) -> np.ndarray:
    """Transposed strided correlation; exact inverse of :func:`dwt2_level`."""
    name = _name(fam)
    half = sub.approx.shape[0]
    if sub.approx.shape != (half, half):
        raise ValueError(f"subbands must be square, got {sub.approx.shape}")
    a_lo, a_hi = _analysis_matrices(name, 2 * half)
    lo_rows = np.asarray(sub.approx, np.float32) @ a_lo + np.asarray(sub.h, np.float32) @ a_hi
    hi_rows = np.asarray(sub.v, np.float32) @ a_lo + np.asarray(sub.d, np.float32) @ a_hi
    return a_lo.T @ lo_rows + a_hi.T @ hi_rows
