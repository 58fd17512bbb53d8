"""Block-sparse projection from pixel-space to semantic token embeddings.

Level ``k`` of the pixel-space embedding (``C_k`` channels) is mapped by its
own ``C_k x H_k`` block; the semantic embedding concatenates the per-level
outputs in the same ``L, ..., 1`` order. Equivalent to multiplying by the
block-diagonal ``C x H`` matrix, without materialising the zero blocks.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .image_io import read_tensor, write_tensor
from .pipeline import PixelSpaceEmbedding, Segment, segments_for

MIN_LEVEL_SIZE = 8


@dataclass
class BlockSparseProjection:
    """Per-level blocks ordered ``L, L-1, ..., 1``."""

    blocks: list[np.ndarray]
    seed: int | None = None

    @property
    def level(self) -> int:
        return len(self.blocks)

    @property
    def in_sizes(self) -> list[int]:
        return [b.shape[0] for b in self.blocks]

    @property
    def out_sizes(self) -> list[int]:
        return [b.shape[1] for b in self.blocks]

    @property
    def h_total(self) -> int:
        return sum(self.out_sizes)

    def dense(self) -> np.ndarray:
        """The full block-diagonal ``C x H`` matrix."""
        q = np.zeros((sum(self.in_sizes), self.h_total), dtype=np.float32)
        r = c = 0
        for b in self.blocks:
            q[r:r + b.shape[0], c:c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return q


@dataclass
class SemanticEmbedding:
    data: np.ndarray
    segments: list[Segment]

    @property
    def grid(self) -> int:
        return self.data.shape[0]


def allocate_embedding_sizes(c_k, p_k, h: int, multiple_of: int | None = None) -> list[int]:
    """Split the embedding size ``h`` across levels.

    The two coarsest levels keep their full width (``H_k = C_k``). Finer
    levels get ``max(round(p_k * C_k), 8)`` and level 1 takes whatever is
    left so the sizes sum to ``h``. If level 1 would fall below 8 the
    intermediate levels give up width; if it would exceed ``C_1`` they absorb
    the surplus up to their own ``C_k``. Only when ``h > sum(C_k)`` does level
    1 end up wider than ``C_1``.

    Parameters
    ----------
    c_k, p_k : sequences ordered ``L, ..., 1``
        Channel counts and nonzero densities per level.
    h : int
        Total semantic embedding size.
    multiple_of : int, optional
        Reject ``h`` unless it is a multiple of this (e.g. 128).
    """
    c_k = [int(c) for c in c_k]
    p_k = [float(p) for p in p_k]
    if len(c_k) != len(p_k) or len(c_k) < 2:
        raise ValueError("c_k and p_k must have equal length >= 2")
    if any(not 0.0 <= p <= 1.0 for p in p_k):
        raise ValueError(f"densities must lie in [0, 1], got {p_k}")
    if multiple_of and (h <= 0 or h % multiple_of):
        raise ValueError(f"embedding size {h} is not a positive multiple of {multiple_of}")
    fixed = c_k[0] + c_k[1]
    if len(c_k) == 2:
        if h != fixed:
            raise ValueError(f"a level-2 projection needs H = {fixed}, got {h}")
        return list(c_k)
    mid_c = c_k[2:-1]
    lo = fixed + MIN_LEVEL_SIZE * (len(mid_c) + 1)
    if h < lo:
        raise ValueError(f"embedding size {h} is infeasible; must be at least {lo}")

    mid = [min(max(round(p * c), MIN_LEVEL_SIZE), c) for p, c in zip(p_k[2:-1], mid_c)]
    rest = h - fixed - sum(mid)
    c1 = c_k[-1]
    if rest > c1:
        surplus = rest - c1
        for i, c in enumerate(mid):
            take = min(surplus, mid_c[i] - c)
            mid[i] += take
            surplus -= take
        rest = c1 + surplus
    elif rest < MIN_LEVEL_SIZE:
        deficit = MIN_LEVEL_SIZE - rest
        for i in reversed(range(len(mid))):
            give = min(deficit, mid[i] - MIN_LEVEL_SIZE)
            mid[i] -= give
            deficit -= give
        rest = MIN_LEVEL_SIZE
    return [c_k[0], c_k[1], *mid, rest]


def init_projection(h_k, c_k, seed: int) -> BlockSparseProjection:
    """Blocks drawn i.i.d. uniform on ``[-1/sqrt(C_k), 1/sqrt(C_k)]``."""
    if len(h_k) != len(c_k):
        raise ValueError("h_k and c_k must have equal length")
    rng = np.random.default_rng(seed)
    blocks = []
    for c, h in zip(c_k, h_k):
        bound = 1.0 / np.sqrt(c)
        blocks.append(rng.uniform(-bound, bound, size=(c, h)).astype(np.float32))
    return BlockSparseProjection(blocks, seed=seed)


def identity_projection(c_k) -> BlockSparseProjection:
    return BlockSparseProjection([np.eye(c, dtype=np.float32) for c in c_k])


def _check_shapes(w: PixelSpaceEmbedding, q: BlockSparseProjection):
    sizes = [s.size for s in w.segments]
    if sizes != q.in_sizes:
        raise ValueError(f"embedding segments {sizes} do not match projection blocks {q.in_sizes}")


def project(w: PixelSpaceEmbedding, q: BlockSparseProjection) -> SemanticEmbedding:
    _check_shapes(w, q)
    parts = [w.data[:, :, seg.slice] @ block for seg, block in zip(w.segments, q.blocks)]
    data = np.concatenate(parts, axis=-1)
    return SemanticEmbedding(data, segments_for(q.out_sizes, w.level))


def project_grad(w: PixelSpaceEmbedding, q: BlockSparseProjection, d_e) -> tuple[np.ndarray, list[np.ndarray]]:
    """Gradients of a scalar loss w.r.t. ``W`` and every block, given ``dL/dE``."""
    _check_shapes(w, q)
    d_e = np.asarray(d_e, dtype=np.float32)
    expected = (w.grid, w.grid, q.h_total)
    if d_e.shape != expected:
        raise ValueError(f"upstream gradient has shape {d_e.shape}, expected {expected}")
    out_segs = segments_for(q.out_sizes, w.level)
    d_w = np.empty_like(w.data)
    d_q = []
    for seg_in, seg_out, block in zip(w.segments, out_segs, q.blocks):
        g = d_e[:, :, seg_out.slice]
        d_w[:, :, seg_in.slice] = g @ block.T
        x = w.data[:, :, seg_in.slice].reshape(-1, seg_in.size)
        d_q.append(x.T @ g.reshape(-1, seg_out.size))
    return d_w, d_q


def projection_param_count(c_k, h_k) -> int:
    if len(c_k) != len(h_k):
        raise ValueError("c_k and h_k must have equal length")
    return sum(int(c) * int(h) for c, h in zip(c_k, h_k))


def save_projection(q: BlockSparseProjection, directory, stem: str = "projection") -> str:
    """Write one WVTK file per block plus ``<stem>.json``; return the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for k, block in zip(range(q.level, 0, -1), q.blocks):
        name = f"{stem}_q{k}.wvtk"
        write_tensor(block, os.path.join(directory, name))
        files.append(name)
    manifest = {
        "level": q.level,
        "C_k": q.in_sizes,
        "H_k": q.out_sizes,
        "seed": q.seed,
        "blocks": files,
    }
    path = os.path.join(directory, f"{stem}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def load_projection(manifest_path) -> BlockSparseProjection:
    with open(manifest_path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"manifest is not valid JSON: {exc}") from exc
    try:
        level, c_k, h_k = manifest["level"], manifest["C_k"], manifest["H_k"]
    except KeyError as exc:
        raise ValueError(f"manifest is missing field {exc}") from None
    if not (len(c_k) == len(h_k) == level):
        raise ValueError(f"manifest level {level} disagrees with C_k/H_k lengths")
    files = manifest.get("blocks") or [f"projection_q{k}.wvtk" for k in range(level, 0, -1)]
    if len(files) != level:
        raise ValueError(f"manifest lists {len(files)} blocks for level {level}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    blocks = []
    for name, c, h in zip(files, c_k, h_k):
        block = read_tensor(os.path.join(base, name))
        if block.shape != (c, h):
            raise ValueError(f"block {name} has shape {block.shape}, manifest says {(c, h)}")
        blocks.append(block)
    return BlockSparseProjection(blocks, seed=manifest.get("seed"))
