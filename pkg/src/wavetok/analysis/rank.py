"""Monte-Carlo checks of the rank of sparse-input linear projections.

Each experiment draws one Bernoulli(p) support over the input coordinates
and then ``samples`` input vectors whose nonzeros are confined to that
support. The accumulated outputs span at most ``|support|`` directions, and
``E|support| = p N``. Drawing an independent support per sample instead
(``shared_support=False``) lets the union of supports cover every column,
and the accumulated matrix then reaches full rank.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class RankExperiment:
    """Outcome of one or more trials; ``observed_rank`` is the trial mean."""

    M: int
    N: int
    p: float
    samples: int
    seed: int
    trials: int
    observed_ranks: tuple[int, ...]
    expected_rank: int

    @property
    def observed_rank(self) -> float:
        return float(np.mean(self.observed_ranks))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["observed_ranks"] = list(self.observed_ranks)
        d["observed_rank"] = self.observed_rank
        return d


def estimate_rank(matrix, rel_tol: float = 1e-5) -> int:
    """Numerical rank from the pivots of a column-pivoted QR factorization."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.size == 0:
        raise ValueError("cannot estimate the rank of an empty matrix")
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    if a.ndim == 1:
        a = a[:, None]
    r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    pivots = np.abs(np.diag(r))
    if pivots[0] == 0.0:
        return 0
    return int(np.count_nonzero(pivots > rel_tol * pivots[0]))


def _sparse_inputs(rng, n: int, samples: int, p: float, shared_support: bool) -> np.ndarray:
    values = rng.standard_normal((n, samples))
    if shared_support:
        mask = (rng.random(n) < p)[:, None]
    else:
        mask = rng.random((n, samples)) < p
    return values * mask


def _trial_rngs(seed: int, trials: int):
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if trials == 1:
        return [np.random.default_rng(seed)]
    # trial i depends only on (seed, i)
    return [np.random.default_rng((seed, i)) for i in range(trials)]


def _check(dims, samples, p):
    if min(*dims, samples) <= 0:
        raise ValueError("matrix dimensions and samples must be positive")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")


def verify_prop1(M: int, N: int, p: float, samples: int, seed: int = 0, trials: int = 1,
                 shared_support: bool = True) -> RankExperiment:
    """Rank of ``B = A X`` for a fixed Gaussian ``A`` and sparse columns ``X``."""
    _check((M, N), samples, p)
    ranks = []
    for rng in _trial_rngs(seed, trials):
        a = rng.standard_normal((M, N))
        ranks.append(estimate_rank(a @ _sparse_inputs(rng, N, samples, p, shared_support)))
    return RankExperiment(M, N, p, samples, seed, trials, tuple(ranks), min(round(p * N), M))


def verify_prop2(h_k: int, c_k: int, p: float, samples: int, seed: int = 0, trials: int = 1,
                 shared_support: bool = True) -> RankExperiment:
    """Rank of ``S = Q^T W`` for a fixed ``C_k x H_k`` block and sparse ``W``.

    ``M`` and ``N`` of the result are ``H_k`` and ``C_k``.
    """
    _check((h_k, c_k), samples, p)
    bound = 1.0 / np.sqrt(c_k)
    ranks = []
    for rng in _trial_rngs(seed, trials):
        q = rng.uniform(-bound, bound, size=(c_k, h_k))
        ranks.append(estimate_rank(q.T @ _sparse_inputs(rng, c_k, samples, p, shared_support)))
    return RankExperiment(h_k, c_k, p, samples, seed, trials, tuple(ranks), min(h_k, round(p * c_k)))
