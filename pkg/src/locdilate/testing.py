"""Random instances for tests and benchmarks.

Every generator takes a ``numpy.random.Generator`` and builds its object
increment by increment, so the requested property holds at every level by
construction.
"""
from __future__ import annotations

import numpy as np

from .applications import LocalPovm
from .local_operator import LocalOperator
from .pd_kernel import OperatorFunction, OperatorKernel
from .star_semigroup import StarSemigroup, cyclic_group
from .tower import Tower


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_tower(rng, max_levels=4, max_dim=32, min_increment=0) -> Tower:
    levels = int(rng.integers(1, max_levels + 1))
    dims = np.sort(rng.integers(1, max_dim + 1, size=levels))
    if min_increment:
        dims = np.cumsum(np.maximum(np.diff(np.concatenate([[0], dims])), min_increment))
    return Tower(tuple(int(d) for d in dims))


def random_operator(rng, source: Tower, target: Tower | None = None, scale=1.0) -> LocalOperator:
    target = source if target is None else target
    return LocalOperator(
        source,
        target,
        [scale * complex_normal(rng, (r, c)) for r, c in zip(target.increments, source.increments)],
    )


def random_unitary_matrix(rng, d):
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    q, r = np.linalg.qr(complex_normal(rng, (d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_isometry_matrix(rng, rows, cols):
    return random_unitary_matrix(rng, rows)[:, :cols]


def random_unitary(rng, tower: Tower) -> LocalOperator:
    return LocalOperator(tower, tower, [random_unitary_matrix(rng, d) for d in tower.increments])


def random_contraction(rng, tower: Tower, max_norm=1.0) -> LocalOperator:
    blocks = []
    for d in tower.increments:
        b = complex_normal(rng, (d, d))
        if d:
            b *= max_norm * rng.uniform(0.05, 1.0) / np.linalg.norm(b, 2)
        blocks.append(b)
    return LocalOperator(tower, tower, blocks)


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    g = complex_normal(rng, (d, rank))
    return g @ g.conj().T


def random_povm(rng, tower: Tower, m: int) -> LocalPovm:
    """Effects E_i = S^{-1/2} A_i S^{-1/2} with A_i random PSD and S = sum A_i."""
    atoms = [[] for _ in range(m)]
    for d in tower.increments:
        ranks = rng.integers(1, d + 1, size=m) if d else np.zeros(m, dtype=int)
        # the ranks must cover d, otherwise S is singular
        ranks[0] = max(ranks[0], d - ranks[1:].sum())
        parts = [random_psd(rng, d, int(r)) for r in ranks]
        if d:
            s = sum(parts)
            w, v = np.linalg.eigh(s)
            inv_root = (v / np.sqrt(w)) @ v.conj().T
            parts = [inv_root @ p @ inv_root for p in parts]
            parts = [(p + p.conj().T) / 2 for p in parts]
        for i, p in enumerate(parts):
            atoms[i].append(p)
    return LocalPovm(tower, [LocalOperator(tower, tower, b) for b in atoms])


def random_gram_kernel(rng, points: int, tower: Tower, rank: int | None = None) -> OperatorKernel:
    """Gamma(s, t) = X_t^* X_s blockwise, so the kernel is positive definite by construction."""
    xs = []
    for d in tower.increments:
        r = rank if rank is not None else int(rng.integers(1, points * d + 1)) if d else 0
        xs.append([complex_normal(rng, (r, d)) for _ in range(points)])
    vals = [
        [LocalOperator(tower, tower, [xs[k][t].conj().T @ xs[k][s] for k in range(tower.n_levels)]) for t in range(points)]
        for s in range(points)
    ]
    return OperatorKernel(tuple(range(points)), tower, vals)


def random_hermitian_kernel(rng, points: int, tower: Tower, shift: float = 0.0) -> OperatorKernel:
    """Hermitian kernel Gamma(s,t) = Gamma(t,s)^* with random entries, usually indefinite."""
    vals = [[None] * points for _ in range(points)]
    for s in range(points):
        for t in range(s, points):
            blocks = [complex_normal(rng, (d, d)) for d in tower.increments]
            if s == t:
                blocks = [(b + b.conj().T) / 2 + shift * np.eye(b.shape[0]) for b in blocks]
            op = LocalOperator(tower, tower, blocks)
            vals[s][t] = op
            vals[t][s] = op.H
    return OperatorKernel(tuple(range(points)), tower, vals)


def representation_function(sg: StarSemigroup, tower: Tower, pi_blocks, j_blocks) -> OperatorFunction:
    """phi(s) = J^* pi(s) J from per-increment representation and isometry blocks."""
    vals = []
    for s in range(sg.n):
        vals.append(
            LocalOperator(tower, tower, [j.conj().T @ p[s] @ j for p, j in zip(pi_blocks, j_blocks)])
        )
    return OperatorFunction(sg, tower, vals)


def random_cyclic_lpdf(rng, n: int, tower: Tower, extra: int = 2) -> OperatorFunction:
    """phi(k) = J^* U^k J with U^n = I, from a random unitary of order n."""
    sg = cyclic_group(n)
    pi_blocks, j_blocks = [], []
    for d in tower.increments:
        big = d + int(rng.integers(0, extra + 1)) if d else 0
        w = random_unitary_matrix(rng, big)
        roots = np.exp(2j * np.pi * rng.integers(0, n, size=big) / n)
        u = (w * roots[None, :]) @ w.conj().T
        pi_blocks.append([np.linalg.matrix_power(u, k) if big else u for k in range(n)])
        j_blocks.append(random_isometry_matrix(rng, big, d))
    return representation_function(sg, tower, pi_blocks, j_blocks)


def povm_lpdf(povm: LocalPovm) -> OperatorFunction:
    return povm.as_function()
