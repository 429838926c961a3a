"""Operator-valued kernels and functions and their positive definiteness.

The quadratic form sum_{s,t} <Gamma(s,t) h_s, h_t> is realised as h^* M h
where M has block (t, s) equal to Gamma(s, t), h being the concatenation of
the h_s.  Because every value is block diagonal over the increments of the
tower, M at level lam is permutation-similar to the direct sum of the
per-increment Gram matrices, which is what the default route inspects.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._json import vector_to_json
from .errors import LbcError, PreconditionError, StructuralError
from .local_operator import TOL_PSD, LocalOperator
from .star_semigroup import StarSemigroup
from .tower import Tower

TOL_RANK = 1e-10
TOL_RANGE = 1e-8


class OperatorKernel:
    """Gamma: S x S -> L(H) on a finite point set, ``values[s][t] = Gamma(s, t)``."""

    def __init__(self, points, tower: Tower, values):
        points = tuple(points)
        n = len(points)
        if n == 0:
            raise StructuralError("a kernel needs at least one point")
        if len(values) != n or any(len(row) != n for row in values):
            raise StructuralError(f"kernel values must form a {n}x{n} table")
        for row in values:
            for op in row:
                if not isinstance(op, LocalOperator) or op.source != tower or op.target != tower:
                    raise StructuralError("every kernel value must be a LocalOperator on the kernel's tower")
        self.points = points
        self.tower = tower
        self.values = tuple(tuple(row) for row in values)

    @property
    def n(self) -> int:
        return len(self.points)

    def __call__(self, s: int, t: int) -> LocalOperator:
        return self.values[s][t]

    def block_values(self, k: int) -> np.ndarray:
        d = self.tower.increments[k]
        out = np.empty((self.n, self.n, d, d), dtype=complex)
        for s, row in enumerate(self.values):
            for t, op in enumerate(row):
                out[s, t] = op.blocks[k]
        return out

    def level_values(self, lam: int) -> np.ndarray:
        d = self.tower.dims[lam]
        out = np.empty((self.n, self.n, d, d), dtype=complex)
        for s, row in enumerate(self.values):
            for t, op in enumerate(row):
                out[s, t] = op.level(lam)
        return out

    def block_gram(self, k: int) -> np.ndarray:
        return _kernels.kernel_gram(self.block_values(k))

    def level_gram(self, lam: int) -> np.ndarray:
        return _kernels.kernel_gram(self.level_values(lam))

    def scaled(self, c) -> OperatorKernel:
        return OperatorKernel(self.points, self.tower, [[c * op for op in row] for row in self.values])

    def to_json(self) -> dict:
        return {
            "points": list(self.points),
            "tower": self.tower.to_json(),
            "entries": [
                {"s": self.points[s], "t": self.points[t], "op": {"blocks": op.to_json()["blocks"]}}
                for s, row in enumerate(self.values)
                for t, op in enumerate(row)
            ],
        }

    @classmethod
    def from_json(cls, obj) -> OperatorKernel:
        try:
            points = list(obj["points"])
            tower = Tower.from_json(obj["tower"])
            entries = obj["entries"]
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"kernel file is missing field {exc}") from None
        index = _point_index(points)
        table = [[None] * len(points) for _ in points]
        for i, ent in enumerate(entries):
            s, t = index(ent["s"]), index(ent["t"])
            table[s][t] = _operator_on(tower, ent["op"], f"entries[{i}]")
        missing = [(points[s], points[t]) for s in range(len(points)) for t in range(len(points)) if table[s][t] is None]
        if missing:
            raise StructuralError(f"kernel is not total; missing entry for (s, t) = {missing[0]}")
        return cls(points, tower, table)


class OperatorFunction:
    """phi: S -> L(H) on a finite *-semigroup, ``values[s] = phi(s)``."""

    def __init__(self, semigroup: StarSemigroup, tower: Tower, values):
        values = tuple(values)
        if len(values) != semigroup.n:
            raise StructuralError(f"expected {semigroup.n} values, got {len(values)}")
        for op in values:
            if not isinstance(op, LocalOperator) or op.source != tower or op.target != tower:
                raise StructuralError("every function value must be a LocalOperator on the function's tower")
        self.semigroup = semigroup
        self.tower = tower
        self.values = values

    def __call__(self, s: int) -> LocalOperator:
        return self.values[s]

    def block_values(self, k: int) -> np.ndarray:
        d = self.tower.increments[k]
        out = np.empty((self.semigroup.n, d, d), dtype=complex)
        for s, op in enumerate(self.values):
            out[s] = op.blocks[k]
        return out

    def block_gram(self, k: int, u: int = -1) -> np.ndarray:
        sg = self.semigroup
        return _kernels.function_gram(self.block_values(k), sg.mul, sg.star, u)

    def to_json(self) -> dict:
        return {
            "semigroup": self.semigroup.to_json(),
            "tower": self.tower.to_json(),
            "values": [{"s": i, "op": {"blocks": op.to_json()["blocks"]}} for i, op in enumerate(self.values)],
        }

    @classmethod
    def from_json(cls, obj) -> OperatorFunction:
        try:
            sg = StarSemigroup.from_json(obj["semigroup"])
            tower = Tower.from_json(obj["tower"])
            entries = obj["values"]
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"function file is missing field {exc}") from None
        index = _point_index(list(sg.labels))
        vals = [None] * sg.n
        for i, ent in enumerate(entries):
            vals[index(ent["s"])] = _operator_on(tower, ent["op"], f"values[{i}]")
        if any(v is None for v in vals):
            missing = sg.labels[vals.index(None)]
            raise StructuralError(f"function is not total; no value for element {missing}")
        return cls(sg, tower, vals)


def _point_index(points):
    lookup = {p: i for i, p in enumerate(points)}
    str_lookup = {str(p): i for i, p in enumerate(points)}

    def index(x):
        if x in lookup:
            return lookup[x]
        if str(x) in str_lookup:
            return str_lookup[str(x)]
        if isinstance(x, int) and 0 <= x < len(points):
            return x
        raise StructuralError(f"unknown point {x!r}")

    return index


def _operator_on(tower, obj, where):
    obj = dict(obj)
    obj.setdefault("source", tower.to_json())
    obj.setdefault("target", tower.to_json())
    op = LocalOperator.from_json(obj)
    if op.source != tower or op.target != tower:
        raise StructuralError(f"{where}: operator does not act on the declared tower")
    return op


def kernel_of_function(phi: OperatorFunction) -> OperatorKernel:
    """Gamma(s, t) = phi(t* s)."""
    sg = phi.semigroup
    vals = [[phi.values[sg.mul[sg.star[t], s]] for t in range(sg.n)] for s in range(sg.n)]
    return OperatorKernel(sg.labels, phi.tower, vals)


# -- certificates ------------------------------------------------------------

@dataclass
class KernelCertificate:
    ok: bool
    status: str  # "ok" | "indefinite" | "not_hermitian"
    route: str
    tol: float
    hermitian_residual: float
    level_min_eigs: list
    block_min_eigs: list | None = None
    level_witness: int | None = None
    witness: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "ok": self.ok,
            "status": self.status,
            "route": self.route,
            "tol": self.tol,
            "hermitian_residual": self.hermitian_residual,
            "level_min_eigs": list(self.level_min_eigs),
        }
        if self.block_min_eigs is not None:
            out["block_min_eigs"] = list(self.block_min_eigs)
        if self.level_witness is not None:
            out["level_witness"] = self.level_witness
        if self.witness is not None:
            out["witness"] = [vector_to_json(h) for h in self.witness]
        return out


def _min_eig(m):
    if m.size == 0:
        return np.inf, None
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return float(w[0]), v[:, 0]


def _gram_certificate(grams, tower: Tower, n: int, tol_psd: float, route: str) -> KernelCertificate:
    """Shared logic; ``grams`` maps a block or level index to its assembled matrix."""
    mats = [g for g in grams]
    scale = max((np.linalg.norm(m, 2) for m in mats if m.size), default=0.0)
    tol = tol_psd * scale
    herm = max((np.linalg.norm(m - m.conj().T, 2) for m in mats if m.size), default=0.0)
    eigs, vecs = zip(*(_min_eig(m) for m in mats))
    eigs = [float(x) for x in eigs]
    if route == "blocks":
        block_min = [None if np.isinf(x) else x for x in eigs]
        cum = np.minimum.accumulate(np.asarray(eigs, dtype=float))
        level_min = [None if np.isinf(x) else float(x) for x in cum]
    else:
        block_min = None
        level_min = [None if np.isinf(x) else x for x in eigs]
    if herm > tol_psd * max(scale, 1e-300) and herm > 0:
        return KernelCertificate(False, "not_hermitian", route, tol, float(herm), level_min, block_min)
    bad = [i for i, x in enumerate(eigs) if x < -tol]
    if not bad:
        return KernelCertificate(True, "ok", route, tol, float(herm), level_min, block_min)
    i = bad[0]
    v = vecs[i]
    if route == "blocks":
        # block i lives on increment i; embed at level i
        lam = i
        d_inc = tower.increments[i]
        h = np.zeros((n, tower.dims[lam]), dtype=complex)
        h[:, tower.offsets[i]:] = v.reshape(n, d_inc)
    elif route == "whole":
        lam = tower.top
        h = v.reshape(n, tower.dims[lam])
    else:
        lam = i
        h = v.reshape(n, tower.dims[lam])
    return KernelCertificate(False, "indefinite", route, tol, float(herm), level_min, block_min, lam, h)


def is_lpdk(kernel: OperatorKernel, tol_psd: float = TOL_PSD, route: str = "blocks") -> KernelCertificate:
    """Locally positive definiteness certificate for an operator kernel.

    ``route`` selects the matrices inspected: ``"blocks"`` (one Gram matrix
    per increment, the default), ``"levels"`` (the full Gram matrix at each
    level) or ``"whole"`` (only the top level).  All three agree on ``ok``.
    """
    t = kernel.tower
    if route == "blocks":
        grams = [kernel.block_gram(k) for k in range(t.n_levels)]
    elif route == "levels":
        grams = [kernel.level_gram(lam) for lam in range(t.n_levels)]
    elif route == "whole":
        grams = [kernel.level_gram(t.top)]
    else:
        raise ValueError(f"unknown route {route!r}")
    return _gram_certificate(grams, t, kernel.n, tol_psd, route)


def is_lpdf(phi: OperatorFunction, tol_psd: float = TOL_PSD) -> KernelCertificate:
    """Certificate that phi(t* s) is a locally positive definite kernel."""
    grams = [phi.block_gram(k) for k in range(phi.tower.n_levels)]
    return _gram_certificate(grams, phi.tower, phi.semigroup.n, tol_psd, "blocks")


def range_factor(m, tol_rank: float = TOL_RANK):
    """Eigenvalues above ``tol_rank * max`` and their eigenvectors, largest first.

    Each eigenvector is normalised so that its largest-modulus entry (first
    one on ties) is real and positive, which makes the factor reproducible.
    """
    if m.size == 0:
        return np.zeros(0), np.zeros((m.shape[0], 0), dtype=complex)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]
    top = max(w[0], 0.0)
    keep = w > tol_rank * top if top > 0 else np.zeros_like(w, dtype=bool)
    w, v = w[keep], v[:, keep]
    if v.size:
        piv = np.argmax(np.abs(v) - 1e-12 * np.arange(v.shape[0])[:, None], axis=0)
        ph = v[piv, np.arange(v.shape[1])]
        v = v * (np.abs(ph) / ph)[None, :]
    return w, v


@dataclass
class LbcConstants:
    """C[u, lam]: the smallest constant with M_u <= C^2 M at level lam."""

    constants: np.ndarray  # shape (n_elements, n_levels)
    labels: tuple

    def __getitem__(self, key):
        u, lam = key
        return float(self.constants[u, lam])

    def to_json(self) -> dict:
        return {lab: [float(c) for c in row] for lab, row in zip(self.labels, self.constants)}


def block_lbc(m, m_u, tol_rank: float = TOL_RANK, tol_range: float = TOL_RANGE):
    """Optimal C for one Gram pair, or None when range(m_u) is not inside range(m)."""
    w, v = range_factor(m, tol_rank)
    if w.size == 0:
        return 0.0 if np.linalg.norm(m_u) <= tol_range else None
    resid = m_u - v @ (v.conj().T @ m_u)
    if np.linalg.norm(resid, 2) > tol_range * (1.0 + np.linalg.norm(m, 2)):
        return None
    r = 1.0 / np.sqrt(w)
    q = (v.conj().T @ m_u @ v) * r[:, None] * r[None, :]
    c2 = np.linalg.eigvalsh((q + q.conj().T) / 2)[-1]
    return float(np.sqrt(max(c2, 0.0)))


def lbc_constants(phi: OperatorFunction, tol_psd: float = TOL_PSD, tol_rank: float = TOL_RANK) -> LbcConstants:
    cert = is_lpdf(phi, tol_psd)
    if not cert.ok:
        raise PreconditionError("function is not locally positive definite", cert)
    sg = phi.semigroup
    levels = phi.tower.n_levels
    per_block = np.zeros((sg.n, levels))
    for k in range(levels):
        m = phi.block_gram(k)
        for u in range(sg.n):
            c = block_lbc(m, phi.block_gram(k, u), tol_rank)
            if c is None:
                raise LbcError(
                    f"boundedness condition fails for u = {sg.labels[u]} at level {k}: "
                    "the shifted Gram matrix reaches outside the range of the Gram matrix",
                    u=sg.labels[u],
                    level=k,
                )
            per_block[u, k] = c
    return LbcConstants(np.maximum.accumulate(per_block, axis=1), sg.labels)
