"""Reproducing kernel towers and minimal dilations of positive definite functions.

Given a locally positive definite kernel, each increment Gram matrix is
factored as M_k = V_k^* V_k with V_k of full row rank.  The rows of V_k are
coordinates on the k-th increment of the dilation tower K and the column
group belonging to a point s is the increment block of the point map
Gamma_s: H -> K.  For a function phi on a *-semigroup the representation is
the column shift pi(u) Gamma_s = Gamma_{us}, and J = Gamma_e.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import LbcError, PreconditionError, StructuralError
from .local_operator import TOL_PSD, LocalOperator, classify
from .pd_kernel import (
    TOL_RANK,
    LbcConstants,
    OperatorFunction,
    OperatorKernel,
    is_lpdf,
    is_lpdk,
    kernel_of_function,
    lbc_constants,
    range_factor,
)
from .tower import LocalVector, Tower

TOL_DIL = 1e-8
TOL_REP = 1e-8
TOL_SHIFT = 1e-7

METHODS = ("eigh", "cholesky")


def gram_factor(m, tol_rank: float = TOL_RANK, method: str = "eigh") -> np.ndarray:
    """Full-row-rank V with m = V^* V.

    ``eigh`` keeps eigenvalues above ``tol_rank`` times the largest one
    (descending order); ``cholesky`` uses diagonal pivoting and stops once
    the largest remaining pivot falls below ``tol_rank`` times the largest
    diagonal entry.
    """
    if m.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    if method == "eigh":
        w, v = range_factor(m, tol_rank)
        return np.sqrt(w)[:, None] * v.conj().T
    if method == "cholesky":
        top = float(np.max(np.real(np.diag(m))))
        r, rank = _kernels.pivoted_cholesky(m, tol_rank * max(top, 0.0))
        return r
    raise ValueError(f"unknown factorisation method {method!r}; expected one of {METHODS}")


def _point_maps(base: Tower, factors, n: int):
    ranks = [f.shape[0] for f in factors]
    dil = Tower(tuple(np.cumsum(ranks).tolist()) if ranks else ())
    maps = []
    for s in range(n):
        blocks = []
        for k, f in enumerate(factors):
            d = base.increments[k]
            blocks.append(f[:, s * d:(s + 1) * d])
        maps.append(LocalOperator(base, dil, blocks))
    return dil, maps


@dataclass
class Rklhs:
    """A reproducing kernel tower: point maps Gamma_s with Gamma_s^* Gamma_t = Gamma(t, s)."""

    base_tower: Tower
    dilation_tower: Tower
    point_maps: list
    kernel: OperatorKernel
    reconstruction_residual: float

    @property
    def ranks(self) -> tuple:
        return self.dilation_tower.increments

    def factor(self, k: int) -> np.ndarray:
        """The increment-k factor V_k, column groups ordered by point."""
        return np.hstack([g.blocks[k] for g in self.point_maps])

    def evaluate(self, vec: LocalVector, s: int) -> LocalVector:
        """k(s) = Gamma_s^* k."""
        return self.point_maps[s].H.apply(vec)

    def function_values(self, vec: LocalVector) -> list:
        return [self.evaluate(vec, s) for s in range(len(self.point_maps))]

    def to_json(self) -> dict:
        return {
            "kind": "rklhs",
            "dims_H": list(self.base_tower.dims),
            "dims_K": list(self.dilation_tower.dims),
            "points": list(self.kernel.points),
            "point_maps": [g.to_json() for g in self.point_maps],
            "residuals": {"reconstruction": self.reconstruction_residual},
        }


def _factor_all(grams, tol_rank, method):
    factors = [gram_factor(m, tol_rank, method) for m in grams]
    resid = max(
        (float(np.linalg.norm(f.conj().T @ f - m, 2)) for f, m in zip(factors, grams) if m.size),
        default=0.0,
    )
    return factors, resid


def build_rklhs(
    kernel: OperatorKernel, tol_psd: float = TOL_PSD, tol_rank: float = TOL_RANK, method: str = "eigh"
) -> Rklhs:
    cert = is_lpdk(kernel, tol_psd)
    if not cert.ok:
        raise PreconditionError(f"kernel is not locally positive definite ({cert.status})", cert)
    grams = [kernel.block_gram(k) for k in range(kernel.tower.n_levels)]
    factors, resid = _factor_all(grams, tol_rank, method)
    dil, maps = _point_maps(kernel.tower, factors, kernel.n)
    return Rklhs(kernel.tower, dil, maps, kernel, resid)


@dataclass
class DilationResult:
    phi: OperatorFunction
    rklhs: Rklhs
    J: LocalOperator
    representation: list
    lbc: LbcConstants
    minimal: bool
    residuals: dict
    unitary: list | None = None
    rho: float | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def dilation_tower(self) -> Tower:
        return self.rklhs.dilation_tower

    def pi(self, s: int) -> LocalOperator:
        return self.representation[s]

    def certificate(self) -> dict:
        out = {
            "dims_K": list(self.dilation_tower.dims),
            "residuals": dict(self.residuals),
            "lbc": self.lbc.to_json(),
            "minimal": self.minimal,
        }
        if self.unitary is not None:
            out["unitary"] = list(self.unitary)
        if self.rho is not None:
            out["rho"] = self.rho
        out["tolerances"] = dict(self.tolerances)
        return out

    def to_json(self) -> dict:
        sg = self.phi.semigroup
        return {
            "kind": "dilation",
            "certificate": self.certificate(),
            "semigroup": sg.to_json(),
            "tower": self.phi.tower.to_json(),
            "dilation_tower": self.dilation_tower.to_json(),
            "function": [{"s": i, "op": {"blocks": op.to_json()["blocks"]}} for i, op in enumerate(self.phi.values)],
            "J": self.J.to_json(),
            "representation": [
                {"s": i, "op": {"blocks": op.to_json()["blocks"]}} for i, op in enumerate(self.representation)
            ],
        }

    def representation_function(self) -> OperatorFunction:
        """pi as an L(K)-valued function on the same semigroup."""
        return OperatorFunction(self.phi.semigroup, self.dilation_tower, self.representation)


def _shift_operator(f, sg, u, d, tol):
    """Solve pi V = V_u for pi on the row space of V (full row rank)."""
    n = sg.n
    if f.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex), 0.0
    cols = np.concatenate([np.arange(sg.mul[u, s] * d, (sg.mul[u, s] + 1) * d) for s in range(n)])
    fu = f[:, cols]
    g = f @ f.conj().T
    pi = np.linalg.solve(g, f @ fu.conj().T).conj().T
    resid = float(np.linalg.norm(pi @ f - fu, 2)) / (1.0 + float(np.linalg.norm(fu, 2)))
    return pi, resid


def representation_residual(sg, pis, tower: Tower) -> float:
    ident = LocalOperator.identity(tower)
    worst = (pis[sg.e] - ident).norm()
    for s in range(sg.n):
        worst = max(worst, (pis[sg.star[s]] - pis[s].H).norm())
        for t in range(sg.n):
            worst = max(worst, (pis[sg.mul[s, t]] - pis[s] @ pis[t]).norm())
    return worst


def dilate(
    phi: OperatorFunction,
    tol_psd: float = TOL_PSD,
    tol_rank: float = TOL_RANK,
    method: str = "eigh",
) -> DilationResult:
    """Minimal dilation phi(s) = J^* pi(s) J of a locally positive definite function.

    Requires phi(e) = I (so that J is a locally isometry) and the
    boundedness condition; all representation axioms, the compression
    identity, the norm bounds and minimality are re-checked numerically and
    reported in ``residuals``.
    """
    sg = phi.semigroup
    tower = phi.tower
    cert = is_lpdf(phi, tol_psd)
    if not cert.ok:
        raise PreconditionError(f"function is not locally positive definite ({cert.status})", cert)
    e_resid = (phi.values[sg.e] - LocalOperator.identity(tower)).norm()
    if e_resid > TOL_DIL:
        raise PreconditionError(
            f"phi(e) must be the identity for the embedding to be isometric (off by {e_resid:.3e})"
        )
    lbc = lbc_constants(phi, tol_psd, tol_rank)

    grams = [phi.block_gram(k) for k in range(tower.n_levels)]
    factors, recon = _factor_all(grams, tol_rank, method)
    dil, maps = _point_maps(tower, factors, sg.n)
    rk = Rklhs(tower, dil, maps, kernel_of_function(phi), recon)
    J = maps[sg.e]

    pis = []
    shift_resid = 0.0
    for u in range(sg.n):
        blocks = []
        for k, f in enumerate(factors):
            pi, r = _shift_operator(f, sg, u, tower.increments[k], TOL_SHIFT)
            if r > TOL_SHIFT:
                raise LbcError(
                    f"pi({sg.labels[u]}) is not well defined at level {k} (shift residual {r:.3e})",
                    u=sg.labels[u],
                    level=k,
                )
            shift_resid = max(shift_resid, r)
            blocks.append(pi)
        pis.append(LocalOperator(dil, dil, blocks))

    dil_resid = max((phi.values[s] - J.H @ pis[s] @ J).norm() for s in range(sg.n))
    rep_resid = representation_residual(sg, pis, dil)
    iso_resid = (J.H @ J - LocalOperator.identity(tower)).norm()

    # ||pi(u)||_lam <= C_u^lam
    excess = 0.0
    for u in range(sg.n):
        for lam, nrm in enumerate(pis[u].seminorms()):
            c = lbc[u, lam]
            excess = max(excess, (nrm - c) / max(c, 1.0))

    minimal = True
    for k, f in enumerate(factors):
        d = tower.increments[k]
        stacked = np.hstack([(pis[s] @ J).blocks[k] for s in range(sg.n)]) if d else np.zeros((f.shape[0], 0))
        if f.shape[0] and np.linalg.matrix_rank(stacked, tol=TOL_RANK * max(np.linalg.norm(stacked, 2), 1.0)) != f.shape[0]:
            minimal = False

    unitary = None
    if sg.is_group_with_inverse_star():
        unitary = ["unitary" in classify(p, ("unitary",)) for p in pis]

    residuals = {
        "dilation": dil_resid,
        "representation": rep_resid,
        "isometry": iso_resid,
        "reconstruction": recon,
        "shift": shift_resid,
        "lbc_excess": excess,
    }
    return DilationResult(
        phi,
        rk,
        J,
        pis,
        lbc,
        minimal,
        residuals,
        unitary,
        tolerances={"psd": tol_psd, "rank": tol_rank},
    )


def rho_split_function(psi: OperatorFunction, rho: float) -> OperatorFunction:
    """psi with its value at e replaced by rho I; its Gram form is the rho-split form."""
    vals = list(psi.values)
    vals[psi.semigroup.e] = LocalOperator.identity(psi.tower) * float(rho)
    return OperatorFunction(psi.semigroup, psi.tower, vals)


def rho_dilate(
    psi: OperatorFunction,
    rho: float,
    tol_psd: float = TOL_PSD,
    tol_rank: float = TOL_RANK,
    method: str = "eigh",
) -> DilationResult:
    """rho-dilation: psi(s) = rho J^* pi(s) J for s != e."""
    rho = float(rho)
    if not rho > 0:
        raise ValueError("rho must be positive")
    sg = psi.semigroup
    split = rho_split_function(psi, rho)
    cert = is_lpdf(split, tol_psd)
    if not cert.ok:
        raise PreconditionError(f"rho-split form is not positive at rho = {rho:g}", cert)
    ident = LocalOperator.identity(psi.tower)
    phi = OperatorFunction(
        sg, psi.tower, [ident if s == sg.e else psi.values[s] / rho for s in range(sg.n)]
    )
    res = dilate(phi, tol_psd, tol_rank, method)
    res.rho = rho
    res.residuals["rho_dilation"] = max(
        ((psi.values[s] - rho * (res.J.H @ res.pi(s) @ res.J)).norm() for s in range(sg.n) if s != sg.e),
        default=0.0,
    )
    return res


def intertwiner(a: DilationResult, b: DilationResult):
    """The locally unitary W with W J_a = J_b and W pi_a(s) = pi_b(s) W.

    Built per increment as W_k = V_b V_a^+ from the two Gram factors.
    Returns ``(W, residual)`` where the residual is the worst of the two
    intertwining relations.
    """
    if a.phi.semigroup != b.phi.semigroup or a.phi.tower != b.phi.tower:
        raise StructuralError("dilations of different functions")
    if a.dilation_tower != b.dilation_tower:
        raise StructuralError(
            f"dilation towers differ: {a.dilation_tower.dims} vs {b.dilation_tower.dims}"
        )
    blocks = []
    for k in range(a.phi.tower.n_levels):
        fa, fb = a.rklhs.factor(k), b.rklhs.factor(k)
        if fa.shape[0] == 0:
            blocks.append(np.zeros((0, 0), dtype=complex))
            continue
        blocks.append(np.linalg.solve(fa @ fa.conj().T, fa @ fb.conj().T).conj().T)
    w = LocalOperator(a.dilation_tower, b.dilation_tower, blocks)
    resid = (w @ a.J - b.J).norm()
    for s in range(a.phi.semigroup.n):
        resid = max(resid, (w @ a.pi(s) - b.pi(s) @ w).norm())
    return w, resid
