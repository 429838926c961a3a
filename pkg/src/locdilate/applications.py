"""Concrete dilations built on the tower machinery.

Discrete POVMs get a Naimark dilation and contractions get a finite-horizon
unitary dilation. Windowed certificates test rho-contractivity up to a
finite window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import PreconditionError, StructuralError
from .local_operator import TOL_PSD, LocalOperator, classify
from .pd_kernel import TOL_RANK, OperatorFunction
from .star_semigroup import powerset_intersection
from .tower import Tower

TOL_POVM = 1e-9
GRID_POINTS = 1024


def square_root(a: LocalOperator, tol_psd: float = TOL_PSD) -> LocalOperator:
    """Blockwise positive square root; eigenvalues down to -tol are clamped to zero."""
    if not a.is_square:
        raise StructuralError("square root needs an operator on a single tower")
    eps = tol_psd * (1.0 + a.norm())
    blocks = []
    for k, b in enumerate(a.blocks):
        if b.size == 0:
            blocks.append(b)
            continue
        if np.linalg.norm(b - b.conj().T, 2) > eps:
            raise PreconditionError(f"operator is not self-adjoint at level {k}")
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        if w[0] < -eps:
            raise PreconditionError(f"operator is not positive at level {k}: eigenvalue {w[0]:.6g}")
        blocks.append((v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T)
    return LocalOperator(a.source, a.target, blocks)


# -- Naimark ---------------------------------------------------------------

class LocalPovm:
    """Effects E_1..E_m on a tower with 0 <= E_i <= I and sum E_i = I."""

    def __init__(self, tower: Tower, atoms, tol: float = TOL_POVM):
        atoms = tuple(atoms)
        if not atoms:
            raise StructuralError("a POVM needs at least one atom")
        for i, a in enumerate(atoms):
            if not isinstance(a, LocalOperator) or a.source != tower or a.target != tower:
                raise StructuralError(f"atom {i} is not an operator on the POVM's tower")
        self.tower = tower
        self.atoms = atoms
        self.tol = tol
        self._validate()

    def _validate(self):
        ident = LocalOperator.identity(self.tower)
        for i, a in enumerate(self.atoms):
            for name, op in (("positive", a), ("below the identity", ident - a)):
                k, w = _min_eig_block(op)
                if w < -self.tol:
                    raise PreconditionError(f"atom {i} is not {name}: eigenvalue {w:.6g} at level {k}")
        total = sum(self.atoms[1:], self.atoms[0])
        off = (total - ident).norm()
        if off > self.tol:
            raise PreconditionError(
                f"atoms sum to the identity only up to {off:.3e}; use the defect-atom option to complete them"
            )

    @property
    def m(self) -> int:
        return len(self.atoms)

    @classmethod
    def with_defect_atom(cls, tower: Tower, atoms, tol: float = TOL_POVM) -> LocalPovm:
        """Append I - sum(atoms) as an extra effect; it must be positive."""
        atoms = list(atoms)
        defect = LocalOperator.identity(tower) - sum(atoms[1:], atoms[0])
        k, w = _min_eig_block(defect)
        if w < -tol:
            raise PreconditionError(f"defect atom I - sum E_i is not positive: eigenvalue {w:.6g} at level {k}")
        return cls(tower, atoms + [defect], tol)

    def as_function(self) -> OperatorFunction:
        """E extended additively to subsets, as a function on the intersection semigroup."""
        sg = powerset_intersection(self.m)
        zero = LocalOperator.zeros(self.tower, self.tower)
        vals = []
        for mask in range(sg.n):
            acc = zero
            for i in range(self.m):
                if mask >> i & 1:
                    acc = acc + self.atoms[i]
            vals.append(acc)
        return OperatorFunction(sg, self.tower, vals)

    def to_json(self) -> dict:
        return {"tower": self.tower.to_json(), "atoms": [{"blocks": a.to_json()["blocks"]} for a in self.atoms]}


def _min_eig_block(op: LocalOperator):
    worst = (None, np.inf)
    for k, b in enumerate(op.blocks):
        if b.size:
            w = np.linalg.eigvalsh((b + b.conj().T) / 2)[0]
            if w < worst[1]:
                worst = (k, float(w))
    return worst


@dataclass
class SpectralDilation:
    povm: LocalPovm
    dilation_tower: Tower
    J: LocalOperator
    projections: list
    residuals: dict
    atom_ranks: list  # atom_ranks[k][i] = rank of E_i on increment k

    def to_json(self) -> dict:
        return {
            "kind": "spectral_dilation",
            "certificate": {
                "dims_K": list(self.dilation_tower.dims),
                "residuals": dict(self.residuals),
                "atom_ranks": [list(r) for r in self.atom_ranks],
                "minimal": True,
            },
            "povm": self.povm.to_json(),
            "dilation_tower": self.dilation_tower.to_json(),
            "J": self.J.to_json(),
            "projections": [{"blocks": f.to_json()["blocks"]} for f in self.projections],
        }


def naimark(povm: LocalPovm, tol_rank: float = TOL_RANK) -> SpectralDilation:
    """E_i = J^* F_i J with orthogonal projections F_i summing to I.

    On each increment, J stacks the compressed roots E_i^{1/2} restricted to
    the range of E_i, so the dilation space is the direct sum of those
    ranges and is minimal.
    """
    tower = povm.tower
    roots = [square_root(a) for a in povm.atoms]
    j_blocks, atom_ranks = [], []
    for k, d in enumerate(tower.increments):
        parts, ranks = [], []
        for a, r in zip(povm.atoms, roots):
            b = a.blocks[k]
            if d == 0:
                ranks.append(0)
                parts.append(np.zeros((0, 0), dtype=complex))
                continue
            w, v = np.linalg.eigh((b + b.conj().T) / 2)
            q = v[:, w > tol_rank]
            ranks.append(q.shape[1])
            parts.append(q.conj().T @ r.blocks[k])
        atom_ranks.append(ranks)
        j_blocks.append(np.vstack(parts) if d else np.zeros((sum(ranks), 0), dtype=complex))
    dims = np.cumsum([sum(r) for r in atom_ranks]).tolist()
    dil = Tower(tuple(dims))
    J = LocalOperator(tower, dil, j_blocks)
    projections = []
    for i in range(povm.m):
        blocks = []
        for ranks in atom_ranks:
            diag = np.concatenate([np.full(r, 1.0 if j == i else 0.0) for j, r in enumerate(ranks)]) if ranks else np.zeros(0)
            blocks.append(np.diag(diag).astype(complex))
        projections.append(LocalOperator(dil, dil, blocks))

    ident = LocalOperator.identity(dil)
    total = sum(projections[1:], projections[0])
    residuals = {
        "compression": max((a - J.H @ f @ J).norm() for a, f in zip(povm.atoms, projections)),
        "isometry": (J.H @ J - LocalOperator.identity(tower)).norm(),
        "orthogonality": max(
            ((projections[i] @ projections[j]).norm() for i in range(povm.m) for j in range(povm.m) if i != j),
            default=0.0,
        ),
        "resolution": (total - ident).norm(),
        "projection": max((f @ f - f).norm() for f in projections),
    }
    return SpectralDilation(povm, dil, J, projections, residuals, atom_ranks)


# -- unitary dilation of a contraction -------------------------------------

@dataclass
class UnitaryDilation:
    T: LocalOperator
    horizon: int
    U: LocalOperator
    J: LocalOperator
    residuals: dict
    orbit_ranks: list = field(default_factory=list)

    @property
    def minimal(self) -> bool:
        return all(r == d for r, d in zip(self.orbit_ranks, self.U.source.dims))

    def to_json(self) -> dict:
        return {
            "kind": "unitary_dilation",
            "certificate": {
                "horizon": self.horizon,
                "dims_K": list(self.U.source.dims),
                "residuals": dict(self.residuals),
                "orbit_ranks": list(self.orbit_ranks),
                "minimal": self.minimal,
            },
            "T": self.T.to_json(),
            "U": self.U.to_json(),
            "J": self.J.to_json(),
        }


def contraction_defect(t: LocalOperator, tol_psd: float = TOL_PSD):
    """(level, eigenvalue) of the worst eigenvalue of I - T^*T."""
    return _min_eig_block(LocalOperator.identity(t.source) - t.H @ t)


def unitary_dilation(t: LocalOperator, horizon: int, tol_psd: float = TOL_PSD) -> UnitaryDilation:
    """Block unitary U on (N+1) copies of H with J^* U^n J = T^n for 1 <= n <= N.

    Row 0 is (T, 0, ..., 0, D_{T*}), row 1 is (D_T, 0, ..., 0, -T^*) and the
    remaining rows shift the middle slots down by one.
    """
    n_h = int(horizon)
    if n_h < 1:
        raise ValueError("horizon must be at least 1")
    if not t.is_square:
        raise StructuralError("a contraction must act on a single tower")
    k, w = contraction_defect(t)
    if w < -tol_psd * (1.0 + t.norm() ** 2):
        raise PreconditionError(f"not a contraction: I - T*T has eigenvalue {w:.6g} at level {k}")
    ident = LocalOperator.identity(t.source)
    d_t = square_root(ident - t.H @ t, tol_psd)
    d_ts = square_root(ident - t @ t.H, tol_psd)
    m = n_h + 1
    big = Tower(tuple(m * d for d in t.source.dims))
    u_blocks, j_blocks = [], []
    for k, d in enumerate(t.source.increments):
        b = t.blocks[k]
        u = np.zeros((m * d, m * d), dtype=complex)
        sl = lambda i: slice(i * d, (i + 1) * d)  # noqa: E731
        u[sl(0), sl(0)] = b
        u[sl(0), sl(n_h)] = d_ts.blocks[k]
        u[sl(1), sl(0)] = d_t.blocks[k]
        u[sl(1), sl(n_h)] = -b.conj().T
        for i in range(2, m):
            u[sl(i), sl(i - 1)] = np.eye(d)
        u_blocks.append(u)
        j_blocks.append(np.eye(m * d, d))
    U = LocalOperator(big, big, u_blocks)
    J = LocalOperator(t.source, big, j_blocks)

    big_id = LocalOperator.identity(big)
    comp = 0.0
    un, tn = big_id, ident
    for _ in range(n_h):
        un, tn = U @ un, t @ tn
        comp = max(comp, (J.H @ un @ J - tn).norm())
    residuals = {
        "unitary": max((U.H @ U - big_id).norm(), (U @ U.H - big_id).norm()),
        "isometry": (J.H @ J - ident).norm(),
        "compression": comp,
    }
    # rank of [U^n J], |n| <= N, per level
    orbit = [J]
    fwd = bwd = J
    for _ in range(n_h):
        fwd, bwd = U @ fwd, U.H @ bwd
        orbit += [fwd, bwd]
    ranks = []
    for lam in range(big.n_levels):
        stacked = np.hstack([o.level(lam) for o in orbit])
        ranks.append(int(np.linalg.matrix_rank(stacked, tol=1e-10 * max(1.0, np.linalg.norm(stacked, 2)))) if stacked.size else 0)
    return UnitaryDilation(t, n_h, U, J, residuals, ranks)


# -- rho-contractions --------------------------------------------------------

def _powers(b, n):
    d = b.shape[0]
    out = np.empty((n + 1, d, d), dtype=complex)
    out[0] = np.eye(d)
    for i in range(1, n + 1):
        out[i] = b @ out[i - 1]
    return out


def window_matrix(b, rho: float, window: int) -> np.ndarray:
    """The rho-split Gram matrix of T^(n) on {0..window}: rho I on the diagonal,
    block (t, s) = T^(s-t) above it and its adjoint below."""
    return _kernels.block_toeplitz(_powers(np.asarray(b, dtype=complex), window), rho)


def _window_status(b, rho, window, tol_psd):
    """Smallest failing window (or None) with its witness, for one matrix."""
    if b.size == 0:
        return None, None, np.inf
    full = window_matrix(b, rho, window)
    eps = tol_psd * np.linalg.norm(full, 2)
    w = np.linalg.eigvalsh(full)[0]
    if w >= -eps:
        return None, None, float(w)
    for n in range(1, window + 1):
        m = window_matrix(b, rho, n)
        ww, vv = np.linalg.eigh(m)
        if ww[0] < -tol_psd * np.linalg.norm(m, 2):
            return n, vv[:, 0].reshape(n + 1, -1), float(w)
    return window, None, float(w)  # pragma: no cover - principal submatrices of a PSD matrix


def _matrix_poly(coeffs, b):
    out = np.zeros_like(b)
    eye = np.eye(b.shape[0])
    for c in coeffs[::-1]:
        out = out @ b + c * eye
    return out


@dataclass
class RhoCertificate:
    status: str  # "no_with_witness" | "consistent_at_window_N"
    rho: float
    window: int
    route: str
    level_status: list
    min_eigs: list
    window_witness: dict | None = None
    polynomial_witness: dict | None = None
    polynomials_tested: int = 0

    @property
    def consistent(self) -> bool:
        return self.status == "consistent_at_window_N"

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "rho": self.rho,
            "window": self.window,
            "route": self.route,
            "level_status": list(self.level_status),
            "min_eigs": [None if not np.isfinite(x) else x for x in self.min_eigs],
            "polynomials_tested": self.polynomials_tested,
            "note": "a grid-sampled polynomial test can certify violation only, never validity",
        }
        if self.window_witness is not None:
            out["window_witness"] = self.window_witness
        if self.polynomial_witness is not None:
            out["polynomial_witness"] = self.polynomial_witness
        return out


def rho_contraction_check(
    t: LocalOperator,
    rho: float,
    window: int,
    n_polys: int = 64,
    grid_points: int = GRID_POINTS,
    seed: int = 0,
    tol_psd: float = TOL_PSD,
    route: str = "blocks",
) -> RhoCertificate:
    """Two semi-decisions about a unitary rho-dilation of T.

    (a) the windowed rho-split Gram matrix on {0..window} must be positive
    at every level; (b) for sampled polynomials p of degree <= window,
    ||p(T_lam)|| may not exceed the sup over the unit circle of
    |rho p(z) + (1 - rho) p(0)|, estimated on a grid and inflated by a
    Lipschitz bound.  Either failure certifies that no rho-dilation exists.
    """
    rho = float(rho)
    window = int(window)
    if not t.is_square:
        raise StructuralError("rho-contraction check needs an operator on a single tower")
    if rho <= 0 or window < 1:
        raise ValueError("rho must be positive and window at least 1")
    if route == "blocks":
        mats = list(t.blocks)
    elif route == "levels":
        mats = t.levels()
    else:
        raise ValueError(f"unknown route {route!r}")

    min_eigs, fails = [], []
    window_witness = None
    for i, b in enumerate(mats):
        n_fail, vec, w = _window_status(b, rho, window, tol_psd)
        min_eigs.append(w)
        fails.append(n_fail is not None)
        if n_fail is not None and window_witness is None:
            lam = i
            d = t.source.dims[lam]
            if route == "blocks":
                h = np.zeros((n_fail + 1, d), dtype=complex)
                h[:, t.source.offsets[i]:] = vec
            else:
                h = vec
            window_witness = {"level": lam, "window": n_fail, "vectors": [{"re": x.real.tolist(), "im": x.imag.tolist()} for x in h]}
    rng = np.random.default_rng(seed)
    polys = [np.eye(window + 1)[n] for n in range(1, window + 1)]
    polys += list(rng.standard_normal((n_polys, window + 1)) + 1j * rng.standard_normal((n_polys, window + 1)))
    grid = np.exp(2j * np.pi * np.arange(grid_points) / grid_points)
    poly_witness = None
    for p in polys:
        q = np.asarray(p, dtype=complex) * rho
        q[0] = p[0]
        # |dq/dtheta| <= sum j |q_j|; every circle point is within pi/grid of a sample
        slack = (np.pi / grid_points) * float(np.sum(np.arange(len(q)) * np.abs(q)))
        bound = _kernels.circle_max(q, grid) + slack
        for i, b in enumerate(mats):
            if b.size == 0:
                continue
            val = float(np.linalg.norm(_matrix_poly(p, b), 2))
            if val > bound * (1.0 + 1e-12) + 1e-12:
                fails[i] = True
                if poly_witness is None:
                    poly_witness = {
                        "level": i,
                        "coeffs": {"re": np.real(p).tolist(), "im": np.imag(p).tolist()},
                        "norm": val,
                        "bound": bound,
                    }
    level_fail = np.logical_or.accumulate(fails).tolist() if route == "blocks" else fails
    status = "no_with_witness" if window_witness or poly_witness else "consistent_at_window_N"
    statuses = ["no" if f else "consistent" for f in level_fail]
    return RhoCertificate(
        status, rho, window, route, statuses, min_eigs, window_witness, poly_witness, len(polys)
    )
