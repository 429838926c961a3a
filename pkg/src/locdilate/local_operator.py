"""Operators between towers, stored as increment blocks.

An inductive system {T_lam} compatible with the inclusions is exactly a
block-diagonal matrix with respect to the dimension increments, so a
``LocalOperator`` keeps one block per increment and builds level matrices on
demand.  Every algebraic operation acts blockwise.
"""
from __future__ import annotations

import numpy as np

from ._json import matrix_from_json, matrix_to_json
from .errors import CompatibilityError, PreconditionError, StructuralError
from .tower import LocalVector, Tower

TOL_STRUCT = 1e-12
TOL_PSD = 1e-9
TOL_FLAG = 1e-9

FLAGS = (
    "self_adjoint",
    "positive",
    "projection",
    "normal",
    "isometry",
    "coisometry",
    "partial_isometry",
    "unitary",
    "invertible",
    "contraction",
)
SQUARE_ONLY = frozenset({"self_adjoint", "positive", "projection", "normal"})


def _opnorm(m) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def _frozen(m):
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return m


class LocalOperator:
    """T in L(source, target), both towers indexed by the same chain of levels."""

    __slots__ = ("source", "target", "blocks")

    def __init__(self, source: Tower, target: Tower, blocks):
        if source.n_levels != target.n_levels:
            raise StructuralError(
                f"source has {source.n_levels} levels but target has {target.n_levels}"
            )
        blocks = tuple(_frozen(b) for b in blocks)
        if len(blocks) != source.n_levels:
            raise StructuralError(f"expected {source.n_levels} blocks, got {len(blocks)}")
        for k, (b, r, c) in enumerate(zip(blocks, target.increments, source.increments)):
            if b.ndim != 2 or b.shape != (r, c):
                raise StructuralError(f"block {k} has shape {b.shape}, expected {(r, c)}")
        self.source = source
        self.target = target
        self.blocks = blocks

    # -- constructors --------------------------------------------------------

    @classmethod
    def identity(cls, tower: Tower) -> LocalOperator:
        return cls(tower, tower, [np.eye(d) for d in tower.increments])

    @classmethod
    def zeros(cls, source: Tower, target: Tower) -> LocalOperator:
        return cls(source, target, [np.zeros((r, c)) for r, c in zip(target.increments, source.increments)])

    @classmethod
    def embedding(cls, tower: Tower, lam: int) -> LocalOperator:
        """The locally isometric inclusion J_lam of H_lam into the whole tower."""
        sub = tower.truncated(lam)
        return cls(
            sub,
            tower,
            [np.eye(r, c) for r, c in zip(tower.increments, sub.increments)],
        )

    @classmethod
    def from_levels(cls, source: Tower, target: Tower, mats, tol: float = TOL_STRUCT) -> LocalOperator:
        """Ingest a level system {T_lam}, checking the nesting relations.

        For each pair lam < mu, T_mu must restrict to T_lam on H_lam and
        must commute with the projections onto H_lam; the first pair where
        either fails raises ``CompatibilityError``.
        """
        mats = [np.asarray(m, dtype=complex) for m in mats]
        if len(mats) != source.n_levels or source.n_levels != target.n_levels:
            raise StructuralError("one matrix per level is required and towers must share the level chain")
        for lam, m in enumerate(mats):
            if m.shape != (target.dims[lam], source.dims[lam]):
                raise StructuralError(
                    f"level {lam} matrix has shape {m.shape}, expected {(target.dims[lam], source.dims[lam])}"
                )
        eps = tol * (1.0 + max(_opnorm(m) for m in mats))
        for lam in range(len(mats)):
            c, r = source.dims[lam], target.dims[lam]
            for mu in range(lam + 1, len(mats)):
                big = mats[mu]
                # T_mu J = J T_lam  and  T_mu P = P T_mu
                off = max(
                    _opnorm(big[:r, :c] - mats[lam]),
                    _opnorm(big[r:, :c]),
                    _opnorm(big[:r, c:]),
                )
                if off > eps:
                    raise CompatibilityError(
                        f"levels ({lam}, {mu}) are not compatible: off-block norm {off:.3e} exceeds {eps:.3e}",
                        pair=(lam, mu),
                        offending_norm=off,
                    )
        top = mats[-1]
        blocks = [top[target.increment_slice(k), source.increment_slice(k)] for k in range(source.n_levels)]
        return cls(source, target, blocks)

    # -- views ---------------------------------------------------------------

    @property
    def is_square(self) -> bool:
        return self.source == self.target

    def level(self, lam: int) -> np.ndarray:
        """The matrix T_lam acting from level lam of the source to level lam of the target."""
        self.source.check_level(lam)
        out = np.zeros((self.target.dims[lam], self.source.dims[lam]), dtype=complex)
        for k in range(lam + 1):
            out[self.target.increment_slice(k), self.source.increment_slice(k)] = self.blocks[k]
        return out

    def levels(self) -> list[np.ndarray]:
        return [self.level(lam) for lam in range(self.source.n_levels)]

    def to_matrix(self) -> np.ndarray:
        return self.level(self.source.top)

    def block_norms(self) -> list[float]:
        return [_opnorm(b) for b in self.blocks]

    def seminorms(self) -> list[float]:
        """||T||_lam for every level; non-decreasing."""
        return np.maximum.accumulate(np.asarray(self.block_norms(), dtype=float)).tolist()

    def seminorm(self, lam: int) -> float:
        self.source.check_level(lam)
        return self.seminorms()[lam]

    def norm(self) -> float:
        """Largest seminorm, i.e. the top-level operator norm."""
        return max(self.block_norms(), default=0.0)

    # -- algebra -------------------------------------------------------------

    def adjoint(self) -> LocalOperator:
        return LocalOperator(self.target, self.source, [b.conj().T for b in self.blocks])

    @property
    def H(self) -> LocalOperator:
        return self.adjoint()

    def __matmul__(self, other):
        if isinstance(other, LocalOperator):
            return compose(self, other)
        if isinstance(other, LocalVector):
            return self.apply(other)
        return NotImplemented

    def _check_same(self, other):
        if not isinstance(other, LocalOperator):
            raise TypeError("expected a LocalOperator")
        if other.source != self.source or other.target != self.target:
            raise StructuralError("operators act between different towers")

    def __add__(self, other):
        self._check_same(other)
        return LocalOperator(self.source, self.target, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check_same(other)
        return LocalOperator(self.source, self.target, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LocalOperator(self.source, self.target, [scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return self * -1.0

    def __eq__(self, other):
        return (
            isinstance(other, LocalOperator)
            and self.source == other.source
            and self.target == other.target
            and all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))
        )

    __hash__ = None

    def __repr__(self):
        return f"LocalOperator(source={self.source.dims}, target={self.target.dims})"

    def allclose(self, other, atol=1e-10) -> bool:
        return (self - other).norm() <= atol

    def apply(self, h: LocalVector) -> LocalVector:
        if h.tower != self.source:
            raise StructuralError("vector does not live in the source tower")
        return LocalVector(self.target, h.level, self.level(h.level) @ h.coords)

    def inverse(self, tol: float = TOL_FLAG) -> LocalOperator:
        """Blockwise inverse; raises if some block is singular or not square."""
        if "invertible" not in classify(self, ("invertible",), tol=tol):
            raise PreconditionError("operator is not invertible at every level")
        return LocalOperator(self.target, self.source, [np.linalg.inv(b) if b.size else b.T for b in self.blocks])

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "blocks": [matrix_to_json(b) for b in self.blocks],
        }

    @classmethod
    def from_json(cls, obj, tol: float = TOL_STRUCT) -> LocalOperator:
        if not isinstance(obj, dict):
            raise StructuralError("operator must be a JSON object")
        if "tower" in obj:
            source = target = Tower.from_json(obj["tower"])
        else:
            try:
                source = Tower.from_json(obj["source"])
                target = Tower.from_json(obj["target"])
            except KeyError as exc:
                raise StructuralError(f"operator is missing field {exc}") from None
        if "blocks" in obj:
            return cls(source, target, [matrix_from_json(m) for m in obj["blocks"]])
        if "levels" in obj:
            return cls.from_levels(source, target, [matrix_from_json(m) for m in obj["levels"]], tol=tol)
        raise StructuralError("operator needs either 'blocks' or 'levels'")


def adjoint(t: LocalOperator) -> LocalOperator:
    return t.adjoint()


def compose(s: LocalOperator, t: LocalOperator) -> LocalOperator:
    """The product S T (apply T first)."""
    if t.target != s.source:
        raise StructuralError(
            f"cannot compose: target {t.target.dims} of the right factor differs from source {s.source.dims}"
        )
    return LocalOperator(t.source, s.target, [a @ b for a, b in zip(s.blocks, t.blocks)])


def direct_sum(ops) -> LocalOperator:
    """Levelwise direct sum; each increment block of the result is block diagonal."""
    ops = list(ops)
    src = Tower(tuple(sum(o.source.dims[k] for o in ops) for k in range(ops[0].source.n_levels)))
    tgt = Tower(tuple(sum(o.target.dims[k] for o in ops) for k in range(ops[0].target.n_levels)))
    blocks = []
    for k in range(src.n_levels):
        parts = [o.blocks[k] for o in ops]
        rows = sum(p.shape[0] for p in parts)
        cols = sum(p.shape[1] for p in parts)
        b = np.zeros((rows, cols), dtype=complex)
        r = c = 0
        for p in parts:
            b[r:r + p.shape[0], c:c + p.shape[1]] = p
            r += p.shape[0]
            c += p.shape[1]
        blocks.append(b)
    return LocalOperator(src, tgt, blocks)


# -- classification --------------------------------------------------------

def matrix_flags(m, flags=FLAGS, tol: float = TOL_FLAG) -> frozenset:
    """Which of ``flags`` hold for a single matrix.

    Residuals are spectral norms compared against ``tol`` times a scale of
    ``1 + ||m||`` (linear identities) or ``1 + ||m||**2`` (quadratic ones).
    """
    m = np.asarray(m, dtype=complex)
    rows, cols = m.shape
    square = rows == cols
    nrm = _opnorm(m)
    lin = tol * (1.0 + nrm)
    quad = tol * (1.0 + nrm * nrm)
    mh = m.conj().T
    out = set()
    cache = {}

    def gram():
        if "g" not in cache:
            cache["g"] = mh @ m
        return cache["g"]

    def cogram():
        if "c" not in cache:
            cache["c"] = m @ mh
        return cache["c"]

    def herm():
        if "h" not in cache:
            cache["h"] = square and _opnorm(m - mh) <= lin
        return cache["h"]

    def iso():
        return _opnorm(gram() - np.eye(cols)) <= quad

    def coiso():
        return _opnorm(cogram() - np.eye(rows)) <= quad

    for f in flags:
        if f == "self_adjoint":
            ok = herm()
        elif f == "positive":
            ok = herm() and (m.size == 0 or np.linalg.eigvalsh((m + mh) / 2)[0] >= -lin)
        elif f == "projection":
            ok = herm() and _opnorm(m @ m - m) <= quad
        elif f == "normal":
            ok = square and _opnorm(cogram() - gram()) <= quad
        elif f == "isometry":
            ok = iso()
        elif f == "coisometry":
            ok = coiso()
        elif f == "partial_isometry":
            p = gram()
            ok = _opnorm(p @ p - p) <= tol * (1.0 + nrm**4)
        elif f == "unitary":
            ok = square and iso() and coiso()
        elif f == "invertible":
            ok = square and (m.size == 0 or np.linalg.svd(m, compute_uv=False)[-1] > lin)
        elif f == "contraction":
            ok = nrm <= 1.0 + tol
        else:
            raise ValueError(f"unknown flag {f!r}")
        if ok:
            out.add(f)
    return frozenset(out)


def classify(t: LocalOperator, flags=None, tol: float = TOL_FLAG) -> frozenset:
    """Flags that hold for ``t`` at every level.

    With ``flags=None`` every applicable flag is tested; the square-only
    ones (self_adjoint, positive, projection, normal) are skipped for
    operators between different towers, and requesting them explicitly
    there is a ``StructuralError``.
    """
    if flags is None:
        flags = FLAGS if t.is_square else tuple(f for f in FLAGS if f not in SQUARE_ONLY)
    else:
        flags = tuple(flags)
        bad = [f for f in flags if f not in FLAGS]
        if bad:
            raise ValueError(f"unknown flags {bad}")
        if not t.is_square and SQUARE_ONLY.intersection(flags):
            raise StructuralError(
                f"flags {sorted(SQUARE_ONLY.intersection(flags))} need an operator on a single tower"
            )
    held = set(flags)
    for b in t.blocks:
        held &= matrix_flags(b, tuple(held), tol=tol)
        if not held:
            break
    return frozenset(held)


def fuglede_putnam_residual(n1: LocalOperator, n2: LocalOperator, s: LocalOperator, tol: float = TOL_FLAG) -> float:
    """max_lam || S N1^* - N2^* S ||_lam for normal N1, N2.

    Whenever S intertwines N1 and N2 the result is zero up to rounding.
    """
    for name, n in (("N1", n1), ("N2", n2)):
        if not n.is_square or "normal" not in classify(n, ("normal",), tol=tol):
            raise PreconditionError(f"{name} is not locally normal")
    return (s @ n1.H - n2.H @ s).norm()
