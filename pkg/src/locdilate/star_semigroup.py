"""Finite abelian *-semigroups with a neutral element, given by tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import StructuralError


@dataclass(frozen=True)
class Violation:
    law: str
    witness: tuple
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: Violation | None = None

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True}
        v = self.violation
        return {"ok": False, "law": v.law, "witness": list(v.witness), "message": v.message}


@dataclass(frozen=True, eq=False)
class StarSemigroup:
    """Elements are 0..n-1; ``mul[a, b]`` is the product, ``star[a]`` the involution."""

    mul: np.ndarray
    star: np.ndarray
    e: int
    labels: tuple = field(default=None)

    def __post_init__(self):
        mul = np.array(self.mul, dtype=np.int64)
        star = np.array(self.star, dtype=np.int64).reshape(-1)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise StructuralError(f"multiplication table must be a non-empty square table, got shape {mul.shape}")
        n = mul.shape[0]
        if star.shape != (n,):
            raise StructuralError(f"involution must list {n} images, got {star.shape[0]}")
        if mul.min() < 0 or mul.max() >= n or star.min() < 0 or star.max() >= n:
            raise StructuralError("table entries must be element indices 0..n-1")
        if not 0 <= int(self.e) < n:
            raise StructuralError(f"neutral element {self.e} out of range")
        mul.setflags(write=False)
        star.setflags(write=False)
        labels = tuple(str(x) for x in self.labels) if self.labels is not None else tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise StructuralError("one label per element is required")
        object.__setattr__(self, "mul", mul)
        object.__setattr__(self, "star", star)
        object.__setattr__(self, "e", int(self.e))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.mul.shape[0]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return (
            isinstance(other, StarSemigroup)
            and np.array_equal(self.mul, other.mul)
            and np.array_equal(self.star, other.star)
            and self.e == other.e
        )

    __hash__ = None

    def product(self, *elems) -> int:
        acc = self.e
        for x in elems:
            acc = int(self.mul[acc, x])
        return acc

    def is_group_with_inverse_star(self) -> bool:
        """True when s* s = e for every s, i.e. a group whose involution is inversion."""
        return bool(np.all(self.mul[self.star, np.arange(self.n)] == self.e))

    def validate(self) -> ValidationReport:
        mul, star, e, n = self.mul, self.star, self.e, self.n
        idx = np.arange(n)
        for law, bad, msg in (
            ("neutral", np.nonzero((mul[e] != idx) | (mul[:, e] != idx))[0], "e is not neutral for {0}"),
            ("involution", np.nonzero(star[star] != idx)[0], "star(star({0})) != {0}"),
        ):
            if bad.size:
                a = int(bad[0])
                return ValidationReport(False, Violation(law, (a,), msg.format(a)))
        bad = np.argwhere(mul != mul.T)
        if bad.size:
            a, b = (int(x) for x in bad[0])
            return ValidationReport(
                False,
                Violation("commutativity", (a, b), f"mul({a},{b}) != mul({b},{a}); only abelian tables are supported"),
            )
        a, b, c = _kernels.first_assoc_violation(mul)
        if a >= 0:
            return ValidationReport(False, Violation("associativity", (a, b, c), f"({a}{b}){c} != {a}({b}{c})"))
        # (st)* = s* t*
        bad = np.argwhere(star[mul] != mul[star[:, None], star[None, :]])
        if bad.size:
            a, b = (int(x) for x in bad[0])
            return ValidationReport(False, Violation("star_product", (a, b), f"star(mul({a},{b})) != mul(star({a}),star({b}))"))
        return ValidationReport(True)

    def check(self) -> StarSemigroup:
        report = self.validate()
        if not report.ok:
            raise StructuralError(f"not an abelian *-semigroup: {report.violation.message}")
        return self

    def to_json(self) -> dict:
        return {"n": self.n, "mul": self.mul.tolist(), "star": self.star.tolist(), "e": self.e, "labels": list(self.labels)}

    @classmethod
    def from_json(cls, obj) -> StarSemigroup:
        if not isinstance(obj, dict):
            raise StructuralError("semigroup must be a JSON object")
        if "builtin" in obj:
            entry = obj["builtin"]
            return builtin(entry["kind"], **dict(entry.get("params", {})))
        try:
            sg = cls(obj["mul"], obj["star"], obj["e"], obj.get("labels"))
        except KeyError as exc:
            raise StructuralError(f"semigroup is missing field {exc}") from None
        if "n" in obj and int(obj["n"]) != sg.n:
            raise StructuralError(f"'n' is {obj['n']} but the table has {sg.n} rows")
        return sg


def powerset_intersection(m: int) -> StarSemigroup:
    """Subsets of {0..m-1} as bitmasks, intersection as product, identity star, e = full set."""
    if m < 0:
        raise ValueError("m must be non-negative")
    n = 1 << m
    idx = np.arange(n)
    labels = ["{" + ",".join(str(i) for i in range(m) if a >> i & 1) + "}" for a in range(n)]
    return StarSemigroup(idx[:, None] & idx[None, :], idx, n - 1, labels)


def cyclic_group(n: int) -> StarSemigroup:
    """Z_n under addition with s* = -s."""
    if n < 1:
        raise ValueError("n must be positive")
    idx = np.arange(n)
    return StarSemigroup((idx[:, None] + idx[None, :]) % n, (-idx) % n, 0)


def truncated_naturals(cap: int) -> StarSemigroup:
    """{0..cap} under saturating addition min(a + b, cap), identity star."""
    if cap < 0:
        raise ValueError("cap must be non-negative")
    idx = np.arange(cap + 1)
    return StarSemigroup(np.minimum(idx[:, None] + idx[None, :], cap), idx, 0)


BUILTINS = {
    "powerset_intersection": powerset_intersection,
    "cyclic_group": cyclic_group,
    "truncated_naturals": truncated_naturals,
}


def builtin(kind: str, *args, **params) -> StarSemigroup:
    try:
        factory = BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unsupported semigroup kind {kind!r}; known: {sorted(BUILTINS)}") from None
    return factory(*args, **params).check()
