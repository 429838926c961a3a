"""Exit criteria of the package.

Each criterion is a plain function returning ``(ok, detail)``; the pytest
wrappers print one PASS/FAIL line per criterion and the same lines are
repeated in the terminal summary.  ``python tests/test_acceptance.py`` runs
them without pytest.
"""
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from locdilate import (
    LocalOperator,
    Tower,
    classify,
    cyclic_group,
    dilate,
    intertwiner,
    is_lpdk,
    matrix_flags,
    naimark,
    powerset_intersection,
    rho_contraction_check,
    unitary_dilation,
)
from locdilate.testing import (
    complex_normal,
    random_contraction,
    random_cyclic_lpdf,
    random_gram_kernel,
    random_hermitian_kernel,
    random_isometry_matrix,
    random_operator,
    random_povm,
    random_psd,
    random_tower,
    random_unitary_matrix,
)

RESULTS = {}

pytestmark = pytest.mark.acceptance


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    RESULTS[k] = line
    print(line)
    return ok


def small_tower(rng):
    d0 = int(rng.integers(1, 3))
    return Tower((d0, int(rng.integers(d0, 5))))


# -- 1: operator algebra ---------------------------------------------------

def criterion_1(n=200, seed=1):
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        tower = random_tower(rng, max_levels=4, max_dim=32)
        mid = Tower(tuple(sorted(int(x) for x in rng.integers(1, 33, size=tower.n_levels))))
        t = random_operator(rng, tower, mid)
        s = random_operator(rng, mid, tower)
        worst = max(worst, (t.H.H - t).norm())
        worst = max(worst, ((s @ t).H - t.H @ s.H).norm())
        for lam, (a, b) in enumerate(zip((t.H @ t).seminorms(), t.seminorms())):
            worst = max(worst, abs(a - b * b) / (1.0 + b * b))
        for a, b, c in zip((s @ t).seminorms(), s.seminorms(), t.seminorms()):
            worst = max(worst, (a - b * c) / (1.0 + b * c))
        for lam in range(tower.n_levels):
            j_src, j_tgt = LocalOperator.embedding(tower, lam), LocalOperator.embedding(mid, lam)
            worst = max(worst, float(np.linalg.norm((j_tgt.H @ t @ j_src).to_matrix() - t.level(lam), 2)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10.0
    return ok, f"{n} instances, worst residual {worst:.2e}, {elapsed:.2f} s"


# -- 2: classification -----------------------------------------------------

def _make_block(rng, cls, r, c):
    if cls == "self_adjoint":
        a = complex_normal(rng, (r, r))
        return a + a.conj().T
    if cls == "positive":
        return random_psd(rng, r, int(rng.integers(0, r + 1)))
    if cls == "projection":
        q = random_unitary_matrix(rng, r)
        return (q * rng.integers(0, 2, size=r)) @ q.conj().T
    if cls == "normal":
        q = random_unitary_matrix(rng, r)
        return (q * complex_normal(rng, r)) @ q.conj().T
    if cls == "isometry":
        return random_isometry_matrix(rng, r, c)
    if cls == "coisometry":
        return random_isometry_matrix(rng, c, r).conj().T
    if cls == "unitary":
        return random_unitary_matrix(rng, r)
    if cls == "partial_isometry":
        k = min(r, c)
        return random_isometry_matrix(rng, r, k) @ np.diag(rng.integers(0, 2, size=k)) @ random_isometry_matrix(rng, c, k).conj().T
    if cls == "contraction":
        a = complex_normal(rng, (r, c))
        return a * rng.uniform(0.05, 1.0) / np.linalg.norm(a, 2)
    if cls == "invertible":
        return complex_normal(rng, (r, r)) + 0.5 * np.eye(r)
    raise ValueError(cls)


def _break_block(rng, cls, b):
    r, c = b.shape
    if cls == "self_adjoint":
        return b + 1j * np.eye(r)
    if cls == "positive":
        return b - (np.linalg.norm(b, 2) + 1.0) * np.eye(r)
    if cls in ("projection", "partial_isometry"):
        return b + 0.5 * np.eye(r, c)
    if cls == "normal":
        return b + 2.0 * np.eye(r, k=1)
    if cls in ("isometry", "coisometry", "unitary"):
        return 1.1 * b
    if cls == "contraction":
        return b * 1.5 / np.linalg.norm(b, 2)
    if cls == "invertible":
        b = b.copy()
        b[:, 0] = 0
        return b
    raise ValueError(cls)


RECTANGULAR = ("isometry", "coisometry", "partial_isometry", "contraction")


def criterion_2(per_class=100, seed=2):
    rng = np.random.default_rng(seed)
    mismatches = []
    for cls in ("self_adjoint", "positive", "projection", "normal", "isometry", "coisometry",
                "unitary", "partial_isometry", "contraction", "invertible"):
        for i in range(per_class):
            source = random_tower(rng, max_levels=4, max_dim=12, min_increment=2)
            target = source
            if cls in RECTANGULAR and i % 3 == 0:
                # isometries need at least as many rows, co-isometries at most as many
                inc = np.array(source.increments) + rng.integers(0, 3, size=source.n_levels)
                target = Tower(tuple(int(x) for x in np.cumsum(inc)))
                if cls == "coisometry":
                    source, target = target, source
            rows, cols = target.increments, source.increments
            blocks = [_make_block(rng, cls, r, c) for r, c in zip(rows, cols)]
            expected = True
            if i % 2:
                k = int(rng.integers(0, len(blocks)))
                blocks[k] = _break_block(rng, cls, blocks[k])
                expected = False
            op = LocalOperator(source, target, blocks)
            whole = cls in classify(op, (cls,))
            levels = all(cls in matrix_flags(op.level(lam), (cls,)) for lam in range(source.n_levels))
            if not (whole == levels == expected):
                mismatches.append((cls, i, whole, levels, expected))
    ok = not mismatches
    detail = f"10 classes x {per_class} instances, {len(mismatches)} mismatches"
    if mismatches:
        detail += f" (first: {mismatches[0]})"
    return ok, detail


# -- 3: three-way positive definiteness ------------------------------------

def criterion_3(n=100, seed=3):
    rng = np.random.default_rng(seed)
    disagreements, positives = 0, 0
    for i in range(n):
        tower = random_tower(rng, max_levels=3, max_dim=5)
        points = int(rng.integers(2, 5))
        if i % 3 == 0:
            k = random_gram_kernel(rng, points, tower, rank=int(rng.integers(1, 3)))
        else:
            k = random_hermitian_kernel(rng, points, tower, shift=float(rng.uniform(0.0, 8.0)))
        flags = [is_lpdk(k, route=r).ok for r in ("whole", "levels", "blocks")]
        disagreements += len(set(flags)) != 1
        positives += flags[0]
    ok = disagreements == 0 and 0 < positives < n
    return ok, f"{n} kernels ({positives} definite), {disagreements} disagreements"


# -- 4: dilation round trip --------------------------------------------------

def criterion_4(n=50, seed=4):
    rng = np.random.default_rng(seed)
    worst = {"representation": 0.0, "dilation": 0.0, "lbc": 0.0, "intertwiner": 0.0}
    failures = []
    for i in range(n):
        tower = small_tower(rng)
        if i % 2:
            phi = random_povm(rng, tower, 2).as_function()
            assert phi.semigroup == powerset_intersection(2)
        else:
            phi = random_cyclic_lpdf(rng, int(rng.integers(1, 5)), tower)
        a = dilate(phi, method="eigh")
        b = dilate(phi, method="cholesky")
        sg = phi.semigroup
        excess = 0.0
        for u in range(sg.n):
            for lam, nrm in enumerate(a.pi(u).seminorms()):
                excess = max(excess, nrm - a.lbc[u, lam] * (1 + 1e-8))
        worst["representation"] = max(worst["representation"], a.residuals["representation"])
        worst["dilation"] = max(worst["dilation"], a.residuals["dilation"])
        worst["lbc"] = max(worst["lbc"], excess)
        w, resid = intertwiner(a, b)
        worst["intertwiner"] = max(worst["intertwiner"], resid)
        if not (
            a.minimal
            and b.minimal
            and a.residuals["representation"] <= 1e-8
            and a.residuals["dilation"] <= 1e-8
            and excess <= 0.0
            and resid <= 1e-8
            and "unitary" in classify(w, ("unitary",))
        ):
            failures.append(i)
    ok = not failures
    return ok, f"{n} functions, worst {', '.join(f'{k} {v:.1e}' for k, v in worst.items())}, failures {failures}"


# -- 5: Naimark ---------------------------------------------------------------

def criterion_5(n=50, seed=5):
    rng = np.random.default_rng(seed)
    worst, dim_mismatch = 0.0, 0
    for _ in range(n):
        tower = small_tower(rng)
        povm = random_povm(rng, tower, int(rng.integers(1, 5)))
        sd = naimark(povm)
        ident = LocalOperator.identity(sd.dilation_tower)
        fs = sd.projections
        res = (sum(fs[1:], fs[0]) - ident).norm()
        for i, f in enumerate(fs):
            res = max(res, (f @ f - f).norm(), (f - f.H).norm(), (sd.J.H @ f @ sd.J - povm.atoms[i]).norm())
            for g in fs[i + 1:]:
                res = max(res, (f @ g).norm())
        worst = max(worst, res)
        dim_mismatch += dilate(povm.as_function()).dilation_tower != sd.dilation_tower
    ok = worst <= 1e-10 and dim_mismatch == 0
    return ok, f"{n} POVMs, worst residual {worst:.2e}, {dim_mismatch} dimension mismatches"


# -- 6: unitary dilation ----------------------------------------------------

def criterion_6(n=50, seed=6, horizon=8):
    rng = np.random.default_rng(seed)
    tower = Tower((1, 2, 4))
    start = time.perf_counter()
    worst_u, worst_c, not_unitary = 0.0, 0.0, 0
    for _ in range(n):
        t = random_contraction(rng, tower)
        ud = unitary_dilation(t, horizon)
        not_unitary += "unitary" not in classify(ud.U, ("unitary",), tol=1e-10)
        worst_u = max(worst_u, ud.residuals["unitary"])
        un = LocalOperator.identity(ud.U.source)
        for p in range(1, horizon + 1):
            un = ud.U @ un
            tp = [np.linalg.matrix_power(t.level(lam), p) for lam in range(tower.n_levels)]
            comp = ud.J.H @ un @ ud.J
            worst_c = max(worst_c, max(np.linalg.norm(comp.level(lam) - tp[lam], 2) for lam in range(tower.n_levels)))
    elapsed = time.perf_counter() - start
    ok = not_unitary == 0 and worst_u <= 1e-10 and worst_c <= 1e-8 and elapsed < 30.0
    return ok, f"{n} contractions, unitary residual {worst_u:.1e}, compression {worst_c:.1e}, {elapsed:.2f} s"


# -- 7: rho-dilation discrimination ---------------------------------------

def criterion_7(n=50, seed=7):
    rng = np.random.default_rng(seed)
    t2 = Tower((2,))
    nil = LocalOperator(t2, t2, [np.array([[0, 2], [0, 0]], dtype=complex)])
    no = rho_contraction_check(nil, 1.0, 1)
    nil_ok = no.status == "no_with_witness" and no.window_witness is not None and no.window_witness["window"] == 1
    nil_ok &= all(rho_contraction_check(nil, 2.0, w).consistent for w in range(1, 9))
    contraction_fail = 0
    for _ in range(n):
        c = random_contraction(rng, random_tower(rng, max_levels=3, max_dim=6))
        contraction_fail += not all(rho_contraction_check(c, 1.0, w, n_polys=16).consistent for w in range(1, 9))
    non_monotone = 0
    rhos = (0.25, 0.5, 1.0, 1.5, 2.0, 4.0)
    for _ in range(n):
        op = random_contraction(rng, random_tower(rng, max_levels=2, max_dim=4), max_norm=float(rng.uniform(0.5, 3.0)))
        flags = [rho_contraction_check(op, r, 6, n_polys=16).consistent for r in rhos]
        non_monotone += flags != sorted(flags)
    ok = nil_ok and contraction_fail == 0 and non_monotone == 0
    return ok, (
        f"nilpotent example {'as expected' if nil_ok else 'WRONG'}, "
        f"{contraction_fail}/{n} contractions flagged at rho=1, {non_monotone}/{n} non-monotone"
    )


# -- 8: CLI round trip -------------------------------------------------------

def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "locdilate", *argv], capture_output=True, text=True)


def criterion_8(tmp, seed=8):
    rng = np.random.default_rng(seed)
    inputs = {
        "dilate": (random_cyclic_lpdf(rng, 3, Tower((1, 2))).to_json(), [], "check-lpdf"),
        "naimark": (random_povm(rng, Tower((2, 4)), 3).to_json(), [], "check-operator"),
        "unitary-dilate": (random_contraction(rng, Tower((1, 2, 4))).to_json(), ["--horizon", "8"], "check-operator"),
    }
    problems = []
    for verb, (obj, extra, check) in inputs.items():
        src = tmp / f"{verb}.in.json"
        src.write_text(json.dumps(obj))
        outs = []
        for run in (1, 2):
            out = tmp / f"{verb}.{run}.json"
            proc = _cli(verb, str(src), *extra, "-o", str(out))
            if proc.returncode != 0:
                problems.append(f"{verb} exit {proc.returncode}: {proc.stderr.strip()}")
            outs.append(out)
        if outs[0].exists() and outs[1].exists() and outs[0].read_bytes() != outs[1].read_bytes():
            problems.append(f"{verb} output differs between runs")
        checks = []
        for run in (1, 2):
            chk = tmp / f"{verb}.check{run}.json"
            proc = _cli(check, str(outs[0]), "-o", str(chk))
            if proc.returncode != 0:
                problems.append(f"{check} on {verb} output exit {proc.returncode}")
            checks.append(chk)
        if all(c.exists() for c in checks) and checks[0].read_bytes() != checks[1].read_bytes():
            problems.append(f"{check} certificate differs between runs")
    ok = not problems
    return ok, "dilate, naimark, unitary-dilate re-validate, certificates byte-identical" if ok else "; ".join(problems)


# -- pytest wrappers ------------------------------------------------------------

@pytest.mark.parametrize("k", range(1, 8))
def test_criterion(k):
    ok, detail = globals()[f"criterion_{k}"]()
    assert report(k, ok, detail), detail


def test_criterion_8(tmp_path):
    ok, detail = criterion_8(tmp_path)
    assert report(8, ok, detail), detail


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    results = []
    for k in range(1, 8):
        results.append(report(k, *globals()[f"criterion_{k}"]()))
    with tempfile.TemporaryDirectory() as d:
        results.append(report(8, *criterion_8(Path(d))))
    sys.exit(0 if all(results) else 1)
