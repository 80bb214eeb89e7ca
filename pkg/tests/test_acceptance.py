"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -v tests/test_acceptance.py``.  Oracles are kept
independent of the code under test where possible: eigenvalue counts, closed
forms, construction-time values and direct rank or singular-value checks.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.linalg import expm

from sfmaslov import bifurcate as bf
from sfmaslov import grassmann as gr
from sfmaslov import parametrix as px
from sfmaslov import reduction as rd
from sfmaslov import spectral as sp
from sfmaslov import symlin as sl
from sfmaslov.spectral import OperatorPath

from conftest import (admissible, morse_count, random_admissible_path, single_crossing_path, sym)

TAU_INV = 1e-8
TAU_GAP = 1e-8


@pytest.fixture
def announce(capsys):
    def _announce(number, title, ok, detail, started):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{time.time() - started:.1f}s]"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return _announce


def four_methods(path):
    return (sp.spectral_flow_morse(path).value,
            sp.spectral_flow_crossings(path).value,
            sp.spectral_flow_maslov(path).value,
            sp.eigenvalue_tracking_oracle(path))


# ---------------------------------------------------------------------------

def test_01_four_way_agreement(announce):
    t0 = time.time()
    rng = np.random.default_rng(1001)
    bad, hist = [], {}
    for i in range(500):
        n = int(rng.integers(1, 9))
        p = random_admissible_path(rng, n)
        v = four_methods(p)
        hist[v[0]] = hist.get(v[0], 0) + 1
        if len(set(v)) != 1:
            bad.append((i, n, v))
    announce(1, "four-way sf agreement", not bad,
             f"500 paths, {len(bad)} disagreements, sf histogram {dict(sorted(hist.items()))}", t0)


def test_02_crossing_form_law(announce):
    t0 = time.time()
    rng = np.random.default_rng(1002)
    bad = 0
    sigs = {}
    for _ in range(200):
        m = int(rng.integers(1, 5))
        signs = list(rng.choice([-1, 1], size=m))
        n = int(rng.integers(m, 9))
        path, expected = single_crossing_path(rng, n, signs)
        res = sp.spectral_flow_crossings(path)
        got = (res.value, sp.spectral_flow_maslov(path).value, sp.spectral_flow_morse(path).value)
        ok = len(res.crossings) == 1 and res.crossings[0].kernel_dim == m and set(got) == {expected}
        bad += not ok
        sigs[expected] = sigs.get(expected, 0) + 1
    announce(2, "crossing-form law", bad == 0,
             f"200 single-crossing paths, {bad} mismatches, signatures {dict(sorted(sigs.items()))}", t0)


def test_03_relative_morse_identity(announce):
    t0 = time.time()
    rng = np.random.default_rng(1003)
    bad = 0
    for i in range(200):
        n = int(rng.integers(1, 9))
        if i % 2:
            # shared eigenbasis: highly non-generic intersections
            Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
            Aa = (Q * (rng.choice([-1, 1], n) * rng.uniform(0.5, 2, n))) @ Q.T
            Ab = (Q * (rng.choice([-1, 1], n) * rng.uniform(0.5, 2, n))) @ Q.T
        else:
            Aa, Ab = sym(rng.standard_normal((n, n))), sym(rng.standard_normal((n, n)))
        bad += sp.relative_morse_index(Aa, Ab) != morse_count(Aa) - morse_count(Ab)
    announce(3, "relative Morse identity", bad == 0, f"200 pairs, {bad} mismatches", t0)


def _unitary_path(rng, n, strength):
    S = strength * sym(rng.standard_normal((n, n)))
    Z0 = sl.random_lagrangian(n, rng)
    Z0 = Z0[:n] + 1j * Z0[n:]

    def f(t):
        Z = expm(1j * t * S) @ Z0
        return np.vstack([Z.real, Z.imag])

    return gr.LagrangianPath(f, 0.0, 1.0, n_grid=65)


def test_04_hormander_consistency(announce):
    t0 = time.time()
    rng = np.random.default_rng(1004)
    bad_routes, values = 0, []
    for _ in range(100):
        n = int(rng.integers(1, 5))
        L0, L1, M0, M1 = (sl.random_lagrangian(n, rng) for _ in range(4))
        h1 = gr.hormander_index(L0, L1, M0, M1)
        h2 = gr.hormander_index_via_path(L0, L1, M0, M1)
        bad_routes += h1 != h2
        values.append(h1)
    bad_paths, nonzero = 0, 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        L0, L1 = sl.random_lagrangian(n, rng), sl.random_lagrangian(n, rng)
        path = _unitary_path(rng, n, 3.0)
        lhs = gr.relative_maslov_index(path, L1) - gr.relative_maslov_index(path, L0)
        rhs = gr.hormander_index(L0, L1, path.frame(path.a), path.frame(path.b))
        bad_paths += lhs != rhs
        nonzero += lhs != 0
    announce(4, "Hörmander consistency", bad_routes == 0 and bad_paths == 0,
             f"routes: 100 quadruples, {bad_routes} mismatches, values {sorted(set(values))}; "
             f"change of reference: 100 paths, {bad_paths} mismatches ({nonzero} nonzero)", t0)


def _nested(rng, n):
    L = sl.random_lagrangian(n, rng)
    r1 = int(rng.integers(2, n))
    I1 = L[:, :r1]
    r2 = int(rng.integers(1, r1))
    I2 = I1 @ np.linalg.qr(rng.standard_normal((r1, r2)))[0]
    return I1, I2


def _reduction_loop(rng, n):
    """Loop clean mod I x {0}: windings w_j on F x F, a moving graph over I."""
    f = int(rng.integers(1, n))
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    F, Ib = Q[:, :f], Q[:, f:]
    w = rng.integers(-2, 3, size=f)
    C0 = sym(rng.standard_normal((n - f, n - f)))
    C0 = C0 + (np.abs(np.linalg.eigvalsh(C0)).max() + 2.0) * np.eye(n - f)
    C1 = sym(rng.standard_normal((n - f, n - f)))
    C1 /= np.linalg.norm(C1, 2)
    G = np.linalg.qr(rng.standard_normal((f, f)))[0]

    def frame(t):
        th = np.pi * w * t
        C = C0 + np.sin(2 * np.pi * t) * C1
        top = np.hstack([F @ G @ np.diag(np.cos(th)), Ib])
        bot = np.hstack([F @ G @ np.diag(np.sin(th)), Ib @ C])
        return np.vstack([top, bot])

    return gr.LagrangianPath(frame, 0.0, 1.0, n_grid=129), Ib, int(w.sum())


def test_05_reduction_laws(announce):
    t0 = time.time()
    rng = np.random.default_rng(1005)
    worst_compose, worst_inverse, bad_check = 0.0, 0.0, 0
    for _ in range(50):
        n = int(rng.integers(3, 7))
        I1, I2 = _nested(rng, n)
        # I = I1 ∩ I2^⊥
        I = I1 @ sl.null_space(I2.T @ I1)
        ctx1, ctx2 = rd.build_context(I1), rd.build_context(I2)
        ctx = rd.build_context(I, ambient=ctx2.space)
        Ls = [sl.random_lagrangian(n, rng) for _ in range(5)]
        for L in Ls:
            one = rd.reduce_lagrangian(ctx1, L)
            two = rd.reduce_lagrangian(ctx, rd.reduce_lagrangian(ctx2, L))
            worst_compose = max(worst_compose, sl.gap(one, two))
        bad_check += not rd.compose_check(I1, I2, Ls)
        for c in (ctx1, ctx2):
            for _ in range(3):
                R = c.from_coords(sl.random_lagrangian(c.dim, rng))
                worst_inverse = max(worst_inverse, sl.gap(rd.reduce_lagrangian(c, rd.extend_lagrangian(c, R)), R))
    bad_loops = 0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        loop, Ib, expected = _reduction_loop(rng, n)
        ctx = rd.reduced_path_context(Ib, n)
        red = gr.LagrangianPath(lambda t: ctx.coords(rd.reduce_lagrangian(ctx, loop.frame(t))),
                                0.0, 1.0, n_grid=129)
        full, reduced = gr.maslov_loop_index(loop), gr.maslov_loop_index(red)
        bad_loops += not (full == reduced == expected)
    ok = worst_compose < TAU_GAP and worst_inverse < TAU_GAP and bad_check == 0 and bad_loops == 0
    announce(5, "reduction laws", ok,
             f"50 nested configs: max gap composition {worst_compose:.1e}, ρ∘ε {worst_inverse:.1e}, "
             f"compose_check failures {bad_check}; 50 loops, {bad_loops} index mismatches", t0)


def test_06_suspension_invariance(announce):
    t0 = time.time()
    rng = np.random.default_rng(1006)
    bad, sigs = 0, set()
    for _ in range(100):
        n = int(rng.integers(1, 5))
        L0, M, L1 = (sl.random_lagrangian(n, rng) for _ in range(3))
        s = gr.triple_signature(L0, M, L1)
        sigs.add(s)
        for k in (1, 2, 3):
            bad += gr.triple_signature(*gr.suspend_triple(L0, M, L1, k)) != s
    codiag = [gr.triple_signature(sl.h0_frame(2 * k), gr.codiagonal(k), sl.h1_frame(2 * k)) for k in (1, 2, 3)]
    announce(6, "suspension invariance", bad == 0 and codiag == [0, 0, 0],
             f"100 triples x k=1..3, {bad} mismatches, signatures seen {sorted(sigs)}; co-diagonal {codiag}", t0)


def _crossing_count(path, m=2001):
    """Independent count of interior sign changes of sorted eigenvalues."""
    ev = np.array([np.linalg.eigvalsh(path.matrix(x)) for x in np.linspace(path.a, path.b, m)])
    return int(np.sum(np.sign(ev[1:]) != np.sign(ev[:-1])))


def _parametrix_case(rng):
    while True:
        n = int(rng.integers(2, 13))
        m = int(rng.integers(0, min(3, n) + 1))
        c = rng.uniform(-0.8, 0.8, m)
        slope = rng.choice([-1, 1], m) * rng.uniform(0.5, 2.0, m)
        rest = rng.choice([-1, 1], n - m) * rng.uniform(1.0, 3.0, n - m)
        S = rng.standard_normal((n, n))
        S = 0.5 * (S - S.T)
        Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
        G0, G1 = 0.05 * sym(rng.standard_normal((n, n))), 0.05 * sym(rng.standard_normal((n, n)))

        def A(x, c=c, slope=slope, rest=rest, S=S, Q=Q, G0=G0, G1=G1):
            R = expm(0.5 * x * S) @ Q
            return sym(R @ np.diag(np.concatenate([slope * (x - c), rest])) @ R.T + G0 + x * G1)

        p = OperatorPath(A, -1.0, 1.0)
        if admissible(p, 1e-2) and _crossing_count(p) <= 3:
            return p


def test_07_parametrix_certificate(announce):
    t0 = time.time()
    rng = np.random.default_rng(1007)
    fails, worst_ratio, methods, dims = [], np.inf, {}, []
    for i in range(50):
        p = _parametrix_case(rng)
        pp = px.parametrix_path(p)
        F = pp.F
        P = F @ F.T
        ts = px.refine(pp.grid, 10)
        scale = max(1.0, max(np.linalg.norm(p.matrix(t), 2) for t in ts))
        smin, image_err, rank_ok = np.inf, 0.0, True
        for j, t in enumerate(ts):
            K = pp.K(t)
            smin = min(smin, np.linalg.svd(p.matrix(t) + K, compute_uv=False)[-1])
            image_err = max(image_err, np.linalg.norm(K - P @ K @ P) / max(1.0, np.linalg.norm(K)))
            if j % 10 == 0:
                rank_ok &= np.linalg.matrix_rank(K) <= F.shape[1]
        ok = smin > TAU_INV * scale and image_err < 1e-10 and rank_ok
        worst_ratio = min(worst_ratio, smin / (TAU_INV * scale))
        methods[pp.method] = methods.get(pp.method, 0) + 1
        dims.append((p.n, F.shape[1]))
        if not ok:
            fails.append((i, smin, image_err, rank_ok))
    announce(7, "parametrix certificate", not fails,
             f"50 paths (n ≤ 12, ≤ 3 crossings), {len(fails)} failures, worst σ_min/τ_inv·scale "
             f"{worst_ratio:.2e}, methods {methods}, max dim F {max(d for _, d in dims)}", t0)


def test_08_bifurcation_pipeline(announce):
    t0 = time.time()
    fam = bf.sturm_liouville_family(N=200, length=np.pi, interval=(0.5, 9.5), nonlinearity="cubic")
    rep = bf.analyze(fam)
    exact = bf.discrete_dirichlet_eigenvalues(200, np.pi)[:3]
    cert = rep.certified
    lams = np.array([c.lam for c in cert])
    near = len(cert) == 3 and np.all(np.abs(lams - exact) / exact < 0.01) \
        and np.all(np.abs(lams - np.array([1.0, 4.0, 9.0])) / np.array([1.0, 4.0, 9.0]) < 0.01)
    br = rep.verified_branches
    exps = [b.exponent for b in br]
    res = max((s[2] for b in br for s in b.samples), default=np.inf)
    ok = (near and rep.total_sf == -3 and rep.guaranteed_count == 3 and len(br) == 3
          and all(b.verified for b in br) and all(abs(e - 0.5) <= 0.1 for e in exps) and res < 1e-10)
    announce(8, "bifurcation pipeline", ok,
             f"candidates {np.round(lams, 6).tolist()} vs discrete {np.round(exact, 6).tolist()}, "
             f"totalSf {rep.total_sf}, guaranteed {rep.guaranteed_count}, "
             f"exponents {[round(e, 4) for e in exps]}, max residual {res:.1e}", t0)


def test_09_homotopy_invariance(announce):
    t0 = time.time()
    rng = np.random.default_rng(1009)
    bad, moved = 0, 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        p = random_admissible_path(rng, n)
        base = four_methods(p)
        gap_a = np.min(np.abs(np.linalg.eigvalsh(p.matrix(p.a))))
        gap_b = np.min(np.abs(np.linalg.eigvalsh(p.matrix(p.b))))
        B0, B1 = sym(rng.standard_normal((n, n))), sym(rng.standard_normal((n, n)))
        nb = max(np.linalg.norm(B0 - B1, 2), np.linalg.norm(B0 + B1, 2))
        # s·eps·B keeps both endpoints invertible for every s in [0, 1]
        eps = 0.9 * min(gap_a, gap_b) / nb

        def B(x, B0=B0, B1=B1):
            return B0 + x * B1

        q = p.perturbed(B, eps)
        new = four_methods(q)
        bad += len(set(base + new)) != 1
        moved += not np.allclose(sp.singular_set(p), sp.singular_set(q)) if len(sp.singular_set(p)) == len(sp.singular_set(q)) else 1
    announce(9, "homotopy invariance", bad == 0,
             f"100 perturbations, {bad} changed values ({moved} moved the singular set)", t0)


def test_10_cli_determinism(announce, tmp_path):
    t0 = time.time()
    configs = {
        "sf": {"kind": "random-seeded", "dimension": 5, "degree": 3},
        "maslov": {"kind": "random-seeded", "dimension": 3},
        "parametrix": {"kind": "random-seeded", "dimension": 6},
        "bifurcate": {"kind": "sturm-liouville", "dimension": 120, "nonlinearity": {"name": "cubic"}},
        "flow-trace": {"kind": "random-seeded", "dimension": 4, "samples": 50},
    }
    diffs, codes = [], {}
    for sub, cfg in configs.items():
        cpath = tmp_path / f"{sub}.json"
        cpath.write_text(json.dumps(cfg))
        blobs = []
        for run in range(2):
            out = tmp_path / f"{sub}-{run}"
            r = subprocess.run([sys.executable, "-m", "sfmaslov", sub, "--config", str(cpath),
                                "--out", str(out), "--seed", "20240"], capture_output=True)
            codes[sub] = r.returncode
            blobs.append({f: (out / f).read_bytes() for f in sorted(os.listdir(out))})
        if blobs[0] != blobs[1] or not blobs[0]:
            diffs.append(sub)
    announce(10, "CLI determinism", not diffs,
             f"{len(configs)} subcommands run twice, byte differences in {diffs or 'none'}, exit codes {codes}", t0)
