"""Acceptance suite: one check per criterion, each reporting a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import CRITERIA_LINES, seed_shell0  # noqa: E402
from sknet import gates as gt  # noqa: E402
from sknet import matcore as mc  # noqa: E402
from sknet import nets, skc  # noqa: E402

SLACK = 1e-9


def report(n, title, ok, detail):
    line = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    CRITERIA_LINES.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------------------
# criterion bodies
# ---------------------------------------------------------------------------


def unit_herm(d, g):
    return mc.random_hermitian(d, g, traceless=False)


def criterion_1():
    t0 = time.perf_counter()
    viol = [0, 0, 0, 0]
    trials = 0
    for d in (2, 3, 4, 8):
        eye = np.eye(d)
        for delta in (0.3, 0.1, 0.03):
            g = mc.rng(101, d, int(round(delta * 1000)))
            for _ in range(1000):
                trials += 1
                # commutator perturbation
                a = mc.mexp(delta * g.uniform(0.1, 1) * unit_herm(d, g))
                b = mc.mexp(delta * g.uniform(0.1, 1) * unit_herm(d, g))
                a2 = a @ mc.mexp(delta * g.uniform(0.1, 1) * unit_herm(d, g))
                b2 = b @ mc.mexp(delta * g.uniform(0.1, 1) * unit_herm(d, g))
                d1 = max(mc.dist(a, a2), mc.dist(b, b2))
                d2 = max(mc.dist(a, eye), mc.dist(b, eye))
                bound = 8 * d1 * d2 + 4 * d1 * d2**2 + 8 * d1**2 + 4 * d1**3 + d1**4
                viol[0] += mc.dist(mc.group_comm(a, b), mc.group_comm(a2, b2)) > bound + SLACK
                # exponential additivity, group vs matrix commutator, exp near I
                ha, hb = delta * unit_herm(d, g), delta * unit_herm(d, g)
                ea, eb = mc.mexp(ha), mc.mexp(hb)
                viol[1] += mc.dist(mc.mexp(ha + hb), ea @ eb) > delta**2 + SLACK
                viol[2] += mc.dist(mc.group_comm(ea, eb), mc.mexp(1j * mc.mat_comm(ha, hb))) > 4 * delta**3 + SLACK
                viol[3] += mc.dist(ea, eye) > mc.op_norm(ha) + SLACK
    secs = time.perf_counter() - t0
    ok = sum(viol) == 0 and secs < 120
    detail = f"{trials} trials, violations (perturbation, additivity, commutator, exp-vs-I) = {viol}, {secs:.1f}s"
    return report(1, "unitary perturbation bounds", ok, detail)


def criterion_2():
    t0 = time.perf_counter()
    worst_comm = 0.0
    worst_excess = -np.inf
    for d in range(2, 9):
        g = mc.rng(102, d)
        for _ in range(200):
            h = unit_herm(d, g)
            np.fill_diagonal(h, 0)
            h *= g.uniform(0.01, 2)
            p = skc.decompose_offdiag(h)
            worst_comm = max(worst_comm, mc.op_norm(mc.mat_comm(p.F, p.G) - 1j * h))
            bound = d**0.25 * math.sqrt((d - 1) / 2) * math.sqrt(mc.op_norm(h))
            worst_excess = max(worst_excess, max(mc.op_norm(p.F), mc.op_norm(p.G)) - bound)
    secs = time.perf_counter() - t0
    ok = worst_comm <= 1e-10 and worst_excess <= 1e-12 and secs < 30
    detail = f"max |[F,G]-iH| = {worst_comm:.2e}, max(norm - bound) = {worst_excess:.2e}, {secs:.1f}s"
    return report(2, "off-diagonal commutator construction", ok, detail)


def criterion_3():
    worst = 0.0
    for d in range(2, 9):
        g = mc.rng(103, d)
        for _ in range(100):
            v = g.standard_normal(d)
            m, _ = skc.offdiagonalize(np.diag(v - v.mean()))
            worst = max(worst, float(np.max(np.abs(np.diag(m)))))
    return report(3, "Fourier off-diagonalization", worst <= 1e-12, f"max |diag| = {worst:.2e}")


def criterion_4():
    ok = True
    parts = []
    for d in (2, 3, 4):
        c_gc1 = 8 * (d * (d - 1) / 2) ** 1.5
        xs, ys = [], []
        over = 0
        for eps in (1e-2, 1e-3, 1e-4):
            g = mc.rng(104, d, int(-math.log10(eps)))
            for _ in range(100):
                lam = mc.near_identity_sample(d, eps, g)
                _, cert = skc.decompose_lambda(lam, strict=False)
                over += cert.measured > c_gc1 * cert.eps**1.5
                xs.append(math.log(cert.eps))
                ys.append(math.log(cert.measured))
        slope = float(np.polyfit(xs, ys, 1)[0])
        ok &= over == 0 and 1.3 <= slope <= 1.7
        parts.append(f"d={d}: {over} over bound, slope {slope:.3f}")
    return report(4, "commutator-product certificate", ok, "; ".join(parts))


def run_c5(out: Path):
    t0 = time.perf_counter()
    eps0 = 1e-4
    worst = {1: 0.0, 2: 0.0, 3: 0.0}
    fails = {1: 0, 2: 0, 3: 0}
    results = []
    for t in range(20):
        u = mc.haar_sample(2, mc.rng(105, t))
        r = skc.sk_recurse(u, 3, skc.MockBackend(2, eps0, seed=t))
        results.append(r.to_json())
        for n in (1, 2, 3):
            bound = 10 * eps0 ** (1.5**n)
            worst[n] = max(worst[n], r.ledger[n].measured / bound)
            fails[n] += r.ledger[n].measured > bound
    (out / "c5_results.json").write_text(json.dumps(results, sort_keys=True) + "\n")
    secs = time.perf_counter() - t0
    ok = sum(fails.values()) == 0 and secs < 120
    detail = (
        f"targets over 10*eps0^(1.5^n) per level {fails}, worst measured/bound "
        + ", ".join(f"n={n}: {worst[n]:.3g}" for n in (1, 2, 3))
        + f", {secs:.1f}s"
    )
    return ok, detail


def run_c6(out: Path):
    gs = gt.standard_gateset(1)
    ex = nets.build_exhaustive(gs, nets.NetParams(q=2.0, epsilon=0.45, L=60, d=2), 8)
    hp = nets.NetParams(q=2**0.25, epsilon=0.05, L=60, d=2)
    hn, blog = nets.build_heuristic(gs, hp, seed_shell0(gs, hp))
    reports = nets.audit_net(ex, 50, 6) + nets.audit_net(hn, 50, 6)
    viol = sum(r.membership_violations + r.sparseness_violations + r.dist_mismatches for r in reports)
    (out / "c6_exhaustive.json").write_text(ex.dumps())
    (out / "c6_heuristic.json").write_text(hn.dumps())
    (out / "c6_heuristic.log").write_text(blog.to_text())
    (out / "c6_audit.json").write_text(json.dumps([r.to_json() for r in reports], sort_keys=True) + "\n")
    ok = viol == 0 and blog.division_failures == 0 and blog.terminated
    detail = (
        f"{viol} membership/sparseness/distance violations, "
        f"{blog.division_failures} of {blog.division_checks} division checks failed"
    )
    return ok, detail, hn


def run_c7(out: Path):
    gs = gt.standard_gateset(1)
    p = nets.NetParams(q=2.0, epsilon=0.45, L=60, d=2)
    net = nets.build_exhaustive(gs, p, 14)
    verified = all(r.verdict for r in nets.audit_net(net, 200, 7))
    cap = (p.k + 1) * net.max_word_length()
    worst = 0.0
    long = 0
    rows = []
    for j in range(100):
        v = mc.haar_sample(2, mc.rng(107, j))
        w, a = nets.zoom_synthesize(v, net)
        worst = max(worst, a)
        long += w.length > cap
        rows.append({"word": list(w.indices), "achieved": a})
    (out / "c7_zoom.json").write_text(json.dumps(rows, sort_keys=True) + "\n")
    ok = verified and worst <= p.delta(p.k) and long == 0
    detail = f"net verified {verified}, worst {worst:.4f} vs delta_k {p.delta(p.k):.4f}, {long} words over {cap} letters"
    return ok, detail


def criterion_8(heuristic_net):
    cards = [len(s) for s in heuristic_net.shells if s.non_identity() > 0]
    ok = bool(cards) and min(cards) >= 2 and max(cards) <= 200
    return report(8, "heuristic cardinality band", ok, f"non-empty shell cardinalities {cards} (band [2, 200])")


def run_5_to_7(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    c5 = run_c5(out)
    c6 = run_c6(out)
    c7 = run_c7(out)
    return c5, c6, c7


def criterion_9(first: Path):
    with tempfile.TemporaryDirectory() as tmp:
        second = Path(tmp)
        run_5_to_7(second)
        names = sorted(p.name for p in first.iterdir())
        diff = [n for n in names if (first / n).read_bytes() != (second / n).read_bytes()]
    ok = not diff and len(names) >= 6
    return report(9, "determinism", ok, f"{len(names)} result files compared, differing: {diff or 'none'}")


# ---------------------------------------------------------------------------
# pytest entry points
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    return out, run_5_to_7(out)


def test_criterion_1_perturbation_bounds():
    assert criterion_1()


def test_criterion_2_offdiag_commutator():
    assert criterion_2()


def test_criterion_3_fourier_offdiagonalization():
    assert criterion_3()


def test_criterion_4_certificate():
    assert criterion_4()


def test_criterion_5_recursion_contraction(first_run):
    ok, detail = first_run[1][0]
    assert report(5, "recursion contraction", ok, detail)


def test_criterion_6_builder_soundness(first_run):
    ok, detail, _ = first_run[1][1]
    assert report(6, "net builder soundness", ok, detail)


def test_criterion_7_zoom_contract(first_run):
    ok, detail = first_run[1][2]
    assert report(7, "zooming contract", ok, detail)


def test_criterion_8_cardinality_band(first_run):
    assert criterion_8(first_run[1][1][2])


def test_criterion_9_determinism(first_run):
    assert criterion_9(first_run[0])


def main():
    results = [criterion_1(), criterion_2(), criterion_3(), criterion_4()]
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        c5, c6, c7 = run_5_to_7(out)
        results.append(report(5, "recursion contraction", *c5))
        results.append(report(6, "net builder soundness", c6[0], c6[1]))
        results.append(report(7, "zooming contract", *c7))
        results.append(criterion_8(c6[2]))
        results.append(criterion_9(out))
    print(f"{sum(results)}/{len(results)} criteria passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
