"""Acceptance criteria.

Each test appends one ``PASS``/``FAIL`` line (also printed) which the
terminal summary repeats under "acceptance criteria".
"""

import math
import time

import pytest

from conftest import ACCEPTANCE_LINES
from crplap.adapt import AdaptiveConfig, adaptive_loop
from crplap.assembly import CRSystem
from crplap.mesh import make_unit_square_mesh
from crplap.plap import solve_plaplacian
from crplap.verify import run_checks

# reference eigenvalues (fine-mesh reference rows)
LAMBDA_SQUARE = {1.5: 10.07279, 2.0: 19.73932, 2.5: 35.94814}
LAMBDA_LSHAPE = {1.5: 5.682982, 2.0: 9.640661, 2.5: 15.44342}
LSHAPE_P2 = 9.6397238389738806
LSHAPE_K = 8  # eight refinement levels keep the L-shape under 200k dof


def report(n, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {name} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


_runs = {}


def run(domain, p, K=None):
    key = (domain, p, K)
    if key not in _runs:
        kw = {} if K is None else {"K": K}
        t0 = time.perf_counter()
        trace = adaptive_loop(AdaptiveConfig(p=p, domain=domain, **kw))
        _runs[key] = (trace, time.perf_counter() - t0)
    return _runs[key]


def test_criterion_1_square_p2():
    trace, sec = run("square", 2.0)
    lam = 2 * math.pi**2
    mu, dof = trace.final.mu, trace.final.dof
    gap = abs(mu - lam) / lam
    ok = gap <= 5e-4 and mu <= lam and dof <= 80_000 and sec <= 120
    assert report(1, "square p=2", ok, f"mu={mu:.7f} gap={gap:.2e} dof={dof} {sec:.1f}s")


def test_criterion_2_lshape_p2():
    trace, sec = run("lshape", 2.0, LSHAPE_K)
    mu, dof = trace.final.mu, trace.final.dof
    gap = abs(mu - LSHAPE_P2) / LSHAPE_P2
    ok = 9.60 < mu <= 9.640661 and gap <= 5e-4 and dof <= 200_000 and sec <= 300
    assert report(2, "L-shape p=2", ok, f"mu={mu:.7f} gap={gap:.2e} dof={dof} {sec:.1f}s")


@pytest.mark.parametrize("domain", ["square", "lshape"])
@pytest.mark.parametrize("p", [1.5, 2.0, 2.5])
def test_criterion_3_lower_bound(domain, p):
    if domain == "square":
        trace, _ = run(domain, p)
        lam = LAMBDA_SQUARE[p]
    else:
        trace, _ = run(domain, p, LSHAPE_K)
        lam = LAMBDA_LSHAPE[p]
    e = trace.e_mu(lam)
    assert report(3, f"e_mu > 0 on {domain} p={p:g}", e > 0, f"e_mu={e:.4g}")


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5])
def test_criterion_4_from_below(p):
    trace, _ = run("square", p)
    lam = LAMBDA_SQUARE[p]
    worst = max(r.mu for r in trace.records)
    ok = all(r.mu <= lam * (1 + 1e-6) for r in trace.records)
    assert report(4, f"mu_k <= lambda_ref, square p={p:g}", ok, f"max mu={worst:.7f} ref={lam}")


def test_criterion_5_estimator_decay():
    trace, _ = run("square", 2.0)
    first, last = trace.records[0], trace.records[-1]
    total = (last.eta1 + last.eta2) / (first.eta1 + first.eta2)
    # the final level is not marked; its indicator maxima stand in for the
    # marked maxima (the greedy set always contains the argmax)
    r1 = last.eta1_max / first.marked_eta1_max
    r2 = last.eta2_max / first.marked_eta2_max
    ok = total <= 0.1 and r1 < 0.1 and r2 < 0.1
    assert report(5, "estimator decay", ok, f"total {total:.3g}, max eta1 {r1:.3g}, max eta2 {r2:.3g}")


def test_criterion_6_splitting_equivalence():
    t0 = time.perf_counter()
    mesh = make_unit_square_mesh(16)
    system = CRSystem(mesh)
    direct = system.solve(system.load(1.0))
    u = solve_plaplacian(mesh, 1.0, 2.0, system=system).interior
    err = system.l2_norm(u - direct) / system.l2_norm(direct)
    sec = time.perf_counter() - t0
    assert report(6, "p=2 splitting vs direct", err <= 1e-4 and sec <= 5, f"rel L2 {err:.2e} {sec:.2f}s")


def test_criterion_7_oracle_suite():
    results = run_checks(out=None)
    failed = [r.name for r in results if not r.passed]
    detail = f"{len(results) - len(failed)}/{len(results)} checks" + (f", failed: {failed}" if failed else "")
    assert report(7, "oracle suite", not failed, detail)


@pytest.mark.parametrize("p", [1.2, 10.0, 30.0])
def test_criterion_8_extreme_p(p):
    trace, sec = run("square", p, 4)
    dofs = [r.dof for r in trace.records]
    ok = trace.error is None and all(a <= b for a, b in zip(dofs, dofs[1:]))
    assert report(8, f"extreme p={p:g}", ok, f"dofs {dofs} {sec:.1f}s")
