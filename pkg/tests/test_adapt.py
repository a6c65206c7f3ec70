import csv
import math

import numpy as np
import pytest

from crplap.adapt import (
    AdaptiveConfig,
    adaptive_loop,
    dorfler_mark,
    e_mu,
    estimate,
    glb_guard,
    lower_bound,
)
from crplap.crspace import CRFunction, interpolate_cr
from crplap.eigen import IISSConfig
from crplap.errors import InvalidArgumentError, SolverFailure
from crplap.mesh import TriangleMesh, make_unit_square_mesh
from crplap.plap import DCConfig


def test_dorfler_example():
    assert list(dorfler_mark([4.0, 3.0, 2.0, 1.0], 0.6)) == [0, 1]
    assert list(dorfler_mark([1.0, 3.0, 2.0, 4.0], 0.6)) == [1, 3]
    assert list(dorfler_mark([1.0, 1.0, 1.0, 1.0], 0.5)) == [0, 1]  # ties by index
    assert list(dorfler_mark([5.0, 1.0], 1.0)) == [0, 1]


def test_dorfler_edge_cases():
    assert dorfler_mark([], 0.5).size == 0
    assert len(dorfler_mark(np.zeros(5), 0.5)) == 1
    for theta in (0.0, 1.5, -0.1):
        with pytest.raises(InvalidArgumentError):
            dorfler_mark([1.0], theta)
    with pytest.raises(InvalidArgumentError):
        dorfler_mark([1.0, -1.0], 0.5)


def test_dorfler_is_minimal():
    rng = np.random.default_rng(1)
    for _ in range(50):
        vals = rng.exponential(size=30)
        theta = rng.uniform(0.1, 1.0)
        marked = dorfler_mark(vals, theta)
        assert vals[marked].sum() >= theta * vals.sum() - 1e-12
        # dropping the smallest marked value breaks the bulk criterion
        if len(marked) > 1:
            assert vals[marked].sum() - vals[marked].min() < theta * vals.sum()


def test_eta2_vanishes_on_interior_for_continuous_function():
    mesh = make_unit_square_mesh(6)
    # midpoint interpolation of a piecewise-affine continuous function with
    # zero boundary trace is continuous, so interior jumps vanish
    xy = mesh.vertices
    nodal = xy[:, 0] * (1 - xy[:, 0]) * xy[:, 1] * (1 - xy[:, 1])
    dof = 0.5 * (nodal[mesh.edges[:, 0]] + nodal[mesh.edges[:, 1]])
    u = CRFunction(mesh, dof, dirichlet=False)
    rep = estimate(mesh, 10.0, u, 2.0)
    assert np.abs(rep.face_terms[mesh.interior_edges]).max() <= 1e-28
    assert rep.eta2_total == pytest.approx(rep.face_terms[mesh.boundary_edges].sum(), rel=1e-12)


def test_eta2_weight_bookkeeping():
    mesh = make_unit_square_mesh(4)
    u = interpolate_cr(lambda x, y: np.sin(np.pi * x) * y * (1 - y), mesh)
    rep = estimate(mesh, 5.0, u, 1.5)
    assert rep.eta2_total == pytest.approx(rep.face_terms.sum(), rel=1e-12)
    assert np.all(rep.eta1 >= 0) and np.all(rep.eta2 >= 0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_eta1_affine_scaling(p):
    base = TriangleMesh([[0.0, 0.0], [1.0, 0.0], [0.2, 0.9]], [[0, 1, 2]])
    s = 2.5
    big = TriangleMesh(base.vertices * s, base.elements)
    dof = np.array([0.3, -1.1, 0.7])
    e0 = estimate(base, 3.0, CRFunction(base, dof, dirichlet=False), p).eta1[0]
    e1 = estimate(big, 3.0, CRFunction(big, dof, dirichlet=False), p).eta1[0]
    q = p / (p - 1)
    assert e1 / e0 == pytest.approx(s ** (q + 2), rel=1e-12)


def test_lower_bound_formula_and_guard():
    mu, h, p = 20.0, 0.01, 2.0
    expected = (math.sqrt(mu) / (1 + 2 * h * math.sqrt(mu))) ** 2
    assert lower_bound(mu, h, p) == pytest.approx(expected, rel=1e-14)
    assert lower_bound(mu, h, p) < mu
    assert glb_guard(mu, h, p) == pytest.approx(2 * h * math.sqrt(mu))
    assert lower_bound(mu, 1.0, p) is None
    # tends to mu as the mesh size vanishes
    assert lower_bound(mu, 1e-12, p) == pytest.approx(mu, rel=1e-9)
    with pytest.raises(InvalidArgumentError):
        lower_bound(0.0, h, p)


def test_e_mu_sign():
    assert e_mu(2 * math.pi**2, 19.7, 0.01, 2.0) > 0
    assert e_mu(19.0, 25.0, 1e-6, 2.0) < 0


def test_config_validation():
    for kw in ({"theta": 0.0}, {"eps_k": 0.0}, {"K": -1}, {"sweeps": 0}, {"p": 1.0}, {"domain": "disk"}):
        with pytest.raises(InvalidArgumentError):
            AdaptiveConfig(**kw).initial_mesh()


def test_single_level_when_k_zero():
    trace = adaptive_loop(AdaptiveConfig(K=0, n=6))
    assert len(trace.records) == 1
    rec = trace.final
    assert rec.k == 0 and rec.rel_change is None and rec.n_marked == 0


def test_loop_records_and_monotone_dof():
    cfg = AdaptiveConfig(p=2.0, K=3, n=6)
    seen = []
    trace = adaptive_loop(cfg, on_level=lambda rec, mesh, pair: seen.append(mesh.n_dof))
    dofs = [r.dof for r in trace.records]
    assert dofs == seen
    assert all(a < b for a, b in zip(dofs, dofs[1:]))
    assert [r.k for r in trace.records] == list(range(len(dofs)))
    for r in trace.records[:-1]:
        assert r.n_marked > 0 and r.marked_eta1_max == pytest.approx(r.eta1_max)


def test_trace_csv(tmp_path):
    trace = adaptive_loop(AdaptiveConfig(K=2, n=6))
    path = tmp_path / "trace.csv"
    trace.write_csv(path, lambda_ref=2 * math.pi**2, include_time=False)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,dof,mu,eta1,eta2,glb,glb_guard_ok,rel_change,seconds"
    assert lines[-1].startswith("# e_mu,")
    rows = list(csv.DictReader(lines[:-1]))
    assert len(rows) == len(trace.records)
    assert rows[0]["rel_change"] == ""
    assert all(r["seconds"] == "0" for r in rows)
    assert float(rows[-1]["mu"]) == pytest.approx(trace.final.mu, rel=1e-8)


def test_solver_failure_carries_partial_trace():
    dc = DCConfig(tol=1e-12, max_iter=3)
    cfg = AdaptiveConfig(p=1.5, K=2, n=4, iiss=IISSConfig(dc=dc))
    with pytest.raises(SolverFailure) as info:
        adaptive_loop(cfg)
    assert "level 0" in str(info.value)
    assert info.value.trace.records == []
