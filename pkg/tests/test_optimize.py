import math

import numpy as np
import pytest

from spst import manifold as mf
from spst import optimize as op
from spst import problems as pb
from spst.hessian import HessianKind, HessianOperator


@pytest.fixture(scope="module")
def nearest100():
    prob = pb.nearest_problem(pb.gen_nearest_target(100, 10, 7))
    return prob, mf.random_point(100, 10, 1007)


def small_nearest(seed=0, n=10, k=2):
    return pb.nearest_problem(pb.gen_nearest_target(n, k, seed)), mf.random_point(n, k, seed + 1)


# configuration validation

def test_config_validation():
    with pytest.raises(ValueError):
        op.LineSearchConfig(gamma_min=1.0, gamma_max=0.5)
    with pytest.raises(ValueError):
        op.LineSearchConfig(beta=1.5)
    with pytest.raises(ValueError):
        op.LineSearchConfig(alpha=-0.1)
    with pytest.raises(ValueError):
        op.CgConfig(mu=0)
    with pytest.raises(ValueError):
        op.StoppingRule(grad_tol=0.0)
    with pytest.raises(ValueError):
        op.TrustRegionConfig(rho_prime=0.3).resolved(10)
    with pytest.raises(ValueError):
        op.TrustRegionConfig(q_bar=1.0, q0=2.0).resolved(10)


def test_trust_region_defaults():
    cfg = op.TrustRegionConfig().resolved(49)
    assert cfg.q_bar == 7.0 and cfg.q0 == 7.0 / 8 and cfg.tcg_max_inner == 49
    assert op.manifold_dim(mf.random_point(2, 1, 0)) == 7


# line search

def test_armijo_holds_immediately_for_small_gamma():
    prob, x = small_nearest(1)
    grad = mf.egrad_to_rgrad(x, prob.egrad(x))
    hist = op.BBHistory()
    tau, fac, f_new = op.bb_linesearch(prob, x, prob.cost(x), grad, -grad, hist, op.LineSearchConfig(gamma0=1e-3))
    assert tau == 1e-3
    assert f_new < prob.cost(x)
    assert f_new == prob.cost(fac.point)


def test_first_guess_is_initial_cost():
    prob, x = small_nearest(2)
    grad = mf.egrad_to_rgrad(x, prob.egrad(x))
    hist = op.BBHistory()
    op.bb_linesearch(prob, x, prob.cost(x), grad, -grad, hist, op.LineSearchConfig())
    assert hist.gammas[0] == prob.cost(x)
    assert hist.i == 1 and hist.prev_x is x


def test_linesearch_step_too_small():
    prob, x = small_nearest(3)
    grad = mf.egrad_to_rgrad(x, prob.egrad(x))
    with pytest.raises(op.StepTooSmall):
        op.bb_linesearch(prob, x, prob.cost(x), grad, -grad, op.BBHistory(),
                         op.LineSearchConfig(gamma0=1e-12), min_step=1e-11)


def test_linesearch_needs_descent():
    prob, x = small_nearest(4)
    grad = mf.egrad_to_rgrad(x, prob.egrad(x))
    with pytest.raises(ValueError):
        op.bb_linesearch(prob, x, prob.cost(x), grad, grad, op.BBHistory(), op.LineSearchConfig())


# R-SD and R-CG

@pytest.mark.parametrize("solver", [op.solve_rsd, op.solve_rcg])
def test_critical_start_stops_at_once(solver):
    A = mf.random_point(10, 2, 5)
    rep = solver(pb.nearest_problem(A), A)
    assert rep.num_iter == 0 and rep.termination is op.Termination.GRAD_TOL


def test_rsd_nearest(nearest100):
    prob, x0 = nearest100
    rep = op.solve_rsd(prob, x0)
    assert rep.termination is op.Termination.GRAD_TOL
    assert rep.final_grad_norm < 1e-6 and rep.feasibility <= 1e-10
    fs = [r.f for r in rep.iterations]
    assert all(b < a for a, b in zip(fs, fs[1:]))
    # Armijo certificate, re-checked from the telemetry
    beta = op.LineSearchConfig().beta
    for prev, cur in zip(rep.iterations, rep.iterations[1:]):
        assert cur.f <= prev.f + beta * cur.step * cur.slope


def test_rcg_nearest(nearest100):
    prob, x0 = nearest100
    rep = op.solve_rcg(prob, x0)
    assert rep.termination is op.Termination.GRAD_TOL
    assert rep.final_grad_norm < 1e-6 and rep.feasibility <= 1e-10


def test_rcg_with_unit_period_is_rsd():
    prob, x0 = small_nearest(6, 20, 3)
    a = op.solve_rsd(prob, x0)
    b = op.solve_rcg(prob, x0, op.CgConfig(mu=1))
    assert [r.f for r in a.iterations] == [r.f for r in b.iterations]
    assert np.array_equal(a.x, b.x)


@pytest.mark.parametrize("transport", list(op.TransportKind))
def test_rcg_transport_kinds(transport):
    prob, x0 = small_nearest(7, 20, 3)
    rep = op.solve_rcg(prob, x0, op.CgConfig(transport=transport))
    assert rep.final_grad_norm < 1e-6 or rep.termination is op.Termination.STEP_TOO_SMALL


def test_nonmonotone_variant_converges():
    prob, x0 = small_nearest(8, 20, 3)
    rep = op.solve_rcg(prob, x0, ls=op.LineSearchConfig(nonmonotone=True))
    assert rep.termination is op.Termination.GRAD_TOL


def test_max_iter_reported():
    prob, x0 = small_nearest(9, 20, 3)
    rep = op.solve_rsd(prob, x0, stop=op.StoppingRule(max_iter=2))
    assert rep.termination is op.Termination.MAX_ITER and rep.num_iter == 2


# truncated CG

def tcg_setup(seed=0):
    prob, x = small_nearest(seed, 12, 3)
    grad = mf.egrad_to_rgrad(x, prob.egrad(x))
    return prob, x, grad


def model(x, grad, eta, Heta):
    return mf.metric(x, grad, eta) + 0.5 * mf.metric(x, Heta, eta)


def test_tcg_zero_gradient():
    _, x, grad = tcg_setup()
    res = op.tcg_subproblem(x, np.zeros_like(grad), lambda d: d, 1.0)
    assert not np.any(res.eta) and res.stop is op.TcgStop.ZERO_GRADIENT


def test_tcg_identity_small_radius_is_cauchy():
    _, x, grad = tcg_setup(1)
    r = 1e-3
    res = op.tcg_subproblem(x, grad, lambda d: d, r)
    expected = -r * grad / mf.norm(x, grad)
    assert np.linalg.norm(res.eta - expected) <= 1e-12
    assert res.on_boundary


@pytest.mark.parametrize("kind", list(HessianKind))
@pytest.mark.parametrize("radius", [1e-2, 0.3, 10.0])
def test_tcg_properties(kind, radius):
    for seed in range(3):
        prob, x, grad = tcg_setup(seed)
        H = HessianOperator(prob, x, kind)
        res = op.tcg_subproblem(x, grad, H, radius)
        m = model(x, grad, res.eta, res.Heta)
        assert m < 0  # m(eta) < m(0)
        assert res.model_decrease == pytest.approx(-m, rel=1e-10)
        assert mf.norm(x, res.eta) <= radius * (1 + 1e-10)
        assert all(b >= a - 1e-14 for a, b in zip(res.norms, res.norms[1:]))
        # Cauchy decrease
        Hg = H(grad)
        gg = mf.metric(x, grad, grad)
        gHg = mf.metric(x, grad, Hg)
        tc = radius / math.sqrt(gg)
        if gHg > 0:
            tc = min(gg / gHg, tc)
        assert m <= model(x, grad, -tc * grad, -tc * Hg) + 1e-14


def test_tcg_negative_curvature_goes_to_boundary():
    _, x, grad = tcg_setup(2)
    res = op.tcg_subproblem(x, grad, lambda d: -d, 0.5)
    assert res.stop is op.TcgStop.NEGATIVE_CURVATURE
    assert mf.norm(x, res.eta) == pytest.approx(0.5, rel=1e-12)


# R-TR

@pytest.mark.parametrize("kind", list(HessianKind))
def test_rtr_critical_start(kind):
    A = mf.random_point(10, 2, 5)
    rep = op.solve_rtr(pb.nearest_problem(A), A, hess_kind=kind)
    assert rep.num_iter == 0 and rep.termination is op.Termination.GRAD_TOL


@pytest.mark.parametrize("kind", list(HessianKind))
def test_rtr_nearest(nearest100, kind):
    prob, x0 = nearest100
    rep = op.solve_rtr(prob, x0, hess_kind=kind)
    sd = op.solve_rsd(prob, x0)
    assert rep.termination is op.Termination.GRAD_TOL
    assert rep.final_grad_norm < 1e-6 and rep.feasibility <= 1e-10
    assert 3 * rep.num_iter < sd.num_iter
    q_bar = math.sqrt(op.manifold_dim(x0))
    for prev, cur in zip(rep.iterations, rep.iterations[1:]):
        assert 0 < cur.step <= q_bar
        if cur.accepted:
            assert cur.f <= prev.f
        else:
            assert cur.f == prev.f


def test_rtr_symplectic_eigenvalues():
    n, p = 100, 5
    inst = pb.gen_williamson(n, seed=0)
    E = mf.selector(n, p)
    from spst.retraction import cayley_retraction
    x0 = cayley_retraction(E, mf.random_tangent(E, 1000), 0.5)
    rep = op.solve_rtr(pb.brockett_problem(inst.A, p), x0, hess_kind=HessianKind.PROJECTED)
    assert abs(rep.final_f - 30) <= 1e-6
    np.testing.assert_allclose(pb.symplectic_eigs(rep.x.T @ inst.A @ rep.x), np.arange(1, 6), atol=1e-6)


def test_runs_are_deterministic():
    prob, x0 = small_nearest(10, 20, 3)
    for solve in (op.solve_rcg, lambda p, x: op.solve_rtr(p, x)):
        a, b = solve(prob, x0), solve(prob, x0)
        assert [(r.f, r.grad_norm, r.step) for r in a.iterations] == [(r.f, r.grad_norm, r.step) for r in b.iterations]
