import numpy as np
import pytest

from spst import manifold as mf
from spst import problems as pb
from spst.hessian import (
    HessianKind, HessianOperator, christoffel, christoffel_same, dgrad, fd_hess_oracle,
    rhess_exact, rhess_projected,
)
from spst.linalg import rng_from_seed
from spst.problems import ObjectiveBundle
from spst.retraction import geodesic

N, K = 20, 3


class ConstantProblem(ObjectiveBundle):
    name = "constant"

    def __init__(self, shape):
        self.shape = shape

    def cost(self, U):
        return 1.0

    def egrad(self, U):
        return np.zeros(self.shape)

    def ehess(self, U, D):
        return np.zeros(self.shape)


def problem(kind, seed=0):
    if kind == "nearest":
        return pb.nearest_problem(pb.gen_nearest_target(N, K, seed))
    if kind == "brockett":
        return pb.brockett_problem(pb.gen_williamson(N, seed=seed).A, K)
    return pb.psd_problem(pb.gen_psd_instance(N, 10, 4, seed).S, K)


def pair(seed=0):
    U = mf.random_point(N, K, seed)
    return U, mf.random_tangent(U, seed + 1)


# Christoffel form

def test_gamma_zero():
    U, _ = pair()
    assert not np.any(christoffel_same(U, np.zeros_like(U)))
    assert not np.any(christoffel(U, mf.random_tangent(U, 3), np.zeros_like(U)))


@pytest.mark.parametrize("seed", range(10))
def test_geodesic_acceleration_identity(seed):
    U, D = pair(seed)
    W = mf.omega_bar(U, D).omega_bar
    acc = (W - W.T) @ (D + W.T @ U) + W.T @ W.T @ U
    gam = christoffel_same(U, D)
    assert np.linalg.norm(acc + gam) <= 1e-8 * (1 + np.linalg.norm(gam))


def test_geodesic_acceleration_finite_difference():
    U, D = pair(4)
    h = 1e-4
    acc = (geodesic(U, D, h) - 2 * U + geodesic(U, D, -h)) / h**2
    gam = christoffel_same(U, D)
    assert np.linalg.norm(acc + gam) <= 1e-5 * (1 + np.linalg.norm(gam))


def test_gamma_scaling():
    U, D = pair(5)
    g1 = christoffel_same(U, D)
    assert np.linalg.norm(christoffel_same(U, 3 * D) - 9 * g1) <= 1e-10 * 9 * np.linalg.norm(g1)


def test_gamma_polarisation_consistent():
    U, D = pair(6)
    g = christoffel_same(U, D)
    assert np.linalg.norm(christoffel(U, D, D) - g) <= 1e-10 * max(1, np.linalg.norm(g))


def test_gamma_symmetric_and_bilinear():
    U, D = pair(7)
    E, F = mf.random_tangent(U, 70), mf.random_tangent(U, 71)
    g = christoffel(U, D, E)
    assert np.linalg.norm(g - christoffel(U, E, D)) <= 1e-10 * np.linalg.norm(g)
    lhs = christoffel(U, 2 * D - 0.5 * F, E)
    rhs = 2 * g - 0.5 * christoffel(U, F, E)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


# Hessians

@pytest.mark.parametrize("fn", [rhess_exact, rhess_projected])
def test_constant_function_has_zero_hessian(fn):
    U, D = pair()
    assert np.linalg.norm(fn(U, ConstantProblem(U.shape), D)) == 0.0


@pytest.mark.parametrize("kind", ["nearest", "brockett", "psd"])
@pytest.mark.parametrize("hk", list(HessianKind))
def test_hessian_output_tangent(kind, hk):
    U, D = pair(8)
    out = HessianOperator(problem(kind), U, hk)(D)
    assert mf.tangent_residual(U, out) <= 1e-8 * (1 + np.linalg.norm(out))


@pytest.mark.parametrize("kind", ["nearest", "brockett", "psd"])
def test_exact_hessian_self_adjoint(kind):
    prob = problem(kind)
    for seed in range(5):
        U, a = pair(seed)
        b = mf.random_tangent(U, seed + 40)
        H = HessianOperator(prob, U)
        x, y = mf.metric(U, H(a), b), mf.metric(U, a, H(b))
        assert abs(x - y) <= 1e-8 * max(1.0, abs(x))


def test_projected_hessian_asymmetry_is_recorded():
    # no symmetry is claimed for the projected operator; record the deviation
    prob = problem("brockett")
    U, a = pair(9)
    b = mf.random_tangent(U, 90)
    H = HessianOperator(prob, U, HessianKind.PROJECTED)
    x, y = mf.metric(U, H(a), b), mf.metric(U, a, H(b))
    print(f"projected Hessian g-asymmetry: {abs(x - y) / max(abs(x), 1):.3e}")
    assert np.isfinite(x) and np.isfinite(y)


@pytest.mark.parametrize("kind", ["nearest", "brockett", "psd"])
def test_taylor_remainder_along_geodesic(kind):
    prob = problem(kind, 2)
    U, D = pair(12)
    grad = mf.egrad_to_rgrad(U, prob.egrad(U))
    hdd = mf.metric(U, rhess_exact(U, prob, D), D)
    f0, slope = prob.cost(U), mf.metric(U, grad, D)

    def rem(t):
        return abs(prob.cost(geodesic(U, D, t)) - f0 - t * slope - 0.5 * t * t * hdd)

    ratio = rem(0.02) / rem(0.01)
    assert 6.0 <= ratio <= 10.0


# finite-difference oracle

def test_fd_oracle_zero():
    U, _ = pair()
    assert not np.any(fd_hess_oracle(U, problem("nearest"), np.zeros_like(U)))


def test_fd_oracle_step_range():
    U, D = pair()
    with pytest.raises(ValueError):
        fd_hess_oracle(U, problem("nearest"), D, h=1e-2)


@pytest.mark.parametrize("kind", ["nearest", "brockett", "psd"])
def test_fd_oracle_richardson(kind):
    prob = problem(kind, 1)
    U, D = pair(13)
    exact = mf.proj_spst(U, dgrad(U, prob.egrad(U), prob.ehess(U, D), D))
    e1 = np.linalg.norm(fd_hess_oracle(U, prob, D, h=1e-3) - exact)
    e2 = np.linalg.norm(fd_hess_oracle(U, prob, D, h=5e-4) - exact)
    assert 3.5 <= e1 / e2 <= 4.5


def test_fd_oracle_absolute_agreement():
    prob = problem("nearest")
    U, D = pair(14)
    exact = mf.proj_spst(U, dgrad(U, prob.egrad(U), prob.ehess(U, D), D))
    assert np.linalg.norm(fd_hess_oracle(U, prob, D, h=1e-5) - exact) <= 1e-5


def test_projected_is_projected_dgrad():
    prob = problem("psd")
    U, D = pair(15)
    ref = mf.proj_spst(U, dgrad(U, prob.egrad(U), prob.ehess(U, D), D))
    np.testing.assert_allclose(rhess_projected(U, prob, D), ref, rtol=1e-12, atol=1e-14)
