"""Riemannian steepest descent, nonlinear CG and trust-region solvers on SpSt(2n, 2k).

R-SD and R-CG share one loop driven by a Barzilai-Borwein initial step with
Armijo backtracking. R-TR solves its subproblem with truncated CG
(Steihaug-Toint) in the Riemannian metric. All solvers move with the
two-factor Cayley retraction.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import manifold as mf
from .errors import CayleyPoleHit, SpStError
from .hessian import HessianKind, HessianOperator
from .problems import ObjectiveBundle
from .retraction import CayleyFactors, TransportKind, cayley_factors, isometric_transport

log = logging.getLogger(__name__)


class StepTooSmall(SpStError):
    """Backtracking drove the step below the minimum step size."""


class Termination(enum.Enum):
    GRAD_TOL = "GradTol"
    STEP_TOO_SMALL = "StepTooSmall"
    MAX_ITER = "MaxIter"
    SUBPROBLEM_FAILURE = "SubproblemFailure"


@dataclass
class LineSearchConfig:
    """Barzilai-Borwein / Armijo parameters. ``gamma0=None`` means ``f(x0)``."""

    gamma0: float | None = None
    gamma_min: float = 1e-15
    gamma_max: float = 1e15
    beta: float = 1e-4
    delta: float = 0.1
    alpha: float = 0.85
    nonmonotone: bool = False

    def __post_init__(self):
        if not 0 < self.gamma_min < self.gamma_max:
            raise ValueError("need 0 < gamma_min < gamma_max")
        if not (0 < self.beta < 1 and 0 < self.delta < 1):
            raise ValueError("beta and delta must lie in (0, 1)")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass
class CgConfig:
    mu: int = 5  # restart period; 1 gives steepest descent
    beta_rule: str = "fletcher-reeves"
    transport: TransportKind = TransportKind.DIFF_RETRACTION

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError("restart period must be >= 1")
        if self.beta_rule != "fletcher-reeves":
            raise ValueError(f"unsupported beta rule {self.beta_rule!r}")


@dataclass
class TrustRegionConfig:
    """Trust-region parameters.

    ``q_bar=None`` means ``sqrt(dim M)``, ``q0=None`` means ``q_bar / 8`` and
    ``tcg_max_inner=None`` means ``dim M``.
    """

    q_bar: float | None = None
    q0: float | None = None
    rho_prime: float = 0.1
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0
    tcg_max_inner: int | None = None

    def resolved(self, dim: int) -> TrustRegionConfig:
        q_bar = math.sqrt(dim) if self.q_bar is None else self.q_bar
        q0 = q_bar / 8.0 if self.q0 is None else self.q0
        inner = dim if self.tcg_max_inner is None else self.tcg_max_inner
        cfg = TrustRegionConfig(q_bar, q0, self.rho_prime, self.tcg_kappa, self.tcg_theta, inner)
        if not 0 < cfg.q0 <= cfg.q_bar:
            raise ValueError("need 0 < q0 <= q_bar")
        if not 0 < cfg.rho_prime < 0.25:
            raise ValueError("rho_prime must lie in (0, 1/4)")
        return cfg


@dataclass
class StoppingRule:
    grad_tol: float = 1e-6
    min_step: float = 1e-11
    max_iter: int = 1000

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class IterationRecord:
    """One row of solver telemetry.

    ``step`` is the accepted step size for line-search methods and the trust
    radius used for the iteration for R-TR. ``slope`` is ``g(grad f, p)`` at
    the previous iterate (line-search methods), so together with ``f`` of
    consecutive rows the Armijo condition can be re-checked.
    """

    iteration: int
    f: float
    grad_norm: float
    step: float
    wall_time: float
    slope: float = float("nan")
    rho: float = float("nan")
    accepted: bool = True


@dataclass
class RunReport:
    method: str
    iterations: list[IterationRecord]
    x: np.ndarray
    feasibility: float
    termination: Termination

    @property
    def num_iter(self) -> int:
        return self.iterations[-1].iteration

    @property
    def final_f(self) -> float:
        return self.iterations[-1].f

    @property
    def final_grad_norm(self) -> float:
        return self.iterations[-1].grad_norm

    @property
    def wall_time(self) -> float:
        return self.iterations[-1].wall_time


def manifold_dim(U: np.ndarray) -> int:
    n, k = U.shape[0] // 2, U.shape[1] // 2
    return (4 * n - 2 * k + 1) * k


class _State:
    """Cost and gradients at one iterate."""

    __slots__ = ("x", "f", "egrad", "grad", "grad_norm")

    def __init__(self, prob: ObjectiveBundle, x: np.ndarray, f: float | None = None):
        self.x = x
        self.f = prob.cost(x) if f is None else f
        self.egrad = prob.egrad(x)
        # re-projection removes the O(eps ||egrad||) normal error of the gradient
        # formula, which tCG would otherwise amplify near convergence
        self.grad = mf.proj_spst(x, mf.egrad_to_rgrad(x, self.egrad, check=False), check=False)
        self.grad_norm = mf.norm(x, self.grad, check=False)


@dataclass
class BBHistory:
    """Running state of the Barzilai-Borwein line search across iterations."""

    i: int = 0
    q: float = 1.0
    c: float = float("nan")
    prev_x: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    gammas: list[float] = field(default_factory=list)


def _bb_guess(x, grad, history: BBHistory, cfg: LineSearchConfig, f0: float) -> float:
    if history.i == 0:
        gamma = f0 if cfg.gamma0 is None else cfg.gamma0
    else:
        W = x - history.prev_x
        Y = grad - history.prev_grad
        wy = abs(float(np.sum(W * Y)))
        if history.i % 2 == 1:
            gamma = float(np.sum(W * W)) / wy if wy > 0 else cfg.gamma_max
        else:
            yy = float(np.sum(Y * Y))
            gamma = wy / yy if yy > 0 else cfg.gamma_max
    return max(cfg.gamma_min, min(gamma, cfg.gamma_max))


def bb_linesearch(prob: ObjectiveBundle, x: np.ndarray, fx: float, grad: np.ndarray, p: np.ndarray,
                  history: BBHistory, cfg: LineSearchConfig, min_step: float = 1e-11,
                  slope: float | None = None) -> tuple[float, CayleyFactors, float]:
    """Barzilai-Borwein initial step followed by Armijo backtracking.

    Returns ``(tau, factors, f_next)`` where ``factors.point`` is the new
    iterate ``R_x(tau p)``; ``history`` is updated in place. Raises
    StepTooSmall when no ``tau >= min_step`` satisfies the Armijo condition.
    """
    if slope is None:
        slope = mf.metric(x, grad, p, check=False)
    if not slope < 0:
        raise ValueError("search direction is not a descent direction")
    if history.i == 0 and math.isnan(history.c):
        history.c = fx
    gamma = _bb_guess(x, grad, history, cfg, fx)
    history.gammas.append(gamma)
    ref = history.c if cfg.nonmonotone else fx
    tau = gamma
    while tau >= min_step:
        try:
            with np.errstate(all="ignore"):
                fac = cayley_factors(x, p, tau, check=False)
                f_new = prob.cost(fac.point)
        except CayleyPoleHit:
            f_new = math.inf
        if math.isfinite(f_new) and f_new <= ref + cfg.beta * tau * slope:
            q_new = cfg.alpha * history.q + 1.0
            history.c = (cfg.alpha * history.q * history.c + f_new) / q_new
            history.q = q_new
            history.prev_x = x
            history.prev_grad = grad
            history.i += 1
            return tau, fac, f_new
        tau *= cfg.delta
    raise StepTooSmall(f"no Armijo step above {min_step:g}")


def _descent(prob, x0, ls: LineSearchConfig, cg: CgConfig, stop: StoppingRule, method: str) -> RunReport:
    t_start = time.perf_counter()
    st = _State(prob, x0)
    records = [IterationRecord(0, st.f, st.grad_norm, 0.0, 0.0)]
    history = BBHistory()
    p = -st.grad
    k = 0
    termination = Termination.MAX_ITER
    while True:
        if st.grad_norm < stop.grad_tol:
            termination = Termination.GRAD_TOL
            break
        if k >= stop.max_iter:
            termination = Termination.MAX_ITER
            break
        slope = mf.metric(st.x, st.grad, p, check=False)
        if not slope < 0:
            p = -st.grad
            slope = -st.grad_norm**2
        try:
            tau, fac, f_new = bb_linesearch(prob, st.x, st.f, st.grad, p, history, ls,
                                            stop.min_step, slope=slope)
        except StepTooSmall:
            termination = Termination.STEP_TOO_SMALL
            break
        new = _State(prob, fac.point, f_new)
        k += 1
        if k % cg.mu == 0:
            p = -new.grad
        else:
            beta = new.grad_norm**2 / st.grad_norm**2
            moved = isometric_transport(st.x, p, p, tau, cg.transport, factors=fac, check=False)
            p = -new.grad + beta * moved
        st = new
        records.append(IterationRecord(k, st.f, st.grad_norm, tau, time.perf_counter() - t_start, slope))
        log.debug("%s it=%d f=%.12e |grad|=%.3e tau=%.3e", method, k, st.f, st.grad_norm, tau)
    return RunReport(method, records, st.x, mf.check_point(st.x), termination)


def solve_rsd(prob: ObjectiveBundle, x0: np.ndarray, ls: LineSearchConfig | None = None,
              stop: StoppingRule | None = None) -> RunReport:
    """Riemannian steepest descent (CG with restart period 1)."""
    mf._certify(x0)
    return _descent(prob, x0, ls or LineSearchConfig(), CgConfig(mu=1), stop or StoppingRule(), "R-SD")


def solve_rcg(prob: ObjectiveBundle, x0: np.ndarray, cg: CgConfig | None = None,
              ls: LineSearchConfig | None = None, stop: StoppingRule | None = None) -> RunReport:
    """Riemannian Fletcher-Reeves CG with periodic restarts and isometric transport."""
    mf._certify(x0)
    return _descent(prob, x0, ls or LineSearchConfig(), cg or CgConfig(), stop or StoppingRule(), "R-CG")


class TcgStop(enum.Enum):
    NEGATIVE_CURVATURE = "negative_curvature"
    EXCEEDED_RADIUS = "exceeded_radius"
    RESIDUAL = "residual"
    MAX_INNER = "max_inner"
    ZERO_GRADIENT = "zero_gradient"


@dataclass
class TcgResult:
    eta: np.ndarray
    Heta: np.ndarray
    stop: TcgStop
    inner: int
    norms: list[float]
    model_decrease: float  # m(0) - m(eta)
    used_cauchy: bool = False

    @property
    def on_boundary(self) -> bool:
        return self.stop in (TcgStop.NEGATIVE_CURVATURE, TcgStop.EXCEEDED_RADIUS)


def tcg_subproblem(U: np.ndarray, grad: np.ndarray, H, radius: float,
                   cfg: TrustRegionConfig | None = None) -> TcgResult:
    """Truncated CG for ``min g(grad, eta) + 1/2 g(H eta, eta)`` s.t. ``||eta|| <= radius``.

    ``H`` is any callable mapping tangents at ``U`` to tangents at ``U``.
    The result never has a larger model value than the Cauchy point.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    cfg = cfg or TrustRegionConfig()
    max_inner = cfg.tcg_max_inner or manifold_dim(U)
    inner = lambda a, b: mf.metric(U, a, b, check=False)  # noqa: E731

    def model_dec(eta, Heta):
        return -(inner(grad, eta) + 0.5 * inner(Heta, eta))

    eta = np.zeros_like(grad)
    Heta = np.zeros_like(grad)
    r = grad.copy()
    r_r = inner(r, r)
    norm_r0 = math.sqrt(max(r_r, 0.0))
    if norm_r0 == 0.0:
        return TcgResult(eta, Heta, TcgStop.ZERO_GRADIENT, 0, [0.0], 0.0)
    d = -r
    e_Pe = 0.0
    norms = [0.0]
    cauchy = None
    stop = TcgStop.MAX_INNER
    j = 0
    for j in range(1, max_inner + 1):
        Hd = H(d)
        d_Hd = inner(d, Hd)
        e_Pd = inner(eta, d)
        d_Pd = inner(d, d)
        if cauchy is None:
            # first direction is -grad: Cauchy step along it
            t_c = radius / norm_r0
            if d_Hd > 0:
                t_c = min(r_r / d_Hd, t_c)
            cauchy = (t_c * d, t_c * Hd)
        alpha = r_r / d_Hd if d_Hd != 0 else math.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd
        if d_Hd <= 0 or e_Pe_new >= radius * radius:
            tau = (-e_Pd + math.sqrt(max(e_Pd * e_Pd + d_Pd * (radius * radius - e_Pe), 0.0))) / d_Pd
            eta = eta + tau * d
            Heta = Heta + tau * Hd
            norms.append(radius)
            stop = TcgStop.NEGATIVE_CURVATURE if d_Hd <= 0 else TcgStop.EXCEEDED_RADIUS
            break
        eta = eta + alpha * d
        Heta = Heta + alpha * Hd
        e_Pe = e_Pe_new
        norms.append(math.sqrt(max(e_Pe, 0.0)))
        r = r + alpha * Hd
        r_r_new = inner(r, r)
        norm_r = math.sqrt(max(r_r_new, 0.0))
        if norm_r <= norm_r0 * min(norm_r0**cfg.tcg_theta, cfg.tcg_kappa):
            stop = TcgStop.RESIDUAL
            break
        d = -r + (r_r_new / r_r) * d
        r_r = r_r_new
    dec = model_dec(eta, Heta)
    result = TcgResult(eta, Heta, stop, j, norms, dec)
    cdec = model_dec(*cauchy)
    if cdec > dec:
        ceta, cHeta = cauchy
        return TcgResult(ceta, cHeta, stop, j, norms, cdec, used_cauchy=True)
    return result


def solve_rtr(prob: ObjectiveBundle, x0: np.ndarray, cfg: TrustRegionConfig | None = None,
              hess_kind: HessianKind = HessianKind.EXACT, stop: StoppingRule | None = None) -> RunReport:
    """Riemannian trust-region method with truncated-CG subproblem solves.

    ``hess_kind`` selects the exact Riemannian Hessian (R-TR1) or the projected
    approximation (R-TR2).
    """
    mf._certify(x0)
    stop = stop or StoppingRule()
    cfg = (cfg or TrustRegionConfig()).resolved(manifold_dim(x0))
    method = "R-TR1" if hess_kind is HessianKind.EXACT else "R-TR2"
    t_start = time.perf_counter()
    st = _State(prob, x0)
    radius = cfg.q0
    records = [IterationRecord(0, st.f, st.grad_norm, radius, 0.0)]
    k = 0
    termination = Termination.MAX_ITER
    while True:
        if st.grad_norm < stop.grad_tol:
            termination = Termination.GRAD_TOL
            break
        if k >= stop.max_iter:
            termination = Termination.MAX_ITER
            break
        if radius < stop.min_step:
            termination = Termination.STEP_TOO_SMALL
            break
        H = HessianOperator(prob, st.x, hess_kind, egrad=st.egrad)
        sub = tcg_subproblem(st.x, st.grad, H, radius, cfg)
        if not sub.model_decrease > 0:
            termination = Termination.SUBPROBLEM_FAILURE
            break
        try:
            with np.errstate(all="ignore"):
                x_hat = cayley_factors(st.x, sub.eta, 1.0, check=False).point
                f_hat = prob.cost(x_hat)
        except CayleyPoleHit:
            x_hat, f_hat = None, math.inf
        rho = (st.f - f_hat) / max(sub.model_decrease, 1e-15) if math.isfinite(f_hat) else -math.inf
        used_radius = radius
        if rho < 0.25:
            radius = 0.25 * radius
        elif rho > 0.75 and sub.on_boundary:
            radius = min(2.0 * radius, cfg.q_bar)
        accepted = rho > cfg.rho_prime
        if accepted:
            st = _State(prob, x_hat, f_hat)
        k += 1
        records.append(IterationRecord(k, st.f, st.grad_norm, used_radius,
                                       time.perf_counter() - t_start, rho=rho, accepted=accepted))
        log.debug("%s it=%d f=%.12e |grad|=%.3e radius=%.3e rho=%.3f inner=%d %s",
                  method, k, st.f, st.grad_norm, used_radius, rho, sub.inner, sub.stop.value)
    return RunReport(method, records, st.x, mf.check_point(st.x), termination)
