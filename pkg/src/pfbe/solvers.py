"""First-order solvers for the penalized envelope objective.

All solvers minimize ``Gamma`` over ``X x Y``, monitor the same
normalized prox-gradient residual (residual at the iterate divided by
the smooth-gradient norm at the start point), and return a
:class:`SolveResult`. ``converged=True`` always implies
``stat <= gtol``. Line-search failure is reported through
``failure="StepFailure"`` with ``converged=False`` rather than raised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .core import (
    MinimaxProblem,
    NonFiniteValue,
    PreconditionViolation,
    StepFailure,
    UnsupportedSet,
    Vector,
    check_finite,
)
from .envelope import EnvelopeConfig, EnvelopeEval, evaluate, prox_step
from .sets import WholeSpace, composite_prox

Schedule = Union[float, Callable[[int], float]]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, tolerance, and step rules shared by the solvers.

    ``bb_memory`` is the alternation period of the two spectral step
    formulas; ``ls_*`` control the nonmonotone line search;
    ``eta_x``/``eta_y`` are step schedules (constants or callables of the
    iteration index) for the gradient methods, with theory-mode defaults
    derived from the envelope config when omitted.
    """

    max_iter: int = 10000
    gtol: float = 1e-7
    normalized_stat: bool = True
    step_init: float = 1.0
    step_min: float = 1e-10
    step_max: float = 1e10
    bb_memory: int = 1
    ls_window: int = 10
    ls_decrease: float = 1e-4
    ls_max_halvings: int = 50
    eta_x: Optional[Schedule] = None
    eta_y: Optional[Schedule] = None
    theta: Optional[float] = None
    record_trace: bool = True

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if not (self.gtol > 0):
            raise ValueError("gtol must be positive")
        if not (0 < self.step_min <= self.step_max):
            raise ValueError("need 0 < step_min <= step_max")
        if self.ls_window < 1 or self.ls_max_halvings < 1 or self.bb_memory < 1:
            raise ValueError("window, halvings, and bb_memory must be >= 1")


@dataclass
class SolveResult:
    """Outcome of one solver run.

    ``stat`` is the final monitored residual (normalized when the config
    says so); ``feas`` is the distance of the iterate to ``X x Y`` (zero
    by construction for the projected methods; benchmark reporting
    replaces it with the base-problem constraint violation); ``trace``
    holds per-iterate ``gamma`` and ``stat`` arrays when recorded.
    """

    x: Vector
    y: Vector
    fval: float
    iter: int
    stat: float
    feas: float
    wall_time: float
    converged: bool
    trace: dict
    failure: Optional[str] = None
    used_fd_hvp: bool = False


def _resolve_schedule(value: Optional[Schedule], default: Schedule) -> Callable[[int], float]:
    chosen = default if value is None else value
    if callable(chosen):
        return chosen
    const = float(chosen)
    return lambda k: const


def _ref_norm(ev: EnvelopeEval, scfg: SolverConfig) -> float:
    if not scfg.normalized_stat:
        return 1.0
    ref = float(np.sqrt(float(ev.grad_x @ ev.grad_x) + float(ev.grad_y @ ev.grad_y)))
    if ref < 1e-15:
        return 1.0  # degenerate normalization: monitor the raw residual
    return ref


def _residual(problem: MinimaxProblem, cfg: EnvelopeConfig, ev: EnvelopeEval) -> float:
    px = composite_prox(problem.r1, problem.X, ev.x - ev.grad_x, 1.0)
    py = composite_prox(problem.r2, problem.Y, ev.y - ev.grad_y, cfg.alpha - 1.0)
    return float(
        np.sqrt(float(np.sum((px - ev.x) ** 2)) + float(np.sum((py - ev.y) ** 2)))
    )


def _set_feas(problem: MinimaxProblem, x: Vector, y: Vector) -> float:
    dx = problem.X.project(x) - x
    dy = problem.Y.project(y) - y
    return float(np.sqrt(float(dx @ dx) + float(dy @ dy)))


def _x_composite_step(problem: MinimaxProblem, v: Vector, step: float) -> Vector:
    """x-update ``proj_X(prox_{step r1}(v))`` (exact when either part is trivial)."""
    r1, X = problem.r1, problem.X
    if r1.is_zero:
        return X.project(v)
    if r1.attached_set is X:
        return np.asarray(r1.prox(v, step), dtype=np.float64)
    if isinstance(X, WholeSpace):
        return np.asarray(r1.prox(v, step), dtype=np.float64)
    return X.project(np.asarray(r1.prox(v, step), dtype=np.float64))


def _finish(
    problem: MinimaxProblem,
    scfg: SolverConfig,
    x: Vector,
    y: Vector,
    gamma: float,
    iters: int,
    stat: float,
    started: float,
    converged: bool,
    trace_gamma: list,
    trace_stat: list,
    failure: Optional[str],
    used_fd: bool,
) -> SolveResult:
    trace = {}
    if scfg.record_trace:
        trace = {
            "gamma": np.asarray(trace_gamma, dtype=np.float64),
            "stat": np.asarray(trace_stat, dtype=np.float64),
        }
    return SolveResult(
        x=x,
        y=y,
        fval=float(gamma),
        iter=int(iters),
        stat=float(stat),
        feas=_set_feas(problem, x, y),
        wall_time=time.perf_counter() - started,
        converged=bool(converged),
        trace=trace,
        failure=failure,
        used_fd_hvp=used_fd,
    )


def solve_spg(
    problem: MinimaxProblem,
    cfg: EnvelopeConfig,
    scfg: SolverConfig,
    x0,
    y0,
) -> SolveResult:
    """Spectral projected/proximal gradient on the penalized objective.

    Steps alternate the two Barzilai-Borwein formulas (period
    ``bb_memory``), safeguarded to ``[step_min, step_max]``, with a
    nonmonotone sufficient-decrease line search over the last
    ``ls_window`` objective values. After ``ls_max_halvings`` rejected
    halvings the run stops with ``failure="StepFailure"``.
    """
    started = time.perf_counter()
    x, y = problem.check_point(x0, y0)
    ev = evaluate(problem, cfg, x, y)
    used_fd = ev.used_fd_hvp
    ref = _ref_norm(ev, scfg)
    gam_hist = [ev.gamma]
    trace_gamma = [ev.gamma]
    trace_stat: list[float] = []
    t = float(scfg.step_init)
    iters = 0
    converged = False
    failure: Optional[str] = None
    stat = np.inf

    for k in range(scfg.max_iter + 1):
        stat = _residual(problem, cfg, ev) / ref
        trace_stat.append(stat)
        if stat <= scfg.gtol:
            converged = True
            break
        if k == scfg.max_iter:
            break

        # nonmonotone line search from the spectral step
        tk = float(np.clip(t, scfg.step_min, scfg.step_max))
        gamma_ref = max(gam_hist)
        accepted = False
        xt = yt = None
        dz2 = 0.0
        for _ in range(scfg.ls_max_halvings + 1):
            xt = composite_prox(problem.r1, problem.X, x - tk * ev.grad_x, tk)
            yt = composite_prox(
                problem.r2, problem.Y, y - tk * ev.grad_y, tk * (cfg.alpha - 1.0)
            )
            dz2 = float(np.sum((xt - x) ** 2)) + float(np.sum((yt - y) ** 2))
            if dz2 == 0.0:
                accepted = True  # prox fixed point at this step size
                break
            gam_t = evaluate(problem, cfg, xt, yt, need_grad=False).gamma
            if gam_t <= gamma_ref - scfg.ls_decrease * dz2 / tk:
                accepted = True
                break
            tk *= 0.5
            if tk < scfg.step_min:
                break
        if not accepted:
            failure = "StepFailure"
            break
        if dz2 == 0.0:
            failure = None if converged else "Stalled"
            break

        ev_new = evaluate(problem, cfg, xt, yt)
        used_fd = used_fd or ev_new.used_fd_hvp
        s = np.concatenate([xt - x, yt - y])
        d = np.concatenate([ev_new.grad_x - ev.grad_x, ev_new.grad_y - ev.grad_y])
        sd = float(s @ d)
        if sd > 1e-30:
            use_first = (k // scfg.bb_memory) % 2 == 0
            dd = float(d @ d)
            bb1 = float(s @ s) / sd
            bb2 = sd / dd if dd > 0 else bb1
            t = float(np.clip(bb1 if use_first else bb2, scfg.step_min, scfg.step_max))
        else:
            t = min(scfg.step_max, tk * 2.0)  # nonconvex pair: grow cautiously

        x, y, ev = xt, yt, ev_new
        iters += 1
        gam_hist.append(ev.gamma)
        if len(gam_hist) > scfg.ls_window:
            gam_hist.pop(0)
        trace_gamma.append(ev.gamma)

    return _finish(
        problem, scfg, x, y, ev.gamma, iters, stat, started,
        converged, trace_gamma, trace_stat, failure, used_fd,
    )


def _iterate_first_order(
    problem: MinimaxProblem,
    cfg: EnvelopeConfig,
    scfg: SolverConfig,
    x0,
    y0,
    step_fn,
) -> SolveResult:
    """Shared harness: fixed update rule + envelope-residual monitoring."""
    started = time.perf_counter()
    x, y = problem.check_point(x0, y0)
    ev = evaluate(problem, cfg, x, y)
    used_fd = ev.used_fd_hvp
    ref = _ref_norm(ev, scfg)
    trace_gamma = [ev.gamma]
    trace_stat: list[float] = []
    iters = 0
    converged = False
    failure: Optional[str] = None
    stat = np.inf

    for k in range(scfg.max_iter + 1):
        stat = _residual(problem, cfg, ev) / ref
        trace_stat.append(stat)
        if stat <= scfg.gtol:
            converged = True
            break
        if k == scfg.max_iter:
            break
        x, y = step_fn(k, x, y)
        ev = evaluate(problem, cfg, x, y)
        used_fd = used_fd or ev.used_fd_hvp
        iters += 1
        trace_gamma.append(ev.gamma)

    return _finish(
        problem, scfg, x, y, ev.gamma, iters, stat, started,
        converged, trace_gamma, trace_stat, failure, used_fd,
    )


def solve_subgda(
    problem: MinimaxProblem,
    cfg: EnvelopeConfig,
    scfg: SolverConfig,
    x0,
    y0,
) -> SolveResult:
    """Two-timescale scheme: proximal descent in x, envelope-residual ascent in y.

        x+ = proj_X(prox_{eta_x r1}(x - eta_x grad_x f(x, y)))
        y+ = y + eta_y R(x+, y)

    Theory-mode defaults: ``eta_y = eta/2`` and
    ``eta_x = eta_y / theta`` with ``theta = alpha eta L^2 / mu`` (the
    timescale ratio); ``eta_y`` must stay within the envelope step
    ``eta`` so y-iterates remain in ``Y`` by convex combination.
    Nonconvex ``X`` is rejected (the projected step needs convexity).
    """
    if not problem.X.convex:
        raise UnsupportedSet("the two-timescale scheme requires a convex X")
    L, mu = problem.lipschitz, problem.mu
    theta = scfg.theta if scfg.theta is not None else cfg.alpha * cfg.eta * L * L / mu
    ey = _resolve_schedule(scfg.eta_y, cfg.eta / 2.0)
    if scfg.eta_x is not None:
        ex = _resolve_schedule(scfg.eta_x, 0.0)
    else:
        ex = lambda k: ey(k) / theta

    f = problem.f

    def step(k: int, x: Vector, y: Vector) -> tuple[Vector, Vector]:
        ey_k = float(ey(k))
        if ey_k > cfg.eta * (1.0 + 1e-12):
            raise PreconditionViolation(
                f"eta_y={ey_k} exceeds the envelope step eta={cfg.eta}"
            )
        gx = np.asarray(f.grad_x(x, y), dtype=np.float64)
        check_finite(gx, "grad_x f")
        x_new = _x_composite_step(problem, x - float(ex(k)) * gx, float(ex(k)))
        _, R = prox_step(problem, cfg, x_new, y)
        y_new = y + ey_k * R
        return x_new, y_new

    return _iterate_first_order(problem, cfg, scfg, x0, y0, step)


def solve_gda_baseline(
    problem: MinimaxProblem,
    cfg: EnvelopeConfig,
    scfg: SolverConfig,
    x0,
    y0,
) -> SolveResult:
    """Simultaneous projected/proximal gradient descent-ascent on ``f``.

    Constant (or scheduled) steps ``eta_x``/``eta_y`` default to 0.1.
    Convergence is still monitored through the penalized-objective
    residual so iteration counts are comparable across solvers.
    """
    ex = _resolve_schedule(scfg.eta_x, 0.1)
    ey = _resolve_schedule(scfg.eta_y, 0.1)
    f = problem.f

    def step(k: int, x: Vector, y: Vector) -> tuple[Vector, Vector]:
        gx = np.asarray(f.grad_x(x, y), dtype=np.float64)
        gy = np.asarray(f.grad_y(x, y), dtype=np.float64)
        check_finite(gx, "grad_x f")
        check_finite(gy, "grad_y f")
        tx, ty = float(ex(k)), float(ey(k))
        x_new = _x_composite_step(problem, x - tx * gx, tx)
        y_new = composite_prox(problem.r2, problem.Y, y + ty * gy, ty)
        return x_new, y_new

    return _iterate_first_order(problem, cfg, scfg, x0, y0, step)


DEFAULT_GDA_GRID = tuple(
    sorted(a1 * 10.0 ** (-a2) for a1 in (1, 3, 5, 7, 9) for a2 in (1, 2, 3, 4))
)


def select_gda_step(
    problem: MinimaxProblem,
    cfg: EnvelopeConfig,
    scfg: SolverConfig,
    x0,
    y0,
    grid=None,
    pilot_iters: Optional[int] = None,
) -> tuple[float, dict]:
    """Pick the constant GDA step with the smallest final residual.

    Runs the baseline once per grid value (both steps tied to the same
    value), each for ``pilot_iters`` iterations (full budget when None),
    and returns the step with the smallest final ``stat``; ties break
    toward the smaller step. Also returns the per-step residual map.
    """
    steps = DEFAULT_GDA_GRID if grid is None else tuple(sorted(float(s) for s in grid))
    if not steps:
        raise ValueError("empty step grid")
    budget = scfg.max_iter if pilot_iters is None else int(pilot_iters)
    results: dict = {}
    best = None
    for s in steps:
        trial_cfg = replace(
            scfg, eta_x=s, eta_y=s, max_iter=budget, record_trace=False
        )
        try:
            res = solve_gda_baseline(problem, cfg, trial_cfg, x0, y0)
            final = res.stat
        except NonFiniteValue:
            final = np.inf  # diverged at this step size
        results[s] = final
        if best is None or (final, s) < best:
            best = (final, s)
    return best[1], results


def gamma_descent_check(gamma_trace, slack: Optional[float] = None) -> bool:
    """True when the objective trace is nonincreasing up to a small slack.

    Default slack is ``1e-8 * (1 + |gamma_0|)``, absorbing rounding in
    long traces.
    """
    g = np.asarray(gamma_trace, dtype=np.float64)
    if g.size <= 1:
        return True
    if slack is None:
        slack = 1e-8 * (1.0 + abs(float(g[0])))
    return bool(np.all(np.diff(g) <= slack))
