"""Partial forward-backward envelope: values, gradients, invariants.

One instance is checked against fully hand-computed numbers (frozen
below with their derivation); general cases are checked against an
independent in-test reimplementation of the envelope formulas and
against central finite differences.
"""

import numpy as np
import pytest

from pfbe.core import FunctionOracle, MinimaxProblem, NonFiniteValue, ProxRegularizer
from pfbe.envelope import (
    EnvelopeConfig,
    evaluate,
    gamma,
    grad_gamma,
    prox_step,
    psi,
)
from pfbe.problems import make_synthetic, synthetic_from_data
from pfbe.sets import BoxSet, WholeSpace


# ---------------------------------------------------------------------------
# configuration


def test_threshold_formula():
    assert EnvelopeConfig.threshold(0.5, 1.0) == 4.0
    assert EnvelopeConfig.threshold(4.0, 1.0) == 1.0
    assert EnvelopeConfig.threshold(0.1, 2.0) == 10.0


def test_config_rejects_small_alpha():
    with pytest.raises(ValueError):
        EnvelopeConfig(eta=0.5, alpha=3.9, mu=1.0)
    with pytest.raises(ValueError):
        EnvelopeConfig(eta=-0.5, alpha=4.0, mu=1.0)
    with pytest.raises(ValueError):
        EnvelopeConfig(eta=0.5, alpha=4.0, mu=0.0)
    cfg = EnvelopeConfig(eta=0.5, alpha=4.0, mu=1.0)
    assert cfg.alpha == 4.0


def test_for_problem_defaults():
    inst = make_synthetic(3, 3, 1.0, 1)
    prob = inst.lifted.problem
    cfg = EnvelopeConfig.for_problem(prob)
    L = prob.lipschitz
    assert cfg.eta == min(1.0, 1.0 / (2.0 * L))
    assert cfg.alpha == EnvelopeConfig.threshold(cfg.eta, 1.0)
    override = EnvelopeConfig.for_problem(prob, eta=0.01)
    assert override.eta == 0.01
    assert override.alpha == EnvelopeConfig.threshold(0.01, 1.0)


# ---------------------------------------------------------------------------
# frozen hand computation
#
# Instance: lifted 1-D bilinear problem, f(z, y) = x + x y - y^2/2
# - lam (x + y - 1) with z = (x, lam). At eta = 1/2, alpha = 4,
# z = (0.5, 0.25), y = 0.1:
#   grad_y f = x - y - lam = 0.15,  T = y + eta grad_y f = 0.175
#   R = (T - y)/eta = 0.15,         f = 0.645
#   psi = f + (eta/2) |grad_y f|^2 = 0.650625
#   xi = f + (alpha eta / 2) |grad_y f|^2 = 0.6675 = gamma (no r1, r2)
#   grad_z xi = (1 + y - lam + 2 R, -(x + y - 1) - 2 R) = (1.15, 0.1)
#   grad_y xi = R (1 - alpha eta) = -0.15


def _pinned_case():
    inst = synthetic_from_data([[1.0]], [1.0], 1.0)
    cfg = EnvelopeConfig(eta=0.5, alpha=4.0, mu=1.0)
    return inst.lifted.problem, cfg, np.array([0.5, 0.25]), np.array([0.1])


def test_envelope_frozen_values():
    prob, cfg, z, y = _pinned_case()
    ev = evaluate(prob, cfg, z, y)
    assert ev.f_val == pytest.approx(0.645, abs=1e-15)
    assert np.allclose(ev.T, [0.175], atol=1e-15)
    assert np.allclose(ev.R, [0.15], atol=1e-15)
    assert ev.psi == pytest.approx(0.650625, abs=1e-15)
    assert ev.xi == pytest.approx(0.6675, abs=1e-15)
    assert ev.gamma == pytest.approx(0.6675, abs=1e-15)
    assert np.allclose(ev.grad_x, [1.15, 0.1], atol=1e-15)
    assert np.allclose(ev.grad_y, [-0.15], atol=1e-15)
    assert not ev.used_fd_hvp
    assert not ev.near_kink
    assert ev.residual_norm == pytest.approx(0.15, abs=1e-15)


def test_wrappers_match_evaluate():
    prob, cfg, z, y = _pinned_case()
    ev = evaluate(prob, cfg, z, y)
    T, R = prox_step(prob, cfg, z, y)
    assert np.array_equal(T, ev.T) and np.array_equal(R, ev.R)
    assert psi(prob, cfg, z, y) == ev.psi
    assert gamma(prob, cfg, z, y) == ev.gamma
    gx, gy = grad_gamma(prob, cfg, z, y)
    assert np.array_equal(gx, ev.grad_x) and np.array_equal(gy, ev.grad_y)


# ---------------------------------------------------------------------------
# independent reimplementation with nonzero regularizers


def _reg_problem(kappa=0.5, n=3):
    # f = <x, y> - |y|^2/2 on box x, free y, with r1 = |x|_1 (value only)
    # and r2 = kappa/2 |y|^2 (quadratic prox on the whole space)
    f = FunctionOracle(
        eval=lambda x, y: float(x @ y - 0.5 * y @ y),
        grad_x=lambda x, y: np.asarray(y, float).copy(),
        grad_y=lambda x, y: np.asarray(x, float) - np.asarray(y, float),
        lipschitz_grad=0.5 * (1.0 + np.sqrt(5.0)),
        strong_concavity=1.0,
        hvp_yy=lambda x, y, v: -np.asarray(v, float),
        hvp_xy=lambda x, y, v: np.asarray(v, float).copy(),
    )
    X = BoxSet(-np.ones(n), np.ones(n))
    r1 = ProxRegularizer(
        eval=lambda v: float(np.abs(v).sum()),
        prox=lambda zv, t: np.clip(np.sign(zv) * np.maximum(np.abs(zv) - t, 0.0), -1.0, 1.0),
        attached_set=X,
    )
    r2 = ProxRegularizer(
        eval=lambda v: float(0.5 * kappa * (v @ v)),
        prox=lambda zv, t: np.asarray(zv, float) / (1.0 + t * kappa),
    )
    return MinimaxProblem(f=f, X=X, Y=WholeSpace(n), r1=r1, r2=r2), kappa


def _reference_envelope(prob, kappa, cfg, x, y):
    # direct transcription of the defining formulas
    f = prob.f.value(x, y)
    gy = prob.f.grad_y(x, y)
    T = (y + cfg.eta * gy) / (1.0 + cfg.eta * kappa)
    R = (T - y) / cfg.eta
    r2T = 0.5 * kappa * float(T @ T)
    psi_val = f + cfg.eta * float(gy @ R) - r2T - 0.5 * cfg.eta * float(R @ R)
    xi_val = cfg.alpha * psi_val - (cfg.alpha - 1.0) * f
    gamma_val = (
        xi_val + float(np.abs(x).sum()) + (cfg.alpha - 1.0) * 0.5 * kappa * float(y @ y)
    )
    grad_x = prob.f.grad_x(x, y) + cfg.alpha * cfg.eta * prob.f.hvp_xy(x, y, R)
    grad_y = (
        cfg.alpha * (R + cfg.eta * prob.f.hvp_yy(x, y, R))
        - (cfg.alpha - 1.0) * prob.f.grad_y(x, y)
    )
    return T, R, psi_val, xi_val, gamma_val, grad_x, grad_y


def test_envelope_matches_reference_with_regularizers():
    prob, kappa = _reg_problem()
    cfg = EnvelopeConfig(eta=0.4, alpha=6.0, mu=1.0)
    rng = np.random.default_rng(31)
    for _ in range(50):
        x = rng.uniform(-1, 1, size=3)
        y = rng.standard_normal(3)
        ref = _reference_envelope(prob, kappa, cfg, x, y)
        ev = evaluate(prob, cfg, x, y)
        T, R, psi_val, xi_val, gamma_val, gx, gy = ref
        assert np.allclose(ev.T, T, atol=1e-13)
        assert np.allclose(ev.R, R, atol=1e-13)
        assert ev.psi == pytest.approx(psi_val, abs=1e-12)
        assert ev.xi == pytest.approx(xi_val, abs=1e-12)
        assert ev.gamma == pytest.approx(gamma_val, abs=1e-12)
        assert np.allclose(ev.grad_x, gx, atol=1e-12)
        assert np.allclose(ev.grad_y, gy, atol=1e-12)


def test_gradient_matches_finite_differences():
    # central differences on Gamma's smooth part at interior points
    inst = make_synthetic(3, 4, 1.0, 17)
    prob = inst.lifted.problem
    cfg = EnvelopeConfig.for_problem(prob)
    rng = np.random.default_rng(32)
    h = 1e-6
    for _ in range(20):
        z = rng.standard_normal(prob.dim_x)
        y = rng.standard_normal(prob.dim_y)
        ev = evaluate(prob, cfg, z, y)
        for gi, block, point in ((0, "x", z), (1, "y", y)):
            grad = ev.grad_x if block == "x" else ev.grad_y
            fd = np.zeros_like(point)
            for i in range(point.shape[0]):
                e = np.zeros_like(point)
                e[i] = h
                if block == "x":
                    hi = evaluate(prob, cfg, z + e, y, need_grad=False).xi
                    lo = evaluate(prob, cfg, z - e, y, need_grad=False).xi
                else:
                    hi = evaluate(prob, cfg, z, y + e, need_grad=False).xi
                    lo = evaluate(prob, cfg, z, y - e, need_grad=False).xi
                fd[i] = (hi - lo) / (2.0 * h)
            rel = np.linalg.norm(grad - fd) / (1.0 + np.linalg.norm(fd))
            assert rel <= 1e-6


def test_sandwich_inequalities():
    # psi >= f - r2(y) + (eta/2)|R|^2 and
    # f(x, T) - r2(T) >= psi + eta (1 - eta L)/2 |R|^2 for eta < 1/L
    inst = make_synthetic(4, 4, 1.0, 23)
    prob = inst.lifted.problem
    L = prob.lipschitz
    cfg = EnvelopeConfig(eta=0.5 / L, alpha=EnvelopeConfig.threshold(0.5 / L, 1.0), mu=1.0)
    rng = np.random.default_rng(33)
    for _ in range(200):
        z = 2.0 * rng.standard_normal(prob.dim_x)
        y = 2.0 * rng.standard_normal(prob.dim_y)
        ev = evaluate(prob, cfg, z, y, need_grad=False)
        r2y = prob.r2.value(y)
        r2T = prob.r2.value(ev.T)
        rr = float(ev.R @ ev.R)
        lower = ev.f_val - r2y + 0.5 * cfg.eta * rr
        assert ev.psi - lower >= -1e-10
        upper_gap = (
            prob.f.value(z, ev.T) - r2T
            - ev.psi
            - 0.5 * cfg.eta * (1.0 - cfg.eta * L) * rr
        )
        assert upper_gap >= -1e-10


def test_fd_fallback_flag():
    # an oracle without Hessian products: gradients still computed, flagged
    f = FunctionOracle(
        eval=lambda x, y: float(x @ y - 0.5 * y @ y),
        grad_x=lambda x, y: np.asarray(y, float).copy(),
        grad_y=lambda x, y: np.asarray(x, float) - np.asarray(y, float),
        lipschitz_grad=2.0,
        strong_concavity=1.0,
    )
    prob = MinimaxProblem(f=f, X=WholeSpace(2), Y=WholeSpace(2))
    cfg = EnvelopeConfig(eta=0.25, alpha=8.0, mu=1.0)
    x = np.array([0.3, -0.2])
    y = np.array([0.1, 0.4])
    ev = evaluate(prob, cfg, x, y)
    assert ev.used_fd_hvp
    # exact values from the bilinear structure: Hxy = I, Hyy = -I
    R = ev.R
    exact_gx = y + cfg.alpha * cfg.eta * R
    exact_gy = cfg.alpha * (R - cfg.eta * R) - (cfg.alpha - 1.0) * (x - y)
    assert np.allclose(ev.grad_x, exact_gx, atol=1e-5)
    assert np.allclose(ev.grad_y, exact_gy, atol=1e-5)
    # at the inner maximizer R = 0, so no Hessian products are needed
    ev0 = evaluate(prob, cfg, x, x.copy())
    assert ev0.residual_norm == 0.0
    assert not ev0.used_fd_hvp
    assert np.allclose(ev0.grad_y, np.zeros(2), atol=0)


def test_near_kink_flag_on_box_y():
    f = FunctionOracle(
        eval=lambda x, y: float(x @ y - 0.5 * y @ y),
        grad_x=lambda x, y: np.asarray(y, float).copy(),
        grad_y=lambda x, y: np.asarray(x, float) - np.asarray(y, float),
        lipschitz_grad=2.0,
        strong_concavity=1.0,
        hvp_yy=lambda x, y, v: -np.asarray(v, float),
        hvp_xy=lambda x, y, v: np.asarray(v, float).copy(),
    )
    prob = MinimaxProblem(f=f, X=WholeSpace(1), Y=BoxSet([-1.0], [1.0]))
    cfg = EnvelopeConfig(eta=0.5, alpha=4.0, mu=1.0)
    # large x drives T onto the box boundary
    ev = evaluate(prob, cfg, np.array([50.0]), np.array([0.5]))
    assert ev.T.tolist() == [1.0]
    assert ev.near_kink
    ev_in = evaluate(prob, cfg, np.array([0.6]), np.array([0.5]))
    assert not ev_in.near_kink


def test_nonfinite_oracle_raises():
    f = FunctionOracle(
        eval=lambda x, y: float("inf"),
        grad_x=lambda x, y: np.zeros(1),
        grad_y=lambda x, y: np.zeros(1),
        lipschitz_grad=1.0,
        strong_concavity=1.0,
    )
    prob = MinimaxProblem(f=f, X=WholeSpace(1), Y=WholeSpace(1))
    cfg = EnvelopeConfig(eta=1.0, alpha=2.0, mu=1.0)
    with pytest.raises(NonFiniteValue):
        evaluate(prob, cfg, [0.0], [0.0])
