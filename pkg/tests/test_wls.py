import numpy as np
import pytest

from crbsense import measmodel, wls
from crbsense.measmodel import assumed_sigmas, build_noise_library, sample_measurements
from crbsense.noise import DistributionSpec
from crbsense.powerflow import StateVector, solve_power_flow
from crbsense.wls import EstimationResult, ObservabilityError, build_weights, estimate


class LinearModel:
    """h(x) = A x + c with an exact closed-form WLS solution."""

    def __init__(self, a, c):
        self.a = a
        self.c = c
        self.m, self.n_state = a.shape

    def h(self, x):
        return self.a @ x.as_array() + self.c

    def jacobian(self, x):
        return self.a


def test_build_weights():
    w = build_weights(np.array([0.5, 2.0]))
    assert np.array_equal(w, np.array([4.0, 0.25]))
    with pytest.raises(ValueError):
        build_weights(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        build_weights(np.array([1.0, np.nan]))


def test_linear_toy_matches_closed_form(rng):
    a = rng.normal(size=(9, 4))
    c = rng.normal(size=9)
    sig = rng.uniform(0.5, 2.0, size=9)
    z = rng.normal(size=9)
    w = build_weights(sig)
    model = LinearModel(a, c)
    x0 = StateVector(theta=np.zeros(2), vmag=np.zeros(2))
    res = estimate(model, z, w, x0=x0)
    assert res.converged
    assert res.iterations <= 2  # linear problem: one Newton step
    x_exact = np.linalg.solve(a.T @ (w[:, None] * a), a.T @ (w * (z - c)))
    assert np.max(np.abs(res.x_hat.as_array() - x_exact)) < 1e-12
    r = z - model.h(res.x_hat)
    assert res.objective == pytest.approx(float(r @ (w * r)))


def test_linear_gain_is_normal_matrix(rng):
    a = rng.normal(size=(7, 4))
    w = build_weights(rng.uniform(0.5, 1.5, size=7))
    model = LinearModel(a, np.zeros(7))
    res = estimate(model, rng.normal(size=7), w, x0=StateVector(np.zeros(2), np.zeros(2)))
    assert np.allclose(res.gain, a.T @ (w[:, None] * a), rtol=1e-14)
    # SPD: symmetric with positive eigenvalues
    assert np.allclose(res.gain, res.gain.T)
    assert np.min(np.linalg.eigvalsh(res.gain)) > 0


def test_noise_free_recovery(net, ybus, plan, compiled):
    """With z = h(x*) exactly, the estimator returns x* itself."""
    for lam in (0.6, 1.0, 1.4):
        sol = solve_power_flow(net, ybus, lam)
        z = compiled.h(sol.state)
        sig = assumed_sigmas(plan, z, DistributionSpec("gaussian", 0.20))
        res = estimate(compiled, z, build_weights(sig))
        assert res.converged
        err = np.max(np.abs(res.x_hat.as_array() - sol.state.as_array()))
        assert err < 1e-8


def test_stationarity_at_solution(net, ybus, plan, compiled):
    """The WLS normal-equations gradient vanishes at x_hat."""
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("gaussian", 0.20)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    z = sample_measurements(plan, z_true, lib, np.random.default_rng(0), sigmas=sig)
    w = build_weights(sig)
    res = estimate(compiled, z, w)
    assert res.converged
    hmat = compiled.jacobian(res.x_hat)
    grad = hmat.T @ (w * (z - compiled.h(res.x_hat)))
    assert np.max(np.abs(grad)) < 1e-7 * np.max(w)


def test_estimate_unbiased_under_gaussian(net, ybus, plan, compiled):
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("gaussian", 0.05)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    w = build_weights(sig)
    rng = np.random.default_rng(2)
    errs = []
    for _ in range(200):
        z = sample_measurements(plan, z_true, lib, rng, sigmas=sig)
        res = estimate(compiled, z, w)
        assert res.converged
        errs.append(res.x_hat.vmag - sol.state.vmag)
    mean_err = np.abs(np.mean(errs, axis=0))
    sd = np.std(errs, axis=0) / np.sqrt(len(errs))
    assert np.all(mean_err < 5 * sd + 1e-6)


def test_rank_deficient_plan_raises(net, ybus):
    descs = tuple(
        d
        for d in measmodel.default_plan(net).descriptors
        if d.source == "real" and d.kind == "v_mag"
    )
    plan = measmodel.MeasurementPlan(descs)
    cp = measmodel.compile_plan(net, ybus, plan)
    z = np.ones(plan.m)
    w = np.ones(plan.m)
    with pytest.raises(ObservabilityError, match="rank"):
        estimate(cp, z, w)


def test_damping_reaches_same_minimum(net, ybus, plan, compiled):
    """Step halving may reshape the iterate path but both variants land on
    the same stationary point."""
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("gaussian", 0.20)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    z = sample_measurements(plan, z_true, lib, np.random.default_rng(3), sigmas=sig)
    w = build_weights(sig)
    plain = estimate(compiled, z, w)
    damped = estimate(compiled, z, w, damping=True)
    assert plain.converged and damped.converged
    assert np.allclose(plain.x_hat.as_array(), damped.x_hat.as_array(), atol=1e-7)
    assert damped.objective == pytest.approx(plain.objective, rel=1e-10)


def test_nonconvergence_flagged(net, ybus, plan, compiled):
    sol = solve_power_flow(net, ybus, 1.3)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("gaussian", 0.20)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    z = sample_measurements(plan, z_true, lib, np.random.default_rng(4), sigmas=sig)
    res = estimate(compiled, z, build_weights(sig), max_iter=1)
    assert isinstance(res, EstimationResult)
    assert not res.converged
    assert res.final_step_norm > 1e-8
