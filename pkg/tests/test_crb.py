import numpy as np
import pytest

from crbsense import crb, measmodel, wls
from crbsense.crb import (
    build_true_weights,
    crb_ratio,
    fim_gain_identity_check,
    gain_pair,
    state_bus_ids,
)
from crbsense.measmodel import assumed_sigmas, build_noise_library, sample_measurements
from crbsense.noise import DistributionSpec, calibrate, fisher_information
from crbsense.powerflow import solve_power_flow
from crbsense.wls import ObservabilityError, build_weights, estimate


@pytest.fixture(scope="module")
def gaussian_cell(net, ybus, plan, compiled):
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("gaussian", 0.20)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    z = sample_measurements(plan, z_true, lib, np.random.default_rng(8), sigmas=sig)
    w = build_weights(sig)
    res = estimate(compiled, z, w)
    assert res.converged
    hmat = compiled.jacobian(res.x_hat)
    return z_true, sig, lib, w, res, hmat


def test_state_bus_ids(net):
    ids = state_bus_ids(net)
    assert ids.tolist() == list(range(1, 15))


def test_gaussian_rho_is_exactly_one(net, plan, gaussian_cell):
    z_true, sig, lib, w, res, hmat = gaussian_cell
    w_true = build_true_weights(plan, lib, w)
    assert np.array_equal(w_true, w)  # bitwise: 1/(sigma*sigma) both ways
    rep = crb_ratio(hmat, w, w_true, state_bus_ids(net))
    assert np.all(rep.rho == 1.0)
    assert np.all(rep.assumed_var > 0)


def test_fim_gain_identity(net, plan, gaussian_cell):
    z_true, sig, lib, w, res, hmat = gaussian_cell
    w_true = build_true_weights(plan, lib, w)
    ok, dev = fim_gain_identity_check(res, gain_pair(hmat, w, w_true))
    assert ok and dev == 0.0


def test_identity_fails_for_laplace(net, plan, compiled, ybus):
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("laplace", 0.20)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    w = build_weights(sig)
    w_true = build_true_weights(plan, lib, w)
    # Laplace Fisher doubles every variant-driven pseudo weight
    for i in plan.variant_indices():
        assert w_true[i] == pytest.approx(2.0 * w[i], rel=1e-14)
    z = sample_measurements(plan, z_true, lib, np.random.default_rng(8), sigmas=sig)
    res = estimate(compiled, z, w)
    hmat = compiled.jacobian(res.x_hat)
    ok, dev = fim_gain_identity_check(res, gain_pair(hmat, w, w_true))
    # deviation normalized by the largest gain entry (dominated by the
    # zero-injection floor rows), so it is small but far above tolerance
    assert not ok and dev > 1e-3


def test_doubled_weights_halve_the_bound(rng):
    """Linear toy: W_true = 2 W_assumed gives rho = 1/2 on every state."""
    hmat = rng.normal(size=(12, 5))
    w = rng.uniform(0.5, 2.0, size=12)
    rep = crb_ratio(hmat, w, 2.0 * w, np.arange(5))
    assert np.allclose(rep.rho, 0.5, rtol=1e-12)


def test_rho_bounded_by_weight_ratio_extremes(rng):
    """Loewner sandwich: rho lies within [min, max] of w_assumed/w_true."""
    hmat = rng.normal(size=(15, 6))
    w = rng.uniform(0.5, 2.0, size=15)
    scale = rng.uniform(1.0, 3.0, size=15)
    rep = crb_ratio(hmat, w, scale * w, np.arange(6))
    assert np.all(rep.rho <= 1.0 / scale.min() + 1e-12)
    assert np.all(rep.rho >= 1.0 / scale.max() - 1e-12)


def test_monotonicity_rho_below_one(net, ybus, plan, compiled):
    """W_true >= W_assumed elementwise implies every rho <= 1."""
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    for variant in (
        DistributionSpec("laplace", 0.10),
        DistributionSpec("student_t", 0.30, nu=4.0),
        DistributionSpec("skew_normal", 0.20, alpha=7.0),
    ):
        sig = assumed_sigmas(plan, z_true, variant)
        lib = build_noise_library(plan, z_true, variant, sigmas=sig)
        w = build_weights(sig)
        w_true = build_true_weights(plan, lib, w)
        assert np.all(w_true >= w)
        hmat = compiled.jacobian(sol.state)
        rep = crb_ratio(hmat, w, w_true, state_bus_ids(net))
        assert np.all(rep.rho < 1.0)
        assert np.all(rep.rho > 0.0)


def test_rho_invariant_to_row_permutation(net, ybus, plan, compiled, rng):
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("student_t", 0.20, nu=3.0)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    w = build_weights(sig)
    w_true = build_true_weights(plan, lib, w)
    hmat = compiled.jacobian(sol.state)
    rep = crb_ratio(hmat, w, w_true, state_bus_ids(net))
    perm = rng.permutation(plan.m)
    rep_p = crb_ratio(hmat[perm], w[perm], w_true[perm], state_bus_ids(net))
    assert np.allclose(rep.rho, rep_p.rho, rtol=1e-12)


def test_rho_bitwise_blind_to_bias(net, ybus, plan, compiled):
    """Mean-shifting the pseudo law leaves the whole report bit-identical."""
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    hmat = compiled.jacobian(sol.state)
    reports = []
    for variant in (
        DistributionSpec("gaussian", 0.20),
        DistributionSpec("biased_gaussian", 0.20, bias_pct=-0.30),
        DistributionSpec("biased_gaussian", 0.20, bias_pct=0.30),
    ):
        sig = assumed_sigmas(plan, z_true, variant)
        lib = build_noise_library(plan, z_true, variant, sigmas=sig)
        w = build_weights(sig)
        w_true = build_true_weights(plan, lib, w)
        reports.append(crb_ratio(hmat, w, w_true, state_bus_ids(net)))
    for rep in reports[1:]:
        assert np.array_equal(rep.rho, reports[0].rho)
        assert np.array_equal(rep.assumed_var, reports[0].assumed_var)
        assert np.array_equal(rep.true_var, reports[0].true_var)


def test_report_block_accessors(net, rng):
    hmat = rng.normal(size=(40, 28))
    w = rng.uniform(0.5, 2.0, size=40)
    rep = crb_ratio(hmat, w, 2.0 * w, state_bus_ids(net))
    assert rep.n_bus_states == 14
    assert rep.theta_rho().size == 14
    assert rep.vmag_rho().size == 14
    assert np.array_equal(np.r_[rep.theta_rho(), rep.vmag_rho()], rep.rho)


def test_singular_gain_raises(rng):
    hmat = np.zeros((6, 4))
    hmat[:, 0] = 1.0  # rank 1
    with pytest.raises(ObservabilityError):
        crb_ratio(hmat, np.ones(6), np.ones(6), np.arange(4))


def test_true_weights_use_scalar_fisher(net, ybus, plan, compiled):
    sol = solve_power_flow(net, ybus, 1.0)
    z_true = compiled.h(sol.state)
    variant = DistributionSpec("student_t", 0.20, nu=4.0)
    sig = assumed_sigmas(plan, z_true, variant)
    lib = build_noise_library(plan, z_true, variant, sigmas=sig)
    w = build_weights(sig)
    w_true = build_true_weights(plan, lib, w)
    for i in plan.variant_indices():
        assert w_true[i] == fisher_information(lib[i])
    for i, d in enumerate(plan.descriptors):
        if d.source == "real" or d.zero_injection:
            assert w_true[i] == w[i]
