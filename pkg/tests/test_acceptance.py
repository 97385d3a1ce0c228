"""One test per headline acceptance criterion, each reported with a single
pass/fail line in the terminal summary (see conftest.record_acceptance)."""

import json

import numpy as np
import pytest

from conftest import record_acceptance, rho_by_variant
from crbsense import cli, experiment, measmodel, noise, wls
from crbsense.crb import build_true_weights, fim_gain_identity_check, gain_pair
from crbsense.measmodel import assumed_sigmas, build_noise_library
from crbsense.powerflow import StateVector, solve_power_flow


def check(name, ok, detail):
    record_acceptance(name, ok, detail)
    assert ok, f"{name}: {detail}"


def medians(result):
    by_variant = {}
    for row in result.rmse:
        by_variant.setdefault(row.variant_id, []).append(row.rmse_vmag)
    return {k: float(np.median(v)) for k, v in by_variant.items()}


def test_gaussian_baseline_exactness(full_study):
    result, _ = full_study
    reps = rho_by_variant(result)
    worst = 0.0
    n = 0
    for vid in ("gaussian_s10", "gaussian_s20", "gaussian_s30"):
        for rep in reps[vid]:
            worst = max(worst, float(np.max(np.abs(rep.rho - 1.0))))
            n += 1
    check(
        "gaussian baseline exactness",
        n == 300 and worst < 1e-10,
        f"{n} reports, max |rho - 1| = {worst:.3e}",
    )


def test_universal_overstatement(full_study):
    result, _ = full_study
    reps = rho_by_variant(result)
    total = below = 0
    for vid, rs in reps.items():
        if vid.split("_")[0] not in ("student", "laplace", "skew"):
            continue
        for rep in rs:
            v = rep.vmag_rho()
            total += v.size
            below += int(np.count_nonzero(v < 1.0))
    check(
        "universal overstatement (non-Gaussian rho < 1)",
        total > 0 and below == total,
        f"{below}/{total} |V|-state ratios below 1",
    )


def test_bias_blindness(full_study, tmp_path):
    result, _ = full_study
    path = tmp_path / "crb.csv"
    experiment.write_crb_csv(path, result.crb_reports)
    rows = {}
    for line in path.read_text().splitlines()[2:]:
        cells = line.split(",")
        # per-row identity (scenario, lambda, bus, state kind) plus the rho
        # column; the variance columns depend on each variant's own noise
        # draws through x_hat, rho is what bias cannot touch
        rows.setdefault(cells[0], []).append(",".join(cells[1:5] + cells[7:]))
    baseline = rows["gaussian_s20"]
    biased_ids = [vid for vid in rows if vid.startswith("biased_gaussian")]
    identical = all(rows[vid] == baseline for vid in biased_ids)
    exact_one = all(
        np.all(rep.rho == 1.0)
        for rep in result.crb_reports
        if rep.variant_id.startswith("biased_gaussian")
    )
    check(
        "bias blindness (rho = 1, CSV bitwise identical to unbiased)",
        len(biased_ids) == 6 and identical and exact_one,
        f"{len(biased_ids)} biased variants, bitwise match = {identical}",
    )


def test_fisher_information_values():
    cases = [
        (noise.DistributionSpec("gaussian", 0.20), 1.0),
        (noise.DistributionSpec("laplace", 0.20), 2.0),
        (noise.DistributionSpec("student_t", 0.20, nu=4.0), 10.0 / 7.0),
    ]
    worst = 0.0
    for spec, expected in cases:
        cn = noise.calibrate(spec, mu_star=1.0)
        closed = noise.fisher_information(cn) * cn.sigma**2
        quad = noise.fisher_information_quadrature(cn) * cn.sigma**2
        worst = max(
            worst, abs(closed - expected) / expected, abs(quad - closed) / closed
        )
    inequality = True
    for spec in noise.table1_variants():
        cn = noise.calibrate(spec, mu_star=1.0)
        product = noise.fisher_information(cn) * cn.sigma**2
        if spec.family in ("gaussian", "biased_gaussian"):
            inequality &= abs(product - 1.0) < 1e-15
        else:
            inequality &= product > 1.0 + 1e-6
    check(
        "Fisher information closed forms vs quadrature + inequality",
        worst < 1e-8 and inequality,
        f"max relative deviation {worst:.3e}, inequality holds = {inequality}",
    )


def test_coverage_reproduction(full_study):
    result, _ = full_study
    cov = {(r.variant_id, r.level): r for r in result.coverage}
    msgs = []
    ok = True

    for vid in ("gaussian_s10", "gaussian_s20", "gaussian_s30"):
        c68, c95 = cov[(vid, 0.68)], cov[(vid, 0.95)]
        ok &= abs(c68.cov_wls - 0.68) <= 0.03 and abs(c95.cov_wls - 0.95) <= 0.02
        msgs.append(f"{vid} {c68.cov_wls:.3f}/{c95.cov_wls:.3f}")

    bm30 = cov[("biased_gaussian_s20_bm30", 0.68)].cov_wls
    ok &= 0.25 <= bm30 <= 0.40
    msgs.append(f"bm30@68 {bm30:.3f}")

    for (vid, level), row in cov.items():
        fam = vid.split("_")[0]
        if fam in ("student", "laplace", "skew") and level == 0.68:
            ok &= row.cov_true < row.cov_wls
        if fam in ("gaussian", "biased"):
            ok &= row.cov_wls == row.cov_true
    check("coverage reproduction (banded)", ok, "; ".join(msgs))


def test_laplace_floor(full_study):
    result, _ = full_study
    lo = min(
        float(rep.rho.min())
        for rep in result.crb_reports
        if rep.variant_id.startswith("laplace")
    )
    check("Laplace floor (min rho > 0.45)", lo > 0.45, f"min rho = {lo:.4f}")


def test_rmse_trends(full_study):
    result, _ = full_study
    med = medians(result)
    g = [med[f"gaussian_s{s}"] for s in (10, 20, 30)]
    gaussian_monotone = g[0] < g[1] < g[2]

    # pool the two bias signs per |bias| level: at 10 % the per-sign medians
    # sit at Monte Carlo noise level around the unbiased baseline
    by_variant = {}
    for row in result.rmse:
        by_variant.setdefault(row.variant_id, []).append(row.rmse_vmag)
    pooled = [
        float(
            np.median(
                by_variant[f"biased_gaussian_s20_bm{s}"]
                + by_variant[f"biased_gaussian_s20_bp{s}"]
            )
        )
        for s in (10, 20, 30)
    ]
    biased_ok = pooled[0] < pooled[1] < pooled[2] and pooled[0] > med["gaussian_s20"]

    centered_ok = True
    for s in (10, 20, 30):
        base = med[f"gaussian_s{s}"]
        for vid in (f"laplace_s{s}", f"student_t_s{s}_nu3", f"student_t_s{s}_nu4"):
            centered_ok &= 0.5 * base <= med[vid] <= 1.5 * base
    check(
        "RMSE trends (sigma, bias, centered bands)",
        gaussian_monotone and biased_ok and centered_ok,
        f"gaussian medians {g[0]:.4f}<{g[1]:.4f}<{g[2]:.4f}, "
        f"biased monotone={biased_ok}, centered in band={centered_ok}",
    )


def test_estimator_correctness_oracles(net, ybus, plan, compiled, rng):
    # noise-free recovery
    sol = solve_power_flow(net, ybus, 1.0)
    z = compiled.h(sol.state)
    sig = assumed_sigmas(plan, z, noise.DistributionSpec("gaussian", 0.20))
    res = wls.estimate(compiled, z, wls.build_weights(sig))
    rec_err = float(np.max(np.abs(res.x_hat.as_array() - sol.state.as_array())))

    # analytic vs central-difference Jacobian
    analytic = compiled.jacobian(sol.state)
    eps = 1e-6
    x0 = sol.state.as_array()
    fd = np.empty_like(analytic)
    for k in range(x0.size):
        hi, lo = x0.copy(), x0.copy()
        hi[k] += eps
        lo[k] -= eps
        fd[:, k] = (
            compiled.h(StateVector.from_array(hi)) - compiled.h(StateVector.from_array(lo))
        ) / (2 * eps)
    jac_err = float(np.max(np.abs(analytic - fd)) / max(1.0, np.max(np.abs(analytic))))

    # linear toy vs closed form
    a = rng.normal(size=(10, 4))
    w = wls.build_weights(rng.uniform(0.5, 2.0, 10))
    zt = rng.normal(size=10)

    class Lin:
        m, n_state = a.shape

        def h(self, x):
            return a @ x.as_array()

        def jacobian(self, x):
            return a

    lin = wls.estimate(Lin(), zt, w, x0=StateVector(np.zeros(2), np.zeros(2)))
    x_exact = np.linalg.solve(a.T @ (w[:, None] * a), a.T @ (w * zt))
    lin_err = float(np.max(np.abs(lin.x_hat.as_array() - x_exact)))

    # gain equals the Fisher information under Gaussian weights
    lib = build_noise_library(plan, z, noise.DistributionSpec("gaussian", 0.20), sigmas=sig)
    w_full = wls.build_weights(sig)
    identity_ok, _ = fim_gain_identity_check(
        res, gain_pair(compiled.jacobian(res.x_hat), w_full, build_true_weights(plan, lib, w_full))
    )

    ok = rec_err < 1e-8 and jac_err < 1e-6 and lin_err < 1e-12 and identity_ok
    check(
        "estimator correctness oracles",
        ok,
        f"recovery {rec_err:.2e}, jacobian {jac_err:.2e}, "
        f"linear toy {lin_err:.2e}, gain identity {identity_ok}",
    )


def test_determinism(tmp_path):
    digests = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = cli.main(
            [
                "sweep",
                "--seed",
                "42",
                "--scenarios",
                "6",
                "--coverage-scenarios",
                "6",
                "--outdir",
                str(out),
            ]
        )
        assert code == 0
        digests.append(
            {
                name: experiment.file_sha256(out / name)
                for name in ("crb_ratios.csv", "coverage.csv", "rmse.csv")
            }
        )
    check(
        "determinism (same seed, byte-identical CSVs)",
        digests[0] == digests[1],
        f"sha256 match = {digests[0] == digests[1]}",
    )


def test_non_reproducible_statistics_documented(plan, variants):
    """Per-bus extreme statistics are documented as seed-dependent rather
    than asserted; the manifest must carry that caveat."""
    payload = experiment.manifest_payload(
        master_seed=42,
        sigma_seed=0,
        n_scenarios_crb=100,
        n_scenarios_coverage=1000,
        pf_tol=1e-8,
        wls_tol=1e-8,
        variants=variants,
        network_sha256=None,
        plan=plan,
        failures=[],
    )
    documented = any("not reproduction targets" in n for n in payload["notes"])
    check(
        "non-reproducible statistics documented in manifest",
        documented,
        "manifest notes flag per-bus extremes as seed-dependent",
    )


def test_full_study_has_no_failed_cells(full_study):
    result, _ = full_study
    assert result.failures == []


def test_skew_normal_low_alpha_near_one(full_study):
    result, _ = full_study
    lo = min(
        float(rep.rho.min())
        for rep in result.crb_reports
        if rep.variant_id == "skew_normal_s20_a2"
    )
    assert lo > 0.8
