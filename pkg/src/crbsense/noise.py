"""Pseudo-measurement noise families: spread-matched calibration, sampling,
and scalar Fisher information (closed form plus a quadrature oracle).

All five families are calibrated to a common standard deviation sigma so
that shape effects are isolated from variance effects.  The skew-normal is
mode-centered, which makes its mean exceed the true value for alpha > 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.special import erfcx, gammaln

FAMILIES = ("gaussian", "student_t", "laplace", "skew_normal", "biased_gaussian")

SQRT2PI = float(np.sqrt(2.0 * np.pi))


class QuadratureError(RuntimeError):
    """Quadrature failed to meet tolerance; carries the achieved estimate."""

    def __init__(self, msg: str, estimate: float, abserr: float):
        super().__init__(msg)
        self.estimate = estimate
        self.abserr = abserr


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    sigma_pct: float  # relative spread as a fraction, e.g. 0.2 for 20 %
    nu: float | None = None
    alpha: float | None = None
    bias_pct: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.sigma_pct <= 0:
            raise ValueError("sigma_pct must be > 0")
        if self.family == "student_t":
            if self.nu is None or self.nu <= 2:
                raise ValueError("student_t needs nu > 2 for spread matching")
        elif self.nu is not None:
            raise ValueError("nu only applies to student_t")
        if self.family == "skew_normal":
            if self.alpha is None:
                raise ValueError("skew_normal needs alpha")
        elif self.alpha is not None:
            raise ValueError("alpha only applies to skew_normal")
        if self.family == "biased_gaussian":
            if self.bias_pct is None:
                raise ValueError("biased_gaussian needs bias_pct")
        elif self.bias_pct is not None:
            raise ValueError("bias_pct only applies to biased_gaussian")

    @property
    def variant_id(self) -> str:
        pct = f"s{round(self.sigma_pct * 100):g}"
        if self.family == "student_t":
            return f"student_t_{pct}_nu{self.nu:g}"
        if self.family == "skew_normal":
            return f"skew_normal_{pct}_a{self.alpha:g}"
        if self.family == "biased_gaussian":
            sign = "m" if self.bias_pct < 0 else "p"
            return f"biased_gaussian_{pct}_b{sign}{round(abs(self.bias_pct) * 100):g}"
        return f"{self.family}_{pct}"


def table1_variants() -> list[DistributionSpec]:
    """The 22-variant grid: 3 Gaussian, 6 Student-t, 3 Laplace,
    4 skew-normal, 6 biased Gaussian."""
    variants: list[DistributionSpec] = []
    for s in (0.10, 0.20, 0.30):
        variants.append(DistributionSpec("gaussian", s))
    for s in (0.10, 0.20, 0.30):
        for nu in (3.0, 4.0):
            variants.append(DistributionSpec("student_t", s, nu=nu))
    for s in (0.10, 0.20, 0.30):
        variants.append(DistributionSpec("laplace", s))
    for a in (2.0, 5.0, 7.0, 10.0):
        variants.append(DistributionSpec("skew_normal", 0.20, alpha=a))
    for bias in (-0.30, -0.20, -0.10, 0.10, 0.20, 0.30):
        variants.append(DistributionSpec("biased_gaussian", 0.20, bias_pct=bias))
    assert len(variants) == 22
    return variants


def save_variant_grid(path, variants: list[DistributionSpec]) -> None:
    rows = []
    for v in variants:
        row = {"family": v.family, "sigma_pct": v.sigma_pct}
        if v.nu is not None:
            row["nu"] = v.nu
        if v.alpha is not None:
            row["alpha"] = v.alpha
        if v.bias_pct is not None:
            row["bias_pct"] = v.bias_pct
        rows.append(row)
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def load_variant_grid(path) -> list[DistributionSpec]:
    with open(path) as fh:
        rows = json.load(fh)
    return [DistributionSpec(**row) for row in rows]


# --- skew-normal helpers (standardized: mode 0, std 1) ---


def _sn_zeta(x):
    """phi(x)/Phi(x), stable for very negative x via erfcx."""
    return np.sqrt(2.0 / np.pi) / erfcx(-x / np.sqrt(2.0))


@lru_cache(maxsize=None)
def _sn_std_params(alpha: float) -> tuple[float, float, float]:
    """(xi, omega, mode_offset t0) for unit std and mode at zero."""
    if alpha == 0.0:
        return 0.0, 1.0, 0.0
    delta = alpha / np.hypot(1.0, alpha)
    omega = 1.0 / np.sqrt(1.0 - 2.0 * delta**2 / np.pi)

    # standardized mode: t * Phi(alpha t) = alpha * phi(alpha t)
    def grad(t):
        return alpha * _sn_zeta(alpha * t) - t

    sign = 1.0 if alpha > 0 else -1.0
    lo, hi = 0.0, sign * 2.0
    while grad(hi) * sign > 0:
        hi *= 2.0
        if abs(hi) > 1e3:
            raise RuntimeError(f"skew-normal mode bracket failed for alpha={alpha}")
    t0 = optimize.brentq(grad, min(lo, hi), max(lo, hi), xtol=1e-14)
    xi = -omega * t0
    return float(xi), float(omega), float(t0)


def _sn_logpdf_std_score(u, alpha):
    """Score of the standard skew-normal in its own coordinate u."""
    return -u + alpha * _sn_zeta(alpha * u)


@lru_cache(maxsize=None)
def _sn_fisher_std(alpha: float) -> float:
    """Location Fisher information of the unit-std skew-normal."""
    _, omega, _ = _sn_std_params(alpha)

    def integrand(u):
        score = _sn_logpdf_std_score(u, alpha)
        dens = 2.0 * np.exp(-0.5 * u * u) / SQRT2PI * _sn_cdf_term(alpha * u)
        return score * score * dens

    val, err = _split_quad(integrand)
    return float(val) / omega**2


def _sn_cdf_term(x):
    # Phi(x); scipy.special.ndtr inlined via erfcx-free stable path is not
    # needed here because the score handles the extreme tail.
    from scipy.special import ndtr

    return ndtr(x)


# --- calibration ---


@dataclass(frozen=True)
class CalibratedNoise:
    """A distribution spec pinned to a concrete true value and spread."""

    spec: DistributionSpec
    mu_star: float
    sigma: float
    t_scale: float | None = None
    laplace_b: float | None = None
    sn_xi: float | None = None
    sn_omega: float | None = None
    mean: float | None = None  # gaussian / biased gaussian center


def calibrate(spec: DistributionSpec, mu_star: float, sigma: float | None = None) -> CalibratedNoise:
    """Pin a spec to a true value; sigma defaults to sigma_pct * |mu_star|.

    Callers with near-zero mu_star must pass an explicit sigma (the
    measurement plan applies its proportional-sigma floor before calling).
    """
    if not np.isfinite(mu_star):
        raise ValueError("mu_star must be finite")
    if sigma is None:
        sigma = spec.sigma_pct * abs(mu_star)
    if sigma <= 0:
        raise ValueError("calibrated sigma must be > 0; apply a floor for tiny mu_star")
    fam = spec.family
    if fam == "gaussian":
        return CalibratedNoise(spec, mu_star, sigma, mean=mu_star)
    if fam == "biased_gaussian":
        return CalibratedNoise(spec, mu_star, sigma, mean=mu_star * (1.0 + spec.bias_pct))
    if fam == "student_t":
        s = sigma / np.sqrt(spec.nu / (spec.nu - 2.0))
        return CalibratedNoise(spec, mu_star, sigma, t_scale=float(s))
    if fam == "laplace":
        return CalibratedNoise(spec, mu_star, sigma, laplace_b=float(sigma / np.sqrt(2.0)))
    # skew_normal: mode-centered on mu_star, std matched to sigma
    xi_std, omega_std, _ = _sn_std_params(spec.alpha)
    return CalibratedNoise(
        spec,
        mu_star,
        sigma,
        sn_xi=float(mu_star + sigma * xi_std),
        sn_omega=float(sigma * omega_std),
    )


def sample(cn: CalibratedNoise, rng: np.random.Generator, size=None) -> float | np.ndarray:
    """Draw from the calibrated law, centered per the family's convention."""
    fam = cn.spec.family
    if fam in ("gaussian", "biased_gaussian"):
        return rng.normal(cn.mean, cn.sigma, size=size)
    if fam == "student_t":
        return cn.mu_star + cn.t_scale * rng.standard_t(cn.spec.nu, size=size)
    if fam == "laplace":
        return rng.laplace(cn.mu_star, cn.laplace_b, size=size)
    # skew-normal via the delta-representation: delta*|u0| + sqrt(1-d^2)*u1
    alpha = cn.spec.alpha
    delta = alpha / np.hypot(1.0, alpha)
    u0 = rng.normal(size=size)
    u1 = rng.normal(size=size)
    t = delta * np.abs(u0) + np.sqrt(1.0 - delta**2) * u1
    return cn.sn_xi + cn.sn_omega * t


# --- scalar Fisher information ---


def fisher_information(cn: CalibratedNoise) -> float:
    """Location Fisher information, 1/units^2.

    Closed form for Gaussian/biased-Gaussian/Laplace/Student-t; cached
    quadrature for the skew-normal.  Independent of mu_star and bias by
    construction.
    """
    fam = cn.spec.family
    if fam in ("gaussian", "biased_gaussian"):
        return 1.0 / (cn.sigma * cn.sigma)
    if fam == "laplace":
        return 1.0 / (cn.laplace_b * cn.laplace_b)
    if fam == "student_t":
        nu = cn.spec.nu
        return (nu + 1.0) / ((nu + 3.0) * cn.t_scale * cn.t_scale)
    return _sn_fisher_std(cn.spec.alpha) / (cn.sigma * cn.sigma)


def _split_quad(f, abs_tol: float = 1e-12) -> tuple[float, float]:
    """Integrate f over the whole line, split at the origin.

    The split handles the Laplace kink and lets QUADPACK's semi-infinite
    transform bound the heavy polynomial tails of Student-t.
    """
    lo, err_lo = integrate.quad(f, -np.inf, 0.0, epsabs=abs_tol, epsrel=1e-12, limit=300)
    hi, err_hi = integrate.quad(f, 0.0, np.inf, epsabs=abs_tol, epsrel=1e-12, limit=300)
    return lo + hi, err_lo + err_hi


def _standardized_score_sq_density(spec: DistributionSpec):
    """Integrand of the Fisher integral for the sigma = 1, centered law."""
    fam = spec.family
    if fam in ("gaussian", "biased_gaussian"):

        def f(e):
            return e * e * np.exp(-0.5 * e * e) / SQRT2PI

        return f
    if fam == "laplace":
        b = 1.0 / np.sqrt(2.0)

        def f(e):
            dens = np.exp(-abs(e) / b) / (2.0 * b)
            return (1.0 / b) ** 2 * dens

        return f
    if fam == "student_t":
        nu = spec.nu
        s = np.sqrt((nu - 2.0) / nu)
        log_c = gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(nu * np.pi * s * s)

        def f(e):
            u2 = (e / s) ** 2
            dens = np.exp(log_c - 0.5 * (nu + 1) * np.log1p(u2 / nu))
            score = -(nu + 1.0) * e / (nu * s * s + e * e)
            return score * score * dens

        return f
    # skew_normal
    alpha = spec.alpha
    xi, omega, _ = _sn_std_params(alpha)

    def f(e):
        u = (e - xi) / omega
        score = _sn_logpdf_std_score(u, alpha) / omega
        dens = 2.0 / omega * np.exp(-0.5 * u * u) / SQRT2PI * _sn_cdf_term(alpha * u)
        return score * score * dens

    return f


def fisher_information_quadrature(cn: CalibratedNoise, abs_tol: float = 1e-12) -> float:
    """Numerical Fisher information: the independent oracle for every family."""
    f = _standardized_score_sq_density(cn.spec)
    val, err = _split_quad(f, abs_tol=abs_tol)
    if err > 1e-9 * max(abs(val), 1.0):
        raise QuadratureError(
            f"Fisher quadrature for {cn.spec.variant_id} met only {err:.3e}",
            estimate=val / cn.sigma**2,
            abserr=err,
        )
    return float(val) / (cn.sigma * cn.sigma)
