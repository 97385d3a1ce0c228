"""Measurement plan, the nonlinear measurement function h(x), and its
analytic Jacobian H(x).

Internally everything is per-unit on the network's s_base; descriptor
order fixes the measurement index i in z.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels, noise
from .netmodel import AdmittanceMatrix, Network, branch_admittance_pu
from .powerflow import StateVector, full_voltages

KINDS = ("v_mag", "p_injection", "q_injection", "p_flow", "q_flow")

# zero-injection pseudo-measurements get this fixed variance (p.u.^2)
FLOOR_VARIANCE = 1e-4
# proportional sigmas degenerate at |z*| ~ 0; clamp from below (p.u.)
SIGMA_FLOOR = 1e-6

# real-sensor accuracy ranges for the relative spread draw
VOLTAGE_SIGMA_PCT_RANGE = (0.005, 0.02)
POWER_SIGMA_PCT_RANGE = (0.01, 0.05)

REAL_MEAS_V_BUSES = (0, 3, 8, 11, 13)
REAL_MEAS_PQ_BUSES = (3, 8, 11, 13)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementDescriptor:
    kind: str
    source: str  # "real" | "pseudo"
    bus: int | None = None
    branch: int | None = None  # index into net.branches
    end: str | None = None  # metering end of a flow: "from" | "to"
    sigma_pct: float | None = None  # None for variant-driven pseudo / floor rows
    zero_injection: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlanError(f"unknown measurement kind {self.kind!r}")
        if self.kind in ("p_flow", "q_flow"):
            if self.branch is None or self.end not in ("from", "to"):
                raise PlanError("flow measurements need a branch id and metering end")
        elif self.bus is None:
            raise PlanError(f"{self.kind} measurements need a bus id")
        if self.sigma_pct is not None and self.sigma_pct <= 0:
            raise PlanError("sigma_pct must be > 0")


@dataclass(frozen=True)
class MeasurementPlan:
    descriptors: tuple[MeasurementDescriptor, ...]

    @property
    def m(self) -> int:
        return len(self.descriptors)

    def pseudo_indices(self) -> np.ndarray:
        return np.array(
            [i for i, d in enumerate(self.descriptors) if d.source == "pseudo"],
            dtype=np.int64,
        )

    def variant_indices(self) -> np.ndarray:
        """Pseudo rows whose distribution follows the sweep variant
        (zero-injection rows keep their Gaussian floor)."""
        return np.array(
            [
                i
                for i, d in enumerate(self.descriptors)
                if d.source == "pseudo" and not d.zero_injection
            ],
            dtype=np.int64,
        )


def default_plan(net: Network, sigma_seed: int = 0) -> MeasurementPlan:
    """The bundled measurement plan: 17 real measurements (5 voltages,
    8 injections, 4 feeder-head flows) plus a P/Q pseudo pair at every
    unobserved non-slack bus.

    ``sigma_seed`` drives the one-off per-bus relative-accuracy draw for
    the real sensors; it is logged in the run manifest.
    """
    bus_ids = {b.id for b in net.buses}
    missing = [i for i in REAL_MEAS_V_BUSES if i not in bus_ids]
    if missing:
        raise PlanError(f"network lacks buses {missing} required by the default plan")
    slack = net.slack_index

    # Each feeder hangs off the slack through a transformer; the metered
    # flow is on the first *line* of the feeder, at its sending end.
    head_buses = sorted(
        br.to_bus if br.from_bus == slack else br.from_bus
        for _, br in net.in_service_branches()
        if slack in (br.from_bus, br.to_bus)
    )
    feeder_heads = []
    for hb in head_buses:
        lines = [
            (k, "from" if br.from_bus == hb else "to")
            for k, br in net.in_service_branches()
            if hb in (br.from_bus, br.to_bus) and slack not in (br.from_bus, br.to_bus)
        ]
        feeder_heads.extend(sorted(lines))
    if len(feeder_heads) != 2:
        raise PlanError(f"expected 2 feeder-head lines, got {len(feeder_heads)}")

    rng = np.random.default_rng(sigma_seed)
    descriptors: list[MeasurementDescriptor] = []

    for bus in REAL_MEAS_V_BUSES:
        pct = rng.uniform(*VOLTAGE_SIGMA_PCT_RANGE)
        descriptors.append(MeasurementDescriptor("v_mag", "real", bus=bus, sigma_pct=pct))
    for bus in REAL_MEAS_PQ_BUSES:
        pct = rng.uniform(*POWER_SIGMA_PCT_RANGE)
        descriptors.append(MeasurementDescriptor("p_injection", "real", bus=bus, sigma_pct=pct))
        descriptors.append(MeasurementDescriptor("q_injection", "real", bus=bus, sigma_pct=pct))
    for branch, end in feeder_heads:
        pct = rng.uniform(*POWER_SIGMA_PCT_RANGE)
        descriptors.append(
            MeasurementDescriptor("p_flow", "real", branch=branch, end=end, sigma_pct=pct)
        )
        descriptors.append(
            MeasurementDescriptor("q_flow", "real", branch=branch, end=end, sigma_pct=pct)
        )

    observed = set(REAL_MEAS_PQ_BUSES)
    for bus in sorted(bus_ids - observed - {slack}):
        zi = net.buses[bus].kind == "zero_injection"
        descriptors.append(
            MeasurementDescriptor("p_injection", "pseudo", bus=bus, zero_injection=zi)
        )
        descriptors.append(
            MeasurementDescriptor("q_injection", "pseudo", bus=bus, zero_injection=zi)
        )

    return MeasurementPlan(descriptors=tuple(descriptors))


# --- serialization (descriptor order is the z-indexing contract) ---


def plan_to_json(plan: MeasurementPlan, sigmas: np.ndarray | None = None) -> str:
    rows = []
    for i, d in enumerate(plan.descriptors):
        if d.kind in ("p_flow", "q_flow"):
            location = {"branch": d.branch, "end": d.end}
        else:
            location = {"bus": d.bus}
        if d.zero_injection:
            distribution = "zero_injection_floor"
        elif d.source == "pseudo":
            distribution = "sweep_variant"
        else:
            distribution = "gaussian"
        rows.append(
            {
                "kind": d.kind,
                "location": location,
                "source": d.source,
                "sigma": (
                    float(sigmas[i])
                    if sigmas is not None and np.isfinite(sigmas[i])
                    else None
                ),
                "sigma_pct": d.sigma_pct,
                "distribution": distribution,
            }
        )
    return json.dumps(rows, indent=2) + "\n"


def plan_from_json(text: str) -> MeasurementPlan:
    rows = json.loads(text)
    descriptors = []
    for row in rows:
        loc = row["location"]
        descriptors.append(
            MeasurementDescriptor(
                kind=row["kind"],
                source=row["source"],
                bus=loc.get("bus"),
                branch=loc.get("branch"),
                end=loc.get("end"),
                sigma_pct=row.get("sigma_pct"),
                zero_injection=row.get("distribution") == "zero_injection_floor",
            )
        )
    return MeasurementPlan(descriptors=tuple(descriptors))


# --- compiled evaluation ---


class CompiledPlan:
    """Plan bound to a network and Ybus; h(x) and jacobian(x) are the hot
    path shared by the power-flow-free WLS iterations."""

    def __init__(self, net: Network, y: AdmittanceMatrix, plan: MeasurementPlan):
        self.net = net
        self.plan = plan
        self.g = y.g
        self.b = y.b
        self.m = plan.m
        self.n_state = net.n_state

        n = net.n_bus
        slack = net.slack_index
        ns = net.non_slack
        n1 = ns.size
        col_theta = np.full(n, -1, dtype=np.int64)
        col_vmag = np.full(n, -1, dtype=np.int64)
        col_theta[ns] = np.arange(n1)
        col_vmag[ns] = n1 + np.arange(n1)
        self._col_theta = col_theta
        self._col_vmag = col_vmag
        self._ns = ns

        self._vmag_rows: list[tuple[int, int]] = []  # (row, bus)
        self._inj_rows: list[tuple[int, int, bool]] = []  # (row, bus, is_p)
        flow_entries: list[tuple[int, int, int, float, float, float, bool]] = []
        for i, d in enumerate(plan.descriptors):
            if d.kind == "v_mag":
                self._vmag_rows.append((i, d.bus))
            elif d.kind in ("p_injection", "q_injection"):
                self._inj_rows.append((i, d.bus, d.kind == "p_injection"))
            else:
                br = net.branches[d.branch]
                ys, bsh_total = branch_admittance_pu(net, br)
                if d.end == "from":
                    ib, jb = br.from_bus, br.to_bus
                else:
                    ib, jb = br.to_bus, br.from_bus
                flow_entries.append(
                    (i, ib, jb, ys.real, ys.imag, 0.5 * bsh_total, d.kind == "p_flow")
                )

        if flow_entries:
            self._flow_rows = np.array([e[0] for e in flow_entries], dtype=np.int64)
            self._flow_ib = np.array([e[1] for e in flow_entries], dtype=np.int64)
            self._flow_jb = np.array([e[2] for e in flow_entries], dtype=np.int64)
            self._flow_gs = np.array([e[3] for e in flow_entries])
            self._flow_bs = np.array([e[4] for e in flow_entries])
            self._flow_bsh = np.array([e[5] for e in flow_entries])
            self._flow_is_p = np.array([e[6] for e in flow_entries], dtype=bool)
        else:
            self._flow_rows = np.empty(0, dtype=np.int64)

        self._slack = slack
        self._v_setpoint = net.buses[slack].v_setpoint

    def _voltages(self, x: StateVector) -> tuple[np.ndarray, np.ndarray]:
        return full_voltages(self.net, x)

    def h(self, x: StateVector) -> np.ndarray:
        vm, va = self._voltages(x)
        out = np.empty(self.m)
        if self._inj_rows:
            p, q = kernels.bus_injections(self.g, self.b, vm, va)
            for row, bus, is_p in self._inj_rows:
                out[row] = p[bus] if is_p else q[bus]
        for row, bus in self._vmag_rows:
            out[row] = vm[bus]
        if self._flow_rows.size:
            pf, qf = kernels.branch_flows(
                vm, va, self._flow_ib, self._flow_jb, self._flow_gs, self._flow_bs, self._flow_bsh
            )
            out[self._flow_rows] = np.where(self._flow_is_p, pf, qf)
        return out

    def jacobian(self, x: StateVector) -> np.ndarray:
        vm, va = self._voltages(x)
        hmat = np.zeros((self.m, self.n_state))
        ct, cv = self._col_theta, self._col_vmag
        ns = self._ns

        if self._inj_rows:
            dp_dth, dp_dv, dq_dth, dq_dv = kernels.injection_jacobian(self.g, self.b, vm, va)
            n1 = ns.size
            for row, bus, is_p in self._inj_rows:
                if is_p:
                    hmat[row, :n1] = dp_dth[bus, ns]
                    hmat[row, n1:] = dp_dv[bus, ns]
                else:
                    hmat[row, :n1] = dq_dth[bus, ns]
                    hmat[row, n1:] = dq_dv[bus, ns]
        for row, bus in self._vmag_rows:
            if cv[bus] >= 0:  # slack voltage is a constant, row stays zero
                hmat[row, cv[bus]] = 1.0
        if self._flow_rows.size:
            parts = kernels.branch_flow_jacobian(
                vm, va, self._flow_ib, self._flow_jb, self._flow_gs, self._flow_bs, self._flow_bsh
            )
            dp_dthi, dp_dthj, dp_dvi, dp_dvj, dq_dthi, dq_dthj, dq_dvi, dq_dvj = parts
            for k, row in enumerate(self._flow_rows):
                ib, jb = self._flow_ib[k], self._flow_jb[k]
                if self._flow_is_p[k]:
                    vals = (dp_dthi[k], dp_dthj[k], dp_dvi[k], dp_dvj[k])
                else:
                    vals = (dq_dthi[k], dq_dthj[k], dq_dvi[k], dq_dvj[k])
                for col, val in zip((ct[ib], ct[jb], cv[ib], cv[jb]), vals):
                    if col >= 0:
                        hmat[row, col] = val
        return hmat


def compile_plan(net: Network, y: AdmittanceMatrix, plan: MeasurementPlan) -> CompiledPlan:
    return CompiledPlan(net, y, plan)


def evaluate_h(net: Network, y: AdmittanceMatrix, plan: MeasurementPlan, x: StateVector) -> np.ndarray:
    """Noise-free measurement values h(x), per-unit on s_base."""
    return compile_plan(net, y, plan).h(x)


def evaluate_jacobian(
    net: Network, y: AdmittanceMatrix, plan: MeasurementPlan, x: StateVector
) -> np.ndarray:
    """Analytic m x n_s Jacobian of h at x."""
    return compile_plan(net, y, plan).jacobian(x)


def flat_start_rank(net: Network, y: AdmittanceMatrix, plan: MeasurementPlan) -> int:
    """Numerical rank of H at flat start (observability check)."""
    from .powerflow import flat_start

    hmat = evaluate_jacobian(net, y, plan, flat_start(net))
    return int(np.linalg.matrix_rank(hmat))


# --- per-scenario noise wiring ---


def assumed_sigmas(
    plan: MeasurementPlan, z_true: np.ndarray, variant: noise.DistributionSpec | None
) -> np.ndarray:
    """Per-measurement standard deviations the WLS estimator assumes.

    Real rows use their fixed sensor sigma_pct; pseudo rows the variant's
    sigma_pct; zero-injection rows the fixed variance floor.  All
    proportional sigmas are clamped at SIGMA_FLOOR.
    """
    sig = np.empty(plan.m)
    for i, d in enumerate(plan.descriptors):
        if d.zero_injection:
            sig[i] = np.sqrt(FLOOR_VARIANCE)
        elif d.source == "real":
            sig[i] = max(d.sigma_pct * abs(z_true[i]), SIGMA_FLOOR)
        else:
            if variant is None:
                raise PlanError("plan has variant-driven pseudo rows but no variant given")
            sig[i] = max(variant.sigma_pct * abs(z_true[i]), SIGMA_FLOOR)
    return sig


def build_noise_library(
    plan: MeasurementPlan,
    z_true: np.ndarray,
    variant: noise.DistributionSpec,
    sigmas: np.ndarray | None = None,
) -> list[noise.CalibratedNoise | None]:
    """Calibrated noise model per variant-driven pseudo row (None elsewhere)."""
    if sigmas is None:
        sigmas = assumed_sigmas(plan, z_true, variant)
    library: list[noise.CalibratedNoise | None] = [None] * plan.m
    for i in plan.variant_indices():
        library[i] = noise.calibrate(variant, float(z_true[i]), sigma=float(sigmas[i]))
    return library


def sample_measurements(
    plan: MeasurementPlan,
    z_true: np.ndarray,
    noise_library: list[noise.CalibratedNoise | None],
    rng: np.random.Generator,
    sigmas: np.ndarray | None = None,
    variant: noise.DistributionSpec | None = None,
) -> np.ndarray:
    """One noisy measurement vector; draw order equals plan order."""
    if sigmas is None:
        sigmas = assumed_sigmas(plan, z_true, variant)
    z = np.empty(plan.m)
    for i, d in enumerate(plan.descriptors):
        cn = noise_library[i]
        if cn is not None:
            z[i] = noise.sample(cn, rng)
        else:
            z[i] = z_true[i] + rng.normal(0.0, sigmas[i])
    return z
