"""Newton-Raphson AC power flow producing the ground-truth state per scenario."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .netmodel import AdmittanceMatrix, Network


@dataclass(frozen=True)
class StateVector:
    """Angles (rad) and magnitudes (p.u.) at non-slack buses, in bus order."""

    theta: np.ndarray
    vmag: np.ndarray

    @property
    def n_state(self) -> int:
        return self.theta.size + self.vmag.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.theta, self.vmag])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "StateVector":
        half = x.size // 2
        return cls(theta=x[:half].copy(), vmag=x[half:].copy())


def flat_start(net: Network) -> StateVector:
    n = net.n_bus - 1
    return StateVector(theta=np.zeros(n), vmag=np.ones(n))


def full_voltages(net: Network, x: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """Expand a state to per-bus (vm, va) arrays including the slack."""
    s = net.slack_index
    vm = np.empty(net.n_bus)
    va = np.empty(net.n_bus)
    vm[s] = net.buses[s].v_setpoint
    va[s] = 0.0
    ns = net.non_slack
    va[ns] = x.theta
    vm[ns] = x.vmag
    return vm, va


@dataclass(frozen=True)
class PowerFlowSolution:
    state: StateVector
    iterations: int
    max_mismatch: float  # MVA
    converged: bool


class PowerFlowError(RuntimeError):
    pass


def scheduled_injections(net: Network, load_scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus scheduled (P, Q) injections in p.u.; loads enter negatively."""
    p, q = net.load_pu()
    return -load_scale * p, -load_scale * q


def solve_power_flow(
    net: Network,
    y: AdmittanceMatrix,
    load_scale: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 30,
) -> PowerFlowSolution:
    """Solve the AC power flow for a uniformly scaled loading.

    ``tol`` is an infinity norm over per-bus complex power mismatch
    magnitudes in MVA.  Non-convergence is reported through the
    ``converged`` flag, not an exception, so scenario harnesses can
    resample.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if load_scale <= 0:
        raise ValueError("load_scale must be > 0")
    g, b = y.g, y.b
    ns = net.non_slack
    n1 = ns.size
    p_sched, q_sched = scheduled_injections(net, load_scale)
    tol_pu = tol / net.s_base_mva

    x = flat_start(net)
    vm, va = full_voltages(net, x)
    mismatch_mva = np.inf
    for it in range(max_iter + 1):
        p, q = kernels.bus_injections(g, b, vm, va)
        dp = p[ns] - p_sched[ns]
        dq = q[ns] - q_sched[ns]
        worst = float(np.max(np.hypot(dp, dq)))
        if worst < tol_pu:
            state = StateVector(theta=va[ns].copy(), vmag=vm[ns].copy())
            return PowerFlowSolution(
                state=state,
                iterations=it,
                max_mismatch=worst * net.s_base_mva,
                converged=True,
            )
        if it == max_iter:
            mismatch_mva = worst * net.s_base_mva
            break
        dp_dth, dp_dv, dq_dth, dq_dv = kernels.injection_jacobian(g, b, vm, va)
        jac = np.empty((2 * n1, 2 * n1))
        jac[:n1, :n1] = dp_dth[np.ix_(ns, ns)]
        jac[:n1, n1:] = dp_dv[np.ix_(ns, ns)]
        jac[n1:, :n1] = dq_dth[np.ix_(ns, ns)]
        jac[n1:, n1:] = dq_dv[np.ix_(ns, ns)]
        step = np.linalg.solve(jac, np.concatenate([dp, dq]))
        va[ns] -= step[:n1]
        vm[ns] -= step[n1:]

    state = StateVector(theta=va[ns].copy(), vmag=vm[ns].copy())
    return PowerFlowSolution(
        state=state, iterations=max_iter, max_mismatch=mismatch_mva, converged=False
    )
