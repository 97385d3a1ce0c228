"""Assumed vs. true gain matrices at the converged estimate and the
per-state Cramer-Rao bound ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import noise as noise_mod
from .measmodel import MeasurementPlan
from .netmodel import Network
from .wls import EstimationResult, ObservabilityError


@dataclass(frozen=True)
class GainPair:
    g_wls: np.ndarray
    g_true: np.ndarray


@dataclass(frozen=True)
class CrbReport:
    """Diagonal CRBs and their ratio per state variable.

    State order follows the state vector: all non-slack angles first,
    then all non-slack magnitudes; ``bus_ids`` maps each entry of either
    block to its bus.
    """

    variant_id: str
    scenario_id: int
    lam: float
    bus_ids: np.ndarray  # length n_s / 2
    assumed_var: np.ndarray  # length n_s
    true_var: np.ndarray
    rho: np.ndarray

    @property
    def n_bus_states(self) -> int:
        return self.bus_ids.size

    def vmag_rho(self) -> np.ndarray:
        return self.rho[self.n_bus_states :]

    def theta_rho(self) -> np.ndarray:
        return self.rho[: self.n_bus_states]


def state_bus_ids(net: Network) -> np.ndarray:
    """Bus id for each entry of one state block (angles or magnitudes)."""
    return np.array([net.buses[i].id for i in net.non_slack], dtype=np.int64)


def build_true_weights(
    plan: MeasurementPlan,
    noise_library: list[noise_mod.CalibratedNoise | None],
    w_assumed: np.ndarray,
) -> np.ndarray:
    """True-Fisher diagonal: pseudo rows take the scalar Fisher information
    of their calibrated law; real and zero-injection rows keep the assumed
    Gaussian weight."""
    w_true = w_assumed.copy()
    for i, cn in enumerate(noise_library):
        if cn is not None:
            w_true[i] = noise_mod.fisher_information(cn)
    return w_true


def _inverse_diagonal(gain: np.ndarray) -> np.ndarray:
    try:
        factor = cho_factor(gain, lower=True)
    except LinAlgError as exc:
        rank = int(np.linalg.matrix_rank(gain))
        raise ObservabilityError(f"gain factorization failed (rank {rank})") from exc
    inv = cho_solve(factor, np.eye(gain.shape[0]))
    return np.diag(inv).copy()


def crb_ratio(
    hmat: np.ndarray,
    w_assumed: np.ndarray,
    w_true: np.ndarray,
    bus_ids: np.ndarray,
    variant_id: str = "",
    scenario_id: int = -1,
    lam: float = float("nan"),
) -> CrbReport:
    """CRB ratio rho_k = [G_true^-1]_kk / [G_wls^-1]_kk at the given H."""
    g_wls = hmat.T @ (w_assumed[:, None] * hmat)
    g_true = hmat.T @ (w_true[:, None] * hmat)
    assumed_var = _inverse_diagonal(g_wls)
    true_var = _inverse_diagonal(g_true)
    return CrbReport(
        variant_id=variant_id,
        scenario_id=scenario_id,
        lam=lam,
        bus_ids=bus_ids,
        assumed_var=assumed_var,
        true_var=true_var,
        rho=true_var / assumed_var,
    )


def gain_pair(hmat: np.ndarray, w_assumed: np.ndarray, w_true: np.ndarray) -> GainPair:
    return GainPair(
        g_wls=hmat.T @ (w_assumed[:, None] * hmat),
        g_true=hmat.T @ (w_true[:, None] * hmat),
    )


def fim_gain_identity_check(
    result: EstimationResult, pair: GainPair, rtol: float = 1e-12
) -> tuple[bool, float]:
    """Under Gaussian weights the FIM equals the WLS gain matrix; returns
    (passed, max elementwise relative deviation)."""
    scale = np.max(np.abs(pair.g_wls))
    dev = float(np.max(np.abs(pair.g_true - pair.g_wls)) / scale)
    return dev < rtol, dev
