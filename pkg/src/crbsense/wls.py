"""Weighted least squares state estimation via Newton-Raphson on the
normal equations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .powerflow import StateVector, flat_start


class ObservabilityError(RuntimeError):
    """Gain matrix is not positive definite (rank-deficient Jacobian)."""


@dataclass(frozen=True)
class EstimationResult:
    x_hat: StateVector
    gain: np.ndarray  # H'WH at x_hat
    iterations: int
    converged: bool
    final_step_norm: float
    objective: float


def build_weights(sigmas: np.ndarray) -> np.ndarray:
    """Diagonal weight entries 1/sigma^2 (stored as a vector)."""
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(~np.isfinite(sigmas)) or np.any(sigmas <= 0):
        raise ValueError("all sigmas must be positive and finite")
    return 1.0 / (sigmas * sigmas)


def _objective(r: np.ndarray, w: np.ndarray) -> float:
    return float(r @ (w * r))


def estimate(
    model,
    z: np.ndarray,
    w: np.ndarray,
    x0: StateVector | None = None,
    tol: float = 1e-8,
    max_iter: int = 50,
    damping: bool = False,
) -> EstimationResult:
    """Minimize the weighted squared residual of ``model`` against ``z``.

    ``model`` provides h(x), jacobian(x) and n_state (see
    measmodel.CompiledPlan); ``w`` holds the diagonal weights.  Raises
    ObservabilityError when the gain matrix loses positive definiteness.
    """
    if x0 is None:
        x0 = flat_start(model.net)
    x = x0.as_array()
    w = np.asarray(w, dtype=float)

    step_norm = np.inf
    gain = None
    prev_obj = np.inf
    for it in range(1, max_iter + 1):
        state = StateVector.from_array(x)
        r = z - model.h(state)
        hmat = model.jacobian(state)
        wh = w[:, None] * hmat
        gain = hmat.T @ wh
        try:
            factor = cho_factor(gain, lower=True)
        except LinAlgError as exc:
            rank = int(np.linalg.matrix_rank(hmat))
            raise ObservabilityError(
                f"gain matrix not positive definite (rank(H) = {rank} < {model.n_state})"
            ) from exc
        step = cho_solve(factor, wh.T @ r)
        if damping:
            obj = _objective(r, w)
            scale = 1.0
            while scale > 1.0 / 64.0:
                trial = StateVector.from_array(x + scale * step)
                if _objective(z - model.h(trial), w) <= obj:
                    break
                scale *= 0.5
            step = scale * step
            prev_obj = obj
        x = x + step
        step_norm = float(np.max(np.abs(step)))
        if step_norm < tol:
            state = StateVector.from_array(x)
            hmat = model.jacobian(state)
            gain = hmat.T @ (w[:, None] * hmat)
            r = z - model.h(state)
            return EstimationResult(
                x_hat=state,
                gain=gain,
                iterations=it,
                converged=True,
                final_step_norm=step_norm,
                objective=_objective(r, w),
            )

    state = StateVector.from_array(x)
    r = z - model.h(state)
    return EstimationResult(
        x_hat=state,
        gain=gain,
        iterations=max_iter,
        converged=False,
        final_step_norm=step_norm,
        objective=_objective(r, w),
    )
