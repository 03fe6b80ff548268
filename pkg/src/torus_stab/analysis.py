"""Post-processing of simulation records: decay-rate fits, observability
quotients, the semigroup chaining check, and the linear-vs-nonlinear gap
diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .model import linear_closed_loop_rhs, scaled_closed_loop_rhs
from .operators import ModelParams
from .spectral import Field, SobolevIndex, hs_norm_sq
from .timestepper import SimulationRecord, _cumulative_simpson, simulate_custom, stable_dt


@dataclass(frozen=True)
class DecayFit:
    """Exponential fit ||u(t)|| ~ C e^{-beta t} obtained from the energy
    series; the regression residual is part of the result, never hidden."""

    C: float
    beta: float
    window: tuple
    residual: float


def fit_decay(record: SimulationRecord, window=None) -> DecayFit:
    """Least-squares line through (t, log E(t)/2); beta = -slope, C from the
    intercept.

    The default window [0.1 T, 0.9 T] skips the initial transient and the
    tail where the energy may graze machine zero.  Fitting on the energy
    (squared norm) and halving avoids square roots of tiny negatives.
    """
    t_end = record.times[-1]
    if window is None:
        window = (0.1 * t_end, 0.9 * t_end)
    t_lo, t_hi = window
    sel = (record.times >= t_lo) & (record.times <= t_hi)
    if sel.sum() < 2:
        raise DegenerateInputError("decay fit window contains fewer than 2 samples")
    e = record.E[sel]
    if np.any(e <= 0):
        raise DegenerateInputError("nonpositive energy inside the decay fit window")
    t = record.times[sel]
    y = 0.5 * np.log(e)
    design = np.column_stack([np.ones_like(t), t])
    (intercept, slope), res, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ np.array([intercept, slope])
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return DecayFit(C=float(np.exp(intercept)), beta=float(-slope),
                    window=(float(t_lo), float(t_hi)), residual=residual)


def observability_quotient(record: SimulationRecord, T: float) -> float:
    """||u0||^2_{H^2} / int_0^T ||sigma u||^2_{H^2} dt.

    A vanishing denominator is scientifically meaningful (a discrete
    unique-continuation violation candidate), so it is returned as the
    flagged value inf rather than raised.
    """
    i = int(np.argmin(np.abs(record.times - T)))
    if abs(record.times[i] - T) > 1e-9 + 1e-6 * max(1.0, abs(T)):
        raise DegenerateInputError(f"record does not span t = {T}")
    dt = record.times[1] - record.times[0]
    denom = _cumulative_simpson(record.D[: i + 1], dt)[-1]
    if denom <= 0.0:
        return math.inf
    return float(record.E[0] / denom)


def linearization_gap(u0: Field, alpha: float, T: float, params: ModelParams) -> float:
    """sup over stored times of the H^2 distance between the alpha-scaled
    nonlinear closed loop and the linear closed loop from the same data.

    The scaled system carries alpha on the quadratic terms and alpha^2 on
    the cubic one, so alpha -> 0 recovers the linear flow to quadrature
    accuracy.
    """
    if alpha < 0:
        raise DegenerateInputError(f"alpha must be nonnegative, got {alpha}")
    dt = 0.5 * stable_dt(u0.grid, params)
    _, snaps_nl = simulate_custom(
        u0, T, dt, lambda u: scaled_closed_loop_rhs(u, params, alpha)
    )
    _, snaps_lin = simulate_custom(
        u0, T, dt, lambda u: linear_closed_loop_rhs(u, params)
    )
    idx = SobolevIndex(2.0, params.b, params.b1)
    gap = 0.0
    for v, wlin in zip(snaps_nl, snaps_lin):
        gap = max(gap, math.sqrt(hs_norm_sq(v - wlin, idx)))
    return gap


def energy_semigroup_check(record: SimulationRecord, T: float) -> float:
    """max_k E(kT) / (ratio^k E(0)) with ratio = E(T)/E(0).

    A value <= 1 + tol certifies the geometric-decay chaining
    E(kT) <= ratio^k E(0) used to upgrade one-period contraction to
    exponential decay.
    """
    e0 = record.E[0]
    if e0 <= 0:
        raise DegenerateInputError("semigroup check needs positive initial energy")
    k_max = int(np.floor(record.times[-1] / T + 1e-9))
    if k_max < 2:
        raise DegenerateInputError(f"record must span at least 2 periods of {T}")
    ratio = record.energy_at(T) / e0
    worst = 0.0
    for k in range(1, k_max + 1):
        worst = max(worst, record.energy_at(k * T) / (ratio ** k * e0))
    return worst
