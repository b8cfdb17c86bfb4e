"""Ground-truth numerical engine: full propagation, probabilities, spectra.

The oracle propagates the complete time-ordered evolution of a model over
a finite horizon [-T, T], reads transition probabilities off the squared
propagator entries (``S[i, j] = |U_ij|^2`` = probability of ending in
level i having started in level j), and quantifies finite-horizon error
by re-running at shorter horizons.  Phases oscillate without converging
as T grows, so only probabilities are compared or extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .laxflow import clamp_probabilities
from .models import AffineModel
from .numerics import OdeSettings, propagate_unitary, unitarity_defect

# entrywise spread across horizons beyond which a result is flagged
CONVERGENCE_SPREAD_LIMIT = 0.1


@dataclass(frozen=True)
class OracleResult:
    s_num: np.ndarray
    horizon: float
    error_estimate: float
    unitarity_defect: float
    converged: bool

    def to_json_dict(self, family=None, params=None, rtol=None) -> dict:
        out = {
            "T": self.horizon,
            "matrix": [[float(x) for x in row] for row in self.s_num],
            "error_estimate": self.error_estimate,
            "unitarity_defect": self.unitarity_defect,
            "converged": bool(self.converged),
        }
        if family is not None:
            out["family"] = family
        if params is not None:
            out["params"] = params
        if rtol is not None:
            out["rtol"] = rtol
        return out


def default_horizon(model: AffineModel, eps=None) -> float:
    """Horizon heuristic 300 * max(1, |eps|, delta^2 / min nonzero slope)."""
    eps_val = abs(model._eps_value(eps))
    deltas = np.atleast_1d(np.asarray(model.delta, dtype=float))
    dmax = float(np.abs(deltas).max())
    slopes = np.abs(np.diag(model.b).real)
    slopes = slopes[slopes > 0]
    smin = float(slopes.min()) if slopes.size else 1.0
    return 300.0 * max(1.0, eps_val, dmax * dmax / smin)


def propagate(model: AffineModel, eps=None, t_final=None, settings=None) -> np.ndarray:
    """Unitary U(T, -T) whose columns solve i du/dt = H(t, eps) u."""
    if t_final is None:
        t_final = default_horizon(model, eps)
    if not t_final > 0:
        raise ValueError(f"horizon must be positive, got {t_final}")
    if settings is None:
        settings = OdeSettings()
    return propagate_unitary(
        lambda t: model.hamiltonian(t, eps), -t_final, t_final, settings
    )


def numeric_smatrix(model: AffineModel, eps=None, t_final=None, settings=None) -> OracleResult:
    """Transition probabilities with a finite-horizon error estimate.

    Propagates at horizons T/2, T/sqrt(2) and T; the entrywise spread of
    the three probability matrices is the error estimate.  A spread above
    0.1 flags the result as non-converged (it is still returned).
    """
    if t_final is None:
        t_final = default_horizon(model, eps)
    horizons = [0.5 * t_final, t_final / np.sqrt(2.0), t_final]
    mats = []
    defect = 0.0
    for horizon in horizons:
        u = propagate(model, eps=eps, t_final=horizon, settings=settings)
        defect = max(defect, unitarity_defect(u))
        mats.append(np.abs(u) ** 2)
    spread = float(np.max(np.abs(mats[0] - mats[2])))
    spread = max(spread, float(np.max(np.abs(mats[1] - mats[2]))))
    return OracleResult(
        s_num=clamp_probabilities(mats[-1]),
        horizon=float(t_final),
        error_estimate=spread,
        unitarity_defect=float(defect),
        converged=spread <= CONVERGENCE_SPREAD_LIMIT,
    )


def extrapolate(results):
    """Entrywise 1/T fit of probability matrices; returns (S_inf, radius).

    ``results`` is a list of (T, S) pairs with at least three strictly
    increasing horizons.  The confidence radius is the largest residual of
    the per-entry linear fits in 1/T.  If the sequence does not converge
    monotonically toward the largest horizon, the largest-T matrix is
    returned with the radius widened to the observed spread.
    """
    if len(results) < 3:
        raise ValueError("need at least three horizons")
    horizons = np.array([float(t) for t, _ in results])
    if not np.all(np.diff(horizons) > 0):
        raise ValueError("horizons must be strictly increasing")
    mats = np.array([np.asarray(s, dtype=float) for _, s in results])
    last = mats[-1]
    dists = [float(np.abs(m - last).max()) for m in mats[:-1]]
    monotone = all(a >= b - 1e-15 for a, b in zip(dists, dists[1:]))
    if not monotone:
        spread = float(np.max(np.abs(mats - last)))
        return last.copy(), spread
    # least squares for S(T) = S_inf + c / T, entrywise
    x = 1.0 / horizons
    design = np.column_stack([np.ones_like(x), x])
    flat = mats.reshape(len(results), -1)
    coef, *_ = np.linalg.lstsq(design, flat, rcond=None)
    fitted = design @ coef
    radius = float(np.abs(fitted - flat).max())
    s_inf = coef[0].reshape(last.shape)
    return s_inf, radius


def adiabatic_spectrum(model: AffineModel, t_grid, eps=None):
    """Instantaneous eigenvalue curves tracked continuously across t.

    Curves are matched between adjacent grid points by maximal eigenvector
    overlap (optimal assignment), not by sorting, so they stay smooth
    through avoided crossings.  Points where the best overlap is ambiguous
    (squared overlap below 1/2, e.g. an exact degeneracy) fall back to
    sorted order and are flagged.

    Returns ``(curves, flags)`` with ``curves`` of shape (len(t_grid), k),
    column c holding the c-th tracked curve, and ``flags`` a boolean array
    marking fallback points.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t grid must be a nonempty 1-d array")
    k = model.k
    curves = np.empty((t_grid.size, k))
    flags = np.zeros(t_grid.size, dtype=bool)
    prev_vecs = None
    for n, t in enumerate(t_grid):
        w, vecs = np.linalg.eigh(model.hamiltonian(t, eps))
        if prev_vecs is None:
            order = np.arange(k)
        else:
            overlap = np.abs(prev_vecs.conj().T @ vecs) ** 2
            rows, cols = linear_sum_assignment(-overlap)
            order = np.empty(k, dtype=int)
            order[rows] = cols
            if overlap[rows, cols].min() < 0.5:
                order = np.arange(k)
                flags[n] = True
        curves[n] = w[order]
        prev_vecs = vecs[:, order]
    return curves, flags


def spectrum_csv_lines(t_grid, curves):
    """CSV lines ``t,e1,...,ek`` for a tracked spectrum."""
    k = curves.shape[1]
    lines = ["t," + ",".join(f"e{i + 1}" for i in range(k))]
    for t, row in zip(t_grid, curves):
        lines.append(",".join(repr(float(x)) for x in (t, *row)))
    return lines
