"""Dense complex linear algebra and ODE propagation substrate.

Everything downstream (model evaluation, Lax flows, the numerical
scattering engine) goes through the handful of operations in this module:
a validated Hermitian eigensolver, the matrix commutator, a generic
adaptive Runge-Kutta integrator, and an adaptive Magnus propagator for
linear Schrodinger-type flows.  The Magnus stepper exists because the
RK route, while fine for generic right-hand sides, accumulates unitarity
drift over sweeps of several hundred time units; the Magnus update is a
product of exact matrix exponentials of Hermitian generators and is
therefore unitary to roundoff at any step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

_SQRT3 = np.sqrt(3.0)

# smallest step fraction before the adaptive drivers declare divergence
_MIN_STEP_FRACTION = 1e-12


class NonHermitianError(ValueError):
    """Raised when an operation requires a Hermitian matrix and gets none."""


class IntegrationDivergedError(RuntimeError):
    """Adaptive stepping drove the step size below the underflow floor.

    ``last_t`` carries the last accepted time.
    """

    def __init__(self, message, last_t):
        super().__init__(message)
        self.last_t = last_t


@dataclass(frozen=True)
class OdeSettings:
    """Tolerances and limits for the adaptive integrators.

    rtol, atol : local error tolerances, both constrained to (0, 1e-2]
    max_step   : largest step the driver may take, in time units
    order_hint : preferred integration order; >= 7 selects DOP853 for the
                 RK route, anything lower selects RK45
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    order_hint: int = 8

    def __post_init__(self):
        for name in ("rtol", "atol"):
            tol = getattr(self, name)
            if not (0.0 < tol <= 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2], got {tol}")
        if not self.max_step > 0.0:
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if self.order_hint < 2:
            raise ValueError(f"order_hint must be >= 2, got {self.order_hint}")


def _as_complex_square(m, name="matrix"):
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def commutator(a, b):
    """Return ``a @ b - b @ a`` for equal-dimension square matrices."""
    a = _as_complex_square(a, "a")
    b = _as_complex_square(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b - b @ a


def hermiticity_defect(m):
    """Max absolute deviation of ``m`` from its own conjugate transpose."""
    m = _as_complex_square(m)
    return float(np.abs(m - m.conj().T).max())


def hermitian_eigs(m, tol=1e-12):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``v``.  Rejects input whose Hermiticity defect
    exceeds ``tol * max|m|``, naming the offending deviation.
    """
    m = _as_complex_square(m)
    scale = float(np.abs(m).max())
    defect = hermiticity_defect(m)
    if defect > tol * max(scale, 1e-300):
        raise NonHermitianError(
            f"matrix is not Hermitian: max|M - M^dag| = {defect:.3e} "
            f"exceeds {tol:.1e} * max|M| = {tol * scale:.3e}"
        )
    w, v = np.linalg.eigh(m)
    return w, v


def integrate(rhs, y0, t0, t1, settings=None):
    """Adaptive Runge-Kutta integration of ``dy/dt = rhs(t, y)``.

    ``y0`` may be a scalar, vector or matrix; ``rhs`` must return the same
    shape.  Uses an embedded RK pair (DOP853 for ``order_hint >= 7``, RK45
    otherwise) with step rejection and retry under the settings'
    tolerances.  Deterministic for fixed inputs and settings.

    Raises :class:`IntegrationDivergedError` when the step size underflows
    (the error object carries the last accepted time).
    """
    if settings is None:
        settings = OdeSettings()
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    y0 = np.asarray(y0, dtype=complex)
    shape = y0.shape

    def fun(t, y):
        return np.asarray(rhs(t, y.reshape(shape)), dtype=complex).ravel()

    method = "DOP853" if settings.order_hint >= 7 else "RK45"
    sol = solve_ivp(
        fun,
        (t0, t1),
        y0.ravel(),
        method=method,
        rtol=settings.rtol,
        atol=settings.atol,
        max_step=settings.max_step,
    )
    if not sol.success:
        last_t = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationDivergedError(
            f"integration stalled at t = {last_t!r}: {sol.message}", last_t
        )
    return sol.y[:, -1].reshape(shape)


def _expmi(m):
    # exp(-i m) for Hermitian m, unitary to roundoff
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _magnus_generator(hfun, t, h):
    # fourth-order two-point Gauss generator: exp(-i M) advances by h
    c = _SQRT3 / 6.0
    h1 = hfun(t + (0.5 - c) * h)
    h2 = hfun(t + (0.5 + c) * h)
    prod = h1 @ h2
    return 0.5 * h * (h1 + h2) + 1j * (_SQRT3 / 12.0) * h * h * (prod - prod.conj().T)


def propagate_unitary(hfun, t0, t1, settings=None):
    """Propagator ``U(t1, t0)`` of ``i dU/dt = H(t) U`` for Hermitian H(t).

    Adaptive fourth-order Magnus stepping with step-doubling error control.
    Every update is an exact exponential of a Hermitian generator, so the
    result is unitary to roundoff regardless of tolerance; the tolerances
    control phase/transition accuracy only.
    """
    if settings is None:
        settings = OdeSettings()
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    span = t1 - t0
    direction = 1.0 if span > 0 else -1.0
    n = _as_complex_square(hfun(t0), "H(t0)").shape[0]
    u = np.eye(n, dtype=complex)
    t = t0
    h_prop = span * 1e-3
    tol = settings.atol + settings.rtol
    h_floor = _MIN_STEP_FRACTION * abs(span)
    while (t1 - t) * direction > 0.0:
        h = direction * min(abs(h_prop), settings.max_step)
        if (t + h - t1) * direction > 0.0:
            h = t1 - t
        full = _expmi(_magnus_generator(hfun, t, h))
        half = _expmi(_magnus_generator(hfun, t + 0.5 * h, 0.5 * h)) @ _expmi(
            _magnus_generator(hfun, t, 0.5 * h)
        )
        err = float(np.abs(half - full).max()) / 15.0
        if err <= tol:
            u = half @ u
            t = t + h
            h_prop = h * min(2.5, max(0.2, 0.9 * (tol / max(err, 1e-300)) ** 0.2))
        else:
            h_prop = h * max(0.1, 0.9 * (tol / err) ** 0.2)
            if abs(h_prop) < h_floor:
                raise IntegrationDivergedError(
                    f"magnus step underflow at t = {t!r}", t
                )
    return u


def unitarity_defect(u):
    """Max entry of ``|U^dag U - I|``."""
    u = _as_complex_square(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
