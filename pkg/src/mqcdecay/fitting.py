"""
Decay-curve models and a damped least-squares solver.

Curves are fitted in internal, unconstrained coordinates: times are divided
by the largest sample time, second moments are squares of a free parameter
(M >= 0) and asymptotes pass through a logistic (0 <= C <= 1).  Reported
standard errors are asymptotic estimates,

    cov = s^2 (J^T J)^{-1},   s^2 = sum(r^2) / (n - p),

with J the Jacobian of the (weighted) residuals with respect to the natural
parameters, evaluated at the optimum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import scipy.special
from numpy.typing import ArrayLike, NDArray

from . import fermion


class Sector(enum.Enum):
    ZQ = "ZQ"
    DQ = "DQ"
    TOTAL = "total"
    FID = "FID"


class FitModel(enum.Enum):
    GAUSSIAN = "Gaussian"
    SINC_GAUSSIAN = "SincGaussian"
    ASYMPTOTE_C = "AsymptoteC"
    INTENSITY_I0 = "IntensityI0"
    INTENSITY_I2 = "IntensityI2"


@dataclass(frozen=True)
class DecayCurve:
    """Signal samples at fixed preparation time.

    Parameters
    ----------
    times : array_like
        Ascending, nonnegative decay times in seconds.
    values : array_like
        Signal values.
    sigma : array_like, optional
        Per-point uncertainties; residuals are divided by them when present.
    tau : float, optional
        Preparation time in seconds.
    sector : Sector
        Which signal the samples represent.
    """

    times: NDArray[np.float64]
    values: NDArray[np.float64]
    sigma: Optional[NDArray[np.float64]] = None
    tau: Optional[float] = None
    sector: Sector = Sector.TOTAL

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("times must be nonnegative and strictly ascending")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("times and values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != y.shape or np.any(s <= 0):
                raise ValueError("sigma must be positive and match values")
            object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "sector", Sector(self.sector))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.ones_like(self.values) if self.sigma is None else 1.0 / self.sigma


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit.

    ``stderr`` is ``None`` unless the solver converged with a usable
    curvature matrix.  ``flags`` records conditions such as a degenerate
    (flat) curve.
    """

    model: FitModel
    params: Mapping[str, float]
    stderr: Optional[Mapping[str, float]]
    residual_rms: float
    converged: bool
    flags: tuple[str, ...] = ()
    n_iter: int = 0
    meta: Mapping[str, object] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Solution:
    x: NDArray[np.float64]
    cost: float
    converged: bool
    n_iter: int


def levenberg_marquardt(
    fun: Callable[[NDArray], NDArray],
    jac: Callable[[NDArray], NDArray],
    x0: ArrayLike,
    *,
    max_iter: int = 500,
    ftol: float = 1e-14,
    xtol: float = 1e-12,
    floor: float = 0.0,
) -> _Solution:
    """Minimize ``sum(fun(x)**2)``.

    Each iteration solves ``(J^T J + lam D) dx = -J^T r`` with D the diagonal
    of J^T J (Marquardt scaling).  A step that lowers the cost is taken and
    lam shrinks by 9; otherwise lam grows by 11 and the step is retried.  The
    run has converged when an accepted step is negligible both in cost and
    in x, or when no step can lower the cost (lam > 1e16) and either the
    undamped Gauss-Newton step promises a negligible gain or the residual is
    already at the round-off floor ``floor``.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = fun(x)
    cost = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        J = jac(x)
        g = J.T @ r
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = 1e-300
        while True:
            try:
                dx = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                dx = None
            if dx is not None and np.all(np.isfinite(dx)):
                xn = x + dx
                # overshooting trial steps may overflow; they are rejected below
                with np.errstate(over="ignore", invalid="ignore"):
                    rn = fun(xn)
                    cn = float(rn @ rn)
                if np.isfinite(cn) and cn < cost:
                    break
            lam *= 11.0
            if lam > 1e16:
                return _Solution(x, cost, _stationary(A, g, cost, floor), it)
        small_f = (cost - cn) <= ftol * cost
        small_x = np.linalg.norm(dx) <= xtol * (np.linalg.norm(x) + xtol)
        x, r, cost = xn, rn, cn
        lam = max(lam / 9.0, 1e-15)
        if (small_f and small_x) or cost == 0.0:
            return _Solution(x, cost, True, it)
    return _Solution(x, cost, False, max_iter)


def _stationary(A, g, cost, floor) -> bool:
    if cost <= floor:
        return True
    gain = float(-g @ np.linalg.lstsq(A, -g, rcond=None)[0])
    return gain <= 1e-8 * cost


def _round_off_floor(y, w) -> float:
    # squared residual expected from float64 rounding of the model values alone
    return float(len(y)) * (64 * np.finfo(float).eps * np.max(np.abs(w * y))) ** 2


def _covariance(J_nat: NDArray, r: NDArray) -> Optional[NDArray]:
    n, p = J_nat.shape
    if n <= p:
        return None
    s2 = float(r @ r) / (n - p)
    # equilibrate columns first: natural parameters span many decades
    scale = np.linalg.norm(J_nat, axis=0)
    scale[scale == 0] = 1.0
    Js = J_nat / scale
    try:
        cov = np.linalg.pinv(Js.T @ Js, rcond=1e-13, hermitian=True)
    except np.linalg.LinAlgError:
        return None
    return cov * s2 / np.outer(scale, scale)


def _logistic(u):
    return scipy.special.expit(u)


def _logit(c):
    c = np.clip(c, 1e-9, 1 - 1e-9)
    return np.log(c / (1 - c))


# ---------------------------------------------------------------------------
# Gaussian and sinc-Gaussian models
# ---------------------------------------------------------------------------


def gaussian_model(t: ArrayLike, A: float, M: float, C: float) -> NDArray[np.float64]:
    """G(t) = A[(1 - C) exp(-M t^2 / 2) + C]."""
    t = np.asarray(t, dtype=float)
    return A * ((1 - C) * np.exp(-0.5 * M * t * t) + C)


def gaussian_jacobian(t: ArrayLike, A: float, M: float, C: float) -> NDArray[np.float64]:
    """Partial derivatives of :func:`gaussian_model` with respect to (A, M, C)."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-0.5 * M * t * t)
    return np.column_stack([(1 - C) * e + C, -0.5 * A * (1 - C) * e * t * t, A * (1 - e)])


def _sinc(x):
    return np.sinc(x / np.pi)


def _dsinc(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = -xs / 3 + xs**3 / 30
    xl = x[~small]
    out[~small] = (xl * np.cos(xl) - np.sin(xl)) / (xl * xl)
    return out


def _sinc_sq(u):
    # sinc(sqrt(u)), continued to u < 0 as sinh(sqrt(-u))/sqrt(-u)
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-4
    us = u[small]
    out[small] = 1 - us / 6 + us * us / 120
    pos = (~small) & (u > 0)
    neg = (~small) & (u < 0)
    out[pos] = _sinc(np.sqrt(u[pos]))
    x = np.sqrt(-u[neg])
    out[neg] = np.sinh(x) / x
    return out


def _dsinc_sq(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-4
    us = u[small]
    out[small] = -1 / 6 + us / 60 - us * us / 2520
    pos = (~small) & (u > 0)
    neg = (~small) & (u < 0)
    x = np.sqrt(u[pos])
    out[pos] = (x * np.cos(x) - np.sin(x)) / (2 * x**3)
    x = np.sqrt(-u[neg])
    out[neg] = -(x * np.cosh(x) - np.sinh(x)) / (2 * x**3)
    return out


def sinc_gaussian_model(t: ArrayLike, A: float, m1: float, m2: float, C: float) -> NDArray[np.float64]:
    """A[(1 - C) sinc(m2 t) exp(-m1 t^2 / 2) + C] with sinc(x) = sin(x)/x."""
    t = np.asarray(t, dtype=float)
    return A * ((1 - C) * _sinc(m2 * t) * np.exp(-0.5 * m1 * t * t) + C)


def sinc_gaussian_jacobian(t: ArrayLike, A: float, m1: float, m2: float, C: float) -> NDArray[np.float64]:
    """Partial derivatives of :func:`sinc_gaussian_model` with respect to (A, m1, m2, C)."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-0.5 * m1 * t * t)
    s = _sinc(m2 * t)
    return np.column_stack([
        (1 - C) * s * e + C,
        -0.5 * A * (1 - C) * s * e * t * t,
        A * (1 - C) * _dsinc(m2 * t) * t * e,
        A * (1 - s * e),
    ])


def _flat(curve: DecayCurve) -> bool:
    y = curve.values
    return np.ptp(y) <= 1e-12 * max(np.max(np.abs(y)), 1e-300)


def _flat_result(curve: DecayCurve, model: FitModel, extra: Mapping[str, float]) -> FitResult:
    a = float(np.mean(curve.values))
    params = {"A": a, "M": 0.0, "C": 1.0, **extra}
    rms = float(np.sqrt(np.mean((curve.values - a) ** 2)))
    return FitResult(model, params, None, rms, True, ("degenerate_M",))


def _gaussian_init(curve: DecayCurve) -> dict[str, float]:
    t, y = curve.times, curve.values
    A = y[0] if y[0] != 0 else np.max(np.abs(y))
    C = float(np.clip(y[-1] / A, 0.01, 0.99))
    half = (1 + C) / 2
    below = np.nonzero(y / A <= half)[0]
    if below.size and t[below[0]] > 0:
        t_half = t[below[0]]
    else:
        t_half = t[-1]
    M = 2 * np.log(2) / t_half**2
    return {"A": float(A), "M": float(M), "C": C}


def fit_gaussian(curve: DecayCurve, init: Optional[Mapping[str, float]] = None,
                 max_iter: int = 500) -> FitResult:
    """Fit A[(1 - C) exp(-M t^2 / 2) + C].

    Parameters
    ----------
    curve : DecayCurve
        At least 5 samples.
    init : mapping, optional
        Starting values for A, M, C.  The default takes A from the first
        sample, C from the last-to-first ratio and M from the half-decay time.

    Returns
    -------
    FitResult
        ``params`` holds A, M (rad^2/s^2) and C.  A flat curve yields M = 0,
        C = 1 and the flag ``degenerate_M``.
    """
    if len(curve) < 5:
        raise ValueError("a Gaussian fit needs at least 5 points")
    if _flat(curve):
        return _flat_result(curve, FitModel.GAUSSIAN, {})
    p0 = dict(_gaussian_init(curve)) if init is None else {k: float(init[k]) for k in ("A", "M", "C")}
    ts = curve.times[-1]
    T = curve.times / ts
    w = curve.weights
    y = curve.values

    def unpack(x):
        return x[0], x[1] ** 2, _logistic(x[2])

    def fun(x):
        A, mu, C = unpack(x)
        return w * (gaussian_model(T, A, mu, C) - y)

    def jac(x):
        A, mu, C = unpack(x)
        J = gaussian_jacobian(T, A, mu, C)
        J[:, 1] *= 2 * x[1]
        J[:, 2] *= C * (1 - C)
        return w[:, None] * J

    x0 = np.array([p0["A"], np.sqrt(max(p0["M"], 0.0)) * ts, _logit(p0["C"])])
    sol = levenberg_marquardt(fun, jac, x0, max_iter=max_iter, floor=_round_off_floor(y, w))
    A, mu, C = unpack(sol.x)
    M = mu / ts**2
    r = fun(sol.x)
    params = {"A": float(A), "M": float(M), "C": float(C)}
    stderr = None
    if sol.converged:
        cov = _covariance(w[:, None] * gaussian_jacobian(curve.times, A, M, C), r)
        if cov is not None:
            stderr = dict(zip(("A", "M", "C"), np.sqrt(np.abs(np.diag(cov))).tolist()))
    rms = float(np.sqrt(np.mean((gaussian_model(curve.times, A, M, C) - y) ** 2)))
    return FitResult(FitModel.GAUSSIAN, params, stderr, rms, sol.converged, (), sol.n_iter)


def fit_sinc_gaussian(curve: DecayCurve, init: Optional[Mapping[str, float]] = None,
                      max_iter: int = 1000) -> FitResult:
    """Fit A[(1 - C) sinc(m2 t) exp(-m1 t^2 / 2) + C].

    The reported second moment is M = m1 + m2^2/3, with its standard error
    propagated from the (m1, m2) covariance.  Without ``init`` a Gaussian
    fit seeds a few deterministic splits of M between m1 and m2 and the
    lowest-cost solution is kept.
    """
    if len(curve) < 7:
        raise ValueError("a sinc-Gaussian fit needs at least 7 points")
    if _flat(curve):
        return _flat_result(curve, FitModel.SINC_GAUSSIAN, {"m1": 0.0, "m2": 0.0})
    ts = curve.times[-1]
    T = curve.times / ts
    w = curve.weights
    y = curve.values

    # internal coordinates (A, sqrt(m1), z = m2^2, logit C) in scaled time; the
    # model is analytic in z, so m2 = 0 is not a stationary point
    def unpack(x):
        return x[0], x[1] ** 2, x[2], _logistic(x[3])

    def model_z(A, m1, z, C):
        return A * ((1 - C) * _sinc_sq(z * T * T) * np.exp(-0.5 * m1 * T * T) + C)

    def fun(x):
        return w * (model_z(*unpack(x)) - y)

    def jac(x):
        A, m1, z, C = unpack(x)
        u = z * T * T
        e = np.exp(-0.5 * m1 * T * T)
        s = _sinc_sq(u)
        J = np.column_stack([
            (1 - C) * s * e + C,
            -0.5 * A * (1 - C) * s * e * T * T * 2 * x[1],
            A * (1 - C) * _dsinc_sq(u) * T * T * e,
            A * (1 - s * e) * C * (1 - C),
        ])
        return w[:, None] * J

    if init is not None:
        starts = [{k: float(init[k]) for k in ("A", "m1", "m2", "C")}]
    else:
        g = fit_gaussian(curve)
        M0 = max(g.params["M"], 1e-300)
        starts = [
            {"A": g.params["A"], "m1": frac * M0, "m2": np.sqrt(3 * (1 - frac) * M0), "C": g.params["C"]}
            for frac in (0.999, 0.5, 0.1)
        ]
    floor = _round_off_floor(y, w)
    best = None
    for p in starts:
        x0 = np.array([p["A"], np.sqrt(max(p["m1"], 0.0)) * ts, (p["m2"] * ts) ** 2, _logit(p["C"])])
        sol = levenberg_marquardt(fun, jac, x0, max_iter=max_iter, floor=floor)
        if best is None or sol.cost < best.cost * (1 - 1e-12):
            best = sol
    A, m1s, zs, C = unpack(best.x)
    if zs < 0:
        # unconstrained optimum beyond m2 = 0: the bound is active and the model is Gaussian
        g = fit_gaussian(curve, init=None if init is None else {"A": A, "M": m1s / ts**2, "C": C})
        gp = g.params
        params = {"A": gp["A"], "m1": gp["M"], "m2": 0.0, "C": gp["C"], "M": gp["M"]}
        stderr = None
        if g.stderr is not None:
            stderr = {"A": g.stderr["A"], "m1": g.stderr["M"], "m2": float("nan"), "C": g.stderr["C"],
                      "M": g.stderr["M"]}
        return FitResult(FitModel.SINC_GAUSSIAN, params, stderr, g.residual_rms, g.converged,
                         ("m2_at_bound",), best.n_iter + g.n_iter)
    m1 = m1s / ts**2
    m2 = np.sqrt(zs) / ts
    M = m1 + m2 * m2 / 3
    r = fun(best.x)
    params = {"A": float(A), "m1": float(m1), "m2": float(m2), "C": float(C), "M": float(M)}
    stderr = None
    if best.converged:
        Jn = w[:, None] * sinc_gaussian_jacobian(curve.times, A, m1, m2, C)
        cov = _covariance(Jn, r)
        if cov is not None:
            se = np.sqrt(np.abs(np.diag(cov)))
            grad = np.array([0.0, 1.0, 2 * m2 / 3, 0.0])
            stderr = {"A": float(se[0]), "m1": float(se[1]), "m2": float(se[2]), "C": float(se[3]),
                      "M": float(np.sqrt(abs(grad @ cov @ grad)))}
    rms = float(np.sqrt(np.mean((sinc_gaussian_model(curve.times, A, m1, m2, C) - y) ** 2)))
    return FitResult(FitModel.SINC_GAUSSIAN, params, stderr, rms, best.converged, (), best.n_iter)


# ---------------------------------------------------------------------------
# Coupling-constant fits against the free-fermion closed forms
# ---------------------------------------------------------------------------


def intensity_model(model: FitModel, b: float, tau: ArrayLike, n_spins: Optional[int] = None) -> NDArray[np.float64]:
    """Closed-form I0, I2 or C versus tau; ``n_spins=None`` selects the infinite chain."""
    model = FitModel(model)
    tau = np.asarray(tau, dtype=float)
    if n_spins is None:
        fn = {FitModel.INTENSITY_I0: fermion.i0_infinite, FitModel.INTENSITY_I2: fermion.i2_infinite,
              FitModel.ASYMPTOTE_C: fermion.asymptote_c_infinite}[model]
        return np.asarray(fn(b, tau), dtype=float)
    fm = fermion.FermionModel(n_spins, b)
    if model is FitModel.INTENSITY_I0:
        return np.asarray(fermion.i0(fm, tau))
    if model is FitModel.INTENSITY_I2:
        return np.asarray(fermion.i2(fm, tau))
    if model is FitModel.ASYMPTOTE_C:
        return np.asarray(fermion.asymptote_c(fm, tau, verify=False))
    raise ValueError(f"{model} is not a tau-domain model")


def intensity_model_db(model: FitModel, b: float, tau: ArrayLike, n_spins: Optional[int] = None) -> NDArray[np.float64]:
    """Derivative of :func:`intensity_model` with respect to b."""
    model = FitModel(model)
    tau = np.asarray(tau, dtype=float)
    if n_spins is None:
        j0, j1 = scipy.special.j0, scipy.special.j1
        if model is FitModel.ASYMPTOTE_C:
            x = 8 * b * tau
            return -16 * tau * j0(x) * j1(x)
        d0 = -8 * tau * j1(16 * b * tau)
    else:
        c = np.cos(fermion.FermionModel(n_spins, b).kappa_grid)
        phase = 8 * b * tau[..., None] * c
        if model is FitModel.ASYMPTOTE_C:
            m = np.mean(np.cos(phase), axis=-1)
            return 2 * m * np.mean(-np.sin(phase) * 8 * tau[..., None] * c, axis=-1)
        d0 = -np.mean(np.sin(2 * phase) * 8 * tau[..., None] * c, axis=-1)
    if model is FitModel.INTENSITY_I0:
        return d0
    if model is FitModel.INTENSITY_I2:
        return -0.5 * d0
    raise ValueError(f"{model} is not a tau-domain model")


def fit_model_b(
    taus: ArrayLike,
    values: ArrayLike,
    model: FitModel,
    *,
    drift: bool = False,
    n_spins: Optional[int] = None,
    sigma: Optional[ArrayLike] = None,
    b_range: Optional[tuple[float, float]] = None,
    n_scan: int = 400,
) -> FitResult:
    """Fit the coupling b (rad/s) of an intensity or asymptote curve versus tau.

    A deterministic logarithmic scan over ``b_range`` picks the starting
    point (the closed forms oscillate in b tau, so a purely local solver can
    lock onto a wrong branch); Levenberg-Marquardt then refines b and, for
    ``AsymptoteC`` with ``drift=True``, a linear term d tau.

    Parameters
    ----------
    taus, values : array_like
        At least 8 preparation times (s) and the measured quantity.
    model : FitModel
        ``IntensityI0``, ``IntensityI2`` or ``AsymptoteC``.
    n_spins : int, optional
        Chain length for the finite-N closed form; infinite chain if omitted.
    b_range : (float, float), optional
        Scan interval; defaults to [0.02/tau_max, 20/tau_min] over positive taus.
    """
    model = FitModel(model)
    if model not in (FitModel.INTENSITY_I0, FitModel.INTENSITY_I2, FitModel.ASYMPTOTE_C):
        raise ValueError(f"{model.value} is not a coupling fit model")
    if drift and model is not FitModel.ASYMPTOTE_C:
        raise ValueError("a drift term is only allowed for AsymptoteC")
    tau = np.asarray(taus, dtype=float)
    y = np.asarray(values, dtype=float)
    if tau.ndim != 1 or tau.shape != y.shape or len(tau) < 8:
        raise ValueError("need matching tau and value arrays with at least 8 points")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    tmax = float(np.max(tau))
    if b_range is None:
        pos = tau[tau > 0]
        b_range = (0.02 / tmax, 20.0 / float(np.min(pos)))
    grid = np.geomspace(*b_range, n_scan)

    def design(b):
        # with drift the linear term is solved exactly for each b
        f = intensity_model(model, b, tau, n_spins)
        if not drift:
            return f, 0.0
        d = float(np.sum(w**2 * tau * (y - f)) / np.sum(w**2 * tau * tau))
        return f, d

    costs = []
    for b in grid:
        f, d = design(b)
        costs.append(np.sum((w * (f + d * tau - y)) ** 2))
    b0 = float(grid[int(np.argmin(costs))])
    _, d0 = design(b0)

    # internal units: b * tmax and d * tmax
    def fun(x):
        f = intensity_model(model, x[0] / tmax, tau, n_spins)
        if drift:
            f = f + x[1] * tau / tmax
        return w * (f - y)

    def jac(x):
        cols = [intensity_model_db(model, x[0] / tmax, tau, n_spins) / tmax]
        if drift:
            cols.append(tau / tmax)
        return w[:, None] * np.column_stack(cols)

    x0 = np.array([b0 * tmax] + ([d0 * tmax] if drift else []))
    sol = levenberg_marquardt(fun, jac, x0, floor=_round_off_floor(y, w))
    b = sol.x[0] / tmax
    params = {"b": float(b)}
    names = ["b"]
    if drift:
        params["drift"] = float(sol.x[1] / tmax)
        names.append("drift")
    r = fun(sol.x)
    stderr = None
    if sol.converged:
        cols = [intensity_model_db(model, b, tau, n_spins)]
        if drift:
            cols.append(tau)
        cov = _covariance(w[:, None] * np.column_stack(cols), r)
        if cov is not None:
            stderr = dict(zip(names, np.sqrt(np.abs(np.diag(cov))).tolist()))
    rms = float(np.sqrt(np.mean((r / w) ** 2)))
    meta = {"n_spins": n_spins, "b_scan": (float(b_range[0]), float(b_range[1]))}
    return FitResult(model, params, stderr, rms, sol.converged, (), sol.n_iter, meta)


def fit_curve(curve: DecayCurve, model: FitModel | str = FitModel.GAUSSIAN) -> FitResult:
    """Dispatch to :func:`fit_gaussian` or :func:`fit_sinc_gaussian`."""
    model = FitModel(model)
    if model is FitModel.GAUSSIAN:
        return fit_gaussian(curve)
    if model is FitModel.SINC_GAUSSIAN:
        return fit_sinc_gaussian(curve)
    raise ValueError(f"{model.value} is fitted against tau, use fit_model_b")


def evaluate(result: FitResult, t: ArrayLike) -> NDArray[np.float64]:
    """Model curve of a Gaussian or sinc-Gaussian fit at times ``t``."""
    p = result.params
    if result.model is FitModel.GAUSSIAN:
        return gaussian_model(t, p["A"], p["M"], p["C"])
    if result.model is FitModel.SINC_GAUSSIAN:
        return sinc_gaussian_model(t, p["A"], p["m1"], p["m2"], p["C"])
    b_model = intensity_model(result.model, p["b"], t, result.meta.get("n_spins"))
    return b_model + p.get("drift", 0.0) * np.asarray(t, dtype=float)


def summarize(results: Sequence[FitResult], taus: Sequence[float]) -> dict[str, NDArray[np.float64]]:
    """Tabulate A(tau), M(tau), C(tau) and their errors from per-curve fits."""
    out = {"tau": np.asarray(taus, dtype=float)}
    for key in ("A", "M", "C"):
        out[key] = np.array([r.params.get(key, np.nan) for r in results])
        out[key + "_err"] = np.array([
            (r.stderr or {}).get(key, np.nan) for r in results
        ])
    return out
