"""Per-subject ARIMA(p,d,q) with AICc order selection and path simulation.

Estimation is exact Gaussian maximum likelihood: the d-times-differenced,
mean-adjusted series is cast into the ARMA state-space form and filtered
with a Kalman recursion started from the unconditional state covariance.
The innovation variance is concentrated out of the likelihood, and the
remaining AR/MA coefficients are optimized by Nelder-Mead in a partial-
autocorrelation reparameterization that enforces stationarity and
invertibility without explicit constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, Provenance, SpeedTrace, TRACE_LEN

MAX_P = 3
MAX_Q = 3
MAX_D = 1

# Orders whose AICc lies within this band of the minimum count as tied, and
# the tie goes to the lower order: differences under ~2 are not statistically
# meaningful (Burnham & Anderson), and preferring parsimony among ties keeps
# the classic common-factor overfit of full-grid ARMA selection in check.
AICC_TIE_TOL = 2.0

# Fits whose AR and MA polynomials nearly share a root are parameter-redundant
# (Box-Jenkins): the likelihood ridge makes them non-identified, so they are
# rejected like non-convergent fits.
REDUNDANCY_ROOT_TOL = 0.1

# Nelder-Mead: 500 iterations max, 1e-8 simplex tolerance on parameters,
# initial simplex steps 0.25 wide in the unconstrained (pre-tanh) space;
# the single deterministic restart refines around the best point with a
# finer simplex.
_NM_MAXITER = 500
_NM_TOL = 1e-8
_NM_STEP = 0.25
_NM_RESTART_STEP = 0.02
_BAD_OBJ = 1e12


class NonConvergenceError(DomainError):
    pass


class ParameterRedundancyError(DomainError):
    """Fitted AR and MA polynomials nearly cancel; the model is not identified."""


class SingularSeriesError(DomainError):
    pass


class AllFitsFailedError(DomainError):
    pass


class LengthMismatchError(DomainError):
    pass


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if not (0 <= self.p <= MAX_P and 0 <= self.q <= MAX_Q and 0 <= self.d <= MAX_D):
            raise DomainError(f"order ({self.p},{self.d},{self.q}) outside grid")

    @property
    def complexity(self) -> int:
        return self.p + self.q + self.d

    def n_params(self) -> int:
        """Parameters counted by AICc: AR + MA + intercept + variance."""
        return self.p + self.q + 2


@dataclass(frozen=True)
class TerminalState:
    """What the forecast recursion needs to continue past the sample end."""

    z_tail: tuple[float, ...]   # last max(p,q) mean-adjusted differenced values
    e_tail: tuple[float, ...]   # last q conditional residuals
    y_tail: tuple[float, ...]   # last d original-scale values (integration levels)


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    ar: tuple[float, ...]
    ma: tuple[float, ...]
    intercept: float
    sigma2: float
    loglik: float
    n_obs: int
    terminal: TerminalState

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise DomainError("sigma2 must be positive")
        # MA polynomial 1 + t1 z + ... is checked as the AR-form 1 - (-t1) z - ...
        checks = ((self.ar, "AR"), (tuple(-t for t in self.ma), "MA"))
        for coeffs, label in checks:
            if coeffs and _min_root_modulus(coeffs) <= 1.0 - 1e-6:
                raise DomainError(f"{label} polynomial root inside unit circle")


def _poly_roots(coeffs) -> np.ndarray:
    """Roots of 1 - c1 z - ... - ck z^k."""
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.size == 0:
        return np.empty(0, dtype=np.complex128)
    return np.roots(np.concatenate(([1.0], -arr))[::-1])


def _min_root_modulus(coeffs: tuple[float, ...]) -> float:
    roots = _poly_roots(coeffs)
    return float(np.abs(roots).min()) if roots.size else math.inf


def _has_common_factor(phi: np.ndarray, theta: np.ndarray) -> bool:
    ar_roots = _poly_roots(phi)
    ma_roots = _poly_roots(-theta)  # 1 + t z + ... in the AR convention
    if ar_roots.size == 0 or ma_roots.size == 0:
        return False
    dists = np.abs(ar_roots[:, None] - ma_roots[None, :])
    return bool(dists.min() < REDUNDANCY_ROOT_TOL)


def pacf_to_ar(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations in (-1,1) to a
    stationary AR coefficient vector."""
    a = np.zeros(r.size)
    for k in range(r.size):
        prev = a[:k].copy()
        a[k] = r[k]
        for i in range(k):
            a[i] = prev[i] - r[k] * prev[k - 1 - i]
    return a


def _unconstrained_to_coeffs(x: np.ndarray, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.tanh(x)
    phi = pacf_to_ar(r[:p]) if p else np.empty(0)
    # 1 + theta_1 z + ... is invertible iff 1 - (-theta_1) z - ... is stationary
    theta = -pacf_to_ar(r[p:]) if q else np.empty(0)
    return phi, theta


def _state_space(phi: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = max(phi.size, theta.size + 1, 1)
    T = np.zeros((m, m))
    T[: phi.size, 0] = phi
    for i in range(m - 1):
        T[i, i + 1] = 1.0
    R = np.zeros(m)
    R[0] = 1.0
    R[1 : theta.size + 1] = theta
    return T, R


def _initial_cov(T: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Unconditional state covariance: solves P = T P T' + R R'."""
    m = T.shape[0]
    rhs = np.outer(R, R)
    A = np.eye(m * m) - np.kron(T, T)
    vec = np.linalg.solve(A, rhs.reshape(-1))
    P = vec.reshape(m, m)
    return (P + P.T) / 2.0


def _kalman_core(z, T, R, P0):
    """Concentrated-variance Kalman filter (unit innovation variance).

    Returns (sum log F_t, sum v_t^2/F_t, v, F); the first element is NaN
    when the recursion turns numerically invalid. Matrix work is written as
    explicit loops: the state dimension is at most 4 and BLAS dispatch would
    dominate the runtime.
    """
    n = z.shape[0]
    m = T.shape[0]
    a = np.zeros(m)
    P = P0.copy()
    RRt = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            RRt[i, j] = R[i] * R[j]
    v = np.empty(n)
    F = np.empty(n)
    K = np.empty(m)
    af = np.empty(m)
    Pf = np.empty((m, m))
    TP = np.empty((m, m))
    Pn = np.empty((m, m))
    sum_log_f = 0.0
    sum_v2 = 0.0
    steady = False
    f = 0.0
    log_f = 0.0
    f_prev = -1.0
    for t in range(n):
        if not steady:
            f = P[0, 0]
            if not (f > 1e-12 and np.isfinite(f)):
                return np.nan, np.nan, v, F
            log_f = np.log(f)
            for i in range(m):
                K[i] = P[i, 0] / f
        vt = z[t] - a[0]
        v[t] = vt
        F[t] = f
        sum_log_f += log_f
        sum_v2 += vt * vt / f
        for i in range(m):
            af[i] = a[i] + K[i] * vt
        for i in range(m):
            s = 0.0
            for k in range(m):
                s += T[i, k] * af[k]
            a[i] = s
        if steady:
            continue
        # once F stabilizes the gain is constant; stop updating covariances
        if f_prev >= 0.0 and abs(f - f_prev) <= 1e-12 * (1.0 + f):
            steady = True
            continue
        f_prev = f
        for i in range(m):
            for j in range(m):
                Pf[i, j] = P[i, j] - K[i] * P[0, j]
        for i in range(m):
            for j in range(m):
                s = 0.0
                for k in range(m):
                    s += T[i, k] * Pf[k, j]
                TP[i, j] = s
        for i in range(m):
            for j in range(m):
                s = RRt[i, j]
                for k in range(m):
                    s += TP[i, k] * T[j, k]
                Pn[i, j] = s
        for i in range(m):
            for j in range(m):
                P[i, j] = 0.5 * (Pn[i, j] + Pn[j, i])
    return sum_log_f, sum_v2, v, F


def _solve_linear(A, b):
    """Gaussian elimination with partial pivoting (systems are <= 16x16)."""
    n = b.shape[0]
    M = A.copy()
    x = b.copy()
    for col in range(n):
        piv = col
        best = abs(M[col, col])
        for r in range(col + 1, n):
            cand = abs(M[r, col])
            if cand > best:
                best = cand
                piv = r
        if best < 1e-300:
            return x, False
        if piv != col:
            for c in range(n):
                tmp = M[col, c]
                M[col, c] = M[piv, c]
                M[piv, c] = tmp
            tmp = x[col]
            x[col] = x[piv]
            x[piv] = tmp
        inv = 1.0 / M[col, col]
        for r in range(col + 1, n):
            factor = M[r, col] * inv
            if factor != 0.0:
                for c in range(col, n):
                    M[r, c] -= factor * M[col, c]
                x[r] -= factor * x[col]
    for col in range(n - 1, -1, -1):
        s = x[col]
        for c in range(col + 1, n):
            s -= M[col, c] * x[c]
        x[col] = s / M[col, col]
    return x, True


def _conditional_residuals(z, phi, theta):
    """ARMA-form residuals with zero pre-sample values; the tail continues
    the simulation recursion."""
    n = z.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    e = np.zeros(n)
    for t in range(n):
        acc = z[t]
        for i in range(p):
            if t - 1 - i >= 0:
                acc -= phi[i] * z[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
    return e


def _pacf_to_coeffs_arrays(x, p, q):
    """tanh + Durbin-Levinson transform, loop-only so it can be jitted."""
    r = np.tanh(x)
    phi = np.zeros(p)
    theta = np.zeros(q)
    for k in range(p):
        prev = phi[:k].copy()
        phi[k] = r[k]
        for i in range(k):
            phi[i] = prev[i] - r[k] * prev[k - 1 - i]
    for k in range(q):
        prev = theta[:k].copy()
        theta[k] = r[p + k]
        for i in range(k):
            theta[i] = prev[i] - r[p + k] * prev[k - 1 - i]
    return phi, -theta


def _neg_loglik_arrays(x, z, p, q):
    """Concentrated negative log-likelihood at unconstrained parameters x."""
    phi, theta = _pacf_to_coeffs_arrays(x, p, q)
    m = max(p, q + 1)
    T = np.zeros((m, m))
    for i in range(p):
        T[i, 0] = phi[i]
    for i in range(m - 1):
        T[i, i + 1] = 1.0
    R = np.zeros(m)
    R[0] = 1.0
    for j in range(q):
        R[j + 1] = theta[j]
    # unconditional covariance: (I - kron(T,T)) vec(P) = vec(R R')
    mm = m * m
    A = np.zeros((mm, mm))
    b = np.zeros(mm)
    for i in range(m):
        for j in range(m):
            row = i * m + j
            b[row] = R[i] * R[j]
            for k in range(m):
                for l in range(m):
                    A[row, k * m + l] = -T[i, k] * T[j, l]
            A[row, row] += 1.0
    sol, ok = _solve_linear(A, b)
    if not ok:
        return _BAD_OBJ
    P0 = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            P0[i, j] = sol[i * m + j]
    P0 = (P0 + P0.T) / 2.0
    if not np.all(np.isfinite(P0)):
        return _BAD_OBJ
    sum_log_f, sum_v2, _, _ = _kalman_core(z, T, R, P0)
    n = z.shape[0]
    if not (np.isfinite(sum_log_f) and sum_v2 > 0):
        return _BAD_OBJ
    sigma2 = sum_v2 / n
    ll = -0.5 * n * (np.log(2 * np.pi) + np.log(sigma2) + 1.0) - 0.5 * sum_log_f
    return -ll


def _nelder_mead(z, p, q, x0, maxiter, xatol, step):
    """Deterministic simplex minimizer of the concentrated likelihood
    (standard reflection/expansion/contraction/shrink coefficients);
    converged when the simplex spread on parameters is within xatol."""
    n = x0.shape[0]
    n_vert = n + 1
    simplex = np.empty((n_vert, n))
    fvals = np.empty(n_vert)
    for i in range(n_vert):
        for j in range(n):
            simplex[i, j] = x0[j]
        if i > 0:
            simplex[i, i - 1] += step
        fvals[i] = _neg_loglik_arrays(simplex[i], z, p, q)

    converged = False
    it = 0
    while it < maxiter:
        it += 1
        order = np.argsort(fvals)
        simplex = simplex[order].copy()
        fvals = fvals[order].copy()

        spread_x = 0.0
        for i in range(1, n_vert):
            for j in range(n):
                dx = abs(simplex[i, j] - simplex[0, j])
                if dx > spread_x:
                    spread_x = dx
        if spread_x <= xatol:
            converged = True
            break

        centroid = np.zeros(n)
        for i in range(n_vert - 1):
            for j in range(n):
                centroid[j] += simplex[i, j]
        centroid /= n_vert - 1

        worst = simplex[n_vert - 1]
        xr = centroid + (centroid - worst)
        fr = _neg_loglik_arrays(xr, z, p, q)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = _neg_loglik_arrays(xe, z, p, q)
            if fe < fr:
                simplex[n_vert - 1] = xe
                fvals[n_vert - 1] = fe
            else:
                simplex[n_vert - 1] = xr
                fvals[n_vert - 1] = fr
        elif fr < fvals[n_vert - 2]:
            simplex[n_vert - 1] = xr
            fvals[n_vert - 1] = fr
        else:
            shrink = False
            if fr < fvals[n_vert - 1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = _neg_loglik_arrays(xc, z, p, q)
                if fc <= fr:
                    simplex[n_vert - 1] = xc
                    fvals[n_vert - 1] = fc
                else:
                    shrink = True
            else:
                xc = centroid + 0.5 * (worst - centroid)
                fc = _neg_loglik_arrays(xc, z, p, q)
                if fc < fvals[n_vert - 1]:
                    simplex[n_vert - 1] = xc
                    fvals[n_vert - 1] = fc
                else:
                    shrink = True
            if shrink:
                for i in range(1, n_vert):
                    for j in range(n):
                        simplex[i, j] = simplex[0, j] + 0.5 * (
                            simplex[i, j] - simplex[0, j]
                        )
                    fvals[i] = _neg_loglik_arrays(simplex[i], z, p, q)

    best = int(np.argmin(fvals))
    return simplex[best].copy(), fvals[best], converged, it


try:  # hot loops; the pure-Python definitions above are the fallback
    from numba import njit

    _kalman_core = njit(cache=True, nogil=True)(_kalman_core)
    _solve_linear = njit(cache=True, nogil=True)(_solve_linear)
    _conditional_residuals = njit(cache=True, nogil=True)(_conditional_residuals)
    _pacf_to_coeffs_arrays = njit(cache=True, nogil=True)(_pacf_to_coeffs_arrays)
    _neg_loglik_arrays = njit(cache=True, nogil=True)(_neg_loglik_arrays)
    _nelder_mead = njit(cache=True, nogil=True)(_nelder_mead)
    _PARALLEL_FITS = True
except ImportError:  # pragma: no cover
    _PARALLEL_FITS = False


def _concentrated_loglik(z: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> tuple[float, float]:
    """(loglik, sigma2_hat) for given coefficients; -inf when invalid."""
    n = z.size
    try:
        T, R = _state_space(phi, theta)
        P0 = _initial_cov(T, R)
    except np.linalg.LinAlgError:
        return -math.inf, math.nan
    sum_log_f, sum_v2, _, _ = _kalman_core(z, T, R, P0)
    if not math.isfinite(sum_log_f) or sum_v2 <= 0:
        return -math.inf, math.nan
    sigma2 = sum_v2 / n
    ll = -0.5 * n * (math.log(2 * math.pi) + math.log(sigma2) + 1.0) - 0.5 * sum_log_f
    return ll, sigma2


def _prepare(series: np.ndarray, order: ArimaOrder) -> tuple[np.ndarray, float]:
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1:
        raise DomainError("series must be one-dimensional")
    if not np.all(np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    if y.size <= 10 + order.p + order.q + order.d:
        raise DomainError(
            f"series of {y.size} too short for order ({order.p},{order.d},{order.q})"
        )
    w = np.diff(y, n=order.d) if order.d else y
    mu = float(w.mean())
    z = w - mu
    if float(z.var()) < 1e-24:
        raise SingularSeriesError("zero variance after differencing")
    return z, mu


def fit(series: np.ndarray, order: ArimaOrder) -> ArimaModel:
    """Exact-MLE fit; deterministic (Nelder-Mead from the zero-coefficient
    start, one deterministic restart on non-convergence)."""
    z, mu = _prepare(series, order)
    p, q = order.p, order.q

    if p + q == 0:
        phi = np.empty(0)
        theta = np.empty(0)
    else:
        x0 = np.zeros(p + q)
        x, fx, converged, n_iter = _nelder_mead(
            z, p, q, x0, _NM_MAXITER, _NM_TOL, _NM_STEP
        )
        if not converged:
            # deterministic restart: refine around the best point found
            x, fx, converged, n_iter = _nelder_mead(
                z, p, q, x, _NM_MAXITER, _NM_TOL, _NM_RESTART_STEP
            )
        if not converged:
            raise NonConvergenceError(f"order ({p},{order.d},{q}): {n_iter} iterations")
        if fx >= _BAD_OBJ:
            raise NonConvergenceError(f"order ({p},{order.d},{q}): no valid likelihood")
        phi, theta = _unconstrained_to_coeffs(x, p, q)
        if _has_common_factor(phi, theta):
            raise ParameterRedundancyError(
                f"order ({p},{order.d},{q}): AR and MA roots nearly cancel"
            )

    ll, sigma2 = _concentrated_loglik(z, phi, theta)
    if not math.isfinite(ll):
        raise NonConvergenceError(f"order ({p},{order.d},{q}): degenerate likelihood")

    e = _conditional_residuals(z, phi, theta)
    tail = max(p, q)
    y = np.asarray(series, dtype=np.float64)
    return ArimaModel(
        order=order,
        ar=tuple(float(c) for c in phi),
        ma=tuple(float(c) for c in theta),
        intercept=mu,
        sigma2=float(sigma2),
        loglik=float(ll),
        n_obs=z.size,
        terminal=TerminalState(
            z_tail=tuple(float(v) for v in z[z.size - tail :]) if tail else (),
            e_tail=tuple(float(v) for v in e[e.size - q :]) if q else (),
            y_tail=tuple(float(v) for v in y[y.size - order.d :]) if order.d else (),
        ),
    )


def aicc(loglik: float, k_params: int, n: int) -> float:
    """Small-sample corrected AIC; +inf sentinel when the correction blows up
    (n <= k+1), so degenerate fits rank last."""
    if n <= k_params + 1:
        return math.inf
    return -2.0 * loglik + 2.0 * k_params + 2.0 * k_params * (k_params + 1) / (n - k_params - 1)


def _grid_orders() -> list[ArimaOrder]:
    return [
        ArimaOrder(p, d, q)
        for d in range(MAX_D + 1)
        for p in range(MAX_P + 1)
        for q in range(MAX_Q + 1)
    ]


def select_order(series: np.ndarray) -> ArimaOrder:
    """Minimum-AICc order over the (p,d,q) grid; within-tolerance ties go to
    the lower order (smaller p+q+d, then d, then p).

    Grid fits run on a small thread pool (the jitted likelihood releases the
    GIL); the ranking happens after all fits finish, so the result does not
    depend on thread count.
    """

    def try_fit(order: ArimaOrder) -> tuple[float, ArimaOrder] | None:
        try:
            model = fit(series, order)
        except (NonConvergenceError, ParameterRedundancyError, SingularSeriesError, DomainError):
            return None
        return aicc(model.loglik, order.n_params(), model.n_obs), order

    orders = _grid_orders()
    if _PARALLEL_FITS:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(4, len(orders))) as pool:
            results = list(pool.map(try_fit, orders))
    else:
        results = [try_fit(o) for o in orders]
    candidates = [r for r in results if r is not None]
    if not candidates:
        raise AllFitsFailedError("no grid order could be fitted")
    return rank_orders(candidates)


def rank_orders(candidates: list[tuple[float, ArimaOrder]]) -> ArimaOrder:
    """Pick the minimum-AICc order; orders within AICC_TIE_TOL of the minimum
    tie, and the tie goes to smaller p+q+d, then smaller d, then smaller p."""
    best_aicc = min(a for a, _ in candidates)
    tied = [o for a, o in candidates if a <= best_aicc + AICC_TIE_TOL]
    return min(tied, key=lambda o: (o.complexity, o.d, o.p))


def simulate_paths(
    model: ArimaModel, h: int, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """(n_paths, h) array of stochastic forecast continuations: fresh
    innovations drawn from N(0, sigma2) propagated through the fitted
    recursion starting at the terminal state; integrated when d=1. No
    clamping here — that happens at trial assembly."""
    if h < 1 or n_paths < 1:
        raise DomainError("h and n_paths must be >= 1")
    p, q = model.order.p, model.order.q
    pre = max(p, q)
    phi = np.asarray(model.ar)
    theta = np.asarray(model.ma)
    eps = rng.normal(0.0, math.sqrt(model.sigma2), size=(n_paths, pre + h))
    z = np.zeros((n_paths, pre + h))
    if pre:
        z[:, :pre] = np.asarray(model.terminal.z_tail)[-pre:]
        eps[:, :pre] = 0.0
        if q:
            eps[:, pre - q : pre] = np.asarray(model.terminal.e_tail)
    for t in range(pre, pre + h):
        acc = eps[:, t].copy()
        for i in range(p):
            acc += phi[i] * z[:, t - 1 - i]
        for j in range(q):
            acc += theta[j] * eps[:, t - 1 - j]
        z[:, t] = acc
    w = model.intercept + z[:, pre:]
    if model.order.d == 1:
        return model.terminal.y_tail[0] + np.cumsum(w, axis=1)
    return w


def paths_to_trials(
    path: np.ndarray,
    k_trials: int,
    duration_ms: float | np.ndarray = 1300.0,
    target_on_offset_ms: float | np.ndarray = 200.0,
    model_id: str = "arima",
) -> list[SpeedTrace]:
    """Partition one forecast path into k_trials chronological 64-sample
    segments, clamped at zero. duration/target-on metadata may be scalar or
    per-segment."""
    path = np.asarray(path, dtype=np.float64)
    if path.size != TRACE_LEN * k_trials:
        raise LengthMismatchError(
            f"path of {path.size} samples cannot make {k_trials} trials of {TRACE_LEN}"
        )
    durations = np.broadcast_to(np.asarray(duration_ms, dtype=np.float64), (k_trials,))
    offsets = np.broadcast_to(np.asarray(target_on_offset_ms, dtype=np.float64), (k_trials,))
    provenance = Provenance("forecasted", model_id)
    return [
        SpeedTrace(
            samples=np.clip(path[TRACE_LEN * j : TRACE_LEN * (j + 1)], 0.0, None),
            duration_ms=float(durations[j]),
            target_on_offset_ms=float(offsets[j]),
            provenance=provenance,
        )
        for j in range(k_trials)
    ]


def standardized_innovations(model: ArimaModel, series: np.ndarray) -> np.ndarray:
    """One-step Kalman innovations scaled to unit variance; serially
    uncorrelated when the model is well specified."""
    z, _ = _prepare(series, model.order)
    T, R = _state_space(np.asarray(model.ar), np.asarray(model.ma))
    P0 = _initial_cov(T, R)
    sum_log_f, _, v, F = _kalman_core(z, T, R, P0)
    if not math.isfinite(sum_log_f):
        raise DomainError("filter diverged on supplied series")
    return v / np.sqrt(F * model.sigma2)


def model_to_json(model: ArimaModel) -> dict:
    """Audit dump; mirrors the persisted schema."""
    return {
        "order": [model.order.p, model.order.d, model.order.q],
        "ar": list(model.ar),
        "ma": list(model.ma),
        "intercept": model.intercept,
        "sigma2": model.sigma2,
        "loglik": model.loglik,
        "n_obs": model.n_obs,
    }
