"""Quantile regression and quantile vector autoregression.

Every equation of the QVAR shares the same lagged design matrix, so the
solver works on a batch of responses (and quantiles) at once: an
iteratively reweighted least-squares pass on a smoothed check loss,
followed by an exact simplex-style descent over regression-quantile
vertices that certifies (or improves) the IRLS solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConvergenceError, EstimationError, RankDeficiencyError


def pinball_loss(u: np.ndarray, tau: float) -> float:
    """Sum of the check function rho_tau(u) = u * (tau - 1{u < 0})."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(u * (tau - (u < 0))))


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {tau}")


def _rho(u: np.ndarray, tau: float) -> np.ndarray:
    return u * (tau - (u < 0))


def _irls(X, Y, taus, max_iter, eps_start, eps_end, decay, tol):
    """Batched IRLS on the smoothed check loss.

    Returns (B, converged) with B of shape (k, m). A column has converged
    once the smoothing floor is reached and its loss changes by less than
    ``tol`` (relative) between iterations.
    """
    m = Y.shape[1]
    scale = np.std(Y, axis=0)
    scale[scale == 0] = 1.0
    B = np.linalg.lstsq(X, Y, rcond=None)[0]
    const = np.flatnonzero(np.all(X == X[0], axis=0) & (X[0] != 0))
    if const.size:
        # start from the OLS fit with its level moved to the tau-quantile
        c = const[0]
        R0 = Y - X @ B
        level = np.empty(m)
        for q in np.unique(taus):
            cols = taus == q
            level[cols] = np.quantile(R0[:, cols], q, axis=0)
        B[c] += level / X[0, c]
    shift = (taus - 0.5)[:, None] * X.sum(axis=0)[None, :]
    eps = eps_start
    loss = _rho(Y - X @ B, taus).sum(axis=0)
    converged = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for _ in range(max_iter):
        Ya, Ba = Y[:, active], B[:, active]
        D = 0.5 / np.maximum(np.abs(Ya - X @ Ba), eps * scale[active])
        XD = D.T[:, :, None] * X[None]
        A = XD.transpose(0, 2, 1) @ X
        rhs = np.einsum("mtk,tm->mk", XD, Ya) + shift[active]
        Ba = np.linalg.solve(A, rhs[..., None])[..., 0].T
        B[:, active] = Ba
        new_loss = _rho(Ya - X @ Ba, taus[active]).sum(axis=0)
        done = (eps <= eps_end) & (
            np.abs(loss[active] - new_loss) <= tol * np.maximum(new_loss, 1e-300)
        )
        loss[active] = new_loss
        converged[active[done]] = True
        active = active[~done]
        if active.size == 0:
            break
        eps = max(eps * decay, eps_end)
    return B, converged


@njit(cache=True, nogil=True)
def _initial_basis(X, r):
    """Greedy pick of k linearly independent rows with the smallest |residual|.

    Independence is checked by Gram-Schmidt against the rows already picked.
    Returns an array of k row indices, or an empty array if X is rank deficient.
    """
    T, k = X.shape
    Q = np.zeros((k, k))
    basis = np.empty(k, dtype=np.int64)
    nb = 0
    for t in np.argsort(np.abs(r), kind="mergesort"):
        v = X[t].copy()
        for _ in range(2):
            for q in range(nb):
                v -= (Q[q] @ v) * Q[q]
        nv = np.sqrt(v @ v)
        if nv > 1e-9 * max(1.0, np.sqrt(X[t] @ X[t])):
            Q[nb] = v / nv
            basis[nb] = t
            nb += 1
            if nb == k:
                return basis
    return basis[:0]


@njit(cache=True, nogil=True)
def _vertex_descent(X, y, tau, beta0, max_pivots):
    """Descend from the vertex nearest ``beta0`` to an optimal vertex.

    Returns (beta, certified). ``certified`` means the final vertex is
    non-degenerate and no edge direction decreases the loss, which proves
    optimality.
    """
    T, k = X.shape
    beta = beta0.copy()
    basis = _initial_basis(X, y - X @ beta0)
    if basis.shape[0] < k:
        return beta, False
    XB = np.empty((k, k))
    yB = np.empty(k)
    for j in range(k):
        XB[j] = X[basis[j]]
        yB[j] = y[basis[j]]
    beta = np.linalg.solve(XB, yB)
    ytol = 1e-12 * max(1.0, np.abs(y).max())
    in_basis = np.zeros(T, dtype=np.bool_)
    zero = np.zeros(T, dtype=np.bool_)
    ratio = np.empty(T)
    for _ in range(max_pivots):
        r = y - X @ beta
        in_basis[:] = False
        for j in range(k):
            in_basis[basis[j]] = True
        nzero = 0
        for t in range(T):
            zero[t] = in_basis[t] or abs(r[t]) <= ytol
            nzero += zero[t]
        XBinv = np.linalg.inv(XB)
        A = X @ XBinv  # column j: change of X beta along the j-th edge
        best = 0.0
        jbest = -1
        sbest = 1.0
        for j in range(k):
            lin = 0.0
            zp = 0.0
            zm = 0.0
            scale = 1.0
            for t in range(T):
                a = A[t, j]
                scale += abs(a)
                if zero[t]:
                    # rho(-a) and rho(a)
                    zp += -a * tau if -a >= 0 else -a * (tau - 1.0)
                    zm += a * tau if a >= 0 else a * (tau - 1.0)
                else:
                    lin -= (tau if r[t] > 0 else tau - 1.0) * a
            gtol = 1e-11 * scale
            plus = lin + zp
            minus = -lin + zm
            if plus < -gtol and plus < best:
                best, jbest, sbest = plus, j, 1.0
            if minus < -gtol and minus < best:
                best, jbest, sbest = minus, j, -1.0
        if jbest < 0:
            return beta, nzero == k
        cnt = 0
        for t in range(T):
            ratio[t] = -1.0
            a = sbest * A[t, jbest]
            if not zero[t] and a != 0.0:
                q = r[t] / a
                if q > 0:
                    ratio[t] = q
                    cnt += 1
        if cnt == 0:
            return beta, False
        cand = np.empty(cnt, dtype=np.int64)
        c = 0
        for t in range(T):
            if ratio[t] > 0:
                cand[c] = t
                c += 1
        order = cand[np.argsort(ratio[cand], kind="mergesort")]
        cum = best
        t_in = -1
        for t in order:
            cum += abs(A[t, jbest])
            if cum >= 0.0:
                t_in = t
                break
        if t_in < 0:
            return beta, False
        beta = beta + ratio[t_in] * sbest * XBinv[:, jbest]
        basis[jbest] = t_in
        XB[jbest] = X[t_in]
    return beta, False


def _fit_batch(X, Y, taus, *, max_iter=200, eps_start=1e-2, eps_end=1e-8, decay=0.5,
               tol=1e-5, polish=True, warm_iter=10):
    """Fit every column of Y at its own quantile on the shared design X.

    With ``polish`` a short IRLS warm start (``warm_iter`` iterations) is
    refined by exact vertex descent; columns the descent cannot certify fall
    back to the full IRLS schedule and keep whichever fit has lower loss.
    Without ``polish`` the full IRLS schedule alone is used.
    """
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    taus = np.asarray(taus, dtype=float)
    T, k = X.shape
    if T <= k:
        raise EstimationError("need more observations than regressors")
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficiencyError("design matrix is rank deficient")
    if not polish:
        B, ok = _irls(X, Y, taus, max_iter, eps_start, eps_end, decay, tol)
        if not ok.all():
            raise ConvergenceError("IRLS did not converge within the iteration budget")
        return B
    B0, _ = _irls(X, Y, taus, min(warm_iter, max_iter), eps_start, eps_end, decay, tol)
    out = np.empty_like(B0)
    pending = []
    for c in range(Y.shape[1]):
        y = np.ascontiguousarray(Y[:, c])
        beta, certified = _vertex_descent(X, y, float(taus[c]), np.ascontiguousarray(B0[:, c]),
                                          50 * k + 50)
        out[:, c] = beta
        if not certified:
            pending.append(c)
    if pending:
        cols = np.array(pending)
        Bf, ok = _irls(X, Y[:, cols], taus[cols], max_iter, eps_start, eps_end, decay, tol)
        for i, c in enumerate(cols):
            y, tau = Y[:, c], taus[c]
            if pinball_loss(y - X @ Bf[:, i], tau) < pinball_loss(y - X @ out[:, c], tau):
                out[:, c] = Bf[:, i]
            if not ok[i]:
                raise ConvergenceError("quantile regression did not converge")
    return out


def fit_quantile_regression(X: np.ndarray, y: np.ndarray, tau: float, **options) -> np.ndarray:
    """Minimise sum_t rho_tau(y_t - x_t' beta) over beta.

    Parameters
    ----------
    X : (T, k) design matrix, full column rank, T > k.
    y : (T,) response.
    tau : quantile level in (0, 1).
    **options : ``max_iter`` (200), ``eps_start`` (1e-2), ``eps_end`` (1e-8),
        ``decay`` (0.5), ``tol`` (1e-5), ``warm_iter`` (10) and ``polish``
        (True) tune the solver. The smoothing
        floor is relative to the standard deviation of ``y`` so the fit is
        equivariant to rescaling the response.

    Raises
    ------
    RankDeficiencyError, ConvergenceError
    """
    _check_tau(tau)
    y = np.asarray(y, dtype=float)
    return _fit_batch(X, y[:, None], [tau], **options)[:, 0]


def lag_design(Y: np.ndarray, p: int) -> np.ndarray:
    """Rows [1, Y_{t-1}', ..., Y_{t-p}'] for t = p .. T-1."""
    T = Y.shape[0]
    cols = [np.ones((T - p, 1))]
    for lag in range(1, p + 1):
        cols.append(Y[p - lag : T - lag])
    return np.hstack(cols)


def _psd_covariance(U: np.ndarray) -> np.ndarray:
    U = U - U.mean(axis=0)
    sigma = U.T @ U / U.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    w, V = np.linalg.eigh(sigma)
    if w.min() < -1e-10 * max(1.0, abs(w).max()):
        raise EstimationError("residual covariance is not positive semi-definite")
    if w.min() < 0:
        sigma = (V * np.clip(w, 0, None)) @ V.T
        sigma = 0.5 * (sigma + sigma.T)
    return sigma


@dataclass(frozen=True)
class QvarModel:
    tau: float
    p: int
    mu: np.ndarray
    phi: tuple[np.ndarray, ...]
    residuals: np.ndarray
    sigma: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class MaCoefficients:
    psi: tuple[np.ndarray, ...]

    def __len__(self):
        return len(self.psi)

    def stack(self) -> np.ndarray:
        return np.stack(self.psi)


def _min_length(n: int, p: int, min_length: int | None) -> int:
    return n * p + 20 if min_length is None else min_length


def fit_qvar_many(window: np.ndarray, p: int, taus: Sequence[float],
                  min_length: int | None = None, **options) -> list[QvarModel]:
    """Fit the QVAR at several quantiles on one window, sharing the design."""
    Y = np.asarray(getattr(window, "returns", window), dtype=float)
    T, n = Y.shape
    if p < 1:
        raise ValueError("lag order must be >= 1")
    for tau in taus:
        _check_tau(tau)
    if T < _min_length(n, p, min_length):
        raise EstimationError(f"window too short: {T} < {_min_length(n, p, min_length)}")
    X = lag_design(Y, p)
    target = Y[p:]
    m = len(taus)
    resp = np.tile(target, (1, m))
    tau_col = np.repeat(np.asarray(taus, dtype=float), n)
    B = _fit_batch(X, resp, tau_col, **options)
    models = []
    for q, tau in enumerate(taus):
        Bq = B[:, q * n : (q + 1) * n]  # (1 + n p, n): column i = equation i
        mu = Bq[0].copy()
        phi = tuple(Bq[1 + lag * n : 1 + (lag + 1) * n].T.copy() for lag in range(p))
        U = target - X @ Bq
        models.append(QvarModel(float(tau), p, mu, phi, U, _psd_covariance(U)))
    return models


def fit_qvar(window, p: int, tau: float, min_length: int | None = None, **options) -> QvarModel:
    """Equation-by-equation quantile VAR(p) with intercept.

    ``window`` is a ReturnsPanel slice or a (T, N) array. The residual
    covariance is (1/(T-p)) U'U after demeaning the residuals.
    """
    return fit_qvar_many(window, p, [tau], min_length, **options)[0]


def ma_coefficients(model_or_phi, H: int) -> MaCoefficients:
    """Psi_0 = I, Psi_h = sum_{k=1..min(h,p)} Phi_k Psi_{h-k}, for h < H."""
    if H < 1:
        raise ValueError("horizon must be >= 1")
    phi = model_or_phi.phi if isinstance(model_or_phi, QvarModel) else tuple(model_or_phi)
    n = phi[0].shape[0]
    psi = [np.eye(n)]
    for h in range(1, H):
        acc = np.zeros((n, n))
        for k in range(1, min(h, len(phi)) + 1):
            acc += phi[k - 1] @ psi[h - k]
        psi.append(acc)
    return MaCoefficients(tuple(psi))
