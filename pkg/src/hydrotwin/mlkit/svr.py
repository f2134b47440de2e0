"""epsilon-SVR with an RBF kernel, trained by SMO.

The dual is solved in the usual 2n-variable form: for samples k = 1..n
there are multipliers a_k (upper tube side) and a*_k (lower side), the
model coefficient is ``coef_k = a_k - a*_k`` and

    minimise  1/2 coef' K coef - y' coef + eps * sum(a + a*)
    s.t.      sum(coef) = 0,  0 <= a, a* <= C.

Pairs are picked with the second-order working-set rule (maximal
violating pair for the first index, largest guaranteed decrease for the
second) and updated analytically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

TAU = 1e-12
DEFAULT_MAX_ITER = 1_000_000
FULL_KERNEL_LIMIT = 4000


class SvrNoConvergence(UserWarning):
    """SMO stopped on its iteration budget before the KKT gap closed."""


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


@dataclass
class SvrModel:
    support_vectors: np.ndarray  # standardized rows
    dual_coef: np.ndarray
    bias: float
    gamma: float
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    C: float
    epsilon: float
    converged: bool = True
    n_iter: int = 0
    objective: float = 0.0
    kkt_gap: float = 0.0

    kind = "svr"

    @property
    def n_features(self) -> int:
        return len(self.x_mean)

    def decision(self, Z) -> np.ndarray:
        """Kernel expansion in standardized units."""
        Z = np.atleast_2d(Z)
        if len(self.dual_coef) == 0:
            return np.full(len(Z), self.bias)
        return rbf_kernel(Z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = (X - self.x_mean) / self.x_std
        return self.decision(Z) * self.y_std + self.y_mean

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=float)[None, :])[0])


def _scale(values: np.ndarray) -> np.ndarray:
    std = values.std(axis=0)
    return np.where(std > 0.0, std, 1.0)


@njit(cache=True)
def _kernel_row(Z, gamma, k, out):
    n, d = Z.shape
    for s in range(n):
        acc = 0.0
        for c in range(d):
            diff = Z[k, c] - Z[s, c]
            acc += diff * diff
        out[s] = np.exp(-gamma * acc)


@njit(cache=True)
def _smo_loop(Z, gamma, Kfull, t, C, epsilon, tol, max_iter):
    n = len(t)
    full = Kfull.shape[0] == n
    a = np.zeros(n)  # multipliers with label +1
    b = np.zeros(n)  # multipliers with label -1
    # label * gradient of the 2n-variable dual, per half
    ga = epsilon - t
    gb = -(epsilon + t)
    ki = np.empty(n)
    kj = np.empty(n)
    converged = False
    gap = np.inf
    it = 0
    while it < max_iter:
        # i: maximal violator in I_up = {a < C} u {b > 0}
        gmax = -np.inf
        i = -1
        i_a = True
        for k in range(n):
            if a[k] < C and -ga[k] > gmax:
                gmax, i, i_a = -ga[k], k, True
            if b[k] > 0 and -gb[k] > gmax:
                gmax, i, i_a = -gb[k], k, False
        if i < 0:
            converged = True
            gap = 0.0
            break
        if full:
            ki[:] = Kfull[i]
        else:
            _kernel_row(Z, gamma, i, ki)
        # j: second-order choice in I_low = {a > 0} u {b < C}
        gmax2 = -np.inf
        best = np.inf
        j = -1
        j_a = True
        for k in range(n):
            quad = 2.0 - 2.0 * ki[k]
            if quad <= 0.0:
                quad = TAU
            if a[k] > 0:
                if ga[k] > gmax2:
                    gmax2 = ga[k]
                diff = gmax + ga[k]
                if diff > 0 and -(diff * diff) / quad < best:
                    best, j, j_a = -(diff * diff) / quad, k, True
            if b[k] < C:
                if gb[k] > gmax2:
                    gmax2 = gb[k]
                diff = gmax + gb[k]
                if diff > 0 and -(diff * diff) / quad < best:
                    best, j, j_a = -(diff * diff) / quad, k, False
        gap = gmax + gmax2
        if gap < tol or j < 0:
            converged = True
            break

        zi = 1.0 if i_a else -1.0
        zj = 1.0 if j_a else -1.0
        Gi = ga[i] if i_a else -gb[i]
        Gj = ga[j] if j_a else -gb[j]
        old_i = a[i] if i_a else b[i]
        old_j = a[j] if j_a else b[j]
        q = 2.0 - 2.0 * ki[j]
        if q <= 0.0:
            q = TAU
        ai = old_i
        aj = old_j
        if zi != zj:
            delta = (-Gi - Gj) / q
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (Gi - Gj) / q
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total

        wi = zi * (ai - old_i)
        wj = zj * (aj - old_j)
        if i_a:
            a[i] = ai
        else:
            b[i] = ai
        if j_a:
            a[j] = aj
        else:
            b[j] = aj
        if full:
            kj[:] = Kfull[j]
        else:
            _kernel_row(Z, gamma, j, kj)
        for k in range(n):
            step = wi * ki[k] + wj * kj[k]
            ga[k] += step
            gb[k] += step
        it += 1
    return a, b, ga, gb, it, converged, gap


def smo_solve(Z, t, C, epsilon, gamma, tol=1e-3, max_iter=DEFAULT_MAX_ITER):
    """Solve the epsilon-SVR dual for standardized rows ``Z`` and targets ``t``.

    Returns ``(coef, bias, n_iter, converged, objective, gap)``; ``gap`` is
    the final maximal KKT violation m(a) - M(a).
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    Kfull = rbf_kernel(Z, Z, gamma) if len(Z) <= FULL_KERNEL_LIMIT else np.empty((0, 0))
    a, b, ga, gb, it, converged, gap = _smo_loop(
        Z, float(gamma), Kfull, t, float(C), float(epsilon), float(tol), int(max_iter))

    # bias from free multipliers, else midpoint of the feasible interval
    free_a = (a > 0) & (a < C)
    free_b = (b > 0) & (b < C)
    if free_a.any() or free_b.any():
        rho = np.concatenate([ga[free_a], gb[free_b]]).mean()
    else:
        # upper bounds on rho: a at 0, b at C; lower bounds: a at C, b at 0
        ub_vals = np.concatenate([ga[a <= 0], gb[b >= C]])
        lb_vals = np.concatenate([ga[a >= C], gb[b <= 0]])
        ub = ub_vals.min() if ub_vals.size else np.inf
        lb = lb_vals.max() if lb_vals.size else -np.inf
        rho = 0.5 * (ub + lb)
    coef = a - b
    k_coef = ga - (epsilon - t)
    objective = 0.5 * float(coef @ k_coef) - float(t @ coef) + epsilon * float((a + b).sum())
    return coef, -float(rho), int(it), bool(converged), objective, float(gap)


def dual_objective(Kmat, t, coef, epsilon) -> float:
    """Dual objective of a coefficient vector (same sign convention as SMO)."""
    return 0.5 * coef @ Kmat @ coef - t @ coef + epsilon * np.abs(coef).sum()


def svr_fit(X, y, C: float = 100.0, epsilon: float = 0.01, gamma: float | None = None,
            tol: float = 1e-3, max_iter: int = DEFAULT_MAX_ITER) -> SvrModel:
    """Fit on standardized features and targets.

    ``epsilon`` is in standardized target units; ``gamma`` defaults to
    1 / n_features.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per target")
    if len(X) < 2:
        raise ValueError("need at least two rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("features and targets must be finite")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    x_mean, x_std = X.mean(axis=0), _scale(X)
    y_mean, y_std = float(y.mean()), float(_scale(y))
    Z = (X - x_mean) / x_std
    t = (y - y_mean) / y_std

    coef, bias, n_iter, converged, objective, gap = smo_solve(
        Z, t, C, epsilon, gamma, tol=tol, max_iter=max_iter)
    if not converged:
        warnings.warn(f"SMO stopped after {n_iter} iterations with KKT gap {gap:.3g}",
                      SvrNoConvergence, stacklevel=2)
    sv = coef != 0.0
    return SvrModel(
        support_vectors=Z[sv].copy(),
        dual_coef=coef[sv].copy(),
        bias=float(bias),
        gamma=float(gamma),
        x_mean=x_mean,
        x_std=x_std,
        y_mean=y_mean,
        y_std=y_std,
        C=float(C),
        epsilon=float(epsilon),
        converged=converged,
        n_iter=n_iter,
        objective=objective,
        kkt_gap=gap,
    )


def svr_predict(model: SvrModel, x) -> float:
    return model.predict_one(x)
