"""Numba coordinate-descent kernels on Gram matrices (covariance updates).

All solvers minimize

    (1/(2n)) ||y_c - X_c beta||^2 + lam * penalty(beta)

expressed through G = X_c'X_c/n and c = X_c'y_c/n, with X_c, y_c centered
on the fit rows (the intercept is recovered outside). `quad` carries
y_c'y_c/(2n) so the tracked objective is the true value.

The elastic-net family penalty is
    alpha * sum_j w_j |beta_j| + (1 - alpha)/2 * ||beta||^2,
which covers ridge (alpha=0), lasso (alpha=1, w=1), adaptive lasso
(alpha=1, w adaptive), elastic net and adaptive elastic net.

The sparse-group penalty is
    alpha * ||beta||_1 + (1 - alpha) * sum_g sqrt(d_g) ||beta_g||_2,
solved by block descent with an inner proximal-gradient loop per group.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _objective_enet(G, c, quad, beta, s, lam, alpha, w):
    p = beta.shape[0]
    val = quad
    l1 = 0.0
    l2 = 0.0
    for j in range(p):
        val += beta[j] * (0.5 * s[j] - c[j])
        l1 += w[j] * abs(beta[j])
        l2 += beta[j] * beta[j]
    return val + lam * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)


@njit(cache=True)
def enet_cd(G, c, quad, lam, alpha, w, beta, s, tol, beta_tol, max_sweeps, obj_trace):
    """Cyclic coordinate descent; beta and s = G @ beta update in place.

    Stops once the relative objective change drops below tol *and* the
    largest coordinate move in the sweep is below beta_tol (the latter
    pins coefficient accuracy where the objective is already flat).
    Returns (sweeps_used, converged); obj_trace[k] holds the objective
    after sweep k.
    """
    p = beta.shape[0]
    denom_ridge = lam * (1.0 - alpha)
    prev = _objective_enet(G, c, quad, beta, s, lam, alpha, w)
    sweeps = 0
    converged = False
    for it in range(max_sweeps):
        max_move = 0.0
        for j in range(p):
            gjj = G[j, j]
            bj = beta[j]
            rho = c[j] - s[j] + gjj * bj
            if gjj <= 0.0:
                nb = 0.0
            else:
                nb = _soft(rho, lam * alpha * w[j]) / (gjj + denom_ridge)
            d = nb - bj
            if d != 0.0:
                if abs(d) > max_move:
                    max_move = abs(d)
                beta[j] = nb
                for k in range(p):
                    s[k] += G[k, j] * d
        cur = _objective_enet(G, c, quad, beta, s, lam, alpha, w)
        obj_trace[it] = cur
        sweeps = it + 1
        if abs(prev - cur) <= tol * (abs(prev) + 1e-12) and max_move <= beta_tol:
            converged = True
            break
        prev = cur
    return sweeps, converged


@njit(cache=True)
def enet_path(G, c, quad, lam_grid, alpha, w, tol, beta_tol, max_sweeps, B):
    """Warm-started descent down the lambda grid; rows of B are solutions."""
    p = c.shape[0]
    beta = np.zeros(p)
    s = np.zeros(p)
    trace = np.empty(max_sweeps)
    ok = np.ones(lam_grid.shape[0], dtype=np.uint8)
    for li in range(lam_grid.shape[0]):
        _, conv = enet_cd(G, c, quad, lam_grid[li], alpha, w, beta, s, tol, beta_tol, max_sweeps, trace)
        if not conv:
            ok[li] = 0
        for j in range(p):
            B[li, j] = beta[j]
    return ok


@njit(cache=True)
def _objective_sgl(G, c, quad, beta, s, lam, alpha, gptr, sqrtd):
    p = beta.shape[0]
    val = quad
    l1 = 0.0
    for j in range(p):
        val += beta[j] * (0.5 * s[j] - c[j])
        l1 += abs(beta[j])
    gl = 0.0
    for g in range(gptr.shape[0] - 1):
        acc = 0.0
        for j in range(gptr[g], gptr[g + 1]):
            acc += beta[j] * beta[j]
        gl += sqrtd[g] * np.sqrt(acc)
    return val + lam * (alpha * l1 + (1.0 - alpha) * gl)


@njit(cache=True)
def sgl_cd(G, c, quad, lam, alpha, gptr, glip, sqrtd, beta, s,
           tol, beta_tol, max_sweeps, inner_tol, inner_max, obj_trace):
    """Block coordinate descent for the sparse-group penalty."""
    p = beta.shape[0]
    n_groups = gptr.shape[0] - 1
    prev = _objective_sgl(G, c, quad, beta, s, lam, alpha, gptr, sqrtd)
    sweeps = 0
    converged = False
    u = np.zeros(p)
    grad = np.zeros(p)
    for it in range(max_sweeps):
        max_move = 0.0
        for g in range(n_groups):
            a, b = gptr[g], gptr[g + 1]
            d = b - a
            lam2 = lam * (1.0 - alpha) * sqrtd[g]
            # partial residual correlation for the group
            kill = True
            for jj in range(a, b):
                rho = c[jj] - s[jj]
                for kk in range(a, b):
                    rho += G[jj, kk] * beta[kk]
                grad[jj] = rho
            accum = 0.0
            for jj in range(a, b):
                v = _soft(grad[jj], lam * alpha)
                accum += v * v
            if np.sqrt(accum) <= lam2:
                # whole group killed
                for jj in range(a, b):
                    dlt = -beta[jj]
                    if dlt != 0.0:
                        beta[jj] = 0.0
                        for k in range(p):
                            s[k] += G[k, jj] * dlt
                continue
            L = glip[g]
            if L <= 0.0:
                continue
            for jj in range(a, b):
                u[jj] = beta[jj]
            for _ in range(inner_max):
                # gradient of the smooth part at u (within the group)
                for jj in range(a, b):
                    gr = s[jj] - c[jj]
                    for kk in range(a, b):
                        gr += G[jj, kk] * (u[kk] - beta[kk])
                    grad[jj] = u[jj] - gr / L
                nrm = 0.0
                for jj in range(a, b):
                    grad[jj] = _soft(grad[jj], lam * alpha / L)
                    nrm += grad[jj] * grad[jj]
                nrm = np.sqrt(nrm)
                shrink = 0.0
                if nrm > lam2 / L:
                    shrink = 1.0 - (lam2 / L) / nrm
                diff = 0.0
                size = 0.0
                for jj in range(a, b):
                    nv = shrink * grad[jj]
                    diff += (nv - u[jj]) * (nv - u[jj])
                    size += nv * nv
                    u[jj] = nv
                if np.sqrt(diff) <= inner_tol * (1.0 + np.sqrt(size)):
                    break
            for jj in range(a, b):
                dlt = u[jj] - beta[jj]
                if dlt != 0.0:
                    beta[jj] = u[jj]
                    for k in range(p):
                        s[k] += G[k, jj] * dlt
        cur = _objective_sgl(G, c, quad, beta, s, lam, alpha, gptr, sqrtd)
        obj_trace[it] = cur
        sweeps = it + 1
        if abs(prev - cur) <= tol * (abs(prev) + 1e-12):
            converged = True
            break
        prev = cur
    return sweeps, converged


@njit(cache=True)
def sgl_path(G, c, quad, lam_grid, alpha, gptr, glip, sqrtd, tol, beta_tol, max_sweeps,
             inner_tol, inner_max, B):
    p = c.shape[0]
    beta = np.zeros(p)
    s = np.zeros(p)
    trace = np.empty(max_sweeps)
    ok = np.ones(lam_grid.shape[0], dtype=np.uint8)
    for li in range(lam_grid.shape[0]):
        _, conv = sgl_cd(G, c, quad, lam_grid[li], alpha, gptr, glip, sqrtd,
                         beta, s, tol, beta_tol, max_sweeps, inner_tol, inner_max, trace)
        if not conv:
            ok[li] = 0
        for j in range(p):
            B[li, j] = beta[j]
    return ok
