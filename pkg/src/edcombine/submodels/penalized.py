"""Penalized linear submodels: ridge, LASSO, adaptive LASSO, elastic net,
adaptive elastic net, and sparse group LASSO.

The squared loss carries a 1/(2n) factor so lambda grids are
sample-size invariant; grids are 100 log-spaced values from the
all-zero point lambda_max down to 1e-4 * lambda_max. Shrinkage
parameters are chosen by 5-iteration chronological cross-validation
(initial segment fits, next block validates); ties prefer the larger
lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EdcombineError
from . import cd_kernels as ck

W_MAX = 1e6            # adaptive-weight cap for zero base coefficients
ALPHA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
N_LAMBDA = 100
LAMBDA_RATIO = 1e-4
CD_TOL = 1e-10
CD_MAX_SWEEPS = 2000
SGL_INNER_TOL = 1e-10
SGL_INNER_MAX = 400

PENALTY_KINDS = ("ridge", "lasso", "alasso", "sgl", "enet", "aenet")


@dataclass
class PenaltySpec:
    kind: str
    lambda_grid: np.ndarray | None = None
    alpha: float | None = None
    adaptive_weights: np.ndarray | None = None
    groups: np.ndarray | None = None   # group pointer array, len n_groups+1

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise EdcombineError(f"unknown penalty kind {self.kind!r}")
        if self.alpha is not None and not (0.0 <= self.alpha <= 1.0):
            raise EdcombineError("alpha must lie in [0, 1]")
        if self.adaptive_weights is not None and np.any(self.adaptive_weights <= 0):
            raise EdcombineError("adaptive weights must be positive")


@dataclass(frozen=True)
class GramData:
    """Centered sufficient statistics of a fit window."""

    G: np.ndarray        # X_c'X_c / n
    c: np.ndarray        # X_c'y_c / n
    quad: float          # y_c'y_c / (2n)
    x_mean: np.ndarray
    y_mean: float
    n: int


def gram_from_rows(X: np.ndarray, y: np.ndarray, fit_end: int) -> GramData:
    Xf = X[:fit_end]
    yf = y[:fit_end]
    n = fit_end
    xm = Xf.mean(axis=0)
    ym = yf.mean()
    Xc = Xf - xm
    yc = yf - ym
    return GramData(
        G=(Xc.T @ Xc) / n,
        c=(Xc.T @ yc) / n,
        quad=float(yc @ yc) / (2.0 * n),
        x_mean=xm,
        y_mean=float(ym),
        n=n,
    )


@dataclass
class PenalizedFit:
    kind: str
    beta: np.ndarray
    intercept: float
    lam: float
    alpha: float
    sweeps: int
    converged: bool
    objective_trace: np.ndarray
    flags: dict = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.beta


def _alpha_for(kind: str, alpha: float | None) -> float:
    if kind == "ridge":
        return 0.0
    if kind in ("lasso", "alasso"):
        return 1.0
    if alpha is None:
        raise EdcombineError(f"{kind} requires alpha")
    return alpha


def default_groups(n_cols: int, group_size: int = 8) -> np.ndarray:
    """Contiguous lag blocks: one group per variable (own series included)."""
    if n_cols % group_size != 0:
        raise EdcombineError(f"{n_cols} columns do not split into {group_size}-lag groups")
    return np.arange(0, n_cols + 1, group_size, dtype=np.int64)


def lambda_max(gram: GramData, kind: str, alpha: float,
               weights: np.ndarray | None, groups: np.ndarray | None) -> float:
    c = gram.c
    if kind == "ridge":
        return 100.0 * float(np.max(np.abs(c)) + 1e-300)
    if kind == "sgl":
        gptr = groups
        lo, hi = 0.0, float(np.max(np.abs(c)) / max(alpha, 1e-3) + 1e-300)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            dead = True
            for g in range(len(gptr) - 1):
                cg = c[gptr[g]: gptr[g + 1]]
                sq = np.sqrt(float(len(cg)))
                soft = np.sign(cg) * np.maximum(np.abs(cg) - mid * alpha, 0.0)
                if np.linalg.norm(soft) > mid * (1.0 - alpha) * sq:
                    dead = False
                    break
            if dead:
                hi = mid
            else:
                lo = mid
        return hi
    w = weights if weights is not None else np.ones_like(c)
    return float(np.max(np.abs(c) / w) / max(alpha, 1e-3) + 1e-300)


def lambda_grid(gram: GramData, kind: str, alpha: float,
                weights: np.ndarray | None = None, groups: np.ndarray | None = None,
                n_lambda: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> np.ndarray:
    lmax = lambda_max(gram, kind, alpha, weights, groups)
    if lmax <= 0:
        lmax = 1e-12
    return np.geomspace(lmax, lmax * ratio, n_lambda)


def _group_lipschitz(G: np.ndarray, gptr: np.ndarray) -> np.ndarray:
    out = np.empty(len(gptr) - 1)
    for g in range(len(gptr) - 1):
        block = G[gptr[g]: gptr[g + 1], gptr[g]: gptr[g + 1]]
        out[g] = max(float(np.linalg.eigvalsh(block)[-1]), 1e-12)
    return out


def solve_at(gram: GramData, kind: str, lam: float, alpha: float | None = None,
             weights: np.ndarray | None = None, groups: np.ndarray | None = None,
             beta0: np.ndarray | None = None,
             tol: float = CD_TOL, max_sweeps: int = CD_MAX_SWEEPS) -> PenalizedFit:
    """Coordinate-descent solve at one (lambda, alpha) on precomputed Grams."""
    p = gram.c.shape[0]
    a = _alpha_for(kind, alpha)
    beta = np.zeros(p) if beta0 is None else beta0.copy()
    s = gram.G @ beta if beta0 is not None else np.zeros(p)
    trace = np.full(max_sweeps, np.nan)
    if kind == "sgl":
        gptr = groups if groups is not None else default_groups(p)
        glip = _group_lipschitz(gram.G, gptr)
        sqrtd = np.sqrt(np.diff(gptr).astype(float))
        sweeps, conv = ck.sgl_cd(gram.G, gram.c, gram.quad, lam, a, gptr, glip, sqrtd,
                                 beta, s, tol, max_sweeps, SGL_INNER_TOL, SGL_INNER_MAX, trace)
    else:
        w = weights if weights is not None else np.ones(p)
        sweeps, conv = ck.enet_cd(gram.G, gram.c, gram.quad, lam, a, w,
                                  beta, s, tol, max_sweeps, trace)
    intercept = gram.y_mean - float(gram.x_mean @ beta)
    flags = {} if conv else {"no_convergence": True}
    return PenalizedFit(
        kind=kind, beta=beta, intercept=intercept, lam=lam, alpha=a,
        sweeps=sweeps, converged=bool(conv), objective_trace=trace[:sweeps], flags=flags,
    )


def _path(gram: GramData, kind: str, grid: np.ndarray, alpha: float,
          weights: np.ndarray | None, groups: np.ndarray | None,
          tol: float = CD_TOL, max_sweeps: int = CD_MAX_SWEEPS) -> np.ndarray:
    p = gram.c.shape[0]
    B = np.zeros((len(grid), p))
    if kind == "sgl":
        gptr = groups if groups is not None else default_groups(p)
        glip = _group_lipschitz(gram.G, gptr)
        sqrtd = np.sqrt(np.diff(gptr).astype(float))
        ck.sgl_path(gram.G, gram.c, gram.quad, grid, alpha, gptr, glip, sqrtd,
                    tol, max_sweeps, SGL_INNER_TOL, SGL_INNER_MAX, B)
    else:
        w = weights if weights is not None else np.ones(p)
        ck.enet_path(gram.G, gram.c, gram.quad, grid, alpha, w, tol, max_sweeps, B)
    return B


def tscv_folds(fit_end: int, n_folds: int = 5) -> list[tuple[int, int, int]] | None:
    """Chronological folds: (train_end, val_start, val_end) per iteration.

    Validation blocks are the last n_folds equal chunks; each iteration
    fits on everything before its block. Returns None when the window is
    too short for the scheme.
    """
    test = fit_end // (n_folds + 1)
    if test < 1 or fit_end - n_folds * test < max(8, test):
        return None
    out = []
    for k in range(n_folds):
        vs = fit_end - (n_folds - k) * test
        out.append((vs, vs, vs + test))
    return out


def select_lambda_tscv(
    X: np.ndarray, y: np.ndarray, fit_end: int, kind: str,
    alphas: tuple[float, ...] | None = None,
    weights: np.ndarray | None = None, groups: np.ndarray | None = None,
    n_folds: int = 5, n_lambda: int = N_LAMBDA,
    cv_tol: float = 1e-8, cv_max_sweeps: int = 400,
) -> tuple[float, float, dict]:
    """Pick (lambda, alpha) minimizing mean validation MSE over the folds.

    Falls back, flagged, to the mid-grid lambda when the window cannot
    support five chronological folds.
    """
    if kind in ("ridge", "lasso", "alasso"):
        alpha_list: tuple[float, ...] = (_alpha_for(kind, None),)
    else:
        alpha_list = alphas if alphas is not None else ALPHA_GRID

    full = gram_from_rows(X, y, fit_end)
    folds = tscv_folds(fit_end, n_folds)
    if folds is None:
        a0 = alpha_list[len(alpha_list) // 2]
        grid = lambda_grid(full, kind, a0, weights, groups, n_lambda)
        return float(grid[len(grid) // 2]), a0, {"cv_fallback": True}

    best = None  # (mse, alpha, lam)
    for a in alpha_list:
        grid = lambda_grid(full, kind, a, weights, groups, n_lambda)
        mse = np.zeros(len(grid))
        for train_end, vs, ve in folds:
            g = gram_from_rows(X, y, train_end)
            B = _path(g, kind, grid, a, weights, groups, cv_tol, cv_max_sweeps)
            Xv = X[vs:ve] - g.x_mean
            pred = g.y_mean + Xv @ B.T           # (val, n_lambda)
            err = pred - y[vs:ve, None]
            mse += (err * err).mean(axis=0)
        mse /= len(folds)
        # grid is descending in lambda: first index wins ties -> larger lambda
        li = int(np.argmin(mse))
        cand = (float(mse[li]), a, float(grid[li]))
        if best is None or cand[0] < best[0]:
            best = cand
    return best[2], best[1], {}


def fit_penalized(X: np.ndarray, y: np.ndarray, fit_end: int, spec: PenaltySpec,
                  alphas: tuple[float, ...] | None = None) -> PenalizedFit:
    """CV-select shrinkage if needed, then solve on the full fit window.

    Expects a standardized design (fit-row z-scores); rows are centered
    internally so the intercept stays unpenalized.
    """
    gram = gram_from_rows(X, y, fit_end)
    flags: dict = {}
    if spec.lambda_grid is not None and len(spec.lambda_grid) == 1:
        lam = float(spec.lambda_grid[0])
        alpha = _alpha_for(spec.kind, spec.alpha)
    else:
        if spec.alpha is not None:
            alpha_list = (spec.alpha,)
        else:
            alpha_list = alphas
        lam, alpha, flags = select_lambda_tscv(
            X, y, fit_end, spec.kind, alphas=alpha_list,
            weights=spec.adaptive_weights, groups=spec.groups,
        )
    fit = solve_at(gram, spec.kind, lam, alpha,
                   weights=spec.adaptive_weights, groups=spec.groups)
    fit.flags.update(flags)
    return fit


def adaptive_weights_from_ols(beta_ols: np.ndarray, w_max: float = W_MAX) -> np.ndarray:
    """Per-coefficient penalties 1/|beta|, capped so zeros stay finite."""
    beta = np.asarray(beta_ols, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise EdcombineError("adaptive weights need finite base coefficients")
    return np.minimum(1.0 / np.maximum(np.abs(beta), 1.0 / w_max), w_max)


def fit_aenet(X: np.ndarray, y: np.ndarray, fit_end: int,
              alphas: tuple[float, ...] = ALPHA_GRID) -> PenalizedFit:
    """Adaptive elastic net: ENET solution supplies the adaptive weights,
    then the weighted-L1 + ridge objective is refit at the same alpha."""
    enet = fit_penalized(X, y, fit_end, PenaltySpec(kind="enet"), alphas=alphas)
    w = adaptive_weights_from_ols(enet.beta)
    spec = PenaltySpec(kind="aenet", alpha=enet.alpha, adaptive_weights=w)
    fit = fit_penalized(X, y, fit_end, spec)
    fit.flags.setdefault("enet_alpha", enet.alpha)
    return fit
