"""Block-coordinate fitting of archetypes, plain and Huber-robust.

The fit alternates exact per-column simplex QPs: each data point gets a
simplex-constrained code against the current archetypes, then each archetype
is re-expressed as a simplex combination of the data via a rank-one
reformulation of its subproblem. The robust variant interleaves closed-form
per-point weight updates, turning the Huber objective into a sequence of
weighted least-squares sweeps.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import simplex_qp
from .errors import DataError, DeadArchetypeError, ParameterError
from .numcore import (as_dense, as_vector, huber_weight, weighted_objective)


@dataclass
class FitConfig:
    p: int
    n_iter: int = 100
    seed: int = 0
    tol: float = 1e-9
    robust: bool = False
    eps: float = 0.01
    init: object = "random-columns"  # or an (n, p) matrix of simplex columns
    early_stop: bool = False
    early_stop_rtol: float = 1e-8
    threads: int = 1

    def validate(self, n):
        if not 1 <= self.p <= n:
            raise ParameterError(f"p must be in [1, n={n}], got {self.p}")
        if self.n_iter < 1:
            raise ParameterError("n_iter must be at least 1")
        if self.eps == "auto":
            if not self.robust:
                raise ParameterError('eps="auto" requires robust=True')
        elif not isinstance(self.eps, (int, float)) or self.eps <= 0:
            raise ParameterError('eps must be positive (or "auto")')
        if self.tol <= 0:
            raise ParameterError("tol must be positive")


@dataclass
class ArchetypeModel:
    A: np.ndarray  # p x n simplex columns (codes)
    B: np.ndarray  # n x p simplex columns (archetype compositions)
    Z: np.ndarray  # m x p archetypes, Z = X B
    history: list
    config: FitConfig
    converged: bool = True
    degenerate: bool = False
    weights: np.ndarray | None = None  # robust fits only
    iter_seconds: list = field(default_factory=list)


def update_alpha_column(Z, x, tol=1e-9):
    """Code one data point against the archetypes: min over the simplex of
    ||x - Z alpha||^2."""
    inst = simplex_qp.QpInstance(Z=Z, x=x)
    sol = simplex_qp.solve(inst, simplex_qp.SolverOptions(tol=tol))
    return sol.alpha


class _SharedGram:
    """Cache of X^T X columns shared by every archetype subproblem of a fit.

    The data matrix never changes across sweeps, so columns of its Gram can
    be computed once and reused; supports revisited in later sweeps then cost
    O(n) instead of O(mn).  Total cache size is bounded, evicting the oldest
    entries first.
    """

    def __init__(self, X, max_bytes=2e8):
        self.X = X
        self.diag = np.einsum("ij,ij->j", X, X)
        self._cols = {}
        self._max_cols = max(16, int(max_bytes // (8 * X.shape[1])))

    def col(self, j):
        c = self._cols.get(j)
        if c is None:
            c = self.X.T @ self.X[:, j]
            if len(self._cols) >= self._max_cols:
                del self._cols[next(iter(self._cols))]
            self._cols[j] = c
        return c


def _beta_target(R, alpha_row, z_j, inv_w=None):
    """Right-hand side of the single-vector reformulation of the archetype
    subproblem; inv_w carries 1/w_i for the weighted (robust) variant."""
    if inv_w is None:
        s = alpha_row
        den = float(alpha_row @ alpha_row)
    else:
        s = alpha_row * inv_w
        den = float(alpha_row @ s)
    if den <= 0.0:
        raise DeadArchetypeError("archetype has zero usage")
    return R @ s / den + z_j


def update_beta_column(R, alpha_row, z_j, X, tol=1e-9):
    """Re-express one archetype as a simplex combination of the data columns."""
    R = as_dense(R, "R")
    X = as_dense(X, "X")
    y = _beta_target(R, as_vector(alpha_row), as_vector(z_j))
    inst = simplex_qp.QpInstance(Z=X, x=y)
    return simplex_qp.solve(inst, simplex_qp.SolverOptions(tol=tol)).alpha


def update_beta_column_weighted(R, alpha_row, z_j, X, weights, tol=1e-9):
    """Weighted archetype update; residuals of point i are scaled by 1/w_i."""
    R = as_dense(R, "R")
    X = as_dense(X, "X")
    w = as_vector(weights, "weights")
    if np.any(w <= 0):
        raise ParameterError("weights must be positive")
    y = _beta_target(R, as_vector(alpha_row), as_vector(z_j), inv_w=1.0 / w)
    inst = simplex_qp.QpInstance(Z=X, x=y)
    return simplex_qp.solve(inst, simplex_qp.SolverOptions(tol=tol)).alpha


def _alpha_sweep(Q, ZtX, xsq, A, objs, tol, threads):
    """Solve the per-column codes in place; columns are independent.

    Keeps the previous code for a column when it already scores at least as
    well under the current archetypes, which makes the outer objective
    exactly non-increasing regardless of solver tolerance.
    """
    n = ZtX.shape[1]
    opts = simplex_qp.SolverOptions(tol=tol)

    def run(lo, hi):
        old = A[:, lo:hi]
        new_A, new_objs = simplex_qp.solve_gram_batch(
            Q, ZtX[:, lo:hi], xsq[lo:hi], opts, warm=old)
        old_ok = np.abs(old.sum(axis=0) - 1.0) < 1e-9
        if np.any(old_ok):
            old_objs = (xsq[lo:hi] - 2.0 * np.einsum("pn,pn->n", old,
                                                     ZtX[:, lo:hi])
                        + np.einsum("pn,pn->n", old, Q @ old))
            np.maximum(old_objs, 0.0, out=old_objs)
            keep = old_ok & (old_objs < new_objs)
            new_A[:, keep] = old[:, keep]
            new_objs[keep] = old_objs[keep]
        A[:, lo:hi] = new_A
        objs[lo:hi] = new_objs

    if threads <= 1 or n < 2 * threads:
        run(0, n)
        return
    bounds = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(run, bounds[k], bounds[k + 1]) for k in range(threads)]
        for f in futures:
            f.result()


def _init_factors(X, config, rng):
    m, n = X.shape
    p = config.p
    if isinstance(config.init, str):
        if config.init != "random-columns":
            raise ParameterError(f"unknown init {config.init!r}")
        # sample without replacement: avoids duplicate archetypes and makes
        # the p = n case an exact reconstruction
        idx = rng.choice(n, size=p, replace=False)
        B = np.zeros((n, p), order="F")
        B[idx, np.arange(p)] = 1.0
    else:
        B = as_dense(config.init, "init B")
        if B.shape != (n, p):
            raise ParameterError(f"init B must be {n} x {p}")
    Z = np.asfortranarray(X @ B)
    return B, Z


def _fit_engine(X, config):
    X = as_dense(X, "X")
    m, n = X.shape
    config.validate(n)
    rng = np.random.default_rng(config.seed)
    p = config.p
    robust = config.robust
    eps = config.eps

    degenerate = bool(np.all(X == X[:, :1]))
    B, Z = _init_factors(X, config, rng)
    A = np.zeros((p, n), order="F")
    w = np.ones(n)
    xsq = np.einsum("ij,ij->j", X, X)

    history = []
    iter_seconds = []
    beta_opts = simplex_qp.SolverOptions(tol=config.tol)
    shared = _SharedGram(X)
    Xt = np.ascontiguousarray(X.T)

    Q = Z.T @ Z
    ZtX = Z.T @ X
    for t in range(config.n_iter):
        t0 = time.process_time()

        # code sweep (and weight updates in the robust variant)
        objs = np.empty(n)
        _alpha_sweep(Q, ZtX, xsq, A, objs, config.tol, config.threads)
        if robust:
            res_norms = np.sqrt(np.maximum(objs, 0.0))
            if eps == "auto":
                # calibrate the Huber threshold from the initial residuals
                eps = max(float(np.percentile(res_norms, 10.0)), 1e-12)
            w = np.maximum(res_norms, eps)

        # archetype sweep
        inv_w = (1.0 / w) if robust else None
        for j in range(p):
            arow = A[j, :]
            s = arow if inv_w is None else arow * inv_w
            den = float(arow @ s)
            if den <= 0.0:
                # dead archetype: recycle capacity toward the worst-fit point
                k = int(np.argmax(objs))
                B[:, j] = 0.0
                B[k, j] = 1.0
                Z[:, j] = X[:, k]
                continue
            # R s against the current factors without materializing R = X - ZA
            rs = X @ s - Z @ (A @ s)
            y = rs / den + Z[:, j]
            inst = simplex_qp.QpInstance(gram_cols=shared.col, diag=shared.diag,
                                         ztx=Xt @ y, x_sqnorm=float(y @ y))
            sol = simplex_qp.solve(inst, beta_opts, warm=B[:, j])
            # keep the previous composition when it is already at least as
            # good; compare true residuals, not the solver's quadratic form
            sup = np.flatnonzero(sol.alpha)
            z_new = X[:, sup] @ sol.alpha[sup]
            r_old = y - Z[:, j]
            r_new = y - z_new
            if float(r_old @ r_old) <= float(r_new @ r_new):
                continue
            B[:, j] = sol.alpha
            Z[:, j] = z_new

        # end-of-iteration objective from exact per-column quadratic forms;
        # the refreshed Gram products carry over to the next code sweep
        Q = Z.T @ Z
        ZtX = Z.T @ X
        res_sq = (xsq - 2.0 * np.einsum("pn,pn->n", A, ZtX)
                  + np.einsum("pn,pn->n", A, Q @ A))
        np.maximum(res_sq, 0.0, out=res_sq)
        obj = weighted_objective(res_sq, w) if robust else float(res_sq.sum())
        history.append(obj)
        iter_seconds.append(time.process_time() - t0)

        if config.early_stop and t > 0:
            prev = history[-2]
            if prev - obj < config.early_stop_rtol * (1.0 + abs(prev)):
                break

    return ArchetypeModel(
        A=A, B=B, Z=Z, history=history, config=replace(config),
        converged=True, degenerate=degenerate,
        weights=(w.copy() if robust else None), iter_seconds=iter_seconds)


def fit(X, config):
    """Fit archetypes by cyclic block-coordinate descent on the squared
    Frobenius objective. Deterministic for a fixed seed."""
    if config.robust:
        raise ParameterError("config.robust is set; use fit_robust")
    return _fit_engine(X, config)


def fit_robust(X, config):
    """Fit archetypes under the Huber objective via iteratively reweighted
    least squares; the reported history is the variational objective
    0.5 * sum(r_i^2 / w_i + w_i)."""
    if not config.robust:
        config = replace(config, robust=True)
    return _fit_engine(X, config)


def encode(Z, Xnew, tol=1e-9, threads=1):
    """Code new data against fixed archetypes; columns are independent."""
    Z = as_dense(Z, "Z")
    Xnew = as_dense(Xnew, "Xnew")
    if Xnew.shape[0] != Z.shape[0]:
        raise DataError("Xnew rows do not match archetype dimension")
    p, n = Z.shape[1], Xnew.shape[1]
    Q = Z.T @ Z
    # column-by-column products keep batch encoding bit-identical to
    # encoding the same columns one at a time (gemm and gemv round
    # differently)
    Zt = np.ascontiguousarray(Z.T)
    ZtX = np.empty((p, n), order="F")
    for i in range(n):
        ZtX[:, i] = Zt @ Xnew[:, i]
    xsq = np.einsum("ij,ij->j", Xnew, Xnew)
    A = np.zeros((p, n), order="F")
    objs = np.empty(n)
    # A starts at zero columns, so the keep-old guard never triggers here
    _alpha_sweep(Q, ZtX, xsq, A, objs, tol, threads)
    return A
