"""Dedicated active-set solver for least squares over the probability simplex.

Solves min_{alpha in the simplex} ||x - Z alpha||_2^2 while maintaining the
inverse of the active-support Gram matrix incrementally, so each iteration
costs O(m p + a^2) where a is the current support size.

Three operating modes cover the fitting subproblems:
  * explicit     -- Z and x given; Gram entries fetched by matrix products
                    (used for the beta updates where forming Z^T Z is too big);
  * gram         -- a dense p x p Gram matrix plus Z^T x given (used for the
                    alpha sweep where one Gram serves many right-hand sides);
  * gram operator -- a callable v -> Z^T (Z v) plus Z^T x.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError, NumericError, ParameterError
from .numcore import as_dense, as_vector

_REFACTOR_EVERY = 50  # Woodbury drift control: full refactorization cadence
_CONSISTENCY_TOL = 1e-6


@dataclass
class SolverOptions:
    tol: float = 1e-9  # relative to max(|Z^T x|) + 1
    max_iter: int | None = None  # default 4*p + 50

    def resolve_max_iter(self, p):
        return self.max_iter if self.max_iter is not None else 4 * p + 50


@dataclass
class SimplexSolution:
    alpha: np.ndarray
    objective: float
    kkt_violation: float
    iterations: int
    converged: bool


class QpInstance:
    """One simplex-constrained least-squares instance.

    Immutable after construction; many solves against the same data may run
    concurrently.
    """

    def __init__(self, Z=None, x=None, gram=None, ztx=None, x_sqnorm=None,
                 gram_cols=None, diag=None):
        if Z is not None:
            if x is None:
                raise ParameterError("explicit mode requires both Z and x")
            self.Z = as_dense(Z, "Z")
            xv = as_vector(x, "x")
            if xv.size != self.Z.shape[0]:
                raise DimensionError("x length does not match rows of Z")
            self.mode = "explicit"
            self.p = self.Z.shape[1]
            self.ztx = self.Z.T @ xv
            self.x_sqnorm = float(xv @ xv)
            self._gram = None
            self._diag = np.einsum("ij,ij->j", self.Z, self.Z)
            self._x = xv
        elif gram is not None or gram_cols is not None:
            if ztx is None:
                raise ParameterError("implicit mode requires ztx")
            self.Z = None
            self._x = None
            self.ztx = as_vector(ztx, "ztx")
            self.p = self.ztx.size
            self.x_sqnorm = 0.0 if x_sqnorm is None else float(x_sqnorm)
            if gram_cols is not None:
                # column-provider mode: the caller hands out Q[:, j] on demand
                # (typically backed by a cache shared across many instances
                # built on the same data matrix) plus the precomputed diagonal
                if not callable(gram_cols) or diag is None:
                    raise ParameterError(
                        "column-provider mode requires a callable and diag")
                self.mode = "implicit-cols"
                self._cols = gram_cols
                self._gram = None
                self._diag = as_vector(diag, "diag")
                if self._diag.size != self.p:
                    raise DimensionError("diag length does not match ztx")
            elif callable(gram):
                self.mode = "implicit-gram"
                self._gram_op = gram
                self._col_cache = {}
                self._gram = None
                self._diag = None
            else:
                self.mode = "implicit-gram"
                self._gram = as_dense(gram, "gram")
                if self._gram.shape != (self.p, self.p):
                    raise DimensionError("gram must be p x p")
                self._diag = np.ascontiguousarray(np.diag(self._gram))
        else:
            raise ParameterError("provide either (Z, x) or (gram, ztx)")
        if not np.all(np.isfinite(self.ztx)):
            raise DataError("non-finite data in instance")

    def gram_col(self, j):
        """Column j of Q = Z^T Z."""
        if self._gram is not None:
            return self._gram[:, j]
        if self.Z is not None:
            return self.Z.T @ self.Z[:, j]
        if self.mode == "implicit-cols":
            return self._cols(j)
        col = self._col_cache.get(j)
        if col is None:
            e = np.zeros(self.p)
            e[j] = 1.0
            col = np.asarray(self._gram_op(e), dtype=np.float64).ravel()
            self._col_cache[j] = col
        return col

    def gram_diag(self):
        if self._diag is None:
            self._diag = np.array([self.gram_col(j)[j] for j in range(self.p)])
        return self._diag

    def gram_dot(self, idx, coef):
        """Q @ alpha for alpha supported on idx with values coef (full p-vector)."""
        if self._gram is not None:
            return self._gram[:, idx] @ coef
        if self.Z is not None:
            return self.Z.T @ (self.Z[:, idx] @ coef)
        if self.mode == "implicit-cols":
            out = np.zeros(self.p)
            for j, c in zip(idx, coef):
                out += c * self._cols(j)
            return out
        v = np.zeros(self.p)
        v[idx] = coef
        return np.asarray(self._gram_op(v), dtype=np.float64).ravel()

    def objective(self, alpha, idx=None):
        if self.Z is not None:
            r = self._x - self.Z @ alpha
            return float(r @ r)
        if idx is None:
            idx = np.flatnonzero(alpha)
        coef = alpha[idx]
        q = self.gram_dot(idx, coef)
        val = self.x_sqnorm - 2.0 * float(alpha @ self.ztx) + float(alpha[idx] @ q[idx])
        return max(val, 0.0)


@dataclass
class ActiveSetState:
    """Iterate, ordered support, and cached inverse of the support Gram."""
    alpha: np.ndarray
    active: list = field(default_factory=list)
    gram_inv: np.ndarray | None = None
    iterations: int = 0
    updates: int = 0  # Woodbury updates since the last full factorization


class SingularExtension(NumericError):
    """Adding a column would make the active Gram numerically singular."""


def initial_state(instance):
    """Start from the vertex minimizing ||x - z_j||^2 (single-variable support)."""
    scores = instance.gram_diag() - 2.0 * instance.ztx
    j0 = int(np.argmin(scores))
    alpha = np.zeros(instance.p)
    alpha[j0] = 1.0
    state = ActiveSetState(alpha=alpha)
    gram_inv_add(state, instance, j0)
    return state


def gram_inv_add(state, instance, j):
    """Grow the support by j, updating the cached Gram inverse in O(a^2)."""
    if j in state.active:
        raise ParameterError(f"index {j} already active")
    col = instance.gram_col(j)
    c = float(col[j])
    if not state.active:
        if c <= 1e-14:
            raise SingularExtension(f"zero-norm column {j}")
        state.gram_inv = np.array([[1.0 / c]])
        state.active.append(j)
        state.updates = 0
        return state
    idx = state.active
    b = col[idx]
    gb = state.gram_inv @ b
    s = c - float(b @ gb)
    if s <= 1e-12 * max(c, 1.0):
        raise SingularExtension(f"column {j} is dependent on the support")
    a = len(idx)
    new = np.empty((a + 1, a + 1))
    new[:a, :a] = state.gram_inv + np.outer(gb, gb) / s
    new[:a, a] = -gb / s
    new[a, :a] = -gb / s
    new[a, a] = 1.0 / s
    state.gram_inv = new
    state.active.append(j)
    state.updates += 1
    if state.updates >= _REFACTOR_EVERY:
        try:
            refactorize(state, instance)
        except NumericError:
            state.active.pop()
            raise SingularExtension("support became rank deficient") from None
    return state


def gram_inv_remove(state, j, instance=None):
    """Shrink the support by j; inverse-of-submatrix downdate in O(a^2)."""
    if j not in state.active:
        raise ParameterError(f"index {j} not active")
    k = state.active.index(j)
    E = state.gram_inv
    d = E[k, k]
    rest = [i for i in range(len(state.active)) if i != k]
    if d <= 0.0 or not np.isfinite(d):
        # cached inverse degenerated; rebuild from the shrunk support
        state.active.pop(k)
        if instance is None:
            raise NumericError("degenerate cached Gram inverse")
        return refactorize(state, instance)
    col = E[rest, k]
    state.gram_inv = E[np.ix_(rest, rest)] - np.outer(col, col) / d
    state.active.pop(k)
    state.updates += 1
    return state


def refactorize(state, instance):
    """Rebuild the support Gram inverse from scratch and verify consistency."""
    idx = state.active
    G = np.empty((len(idx), len(idx)))
    for a, j in enumerate(idx):
        G[:, a] = instance.gram_col(j)[idx]
    try:
        inv = np.linalg.inv(G)
    except np.linalg.LinAlgError:
        raise NumericError("active Gram is rank deficient") from None
    if not np.all(np.isfinite(inv)):
        raise NumericError("active Gram is rank deficient")
    err = np.max(np.abs(inv @ G - np.eye(len(idx))))
    if err > _CONSISTENCY_TOL * max(1.0, np.max(np.abs(G))):
        raise NumericError("active Gram is numerically singular")
    state.gram_inv = inv
    state.updates = 0
    return state


def reduced_step(state, instance):
    """Direction to the minimizer over the affine set {sum = 1, support fixed}.

    Solves the equality-constrained problem on the current support using the
    cached Gram inverse; the returned p-vector sums to zero and is zero off
    the support.
    """
    idx = state.active
    ginv = state.gram_inv
    b = instance.ztx[idx]
    u = ginv @ b
    v = ginv.sum(axis=1)
    den = float(v.sum())
    if not np.isfinite(den) or den <= 0.0:
        refactorize(state, instance)
        ginv = state.gram_inv
        u = ginv @ b
        v = ginv.sum(axis=1)
        den = float(v.sum())
        if not np.isfinite(den) or den <= 0.0:
            raise NumericError("active Gram is rank deficient")
    nu = (1.0 - float(u.sum())) / den
    s = u + nu * v
    q = np.zeros(instance.p)
    q[idx] = s - state.alpha[idx]
    return q


def kkt_check(state, instance, tol):
    """Optimality test in multiplier form once the reduced step is zero.

    Returns (j_star, violation): j_star is None when no off-support
    coordinate has reduced gradient below -tol, otherwise the index of the
    most negative one (ties to the smallest index). violation is the
    magnitude of the worst violation (0 when optimal).  When j_star is
    None the violation also reflects the gradient spread on the support:
    a nonzero value there means the cached inverse produced a step that
    is not actually stationary (rank-deficient support), and the caller
    should fall back to a dense solve instead of declaring optimality.
    """
    idx = state.active
    grad = 2.0 * (instance.gram_dot(idx, state.alpha[idx]) - instance.ztx)
    lam = float(np.mean(grad[idx]))
    on_spread = float(np.max(np.abs(grad[idx] - lam)))
    if on_spread <= tol:
        on_spread = 0.0
    if len(idx) == instance.p:
        return None, on_spread
    reduced = grad - lam
    reduced[idx] = np.inf
    j_star = int(np.argmin(reduced))
    worst = reduced[j_star]
    if worst >= -tol:
        off = max(0.0, -worst) if np.isfinite(worst) else 0.0
        return None, max(off, on_spread)
    return j_star, -worst


def step_to_feasible(alpha, q):
    """Longest step gamma in [0, 1] keeping alpha + gamma q nonnegative.

    Returns (gamma, leaving) where leaving is the blocking index when
    gamma < 1 (ties to the smallest index), else None.
    """
    neg = np.flatnonzero(q < 0)
    if neg.size == 0:
        return 1.0, None
    ratios = -alpha[neg] / q[neg]
    k = int(np.argmin(ratios))
    gamma = ratios[k]
    if gamma >= 1.0:
        return 1.0, None
    return max(gamma, 0.0), int(neg[k])


def kkt_violation(instance, alpha, idx=None):
    """Worst-case KKT residual for a feasible alpha (diagnostic)."""
    if idx is None:
        idx = np.flatnonzero(alpha > 0)
    idx = list(idx)
    grad = 2.0 * (instance.gram_dot(idx, alpha[idx]) - instance.ztx)
    lam = float(np.mean(grad[idx]))
    on = float(np.max(np.abs(grad[idx] - lam))) if idx else 0.0
    mask = np.ones(instance.p, dtype=bool)
    mask[idx] = False
    off = float(max(0.0, np.max(lam - grad[mask]))) if mask.any() else 0.0
    return max(on, off)


def _finish(instance, alpha, active, iterations, converged):
    s = alpha.sum()
    if s != 1.0 and s > 0:
        alpha /= s
    np.maximum(alpha, 0.0, out=alpha)
    viol = kkt_violation(instance, alpha, active)
    return SimplexSolution(alpha, instance.objective(alpha, active),
                           viol, iterations, converged)


def _dense_reduced_step(instance, alpha, active):
    """Reduced step via a least-squares KKT solve; tolerates singular
    support Grams (supports larger than the column rank)."""
    a = len(active)
    G = np.empty((a, a))
    for k, j in enumerate(active):
        G[:, k] = instance.gram_col(j)[active]
    K = np.zeros((a + 1, a + 1))
    K[:a, :a] = 2.0 * G
    K[:a, a] = 1.0
    K[a, :a] = 1.0
    rhs = np.concatenate([2.0 * instance.ztx[active], [1.0]])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    q = np.zeros(instance.p)
    q[active] = sol[:a] - alpha[active]
    return q


def _kkt_entering(instance, alpha, active, tol):
    grad = 2.0 * (instance.gram_dot(active, alpha[active]) - instance.ztx)
    lam = float(np.mean(grad[active]))
    if len(active) == instance.p:
        return None
    reduced = grad - lam
    reduced[active] = np.inf
    j_star = int(np.argmin(reduced))
    if reduced[j_star] >= -tol:
        return None
    return j_star


def _solve_dense(instance, alpha, active, it, max_iter, tol, step_tol, p):
    """Generic active-set loop without the incremental Gram inverse.

    Fallback for rank-deficient supports (e.g. more active columns than
    rows); O(a^3) per iteration but only engaged when the fast path hits a
    singular extension.
    """
    active = list(active)
    zero_steps = 0
    tol_bumped = False
    while it < max_iter:
        it += 1
        q = _dense_reduced_step(instance, alpha, active)
        if np.max(np.abs(q[active])) <= step_tol:
            j_star = _kkt_entering(instance, alpha, active, tol)
            if j_star is None:
                return _finish(instance, alpha, active, it, True)
            active.append(j_star)
            continue
        gamma, leaving = step_to_feasible(alpha, q)
        if gamma <= 0.0:
            zero_steps += 1
            if zero_steps > p:
                if tol_bumped:
                    break
                tol *= 10.0
                tol_bumped = True
                zero_steps = 0
        else:
            zero_steps = 0
        alpha += gamma * q
        if leaving is not None:
            alpha[leaving] = 0.0
            active.remove(leaving)
    return _finish(instance, alpha, active, it, False)


def warm_state(instance, alpha0):
    """Build an ActiveSetState at a given feasible point, if possible.

    Returns None when alpha0 is not a clean simplex vector or its support
    Gram cannot be inverted incrementally; callers then fall back to the
    vertex start.
    """
    alpha0 = np.asarray(alpha0, dtype=np.float64)
    if (alpha0.shape != (instance.p,) or not np.all(np.isfinite(alpha0))
            or alpha0.min() < 0.0 or abs(alpha0.sum() - 1.0) > 1e-9):
        return None
    support = np.flatnonzero(alpha0 > 0.0)
    if support.size == 0:
        return None
    state = ActiveSetState(alpha=alpha0.copy())
    try:
        for j in support:
            gram_inv_add(state, instance, j)
    except (SingularExtension, NumericError):
        return None
    return state


def solve(instance, opts=None, _trace=None, warm=None):
    """Run the active-set method to optimality (or max_iter).

    warm, if given, is a previous solution of a nearby instance; when it is
    a valid simplex vector with an invertible support Gram the search starts
    there instead of at a vertex, typically finishing in a few iterations.

    _trace, if given, is a list that receives the objective value at the
    start of every iteration (diagnostic hook; no effect on the result).
    """
    if opts is None:
        opts = SolverOptions()
    if opts.tol <= 0:
        raise ParameterError("tol must be positive")
    p = instance.p
    max_iter = opts.resolve_max_iter(p)
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")

    scale = float(np.max(np.abs(instance.ztx))) + 1.0
    tol = opts.tol * scale
    step_tol = 1e-12 * scale

    if p == 1:
        alpha = np.ones(1)
        return SimplexSolution(alpha, instance.objective(alpha, [0]), 0.0, 0, True)

    state = warm_state(instance, warm) if warm is not None else None
    if state is None:
        try:
            state = initial_state(instance)
        except SingularExtension:
            # zero-norm starting column; the dense path tolerates it
            scores = instance.gram_diag() - 2.0 * instance.ztx
            j0 = int(np.argmin(scores))
            alpha0 = np.zeros(p)
            alpha0[j0] = 1.0
            return _solve_dense(instance, alpha0, [j0], 0, max_iter, tol,
                                step_tol, p)
    alpha = state.alpha
    zero_steps = 0
    tol_bumped = False
    it = 0

    while it < max_iter:
        it += 1
        if _trace is not None:
            _trace.append(instance.objective(alpha, state.active))
        try:
            q = reduced_step(state, instance)
        except NumericError:
            return _solve_dense(instance, alpha, state.active, it,
                                max_iter, tol, step_tol, p)
        idx = state.active
        if np.max(np.abs(q[idx])) <= step_tol:
            j_star, viol = kkt_check(state, instance, tol)
            if j_star is None:
                if viol > tol:
                    # stationary on a rank-deficient support: the cached
                    # inverse is unreliable, finish on the dense path
                    return _solve_dense(instance, alpha, state.active, it,
                                        max_iter, tol, step_tol, p)
                return _finish(instance, alpha, state.active, it, True)
            try:
                gram_inv_add(state, instance, j_star)
            except SingularExtension:
                try:
                    refactorize(state, instance)
                    gram_inv_add(state, instance, j_star)
                except (SingularExtension, NumericError):
                    # support hit the column rank; switch to the dense path
                    return _solve_dense(instance, alpha,
                                        state.active + [j_star], it,
                                        max_iter, tol, step_tol, p)
            continue
        gamma, leaving = step_to_feasible(alpha, q)
        if gamma <= 0.0:
            zero_steps += 1
            if zero_steps > p:
                try:
                    refactorize(state, instance)
                except NumericError:
                    return _solve_dense(instance, alpha, state.active, it,
                                        max_iter, tol, step_tol, p)
                if not tol_bumped:
                    tol *= 10.0
                    tol_bumped = True
                zero_steps = 0
        else:
            zero_steps = 0
        alpha += gamma * q
        if leaving is not None:
            alpha[leaving] = 0.0
            try:
                gram_inv_remove(state, leaving, instance)
            except NumericError:
                return _solve_dense(instance, alpha, state.active, it,
                                    max_iter, tol, step_tol, p)

    state.iterations = it
    return _finish(instance, alpha, state.active, it, False)


def _batch_scatter_add(target, rows, cols, values, p):
    """target[rows[k], cols[k, s]] += values[k, s] with duplicate-safe adds."""
    flat = rows[:, None] * p + cols
    acc = np.bincount(flat.ravel(), weights=values.ravel(),
                      minlength=target.shape[0] * p)
    target += acc.reshape(target.shape)


def solve_gram_batch(Q, ZtX, xsq, opts=None, warm=None):
    """Active-set solve for many columns sharing one Gram matrix.

    Runs the same algorithm as solve() in gram mode for every column of
    ZtX, but keeps the per-column iterates in stacked arrays so the work
    per iteration is a handful of vectorized operations over the whole
    batch instead of a Python-level loop per column. Columns that hit a
    numerically delicate situation (rank-deficient support, stalled
    steps) are handed to the scalar solver, which has the dense fallback.

    warm, when given, is a (p, n_columns) array of previous solutions;
    columns holding a valid simplex vector start from their old support
    instead of a vertex, which lets an already-optimal column finish
    after a single optimality check. Invalid columns fall back to the
    vertex start.

    Returns (A, objectives) with A of shape (p, n_columns).
    """
    if opts is None:
        opts = SolverOptions()
    if opts.tol <= 0:
        raise ParameterError("tol must be positive")
    Q = np.asarray(Q, dtype=np.float64)
    ZtX = np.asarray(ZtX, dtype=np.float64)
    p, n = ZtX.shape
    A = np.zeros((p, n), order="F")
    if n == 0:
        return A, np.zeros(0)
    if p == 1:
        A[0, :] = 1.0
        objs = np.maximum(xsq - 2.0 * ZtX[0] + Q[0, 0], 0.0)
        return A, objs
    diag = np.ascontiguousarray(np.diag(Q))
    max_iter = opts.resolve_max_iter(p)
    scale_all = np.abs(ZtX).max(axis=0) + 1.0
    tol_all = opts.tol * scale_all

    solved = np.zeros(n, dtype=bool)
    wok = None
    if warm is not None:
        W = np.asarray(warm, dtype=np.float64)
        if W.shape != (p, n):
            raise DimensionError("warm must match ZtX shape")
        wok = (np.isfinite(W).all(axis=0) & (W.min(axis=0) >= 0.0)
               & (np.abs(W.sum(axis=0) - 1.0) < 1e-9))
        cnt = (W > 0.0).sum(axis=0)
        wok &= cnt >= 1
        if np.any(wok):
            # one vectorized optimality test over all warm columns: points
            # passing the multiplier-form KKT conditions finish immediately
            # without any per-column state
            widx = np.flatnonzero(wok)
            Wv = W[:, widx]
            sup = Wv > 0.0
            grad = 2.0 * (Q @ Wv - ZtX[:, widx])
            lam = np.where(sup, grad, 0.0).sum(axis=0) / sup.sum(axis=0)
            dev = np.where(sup, np.abs(grad - lam), 0.0).max(axis=0)
            off = np.where(sup, np.inf, grad - lam).min(axis=0)
            opt = (dev <= tol_all[widx]) & ((off >= -tol_all[widx])
                                            | (cnt[widx] == p))
            done = widx[opt]
            if done.size:
                out = Wv[:, opt]
                A[:, done] = out / out.sum(axis=0)
                solved[done] = True
                wok[done] = False
        if not np.any(wok):
            wok = None

    # working-set state, one row per still-unsolved column
    cols = np.flatnonzero(~solved)           # original column ids
    nw = cols.size
    ztxw = np.ascontiguousarray(ZtX.T[cols])  # (nw, p)
    tolw = tol_all[cols]
    stepw = 1e-12 * scale_all[cols]
    alpha = np.zeros((nw, p))
    j0 = np.argmin(diag[None, :] - 2.0 * ztxw, axis=1)
    alpha[np.arange(nw), j0] = 1.0

    amax = min(p, 8)
    warm_idx = None
    if wok is not None:
        # row positions in the working set whose warm vector is adoptable
        warm_idx = np.flatnonzero(wok[cols])
        if warm_idx.size == 0:
            warm_idx = None
        else:
            amax = min(p, max(amax, int(cnt[cols[warm_idx]].max())))

    act = np.zeros((nw, amax), dtype=np.intp)
    act[:, 0] = j0
    mask = np.zeros((nw, amax), dtype=bool)
    mask[:, 0] = True
    acnt = np.ones(nw, dtype=np.intp)
    ginv = np.zeros((nw, amax, amax))
    with np.errstate(divide="ignore", invalid="ignore"):
        ginv[:, 0, 0] = 1.0 / diag[j0]
    zsteps = np.zeros(nw, dtype=np.intp)

    if warm_idx is not None:
        # adopt the previous support where its Gram inverts cleanly; columns
        # whose support Gram is singular keep the vertex start
        wcnt = cnt[cols[warm_idx]]
        for a in np.unique(wcnt):
            grp = warm_idx[wcnt == a]           # row positions
            ids = cols[grp]                     # original column ids
            sups = np.nonzero(W[:, ids].T > 0.0)[1].reshape(grp.size, a)
            G = Q[sups[:, :, None], sups[:, None, :]]
            try:
                Gi = np.linalg.inv(G)
            except np.linalg.LinAlgError:
                Gi = np.full_like(G, np.nan)
                for r in range(grp.size):
                    try:
                        Gi[r] = np.linalg.inv(G[r])
                    except np.linalg.LinAlgError:
                        pass
            good = (np.isfinite(Gi).all(axis=(1, 2))
                    & (np.diagonal(Gi, axis1=1, axis2=2) > 0.0).all(axis=1))
            g = grp[good]
            if g.size == 0:
                continue
            alpha[g] = W[:, ids[good]].T
            pad_act = np.zeros((g.size, amax), dtype=np.intp)
            pad_act[:, :a] = sups[good]
            act[g] = pad_act
            pad_mask = np.zeros((g.size, amax), dtype=bool)
            pad_mask[:, :a] = True
            mask[g] = pad_mask
            pad_ginv = np.zeros((g.size, amax, amax))
            pad_ginv[:, :a, :a] = Gi[good]
            ginv[g] = pad_ginv
            acnt[g] = a

    fb_cols = list(cols[diag[j0] <= 1e-14])  # zero-norm start column
    keep = diag[j0] > 1e-14
    if not np.all(keep):
        cols, ztxw, tolw, stepw = cols[keep], ztxw[keep], tolw[keep], stepw[keep]
        alpha, act, mask, acnt = alpha[keep], act[keep], mask[keep], acnt[keep]
        ginv, zsteps = ginv[keep], zsteps[keep]

    def finalize(rows):
        out = alpha[rows]
        s = out.sum(axis=1)
        np.divide(out, s[:, None], out=out, where=s[:, None] > 0)
        np.maximum(out, 0.0, out=out)
        A[:, cols[rows]] = out.T

    it = 0
    while cols.size and it < max_iter:
        it += 1
        nw = cols.size
        rows = np.arange(nw)

        # reduced step on the current supports (padded slots are zero)
        b = np.take_along_axis(ztxw, act, axis=1)
        b[~mask] = 0.0
        u = (ginv @ b[:, :, None])[:, :, 0]
        v = ginv.sum(axis=2)
        den = v.sum(axis=1)
        aact = np.take_along_axis(alpha, act, axis=1)
        # rows with a non-positive or non-finite denominator are flagged as
        # bad below; let their q go NaN here rather than branching
        with np.errstate(divide="ignore", invalid="ignore"):
            nu = (1.0 - u.sum(axis=1)) / den
            q = u + nu[:, None] * v - aact
        q[~mask] = 0.0
        bad = ~np.isfinite(den) | (den <= 0.0) | ~np.isfinite(q).all(axis=1)
        qmax = np.abs(q).max(axis=1)

        stepping = (qmax > stepw) & ~bad
        checking = ~stepping & ~bad

        drop = np.zeros(nw, dtype=bool)  # rows leaving the working set
        drop |= bad
        fb_cols.extend(cols[bad])

        # --- optimality test / entering index for stalled columns ---------
        ci = rows[checking]
        if ci.size:
            grad = 2.0 * (alpha[ci] @ Q - ztxw[ci])
            gact = np.take_along_axis(grad, act[ci], axis=1)
            gact[~mask[ci]] = 0.0
            lam = gact.sum(axis=1) / acnt[ci]
            spread = np.abs(gact - lam[:, None])
            spread[~mask[ci]] = 0.0
            spread = spread.max(axis=1)
            red = grad - lam[:, None]
            blocked = np.where(mask[ci], np.inf,
                               np.take_along_axis(red, act[ci], axis=1))
            np.put_along_axis(red, act[ci], blocked, axis=1)
            jstar = np.argmin(red, axis=1)
            worst = red[np.arange(ci.size), jstar]
            full = acnt[ci] == p
            stat = (worst >= -tolw[ci]) | full
            clean = spread <= tolw[ci]
            done = stat & clean
            fb = stat & ~clean  # stationary but inconsistent: rank trouble
            adding = ~stat

            if np.any(done):
                finalize(ci[done])
                drop[ci[done]] = True
            if np.any(fb):
                fb_cols.extend(cols[ci[fb]])
                drop[ci[fb]] = True

            ai = ci[adding]
            if ai.size:
                js = jstar[adding]
                if np.any(acnt[ai] >= amax):  # grow the padded support
                    grown = min(max(2 * amax, 8), p)
                    pad = grown - amax
                    act = np.pad(act, ((0, 0), (0, pad)))
                    mask = np.pad(mask, ((0, 0), (0, pad)))
                    ginv = np.pad(ginv, ((0, 0), (0, pad), (0, pad)))
                    q = np.pad(q, ((0, 0), (0, pad)))
                    amax = grown
                c = diag[js]
                b2 = np.take_along_axis(Q.T[js], act[ai], axis=1)
                b2[~mask[ai]] = 0.0
                gb = (ginv[ai] @ b2[:, :, None])[:, :, 0]
                gb[~mask[ai]] = 0.0
                s = c - (b2 * gb).sum(axis=1)
                sing = s <= 1e-12 * np.maximum(c, 1.0)
                if np.any(sing):
                    fb_cols.extend(cols[ai[sing]])
                    drop[ai[sing]] = True
                ok = ai[~sing]
                if ok.size:
                    gbo = gb[~sing]
                    so = s[~sing]
                    slot = acnt[ok]
                    gpart = ginv[ok]
                    gpart += gbo[:, :, None] * gbo[:, None, :] / so[:, None, None]
                    rr = np.arange(ok.size)
                    gpart[rr, slot, :] = 0.0
                    gpart[rr, :, slot] = 0.0
                    gpart[rr, slot, : amax] = -gbo / so[:, None]
                    gpart[rr, : amax, slot] = (-gbo / so[:, None])
                    gpart[rr, slot, slot] = 1.0 / so
                    ginv[ok] = gpart
                    act[ok, slot] = js[~sing]
                    mask[ok, slot] = True
                    acnt[ok] += 1

        # --- feasibility step for moving columns ---------------------------
        si = rows[stepping]
        if si.size:
            qs = q[si]
            a_s = np.take_along_axis(alpha[si], act[si], axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(qs < 0.0, -a_s / qs, np.inf)
            k = np.argmin(ratios, axis=1)
            rk = np.arange(si.size)
            gamma = np.minimum(ratios[rk, k], 1.0)
            gamma = np.maximum(gamma, 0.0)
            blockedk = ratios[rk, k] < 1.0

            delta = gamma[:, None] * qs
            # land exactly on zero for the blocking coordinate
            delta[rk[blockedk], k[blockedk]] = -a_s[rk[blockedk], k[blockedk]]
            delta[~mask[si]] = 0.0
            _batch_scatter_add(alpha, si, act[si], delta, p)

            stalled = gamma <= 0.0
            zsteps[si] = np.where(stalled, zsteps[si] + 1, 0)
            cycling = si[zsteps[si] > p]
            if cycling.size:
                fb_cols.extend(cols[cycling])
                drop[cycling] = True

            # remove the blocking index: swap its slot to the end, downdate
            bi = si[blockedk & ~(zsteps[si] > p)]
            if bi.size:
                kb = k[blockedk & ~(zsteps[si] > p)]
                rb = np.arange(bi.size)
                d = ginv[bi, kb, kb]
                degen = (d <= 0.0) | ~np.isfinite(d)
                if np.any(degen):
                    fb_cols.extend(cols[bi[degen]])
                    drop[bi[degen]] = True
                good = ~degen
                bi, kb, rb = bi[good], kb[good], np.arange(good.sum())
                if bi.size:
                    d = ginv[bi, kb, kb]
                    colv = ginv[bi, :, kb]
                    colv[~mask[bi]] = 0.0
                    gnew = ginv[bi] - colv[:, :, None] * colv[:, None, :] / d[:, None, None]
                    last = acnt[bi] - 1
                    perm = np.tile(np.arange(amax), (bi.size, 1))
                    perm[rb, kb] = last
                    perm[rb, last] = kb
                    gnew = gnew[rb[:, None, None], perm[:, :, None],
                                perm[:, None, :]]
                    gnew[rb, last, :] = 0.0
                    gnew[rb, :, last] = 0.0
                    ginv[bi] = gnew
                    act[bi] = np.take_along_axis(act[bi], perm, axis=1)
                    mask[bi] = np.take_along_axis(mask[bi], perm, axis=1)
                    act[bi, last] = 0
                    mask[bi, last] = False
                    acnt[bi] = last

        if np.any(drop):
            keep = ~drop
            cols, ztxw, tolw, stepw = (cols[keep], ztxw[keep], tolw[keep],
                                       stepw[keep])
            alpha, act, mask, acnt = alpha[keep], act[keep], mask[keep], acnt[keep]
            ginv, zsteps = ginv[keep], zsteps[keep]

    if cols.size:  # iteration cap: return the current (feasible) iterates
        finalize(np.arange(cols.size))

    for i in fb_cols:
        sol = solve(QpInstance(gram=Q, ztx=ZtX[:, i], x_sqnorm=float(xsq[i])),
                    opts)
        A[:, i] = sol.alpha

    AQ = Q @ A
    objs = xsq - 2.0 * np.einsum("pn,pn->n", A, ZtX) + np.einsum(
        "pn,pn->n", A, AQ)
    np.maximum(objs, 0.0, out=objs)
    return A, objs
