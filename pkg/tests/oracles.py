"""Independent reference computations used by the tests.

None of these call into the solver's closed forms; they use brute-force
grids, generic optimizers or a conic solver.
"""

import itertools
import math
import warnings

import numpy as np
import scipy.optimize


def grid_argmin_1d(f, lo, hi, n=20001, rounds=4):
    """Minimize a scalar function on [lo, hi] by a grid with local refinement.

    Returns (argmin, min). Zero and the endpoints are always probed, since
    the penalties here have kinks or jumps there.
    """
    xs = np.linspace(lo, hi, n)
    extra = [x for x in (0.0, lo, hi) if lo <= x <= hi]
    xs = np.concatenate([xs, extra])
    vals = np.array([f(x) for x in xs])
    k = int(np.argmin(vals))
    best_x, best_v = xs[k], vals[k]
    width = (hi - lo) / (n - 1)
    for _ in range(rounds):
        a, b = max(lo, best_x - 2 * width), min(hi, best_x + 2 * width)
        xs = np.linspace(a, b, 401)
        vals = np.array([f(x) for x in xs])
        k = int(np.argmin(vals))
        if vals[k] < best_v:
            best_x, best_v = xs[k], vals[k]
        width = (b - a) / 400
    # polish: golden-section search on the smooth neighbourhood
    a, b = max(lo, best_x - 2 * width), min(hi, best_x + 2 * width)
    if b > a:
        res = scipy.optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                             options={"xatol": 1e-13})
        if res.fun < best_v:
            best_x, best_v = res.x, res.fun
    for x in extra:
        if f(x) <= best_v:
            best_x, best_v = x, f(x)
    return best_x, best_v


def psi_variational(theta, lam0, lam2, M, n=4001):
    """min over z in [|theta|/M, 1] of lam0*z + lam2*theta**2/z by a dense grid.

    The inner minimization over s is solved exactly (s = theta**2 / z).
    """
    a = abs(theta)
    if a > M:
        return math.inf
    if a == 0:
        return 0.0
    zlo = a / M if math.isfinite(M) else 1e-12
    zs = np.linspace(zlo, 1.0, n)
    vals = lam0 * zs + lam2 * a * a / zs
    k = int(np.argmin(vals))
    res = scipy.optimize.minimize_scalar(
        lambda z: lam0 * z + lam2 * a * a / z,
        bounds=(zs[max(k - 1, 0)], zs[min(k + 1, n - 1)]), method="bounded",
        options={"xatol": 1e-14})
    return min(vals[k], res.fun)


def psi_argmin_z(theta, lam0, lam2, M, n=200001):
    a = abs(theta)
    if a == 0:
        return 0.0
    zlo = a / M
    zs = np.linspace(zlo, 1.0, n)
    vals = lam0 * zs + lam2 * a * a / zs
    return float(zs[int(np.argmin(vals))])


def sup_grid(f, alpha, lo, hi, n=20001):
    """sup_t alpha*t - f(t) over [lo, hi] with refinement."""
    x, v = grid_argmin_1d(lambda t: f(t) - alpha * t, lo, hi, n)
    return -v


def _lbfgs_support(xtilde, support, lam2, M):
    """min of the smooth loss + lam2 * ||off||^2 with off-diagonals free on
    ``support`` (|theta| <= M) and zero elsewhere."""
    n, p = xtilde.shape
    S = xtilde.T @ xtilde
    pairs = list(support)
    k = len(pairs)

    def unpack(w):
        T = np.diag(w[:p])
        for idx, (i, j) in enumerate(pairs):
            T[i, j] = T[j, i] = w[p + idx]
        return T

    def fg(w):
        T = unpack(w)
        d = np.diag(T)
        ST = S @ T
        q = np.einsum("ij,ij->j", T, ST)
        f = np.sum(-np.log(d) + q / d) + lam2 * np.sum(w[p:] ** 2)
        g = np.empty_like(w)
        g[:p] = 2 * np.diag(ST) / d - q / d ** 2 - 1 / d
        for idx, (i, j) in enumerate(pairs):
            g[p + idx] = (2 * ST[i, j] / d[j] + 2 * ST[j, i] / d[i]
                          + 2 * lam2 * w[p + idx])
        return f, g

    w0 = np.concatenate([1.0 / np.diag(S), np.zeros(k)])
    bounds = [(1e-10, None)] * p + [(-M, M)] * k
    best = None
    for _ in range(3):
        res = scipy.optimize.minimize(
            fg, w0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 20000,
                     "maxcor": 30})
        if best is None or res.fun < best.fun:
            best = res
        w0 = res.x
    return best.fun, unpack(best.x)


def enumerate_l0l2(xtilde, lam0, lam2, M):
    """Global optimum of the l0l2 problem by trying every symmetric support.

    Returns (objective, theta).
    """
    p = xtilde.shape[1]
    all_pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    best = (math.inf, None)
    for r in range(len(all_pairs) + 1):
        for support in itertools.combinations(all_pairs, r):
            val, T = _lbfgs_support(xtilde, support, lam2, M)
            val += lam0 * len(support)
            if val < best[0]:
                best = (val, T)
    return best


def cvx_relaxation(xtilde, tags, lam0, lam2, M):
    """Node relaxation solved as a conic program (Clarabel).

    tags: dict (i, j) -> 'relaxed' | 'zero' | 'one'; missing pairs are relaxed.
    """
    import cvxpy as cp

    n, p = xtilde.shape
    T = cp.Variable((p, p), symmetric=True)
    cons = []
    obj = 0
    for i in range(p):
        obj += -cp.log(T[i, i]) + cp.quad_over_lin(xtilde @ T[:, i], T[i, i])
    for i in range(p):
        for j in range(i + 1, p):
            tag = tags.get((i, j), "relaxed")
            if tag == "zero":
                cons.append(T[i, j] == 0)
            elif tag == "one":
                cons.append(cp.abs(T[i, j]) <= M)
                obj += lam0 + lam2 * cp.square(T[i, j])
            else:
                z = cp.Variable(nonneg=True)
                s = cp.Variable(nonneg=True)
                cons += [z <= 1, cp.abs(T[i, j]) <= M * z,
                         cp.quad_over_lin(T[i, j], z) <= s]
                obj += lam0 * z + lam2 * s
    prob = cp.Problem(cp.Minimize(obj), cons)
    # Pairs with z = 0 at the optimum make the cone degenerate, so Clarabel
    # may report "inaccurate" even when the value is good to ~1e-8.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-9, tol_gap_rel=1e-9,
                   tol_feas=1e-9)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solve failed: {prob.status}")
    return prob.value, T.value


def min_1d_vec(f, lo, hi, n=4001, rounds=8):
    """Minimum of a vectorized ``f`` on [lo, hi] by zooming grids.

    ``f`` must be convex away from 0; the value at 0 is probed separately
    so penalties with a jump at the origin are handled. Returns (x, value).
    """
    xs = np.linspace(lo, hi, n)
    vals = f(xs)
    k = int(np.argmin(vals))
    best_x, best_v = xs[k], vals[k]
    width = (hi - lo) / (n - 1)
    for _ in range(rounds):
        a, b = max(lo, best_x - 3 * width), min(hi, best_x + 3 * width)
        xs = np.linspace(a, b, 601)
        vals = f(xs)
        k = int(np.argmin(vals))
        if vals[k] <= best_v:
            best_x, best_v = xs[k], vals[k]
        width = (b - a) / 600
    if lo <= 0.0 <= hi:
        v0 = float(f(np.array([0.0]))[0])
        if v0 <= best_v:
            best_x, best_v = 0.0, v0
    return float(best_x), float(best_v)


def psi_by_z(t, lam0, lam2, M):
    """Vectorized perspective penalty: min over z in [|t|/M, 1] of
    lam0*z + lam2*t**2/z, with the scalar convex z-problem solved by clipping
    its stationary point."""
    a = np.abs(np.asarray(t, dtype=float))
    lo = a / M if math.isfinite(M) else np.zeros_like(a)
    if lam0 > 0:
        with np.errstate(invalid="ignore", over="ignore"):
            z = np.clip(a * math.sqrt(lam2 / lam0), lo, 1.0)
        z = np.where(np.isnan(z), 1.0, z)
    else:
        z = np.maximum(lo, np.where(a > 0, 1.0, 0.0)) if lam2 > 0 else lo
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = np.where(a > 0, lam2 * a * a / np.where(z > 0, z, 1.0), 0.0)
    out = lam0 * z + quad
    out = np.where(a == 0, 0.0, out)
    return np.where(a > M, np.inf, out)


def l0l2_vec(t, lam0, lam2, M):
    t = np.asarray(t, dtype=float)
    out = np.where(t != 0, lam0 + lam2 * t * t, 0.0)
    return np.where(np.abs(t) > M, np.inf, out)


def one_vec(t, lam0, lam2, M):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) > M, np.inf, lam0 + lam2 * t * t)
