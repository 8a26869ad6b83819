"""Cyclic coordinate descent with an active-set outer loop.

One engine serves every stage of the search: node relaxations use
``INTERVAL``/``ZERO``/``ONE`` tags, incumbent searches use ``L0L2``/``ZERO``.
Off-diagonal pairs are visited in ascending ``(i, j)`` order, followed by the
diagonal in ascending order.
"""

import dataclasses
import math

import numpy as np
from numba import njit

from .model import SymmetricEstimate
from .regularizers import Penalty, penalty_value, quad_min


@dataclasses.dataclass
class SolverConfig:
    rel_obj_tol: float = 1e-6
    max_sweeps: int = 500
    max_active_rounds: int = 20
    residual_refresh_period: int = 50
    # Extra stopping requirement on the largest coordinate move in a sweep.
    coord_tol: float = math.inf
    drift_tol: float = 1e-8

    def __post_init__(self):
        if not (self.rel_obj_tol > 0 and self.max_sweeps > 0
                and self.max_active_rounds > 0
                and self.residual_refresh_period > 0 and self.coord_tol > 0):
            raise ValueError("solver settings must be positive")


@njit(cache=True, nogil=True)
def _dot(x, y):
    s = 0.0
    for k in range(x.shape[0]):
        s += x[k] * y[k]
    return s


@njit(cache=True, nogil=True)
def _pair_coefs(xt, v, theta, R, i, j):
    tii = theta[i, i]
    tjj = theta[j, j]
    old = theta[i, j]
    a = v[j] / tii + v[i] / tjj
    b = (2.0 * (_dot(xt[j], R[i]) - old * v[j]) / tii
         + 2.0 * (_dot(xt[i], R[j]) - old * v[i]) / tjj)
    return a, b


@njit(cache=True, nogil=True)
def _update_pair(xt, v, theta, R, i, j, tag, lam0, lam2, M):
    a, b = _pair_coefs(xt, v, theta, R, i, j)
    old = theta[i, j]
    new = quad_min(a, b, tag, lam0, lam2, M)
    d = new - old
    if d != 0.0:
        theta[i, j] = new
        theta[j, i] = new
        xi = xt[i]
        xj = xt[j]
        ri = R[i]
        rj = R[j]
        for k in range(xi.shape[0]):
            ri[k] += d * xj[k]
            rj[k] += d * xi[k]
    return d


@njit(cache=True, nogil=True)
def _update_diag(xt, v, theta, R, i):
    old = theta[i, i]
    xi = xt[i]
    ri = R[i]
    ee = 0.0
    for k in range(xi.shape[0]):
        e = ri[k] - old * xi[k]
        ee += e * e
    new = (1.0 + math.sqrt(1.0 + 4.0 * v[i] * ee)) / (2.0 * v[i])
    d = new - old
    theta[i, i] = new
    for k in range(xi.shape[0]):
        ri[k] += d * xi[k]
    return d


@njit(cache=True, nogil=True)
def _sweep(xt, v, theta, R, pi, pj, tags, lam0, lam2, M):
    big = 0.0
    for k in range(pi.shape[0]):
        i = pi[k]
        j = pj[k]
        d = _update_pair(xt, v, theta, R, i, j, tags[i, j], lam0, lam2, M)
        big = max(big, abs(d))
    for i in range(theta.shape[0]):
        big = max(big, abs(_update_diag(xt, v, theta, R, i)))
    return big


@njit(cache=True, nogil=True)
def _objective(theta, R, pi, pj, tags, lam0, lam2, M):
    total = 0.0
    for i in range(theta.shape[0]):
        total += -math.log(theta[i, i]) + _dot(R[i], R[i]) / theta[i, i]
    for k in range(pi.shape[0]):
        i = pi[k]
        j = pj[k]
        total += penalty_value(theta[i, j], tags[i, j], lam0, lam2, M)
    return total


@njit(cache=True, nogil=True)
def _violations(theta, G, v, active, tags, lam0, lam2, M):
    # G[i, j] = r_i . x~_j; pairs outside ``active`` are zero by construction.
    p = theta.shape[0]
    out_i = []
    out_j = []
    for i in range(p):
        for j in range(i + 1, p):
            if active[i, j]:
                continue
            tag = tags[i, j]
            if tag == 1:
                continue
            tii = theta[i, i]
            tjj = theta[j, j]
            a = v[j] / tii + v[i] / tjj
            b = 2.0 * G[i, j] / tii + 2.0 * G[j, i] / tjj
            if quad_min(a, b, tag, lam0, lam2, M) != 0.0:
                out_i.append(i)
                out_j.append(j)
    return out_i, out_j


def _pair_arrays(pairs):
    pairs = sorted({(min(i, j), max(i, j)) for i, j in pairs})
    pi = np.fromiter((i for i, _ in pairs), dtype=np.int64, count=len(pairs))
    pj = np.fromiter((j for _, j in pairs), dtype=np.int64, count=len(pairs))
    return pi, pj


def _with_fixed_one(restriction, penalties):
    return set(restriction) | set(penalties.pairs(Penalty.ONE))


def update_offdiagonal(inst, est, i, j, penalties):
    """Exactly minimize over ``theta_ij = theta_ji``; updates ``est`` in place.

    Returns the new value.
    """
    if i == j:
        raise ValueError("use update_diagonal for diagonal entries")
    i, j = min(i, j), max(i, j)
    _update_pair(inst.xt, inst.v, est.theta, est.residuals, i, j,
                 int(penalties.tags[i, j]), *penalties.params)
    return est.theta[i, j]


def update_diagonal(inst, est, i):
    """Closed-form minimization over ``theta_ii``; updates ``est`` in place."""
    _update_diag(inst.xt, inst.v, est.theta, est.residuals, i)
    return est.theta[i, i]


def restricted_objective(inst, est, penalties, restriction):
    """Objective of ``est`` assuming off-diagonals outside ``restriction``
    are zero (``ONE`` pairs are always counted)."""
    pi, pj = _pair_arrays(_with_fixed_one(restriction, penalties))
    return _objective(est.theta, est.residuals, pi, pj, penalties.tags,
                      *penalties.params)


def cd_sweep(inst, est, penalties, restriction):
    """One cyclic pass over ``restriction`` then the diagonal.

    Updates ``est`` in place and returns the objective afterwards.
    """
    pi, pj = _pair_arrays(_with_fixed_one(restriction, penalties))
    _sweep(inst.xt, inst.v, est.theta, est.residuals, pi, pj, penalties.tags,
           *penalties.params)
    return _objective(est.theta, est.residuals, pi, pj, penalties.tags,
                      *penalties.params)


def _project(inst, est, penalties, restriction):
    # Zero everything outside the restriction (and ZERO-tagged pairs) and
    # clip to the box, so the starting point is feasible.
    p = inst.p
    keep = np.zeros((p, p), dtype=bool)
    pi, pj = _pair_arrays(restriction)
    keep[pi, pj] = True
    keep |= keep.T
    keep &= penalties.tags != int(Penalty.ZERO)
    np.fill_diagonal(keep, True)
    theta = np.where(keep, est.theta, 0.0)
    diag = np.diag(theta).copy()
    if np.any(diag <= 0):
        raise ValueError("initial estimate must have a positive diagonal")
    theta = np.clip(theta, -penalties.bigM, penalties.bigM)
    np.fill_diagonal(theta, diag)
    if np.array_equal(theta, est.theta):
        return est.copy()
    return SymmetricEstimate(theta, theta @ inst.xt)


def solve_restricted(inst, penalties, init, restriction, config=None,
                     callback=None):
    """Run CD sweeps on the support-restricted problem until the relative
    objective change drops below ``config.rel_obj_tol``.

    ``init`` is not modified. Entries outside ``restriction`` are set to zero
    first. The result has ``converged`` False when ``max_sweeps`` ran out.
    ``callback(sweep, objective)`` is called after every sweep.
    """
    config = config or SolverConfig()
    restriction = _with_fixed_one(restriction, penalties)
    est = _project(inst, init, penalties, restriction)
    pi, pj = _pair_arrays(restriction)
    args = (penalties.tags, *penalties.params)
    xt, v = inst.xt, inst.v
    obj = _objective(est.theta, est.residuals, pi, pj, *args)
    est.converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        big = _sweep(xt, v, est.theta, est.residuals, pi, pj, *args)
        if sweeps % config.residual_refresh_period == 0:
            if est.drift(inst) > config.drift_tol:
                est.refresh(inst)
        new = _objective(est.theta, est.residuals, pi, pj, *args)
        if callback is not None:
            callback(sweeps, new)
        change = abs(obj - new)
        obj = new
        if (change <= config.rel_obj_tol * max(abs(new), 1e-12)
                and big <= config.coord_tol):
            est.converged = True
            break
    est.sweeps = sweeps
    est.objective = obj
    est.active = [(int(i), int(j)) for i, j in zip(pi, pj)]
    return est


def scan_violations(inst, est, penalties, active):
    """Zero pairs outside ``active`` whose coordinate minimizer is nonzero."""
    p = inst.p
    mask = np.zeros((p, p), dtype=bool)
    if active:
        pi, pj = _pair_arrays(active)
        mask[pi, pj] = True
    G = est.residuals @ inst.xtilde
    out_i, out_j = _violations(est.theta, G, inst.v, mask, penalties.tags,
                               *penalties.params)
    return set(zip(list(out_i), list(out_j)))


def active_set_solve(inst, penalties, init, initial_active=(), config=None,
                     callback=None):
    """Alternate restricted CD solves with violation scans.

    Stops when no pair outside the active set violates coordinatewise
    optimality, or after ``config.max_active_rounds`` rounds (then the
    result is flagged unconverged).
    """
    config = config or SolverConfig()
    active = _with_fixed_one(initial_active, penalties)
    active -= set(penalties.pairs(Penalty.ZERO))
    est = init
    sweeps = 0
    for _ in range(config.max_active_rounds):
        est = solve_restricted(inst, penalties, est, active, config, callback)
        sweeps += est.sweeps
        viol = scan_violations(inst, est, penalties, active)
        if not viol:
            est.sweeps = sweeps
            return est
        active |= viol
    est.converged = False
    est.sweeps = sweeps
    return est
