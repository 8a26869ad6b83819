"""Synthetic precision matrices, Gaussian sampling, metrics and tuning."""

import concurrent.futures
import dataclasses
import math

import numpy as np
import scipy.optimize

from .bnb import BnBConfig, initial_incumbent, solve_bnb
from .cd import SolverConfig
from .model import load_instance


@dataclasses.dataclass
class GroundTruth:
    theta_star: np.ndarray
    generator: str
    k: int
    cond_target: float
    seed: int

    @property
    def p(self):
        return self.theta_star.shape[0]

    def covariance(self):
        return np.linalg.inv(self.theta_star)

    def big_m(self):
        """Default box: twice the largest entry of the truth."""
        return 2.0 * float(np.abs(self.theta_star).max())


def _normalize(theta):
    # D theta D with D_ii = sqrt((theta^-1)_ii) gives unit marginal variances.
    d = np.sqrt(np.diag(np.linalg.inv(theta)))
    out = theta * d[:, None] * d[None, :]
    return (out + out.T) / 2.0


def _cond(theta):
    w = np.linalg.eigvalsh(theta)
    return w[-1] / w[0] if w[0] > 0 else math.inf


def _calibrate(B, cond_target):
    """Shift ``B + delta*I`` so the normalized matrix hits ``cond_target``."""
    if not cond_target > 1:
        raise ValueError("condition number target must exceed 1")
    w = np.linalg.eigvalsh(B)
    if w[-1] - w[0] < 1e-12:
        raise ValueError("condition number target is not achievable: "
                         "B has a single eigenvalue")
    lo = -w[0] + 1e-12 * max(1.0, abs(w[0]))
    hi = -w[0] + max(1.0, w[-1] - w[0])
    eye = np.eye(B.shape[0])

    def f(delta):
        return math.log(_cond(_normalize(B + delta * eye))) - math.log(
            cond_target)

    while f(hi) > 0:
        hi = -w[0] + 2.0 * (hi + w[0])
    if f(lo) < 0:
        raise ValueError(
            f"condition number target {cond_target} is not achievable "
            f"(max {math.exp(f(lo)) * cond_target:.4g})")
    delta = scipy.optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-12)
    return _normalize(B + delta * eye)


def generate_uniform(p, k, cond_target, seed):
    """Entries of B are 0.5 with probability k/(2p), then symmetrized."""
    if p < 2 or not 0 < k < p:
        raise ValueError("need p >= 2 and 0 < k < p")
    rng = np.random.default_rng(seed)
    B = np.where(rng.random((p, p)) < k / (2.0 * p), 0.5, 0.0)
    B = (B + B.T) / 2.0
    return GroundTruth(_calibrate(B, cond_target), "uniform", k, cond_target,
                       seed)


def generate_banded(p, k, cond_target, seed=0):
    """``b_ij = 0.5**|i-j|`` inside a band of half-width k/2."""
    if k % 2 or not 2 <= k < p:
        raise ValueError("need an even bandwidth 2 <= k < p")
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])
    B = np.where(dist <= k // 2, 0.5 ** dist, 0.0)
    return GroundTruth(_calibrate(B, cond_target), "banded", k, cond_target,
                       seed)


def sample_gaussian(truth, n, seed):
    """``n`` rows drawn i.i.d. from N(0, theta_star^-1)."""
    try:
        L = np.linalg.cholesky(truth.covariance())
    except np.linalg.LinAlgError as err:
        raise ValueError("covariance is not positive definite") from err
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, truth.p)) @ L.T


def _offdiag_support(theta):
    iu = np.triu_indices(theta.shape[0], k=1)
    return theta[iu] != 0


def mcc(theta_star, theta_hat):
    """Matthews correlation of the off-diagonal supports (0 if degenerate)."""
    theta_star = np.asarray(theta_star)
    theta_hat = np.asarray(theta_hat)
    if theta_star.shape != theta_hat.shape:
        raise ValueError("shape mismatch")
    s, h = _offdiag_support(theta_star), _offdiag_support(theta_hat)
    tp = float(np.sum(s & h))
    tn = float(np.sum(~s & ~h))
    fp = float(np.sum(~s & h))
    fn = float(np.sum(s & ~h))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def eval_metrics(theta_star, theta_hat):
    """Relative Frobenius error, MCC, and NNZ (all entries, diagonal included)."""
    theta_star = np.asarray(theta_star, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if theta_star.shape != theta_hat.shape:
        raise ValueError("shape mismatch")
    if np.any(np.diag(theta_hat) <= 0):
        raise ValueError("estimate must have a positive diagonal")
    frob = np.linalg.norm(theta_hat - theta_star) / np.linalg.norm(theta_star)
    return {"frob_rel": float(frob), "mcc": mcc(theta_star, theta_hat),
            "nnz": int(np.count_nonzero(theta_hat))}


def pseudo_likelihood_loss(data, theta, standardize=False):
    """Unpenalized pseudo-likelihood of ``theta`` on held-out data."""
    X = np.asarray(data, dtype=np.float64)
    if standardize:
        X = X - X.mean(axis=0)
    R = theta @ (X.T / math.sqrt(X.shape[0]))
    d = np.diag(theta)
    return float(np.sum(-np.log(d) + np.einsum("ij,ij->i", R, R) / d))


def default_grid(n, p, size=4):
    """Log-spaced values from sqrt(log p / n)/100 to 100*sqrt(log p / n)."""
    s = math.sqrt(math.log(p) / n)
    return np.geomspace(s / 100.0, 100.0 * s, size)


@dataclasses.dataclass
class TuneResult:
    lambda0: float
    lambda2: float
    fit: object
    table: list


def fit(inst, mode="heuristic", solver=None, bnb=None):
    """Solve one instance; returns ``(estimate, objective, converged)``."""
    if mode == "heuristic":
        inc = initial_incumbent(inst, solver)
        return inc.solution, inc.objective, inc.solution.converged
    if mode == "exact":
        cfg = bnb or BnBConfig()
        if solver is not None:
            cfg = dataclasses.replace(cfg, solver=solver)
        res = solve_bnb(inst, cfg)
        return (res.incumbent.solution, res.incumbent.objective,
                res.status == "optimal")
    raise ValueError(f"unknown mode {mode!r}")


def tune_grid(train, validation, bigM=2.0, lambda0_grid=None,
              lambda2_grid=None, mode="heuristic", grid_size=4,
              standardize=False, solver=None, bnb=None, threads=1):
    """Fit every ``(lambda0, lambda2)`` on ``train``; keep the one with the
    smallest validation pseudo-likelihood (ties go to the sparser fit).

    Unconverged fits are recorded in the table but never selected.
    """
    train = np.asarray(train, dtype=np.float64)
    n, p = train.shape
    g0 = default_grid(n, p, grid_size) if lambda0_grid is None else lambda0_grid
    g2 = default_grid(n, p, grid_size) if lambda2_grid is None else lambda2_grid
    points = [(float(a), float(b)) for a in g0 for b in g2]
    if not points:
        raise ValueError("empty tuning grid")
    base = load_instance(train, points[0][0], points[0][1], bigM, standardize)

    def run(point):
        inst = base.with_params(*point)
        est, obj, ok = fit(inst, mode, solver or SolverConfig(), bnb)
        loss = pseudo_likelihood_loss(validation, est.theta, standardize)
        nnz = int(np.count_nonzero(np.triu(est.theta, k=1)))
        row = {"lambda0": point[0], "lambda2": point[1], "val_loss": loss,
               "objective": obj, "nnz_offdiag": nnz, "converged": bool(ok)}
        return row, est

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(pt) for pt in points]
    table = [row for row, _ in results]
    ok = [k for k, row in enumerate(table) if row["converged"]]
    if not ok:
        raise RuntimeError("no grid point converged")
    k = min(ok, key=lambda k: (table[k]["val_loss"], table[k]["nnz_offdiag"]))
    return TuneResult(table[k]["lambda0"], table[k]["lambda2"], results[k][1],
                      table)
