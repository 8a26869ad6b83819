"""Problem, estimate and branch-and-bound node types."""

import dataclasses
import enum
import math

import numpy as np
from numba import njit

from .regularizers import Penalty, PenaltySpec, penalty_value


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Scaled data ``xtilde = X / sqrt(n)`` with cached squared column norms.

    Instances are immutable; use :meth:`with_params` to change penalties.
    ``xt`` is the contiguous transpose used by the CD kernels.
    """

    xtilde: np.ndarray
    lambda0: float
    lambda2: float
    bigM: float = math.inf
    standardized: bool = False
    v: np.ndarray = dataclasses.field(init=False)
    xt: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "xtilde", _readonly(self.xtilde))
        xt = _readonly(self.xtilde.T)
        object.__setattr__(self, "xt", xt)
        object.__setattr__(self, "v", _readonly(np.einsum("ij,ij->i", xt, xt)))
        if self.lambda0 < 0 or self.lambda2 < 0:
            raise ValueError("lambda0 and lambda2 must be nonnegative")
        if not self.bigM > 0:
            raise ValueError("bigM must be positive")

    @property
    def n(self):
        return self.xtilde.shape[0]

    @property
    def p(self):
        return self.xtilde.shape[1]

    def with_params(self, lambda0=None, lambda2=None, bigM=None):
        return ProblemInstance(
            self.xtilde,
            self.lambda0 if lambda0 is None else lambda0,
            self.lambda2 if lambda2 is None else lambda2,
            self.bigM if bigM is None else bigM,
            self.standardized,
        )

    def penalties(self, tag=Penalty.INTERVAL):
        return PenaltySpec.uniform(self.p, tag, self.lambda0, self.lambda2,
                                   self.bigM)

    def metadata(self):
        return {
            "n": self.n,
            "p": self.p,
            "lambda0": self.lambda0,
            "lambda2": self.lambda2,
            "bigM": None if math.isinf(self.bigM) else self.bigM,
            "standardized": self.standardized,
        }


def load_instance(data, lambda0, lambda2, bigM=math.inf, standardize=False):
    """Build a :class:`ProblemInstance` from an ``n x p`` data matrix.

    Columns are optionally mean-centered, then scaled by ``1/sqrt(n)``.
    Raises ``ValueError`` on non-finite entries or an all-zero column.
    """
    X = np.array(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n, p = X.shape
    if n < 2 or p < 2:
        raise ValueError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite entries")
    if standardize:
        X -= X.mean(axis=0)
    zero = np.flatnonzero(~np.any(X != 0, axis=0))
    if zero.size:
        raise ValueError(f"zero column {int(zero[0])}")
    return ProblemInstance(X / math.sqrt(n), float(lambda0), float(lambda2),
                           float(bigM), bool(standardize))


class SymmetricEstimate:
    """Symmetric precision estimate with the residual cache ``r_i = X~ theta_i``.

    ``residuals`` has shape ``(p, n)``: row ``i`` holds ``r_i``. Solvers
    attach ``converged``, ``sweeps``, ``objective`` and ``active``.
    """

    def __init__(self, theta, residuals):
        self.theta = theta
        self.residuals = residuals
        self.converged = True
        self.sweeps = 0
        self.objective = None
        self.active = None

    @classmethod
    def from_theta(cls, inst, theta):
        theta = np.array(theta, dtype=np.float64)
        if theta.shape != (inst.p, inst.p):
            raise ValueError(f"theta must be {inst.p}x{inst.p}")
        if not np.array_equal(theta, theta.T):
            raise ValueError("theta must be symmetric")
        if np.any(np.diag(theta) <= 0):
            raise ValueError("diagonal of theta must be positive")
        return cls(theta, theta @ inst.xt)

    @classmethod
    def diagonal(cls, inst):
        """``diag(1/v)``: the optimum when all off-diagonals are zero."""
        return cls.from_theta(inst, np.diag(1.0 / inst.v))

    @property
    def p(self):
        return self.theta.shape[0]

    def copy(self):
        est = SymmetricEstimate(self.theta.copy(), self.residuals.copy())
        est.converged = self.converged
        est.sweeps = self.sweeps
        est.objective = self.objective
        est.active = None if self.active is None else list(self.active)
        return est

    def drift(self, inst):
        """Max relative deviation of the cached residuals from a recompute."""
        fresh = self.theta @ inst.xt
        scale = max(np.abs(fresh).max(), 1e-300)
        return float(np.abs(fresh - self.residuals).max() / scale)

    def refresh(self, inst):
        self.residuals = self.theta @ inst.xt

    def support(self):
        """Nonzero upper-triangular pairs, lexicographically sorted."""
        iu, ju = np.nonzero(np.triu(self.theta != 0, k=1))
        return list(zip(iu.tolist(), ju.tolist()))


class ZBound(enum.IntEnum):
    RELAXED = 0
    FIXED_ZERO = 1
    FIXED_ONE = 2


@dataclasses.dataclass
class NodeState:
    """A branch-and-bound node.

    ``zbounds`` holds only the fixed pairs ``(i, j)`` with ``i < j``; absent
    pairs are relaxed. ``warm_start`` is the parent's relaxation solution.
    """

    zbounds: dict = dataclasses.field(default_factory=dict)
    warm_support: set = dataclasses.field(default_factory=set)
    lower_bound: float = -math.inf
    depth: int = 0
    relaxation_solution: SymmetricEstimate = None
    warm_start: SymmetricEstimate = None
    node_id: int = 0
    parent_id: int = -1

    def __post_init__(self):
        self.warm_support = set(self.warm_support) | self.fixed_one()

    def fixed_one(self):
        return {k for k, b in self.zbounds.items() if b == ZBound.FIXED_ONE}

    def fixed_zero(self):
        return {k for k, b in self.zbounds.items() if b == ZBound.FIXED_ZERO}

    def penalty_spec(self, inst):
        spec = inst.penalties(Penalty.INTERVAL)
        for pair, b in self.zbounds.items():
            if b == ZBound.FIXED_ZERO:
                spec[pair] = Penalty.ZERO
            elif b == ZBound.FIXED_ONE:
                spec[pair] = Penalty.ONE
        return spec


@dataclasses.dataclass
class Incumbent:
    solution: SymmetricEstimate
    objective: float


@njit(cache=True)
def _penalty_total(theta, tags, lam0, lam2, M):
    p = theta.shape[0]
    total = 0.0
    for i in range(p):
        for j in range(i + 1, p):
            total += penalty_value(theta[i, j], tags[i, j], lam0, lam2, M)
    return total


def _theta_of(est):
    return est.theta if isinstance(est, SymmetricEstimate) else np.asarray(
        est, dtype=np.float64)


def smooth_loss(xt, theta):
    """``sum_i -log(theta_ii) + ||X~ theta_i||^2 / theta_ii``."""
    d = np.diag(theta)
    if np.any(d <= 0):
        raise ValueError("diagonal of theta must be positive")
    R = theta @ xt
    return float(np.sum(-np.log(d) + np.einsum("ij,ij->i", R, R) / d))


def objective_F0(inst, est):
    """l0l2-penalized pseudo-likelihood; ``inf`` if an off-diagonal exceeds M.

    Recomputed from ``theta`` alone; the residual cache is not trusted.
    """
    theta = _theta_of(est)
    smooth = smooth_loss(inst.xt, theta)
    off = theta[np.triu_indices(theta.shape[0], k=1)]
    if np.any(np.abs(off) > inst.bigM):
        return math.inf
    return smooth + inst.lambda0 * np.count_nonzero(off) + inst.lambda2 * float(
        off @ off)


def objective_unified(inst, est, penalties):
    """Smooth loss plus the per-pair penalties of ``penalties``."""
    theta = _theta_of(est)
    smooth = smooth_loss(inst.xt, theta)
    return smooth + _penalty_total(theta, penalties.tags, *penalties.params)
