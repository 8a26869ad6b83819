"""Scalar penalties used by the coordinate-descent solvers.

Four per-pair regularizers appear in the solver:

* ``INTERVAL`` -- the perspective relaxation ``psi`` of an indicator relaxed
  to ``z in [0, 1]`` (a boxed reverse-Huber penalty),
* ``ZERO`` -- the indicator fixed to 0, i.e. the constraint ``theta == 0``,
* ``ONE`` -- the indicator fixed to 1: ``lambda0 + lambda2 * theta**2`` with
  ``|theta| <= M``,
* ``L0L2`` -- the nonconvex ``lambda0 * 1{theta != 0} + lambda2 * theta**2``
  with ``|theta| <= M``, used when searching for incumbents.

Everything here is a scalar function compiled with numba so the CD kernels
can call it directly. ``M`` may be ``inf`` wherever that is meaningful.
"""

import enum
import math

import numpy as np
from numba import njit

INF = math.inf


class Penalty(enum.IntEnum):
    INTERVAL = 0
    ZERO = 1
    ONE = 2
    L0L2 = 3
    FORBIDDEN = 1  # alias of ZERO: chi{theta == 0}


_INTERVAL = 0
_ZERO = 1
_ONE = 2
_L0L2 = 3


@njit(cache=True)
def boxed_soft_threshold(x, lam, M):
    """Prox of ``lam * |t| + chi{|t| <= M}`` evaluated at ``x``."""
    ax = abs(x)
    if ax <= lam:
        return 0.0
    return math.copysign(min(ax - lam, M), x)


@njit(cache=True)
def _linear_regime(lam0, lam2, M):
    # True when sqrt(lam0/lam2) > M, i.e. psi is linear on the whole box.
    if lam2 <= 0.0:
        return True
    return math.sqrt(lam0 / lam2) > M


@njit(cache=True)
def zero_threshold(lam0, lam2, M):
    """Largest ``|x|`` that ``prox_psi`` (and ``conj_psi``) maps to zero."""
    if not _linear_regime(lam0, lam2, M):
        return 2.0 * math.sqrt(lam0 * lam2)
    c = 0.0
    if M < INF:
        c += lam0 / M
        c += lam2 * M
    return c


@njit(cache=True)
def psi_value(theta, lam0, lam2, M):
    a = abs(theta)
    if a > M:
        return INF
    if a == 0.0:
        return 0.0
    if _linear_regime(lam0, lam2, M):
        return zero_threshold(lam0, lam2, M) * a
    if a <= math.sqrt(lam0 / lam2):
        return 2.0 * math.sqrt(lam0 * lam2) * a
    return lam0 + lam2 * a * a


@njit(cache=True)
def prox_psi(x, lam0, lam2, M):
    """argmin_t 0.5 * (t - x)**2 + psi(t)."""
    if _linear_regime(lam0, lam2, M):
        return boxed_soft_threshold(x, zero_threshold(lam0, lam2, M), M)
    c = 2.0 * math.sqrt(lam0 * lam2)
    if abs(x) <= c + math.sqrt(lam0 / lam2):
        return boxed_soft_threshold(x, c, M)
    return boxed_soft_threshold(x / (1.0 + 2.0 * lam2), 0.0, M)


@njit(cache=True)
def prox_phi(x, z, lam0, lam2, M):
    if z == 0:
        return 0.0
    return boxed_soft_threshold(x / (1.0 + 2.0 * lam2), 0.0, M)


@njit(cache=True)
def _l0l2_parts(x, lam0, lam2, M):
    # Returns the nonzero candidate and |x| minus the threshold at which the
    # candidate and zero have equal prox objective.
    k = 1.0 + 2.0 * lam2
    ax = abs(x)
    if ax <= k * M:
        return x / k, ax - math.sqrt(2.0 * lam0 * k)
    return math.copysign(M, x), ax - ((0.5 + lam2) * M + lam0 / M)


@njit(cache=True)
def prox_l0l2_pick(x, lam0, lam2, M):
    """Single-valued prox of the l0l2 penalty; ties resolve to zero."""
    cand, gap = _l0l2_parts(x, lam0, lam2, M)
    if gap > 0.0:
        return cand
    return 0.0


def prox_l0l2(x, lam0, lam2, M):
    """Full argmin set of ``0.5*(t - x)**2 + lam0*1{t != 0} + lam2*t**2``
    over ``|t| <= M``, as a sorted tuple of one or two values."""
    cand, gap = _l0l2_parts(float(x), float(lam0), float(lam2), float(M))
    if gap > 0.0:
        return (cand,)
    if gap == 0.0 and cand != 0.0:
        return tuple(sorted((0.0, cand)))
    return (0.0,)


@njit(cache=True)
def conj_psi(alpha, lam0, lam2, M):
    """Convex conjugate ``sup_t alpha*t - psi(t)``."""
    aa = abs(alpha)
    c = zero_threshold(lam0, lam2, M)
    if aa <= c:
        return 0.0
    if M == INF and lam2 <= 0.0:
        return INF
    if not _linear_regime(lam0, lam2, M) and aa <= 2.0 * lam2 * M:
        return aa * aa / (4.0 * lam2) - lam0
    return M * aa - (lam0 + lam2 * M * M)


@njit(cache=True)
def conj_phi(alpha, z, lam0, lam2, M):
    if z == 0:
        return 0.0
    aa = abs(alpha)
    if lam2 > 0.0:
        if aa <= 2.0 * lam2 * M:
            return aa * aa / (4.0 * lam2) - lam0
        return M * aa - (lam0 + lam2 * M * M)
    if M == INF:
        raise ValueError("conjugate unbounded: z=1, lambda2=0, M=inf")
    return M * aa - lam0


@njit(cache=True)
def penalty_value(theta, tag, lam0, lam2, M):
    if tag == _INTERVAL:
        return psi_value(theta, lam0, lam2, M)
    if tag == _ZERO:
        return 0.0 if theta == 0.0 else INF
    if abs(theta) > M:
        return INF
    if tag == _ONE:
        return lam0 + lam2 * theta * theta
    if theta == 0.0:
        return 0.0
    return lam0 + lam2 * theta * theta


@njit(cache=True)
def conj_value(alpha, tag, lam0, lam2, M):
    if tag == _INTERVAL:
        return conj_psi(alpha, lam0, lam2, M)
    if tag == _ZERO:
        return 0.0
    if tag == _ONE:
        return conj_phi(alpha, 1, lam0, lam2, M)
    raise ValueError("the l0l2 penalty is nonconvex; no dual bound")


@njit(cache=True)
def quad_min(a, b, tag, lam0, lam2, M):
    """argmin_t a*t**2 + b*t + h(t) for the penalty ``tag`` (ties -> 0).

    Rescales the penalty by 1/(2a) and evaluates the matching prox at
    ``-b / (2a)``.
    """
    s = 0.5 / a
    x = -b * s
    if tag == _INTERVAL:
        return prox_psi(x, lam0 * s, lam2 * s, M)
    if tag == _ZERO:
        return 0.0
    if tag == _ONE:
        return prox_phi(x, 1, lam0 * s, lam2 * s, M)
    return prox_l0l2_pick(x, lam0 * s, lam2 * s, M)


def quad_oracle(a, b, tag, lam0, lam2, M):
    """Minimizer of ``a*t**2 + b*t + h(t)``.

    Returns a float, except for ``Penalty.L0L2`` where the full argmin set is
    returned as a tuple (see :func:`prox_l0l2`).
    """
    if not a > 0:
        raise ValueError(f"quadratic coefficient must be positive, got {a}")
    tag = Penalty(tag)
    if tag == Penalty.L0L2:
        s = 0.5 / a
        return prox_l0l2(-b * s, lam0 * s, lam2 * s, M)
    return quad_min(float(a), float(b), int(tag), float(lam0), float(lam2),
                    float(M))


class PenaltySpec:
    """Per-pair penalty tags plus the shared ``(lambda0, lambda2, M)``.

    ``tags`` is a symmetric ``(p, p)`` int8 array; the diagonal is unused.
    """

    def __init__(self, tags, lambda0, lambda2, bigM):
        tags = np.asarray(tags, dtype=np.int8)
        if tags.ndim != 2 or tags.shape[0] != tags.shape[1]:
            raise ValueError("tags must be a square matrix")
        if not np.array_equal(tags, tags.T):
            raise ValueError("tags must be symmetric")
        if lambda0 < 0 or lambda2 < 0:
            raise ValueError("lambda0 and lambda2 must be nonnegative")
        if not bigM > 0:
            raise ValueError("bigM must be positive")
        self.tags = tags
        self.lambda0 = float(lambda0)
        self.lambda2 = float(lambda2)
        self.bigM = float(bigM)

    @classmethod
    def uniform(cls, p, tag, lambda0, lambda2, bigM):
        return cls(np.full((p, p), int(tag), dtype=np.int8), lambda0, lambda2,
                   bigM)

    @property
    def p(self):
        return self.tags.shape[0]

    @property
    def params(self):
        return self.lambda0, self.lambda2, self.bigM

    def __getitem__(self, pair):
        i, j = pair
        return Penalty(int(self.tags[i, j]))

    def __setitem__(self, pair, tag):
        i, j = pair
        self.tags[i, j] = self.tags[j, i] = int(tag)

    def pairs(self, tag):
        """Upper-triangular pairs carrying ``tag``, in lexicographic order."""
        iu, ju = np.nonzero(np.triu(self.tags == int(tag), k=1))
        return list(zip(iu.tolist(), ju.tolist()))

    def copy(self):
        return PenaltySpec(self.tags.copy(), *self.params)
