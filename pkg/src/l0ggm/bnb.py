"""Nonlinear branch-and-bound over the pair indicators ``z_ij``.

Each node solves its perspective relaxation with active-set CD, certifies a
lower bound from the primal-derived dual point, tries to improve the
incumbent from the relaxation's support, and branches on the most
fractional implied ``z``. Nodes are explored breadth-first.
"""

import collections
import dataclasses
import json
import math
import time

import numpy as np

from .cd import SolverConfig, active_set_solve, solve_restricted
from .duality import certified_node_bound
from .model import Incumbent, NodeState, SymmetricEstimate, ZBound, objective_F0
from .regularizers import Penalty


@dataclasses.dataclass
class BnBConfig:
    gap_tol: float = 0.05
    node_limit: int = None
    time_limit: float = None
    solver: SolverConfig = dataclasses.field(default_factory=SolverConfig)
    int_tol: float = 1e-6
    incumbent_modes: tuple = ("support", "rounded")
    depth_first: bool = False
    bound_method: str = "sparse"
    dual_retries: int = 5
    screen_frac: float = 0.05
    node_log: object = None  # writable text stream for JSON-lines records


@dataclasses.dataclass
class BnBResult:
    incumbent: Incumbent
    lower_bound: float
    gap: float
    status: str
    nodes: int = 0
    pruned: int = 0
    incumbent_updates: int = 0
    elapsed: float = 0.0

    @property
    def objective(self):
        return self.incumbent.objective


def implied_z(theta, lam0, lam2, M):
    """Optimal relaxed indicator for ``theta`` in the perspective penalty."""
    a = abs(theta)
    if a == 0:
        return 0.0
    if lam2 > 0 and math.sqrt(lam0 / lam2) <= M:
        r = math.sqrt(lam0 / lam2)
        return 1.0 if a >= r else a / r
    return min(a / M, 1.0)


def select_branch_pair(inst, node, solution, int_tol=1e-6):
    """Relaxed pair whose implied ``z`` is closest to 1/2.

    Returns ``None`` when every relaxed pair is integral within ``int_tol``.
    Ties go to the lexicographically smallest pair.
    """
    best, best_dist = None, math.inf
    for i, j in solution.support():
        if (i, j) in node.zbounds:
            continue
        z = implied_z(solution.theta[i, j], inst.lambda0, inst.lambda2,
                      inst.bigM)
        if z <= int_tol or z >= 1.0 - int_tol:
            continue
        dist = abs(z - 0.5)
        if dist < best_dist:
            best, best_dist = (i, j), dist
    return best


def _incumbent_spec(inst, support):
    spec = inst.penalties(Penalty.ZERO)
    for pair in support:
        spec[pair] = Penalty.L0L2
    return spec


def make_incumbent(inst, node, relaxation_solution, mode="support",
                   config=None, upper_bound=math.inf):
    """Search for an integral solution on the support of the relaxation.

    ``mode="support"`` keeps pairs with ``z > 0``; ``mode="rounded"`` keeps
    ``z >= 1/2``. Pairs fixed to one are always kept, pairs fixed to zero
    never. The l0l2 problem on that support is solved by CD starting from
    the relaxation solution restricted to it.
    """
    lam0, lam2, M = inst.lambda0, inst.lambda2, inst.bigM
    zero = node.fixed_zero()
    support = set(node.fixed_one())
    for i, j in relaxation_solution.support():
        if (i, j) in zero:
            continue
        z = implied_z(relaxation_solution.theta[i, j], lam0, lam2, M)
        if (z > 0) if mode == "support" else (z >= 0.5):
            support.add((i, j))
    spec = _incumbent_spec(inst, support)
    est = solve_restricted(inst, spec, relaxation_solution, support, config)
    obj = objective_F0(inst, est)
    if not est.converged and obj > upper_bound:
        return None
    return Incumbent(est, obj)


def screening_support(inst, frac):
    """Per row, the ``ceil(frac * (p - 1))`` most correlated partners."""
    p = inst.p
    m = int(math.ceil(frac * (p - 1)))
    if m <= 0:
        return set()
    s = 1.0 / np.sqrt(inst.v)
    corr = np.abs(inst.xt @ inst.xtilde) * s[:, None] * s[None, :]
    np.fill_diagonal(corr, -1.0)
    out = set()
    for i in range(p):
        # stable sort: ties resolved by index
        for j in np.argsort(-corr[i], kind="stable")[:m]:
            out.add((min(i, int(j)), max(i, int(j))))
    return out


def initial_incumbent(inst, config=None, screen_frac=0.05, callback=None):
    """Active-set CD on the l0l2 problem from ``diag(1/v)``.

    The initial active set comes from correlation screening. This is also
    the heuristic (non-exact) solver.
    """
    spec = inst.penalties(Penalty.L0L2)
    est = active_set_solve(inst, spec, SymmetricEstimate.diagonal(inst),
                           screening_support(inst, screen_frac), config,
                           callback)
    return Incumbent(est, objective_F0(inst, est))


def _gap(ub, lb):
    if ub == lb:
        return 0.0
    if not math.isfinite(lb) or ub == 0:
        return math.inf
    return (ub - lb) / abs(ub)


def _prunable(bound, ub, gap_tol):
    return math.isfinite(ub) and bound >= ub - gap_tol * abs(ub)


def solve_bnb(inst, config=None):
    """Exact search; stops once the relative gap is at most ``gap_tol``.

    ``status`` is ``"optimal"`` when the gap tolerance was met, otherwise
    ``"node_limit"`` or ``"time_limit"``.
    """
    config = config or BnBConfig()
    if not math.isfinite(inst.bigM):
        raise ValueError("branch-and-bound needs a finite bigM")
    if not inst.lambda0 > 0:
        raise ValueError("branch-and-bound needs lambda0 > 0")
    t0 = time.perf_counter()
    scfg = config.solver
    best = initial_incumbent(inst, scfg, config.screen_frac)
    result = BnBResult(best, -math.inf, math.inf, "optimal")

    def log(record):
        if config.node_log is not None:
            config.node_log.write(json.dumps(record) + "\n")

    def offer(cand):
        nonlocal best
        if cand is not None and cand.objective < best.objective:
            best = cand
            result.incumbent_updates += 1
            return True
        return False

    root = NodeState(warm_support=set(best.solution.support()),
                     warm_start=best.solution)
    queue = collections.deque([root])
    closed_min = math.inf
    next_id = 1
    while True:
        lb = min([closed_min, best.objective] + [n.lower_bound for n in queue])
        result.gap = _gap(best.objective, lb)
        result.lower_bound = lb
        if not queue or result.gap <= config.gap_tol:
            result.status = "optimal"
            break
        if (config.time_limit is not None
                and time.perf_counter() - t0 >= config.time_limit):
            result.status = "time_limit"
            break
        if config.node_limit is not None and result.nodes >= config.node_limit:
            result.status = "node_limit"
            break

        node = queue.pop() if config.depth_first else queue.popleft()
        record = {"id": node.node_id, "parent": node.parent_id,
                  "depth": node.depth, "bound": None, "pruned": None,
                  "incumbent_improved": False, "branch": None}
        if _prunable(node.lower_bound, best.objective, config.gap_tol):
            closed_min = min(closed_min, node.lower_bound)
            result.pruned += 1
            record.update(bound=node.lower_bound, pruned="bound")
            log(record)
            continue

        result.nodes += 1
        est, bound = certified_node_bound(inst, node, scfg,
                                          config.dual_retries,
                                          config.bound_method)
        node.relaxation_solution = est
        node.lower_bound = max(bound, node.lower_bound)
        record["bound"] = node.lower_bound

        improved = False
        for mode in config.incumbent_modes:
            cand = make_incumbent(inst, node, est, mode, scfg, best.objective)
            improved |= offer(cand)
        pair = select_branch_pair(inst, node, est, config.int_tol)
        if pair is None:
            improved |= offer(Incumbent(est, objective_F0(inst, est)))
        record["incumbent_improved"] = improved

        if _prunable(node.lower_bound, best.objective, config.gap_tol):
            closed_min = min(closed_min, node.lower_bound)
            result.pruned += 1
            record["pruned"] = "bound"
        elif pair is None:
            closed_min = min(closed_min, node.lower_bound)
            record["pruned"] = "integral"
        else:
            record["branch"] = list(pair)
            support = set(est.support())
            for zb in (ZBound.FIXED_ZERO, ZBound.FIXED_ONE):
                zbounds = dict(node.zbounds)
                zbounds[pair] = zb
                warm = support - {pair} if zb == ZBound.FIXED_ZERO else support
                queue.append(NodeState(
                    zbounds=zbounds, warm_support=warm,
                    lower_bound=node.lower_bound, depth=node.depth + 1,
                    warm_start=est, node_id=next_id,
                    parent_id=node.node_id))
                next_id += 1
        node.warm_start = None
        log(record)

    result.incumbent = best
    result.elapsed = time.perf_counter() - t0
    return result
