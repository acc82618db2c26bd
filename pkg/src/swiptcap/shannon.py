"""Shannon-strategy solvers for time-varying peak-power constraints.

The transmitter observes the peak state causally, so coding happens over
tuples (x_1, x_2) with x_i <= a_i and the channel mixes the per-state
conditionals with the state probabilities.  The on-off specialization
collapses the first coordinate to the zero symbol.
"""

from dataclasses import dataclass

import numpy as np

from .channel import harvested_energy, hpa_distort
from .errors import ContractError, DomainError, EscalationError, InfeasibleError
from .infometrics import ExtendedDistribution, MassPointDistribution
from .numerics import QuadratureRule, halfline_nodes
from .solver import (SolveOptions, SolveResult, _maximize_weights,
                     _result_from_weights, _WeightProblem, build_grid,
                     prune_support)
from .verify import kkt_check_extended

_PLOGP_FLOOR = 1e-300


@dataclass(frozen=True)
class StateAlphabet:
    """Peak-power state alphabet {(a_i, p_i)}; solvers support M = 2."""

    states: tuple

    def __post_init__(self):
        states = tuple((float(a), float(p)) for a, p in self.states)
        object.__setattr__(self, "states", states)
        probs = np.array([p for _, p in states])
        amps = np.array([a for a, _ in states])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError("state probabilities must be >= 0 and sum to 1")
        if np.any(amps < 0) or (amps.size > 1 and np.any(np.diff(amps) <= 0)):
            raise DomainError("peaks must be nonnegative, ascending, distinct")

    @property
    def cardinality(self):
        return len(self.states)

    @classmethod
    def from_constraints(cls, constraints):
        return cls(constraints.states)


def build_extended_grid(states, dx):
    """Cartesian product of per-state grids; a zero peak collapses its axis."""
    states = _as_states(states)
    if len(states) != 2:
        raise ContractError("extended grids are built for two-state alphabets")
    axes = []
    for a, _ in states:
        axes.append(np.array([0.0]) if a <= 0 else build_grid(a, dx))
    g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def _as_states(states):
    if isinstance(states, StateAlphabet):
        return states.states
    return tuple((float(a), float(p)) for a, p in states)


def _plogp(v):
    return np.where(v > _PLOGP_FLOOR, v * np.log(np.maximum(v, _PLOGP_FLOOR)), 0.0)


def _extended_problem(tuples, states, constraints, hpa, eh, opts):
    tuples = np.atleast_2d(np.asarray(tuples, dtype=float))
    probs = np.array([p for _, p in states])
    s = 1.0 + hpa_distort(tuples, hpa) ** 2  # (J, M)
    rule = QuadratureRule(nodes=opts.quad_nodes)
    y, w = halfline_nodes(rule, float(s.max()))
    cond = np.einsum("m,kjm->kj", probs,
                     np.exp(-y[:, None, None] / s[None, :, :]) / s[None, :, :])
    log_cond = np.log(np.maximum(cond, _PLOGP_FLOOR))
    h = w @ _plogp(cond)
    cost = (tuples**2) @ probs
    energy = np.asarray(harvested_energy(tuples, hpa, eh), dtype=float) @ probs
    return _WeightProblem(labels=tuples, cond=cond, log_cond=log_cond, qw=w,
                          h=h, cost=cost, energy=energy,
                          p_cap=constraints.avg_power,
                          e_req=constraints.e_req)


def solve_extended(states, constraints, hpa, eh, opts=None, q0=None):
    """Maximize the extended-channel mutual information on the product grid."""
    opts = opts or SolveOptions()
    states = _as_states(states)
    if tuple(states) != tuple(constraints.states):
        raise ContractError("state alphabet must match constraints.states")
    for a, _ in states:
        if a > 0 and opts.dx > a / 10 + 1e-12:
            raise ContractError("grid step must be at most peak/10 per state")
    tuples = build_extended_grid(states, opts.dx)
    prob = _extended_problem(tuples, states, constraints, hpa, eh, opts)
    q, rate, lam1, lam2, gap, it = _maximize_weights(prob, opts, q0=q0)
    return _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                constraints, hpa, eh, "extended", opts,
                                meta={"states": states})


def _onoff_problem(grid, p2, constraints, hpa, eh, opts):
    grid = np.asarray(grid, dtype=float)
    s = 1.0 + hpa_distort(grid, hpa) ** 2
    rule = QuadratureRule(nodes=opts.quad_nodes)
    y, w = halfline_nodes(rule, float(s.max()))
    cond = (1.0 - p2) * np.exp(-y)[:, None] \
        + p2 * np.exp(-np.outer(y, 1.0 / s)) / s[None, :]
    log_cond = np.log(np.maximum(cond, _PLOGP_FLOOR))
    h = w @ _plogp(cond)
    # off state transmits the zero symbol: it contributes no power but does
    # contribute the floor energy E(0) = 1, matching the extended problem
    # with a zero first peak
    cost = p2 * grid**2
    energy = (1.0 - p2) + p2 * np.asarray(harvested_energy(grid, hpa, eh),
                                          dtype=float)
    return _WeightProblem(labels=grid, cond=cond, log_cond=log_cond, qw=w,
                          h=h, cost=cost, energy=energy,
                          p_cap=constraints.avg_power,
                          e_req=constraints.e_req)


def solve_onoff(a2, p2, constraints, hpa, eh, opts=None, q0=None):
    """On-off energy arrivals: peak a2 with probability p2, silence otherwise."""
    if not (0.0 <= p2 <= 1.0):
        raise DomainError("p2 must lie in [0, 1]")
    if a2 <= 0:
        raise DomainError("a2 must be positive")
    opts = opts or SolveOptions()
    meta = {"p2": p2, "states": ((0.0, 1.0 - p2), (float(a2), p2))}
    if p2 == 0.0:
        if constraints.e_req > 1.0 + 1e-12:
            raise InfeasibleError(
                "with p2 = 0 no energy can be delivered beyond the floor",
                constraint="energy")
        dist = MassPointDistribution(np.array([0.0]), np.array([1.0]),
                                     peak=float(a2))
        return SolveResult(distribution=dist, rate=0.0, power=0.0, energy=1.0,
                           lam1=0.0, lam2=0.0, gap=0.0, iterations=0,
                           constraints=constraints, hpa=hpa, eh=eh,
                           kind="onoff", meta=dict(meta, dx=opts.dx, opts=opts))
    if opts.dx > a2 / 10 + 1e-12:
        raise ContractError("grid step must be at most a2/10")
    grid = build_grid(a2, opts.dx)
    prob = _onoff_problem(grid, p2, constraints, hpa, eh, opts)
    q, rate, lam1, lam2, gap, it = _maximize_weights(prob, opts, q0=q0)
    return _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                constraints, hpa, eh, "onoff", opts, meta=meta)


def embed_onoff(dist, p2, a2=None):
    """Lift an on-off distribution over x2 to the extended-tuple form."""
    peak = float(a2 if a2 is not None else dist.peak)
    pts = np.column_stack([np.zeros(dist.locations.size), dist.locations])
    return ExtendedDistribution(pts, dist.weights,
                                ((0.0, 1.0 - p2), (peak, p2)))


def _escalation_seed(states, n_start):
    """Initial support: {(0,0), (a1,a2)} plus diagonal fill beyond n = 2."""
    (a1, _), (a2, _) = states
    pts = [np.array([0.0, 0.0]), np.array([a1, a2])]
    k = n_start - 2
    for j in range(1, k + 1):
        frac = j / (k + 1)
        pts.append(np.array([a1 * frac, a2 * frac]))
    pts = np.unique(np.round(np.array(pts), 12), axis=0)
    return pts


def _refine_tuples(pts, states, constraints, hpa, eh, opts):
    """Weights plus coordinate search on tuple coordinates, step -> dx/10."""
    peaks = np.array([a for a, _ in states])

    def opt(tuples):
        prob = _extended_problem(tuples, states, constraints, hpa, eh, opts)
        return prob, _maximize_weights(prob, opts)

    try:
        prob, sol = opt(pts)
    except InfeasibleError:
        pts = np.unique(np.vstack([pts, [[0.0, 0.0]], [peaks]]), axis=0)
        prob, sol = opt(pts)
    best = sol[1]
    step = opts.dx
    while step >= opts.dx / 10 - 1e-15:
        improved = True
        guard = 0
        while improved and guard < 20:
            improved = False
            guard += 1
            for i in range(pts.shape[0]):
                for m in range(2):
                    if peaks[m] <= 0:
                        continue
                    for delta in (step, -step):
                        trial = pts.copy()
                        trial[i, m] = min(max(trial[i, m] + delta, 0.0), peaks[m])
                        trial = np.unique(trial, axis=0)
                        if trial.shape[0] < pts.shape[0]:
                            continue
                        try:
                            prob_t, sol_t = opt(trial)
                        except InfeasibleError:
                            continue
                        if sol_t[1] > best + 1e-12:
                            pts, prob, sol, best = trial, prob_t, sol_t, sol_t[1]
                            improved = True
        step /= 2.0
    return pts, prob, sol


def escalate_support(states, constraints, hpa, eh, tol=1e-4, n_start=2,
                     opts=None):
    """Grow the support cardinality until the certificate passes.

    Starts from the two-point candidate {(0,0), (a1,a2)}, optimizes weights
    and locations at each cardinality, and stops at the first support whose
    pruned result passes the extended KKT check at ``tol``.
    """
    opts = opts or SolveOptions()
    states = _as_states(states)
    if len(states) != 2:
        raise ContractError("escalation is implemented for two-state alphabets")
    if n_start < 2:
        raise ContractError("n_start must be >= 2")
    grid_size = build_extended_grid(states, opts.dx).shape[0]
    pts = _escalation_seed(states, n_start)
    best = None
    while True:
        pts_r, prob, sol = _refine_tuples(pts, states, constraints, hpa, eh,
                                          opts)
        q, rate, lam1, lam2, gap, it = sol
        result = _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                      constraints, hpa, eh, "extended", opts,
                                      meta={"states": states})
        result = prune_support(result, opts)
        report = kkt_check_extended(result, states, constraints, hpa, eh,
                                    tol=tol)
        if best is None or result.rate > best[0].rate:
            best = (result, report)
        if report.verdict:
            return result.distribution
        if pts_r.shape[0] + 1 > grid_size:
            raise EscalationError(
                f"no certificate up to support size {pts_r.shape[0]}",
                best=best[0])
        worst = np.asarray(report.worst_point, dtype=float)
        pts = np.unique(np.vstack([pts_r, worst[None, :]]), axis=0)
