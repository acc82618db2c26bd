"""Concave maximization of mutual information over weights on a fixed grid.

The engine is conditional-gradient (Frank-Wolfe): each iteration linearizes
I at the current weights (the gradient component at grid point x is the
mutual-information density i(x; F)), solves a three-constraint linear
program over the polytope {q >= 0, sum q = 1, power <= P, energy >= E_req},
takes an exact line-search step found by bisection on the scalar concave
section, and then re-optimizes the weights on the current active support
(a fully-corrective step; plain Frank-Wolfe's O(1/k) gap cannot reach the
default 1e-6 tolerance in reasonable time).  The Lagrangian upper bound
built from the subproblem duals certifies the final gap, and the
multipliers are refined by one nonnegative least-squares fit of the
support equalities.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog, minimize, nnls

from .channel import harvested_energy, hpa_distort
from .errors import AccuracyError, ContractError, DomainError, InfeasibleError
from .infometrics import (ExtendedDistribution, MassPointDistribution,
                          average_energy, average_power, mixture_mi,
                          mutual_information)
from .numerics import QuadratureRule, halfline_nodes

_WEIGHT_FLOOR = 1e-12  # weights below this are numerically zero
_FEAS_SLACK = 1e-9


@dataclass(frozen=True)
class SolveOptions:
    dx: float = 0.02
    gap_tol: float = 1e-6
    max_iter: int = 500
    prune_threshold: float = 1e-7
    merge_radius: float = 1e-9
    quad_nodes: int = 256

    def __post_init__(self):
        if self.dx <= 0:
            raise DomainError("grid step must be positive")
        if self.gap_tol <= 0:
            raise DomainError("duality-gap tolerance must be positive")


@dataclass
class SolveResult:
    distribution: object  # MassPointDistribution or ExtendedDistribution
    rate: float  # nats per channel use
    power: float
    energy: float
    lam1: float
    lam2: float
    gap: float
    iterations: int
    constraints: object
    hpa: object
    eh: object
    kind: str = "static"
    meta: dict = field(default_factory=dict)


def build_grid(A, dx):
    """{0, dx, 2 dx, ...} with the peak A always included."""
    if A <= 0 or dx <= 0 or dx > A:
        raise DomainError("need 0 < dx <= A")
    n = int(math.floor(A / dx + 1e-9))
    grid = np.arange(n + 1) * dx
    if grid[-1] < A - 1e-9 * max(1.0, A):
        grid = np.append(grid, A)
    else:
        grid[-1] = A
    return grid


@dataclass
class _WeightProblem:
    """Discretized concave program shared by the static and mixture solvers."""

    labels: np.ndarray      # (J,) amplitudes or (J, M) tuples
    cond: np.ndarray        # (K, J) conditional density at quadrature nodes
    log_cond: np.ndarray    # (K, J)
    qw: np.ndarray          # (K,) quadrature weights
    h: np.ndarray           # (J,) int cond * log(cond) dy
    cost: np.ndarray        # (J,) power map
    energy: np.ndarray      # (J,) harvested-energy map
    p_cap: float
    e_req: float

    @property
    def drop_ap(self):
        return float(self.cost.max()) <= self.p_cap + 1e-12

    @property
    def drop_eh(self):
        return self.e_req <= float(self.energy.min()) + 1e-12


def _static_problem(grid, constraints, hpa, eh, opts):
    grid = np.asarray(grid, dtype=float)
    s = 1.0 + hpa_distort(grid, hpa) ** 2
    rule = QuadratureRule(nodes=opts.quad_nodes)
    y, w = halfline_nodes(rule, float(s.max()))
    log_cond = -np.log(s)[None, :] - np.outer(y, 1.0 / s)
    cond = np.exp(log_cond)
    h = -np.log(s) - 1.0  # exponential with scale s: int p log p = -log s - 1
    return _WeightProblem(
        labels=grid, cond=cond, log_cond=log_cond, qw=w, h=h,
        cost=grid**2,
        energy=np.asarray(harvested_energy(grid, hpa, eh), dtype=float),
        p_cap=constraints.avg_power, e_req=constraints.e_req)


def _energy_lp(cost, energy, p_cap):
    """Max sum q*energy s.t. simplex and sum q*cost <= p_cap."""
    J = cost.size
    res = linprog(-energy, A_ub=cost[None, :], b_ub=[p_cap],
                  A_eq=np.ones((1, J)), b_eq=[1.0], bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise InfeasibleError("power constraint admits no distribution",
                              constraint="power")
    return res.x, float(-res.fun)


def _check_feasible(prob):
    if float(prob.cost.min()) > prob.p_cap + _FEAS_SLACK:
        raise InfeasibleError(
            f"average-power cap {prob.p_cap} below the cheapest grid point",
            constraint="power")
    q_e, e_max = _energy_lp(prob.cost, prob.energy, prob.p_cap)
    if prob.e_req > e_max + _FEAS_SLACK:
        raise InfeasibleError(
            f"required energy {prob.e_req} exceeds the maximum feasible {e_max:.6g}",
            constraint="energy")
    return q_e, e_max


def _rate_and_grad(prob, q):
    v = prob.cond @ q
    logv = np.log(np.maximum(v, 1e-300))
    ivec = prob.h - (prob.qw * logv) @ prob.cond
    return float(ivec @ q), ivec


def _fw_lp(prob, ivec):
    a_ub, b_ub, tags = [], [], []
    if not prob.drop_ap:
        a_ub.append(prob.cost)
        b_ub.append(prob.p_cap)
        tags.append("ap")
    if not prob.drop_eh:
        a_ub.append(-prob.energy)
        b_ub.append(-prob.e_req)
        tags.append("eh")
    J = ivec.size
    res = linprog(-ivec, A_ub=np.vstack(a_ub) if a_ub else None,
                  b_ub=b_ub or None, A_eq=np.ones((1, J)), b_eq=[1.0],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise InfeasibleError("linear subproblem failed: " + res.message)
    lam1 = lam2 = 0.0
    if a_ub:
        marg = -res.ineqlin.marginals
        for tag, m in zip(tags, marg):
            if tag == "ap":
                lam1 = max(float(m), 0.0)
            else:
                lam2 = max(float(m), 0.0)
    return res.x, lam1, lam2


def _line_search(prob, q, d):
    """Exact step for I(q + g d) via bisection on the concave section."""
    v = prob.cond @ q
    u = prob.cond @ d
    hd = float(prob.h @ d)

    def slope(g):
        z = np.maximum(v + g * u, 1e-300)
        return hd - float(prob.qw @ (u * np.log(z)))

    if slope(1.0) >= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _restricted_opt(prob, support, w0):
    """Re-optimize weights on a fixed support with SLSQP."""
    hS = prob.h[support]
    CS = prob.cond[:, support]
    cS = prob.cost[support]
    eS = prob.energy[support]

    def neg_rate(w):
        v = CS @ w
        logv = np.log(np.maximum(v, 1e-300))
        return -(hS @ w - prob.qw @ (v * logv))

    def neg_grad(w):
        v = CS @ w
        logv = np.log(np.maximum(v, 1e-300))
        return -(hS - (prob.qw * (logv + 1.0)) @ CS)

    cons = [dict(type="eq", fun=lambda w: w.sum() - 1.0,
                 jac=lambda w: np.ones_like(w))]
    if not prob.drop_ap:
        cons.append(dict(type="ineq", fun=lambda w: prob.p_cap - cS @ w,
                         jac=lambda w: -cS))
    if not prob.drop_eh:
        cons.append(dict(type="ineq", fun=lambda w: eS @ w - prob.e_req,
                         jac=lambda w: eS))
    res = minimize(neg_rate, w0, jac=neg_grad, method="SLSQP",
                   bounds=[(0.0, 1.0)] * len(support), constraints=cons,
                   options=dict(maxiter=300, ftol=1e-14))
    w = np.maximum(res.x, 0.0)
    tot = w.sum()
    if not np.isfinite(tot) or tot <= 0:
        return None
    w /= tot
    if not prob.drop_ap and cS @ w > prob.p_cap + _FEAS_SLACK:
        return None
    if not prob.drop_eh and eS @ w < prob.e_req - _FEAS_SLACK:
        return None
    return w


def _repair_start(prob, q0, q_energy):
    q = np.maximum(np.asarray(q0, dtype=float), 0.0)
    q = q / q.sum()
    if prob.drop_eh or prob.energy @ q >= prob.e_req - _FEAS_SLACK:
        return q
    e0 = float(prob.energy @ q)
    e1 = float(prob.energy @ q_energy)
    if e1 <= e0:
        return q_energy
    theta = min(1.0, (prob.e_req - e0) / (e1 - e0) + 1e-9)
    return (1.0 - theta) * q + theta * q_energy


def _fw_iteration(prob, q, rate, ivec, opts):
    """One conditional-gradient step: LP vertex, exact line search, then a
    corrective re-optimization of the weights on the active support."""
    s, lam1, lam2 = _fw_lp(prob, ivec)
    d = s - q
    step = _line_search(prob, q, d)
    q = np.maximum(q + step * d, 0.0)
    q /= q.sum()
    support = np.union1d(np.flatnonzero(q > _WEIGHT_FLOOR),
                         np.flatnonzero(s > _WEIGHT_FLOOR))
    w = _restricted_opt(prob, support, q[support])
    if w is not None:
        q_new = np.zeros_like(q)
        q_new[support] = w
        if _rate_and_grad(prob, q_new)[0] >= rate - 1e-12:
            q = q_new
    return q


def _certificate_gap(prob, rate, ivec, lam1, lam2):
    upper = float(np.max(ivec - lam1 * prob.cost + lam2 * prob.energy)) \
        + lam1 * prob.p_cap - lam2 * prob.e_req
    return upper - rate


def _maximize_weights(prob, opts, q0=None):
    """Run the certified Frank-Wolfe loop; returns the raw weight solution."""
    q_energy, _ = _check_feasible(prob)
    q = q_energy if q0 is None else _repair_start(prob, q0, q_energy)
    lam1 = lam2 = 0.0
    rate, gap = 0.0, np.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        rate, ivec = _rate_and_grad(prob, q)
        s, lam1, lam2 = _fw_lp(prob, ivec)
        gap = _certificate_gap(prob, rate, ivec, lam1, lam2)
        if gap <= opts.gap_tol:
            break
        q = _fw_iteration(prob, q, rate, ivec, opts)
    else:
        raise AccuracyError(
            f"solver did not reach gap {opts.gap_tol:.1e} in {opts.max_iter} "
            f"iterations (best gap {gap:.3e})",
            best=(q, rate), residual=gap)
    # polish: extra conditional-gradient steps past the gap stop relocate
    # dust atoms (weights ~1e-6) that warm starts can leave at wrong grid
    # points; they barely affect the rate but ruin the pointwise-equality
    # residuals of the certificate
    for _ in range(3):
        rate, ivec = _rate_and_grad(prob, q)
        q_new = _fw_iteration(prob, q, rate, ivec, opts)
        if np.array_equal(q_new > _WEIGHT_FLOOR, q > _WEIGHT_FLOOR) \
                and np.allclose(q_new, q, atol=1e-12):
            q = q_new
            break
        q = q_new
    q, rate = _drop_free_atoms(prob, q, opts)
    rate, ivec = _rate_and_grad(prob, q)
    _, lam1, lam2 = _fw_lp(prob, ivec)
    gap = _certificate_gap(prob, rate, ivec, lam1, lam2)
    # multiplier refinement: nonnegative LS on the support equalities
    support = np.flatnonzero(q > _WEIGHT_FLOOR)
    lam1, lam2 = _refit_multipliers(prob, q, support, rate, ivec, lam1, lam2)
    return q, rate, lam1, lam2, gap, it


def _drop_free_atoms(prob, q, opts):
    """Remove support atoms whose removal is strictly rate-free.

    Dust with a genuine role, however small its weight, must stay or the
    certificate's pointwise inequality develops a dip.
    """
    rate = _rate_and_grad(prob, q)[0]
    for _ in range(q.size):
        support = np.flatnonzero(q > _WEIGHT_FLOOR)
        if support.size <= 1:
            break
        dropped = False
        for j in support[np.argsort(q[support])]:
            if q[j] > 1e-3:
                break  # real atoms; contributions scale with weight
            trial = [k for k in support if k != j]
            w = _restricted_opt(prob, trial, q[trial] / q[trial].sum())
            if w is None:
                continue
            q_new = np.zeros_like(q)
            q_new[trial] = w
            rate_new = _rate_and_grad(prob, q_new)[0]
            if rate_new >= rate - 1e-12:
                q, rate = q_new, rate_new
                dropped = True
                break
        if not dropped:
            break
    return q, rate


def _refit_multipliers(prob, q, support, rate, ivec, lam1, lam2):
    cols, which = [], []
    if not prob.drop_ap:
        cols.append(prob.cost[support] - prob.p_cap)
        which.append("ap")
    if not prob.drop_eh:
        cols.append(-(prob.energy[support] - prob.e_req))
        which.append("eh")
    if not cols:
        return 0.0, 0.0
    M = np.column_stack(cols)
    target = ivec[support] - rate
    try:
        lam, _ = nnls(M, target)
    except Exception:
        return lam1, lam2
    out = {"ap": 0.0, "eh": 0.0}
    for tag, val in zip(which, lam):
        out[tag] = float(val)
    # keep the refit only if it does not worsen the support residuals
    res_new = np.abs(M @ lam - target).max()
    lam_old = [l for tag, l in (("ap", lam1), ("eh", lam2)) if tag in which]
    res_old = np.abs(M @ np.array(lam_old) - target).max()
    if res_new <= res_old + 1e-12:
        return out["ap"], out["eh"]
    return lam1, lam2


def _result_from_weights(prob, q, rate, lam1, lam2, gap, iters,
                         constraints, hpa, eh, kind, opts, meta=None):
    keep = q > _WEIGHT_FLOOR
    wts = q[keep] / q[keep].sum()
    if prob.labels.ndim == 1:
        dist = MassPointDistribution.from_points(
            prob.labels[keep], wts, peak=float(prob.labels.max()),
            merge_radius=0.0)
    else:
        states = meta["states"]
        dist = ExtendedDistribution(prob.labels[keep], wts, states)
    full_meta = {"dx": opts.dx, "opts": opts}
    if meta:
        full_meta.update(meta)
    return SolveResult(
        distribution=dist, rate=rate,
        power=float(prob.cost[keep] @ wts),
        energy=float(prob.energy[keep] @ wts),
        lam1=lam1, lam2=lam2, gap=gap, iterations=iters,
        constraints=constraints, hpa=hpa, eh=eh, kind=kind, meta=full_meta)


def solve_weights(grid, constraints, hpa, eh, opts=None, q0=None):
    """Maximize I over weights on ``grid`` under AP and EH constraints.

    Returns a SolveResult with a certified duality gap <= opts.gap_tol.
    """
    opts = opts or SolveOptions()
    grid = np.asarray(grid, dtype=float)
    peak = float(grid.max())
    if grid.size > 1 and opts.dx > peak / 10 + 1e-12:
        raise ContractError("grid step must be at most peak/10")
    prob = _static_problem(grid, constraints, hpa, eh, opts)
    q, rate, lam1, lam2, gap, it = _maximize_weights(prob, opts, q0=q0)
    return _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                constraints, hpa, eh, "static", opts)


def _recompute_rate(dist, result, rule=None):
    rule = rule or QuadratureRule(nodes=result.meta["opts"].quad_nodes)
    if result.kind == "static":
        return mutual_information(dist, result.hpa, rule)
    if result.kind == "extended":
        return mixture_mi(dist, dist.states, result.hpa, rule)
    if result.kind == "onoff":
        states = result.meta["states"]
        pts = np.column_stack([np.zeros(dist.locations.size), dist.locations])
        ext = ExtendedDistribution(pts, dist.weights, states)
        return mixture_mi(ext, states, result.hpa, rule)
    raise ContractError(f"unknown result kind {result.kind!r}")


def _result_maps(dist, result):
    """(power, energy) of a distribution under the result's constraint maps."""
    if result.kind == "onoff":
        p2 = result.meta["p2"]
        power = p2 * float(dist.weights @ dist.locations**2)
        energy = (1.0 - p2) + p2 * float(
            dist.weights @ harvested_energy(dist.locations, result.hpa,
                                            result.eh))
        return power, energy
    return average_power(dist), average_energy(dist, result.hpa, result.eh)


def prune_support(result, opts=None):
    """Drop dust weights, merge near-coincident points, renormalize.

    Falls back to the unpruned result (``meta['prune_warning']``) if the
    pruned distribution would violate feasibility or lose more rate than
    ten times the solver tolerance.
    """
    opts = opts or result.meta.get("opts") or SolveOptions()
    dist = result.distribution
    if isinstance(dist, ExtendedDistribution):
        pts, wts = _cluster_tuples(dist.points, dist.weights,
                                   opts.prune_threshold, opts.merge_radius)
        new = ExtendedDistribution(pts, wts, dist.states)
    else:
        keep = dist.weights >= opts.prune_threshold
        if not keep.any():
            keep = dist.weights == dist.weights.max()
        new = MassPointDistribution.from_points(
            dist.locations[keep], dist.weights[keep], dist.peak,
            merge_radius=opts.merge_radius)
    pruned_power, pruned_energy = _result_maps(new, result)
    cs = result.constraints
    feasible = (pruned_power <= cs.avg_power + 1e-8
                and pruned_energy >= min(cs.e_req, result.energy) - 1e-8)
    new_rate = _recompute_rate(new, result) if feasible else -np.inf
    if not feasible or new_rate < result.rate - 10 * opts.gap_tol:
        out = replace(result)
        out.meta = dict(result.meta, prune_warning=True)
        return out
    out = replace(result, distribution=new, rate=new_rate,
                  power=pruned_power, energy=pruned_energy)
    out.meta = dict(result.meta, pruned=True)
    return out


def _cluster_tuples(points, weights, threshold, radius):
    keep = weights >= threshold
    if not keep.any():
        keep = weights == weights.max()
    pts, wts = points[keep], weights[keep]
    order = np.lexsort(pts.T[::-1])
    pts, wts = pts[order], wts[order]
    out_p, out_w = [pts[0].copy()], [wts[0]]
    for p, w in zip(pts[1:], wts[1:]):
        if np.max(np.abs(p - out_p[-1])) <= radius:
            tot = out_w[-1] + w
            out_p[-1] = (out_p[-1] * out_w[-1] + p * w) / tot
            out_w[-1] = tot
        else:
            out_p.append(p.copy())
            out_w.append(w)
    w = np.asarray(out_w)
    return np.asarray(out_p), w / w.sum()


def _optimize_on_support(locations, constraints, hpa, eh, opts, refine_step):
    """Weights on a fixed support, then coordinate search on locations."""
    locs = np.unique(np.asarray(locations, dtype=float))
    peak = constraints.peak

    def solve_on(ls):
        sub = SolveOptions(dx=opts.dx, gap_tol=opts.gap_tol,
                           max_iter=opts.max_iter,
                           prune_threshold=opts.prune_threshold,
                           merge_radius=opts.merge_radius,
                           quad_nodes=opts.quad_nodes)
        prob = _static_problem(ls, constraints, hpa, eh, sub)
        return prob, _maximize_weights(prob, sub)

    try:
        prob, sol = solve_on(locs)
    except InfeasibleError:
        locs = np.unique(np.concatenate([locs, [0.0, peak]]))
        prob, sol = solve_on(locs)
    best_rate = sol[1]
    for _ in range(40):
        improved = False
        for idx in range(locs.size):
            for delta in (refine_step, -refine_step):
                trial = locs.copy()
                trial[idx] = min(max(trial[idx] + delta, 0.0), peak)
                trial = np.unique(trial)
                if trial.size < locs.size:
                    continue
                try:
                    prob_t, sol_t = solve_on(trial)
                except InfeasibleError:
                    continue
                if sol_t[1] > best_rate + 1e-12:
                    locs, prob, sol, best_rate = trial, prob_t, sol_t, sol_t[1]
                    improved = True
        if not improved:
            break
    return prob, sol


def solve_ask(grid, constraints, hpa, eh, n_max, opts=None, seed_support=None):
    """Best distribution found with at most ``n_max`` support points.

    Greedy protocol: unconstrained solve, keep the n_max heaviest points,
    re-optimize weights on that support, then refine locations by
    coordinate search at resolution dx/10.  ``seed_support`` (from a
    previous, smaller n_max run) is also tried, so swept rates are
    nondecreasing in n_max.
    """
    if n_max < 2:
        raise ContractError("n_max must be >= 2")
    opts = opts or SolveOptions()
    grid = np.asarray(grid, dtype=float)
    base = solve_weights(grid, constraints, hpa, eh, opts)
    if n_max >= grid.size:
        return base
    base_p = prune_support(base, opts)
    if base_p.distribution.support_size <= n_max and seed_support is None:
        return base
    candidates = []
    order = np.argsort(base_p.distribution.weights)[::-1]
    heaviest = base_p.distribution.locations[np.sort(order[:n_max])]
    candidates.append(heaviest)
    if seed_support is not None:
        seed = np.unique(np.asarray(seed_support, dtype=float))
        if seed.size < n_max:
            extra = [x for x in base_p.distribution.locations[order]
                     if np.min(np.abs(seed - x)) > 1e-12]
            seed = np.sort(np.concatenate([seed, extra[:n_max - seed.size]]))
        candidates.append(seed[:n_max])
    best = None
    for cand in candidates:
        prob, (q, rate, lam1, lam2, gap, it) = _optimize_on_support(
            cand, constraints, hpa, eh, opts, refine_step=opts.dx / 10.0)
        res = _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                   constraints, hpa, eh, "static", opts,
                                   meta={"n_max": n_max})
        if best is None or res.rate > best.rate:
            best = res
    return best
