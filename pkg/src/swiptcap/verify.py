"""Independent optimality certification via the necessary-and-sufficient
pointwise conditions, the low-peak binary closed form, and the transition
finder.

The certificate logic: with C pinned to the candidate's rate, if some
multipliers lam1, lam2 >= 0 make

    g(x) = lam1 (x^2 - P) - lam2 (E(x) - E_req) + C - i(x; F)

nonnegative everywhere and ~zero on the support, every feasible G satisfies
I(G) <= E_G[i(x; F)] <= C, so the candidate is optimal.  The check grid is
10x finer than the solve grid and the quadrature carries a 4x node budget,
so certification is not circular.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize_scalar, nnls

from .channel import ConstraintSet, harvested_energy, hpa_distort
from .errors import ContractError, DomainError, SearchError
from .infometrics import (ExtendedDistribution, MassPointDistribution,
                          log_output_density, mutual_information,
                          _mixture_log_cond)
from .numerics import QuadratureRule, halfline_nodes
from .solver import SolveResult

_CHUNK = 4096


@dataclass
class KktReport:
    max_violation: float          # max(0, -min g) over the check grid, nats
    max_support_residual: float   # max |g| on the support, nats
    support_points: np.ndarray
    support_residuals: np.ndarray
    c_value: float
    lam1: float
    lam2: float
    tol: float
    verdict: bool
    worst_point: object = None    # argmin of g over the check grid


def _verifier_rule(rule=None):
    # 4x the default solver budget, independently constructed
    return rule or QuadratureRule(nodes=1024)


def _as_distribution(result_or_dist):
    if isinstance(result_or_dist, SolveResult):
        return result_or_dist.distribution
    return result_or_dist


def _mi_density_grid(x_eval, dist, hpa, rule):
    """i(x; F) over an amplitude array, chunked, shared node set."""
    s_sup = 1.0 + hpa_distort(dist.locations, hpa) ** 2
    s_eval = 1.0 + hpa_distort(x_eval, hpa) ** 2
    scale = max(float(s_sup.max()), float(s_eval.max()))
    y, w = halfline_nodes(rule, scale)
    log_pf = log_output_density(y, dist, hpa)
    out = np.empty(x_eval.size)
    for lo in range(0, x_eval.size, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, x_eval.size))
        s = s_eval[sl]
        log_px = -np.log(s)[None, :] - np.outer(y, 1.0 / s)
        px = np.exp(log_px)
        out[sl] = w @ (px * (log_px - log_pf[:, None]))
    return out


def _fit_multipliers(cost_sup, eng_sup, i_sup, c_value, p_cap, e_req,
                     cost_grid=None, eng_grid=None, i_grid=None,
                     slacks=None, tol=1e-4):
    """Multipliers for the certificate, by Chebyshev fit under the full
    KKT system.

    The condition is an existence check over lam >= 0, so the estimator
    minimizes the worst residual jointly: |g| on the support and the
    negative part of g on the check grid.  (A pure least-squares fit of
    the support equalities is ill-posed near the degenerate energy vertex:
    with C pinned to the rate it forces lam2 ~ 0 and ruins the inequality.)
    ``slacks`` = (P - power(F), energy(F) - E_req) activates the
    complementary-slackness box |lam * slack| <= tol; without it a
    constraint-violating candidate could borrow multipliers that certify a
    different, tighter problem.  Falls back to nonnegative least squares
    if the LP solver declines.
    """
    M_sup = np.column_stack([cost_sup - p_cap, -(eng_sup - e_req)])
    r_sup = i_sup - c_value
    if cost_grid is not None:
        bounds = [(0, None), (0, None), (0, None)]
        if slacks is not None:
            for i, slack in enumerate(slacks):
                ub = tol / max(abs(slack), 1e-12)
                bounds[i] = (0, min(ub, 1e12))
        M_grid = np.column_stack([cost_grid - p_cap, -(eng_grid - e_req)])
        r_grid = i_grid - c_value
        # variables (lam1, lam2, t): minimize t subject to
        #   M_sup lam - t <= r_sup,  -M_sup lam - t <= -r_sup  (|g| <= t)
        #   -M_grid lam - t <= -r_grid                        (g >= -t)
        a_ub = np.vstack([
            np.column_stack([M_sup, -np.ones(M_sup.shape[0])]),
            np.column_stack([-M_sup, -np.ones(M_sup.shape[0])]),
            np.column_stack([-M_grid, -np.ones(M_grid.shape[0])]),
        ])
        b_ub = np.concatenate([r_sup, -r_sup, -r_grid])
        res = linprog(np.array([0.0, 0.0, 1.0]), A_ub=a_ub, b_ub=b_ub,
                      bounds=bounds, method="highs")
        if res.status == 0:
            return float(res.x[0]), float(res.x[1])
    lam, _ = nnls(M_sup, r_sup)
    return float(lam[0]), float(lam[1])


def kkt_check(result, constraints, hpa, eh, check_step=None, tol=1e-4,
              rule=None):
    """Certify a static solution against the pointwise optimality condition.

    ``result`` may be a SolveResult or a bare MassPointDistribution.  The
    multipliers are re-estimated by nonnegative least squares on the support
    equalities with C pinned to the (recomputed) rate.
    """
    dist = _as_distribution(result)
    if not isinstance(dist, MassPointDistribution):
        raise ContractError("kkt_check expects a static distribution")
    rule = _verifier_rule(rule)
    peak = constraints.peak
    step = check_step if check_step is not None else peak / 1000.0
    p_cap, e_req = constraints.avg_power, constraints.e_req

    i_sup = _mi_density_grid(dist.locations, dist, hpa, rule)
    c_value = float(dist.weights @ i_sup)
    eng_sup = np.asarray(harvested_energy(dist.locations, hpa, eh), dtype=float)

    grid = np.arange(0.0, peak + step / 2, step)
    if grid[-1] < peak:
        grid = np.append(grid, peak)
    i_grid = _mi_density_grid(grid, dist, hpa, rule)
    eng_grid = np.asarray(harvested_energy(grid, hpa, eh), dtype=float)
    power = float(dist.weights @ dist.locations**2)
    energy = float(dist.weights @ eng_sup)
    lam1, lam2 = _fit_multipliers(dist.locations**2, eng_sup, i_sup,
                                  c_value, p_cap, e_req,
                                  cost_grid=grid**2, eng_grid=eng_grid,
                                  i_grid=i_grid,
                                  slacks=(p_cap - power, energy - e_req),
                                  tol=tol)
    g = lam1 * (grid**2 - p_cap) - lam2 * (eng_grid - e_req) + c_value - i_grid
    g_sup = lam1 * (dist.locations**2 - p_cap) - lam2 * (eng_sup - e_req) \
        + c_value - i_sup
    return _assemble_report(g, g_sup, dist.locations, grid, c_value,
                            lam1, lam2, tol)


def _assemble_report(g, g_sup, support_points, grid_points, c_value,
                     lam1, lam2, tol):
    kmin = int(np.argmin(g))
    max_violation = max(0.0, -float(g[kmin]))
    max_res = float(np.abs(g_sup).max())
    return KktReport(
        max_violation=max_violation,
        max_support_residual=max_res,
        support_points=support_points,
        support_residuals=np.abs(g_sup),
        c_value=c_value, lam1=lam1, lam2=lam2, tol=tol,
        verdict=(max_violation <= tol and max_res <= tol),
        worst_point=grid_points[kmin])


def _mixture_i_grid(tuples, dist, states, hpa, rule):
    """i(x_1, x_2; F) over an array of tuples, chunked."""
    s_all = 1.0 + hpa_distort(np.vstack([dist.points, tuples]), hpa) ** 2
    y, w = halfline_nodes(rule, float(s_all.max()))
    log_f_sup = _mixture_log_cond(dist.points, states, hpa, y)
    log_wts = np.log(np.maximum(dist.weights, 1e-300))
    from scipy.special import logsumexp
    log_pf = logsumexp(log_f_sup + log_wts[None, :], axis=1)
    out = np.empty(tuples.shape[0])
    for lo in range(0, tuples.shape[0], _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, tuples.shape[0]))
        log_f = _mixture_log_cond(tuples[sl], states, hpa, y)
        f = np.exp(log_f)
        out[sl] = w @ (f * (log_f - log_pf[:, None]))
    return out


def _extended_maps(tuples, states, hpa, eh):
    probs = np.array([p for _, p in states])
    cost = (tuples**2) @ probs
    eng = np.asarray(harvested_energy(tuples, hpa, eh), dtype=float) @ probs
    return cost, eng


def kkt_check_extended(result, states, constraints, hpa, eh, check_step=None,
                       tol=1e-4, rule=None):
    """Certify a two-state Shannon-strategy solution on the product grid."""
    dist = _as_distribution(result)
    if isinstance(dist, MassPointDistribution):
        # on-off embedding: off-state coordinate is identically zero
        pts = np.column_stack([np.zeros(dist.locations.size), dist.locations])
        dist = ExtendedDistribution(pts, dist.weights, states)
    states = tuple((float(a), float(p)) for a, p in states)
    if len(states) != 2:
        raise ContractError("the extended checker supports two-state alphabets")
    rule = _verifier_rule(rule)
    a1, a2 = states[0][0], states[1][0]
    p_cap, e_req = constraints.avg_power, constraints.e_req

    i_sup = _mixture_i_grid(dist.points, dist, states, hpa, rule)
    c_value = float(dist.weights @ i_sup)
    cost_sup, eng_sup = _extended_maps(dist.points, states, hpa, eh)

    step = check_step if check_step is not None else max(a1, a2) / 400.0
    ax1 = _axis_grid(a1, step)
    ax2 = _axis_grid(a2, step)
    g1, g2 = np.meshgrid(ax1, ax2, indexing="ij")
    tuples = np.column_stack([g1.ravel(), g2.ravel()])
    i_grid = _mixture_i_grid(tuples, dist, states, hpa, rule)
    cost_g, eng_g = _extended_maps(tuples, states, hpa, eh)
    power = float(dist.weights @ cost_sup)
    energy = float(dist.weights @ eng_sup)
    lam1, lam2 = _fit_multipliers(cost_sup, eng_sup, i_sup, c_value,
                                  p_cap, e_req, cost_grid=cost_g,
                                  eng_grid=eng_g, i_grid=i_grid,
                                  slacks=(p_cap - power, energy - e_req),
                                  tol=tol)
    g = lam1 * (cost_g - p_cap) - lam2 * (eng_g - e_req) + c_value - i_grid
    g_sup = lam1 * (cost_sup - p_cap) - lam2 * (eng_sup - e_req) \
        + c_value - i_sup
    return _assemble_report(g, g_sup, dist.points, tuples, c_value,
                            lam1, lam2, tol)


def _axis_grid(a, step):
    if a <= 0:
        return np.array([0.0])
    g = np.arange(0.0, a + step / 2, step)
    if g[-1] < a:
        g = np.append(g, a)
    return g


def low_pp_binary(P, A, hpa, eh, rule=None):
    """Closed-form low-peak binary distribution.

    With the power constraint active (A^2 > P) the mass sits at {0, A} with
    weights (1 - P/A^2, P/A^2); otherwise the power cap cannot bind and the
    upper weight is found by golden-section search.
    """
    if P <= 0 or A <= 0:
        raise DomainError("P and A must be positive")
    if A * A > P:
        q = P / (A * A)
        return MassPointDistribution(np.array([0.0, A]),
                                     np.array([1.0 - q, q]), peak=A)
    rule = rule or QuadratureRule()

    def neg_rate(q):
        qc = min(max(q, 1e-12), 1.0 - 1e-12)
        d = MassPointDistribution(np.array([0.0, A]),
                                  np.array([1.0 - qc, qc]), peak=A)
        return -mutual_information(d, hpa, rule)

    res = minimize_scalar(neg_rate, bracket=(0.0, 0.5, 1.0), method="golden",
                          options=dict(xtol=1e-10))
    q = float(min(max(res.x, 0.0), 1.0))
    if q < 1e-12:
        return MassPointDistribution(np.array([0.0]), np.array([1.0]), peak=A)
    if q > 1.0 - 1e-12:
        return MassPointDistribution(np.array([A]), np.array([1.0]), peak=A)
    return MassPointDistribution(np.array([0.0, A]), np.array([1.0 - q, q]),
                                 peak=A)


def find_transition(P, hpa, eh, a_lo, a_hi, tol=1e-3, kkt_tol=1e-6,
                    check_step=None, rule=None):
    """Peak amplitude where the low-peak binary stops certifying.

    Bisection on A with predicate = KKT verdict of the closed-form binary
    candidate (energy constraint vacuous).  Requires the predicate to hold
    at ``a_lo`` and fail at ``a_hi``.
    """
    rule = _verifier_rule(rule)

    def report(A):
        cand = low_pp_binary(P, A, hpa, eh)
        cs = ConstraintSet(avg_power=P, states=((A, 1.0),), e_req=1.0)
        step = check_step if check_step is not None else A / 2000.0
        return kkt_check(cand, cs, hpa, eh, check_step=step, tol=kkt_tol,
                         rule=rule)

    rep_lo, rep_hi = report(a_lo), report(a_hi)
    if not rep_lo.verdict or rep_hi.verdict:
        raise SearchError(
            "binary-optimality predicate is not bracketed by the search range",
            lo_report=rep_lo, hi_report=rep_hi)
    lo, hi = a_lo, a_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if report(mid).verdict:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
