"""Information-energy capacity region boundaries.

A region curve is traced by sweeping the required-energy constraint from
the floor (the zero symbol always harvests 1) up to the maximum feasible
energy, solving and certifying one point per level.  Sweeps over peak
power, HPA settings, ASK alphabet sizes, and on-off probability reuse the
same tracer with different single-point solvers.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import ConstraintSet, HpaModel
from .errors import ContractError
from .infometrics import rate_bits
from .numerics import QuadratureRule
from .solver import (SolveOptions, _energy_lp, _static_problem, build_grid,
                     prune_support, solve_ask, solve_weights)
from .shannon import _onoff_problem, solve_onoff
from .verify import kkt_check, kkt_check_extended

_EDGE_DELTA = 1e-6  # relative clearance from the degenerate E_max vertex


@dataclass
class CapacityPoint:
    e_req: float
    rate_nats: float
    rate_bits: float
    energy: float
    power: float
    lam1: float
    lam2: float
    kkt_ok: bool
    wall_clock: float
    distribution: object
    gap: float = 0.0


@dataclass
class RegionCurve:
    points: list
    config: dict = field(default_factory=dict)

    @property
    def e_req_values(self):
        return np.array([p.e_req for p in self.points])

    @property
    def rates(self):
        return np.array([p.rate_nats for p in self.points])

    @property
    def energies(self):
        return np.array([p.energy for p in self.points])


def energy_bounds(constraints, hpa, eh, opts=None):
    """(E_floor, E_max) for the static problem; E_max by linear programming."""
    opts = opts or SolveOptions()
    grid = build_grid(constraints.peak, opts.dx)
    prob = _static_problem(grid, constraints, hpa, eh, opts)
    _, e_max = _energy_lp(prob.cost, prob.energy, prob.p_cap)
    return 1.0, float(e_max)


def _e_req_schedule(e_floor, e_max, n_points, edge_delta=_EDGE_DELTA):
    if n_points < 2:
        raise ContractError("n_points must be >= 2")
    span = e_max - e_floor
    if span <= 0:
        return np.array([e_floor])
    return np.linspace(e_floor, e_max - edge_delta * span, n_points)


def _trace(solve_fn, certify_fn, e_req_values, config, warm_start=True,
           threads=1, refine_fn=None):
    points = []

    def one(e_req, q0):
        t0 = time.perf_counter()
        result, q_full = solve_fn(e_req, q0)
        result = prune_support(result)
        report = certify_fn(result)
        if not report.verdict and refine_fn is not None:
            # grid quantization can leave the certificate just above
            # tolerance near the degenerate vertex; refine the support
            # locations continuously and retry
            refined = refine_fn(result)
            if refined is not None:
                refined_report = certify_fn(refined)
                if refined_report.max_support_residual <= \
                        report.max_support_residual:
                    result, report = refined, refined_report
        elapsed = time.perf_counter() - t0
        pt = CapacityPoint(
            e_req=float(e_req), rate_nats=result.rate,
            rate_bits=rate_bits(result.rate), energy=result.energy,
            power=result.power, lam1=result.lam1, lam2=result.lam2,
            kkt_ok=bool(report.verdict), wall_clock=elapsed,
            distribution=result.distribution, gap=result.gap)
        return pt, q_full

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = [pt for pt, _ in pool.map(lambda e: one(e, None),
                                               e_req_values)]
    else:
        q_prev = None
        for e_req in e_req_values:
            pt, q_prev = one(e_req, q_prev if warm_start else None)
            points.append(pt)
    return RegionCurve(points=points, config=config)


def _static_solver(constraints, hpa, eh, opts):
    grid = build_grid(constraints.peak, opts.dx)

    def solve_fn(e_req, q0):
        cs = replace(constraints, e_req=float(e_req))
        res = solve_weights(grid, cs, hpa, eh, opts, q0=q0)
        q_full = _dist_to_grid(res.distribution.locations,
                               res.distribution.weights, grid)
        return res, q_full

    def certify_fn(result):
        return kkt_check(result, result.constraints, hpa, eh,
                         check_step=opts.dx / 10.0)

    def refine_fn(result):
        from .solver import _optimize_on_support, _result_from_weights
        try:
            prob, (q, rate, lam1, lam2, gap, it) = _optimize_on_support(
                result.distribution.locations, result.constraints, hpa, eh,
                opts, refine_step=opts.dx / 10.0)
        except Exception:
            return None
        if rate < result.rate - 1e-12:
            return None
        return _result_from_weights(prob, q, rate, lam1, lam2, gap, it,
                                    result.constraints, hpa, eh, "static",
                                    opts)

    return solve_fn, certify_fn, refine_fn


def _dist_to_grid(locations, weights, grid):
    """Snap a support back onto the solve grid for warm starting."""
    q = np.zeros(grid.size)
    for x, w in zip(locations, weights):
        j = int(np.argmin(np.abs(grid - x)))
        q[j] += w
    return q


def trace_region(constraints, hpa, eh, n_points, opts=None, warm_start=True,
                 threads=1, e_req_values=None, edge_delta=_EDGE_DELTA):
    """Solve and certify along an ascending required-energy schedule.

    ``edge_delta`` is the relative clearance kept from the degenerate
    E_max vertex (where multipliers blow up); widen it when the energy
    maximizer is a singleton distribution, e.g. under a saturating HPA.
    """
    opts = opts or SolveOptions()
    if e_req_values is None:
        e_floor, e_max = energy_bounds(constraints, hpa, eh, opts)
        e_req_values = _e_req_schedule(e_floor, e_max, n_points, edge_delta)
    solve_fn, certify_fn, refine_fn = _static_solver(constraints, hpa, eh,
                                                     opts)
    config = _fingerprint("static", constraints, hpa, eh, opts)
    return _trace(solve_fn, certify_fn, e_req_values, config,
                  warm_start=warm_start, threads=threads,
                  refine_fn=refine_fn)


def compare_hpa(constraints, hpa_on, eh, n_points, opts=None,
                edge_delta=_EDGE_DELTA):
    """Curves with and without the HPA over a shared e_req grid (clipped to
    the smaller feasible energy range)."""
    opts = opts or SolveOptions()
    bypass = HpaModel(a_s=hpa_on.a_s, beta=hpa_on.beta, bypass=True)
    _, e_max_on = energy_bounds(constraints, hpa_on, eh, opts)
    _, e_max_by = energy_bounds(constraints, bypass, eh, opts)
    e_vals = _e_req_schedule(1.0, min(e_max_on, e_max_by), n_points,
                             edge_delta)
    curve_on = trace_region(constraints, hpa_on, eh, n_points, opts,
                            e_req_values=e_vals)
    curve_by = trace_region(constraints, bypass, eh, n_points, opts,
                            e_req_values=e_vals)
    return curve_on, curve_by


def sweep_ask(constraints, hpa, eh, sizes, n_points, opts=None,
              edge_delta=_EDGE_DELTA):
    """One curve per ASK alphabet size, plus the unconstrained reference.

    Each size is re-seeded with the previous size's support at the same
    e_req level, so rates are pointwise nondecreasing in the size.
    """
    opts = opts or SolveOptions()
    sizes = sorted(int(n) for n in sizes)
    if sizes[0] < 2:
        raise ContractError("alphabet sizes must be >= 2")
    e_floor, e_max = energy_bounds(constraints, hpa, eh, opts)
    e_vals = _e_req_schedule(e_floor, e_max, n_points, edge_delta)
    grid = build_grid(constraints.peak, opts.dx)
    unconstrained = trace_region(constraints, hpa, eh, n_points, opts,
                                 e_req_values=e_vals)

    def certify(result):
        return kkt_check(result, result.constraints, hpa, eh,
                         check_step=opts.dx / 10.0)

    curves = {}
    seeds = {}
    for n0 in sizes:
        points = []
        for k, e_req in enumerate(e_vals):
            cs = replace(constraints, e_req=float(e_req))
            t0 = time.perf_counter()
            res = solve_ask(grid, cs, hpa, eh, n0, opts,
                            seed_support=seeds.get(k))
            res = prune_support(res)
            report = certify(res)
            points.append(CapacityPoint(
                e_req=float(e_req), rate_nats=res.rate,
                rate_bits=rate_bits(res.rate), energy=res.energy,
                power=res.power, lam1=res.lam1, lam2=res.lam2,
                kkt_ok=bool(report.verdict),
                wall_clock=time.perf_counter() - t0,
                distribution=res.distribution, gap=res.gap))
            seeds[k] = res.distribution.locations
        curves[n0] = RegionCurve(
            points=points,
            config=_fingerprint("ask", constraints, hpa, eh, opts, n_max=n0))
    return curves, unconstrained


def sweep_onoff(a2, p2_list, constraints, hpa, eh, n_points, opts=None,
                edge_delta=_EDGE_DELTA):
    """One curve per on-off probability over the shared feasible range."""
    opts = opts or SolveOptions()
    p2_list = list(p2_list)
    if any(not (0.0 < p2 <= 1.0) for p2 in p2_list):
        raise ContractError("p2 values must lie in (0, 1]")
    grid = build_grid(a2, opts.dx)
    e_maxes = []
    for p2 in p2_list:
        prob = _onoff_problem(grid, p2, constraints, hpa, eh, opts)
        _, e_max = _energy_lp(prob.cost, prob.energy, prob.p_cap)
        e_maxes.append(e_max)
    e_vals = _e_req_schedule(1.0, min(e_maxes), n_points, edge_delta)
    curves = {}
    for p2 in p2_list:
        def solve_fn(e_req, q0, _p2=p2):
            cs = replace(constraints, e_req=float(e_req))
            res = solve_onoff(a2, _p2, cs, hpa, eh, opts, q0=q0)
            q_full = _dist_to_grid(res.distribution.locations,
                                   res.distribution.weights, grid)
            return res, q_full

        def certify_fn(result, _p2=p2):
            states = ((0.0, 1.0 - _p2), (float(a2), _p2))
            return kkt_check_extended(result, states, result.constraints,
                                      hpa, eh, check_step=opts.dx / 10.0)

        config = _fingerprint("onoff", constraints, hpa, eh, opts, a2=a2, p2=p2)
        curves[p2] = _trace(solve_fn, certify_fn, e_vals, config)
    return curves


def _fingerprint(kind, constraints, hpa, eh, opts, **extra):
    fp = dict(kind=kind, constraints=asdict(constraints), hpa=asdict(hpa),
              eh=asdict(eh), options=asdict(opts))
    fp.update(extra)
    return fp
