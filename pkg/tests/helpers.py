"""Independent oracles used by the tests.

These deliberately avoid the package's quadrature/solver paths wherever the
quantity they check is produced by those paths.
"""

import numpy as np

from swiptcap.channel import harvested_energy, hpa_distort


def i0_series(z, terms=400):
    """Extended-precision power-series oracle for the modified Bessel
    function: sum_k (z^2/4)^k / (k!)^2, evaluated in 50-digit decimals."""
    from decimal import Decimal, getcontext
    getcontext().prec = 50
    u = Decimal(repr(float(z))) ** 2 / 4
    term = Decimal(1)
    total = Decimal(1)
    for k in range(1, terms):
        term = term * u / (k * k)
        total += term
        if term < Decimal("1e-45") * total:
            break
    return float(total)


def riemann_mi(locations, weights, hpa, y_max, n=2_000_000):
    """Fine-grid trapezoid evaluation of the mutual-information double
    integral for a mass-point input; independent of the package quadrature."""
    y = np.linspace(0.0, y_max, n)
    s = 1.0 + hpa_distort(np.asarray(locations, float), hpa) ** 2
    cond = np.exp(-np.outer(1.0 / s, y)) / s[:, None]  # (N, n)
    pf = np.asarray(weights) @ cond
    total = 0.0
    for w, row in zip(weights, cond):
        integ = np.where(row > 1e-300, row * (np.log(np.maximum(row, 1e-300))
                                              - np.log(np.maximum(pf, 1e-300))), 0.0)
        total += w * np.trapezoid(integ, y)
    return total


def blahut_arimoto(channel, max_iter=50000, tol=1e-9):
    """Classical alternating-maximization capacity solver for a discrete
    channel matrix channel[j, k] = P(y_k | x_j).  Returns (lower, upper,
    input distribution); upper - lower <= tol at convergence."""
    J = channel.shape[0]
    r = np.full(J, 1.0 / J)
    logw = np.where(channel > 0,
                    np.log(np.maximum(channel, 1e-300)), 0.0)
    lb, ub = 0.0, np.inf
    for _ in range(max_iter):
        py = r @ channel
        d = np.einsum("jk,jk->j", channel,
                      logw - np.log(np.maximum(py, 1e-300)))
        lb = float(r @ d)
        ub = float(d.max())
        if ub - lb < tol:
            break
        r = r * np.exp(d - d.max())
        r /= r.sum()
    return lb, ub, r


def two_point_brute_force(grid, constraints, hpa, eh_model, quad_nodes):
    """Exhaustive search over binary inputs {(0, 1-q), (x1, q)} with x1 on
    the grid and q on a 0.01 lattice; returns the best feasible rate."""
    y, w = quad_nodes
    qs = np.linspace(0.0, 1.0, 101)
    p0 = np.exp(-y)
    best = 0.0
    e0 = float(harvested_energy(0.0, hpa, eh_model))
    for x1 in grid[grid > 0]:
        s1 = 1.0 + float(hpa_distort(float(x1), hpa)) ** 2
        p1 = np.exp(-y / s1) / s1
        e1 = float(harvested_energy(float(x1), hpa, eh_model))
        power = qs * x1 * x1
        energy = (1 - qs) * e0 + qs * e1
        feas = (power <= constraints.avg_power + 1e-12) \
            & (energy >= constraints.e_req - 1e-12)
        if not feas.any():
            continue
        pf = np.outer(1 - qs, p0) + np.outer(qs, p1)  # (nq, K)
        logpf = np.log(np.maximum(pf, 1e-300))
        h0 = -1.0  # -log(1) - 1
        h1 = -np.log(s1) - 1.0
        i0v = h0 - logpf @ (w * p0)
        i1v = h1 - logpf @ (w * p1)
        rates = (1 - qs) * i0v + qs * i1v
        rates[~feas] = -np.inf
        best = max(best, float(rates.max()))
    return best
