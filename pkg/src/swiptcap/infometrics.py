"""Output densities, mutual-information density, and mutual information.

Natural logarithms everywhere; conversion to bits happens only at the
reporting boundary.  Log-density differences are used instead of ratios so
deep-tail outputs stay finite.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channel import harvested_energy, hpa_distort
from .errors import ContractError, DomainError
from .numerics import QuadratureRule, halfline_nodes

_LOG_TINY = -690.0  # log(1e-300); below this a density is treated as exact zero


@dataclass(frozen=True, eq=False)
class MassPointDistribution:
    """Finite input distribution sum_i q_i u(x - x_i) on [0, peak]."""

    locations: np.ndarray
    weights: np.ndarray
    peak: float

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.locations, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", wts)
        if loc.shape != wts.shape or loc.ndim != 1 or loc.size == 0:
            raise ContractError("locations and weights must be equal-length 1-D")
        if np.any(wts < 0) or abs(wts.sum() - 1.0) > 1e-10:
            raise DomainError("weights must be >= 0 and sum to 1 within 1e-10")
        if np.any(loc < 0) or np.any(loc > self.peak + 1e-12):
            raise DomainError("locations must lie in [0, peak]")
        if loc.size > 1 and np.any(np.diff(loc) <= 0):
            raise DomainError("locations must be strictly increasing")

    @classmethod
    def from_points(cls, locations, weights, peak, merge_radius=1e-9):
        """Sort, merge points closer than merge_radius (weight-averaged
        location, summed weight), and renormalize."""
        loc = np.asarray(locations, dtype=float)
        wts = np.asarray(weights, dtype=float)
        order = np.argsort(loc, kind="stable")
        loc, wts = loc[order], wts[order]
        out_x, out_q = [], []
        for x, q in zip(loc, wts):
            if out_x and x - out_x[-1] <= merge_radius:
                tot = out_q[-1] + q
                if tot > 0:
                    out_x[-1] = (out_x[-1] * out_q[-1] + x * q) / tot
                out_q[-1] = tot
            else:
                out_x.append(x)
                out_q.append(q)
        q = np.asarray(out_q, dtype=float)
        return cls(np.asarray(out_x), q / q.sum(), float(peak))

    @property
    def support_size(self):
        return int(self.locations.size)


@dataclass(frozen=True, eq=False)
class ExtendedDistribution:
    """Distribution over Shannon-strategy tuples (x_1, ..., x_M).

    ``states`` is the (peak, probability) alphabet the tuples respect.
    """

    points: np.ndarray  # (N, M)
    weights: np.ndarray  # (N,)
    states: tuple

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "states", tuple((float(a), float(p)) for a, p in self.states))
        if pts.shape[0] != wts.size:
            raise ContractError("points and weights must have equal length")
        if pts.shape[1] != len(self.states):
            raise ContractError("tuple length must match the state alphabet")
        if np.any(wts < 0) or abs(wts.sum() - 1.0) > 1e-10:
            raise DomainError("weights must be >= 0 and sum to 1 within 1e-10")
        peaks = np.array([a for a, _ in self.states])
        if np.any(pts < -1e-12) or np.any(pts > peaks[None, :] + 1e-12):
            raise DomainError("every coordinate must respect its per-state peak")

    @property
    def support_size(self):
        return int(self.weights.size)


def _scales(x, hpa):
    xh = hpa_distort(np.asarray(x, dtype=float), hpa)
    return 1.0 + xh * xh


def log_output_density(y, dist, hpa):
    """log p(y; F) evaluated stably through logsumexp."""
    s = _scales(dist.locations, hpa)
    yv = np.asarray(y, dtype=float)
    lw = np.where(dist.weights > 0, np.log(np.maximum(dist.weights, 1e-300)), -np.inf)
    terms = lw[:, None] - np.log(s)[:, None] - np.multiply.outer(1.0 / s, yv.ravel())
    out = logsumexp(terms, axis=0).reshape(yv.shape) if yv.ndim else float(logsumexp(terms))
    return out


def output_density(y, dist, hpa):
    """Mixture output density p(y; F) = sum_i q_i p(y | x_i)."""
    yv = np.asarray(y, dtype=float)
    if np.any(yv < 0):
        raise DomainError("channel output y must be nonnegative")
    out = np.exp(log_output_density(yv, dist, hpa))
    return out if yv.ndim else float(out)


def _mi_density_nodes(x, dist, hpa, rule):
    """Shared kernel: i(x; F) for an array of evaluation amplitudes."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    s_eval = _scales(xv, hpa)
    s_sup = _scales(dist.locations, hpa)
    scale_max = max(float(s_eval.max()), float(s_sup.max()))
    y, w = halfline_nodes(rule, scale_max)
    log_pf = log_output_density(y, dist, hpa)
    log_px = -np.log(s_eval)[None, :] - np.outer(y, 1.0 / s_eval)  # (K, J)
    px = np.exp(log_px)
    integrand = px * (log_px - log_pf[:, None])
    return w @ integrand


def mi_density(x, dist, hpa, rule=None):
    """Mutual-information density i(x; F) = KL(p(.|x) || p(.; F)) >= 0."""
    rule = rule or QuadratureRule()
    xv = np.asarray(x, dtype=float)
    if np.any(xv < 0) or np.any(xv > dist.peak + 1e-12):
        raise DomainError("evaluation amplitude must lie in [0, peak]")
    out = _mi_density_nodes(xv, dist, hpa, rule)
    return out if xv.ndim else float(out[0])


def mutual_information(dist, hpa, rule=None):
    """I(F) = sum_i q_i i(x_i; F), in nats per channel use."""
    rule = rule or QuadratureRule()
    vals = _mi_density_nodes(dist.locations, dist, hpa, rule)
    return float(dist.weights @ vals)


def _mixture_log_cond(points, states, hpa, y):
    """log f(y | x_1..x_M) for extended tuples; (K, N)."""
    probs = np.array([p for _, p in states])
    log_probs = np.where(probs > 0, np.log(np.maximum(probs, 1e-300)), -np.inf)
    s = _scales(points, hpa)  # (N, M)
    # (K, N, M) is small for the supports seen here; logsumexp over states
    terms = log_probs[None, None, :] - np.log(s)[None, :, :] \
        - y[:, None, None] / s[None, :, :]
    return logsumexp(terms, axis=2)


def mixture_mi(dist, states, hpa, rule=None):
    """Mutual information of the Shannon-strategy extended channel."""
    rule = rule or QuadratureRule()
    states = tuple((float(a), float(p)) for a, p in states)
    if len(states) != dist.points.shape[1]:
        raise ContractError("distribution tuples do not match the state alphabet")
    s = _scales(dist.points, hpa)
    y, w = halfline_nodes(rule, float(s.max()))
    log_f = _mixture_log_cond(dist.points, states, hpa, y)  # (K, N)
    f = np.exp(log_f)
    log_mix = logsumexp(log_f + np.log(np.maximum(dist.weights, 1e-300))[None, :], axis=1)
    integrand = f * (log_f - log_mix[:, None])
    return float((w @ integrand) @ dist.weights)


def average_power(dist):
    """E[X^2]; for extended distributions, sum_i p_i E[X_i^2]."""
    if isinstance(dist, ExtendedDistribution):
        probs = np.array([p for _, p in dist.states])
        return float(dist.weights @ (dist.points**2 @ probs))
    return float(dist.weights @ dist.locations**2)


def average_energy(dist, hpa, eh):
    """E[harvested energy]; state-weighted for extended distributions."""
    if isinstance(dist, ExtendedDistribution):
        probs = np.array([p for _, p in dist.states])
        e = harvested_energy(dist.points, hpa, eh)
        return float(dist.weights @ (e @ probs))
    return float(dist.weights @ harvested_energy(dist.locations, hpa, eh))


def rate_bits(rate_nats):
    return rate_nats / np.log(2.0)
