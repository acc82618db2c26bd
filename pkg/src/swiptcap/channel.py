"""Physical-layer models: HPA distortion, harvested energy, fading densities.

Everything here works in normalized units, where the conditional output
density given a distorted amplitude xh is exponential with scale 1 + xh^2.
``normalize_spec`` maps physical variances onto that form at the boundary.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .numerics import bessel_i0

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class HpaModel:
    """Solid-state power amplifier AM-to-AM model.

    a_s is the output saturation voltage, beta the smoothness of the
    transition into saturation.  ``bypass=True`` models an ideal linear
    amplifier (distortion is the identity).
    """

    a_s: float = 1.0
    beta: float = 1.0
    bypass: bool = False

    def __post_init__(self):
        if not (self.a_s > 0 and self.beta > 0):
            raise DomainError("HPA parameters a_s and beta must be positive")


@dataclass(frozen=True)
class EhModel:
    """Energy-harvester model: rectifier constant b, EH link gain h2."""

    b: float = 0.5
    h2: float = 1.0

    def __post_init__(self):
        if self.b < 0:
            raise DomainError("rectifier constant b must be >= 0")


@dataclass(frozen=True)
class ChannelSpec:
    """Fading and noise variances of the information link (linear units)."""

    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0

    def __post_init__(self):
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise DomainError("variances must be positive")


@dataclass(frozen=True)
class ConstraintSet:
    """Average power P, peak-power state alphabet, required harvested energy.

    ``states`` is a tuple of (peak amplitude, probability) pairs; a single
    state is the static peak-power case.
    """

    avg_power: float
    states: tuple
    e_req: float = 1.0

    def __post_init__(self):
        if self.avg_power <= 0:
            raise DomainError("average power must be positive")
        states = tuple((float(a), float(p)) for a, p in self.states)
        object.__setattr__(self, "states", states)
        probs = np.array([p for _, p in states])
        amps = np.array([a for a, _ in states])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError("state probabilities must be >= 0 and sum to 1")
        if np.any(amps < 0):
            raise DomainError("peak amplitudes must be >= 0")
        if np.any(np.diff(amps) <= 0):
            raise DomainError("peak amplitudes must be ascending and distinct")

    @property
    def is_static(self):
        return len(self.states) == 1

    @property
    def peak(self):
        if not self.is_static:
            raise ContractError("peak is defined only for a single-state alphabet")
        return self.states[0][0]


@dataclass(frozen=True)
class ScaleReport:
    """Scale factors applied by normalize_spec, kept for inverse mapping."""

    amplitude_scale: float
    power_scale: float


def hpa_distort(r, hpa):
    """AM-to-AM conversion d(r) = r / [1 + (r/a_s)^(2 beta)]^(1/(2 beta))."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("amplitudes must be nonnegative")
    if hpa.bypass:
        return arr if arr.ndim else float(arr)
    out = arr / (1.0 + (arr / hpa.a_s) ** (2 * hpa.beta)) ** (1.0 / (2 * hpa.beta))
    return out if arr.ndim else float(out)


def harvested_energy(x, hpa, eh):
    """Per-symbol harvested energy I0(sqrt(2) * b * h2 * d(x)); >= 1."""
    xh = hpa_distort(x, hpa)
    return bessel_i0(_SQRT2 * eh.b * abs(eh.h2) * np.abs(xh))


def cond_density(y, x, hpa):
    """Conditional output density p(y|x) = exp(-y/(1+d(x)^2)) / (1+d(x)^2)."""
    yv = np.asarray(y, dtype=float)
    if np.any(yv < 0):
        raise DomainError("channel output y must be nonnegative")
    xh = hpa_distort(x, hpa)
    s = 1.0 + xh * xh
    out = np.exp(-yv / s) / s
    return out if yv.ndim else float(out)


def mixture_density(y, xvec, probs, hpa):
    """State-mixture channel density sum_i p_i p(y | x_i)."""
    xvec = np.asarray(xvec, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if xvec.shape != probs.shape:
        raise ContractError("xvec and state probabilities must have equal length")
    yv = np.asarray(y, dtype=float)
    if np.any(yv < 0):
        raise DomainError("channel output y must be nonnegative")
    s = 1.0 + hpa_distort(xvec, hpa) ** 2
    out = (probs / s) @ np.exp(-np.multiply.outer(1.0 / s, yv))
    return out if yv.ndim else float(out)


def normalize_spec(spec, constraints):
    """Rescale constraints so the channel takes the unit-parameter form.

    Amplitudes scale by sigma1/sigma2 and powers by sigma1^2/sigma2^2.  The
    returned ScaleReport records both factors; callers mapping a physical
    EH gain h2 into normalized units should divide it by amplitude_scale.
    """
    amp = math.sqrt(spec.sigma1_sq / spec.sigma2_sq)
    pwr = spec.sigma1_sq / spec.sigma2_sq
    scaled = ConstraintSet(
        avg_power=constraints.avg_power * pwr,
        states=tuple((a * amp, p) for a, p in constraints.states),
        e_req=constraints.e_req,
    )
    return scaled, ScaleReport(amplitude_scale=amp, power_scale=pwr)
