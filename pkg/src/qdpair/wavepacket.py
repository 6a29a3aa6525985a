"""Temporal-mode model of the emitted photons and closed-form fidelity models.

The single-photon wavepacket is the convolution of a Gaussian excitation
pulse (width w_p) with an exponential radiative decay (lifetime T1):
an exponentially modified Gaussian in time.  Working in units of w_p
the profile depends only on K = T1 / w_p.  The temporal overlap of two
such wavepackets offset by a delay drives the indistinguishability and
hence the post-selected entanglement fidelity; the photon-number
background (g2) reduces the fidelity further through a weighted mixture
of post-selected outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc, erfcx

from . import photostat
from .errors import ContractError, ModelDomainError, NumericalError


@dataclass(frozen=True)
class WavepacketParams:
    """Temporal parameters of the emitted single-photon wavepacket."""

    t1_ps: float = 60.0          # radiative lifetime
    pulse_width_ps: float = 5.0  # Gaussian excitation pulse width (1 sigma)
    i0: float = 1.0              # residual indistinguishability at zero offset

    def __post_init__(self):
        if self.t1_ps <= 0.0:
            raise ContractError(f"t1_ps must be positive, got {self.t1_ps}")
        if self.pulse_width_ps <= 0.0:
            raise ContractError(f"pulse_width_ps must be positive, got {self.pulse_width_ps}")
        if not 0.0 <= self.i0 <= 1.0:
            raise ContractError(f"i0 must lie in [0, 1], got {self.i0}")

    @property
    def k(self) -> float:
        return self.t1_ps / self.pulse_width_ps


def profile_dimensionless(t, k: float):
    """Wavepacket intensity f(t, K) in time units of the pulse width.

        f(t, K) = (1/2K) exp(1/(2K^2) - t/K) erfc((1/K - t) / sqrt(2))

    normalised to unit integral.  Evaluated through the scaled
    complementary error function on the leading (t < 1/K) side so the
    Gaussian turn-on tail underflows gracefully instead of overflowing.
    """
    if k <= 0.0:
        raise ContractError(f"K must be positive, got {k}")
    t = np.asarray(t, dtype=float)
    z = (1.0 / k - t) / math.sqrt(2.0)
    out = np.empty_like(t)
    lead = z > 0.0
    # exp(1/(2K^2) - t/K) erfc(z) = erfcx(z) exp(-t^2/2) when z > 0
    out[lead] = erfcx(z[lead]) * np.exp(-0.5 * t[lead] ** 2)
    tail = ~lead
    out[tail] = np.exp(1.0 / (2.0 * k ** 2) - t[tail] / k) * erfc(z[tail])
    out /= 2.0 * k
    if out.ndim == 0:
        return float(out)
    return out


def intensity_profile(t_ps, params: WavepacketParams):
    """Wavepacket intensity density (1/ps) at lab time t_ps."""
    w = params.pulse_width_ps
    return profile_dimensionless(np.asarray(t_ps, dtype=float) / w, params.k) / w


def _support(k: float) -> tuple:
    """Dimensionless interval outside which f is negligible (< 1e-9 tail)."""
    return (-10.0, k * math.log(1e9))


def temporal_overlap(tau_ps: float, params: WavepacketParams,
                     squared: bool = True) -> float:
    """Normalised temporal overlap O(tau) of two identical wavepackets
    offset by tau_ps.

    The amplitude overlap is computed with amplitude = sqrt(intensity)
    and flat phase; by default O is the squared modulus of that overlap
    (``squared=False`` returns the bare amplitude overlap instead).
    O(0) = 1, O is even, O -> 0 for large offsets.
    """
    k = params.k
    delta = tau_ps / params.pulse_width_ps
    lo, hi = _support(k)
    a = lo + min(0.0, delta)
    b = hi + max(0.0, delta)

    def integrand(u):
        return math.sqrt(profile_dimensionless(u, k)
                         * profile_dimensionless(u - delta, k))

    pts = [p for p in (0.0, delta) if a < p < b]
    val, err = quad(integrand, a, b, points=pts or None,
                    epsabs=1e-12, epsrel=1e-8, limit=400)
    if err > max(1e-9, 1e-6 * abs(val)):
        raise NumericalError(
            f"overlap quadrature did not converge: value {val}, error estimate {err}")
    val = min(max(val, 0.0), 1.0)
    return val * val if squared else val


def indistinguishability_vs_offset(tau_ps: float, params: WavepacketParams,
                                   squared: bool = True) -> float:
    """Two-photon indistinguishability I(tau) = I0 * O(tau)."""
    return params.i0 * temporal_overlap(tau_ps, params, squared=squared)


def fidelity_from_indistinguishability(indistinguishability: float) -> float:
    """Post-selected entangled-state fidelity F = (1 + I) / 2."""
    if not 0.0 <= indistinguishability <= 1.0 + 1e-12:
        raise ContractError(
            f"indistinguishability {indistinguishability} outside [0, 1]")
    return (1.0 + min(indistinguishability, 1.0)) / 2.0


def calibrate_i0(fidelity_at_zero: float) -> float:
    """Invert F = (1 + I0)/2 for the zero-offset fidelity anchor."""
    if not 0.5 <= fidelity_at_zero <= 1.0:
        raise ModelDomainError(
            f"zero-offset fidelity {fidelity_at_zero} outside [0.5, 1]")
    return 2.0 * fidelity_at_zero - 1.0


def postselected_weights(g2: float, eta: float = 0.05) -> tuple:
    """Relative weights of the post-selected outcome classes.

    Given the per-pulse detection outcomes (X_2, X_Q, X_B, X_0) of each
    arm, a registered coincidence is the entangled signal-signal outcome
    with probability P(rho_Q) = X_Q^2 / 2, a same-pulse two-photon event
    P(rho_B0) = X_2 X_0, or a signal-background or background-background
    event P(rho_Bhalf) = X_Q X_B + X_B^2 / 2.  Returns the three weights
    normalised to unit sum, ordered (signal, background_half, background_zero).
    """
    dist = photostat.qd_distribution_from_g2(g2)
    x = photostat.detection_outcomes(dist, eta)
    p_q = 0.5 * x.x_signal ** 2
    p_b_half = x.x_signal * x.x_background + 0.5 * x.x_background ** 2
    p_b_zero = x.x_two * x.x_none
    total = p_q + p_b_half + p_b_zero
    if total <= 0.0:
        raise ModelDomainError("no post-selected events at these parameters")
    return (p_q / total, p_b_half / total, p_b_zero / total)


def fidelity_vs_g2(indistinguishability: float, g2: float, eta: float = 0.05) -> float:
    """Weighted post-selected fidelity including the g2 background.

        F = [P(rho_Q) (1+I)/2 + P(rho_Bhalf) / 2]
            / [P(rho_Q) + P(rho_Bhalf) + P(rho_B0)]
    """
    if not 0.0 <= indistinguishability <= 1.0:
        raise ContractError(
            f"indistinguishability {indistinguishability} outside [0, 1]")
    if not 0.0 < eta <= 1.0:
        raise ContractError(f"eta {eta} outside (0, 1]")
    p_q, p_b_half, _ = postselected_weights(g2, eta)
    return p_q * (1.0 + indistinguishability) / 2.0 + p_b_half * 0.5


def offset_curve(taus_ps, params: WavepacketParams, squared: bool = True):
    """Sweep of (tau, indistinguishability, fidelity) over delay offsets."""
    taus = np.asarray(taus_ps, dtype=float)
    ind = np.array([indistinguishability_vs_offset(t, params, squared=squared)
                    for t in taus])
    fid = (1.0 + ind) / 2.0
    return taus, ind, fid


def g2_curve(g2_values, indistinguishability: float, eta: float = 0.05):
    """Sweep of (g2, fidelity) at fixed indistinguishability."""
    g2s = np.asarray(g2_values, dtype=float)
    fid = np.array([fidelity_vs_g2(indistinguishability, g, eta) for g in g2s])
    return g2s, fid
