"""Photon-number statistics and the efficiency/rate budget of the source.

Covers three things: (i) the per-pulse photon-number distribution of a
pulsed quantum emitter parameterised by its second-order correlation
g2, and of a parametric pair source parameterised by its single-pair
probability; (ii) the per-pulse detection-outcome probabilities behind
the weighted-fidelity model; (iii) the conversion between the measured
optical-loss budget and the entangled-pair rate, both forward (from the
emitter) and backward (from detected coincidences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import ConfigError, ContractError, ModelDomainError


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Per-pulse photon-number probabilities P_0 .. P_k."""

    probs: tuple
    g2_requested: float = None  # set when derived from a g2 target

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if not p:
            raise ContractError("distribution needs at least one entry")
        if any(x < -1e-12 for x in p):
            raise ContractError(f"negative probability in {p}")
        if abs(sum(p) - 1.0) > 1e-9:
            raise ContractError(f"probabilities sum to {sum(p)!r}, expected 1")
        object.__setattr__(self, "probs", p)

    @property
    def mean(self) -> float:
        return sum(n * p for n, p in enumerate(self.probs))

    @property
    def g2(self) -> float:
        """Pulsed g2 recomputed from the stored probabilities."""
        mu = self.mean
        if mu <= 0.0:
            return 0.0
        return sum(n * (n - 1) * p for n, p in enumerate(self.probs)) / mu ** 2

    def truncated(self, nmax: int) -> "PhotonNumberDistribution":
        """Drop terms above nmax and renormalise."""
        if nmax < 0:
            raise ContractError("nmax must be non-negative")
        p = self.probs[:nmax + 1]
        total = sum(p)
        if total <= 0.0:
            raise ContractError("truncation removed all probability")
        return PhotonNumberDistribution(tuple(x / total for x in p),
                                        g2_requested=self.g2_requested)


def qd_distribution_from_g2(g2: float) -> PhotonNumberDistribution:
    """Per-pulse distribution of a pulsed single-photon emitter with
    two-photon component g2.

    Mapping: P_2 = g2/2, P_1 = 1 - g2, P_0 = g2/2.  The mean is then
    exactly 1, so recomputing g2 from the distribution returns the
    input; that self-consistency is checked here.  Valid for g2 < 0.5.
    """
    if not 0.0 <= g2 < 0.5:
        raise ModelDomainError(f"g2={g2} outside [0, 0.5) where the mapping holds")
    dist = PhotonNumberDistribution((g2 / 2.0, 1.0 - g2, g2 / 2.0), g2_requested=g2)
    if abs(dist.g2 - g2) > 1e-9:
        raise ContractError("g2 round trip failed")  # pragma: no cover
    return dist


def spdc_pair_distribution(pair_prob: float, statistics: str = "thermal",
                           max_pairs: int = 4) -> PhotonNumberDistribution:
    """Pair-number distribution of a parametric source with P_1 = pair_prob.

    ``thermal`` inverts P_1 = (1 - lam) lam for the small root
    lam = (1 - sqrt(1 - 4 p)) / 2 (single-mode statistics);
    ``poissonian`` inverts nu e^{-nu} = p for the small root
    (strongly multimode statistics).  The result is truncated at
    ``max_pairs`` pairs and renormalised.
    """
    if max_pairs < 1:
        raise ContractError("max_pairs must be at least 1")
    if statistics == "thermal":
        if not 0.0 < pair_prob <= 0.25:
            raise ModelDomainError(
                f"thermal statistics require 0 < P1 <= 0.25, got {pair_prob}")
        lam = (1.0 - math.sqrt(1.0 - 4.0 * pair_prob)) / 2.0
        raw = [(1.0 - lam) * lam ** n for n in range(max_pairs + 1)]
    elif statistics == "poissonian":
        if not 0.0 < pair_prob <= math.exp(-1.0):
            raise ModelDomainError(
                f"poissonian statistics require 0 < P1 <= 1/e, got {pair_prob}")
        nu = brentq(lambda x: x * math.exp(-x) - pair_prob, 1e-12, 1.0,
                    xtol=1e-15, rtol=1e-14)
        raw = [math.exp(-nu) * nu ** n / math.factorial(n)
               for n in range(max_pairs + 1)]
    else:
        raise ContractError(f"unknown statistics {statistics!r}")
    total = sum(raw)
    return PhotonNumberDistribution(tuple(x / total for x in raw))


@dataclass(frozen=True)
class DetectionOutcomes:
    """Per-pulse single-arm detection outcome probabilities.

    x_two:        both emitted photons detected
    x_signal:     the intended single photon detected (alone)
    x_background: only the extra (background) photon detected
    x_none:       nothing detected
    """

    x_two: float
    x_signal: float
    x_background: float
    x_none: float

    def as_tuple(self):
        return (self.x_two, self.x_signal, self.x_background, self.x_none)


def detection_outcomes(dist: PhotonNumberDistribution, eta: float) -> DetectionOutcomes:
    """Detection-outcome probabilities for a pulse with up to two photons
    passing a total transmission ``eta``.

        X_2 = P_2 eta^2
        X_Q = P_1 eta + P_2 eta (1 - eta)
        X_B = P_2 eta (1 - eta)
        X_0 = P_0 + P_1 (1 - eta) + P_2 (1 - eta)^2

    which sum to one exactly.
    """
    if not 0.0 <= eta <= 1.0:
        raise ContractError(f"eta={eta} outside [0, 1]")
    if len(dist.probs) > 3 and any(p > 0 for p in dist.probs[3:]):
        raise ContractError("detection_outcomes requires support on at most 2 photons")
    p = list(dist.probs) + [0.0, 0.0]
    p0, p1, p2 = p[0], p[1], p[2]
    return DetectionOutcomes(
        x_two=p2 * eta ** 2,
        x_signal=p1 * eta + p2 * eta * (1.0 - eta),
        x_background=p2 * eta * (1.0 - eta),
        x_none=p0 + p1 * (1.0 - eta) + p2 * (1.0 - eta) ** 2,
    )


@dataclass(frozen=True)
class Efficiency:
    """A transmission (or detection) efficiency with 1-sigma uncertainty."""

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.value <= 1.0:
            raise ContractError(f"efficiency value {self.value} outside (0, 1]")
        if self.sigma < 0.0:
            raise ContractError("efficiency sigma must be non-negative")


@dataclass(frozen=True)
class EfficiencyChain:
    """The loss budget of the source, split by optical role.

    Components before the output coupler act on both photons of a pair
    (squared in the rate), except the two interferometer arms which act
    on one photon each.  Per-arm analysis components (tomography optics,
    fibre coupling, detector) sit after the coupler and are indexed by
    output arm.
    """

    source: Efficiency
    switch: tuple                 # routing optics traversed by every photon
    long_arm: Efficiency          # delayed interferometer arm
    short_arm: Efficiency
    output_coupler: Efficiency    # recombination beamsplitter, per photon
    tomography: tuple             # per analysis arm
    fiber: tuple                  # per analysis arm
    detector: tuple               # per analysis arm

    def __post_init__(self):
        for name in ("switch", "tomography", "fiber", "detector"):
            val = getattr(self, name)
            if not isinstance(val, tuple) or not all(isinstance(e, Efficiency) for e in val):
                raise ContractError(f"{name} must be a tuple of Efficiency values")
        if len(self.tomography) != 2 or len(self.fiber) != 2 or len(self.detector) != 2:
            raise ContractError("per-arm roles need exactly two entries")
        if not self.switch:
            raise ContractError("switch chain must not be empty")

    @property
    def switch_product(self) -> float:
        out = 1.0
        for e in self.switch:
            out *= e.value
        return out

    def arm_efficiency(self, arm: int) -> float:
        """Post-coupler transmission of one analysis arm (0 or 1)."""
        if arm not in (0, 1):
            raise ContractError("arm must be 0 or 1")
        return (self.tomography[arm].value * self.fiber[arm].value
                * self.detector[arm].value)

    @classmethod
    def measured(cls) -> "EfficiencyChain":
        """The measured loss budget of the experiment this model follows."""
        return cls(
            source=Efficiency(0.49, 0.03),
            switch=(Efficiency(0.83, 0.02),    # fibre mating sleeve + paddles
                    Efficiency(0.97, 0.002),   # lens pair
                    Efficiency(0.997, 0.002),  # intensity modulator
                    Efficiency(0.988, 0.002)), # splitting PBS
            long_arm=Efficiency(0.913, 0.005),
            short_arm=Efficiency(0.987, 0.005),
            output_coupler=Efficiency(0.90, 0.01),
            tomography=(Efficiency(0.90, 0.01), Efficiency(0.90, 0.01)),
            fiber=(Efficiency(0.50, 0.02), Efficiency(0.536, 0.02)),
            detector=(Efficiency(0.90, 0.03), Efficiency(0.78, 0.03)),
        )

    def to_dict(self) -> dict:
        def enc(e):
            return [e.value, e.sigma]
        return {
            "source": enc(self.source),
            "switch": [enc(e) for e in self.switch],
            "long_arm": enc(self.long_arm),
            "short_arm": enc(self.short_arm),
            "output_coupler": enc(self.output_coupler),
            "tomography": [enc(e) for e in self.tomography],
            "fiber": [enc(e) for e in self.fiber],
            "detector": [enc(e) for e in self.detector],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EfficiencyChain":
        required = {"source", "switch", "long_arm", "short_arm",
                    "output_coupler", "tomography", "fiber", "detector"}
        unknown = set(data) - required
        if unknown:
            raise ConfigError(f"unknown efficiency roles {sorted(unknown)}")
        missing = required - set(data)
        if missing:
            raise ConfigError(f"missing efficiency roles {sorted(missing)}")

        def dec(v):
            if not isinstance(v, (list, tuple)) or len(v) != 2:
                raise ConfigError(f"efficiency entries are [value, sigma], got {v!r}")
            return Efficiency(float(v[0]), float(v[1]))

        try:
            return cls(
                source=dec(data["source"]),
                switch=tuple(dec(v) for v in data["switch"]),
                long_arm=dec(data["long_arm"]),
                short_arm=dec(data["short_arm"]),
                output_coupler=dec(data["output_coupler"]),
                tomography=tuple(dec(v) for v in data["tomography"]),
                fiber=tuple(dec(v) for v in data["fiber"]),
                detector=tuple(dec(v) for v in data["detector"]),
            )
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc


def forward_rate(chain: EfficiencyChain, rep_rate_hz: float):
    """Entangled-pair rate at the output coupler, and its 1-sigma uncertainty.

    Pairs are attempted every second pulse and post-selected with
    probability 1/2, so

        R_E = (R_L / 4) * eta_src^2 * eta_switch^2
              * eta_long * eta_short * eta_coupler^2

    The uncertainty is first-order propagation of the per-component
    1-sigma values through the product.
    """
    if rep_rate_hz <= 0.0:
        raise ContractError("rep_rate_hz must be positive")
    rate = (rep_rate_hz / 4.0
            * chain.source.value ** 2
            * chain.switch_product ** 2
            * chain.long_arm.value
            * chain.short_arm.value
            * chain.output_coupler.value ** 2)
    rel_sq = (2.0 * chain.source.sigma / chain.source.value) ** 2
    rel_sq += sum((2.0 * e.sigma / e.value) ** 2 for e in chain.switch)
    rel_sq += (chain.long_arm.sigma / chain.long_arm.value) ** 2
    rel_sq += (chain.short_arm.sigma / chain.short_arm.value) ** 2
    rel_sq += (2.0 * chain.output_coupler.sigma / chain.output_coupler.value) ** 2
    return rate, rate * math.sqrt(rel_sq)


def back_propagate_rate(measured_pair_rate_hz: float, chain: EfficiencyChain) -> float:
    """Infer the pair rate at the output coupler from detected coincidences.

    Divides the measured coincidence rate by the product of both
    analysis arms' post-coupler transmissions.
    """
    if measured_pair_rate_hz < 0.0:
        raise ContractError("measured rate must be non-negative")
    return measured_pair_rate_hz / (chain.arm_efficiency(0) * chain.arm_efficiency(1))
