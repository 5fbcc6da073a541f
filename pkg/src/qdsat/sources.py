# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Photon-number statistics of the quantum-dot and weak-coherent-pulse sources.

The quantum-dot source is described by its non-empty pulse probability ``R`` and
an upper bound ``Pm`` on the multi-photon probability per slot. ``Pm`` is not
measured directly; it follows from the coincidence-to-solitary click ratio
``kappa`` of a Hanbury Brown and Twiss (HBT) measurement, see
:func:`multiphoton_bound`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple, Union

import numpy as np
from scipy import special, stats

from qdsat.errors import (
    DomainError,
    EstimatorInvalidError,
    InconsistentDistributionError,
    InsufficientDataError,
)
from qdsat.numerics import linear_to_loss_db, loss_db_to_linear

if TYPE_CHECKING:
    import numpy.typing as npt

__all__ = [
    "HbtMeasurement",
    "PhotonNumberDistribution",
    "PhotonNumberSeries",
    "QDSourceSpec",
    "SourceModel",
    "WCPSourceSpec",
    "coincidence_probability",
    "g2_zero",
    "kappa_from_counts",
    "kappa_upper_limit",
    "loss_db_to_linear",
    "multiphoton_bound",
    "p2_from_kappa",
    "poisson_distribution",
    "qd_distribution",
    "solitary_probability",
]

#: HBT bench values of the reference quantum-dot characterization
BENCH_KAPPA = 1.1e-5
BENCH_EFFICIENCY = 0.06
BENCH_R = 0.033
#: multiphoton_bound(BENCH_KAPPA, BENCH_EFFICIENCY, BENCH_R)
BENCH_PM = 1.2106392e-5
#: the bound reported alongside those inputs; it does not follow from them
REPORTED_PM = 4.5e-6

#: three-way coincidences were measured below this per slot, so n > 2 is dropped
NEGLIGIBLE_TAIL = 1e-9
_NORMALIZATION_SLACK = 1e-12


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        msg = f"{name} must lie in [0, 1], got {value!r}"
        raise DomainError(msg)


def _check_efficiency(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        msg = f"efficiency must lie in (0, 1], got {eta!r}"
        raise DomainError(msg)


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Probabilities of emitting 0, 1 or 2 photons in a pulse slot.

    Anything not covered by ``p0 + p1 + p2`` is a declared-negligible tail of
    higher photon numbers, exposed as :attr:`tail`.
    """

    p0: float
    p1: float
    p2: float

    def __post_init__(self):
        for name in ("p0", "p1", "p2"):
            _check_probability(name, getattr(self, name))
        total = self.p0 + self.p1 + self.p2
        if total > 1.0 + _NORMALIZATION_SLACK:
            msg = f"photon-number probabilities sum to {total!r} > 1"
            raise InconsistentDistributionError(msg)

    @property
    def tail(self) -> float:
        return max(0.0, 1.0 - (self.p0 + self.p1 + self.p2))

    @property
    def non_empty(self) -> float:
        return self.p1 + self.p2

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.p0, self.p1, self.p2])


class PhotonNumberSeries(NamedTuple):
    """A photon-number distribution truncated at ``len(probabilities) - 1``."""

    probabilities: npt.NDArray[np.float64]
    tail: float

    def to_distribution(self) -> PhotonNumberDistribution:
        """Keep the n <= 2 terms; warns if the dropped mass is not negligible."""
        probs = self.probabilities
        dropped = self.tail + float(np.sum(probs[3:]))
        if dropped > NEGLIGIBLE_TAIL:
            warnings.warn(
                f"truncating at two photons drops {dropped:.3g} of probability",
                stacklevel=2,
            )
        return PhotonNumberDistribution(
            float(probs[0]), float(probs[1]), float(probs[2])
        )


def poisson_distribution(mu: float, n_max: int = 40) -> PhotonNumberSeries:
    """Coherent-state photon statistics p_i = exp(-mu) mu^i / i! for i <= n_max."""
    if mu < 0 or math.isnan(mu):
        msg = f"mean photon number must be non-negative, got {mu!r}"
        raise DomainError(msg)
    if n_max < 2:
        msg = f"truncation order must be at least 2, got {n_max}"
        raise DomainError(msg)
    i = np.arange(n_max + 1)
    # xlogy(0, 0) == 0 keeps the vacuum exact
    probs = np.exp(special.xlogy(i, mu) - mu - special.gammaln(i + 1))
    tail = max(0.0, 1.0 - math.fsum(probs))
    return PhotonNumberSeries(probs, tail)


def qd_distribution(R: float, Pm: float) -> PhotonNumberDistribution:
    """Worst-case quantum-dot statistics: all of the multi-photon bound is realized."""
    _check_probability("R", R)
    _check_probability("Pm", Pm)
    if Pm > R:
        msg = f"multi-photon bound Pm={Pm!r} exceeds the non-empty probability R={R!r}"
        raise InconsistentDistributionError(msg)
    return PhotonNumberDistribution(1.0 - R, R - Pm, Pm)


def coincidence_probability(dist: PhotonNumberDistribution, eta: float) -> float:
    """Probability that both HBT detectors click in the same window."""
    _check_efficiency(eta)
    return 0.5 * dist.p2 * eta**2


def solitary_probability(dist: PhotonNumberDistribution, eta: float) -> float:
    """Probability that exactly one HBT detector clicks in a window."""
    _check_efficiency(eta)
    return dist.p1 * eta + dist.p2 * eta * (1.5 - eta)


def _estimator_denominator(kappa: float, eta: float) -> float:
    _check_efficiency(eta)
    if kappa < 0 or math.isnan(kappa):
        msg = f"kappa must be non-negative, got {kappa!r}"
        raise DomainError(msg)
    denominator = eta - 3.0 * kappa + 2.0 * kappa * eta
    if denominator <= 0:
        msg = (
            f"kappa={kappa!r} is too large for eta={eta!r}: "
            f"estimator denominator is {denominator!r}"
        )
        raise EstimatorInvalidError(msg)
    return denominator


def multiphoton_bound(kappa: float, eta: float, R: float) -> float:
    """Upper bound on the multi-photon probability from the HBT ratio kappa."""
    _check_probability("R", R)
    return 2.0 * kappa * R / _estimator_denominator(kappa, eta)


def p2_from_kappa(kappa: float, eta: float, p1: float) -> float:
    """Two-photon probability that reproduces kappa exactly for a given p1."""
    _check_probability("p1", p1)
    return 2.0 * kappa * p1 / _estimator_denominator(kappa, eta)


def g2_zero(dist: PhotonNumberDistribution) -> float:
    """Second-order correlation at zero delay of a (truncated) distribution."""
    mean = dist.p1 + 2.0 * dist.p2
    if mean == 0:
        msg = "g2(0) is undefined for the vacuum"
        raise InsufficientDataError(msg)
    return 2.0 * dist.p2 / mean**2


@dataclass(frozen=True)
class HbtMeasurement:
    """Click statistics of a 50:50 beam splitter with one detector per output."""

    N_C: int
    N_S: int
    N: int
    eta: float

    def __post_init__(self):
        """Check that the counts could come from ``N`` windows.

        A window is either a coincidence, a solitary click or empty, so the
        two counts share ``N``. Neither bounds the other: a strongly bunched
        source can give ``N_C > N_S``, which only makes kappa large.
        """
        if min(self.N_C, self.N_S) < 0 or self.N_C + self.N_S > self.N:
            msg = (
                "counts must be non-negative with N_C + N_S <= N, "
                f"got N_C={self.N_C}, N_S={self.N_S}, N={self.N}"
            )
            raise DomainError(msg)
        _check_efficiency(self.eta)

    @property
    def kappa(self) -> float:
        return kappa_from_counts(self)


def kappa_from_counts(m: HbtMeasurement) -> float:
    if m.N_S == 0:
        msg = "no solitary clicks recorded, kappa is undefined"
        raise InsufficientDataError(msg)
    return m.N_C / m.N_S


def kappa_upper_limit(m: HbtMeasurement, eps: float) -> float:
    """Upper confidence limit on kappa that fails with probability at most ``eps``.

    ``N_C`` is raised to its exact one-sided Poisson upper limit; ``N_S`` is
    treated as exact.
    """
    if not 0.0 < eps < 1.0:
        msg = f"eps must lie in (0, 1), got {eps!r}"
        raise DomainError(msg)
    if m.N_S == 0:
        msg = "no solitary clicks recorded, kappa is undefined"
        raise InsufficientDataError(msg)
    upper = 0.5 * stats.chi2.ppf(1.0 - eps, 2 * (m.N_C + 1))
    return float(upper) / m.N_S


@dataclass(frozen=True)
class QDSourceSpec:
    """Quantum-dot source: repetition rate, brightness R and multi-photon bound Pm.

    ``internal_loss`` (dB) and ``R`` describe the same thing; pass either one
    and the other is derived. If both are given they must agree.
    """

    rep_rate: float
    R: float | None = None
    Pm: float = 0.0
    internal_loss: float | None = None

    def __post_init__(self):
        if not self.rep_rate > 0:
            msg = f"repetition rate must be positive, got {self.rep_rate!r}"
            raise DomainError(msg)
        if self.R is None and self.internal_loss is None:
            msg = "either R or internal_loss must be given"
            raise DomainError(msg)
        if self.R is None:
            object.__setattr__(self, "R", loss_db_to_linear(self.internal_loss))
        elif self.internal_loss is None:
            object.__setattr__(self, "internal_loss", linear_to_loss_db(self.R))
        elif not math.isclose(
            self.R, loss_db_to_linear(self.internal_loss), rel_tol=0, abs_tol=1e-9
        ):
            msg = (
                f"R={self.R!r} does not match internal_loss={self.internal_loss!r} dB"
            )
            raise InconsistentDistributionError(msg)
        # validates 0 <= Pm <= R <= 1
        _ = self.distribution

    @classmethod
    def from_hbt(
        cls,
        rep_rate: float,
        kappa: float,
        bench_efficiency: float,
        *,
        R: float | None = None,
        internal_loss: float | None = None,
    ) -> QDSourceSpec:
        """Build a source whose Pm is the kappa bound evaluated at its own R.

        The bench ratio kappa is a property of the emitter, so extrapolating to
        a lower internal loss keeps kappa and recomputes Pm at the new R.
        """
        if R is None:
            if internal_loss is None:
                msg = "either R or internal_loss must be given"
                raise DomainError(msg)
            R = loss_db_to_linear(internal_loss)
        Pm = multiphoton_bound(kappa, bench_efficiency, R)
        return cls(rep_rate=rep_rate, R=R, Pm=Pm, internal_loss=internal_loss)

    @cached_property
    def distribution(self) -> PhotonNumberDistribution:
        assert self.R is not None
        return qd_distribution(self.R, self.Pm)

    @property
    def effective_rate(self) -> float:
        """Rate of non-empty pulses leaving the source."""
        assert self.R is not None
        return self.rep_rate * self.R


@dataclass(frozen=True)
class WCPSourceSpec:
    """Phase-randomized weak coherent pulses with one signal and one decoy level."""

    rep_rate: float
    mu: float = 0.5
    nu: float = 0.1
    K_mu: float = 0.9

    def __post_init__(self):
        if not self.rep_rate > 0:
            msg = f"repetition rate must be positive, got {self.rep_rate!r}"
            raise DomainError(msg)
        if not 0.0 <= self.nu < self.mu:
            msg = (
                "intensities must satisfy 0 <= nu < mu, "
                f"got mu={self.mu!r}, nu={self.nu!r}"
            )
            raise DomainError(msg)
        if not 0.0 < self.K_mu <= 1.0:
            msg = f"signal fraction K_mu must lie in (0, 1], got {self.K_mu!r}"
            raise DomainError(msg)


SourceModel = Union[QDSourceSpec, WCPSourceSpec]
