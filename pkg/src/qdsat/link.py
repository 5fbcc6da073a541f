# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Per-slot detection and error probabilities of a satellite pass."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, NamedTuple

from qdsat.errors import DomainError, NoDetectionsError
from qdsat.numerics import loss_db_to_linear
from qdsat.sources import PhotonNumberDistribution, QDSourceSpec

if TYPE_CHECKING:
    from qdsat.sources import SourceModel

__all__ = [
    "ChannelSpec",
    "LinkBudget",
    "PassCounts",
    "ReceiverSpec",
    "SlotStatistics",
    "background_click_prob",
    "end_to_end_transmittance",
    "pass_counts",
    "qber_expected",
    "qd_gain",
    "slot_statistics",
    "wcp_gain",
]


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        msg = f"{name} must lie in [0, 1], got {value!r}"
        raise DomainError(msg)


@dataclass(frozen=True)
class ReceiverSpec:
    """Passive-basis BB84 receiver with one detector per polarization."""

    detector_efficiency: float = 0.55
    receiver_optical_loss: float = 0.0
    num_detectors: int = 4
    coincidence_window: float = 5e-9
    dark_count_prob: float = 0.0
    intrinsic_error: float = 0.02

    def __post_init__(self):
        _check_probability("detector_efficiency", self.detector_efficiency)
        _check_probability("dark_count_prob", self.dark_count_prob)
        _check_probability("intrinsic_error", self.intrinsic_error)
        if self.receiver_optical_loss < 0:
            msg = (
                "receiver optical loss must be non-negative, "
                f"got {self.receiver_optical_loss!r} dB"
            )
            raise DomainError(msg)
        if self.num_detectors < 2:
            msg = f"need at least two detectors, got {self.num_detectors}"
            raise DomainError(msg)
        if not self.coincidence_window > 0:
            msg = (
                "coincidence window must be positive, "
                f"got {self.coincidence_window!r}"
            )
            raise DomainError(msg)


@dataclass(frozen=True)
class ChannelSpec:
    loss: float = 25.0
    background_rate: float = 500.0
    pass_duration: float = 100.0

    def __post_init__(self):
        if self.loss < 0 or math.isnan(self.loss):
            msg = f"channel loss must be non-negative, got {self.loss!r} dB"
            raise DomainError(msg)
        if self.background_rate < 0:
            msg = (
                "background rate must be non-negative, "
                f"got {self.background_rate!r}"
            )
            raise DomainError(msg)
        if not self.pass_duration > 0:
            msg = f"pass duration must be positive, got {self.pass_duration!r}"
            raise DomainError(msg)


@dataclass(frozen=True)
class LinkBudget:
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    receiver: ReceiverSpec = field(default_factory=ReceiverSpec)

    def with_loss(self, loss: float) -> LinkBudget:
        return replace(self, channel=replace(self.channel, loss=loss))

    def with_duration(self, duration: float) -> LinkBudget:
        return replace(self, channel=replace(self.channel, pass_duration=duration))

    @property
    def transmittance(self) -> float:
        return end_to_end_transmittance(self.channel, self.receiver)

    @property
    def background(self) -> float:
        return background_click_prob(self.channel, self.receiver)


def background_click_prob(channel: ChannelSpec, receiver: ReceiverSpec) -> float:
    """Probability of a background or dark click in one coincidence window."""
    p_bg = (
        channel.background_rate * receiver.coincidence_window
        + receiver.num_detectors * receiver.dark_count_prob
    )
    return min(max(p_bg, 0.0), 1.0)


def end_to_end_transmittance(channel: ChannelSpec, receiver: ReceiverSpec) -> float:
    return (
        loss_db_to_linear(channel.loss)
        * loss_db_to_linear(receiver.receiver_optical_loss)
        * receiver.detector_efficiency
    )


def wcp_gain(mu: float, eta_tot: float, p_bg: float) -> float:
    """Probability that a coherent pulse of mean ``mu`` gives at least one click."""
    if mu < 0:
        msg = f"mean photon number must be non-negative, got {mu!r}"
        raise DomainError(msg)
    # -expm1 keeps the small-mu*eta limit accurate
    no_signal = -math.expm1(-mu * eta_tot)
    return no_signal + p_bg * (1.0 - no_signal)


def qd_gain(dist: PhotonNumberDistribution, eta_tot: float, p_bg: float) -> float:
    """Click probability per slot; the undeclared tail counts as empty slots."""
    _check_probability("eta_tot", eta_tot)
    _check_probability("p_bg", p_bg)
    loss = 1.0 - eta_tot
    no_photon = dist.p0 + dist.tail + dist.p1 * loss + dist.p2 * loss**2
    return 1.0 - (1.0 - p_bg) * no_photon


def qber_expected(p_signal: float, p_bg: float, e_d: float) -> float:
    """Expected error rate when background clicks are random bits."""
    total = p_signal + p_bg
    if not total > 0:
        msg = "no signal and no background: the error rate is undefined"
        raise NoDetectionsError(msg)
    return (e_d * p_signal + 0.5 * p_bg) / total


class PassCounts(NamedTuple):
    n_sent: float
    n_detected: float
    m_sifted: float


def pass_counts(rep_rate: float, duration: float, q: float, p_det: float) -> PassCounts:
    """Expected sent, detected and sifted counts over a pass."""
    if not rep_rate > 0:
        msg = f"repetition rate must be positive, got {rep_rate!r}"
        raise DomainError(msg)
    n_sent = rep_rate * duration
    n_detected = n_sent * p_det
    return PassCounts(n_sent, n_detected, q * n_detected)


@dataclass(frozen=True)
class SlotStatistics:
    p_signal: float
    p_background: float
    p_det: float
    E: float
    n_sent: float
    n_detected: float

    def __post_init__(self):
        # union bound, with a little room for rounding
        if self.p_det > (self.p_signal + self.p_background) * (1 + 1e-12):
            msg = "detection probability exceeds signal plus background"
            raise DomainError(msg)


def slot_statistics(
    source: SourceModel, link: LinkBudget, *, mu: float | None = None
) -> SlotStatistics:
    """Expected per-slot statistics of a source over a link.

    For a weak-coherent source the intensity defaults to the signal level;
    pass ``mu`` to get the decoy statistics instead.
    """
    eta = link.transmittance
    p_bg = link.background
    if isinstance(source, QDSourceSpec):
        dist = source.distribution
        p_signal = qd_gain(dist, eta, 0.0)
        p_det = qd_gain(dist, eta, p_bg)
    else:
        intensity = source.mu if mu is None else mu
        p_signal = wcp_gain(intensity, eta, 0.0)
        p_det = wcp_gain(intensity, eta, p_bg)
    E = qber_expected(p_signal, p_bg, link.receiver.intrinsic_error)
    n_sent = source.rep_rate * link.channel.pass_duration
    return SlotStatistics(
        p_signal=p_signal,
        p_background=p_bg,
        p_det=p_det,
        E=E,
        n_sent=n_sent,
        n_detected=n_sent * p_det,
    )
