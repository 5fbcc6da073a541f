# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Two-intensity (signal + weak decoy) BB84 with weak coherent pulses.

The single-photon yield and error are bounded from the observed signal and
decoy gains. Observed rates are first shifted by their finite-statistics
fluctuation, always in the direction that makes the bound worse.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

from qdsat.errors import (
    BoundsCollapseError,
    DomainError,
    InsufficientDataError,
    ZeroKeyCause,
)
from qdsat.keyrate import FiniteKeyParams, KeyRateResult, finite_size_delta
from qdsat.numerics import binary_entropy, two_sided_quantile

__all__ = [
    "DecoyBounds",
    "DecoyObservables",
    "Fluctuation",
    "Widen",
    "Y0Estimate",
    "apply_finite_statistics",
    "asymptotic_wcp_rate",
    "decoy_bounds",
    "wcp_key_length",
]

logger = logging.getLogger(__name__)


class Widen(enum.Enum):
    UP = enum.auto()
    DOWN = enum.auto()


class Fluctuation(enum.Enum):
    """How far an observed rate may sit from its expectation."""

    #: u * sqrt(X / N) with the two-sided normal quantile u at 1 - eps
    NORMAL = "normal"
    #: sqrt(ln(2 / eps) / (2 N)), independent of X
    HOEFFDING = "hoeffding"


class Y0Estimate(enum.Enum):
    """Source of the vacuum-yield upper bound Y0_U."""

    #: the modeled background click probability, widened up
    BACKGROUND = "background"
    #: 2 E_mu Q_mu exp(mu), widened up; needs no vacuum intensity
    SIGNAL_ERROR = "signal-error"


@dataclass(frozen=True)
class DecoyObservables:
    """Gains and error rates observed for the signal and decoy intensities."""

    n: float
    N_mu: float
    N_nu: float
    Q_mu: float
    Q_nu: float
    E_mu: float
    E_nu: float
    n_mu: float | None = None

    def __post_init__(self):
        for name in ("Q_mu", "Q_nu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                msg = f"{name} must lie in [0, 1], got {value!r}"
                raise DomainError(msg)
        for name in ("E_mu", "E_nu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                msg = f"{name} must lie in [0, 1/2], got {value!r}"
                raise DomainError(msg)
        if min(self.N_mu, self.N_nu) < 0 or not math.isclose(
            self.N_mu + self.N_nu, self.n, rel_tol=1e-9
        ):
            msg = (
                "pulses per intensity must be non-negative and add up to n, "
                f"got N_mu={self.N_mu!r}, N_nu={self.N_nu!r}, n={self.n!r}"
            )
            raise DomainError(msg)
        if self.n_mu is None:
            object.__setattr__(self, "n_mu", self.N_mu * self.Q_mu)


@dataclass(frozen=True)
class DecoyBounds:
    Y0_L: float
    Y0_U: float
    Y1_L: float
    Q1_L: float
    E1_U: float

    def __post_init__(self):
        if not 0.0 <= self.Y0_L <= self.Y0_U <= 1.0:
            msg = (
                "vacuum-yield bounds must satisfy 0 <= Y0_L <= Y0_U <= 1, "
                f"got Y0_L={self.Y0_L!r}, Y0_U={self.Y0_U!r}"
            )
            raise DomainError(msg)
        if not 0.0 <= self.E1_U <= 0.5:
            msg = f"E1_U must lie in [0, 1/2], got {self.E1_U!r}"
            raise DomainError(msg)


def apply_finite_statistics(
    observable: float,
    N_sent: float,
    eps_PE: float,
    direction: Widen,
    *,
    fluctuation: Fluctuation = Fluctuation.NORMAL,
) -> float:
    """Shift an observed rate by its statistical fluctuation over N_sent trials.

    The result is clamped to [0, 1]; clamping is logged as a warning.
    """
    if not N_sent >= 1:
        msg = f"finite-statistics correction needs N_sent >= 1, got {N_sent!r}"
        raise InsufficientDataError(msg)
    if fluctuation is Fluctuation.NORMAL:
        deviation = two_sided_quantile(eps_PE) * math.sqrt(observable / N_sent)
    else:
        # validates eps_PE
        two_sided_quantile(eps_PE)
        deviation = math.sqrt(math.log(2.0 / eps_PE) / (2.0 * N_sent))
    if direction is Widen.DOWN:
        deviation = -deviation
    widened = observable + deviation
    if not 0.0 <= widened <= 1.0:
        logger.warning(
            "clamping widened rate %.6g (from %.6g over %.6g trials) to [0, 1]",
            widened,
            observable,
            N_sent,
        )
        widened = min(max(widened, 0.0), 1.0)
    return widened


def decoy_bounds(
    obs: DecoyObservables,
    mu: float,
    nu: float,
    eps_PE: float,
    *,
    y0: Y0Estimate = Y0Estimate.BACKGROUND,
    background: float = 0.0,
    Y0_L: float = 0.0,
    vacuum_error_subtraction: bool = False,
    fluctuation: Fluctuation = Fluctuation.NORMAL,
) -> DecoyBounds:
    """Lower-bound the single-photon yield and gain, upper-bound its error rate.

    Raises :class:`BoundsCollapseError` when no single-photon contribution can
    be certified, which includes a vanishing decoy intensity.
    """
    if not 0.0 <= nu < mu:
        msg = f"intensities must satisfy 0 <= nu < mu, got mu={mu!r}, nu={nu!r}"
        raise DomainError(msg)
    if nu == 0 or obs.N_nu < 1:
        msg = "a decoy intensity above zero is needed to bound single photons"
        raise BoundsCollapseError(msg)

    def widen(x: float, n: float, direction: Widen) -> float:
        return apply_finite_statistics(
            x, n, eps_PE, direction, fluctuation=fluctuation
        )

    Q_nu_lo = widen(obs.Q_nu, obs.N_nu, Widen.DOWN)
    Q_mu_hi = widen(obs.Q_mu, obs.N_mu, Widen.UP)
    if y0 is Y0Estimate.BACKGROUND:
        Y0_U = widen(background, obs.n, Widen.UP)
    else:
        EQ_mu_hi = widen(obs.E_mu * obs.Q_mu, obs.N_mu, Widen.UP)
        Y0_U = min(2.0 * EQ_mu_hi * math.exp(mu), 1.0)
    Y0_L = min(Y0_L, Y0_U)

    Y1_L = (mu / (mu * nu - nu**2)) * (
        Q_nu_lo * math.exp(nu)
        - Q_mu_hi * math.exp(mu) * nu**2 / mu**2
        - (mu**2 - nu**2) / mu**2 * Y0_U
    )
    if Y1_L <= 0:
        msg = f"single-photon yield bound is not positive (Y1_L={Y1_L:.3g})"
        raise BoundsCollapseError(msg)
    Q1_L = min(Y1_L * mu * math.exp(-mu), obs.Q_mu)

    EQ_nu_hi = widen(obs.E_nu * obs.Q_nu, obs.N_nu, Widen.UP)
    vacuum_errors = 0.5 * Y0_L if vacuum_error_subtraction else 0.0
    E1_U = (EQ_nu_hi * math.exp(nu) - vacuum_errors) / (Y1_L * nu)
    if E1_U > 0.5:
        logger.debug("single-photon error bound %.4g capped at 1/2", E1_U)
    E1_U = min(max(E1_U, 0.0), 0.5)
    return DecoyBounds(Y0_L=Y0_L, Y0_U=Y0_U, Y1_L=Y1_L, Q1_L=Q1_L, E1_U=E1_U)


def asymptotic_wcp_rate(
    Q1: float,
    E1: float,
    Q_mu: float,
    E_mu: float,
    f: float,
    *,
    q: float = 0.5,
    K_mu: float = 1.0,
) -> float:
    """Key bits per sent pulse without finite-size terms."""
    bracket = Q1 * (1.0 - binary_entropy(E1)) - Q_mu * f * binary_entropy(E_mu)
    return max(K_mu * q * bracket, 0.0)


def wcp_key_length(
    obs: DecoyObservables,
    bounds: DecoyBounds,
    params: FiniteKeyParams,
    K_mu: float,
) -> KeyRateResult:
    """Secure key bits of one pass with the two-intensity decoy protocol.

    Only signal pulses contribute key. The finite-size penalty is evaluated on
    the sifted signal detections.
    """
    assert obs.n_mu is not None
    m = params.q * obs.n_mu
    delta = math.nan
    key_bits = 0.0
    cause: ZeroKeyCause | None = ZeroKeyCause.NO_DETECTIONS
    if m >= 1:
        delta = finite_size_delta(m, params.eps_bar, params.eps_PA, params.eps_EC)
        bracket = (
            bounds.Q1_L * (1.0 - binary_entropy(bounds.E1_U))
            - obs.Q_mu * params.f * binary_entropy(obs.E_mu)
            - obs.Q_mu * delta
        )
        key_bits = obs.n * K_mu * params.q * bracket
        cause = None
        if key_bits <= 0:
            key_bits = 0.0
            cause = ZeroKeyCause.NEGATIVE_BRACKET
    return KeyRateResult(
        key_bits=key_bits,
        n_detected=obs.n_mu,
        m_sifted=m,
        qber=obs.E_mu,
        delta=delta,
        eps_bar=params.eps_bar,
        eps_PA=params.eps_PA,
        correction=bounds.Q1_L,
        E1_U=bounds.E1_U,
        n_sent=obs.n,
        cause=cause,
    )
