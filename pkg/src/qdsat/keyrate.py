# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Finite-size key length of BB84 with an imperfect single-photon source."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from qdsat.errors import (
    DomainError,
    InsufficientDataError,
    NoDetectionsError,
    ParameterError,
    ZeroKeyCause,
)
from qdsat.numerics import binary_entropy

__all__ = [
    "FiniteKeyParams",
    "KeyRateResult",
    "QdKeyInput",
    "adjusted_qber",
    "asymptotic_qd_fraction",
    "finite_size_delta",
    "multiphoton_correction",
    "qd_key_length",
]


def _check_eps_chain(eps_bar: float, eps_PA: float, eps_EC: float) -> None:
    for name, eps in (("eps_bar", eps_bar), ("eps_PA", eps_PA), ("eps_EC", eps_EC)):
        if not 0.0 < eps < 1.0:
            msg = f"{name} must lie in (0, 1), got {eps!r}"
            raise ParameterError(msg)
    if not 1.0 - eps_EC > eps_bar > eps_PA:
        msg = (
            "security parameters must satisfy 1 - eps_EC > eps_bar > eps_PA, "
            f"got eps_EC={eps_EC!r}, eps_bar={eps_bar!r}, eps_PA={eps_PA!r}"
        )
        raise ParameterError(msg)


@dataclass(frozen=True)
class FiniteKeyParams:
    """Security parameters and post-processing efficiencies of one key exchange."""

    eps_EC: float = 1e-10
    eps_PE: float = 1e-10
    eps_bar: float = 5e-10
    eps_PA: float = 4e-10
    f: float = 1.16
    q: float = 0.5

    def __post_init__(self):
        _check_eps_chain(self.eps_bar, self.eps_PA, self.eps_EC)
        if not 0.0 < self.eps_PE < 1.0:
            msg = f"eps_PE must lie in (0, 1), got {self.eps_PE!r}"
            raise ParameterError(msg)
        if not self.f >= 1.0:
            msg = f"error-correction inefficiency f must be >= 1, got {self.f!r}"
            raise ParameterError(msg)
        if not 0.0 < self.q <= 1.0:
            msg = f"sifting ratio q must lie in (0, 1], got {self.q!r}"
            raise ParameterError(msg)

    @property
    def eps_total(self) -> float:
        return self.eps_bar + self.eps_PA + self.eps_EC

    def with_split(self, eps_bar: float, eps_PA: float) -> FiniteKeyParams:
        return replace(self, eps_bar=eps_bar, eps_PA=eps_PA)


@dataclass(frozen=True)
class QdKeyInput:
    """Observed quantities entering the quantum-dot key length."""

    n: float
    m: float
    E: float
    p_det: float
    Pm: float

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            msg = f"counts must be non-negative, got n={self.n!r}, m={self.m!r}"
            raise DomainError(msg)
        if not 0.0 <= self.E <= 0.5:
            msg = f"QBER must lie in [0, 1/2], got {self.E!r}"
            raise DomainError(msg)
        if self.Pm < 0:
            msg = f"multi-photon bound must be non-negative, got {self.Pm!r}"
            raise DomainError(msg)


@dataclass(frozen=True)
class KeyRateResult:
    """Key length of one pass with the intermediates that produced it.

    ``correction`` holds the multi-photon correction A for the quantum-dot path
    and the single-photon gain bound Q1_L for the decoy path. Quantities that
    do not apply to a path are None.
    """

    key_bits: float
    n_detected: float
    m_sifted: float
    qber: float
    delta: float
    eps_bar: float
    eps_PA: float
    qber_adjusted: float | None = None
    correction: float | None = None
    E1_U: float | None = None
    n_sent: float | None = None
    cause: ZeroKeyCause | None = None

    @property
    def positive(self) -> bool:
        return self.key_bits > 0


def adjusted_qber(E: float, m: float, eps_PE: float) -> float:
    """Upper estimate of the QBER that holds except with probability eps_PE."""
    if not m >= 1:
        msg = f"need at least one sifted bit to estimate the QBER, got m={m!r}"
        raise InsufficientDataError(msg)
    if not 0.0 < eps_PE < 1.0:
        msg = f"eps_PE must lie in (0, 1), got {eps_PE!r}"
        raise ParameterError(msg)
    return E + 0.5 * math.sqrt((2.0 * math.log(1.0 / eps_PE) + 2.0 * math.log1p(m)) / m)


def multiphoton_correction(p_det: float, Pm: float) -> float:
    """Fraction A of detections that certainly stem from single photons."""
    if not p_det > 0:
        msg = f"detection probability must be positive, got {p_det!r}"
        raise NoDetectionsError(msg)
    return min(max((p_det - Pm) / p_det, 0.0), 1.0)


def finite_size_delta(m: float, eps_bar: float, eps_PA: float, eps_EC: float) -> float:
    """Per-bit finite-size penalty subtracted from the key fraction."""
    _check_eps_chain(eps_bar, eps_PA, eps_EC)
    if not m >= 1:
        msg = f"finite-size correction needs m >= 1, got {m!r}"
        raise InsufficientDataError(msg)
    return (
        7.0 * math.sqrt(math.log2(2.0 / eps_bar) / m)
        + (2.0 * math.log2(1.0 / eps_PA) + math.log2(2.0 / eps_EC)) / m
    )


def asymptotic_qd_fraction(E: float, A: float, f: float) -> float:
    """Key bits per sifted bit in the infinite-key limit, A(1 - H(E/A) - f H(E))."""
    if A <= 0 or E / A >= 0.5:
        return 0.0
    return A * (1.0 - binary_entropy(E / A) - f * binary_entropy(E))


def qd_key_length(inp: QdKeyInput, params: FiniteKeyParams) -> KeyRateResult:
    """Secure key bits of one pass with a quantum-dot source.

    Regimes without key do not raise; the result carries key_bits == 0 and a
    :class:`ZeroKeyCause`.
    """

    def zero(
        cause: ZeroKeyCause,
        E_adj: float | None = None,
        A: float | None = None,
        delta: float = math.nan,
    ) -> KeyRateResult:
        return KeyRateResult(
            key_bits=0.0,
            n_detected=inp.n,
            m_sifted=inp.m,
            qber=inp.E,
            delta=delta,
            eps_bar=params.eps_bar,
            eps_PA=params.eps_PA,
            qber_adjusted=E_adj,
            correction=A,
            cause=cause,
        )

    if inp.p_det <= 0 or inp.m < 1:
        return zero(ZeroKeyCause.NO_DETECTIONS)
    E_adj = adjusted_qber(inp.E, inp.m, params.eps_PE)
    A = multiphoton_correction(inp.p_det, inp.Pm)
    delta = finite_size_delta(inp.m, params.eps_bar, params.eps_PA, params.eps_EC)
    if A == 0:
        return zero(ZeroKeyCause.MULTIPHOTON_DOMINATED, E_adj, A, delta)
    if E_adj / A >= 0.5:
        return zero(ZeroKeyCause.NOISE_DOMINATED, E_adj, A, delta)
    bracket = (
        1.0 - binary_entropy(E_adj / A) - params.f * binary_entropy(inp.E) - delta
    )
    key_bits = inp.n * params.q * A * bracket
    cause = None
    if key_bits <= 0:
        key_bits = 0.0
        cause = ZeroKeyCause.NEGATIVE_BRACKET
    return KeyRateResult(
        key_bits=key_bits,
        n_detected=inp.n,
        m_sifted=inp.m,
        qber=inp.E,
        delta=delta,
        eps_bar=params.eps_bar,
        eps_PA=params.eps_PA,
        qber_adjusted=E_adj,
        correction=A,
        cause=cause,
    )
