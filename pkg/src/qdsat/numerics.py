# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Floating-point helpers and the small special functions the key rates need."""

from __future__ import annotations

import math
import struct
from typing import cast

from scipy import special, stats

from qdsat.errors import DomainError

__all__ = [
    "binary_entropy",
    "compare_ulp",
    "float_to_int",
    "linear_to_loss_db",
    "loss_db_to_linear",
    "two_sided_quantile",
    "ulp_diff",
]

#: ULP slack under which two key lengths are considered tied
KEY_TIE_ULPS = 4


def float_to_int(x: float, /) -> int:
    return cast(int, struct.unpack("<Q", struct.pack("<d", x))[0])


def ulp_diff(a: float, b: float, /, *, include_sign: bool = False) -> int:
    """Return the number of representable FP64 values in the range [a, b)."""
    if not math.isfinite(a) or not math.isfinite(b):
        msg = "only finite values can be compared"
        raise ValueError(msg)
    if a == b:
        # also covers 0.0 vs -0.0
        return 0
    if a > b:
        # pylint: disable-next=arguments-out-of-order
        ulps = ulp_diff(b, a)
        return -ulps if include_sign else ulps
    if math.copysign(1.0, a) != math.copysign(1.0, b):
        # different signs: split the interval at zero
        return ulp_diff(a, -0.0) + ulp_diff(0.0, b)
    smaller, larger = sorted((a, b), key=abs)
    return float_to_int(larger) - float_to_int(smaller)


def compare_ulp(a: float, b: float, /, ulps: int = KEY_TIE_ULPS) -> bool:
    """Check if two numbers match to within a specified number of FP64 ULPs."""
    if ulps < 0:
        msg = "ulps must be non-negative"
        raise ValueError(msg)
    return ulp_diff(a, b) <= ulps


def binary_entropy(x: float, /) -> float:
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0."""
    if not 0.0 <= x <= 1.0:
        msg = f"binary entropy needs a probability, got {x!r}"
        raise DomainError(msg)
    return float((special.entr(x) + special.entr(1.0 - x)) / math.log(2))


def two_sided_quantile(eps: float, /) -> float:
    """Normal quantile u with P(|Z| > u) = eps."""
    if not 0.0 < eps < 1.0:
        msg = f"failure probability must lie in (0, 1), got {eps!r}"
        raise DomainError(msg)
    return float(stats.norm.isf(eps / 2))


def loss_db_to_linear(loss: float, /) -> float:
    """Transmittance of an attenuation given in dB."""
    if loss < 0 or math.isnan(loss):
        msg = f"loss must be non-negative, got {loss!r} dB"
        raise DomainError(msg)
    return cast(float, 10.0 ** (-loss / 10.0))


def linear_to_loss_db(transmittance: float, /) -> float:
    if not 0.0 < transmittance <= 1.0:
        msg = f"transmittance must lie in (0, 1], got {transmittance!r}"
        raise DomainError(msg)
    return -10.0 * math.log10(transmittance)
