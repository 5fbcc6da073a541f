# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Exception hierarchy and zero-key causes."""

from __future__ import annotations

import enum

__all__ = [
    "QdsatError",
    "DomainError",
    "InconsistentDistributionError",
    "EstimatorInvalidError",
    "InsufficientDataError",
    "NoDetectionsError",
    "ParameterError",
    "BoundsCollapseError",
    "ScenarioError",
    "ZeroKeyCause",
]


class QdsatError(ValueError):
    """Base class for every error raised by this package."""


class DomainError(QdsatError):
    """An argument lies outside the domain of a physical quantity."""


class InconsistentDistributionError(QdsatError):
    """Photon-number probabilities that contradict each other (e.g. Pm > R)."""


class EstimatorInvalidError(QdsatError):
    """The multi-photon estimator has a non-positive denominator."""


class InsufficientDataError(QdsatError):
    """Not enough counts to form a ratio or a finite-size estimate."""


class NoDetectionsError(QdsatError):
    """A quantity was requested that is undefined without any detections."""


class ParameterError(QdsatError):
    """Security parameters violate their constraint chain."""


class BoundsCollapseError(QdsatError):
    """The decoy analysis cannot certify any single-photon contribution."""


class ScenarioError(QdsatError):
    """A scenario file or mapping could not be turned into a valid scenario."""

    def __init__(
        self,
        message: str,
        *,
        section: str | None = None,
        field: str | None = None,
        line: int | None = None,
    ):
        location = ".".join(part for part in (section, field) if part)
        prefix = f"[{location}] " if location else ""
        if line is not None:
            prefix = f"line {line}: {prefix}"
        super().__init__(prefix + message)
        self.section = section
        self.field = field
        self.line = line


class ZeroKeyCause(enum.Enum):
    """Why a key-length evaluation produced no key."""

    NOISE_DOMINATED = "noise-dominated"
    MULTIPHOTON_DOMINATED = "multiphoton-dominated"
    NEGATIVE_BRACKET = "negative-bracket"
    BOUNDS_COLLAPSE = "bounds-collapse"
    NO_DETECTIONS = "no-detections"
