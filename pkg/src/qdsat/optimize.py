# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Split of the security budget between smoothing and privacy amplification.

The total failure probability is eps = eps_bar + eps_PA + eps_EC with eps_EC
fixed. The search is a deterministic logarithmic grid followed by a few rounds
of zoomed grids around the incumbent; the key length is flat (zero) over large
regions, so no derivatives are used.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from qdsat.errors import ParameterError
from qdsat.numerics import compare_ulp

if TYPE_CHECKING:
    from typing import Callable, Iterable

__all__ = ["EpsilonBudget", "OptimizationResult", "optimize_epsilons"]

logger = logging.getLogger(__name__)

#: smallest epsilon the grid considers
EPS_FLOOR = 1e-15


@dataclass(frozen=True)
class EpsilonBudget:
    """Total security budget, of which eps_EC is reserved for error correction."""

    eps_total: float = 1e-9
    eps_EC: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.eps_EC < 1.0:
            msg = f"eps_EC must lie in (0, 1), got {self.eps_EC!r}"
            raise ParameterError(msg)
        if not self.eps_total > self.eps_EC:
            msg = (
                f"budget eps_total={self.eps_total!r} leaves nothing beyond "
                f"eps_EC={self.eps_EC!r}"
            )
            raise ParameterError(msg)

    @property
    def available(self) -> float:
        """What is left for eps_bar + eps_PA."""
        return self.eps_total - self.eps_EC

    def is_feasible(self, eps_bar: float, eps_PA: float) -> bool:
        return (
            1.0 - self.eps_EC > eps_bar > eps_PA > 0.0
            and eps_bar + eps_PA <= self.available
        )


class OptimizationResult(NamedTuple):
    eps_bar: float
    eps_PA: float
    key_length: float
    evaluations: int


class _Candidate(NamedTuple):
    key_length: float
    eps_bar: float
    eps_PA: float


def _beats(new: _Candidate, incumbent: _Candidate | None) -> bool:
    if incumbent is None:
        return True
    if compare_ulp(new.key_length, incumbent.key_length):
        # tie: prefer the smaller eps_bar, then the smaller eps_PA
        return (new.eps_bar, new.eps_PA) < (incumbent.eps_bar, incumbent.eps_PA)
    return new.key_length > incumbent.key_length


def _log_axis(center: float, half_width: float, points: int) -> np.ndarray:
    log_center = math.log(center)
    return np.exp(
        np.linspace(log_center - half_width, log_center + half_width, points)
    )


def optimize_epsilons(
    key_length_fn: Callable[[float, float], float],
    eps_total: float = 1e-9,
    eps_EC: float = 1e-10,
    *,
    grid_points: int = 60,
    refine_rounds: int = 3,
    refine_points: int = 21,
    workers: int | None = None,
) -> OptimizationResult:
    """Maximize ``key_length_fn(eps_bar, eps_PA)`` over the feasible split.

    If the key is zero everywhere, the feasible point with the largest
    ``eps_bar + eps_PA`` (the least penalizing one) is returned.
    """
    budget = EpsilonBudget(eps_total, eps_EC)
    if budget.available <= EPS_FLOOR:
        msg = f"budget {budget.available!r} is below the grid floor {EPS_FLOOR!r}"
        raise ParameterError(msg)

    evaluations = 0
    incumbent: _Candidate | None = None
    corner: tuple[float, float] | None = None
    all_zero = True

    def evaluate(points: Iterable[tuple[float, float]]) -> None:
        nonlocal evaluations, incumbent, corner, all_zero
        feasible = [(eb, epa) for eb, epa in points if budget.is_feasible(eb, epa)]
        if workers is not None and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                keys = list(pool.map(lambda p: key_length_fn(*p), feasible))
        else:
            keys = [key_length_fn(eb, epa) for eb, epa in feasible]
        evaluations += len(feasible)
        # reduce in submission order so the result is independent of workers
        for (eb, epa), key in zip(feasible, keys):
            candidate = _Candidate(float(key), float(eb), float(epa))
            all_zero = all_zero and candidate.key_length == 0
            if _beats(candidate, incumbent):
                incumbent = candidate
            if corner is None or eb + epa > sum(corner):
                corner = (float(eb), float(epa))

    axis = np.geomspace(EPS_FLOOR, budget.available, grid_points)
    evaluate((eb, epa) for eb in axis for epa in axis)
    if incumbent is None:
        msg = "no feasible (eps_bar, eps_PA) pair on the search grid"
        raise ParameterError(msg)
    logger.debug("grid incumbent: %s", incumbent)

    half_width = math.log(axis[1] / axis[0])
    for _ in range(refine_rounds):
        if all_zero:
            break
        bar_axis = _log_axis(incumbent.eps_bar, half_width, refine_points)
        pa_axis = _log_axis(incumbent.eps_PA, half_width, refine_points)
        evaluate((eb, epa) for eb in bar_axis for epa in pa_axis)
        logger.debug("refined incumbent: %s", incumbent)
        half_width /= 10.0

    if all_zero:
        assert corner is not None
        return OptimizationResult(corner[0], corner[1], 0.0, evaluations)
    return OptimizationResult(
        incumbent.eps_bar, incumbent.eps_PA, incumbent.key_length, evaluations
    )
