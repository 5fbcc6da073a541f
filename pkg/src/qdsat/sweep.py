# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Channel-loss sweeps and their CSV tables."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

from qdsat.errors import QdsatError
from qdsat.montecarlo import SimConfig
from qdsat.pipeline import analytic_key, empirical_key_pipeline
from qdsat.scenarios import Mode
from qdsat.timing import ContextTimer

if TYPE_CHECKING:
    from typing import Iterable, Sequence

    from qdsat.keyrate import KeyRateResult
    from qdsat.scenarios import Scenario

__all__ = [
    "COLUMNS",
    "SweepRow",
    "cutoff_loss",
    "emit_csv",
    "evaluate_point",
    "is_close_row",
    "read_csv",
    "run_sweep",
    "run_sweeps",
]

logger = logging.getLogger(__name__)

COLUMNS = (
    "loss_db",
    "key_bits",
    "n_sent",
    "n_detected",
    "m_sifted",
    "qber",
    "qber_adjusted",
    "correction_A_or_Q1L",
    "E1U_or_blank",
    "delta",
    "eps_bar",
    "eps_pa",
    "zero_key_cause",
)

#: prefix of the zero_key_cause of rows whose evaluation raised
ERROR_CAUSE_PREFIX = "error:"


@dataclass(frozen=True)
class SweepRow:
    """One row of a sweep table, in CSV column order."""

    loss_db: float
    key_bits: float
    n_sent: float | None
    n_detected: float | None
    m_sifted: float | None
    qber: float | None
    qber_adjusted: float | None
    correction: float | None
    E1_U: float | None
    delta: float | None
    eps_bar: float | None
    eps_PA: float | None
    zero_key_cause: str = ""

    @classmethod
    def from_result(cls, loss_db: float, result: KeyRateResult) -> SweepRow:
        return cls(
            loss_db=loss_db,
            key_bits=result.key_bits,
            n_sent=result.n_sent,
            n_detected=result.n_detected,
            m_sifted=result.m_sifted,
            qber=result.qber,
            qber_adjusted=result.qber_adjusted,
            correction=result.correction,
            E1_U=result.E1_U,
            delta=result.delta,
            eps_bar=result.eps_bar,
            eps_PA=result.eps_PA,
            zero_key_cause=result.cause.value if result.cause is not None else "",
        )

    @classmethod
    def failed(cls, loss_db: float, exc: Exception) -> SweepRow:
        empty = dict.fromkeys(f.name for f in fields(cls))
        empty.update(
            loss_db=loss_db,
            key_bits=0.0,
            zero_key_cause=ERROR_CAUSE_PREFIX + type(exc).__name__,
        )
        return cls(**empty)

    @property
    def failed_evaluation(self) -> bool:
        return self.zero_key_cause.startswith(ERROR_CAUSE_PREFIX)


class _Point(NamedTuple):
    scenario: Scenario
    loss_db: float
    mode: Mode
    seed: int
    mc_workers: int


def evaluate_point(
    scenario: Scenario,
    loss_db: float,
    mode: Mode = Mode.ANALYTIC,
    *,
    seed: int | None = None,
    mc_workers: int | None = None,
) -> KeyRateResult:
    """Key length of ``scenario`` at one channel loss."""
    link = scenario.link.with_loss(loss_db)
    if mode is Mode.ANALYTIC:
        return analytic_key(
            scenario.source,
            link,
            scenario.params,
            budget=scenario.budget,
            decoy=scenario.decoy,
        )
    if mode is not Mode.MONTE_CARLO:
        msg = f"a sweep point is evaluated in one mode, got {mode.value!r}"
        raise QdsatError(msg)
    mc = scenario.montecarlo
    num_slots = mc.num_slots
    if num_slots is None:
        num_slots = round(scenario.source.rep_rate * link.channel.pass_duration)
    cfg = SimConfig(
        seed=mc.seed if seed is None else seed,
        num_slots=num_slots,
        source=scenario.source,
        link=link,
        hbt_eta=mc.hbt_eta,
        double_click=mc.double_click,
        chunk_size=mc.chunk_size,
        workers=mc.workers if mc_workers is None else mc_workers,
    )
    return empirical_key_pipeline(
        cfg, scenario.params, budget=scenario.budget, decoy=scenario.decoy
    )


def _evaluate(point: _Point) -> tuple[SweepRow, str | None]:
    # runs in a worker process; warnings are raised by the parent
    try:
        result = evaluate_point(
            point.scenario,
            point.loss_db,
            point.mode,
            seed=point.seed,
            mc_workers=point.mc_workers,
        )
    except QdsatError as exc:
        return SweepRow.failed(point.loss_db, exc), str(exc)
    return SweepRow.from_result(point.loss_db, result), None


def run_sweep(
    scenario: Scenario,
    *,
    mode: Mode | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Evaluate every loss of the scenario's sweep, one row per loss.

    A point whose evaluation raises becomes a zero-key row with the cause
    ``error:<ExceptionName>`` and a warning; the sweep carries on. Monte Carlo
    points all share one seed.
    """
    mode = scenario.mode if mode is None else mode
    if mode is Mode.BOTH:
        msg = "a sweep table holds one mode, use run_sweeps for both"
        raise QdsatError(msg)
    seed = scenario.montecarlo.seed if seed is None else seed
    # worker processes are spent on sweep points, not inside a point
    mc_workers = scenario.montecarlo.workers if workers <= 1 else 1
    points = [
        _Point(scenario, loss, mode, seed, mc_workers)
        for loss in scenario.sweep.losses()
    ]
    with ContextTimer(f"sweep {scenario.name} ({mode.value})", logger=logger):
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_evaluate, points))
        else:
            outcomes = [_evaluate(point) for point in points]
    rows = []
    for row, error in outcomes:
        if error is not None:
            warnings.warn(
                f"{scenario.name} at {row.loss_db} dB failed: {error}", stacklevel=2
            )
        rows.append(row)
    rows.sort(key=lambda row: row.loss_db)
    return rows


def run_sweeps(
    scenario: Scenario,
    *,
    mode: Mode | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> dict[Mode, list[SweepRow]]:
    """Run one sweep per single mode, splitting ``both`` into analytic and MC."""
    mode = scenario.mode if mode is None else mode
    return {
        part: run_sweep(scenario, mode=part, seed=seed, workers=workers)
        for part in mode.parts
    }


def cutoff_loss(rows: Iterable[SweepRow]) -> float | None:
    """Largest swept loss that still gives a positive key."""
    positive = [row.loss_db for row in rows if row.key_bits > 0]
    return max(positive) if positive else None


def _format_cell(value: float | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    # repr is the shortest string that parses back to the same float
    return repr(float(value))


def _parse_cell(column: str, text: str) -> float | str | None:
    if column == "zero_key_cause":
        return text
    if text == "":
        return None
    return float(text)


def emit_csv(rows: Sequence[SweepRow], path: str | Path) -> Path:
    """Write a sweep table to ``path``, replacing any existing file."""
    if not rows:
        msg = "refusing to write an empty sweep table"
        raise QdsatError(msg)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(value) for value in astuple(row)])
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def read_csv(path: str | Path) -> list[SweepRow]:
    """Parse a table written by :func:`emit_csv`."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            msg = f"{path}: not a sweep table (header {header!r})"
            raise QdsatError(msg)
        rows = []
        for values in reader:
            cells = [_parse_cell(c, v) for c, v in zip(COLUMNS, values)]
            rows.append(SweepRow(*cells))  # type: ignore[arg-type]
    return rows


def is_close_row(a: SweepRow, b: SweepRow, *, rel_tol: float = 1e-12) -> bool:
    """Whether two rows agree cell by cell; NaN equals NaN."""
    for x, y in zip(astuple(a), astuple(b)):
        if isinstance(x, float) and isinstance(y, float):
            if math.isnan(x) and math.isnan(y):
                continue
            if not math.isclose(x, y, rel_tol=rel_tol):
                return False
        elif x != y:
            return False
    return True
