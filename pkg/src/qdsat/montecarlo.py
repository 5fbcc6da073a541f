# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Pulse-slot Monte Carlo of a QKD pass and of the HBT bench.

Slots are processed in fixed-size chunks. Chunk ``i`` draws from
``np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))``, so the
tallies depend only on the seed and the chunk size, never on how many worker
processes ran the chunks.

Within a chunk the number of photons reaching the receiver is sampled for all
slots at once; only slots that can click (a surviving photon or a background
click) are followed individually. Detectors are indexed H, V, D, A, i.e.
``2 * basis + bit``.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy import stats

from qdsat.errors import DomainError
from qdsat.link import LinkBudget
from qdsat.sources import (
    HbtMeasurement,
    PhotonNumberDistribution,
    QDSourceSpec,
    poisson_distribution,
)
from qdsat.timing import ContextTimer

if TYPE_CHECKING:
    from typing import Callable, Iterable, Mapping, TypeVar

    import numpy.typing as npt

    from qdsat.sources import SourceModel

    _T = TypeVar("_T")
    _R = TypeVar("_R")

__all__ = [
    "DoubleClickPolicy",
    "SimConfig",
    "SimOutcome",
    "chunk_rng",
    "simulate_hbt",
    "simulate_pass",
    "surviving_photon_probs",
]

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1 << 22
#: photon-number cutoff for coherent pulses; the rest is lumped into the last bin
_POISSON_CUTOFF = 40
_NUM_DETECTORS = 4


class DoubleClickPolicy(enum.Enum):
    """What Bob records when more than one detector clicks in a slot."""

    #: random basis if the clicks span both bases, then a random bit
    RANDOM_ASSIGN = "random-assign"
    DISCARD = "discard"


@dataclass(frozen=True)
class SimConfig:
    seed: int
    num_slots: int
    source: SourceModel
    link: LinkBudget = field(default_factory=LinkBudget)
    #: bench efficiency; if set, the pipeline re-estimates Pm from a simulated HBT run
    hbt_eta: float | None = None
    double_click: DoubleClickPolicy = DoubleClickPolicy.RANDOM_ASSIGN
    chunk_size: int = DEFAULT_CHUNK_SIZE
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            msg = f"seed must be a 64-bit unsigned integer, got {self.seed!r}"
            raise DomainError(msg)
        if self.num_slots < 1:
            msg = f"need at least one slot, got {self.num_slots}"
            raise DomainError(msg)
        if self.chunk_size < 1 or self.workers < 1:
            msg = "chunk size and worker count must be positive"
            raise DomainError(msg)
        if self.hbt_eta is not None and not 0.0 < self.hbt_eta <= 1.0:
            msg = f"bench efficiency must lie in (0, 1], got {self.hbt_eta!r}"
            raise DomainError(msg)


@dataclass(frozen=True)
class SimOutcome:
    """Tallies of a simulated pass.

    For a decoy-state source, ``components`` holds the separate tallies of the
    ``"signal"`` and ``"decoy"`` slots; the top-level counts are their sum.
    """

    num_slots: int = 0
    detected: int = 0
    detections_per_detector: tuple[int, ...] = (0,) * _NUM_DETECTORS
    double_clicks: int = 0
    three_way_coincidences: int = 0
    sifted: int = 0
    errors: int = 0
    components: Mapping[str, SimOutcome] = field(default_factory=dict)

    @property
    def observed_qber(self) -> float:
        if self.sifted == 0:
            return float("nan")
        return self.errors / self.sifted

    @property
    def gain(self) -> float:
        return self.detected / self.num_slots if self.num_slots else float("nan")

    def __add__(self, other: SimOutcome) -> SimOutcome:
        if not isinstance(other, SimOutcome):
            return NotImplemented
        totals = {}
        for f in fields(self):
            if f.name == "components":
                continue
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, tuple):
                totals[f.name] = tuple(x + y for x, y in zip(a, b))
            else:
                totals[f.name] = a + b
        components = dict(self.components)
        for key, value in other.components.items():
            components[key] = components[key] + value if key in components else value
        return SimOutcome(**totals, components=components)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Random stream of chunk ``index`` under the master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunk_sizes(num_slots: int, chunk_size: int) -> list[int]:
    full, rest = divmod(num_slots, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunks(
    fn: Callable[[_T], _R], tasks: Iterable[_T], workers: int
) -> list[_R]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def surviving_photon_probs(
    probabilities: npt.ArrayLike, eta: float
) -> npt.NDArray[np.float64]:
    """Photon-number distribution after each photon survives with probability eta.

    Mass missing from ``probabilities`` is treated as empty slots.
    """
    probs = np.asarray(probabilities, dtype=float)
    n = np.arange(probs.size)
    # transfer[n, k] = P(k of n photons survive)
    transfer = stats.binom.pmf(n[None, :], n[:, None], eta)
    survived = probs @ transfer
    survived[0] += max(0.0, 1.0 - survived.sum())
    return survived / survived.sum()


def _emitted_probs(source: SourceModel, *, mu: float | None = None) -> npt.NDArray:
    if isinstance(source, QDSourceSpec):
        return source.distribution.as_array()
    series = poisson_distribution(source.mu if mu is None else mu, _POISSON_CUTOFF)
    probs = series.probabilities.copy()
    probs[-1] += series.tail
    return probs


class _PassChunk(NamedTuple):
    seed: int
    index: int
    size: int
    #: (label, weight, surviving photon-number probabilities) per intensity
    intensities: tuple[tuple[str, float, tuple[float, ...]], ...]
    p_click: float
    e_d: float
    policy: DoubleClickPolicy


def _background_only_clicks(
    rng: np.random.Generator, n_slots: int, p_click: float
) -> npt.NDArray[np.bool_]:
    """Click patterns of empty slots, conditioned on at least one click."""
    j = np.arange(_NUM_DETECTORS)
    first_weights = p_click * (1.0 - p_click) ** j
    first_weights /= first_weights.sum()
    first = rng.choice(_NUM_DETECTORS, size=n_slots, p=first_weights)
    clicks = rng.random((n_slots, _NUM_DETECTORS)) < p_click
    clicks &= j[None, :] > first[:, None]
    clicks[np.arange(n_slots), first] = True
    return clicks


def _simulate_slots(
    rng: np.random.Generator,
    n_slots: int,
    probs: npt.NDArray[np.float64],
    p_click: float,
    e_d: float,
    policy: DoubleClickPolicy,
) -> SimOutcome:
    counts = rng.multinomial(n_slots, probs)
    n_bg_only = 0
    if p_click > 0:
        p_any = -np.expm1(_NUM_DETECTORS * np.log1p(-p_click))
        n_bg_only = int(rng.binomial(counts[0], p_any))
    photon_k = np.repeat(np.arange(1, probs.size), counts[1:])
    n_photon_slots = photon_k.size
    n_active = n_bg_only + n_photon_slots

    clicks = np.zeros((n_active, _NUM_DETECTORS), dtype=bool)
    if n_bg_only:
        clicks[:n_bg_only] = _background_only_clicks(rng, n_bg_only, p_click)
    alice_basis = rng.integers(0, 2, n_active)
    alice_bit = rng.integers(0, 2, n_active)
    if n_photon_slots:
        slot = n_bg_only + np.repeat(np.arange(n_photon_slots), photon_k)
        # passive basis choice: every photon picks its own path
        bob_basis = rng.integers(0, 2, slot.size)
        flipped = (rng.random(slot.size) < e_d).astype(alice_bit.dtype)
        guessed = rng.integers(0, 2, slot.size)
        bit = np.where(
            bob_basis == alice_basis[slot], alice_bit[slot] ^ flipped, guessed
        )
        clicks[slot, 2 * bob_basis + bit] = True
        if p_click > 0:
            clicks[n_bg_only:] |= rng.random((n_photon_slots, _NUM_DETECTORS)) < p_click

    n_clicks = clicks.sum(axis=1)
    multi = n_clicks >= 2
    detector = np.argmax(clicks, axis=1)
    bob_basis_slot = detector // 2
    bob_bit_slot = detector % 2
    if policy is DoubleClickPolicy.RANDOM_ASSIGN:
        n_multi = int(np.count_nonzero(multi))
        rect = clicks[multi, 0] | clicks[multi, 1]
        diag = clicks[multi, 2] | clicks[multi, 3]
        random_basis = rng.integers(0, 2, n_multi)
        single_basis = np.where(rect, 0, 1)
        bob_basis_slot[multi] = np.where(rect & diag, random_basis, single_basis)
        bob_bit_slot[multi] = rng.integers(0, 2, n_multi)
        kept = n_clicks >= 1
    else:
        kept = n_clicks == 1
    sifted = kept & (bob_basis_slot == alice_basis)
    errors = sifted & (bob_bit_slot != alice_bit)
    return SimOutcome(
        num_slots=n_slots,
        detected=int(np.count_nonzero(n_clicks)),
        detections_per_detector=tuple(int(x) for x in clicks.sum(axis=0)),
        double_clicks=int(np.count_nonzero(multi)),
        three_way_coincidences=int(np.count_nonzero(n_clicks >= 3)),
        sifted=int(np.count_nonzero(sifted)),
        errors=int(np.count_nonzero(errors)),
    )


def _simulate_pass_chunk(task: _PassChunk) -> SimOutcome:
    rng = chunk_rng(task.seed, task.index)
    weights = [weight for _, weight, _ in task.intensities]
    split = rng.multinomial(task.size, weights)
    parts = {
        label: _simulate_slots(
            rng, int(n), np.asarray(probs), task.p_click, task.e_d, task.policy
        )
        for (label, _, probs), n in zip(task.intensities, split)
    }
    total = sum(parts.values(), SimOutcome())
    if len(parts) == 1:
        return total
    return replace(total, components=parts)


def simulate_pass(cfg: SimConfig) -> SimOutcome:
    """Simulate ``cfg.num_slots`` pulse slots of a pass over ``cfg.link``."""
    receiver = cfg.link.receiver
    if receiver.num_detectors != _NUM_DETECTORS:
        msg = (
            "the pass simulation models a four-detector polarization analyzer, "
            f"got num_detectors={receiver.num_detectors}"
        )
        raise DomainError(msg)
    eta = cfg.link.transmittance
    p_click = cfg.link.background / receiver.num_detectors
    source = cfg.source

    def arriving(mu: float | None = None) -> tuple[float, ...]:
        probs = surviving_photon_probs(_emitted_probs(source, mu=mu), eta)
        return tuple(float(p) for p in probs)

    if isinstance(source, QDSourceSpec):
        intensities: tuple[tuple[str, float, tuple[float, ...]], ...] = (
            ("qd", 1.0, arriving()),
        )
    else:
        intensities = (
            ("signal", source.K_mu, arriving()),
            ("decoy", 1.0 - source.K_mu, arriving(source.nu)),
        )
    tasks = [
        _PassChunk(
            cfg.seed,
            i,
            size,
            intensities,
            p_click,
            receiver.intrinsic_error,
            cfg.double_click,
        )
        for i, size in enumerate(_chunk_sizes(cfg.num_slots, cfg.chunk_size))
    ]
    with ContextTimer(
        f"simulated {cfg.num_slots} slots", logger=logger, level=logging.DEBUG
    ):
        chunks = _run_chunks(_simulate_pass_chunk, tasks, cfg.workers)
    outcome = sum(chunks, SimOutcome())
    logger.debug(
        "pass tally: detected=%d sifted=%d errors=%d double=%d",
        outcome.detected,
        outcome.sifted,
        outcome.errors,
        outcome.double_clicks,
    )
    return outcome


class _HbtChunk(NamedTuple):
    seed: int
    index: int
    size: int
    probs: tuple[float, ...]
    eta: float
    dark: float


def _simulate_hbt_chunk(task: _HbtChunk) -> tuple[int, int]:
    rng = chunk_rng(task.seed, task.index)
    counts = rng.multinomial(task.size, task.probs)
    photon_n = np.repeat(np.arange(1, len(task.probs)), counts[1:])
    n_slots = photon_n.size
    slot = np.repeat(np.arange(n_slots), photon_n)
    detected = rng.random(slot.size) < task.eta
    to_a = rng.random(slot.size) < 0.5
    a = np.bincount(slot[detected & to_a], minlength=n_slots) > 0
    b = np.bincount(slot[detected & ~to_a], minlength=n_slots) > 0
    if task.dark > 0:
        a |= rng.random(n_slots) < task.dark
        b |= rng.random(n_slots) < task.dark
    coincident = int(np.count_nonzero(a & b))
    solitary = int(np.count_nonzero(a ^ b))
    if task.dark > 0:
        d = task.dark
        pattern_probs = [(1 - d) ** 2, d * (1 - d), d * (1 - d), d * d]
        dark_only = rng.multinomial(counts[0], pattern_probs)
        solitary += int(dark_only[1] + dark_only[2])
        coincident += int(dark_only[3])
    return coincident, solitary


def simulate_hbt(
    dist: PhotonNumberDistribution,
    eta: float,
    num_slots: int,
    window_dark_prob: float,
    seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> HbtMeasurement:
    """Simulate the 50:50 beam-splitter bench with one detector per output.

    Each photon is detected with probability ``eta`` and routed to either
    detector with probability 1/2, independently of the other photons.
    """
    if not 0.0 < eta <= 1.0:
        msg = f"efficiency must lie in (0, 1], got {eta!r}"
        raise DomainError(msg)
    if not 0.0 <= window_dark_prob <= 1.0:
        msg = f"dark-count probability must lie in [0, 1], got {window_dark_prob!r}"
        raise DomainError(msg)
    if num_slots < 1:
        msg = f"need at least one slot, got {num_slots}"
        raise DomainError(msg)
    probs = dist.as_array()
    probs[0] += dist.tail
    probs = tuple(float(p) for p in probs / probs.sum())
    tasks = [
        _HbtChunk(seed, i, size, probs, eta, window_dark_prob)
        for i, size in enumerate(_chunk_sizes(num_slots, chunk_size))
    ]
    with ContextTimer(
        f"simulated {num_slots} HBT slots", logger=logger, level=logging.DEBUG
    ):
        chunks = _run_chunks(_simulate_hbt_chunk, tasks, workers)
    N_C = sum(c for c, _ in chunks)
    N_S = sum(s for _, s in chunks)
    return HbtMeasurement(N_C=N_C, N_S=N_S, N=num_slots, eta=eta)
