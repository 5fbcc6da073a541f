# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Scenario files: one TOML table per configuration section.

A scenario fixes the source, the link and the finite-key parameters, and
names the channel losses to sweep. Every field has a default, so a file only
needs the keys it changes. A minimal quantum-dot scenario::

    [scenario]
    name = "qd-bench"

    [source]
    kind = "qd"
    rep_rate = 76.4e6
    internal_loss_db = 15.0
    kappa = 1.1e-5
    bench_efficiency = 0.06

    [sweep]
    start = 20.0
    stop = 35.0
    step = 0.5
"""

from __future__ import annotations

import enum
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from qdsat.decoy import Fluctuation, Y0Estimate
from qdsat.errors import QdsatError, ScenarioError
from qdsat.keyrate import FiniteKeyParams
from qdsat.link import ChannelSpec, LinkBudget, ReceiverSpec
from qdsat.montecarlo import DEFAULT_CHUNK_SIZE, DoubleClickPolicy
from qdsat.optimize import EpsilonBudget
from qdsat.pipeline import DecoyOptions
from qdsat.sources import (
    BENCH_EFFICIENCY,
    BENCH_KAPPA,
    BENCH_R,
    REPORTED_PM,
    QDSourceSpec,
    WCPSourceSpec,
)

if TYPE_CHECKING:
    from typing import Callable, Mapping, TypeVar

    from qdsat.sources import SourceModel

    _T = TypeVar("_T")
    _E = TypeVar("_E", bound=enum.Enum)

__all__ = [
    "BUILTIN_SCENARIOS",
    "Mode",
    "MonteCarloOptions",
    "RESONANT_KAPPA",
    "Scenario",
    "SweepRange",
    "list_scenarios",
    "load_scenario",
    "scenario_from_dict",
]

logger = logging.getLogger(__name__)


class Mode(enum.Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "mc"
    BOTH = "both"

    @property
    def parts(self) -> tuple[Mode, ...]:
        """The single modes to evaluate, analytic first."""
        if self is Mode.BOTH:
            return (Mode.ANALYTIC, Mode.MONTE_CARLO)
        return (self,)


@dataclass(frozen=True)
class SweepRange:
    """Channel losses from ``start`` to ``stop`` (inclusive) in dB."""

    start: float = 20.0
    stop: float = 40.0
    step: float = 0.5

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.start, self.stop, self.step)):
            msg = "sweep bounds and step must be finite"
            raise QdsatError(msg)
        if not self.step > 0:
            msg = f"sweep step must be positive, got {self.step!r}"
            raise QdsatError(msg)
        if not self.start <= self.stop:
            msg = f"sweep start {self.start!r} lies beyond stop {self.stop!r}"
            raise QdsatError(msg)
        if self.start < 0:
            msg = f"channel loss must be non-negative, got start={self.start!r}"
            raise QdsatError(msg)

    def losses(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        # round away the accumulated error of start + i * step
        return [round(float(x), 10) for x in self.start + self.step * np.arange(count)]


@dataclass(frozen=True)
class MonteCarloOptions:
    """Settings of the empirical path.

    ``num_slots`` defaults to every slot of the pass, ``rep_rate * duration``.
    """

    seed: int = 42
    num_slots: int | None = None
    hbt_eta: float | None = None
    double_click: DoubleClickPolicy = DoubleClickPolicy.RANDOM_ASSIGN
    chunk_size: int = DEFAULT_CHUNK_SIZE
    workers: int = 1

    def __post_init__(self):
        if self.num_slots is not None and self.num_slots < 1:
            msg = f"need at least one slot, got {self.num_slots}"
            raise QdsatError(msg)


@dataclass(frozen=True)
class Scenario:
    name: str
    source: SourceModel
    link: LinkBudget = field(default_factory=LinkBudget)
    params: FiniteKeyParams = field(default_factory=FiniteKeyParams)
    #: None evaluates the fixed split in ``params``
    budget: EpsilonBudget | None = field(default_factory=EpsilonBudget)
    decoy: DecoyOptions = field(default_factory=DecoyOptions)
    sweep: SweepRange = field(default_factory=SweepRange)
    mode: Mode = Mode.ANALYTIC
    montecarlo: MonteCarloOptions = field(default_factory=MonteCarloOptions)
    description: str = ""

    @property
    def source_kind(self) -> str:
        return "qd" if isinstance(self.source, QDSourceSpec) else "wcp"


_SECTIONS = {
    "scenario": {"name", "description", "mode"},
    "source": {
        "kind",
        "rep_rate",
        "R",
        "internal_loss_db",
        "Pm",
        "kappa",
        "bench_efficiency",
        "mu",
        "nu",
        "K_mu",
    },
    "channel": {"background_rate", "pass_duration"},
    "receiver": {
        "detector_efficiency",
        "receiver_optical_loss_db",
        "num_detectors",
        "coincidence_window",
        "dark_count_prob",
        "intrinsic_error",
    },
    "finite_key": {
        "optimize",
        "eps_total",
        "eps_EC",
        "eps_PE",
        "eps_bar",
        "eps_PA",
        "f",
        "q",
    },
    "decoy": {"y0", "fluctuation", "Y0_L", "vacuum_error_subtraction"},
    "sweep": {"start", "stop", "step"},
    "montecarlo": {
        "seed",
        "num_slots",
        "hbt_eta",
        "double_click",
        "chunk_size",
        "workers",
    },
}


class _Section:
    """Typed access to one table of a scenario, tracking which field is read."""

    def __init__(self, name: str, table: Any):
        if not isinstance(table, dict):
            msg = f"expected a table, got {type(table).__name__}"
            raise ScenarioError(msg, section=name)
        unknown = sorted(set(table) - _SECTIONS[name])
        if unknown:
            msg = f"unknown key(s): {', '.join(unknown)}"
            raise ScenarioError(msg, section=name, field=unknown[0])
        self.name = name
        self.table = table

    def __contains__(self, key: str) -> bool:
        return key in self.table

    def number(self, key: str, default: float | None = None) -> float | None:
        value = self.table.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            msg = f"expected a number, got {value!r}"
            raise ScenarioError(msg, section=self.name, field=key)
        return float(value)

    def integer(self, key: str, default: int | None = None) -> int | None:
        value = self.table.get(key, default)
        if value is None:
            return None
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            msg = f"expected an integer, got {value!r}"
            raise ScenarioError(msg, section=self.name, field=key)
        return value

    def string(self, key: str, default: str) -> str:
        value = self.table.get(key, default)
        if not isinstance(value, str):
            msg = f"expected a string, got {value!r}"
            raise ScenarioError(msg, section=self.name, field=key)
        return value

    def boolean(self, key: str, default: bool) -> bool:
        value = self.table.get(key, default)
        if not isinstance(value, bool):
            msg = f"expected true or false, got {value!r}"
            raise ScenarioError(msg, section=self.name, field=key)
        return value

    def choice(self, key: str, enum_type: type[_E], default: _E) -> _E:
        value = self.string(key, default.value)
        try:
            return enum_type(value)
        except ValueError:
            allowed = ", ".join(repr(m.value) for m in enum_type)
            msg = f"expected one of {allowed}, got {value!r}"
            raise ScenarioError(msg, section=self.name, field=key) from None

    def build(self, factory: Callable[..., _T], **kwargs: Any) -> _T:
        """Call ``factory`` with the given fields, dropping unset ones."""
        try:
            return factory(**{k: v for k, v in kwargs.items() if v is not None})
        except QdsatError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc), section=self.name) from exc


def _source(section: _Section) -> SourceModel:
    kind = section.string("kind", "")
    if kind not in ("qd", "wcp"):
        msg = f"expected 'qd' or 'wcp', got {kind!r}"
        raise ScenarioError(msg, section=section.name, field="kind")
    rep_rate = section.number("rep_rate")
    if rep_rate is None:
        msg = "missing required key"
        raise ScenarioError(msg, section=section.name, field="rep_rate")
    if kind == "wcp":
        for key in ("R", "internal_loss_db", "Pm", "kappa", "bench_efficiency"):
            if key in section:
                msg = "not a weak-coherent-pulse parameter"
                raise ScenarioError(msg, section=section.name, field=key)
        return section.build(
            WCPSourceSpec,
            rep_rate=rep_rate,
            mu=section.number("mu"),
            nu=section.number("nu"),
            K_mu=section.number("K_mu"),
        )

    for key in ("mu", "nu", "K_mu"):
        if key in section:
            msg = "not a quantum-dot parameter"
            raise ScenarioError(msg, section=section.name, field=key)
    R = section.number("R")
    internal_loss = section.number("internal_loss_db")
    if "Pm" in section:
        if "kappa" in section or "bench_efficiency" in section:
            msg = "give either Pm or kappa with bench_efficiency, not both"
            raise ScenarioError(msg, section=section.name, field="Pm")
        return section.build(
            QDSourceSpec,
            rep_rate=rep_rate,
            R=R,
            Pm=section.number("Pm"),
            internal_loss=internal_loss,
        )
    if R is None and internal_loss is None:
        msg = "give either R or internal_loss_db"
        raise ScenarioError(msg, section=section.name, field="R")
    return section.build(
        QDSourceSpec.from_hbt,
        rep_rate=rep_rate,
        kappa=section.number("kappa", BENCH_KAPPA),
        bench_efficiency=section.number("bench_efficiency", BENCH_EFFICIENCY),
        R=R,
        internal_loss=internal_loss,
    )


def _finite_key(section: _Section) -> tuple[FiniteKeyParams, EpsilonBudget | None]:
    budget = None
    eps_EC = section.number("eps_EC")
    if section.boolean("optimize", True):
        for key in ("eps_bar", "eps_PA"):
            if key in section:
                msg = "the split is optimized; set optimize = false to fix it"
                raise ScenarioError(msg, section=section.name, field=key)
        budget = section.build(
            EpsilonBudget, eps_total=section.number("eps_total"), eps_EC=eps_EC
        )
    elif "eps_total" in section:
        msg = "the total follows from a fixed split; drop it or set optimize = true"
        raise ScenarioError(msg, section=section.name, field="eps_total")
    params = section.build(
        FiniteKeyParams,
        eps_EC=eps_EC,
        eps_PE=section.number("eps_PE"),
        eps_bar=section.number("eps_bar"),
        eps_PA=section.number("eps_PA"),
        f=section.number("f"),
        q=section.number("q"),
    )
    return params, budget


def scenario_from_dict(data: Mapping[str, Any], *, name: str = "") -> Scenario:
    """Build a validated :class:`Scenario` from parsed TOML tables."""
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        msg = f"unknown section(s): {', '.join(unknown)}"
        raise ScenarioError(msg, section=unknown[0])
    if "source" not in data:
        msg = "missing required section"
        raise ScenarioError(msg, section="source")
    sections = {key: _Section(key, data.get(key, {})) for key in _SECTIONS}

    head = sections["scenario"]
    channel = sections["channel"].build(
        ChannelSpec,
        background_rate=sections["channel"].number("background_rate"),
        pass_duration=sections["channel"].number("pass_duration"),
    )
    rx = sections["receiver"]
    receiver = rx.build(
        ReceiverSpec,
        detector_efficiency=rx.number("detector_efficiency"),
        receiver_optical_loss=rx.number("receiver_optical_loss_db"),
        num_detectors=rx.integer("num_detectors"),
        coincidence_window=rx.number("coincidence_window"),
        dark_count_prob=rx.number("dark_count_prob"),
        intrinsic_error=rx.number("intrinsic_error"),
    )
    params, budget = _finite_key(sections["finite_key"])
    dc = sections["decoy"]
    decoy = dc.build(
        DecoyOptions,
        y0=dc.choice("y0", Y0Estimate, Y0Estimate.BACKGROUND),
        fluctuation=dc.choice("fluctuation", Fluctuation, Fluctuation.NORMAL),
        Y0_L=dc.number("Y0_L"),
        vacuum_error_subtraction=dc.boolean("vacuum_error_subtraction", False),
    )
    sw = sections["sweep"]
    sweep = sw.build(
        SweepRange,
        start=sw.number("start"),
        stop=sw.number("stop"),
        step=sw.number("step"),
    )
    mc = sections["montecarlo"]
    montecarlo = mc.build(
        MonteCarloOptions,
        seed=mc.integer("seed"),
        num_slots=mc.integer("num_slots"),
        hbt_eta=mc.number("hbt_eta"),
        double_click=mc.choice(
            "double_click", DoubleClickPolicy, DoubleClickPolicy.RANDOM_ASSIGN
        ),
        chunk_size=mc.integer("chunk_size"),
        workers=mc.integer("workers"),
    )
    return Scenario(
        name=head.string("name", name),
        source=_source(sections["source"]),
        link=LinkBudget(channel=channel, receiver=receiver),
        params=params,
        budget=budget,
        decoy=decoy,
        sweep=sweep,
        mode=head.choice("mode", Mode, Mode.ANALYTIC),
        montecarlo=montecarlo,
        description=head.string("description", ""),
    )


def _parse_toml(text: str, origin: str) -> dict[str, Any]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        line = int(match.group(1)) if match else None
        msg = f"{origin}: {exc}"
        raise ScenarioError(msg, line=line) from exc
    if not data:
        msg = f"{origin}: scenario file is empty"
        raise ScenarioError(msg)
    return data


def _builtin(
    name: str, description: str, source: dict[str, Any], **extra: Any
) -> dict[str, Any]:
    return {
        "scenario": {"name": name, "description": description},
        "source": source,
        **extra,
    }


#: silicon APDs at the bench efficiency with 250 Hz of dark counts each
_RECEIVER = {"detector_efficiency": 0.6, "dark_count_prob": 250.0 * 5e-9}
#: a 300 MHz slot lasts 3.3 ns, so the 5 ns window becomes a 0.5 ns gate
_GATED_RECEIVER = {
    **_RECEIVER,
    "coincidence_window": 0.5e-9,
    "dark_count_prob": 250.0 * 0.5e-9,
}
#: HBT ratio assumed for a resonantly driven dot at 300 MHz
RESONANT_KAPPA = 3e-6

_WCP_DECOY = {"y0": "signal-error"}

BUILTIN_SCENARIOS: dict[str, dict[str, Any]] = {
    "wcp76": _builtin(
        "wcp76",
        "decoy-state BB84, 76.4 MHz, mu = 0.5, nu = 0.1",
        {"kind": "wcp", "rep_rate": 76.4e6, "mu": 0.5, "nu": 0.1, "K_mu": 0.9},
        receiver=_RECEIVER,
        decoy=_WCP_DECOY,
    ),
    "qd76-15db": _builtin(
        "qd76-15db",
        "bench quantum dot, 76.4 MHz, about 15 dB internal loss",
        {"kind": "qd", "rep_rate": 76.4e6, "R": BENCH_R, "Pm": REPORTED_PM},
        receiver=_RECEIVER,
    ),
    "qd76-4db": _builtin(
        "qd76-4db",
        "quantum dot, 76.4 MHz, internal loss improved to 4 dB",
        {"kind": "qd", "rep_rate": 76.4e6, "internal_loss_db": 4.0},
        receiver=_RECEIVER,
    ),
    "wcp300": _builtin(
        "wcp300",
        "decoy-state BB84, 300 MHz, mu = 0.5, nu = 0.1, 0.5 ns gate",
        {"kind": "wcp", "rep_rate": 300e6, "mu": 0.5, "nu": 0.1, "K_mu": 0.9},
        receiver=_GATED_RECEIVER,
        decoy=_WCP_DECOY,
    ),
    "qd300-4db": _builtin(
        "qd300-4db",
        "resonantly driven quantum dot, 300 MHz, 4 dB internal loss, 0.5 ns gate",
        {
            "kind": "qd",
            "rep_rate": 300e6,
            "internal_loss_db": 4.0,
            "kappa": RESONANT_KAPPA,
        },
        receiver=_GATED_RECEIVER,
    ),
}


def list_scenarios() -> list[tuple[str, str]]:
    """Names and descriptions of the built-in scenarios."""
    return [
        (name, data["scenario"]["description"])
        for name, data in BUILTIN_SCENARIOS.items()
    ]


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a built-in scenario by name, or a scenario file by path."""
    key = str(name_or_path)
    if key in BUILTIN_SCENARIOS:
        logger.info("loading built-in scenario %s", key)
        return scenario_from_dict(BUILTIN_SCENARIOS[key], name=key)
    path = Path(name_or_path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        known = ", ".join(BUILTIN_SCENARIOS)
        msg = f"{path}: no such file or built-in scenario (built-ins: {known})"
        raise ScenarioError(msg) from None
    except OSError as exc:
        msg = f"{path}: {exc.strerror or exc}"
        raise ScenarioError(msg) from exc
    logger.info("loading scenario file %s", path)
    return scenario_from_dict(_parse_toml(text, str(path)), name=path.stem)
