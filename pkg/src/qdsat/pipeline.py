# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""From a source and a link to the key length of one pass.

The analytic path feeds expected counts into the key-length formulas; the
empirical path feeds Monte Carlo tallies into the same formulas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from qdsat.decoy import (
    DecoyObservables,
    Fluctuation,
    Y0Estimate,
    decoy_bounds,
    wcp_key_length,
)
from qdsat.errors import (
    BoundsCollapseError,
    InsufficientDataError,
    NoDetectionsError,
    ZeroKeyCause,
)
from qdsat.keyrate import FiniteKeyParams, KeyRateResult, QdKeyInput, qd_key_length
from qdsat.link import slot_statistics
from qdsat.montecarlo import simulate_hbt, simulate_pass
from qdsat.optimize import optimize_epsilons
from qdsat.sources import QDSourceSpec, WCPSourceSpec, multiphoton_bound

if TYPE_CHECKING:
    from typing import Callable

    from qdsat.link import LinkBudget
    from qdsat.montecarlo import SimConfig, SimOutcome
    from qdsat.optimize import EpsilonBudget
    from qdsat.sources import SourceModel

__all__ = [
    "DecoyOptions",
    "analytic_key",
    "empirical_key_pipeline",
    "expected_decoy_observables",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoyOptions:
    """How the decoy analysis bounds the vacuum yield and the fluctuations."""

    y0: Y0Estimate = Y0Estimate.BACKGROUND
    fluctuation: Fluctuation = Fluctuation.NORMAL
    Y0_L: float = 0.0
    vacuum_error_subtraction: bool = False


def _no_key(
    cause: ZeroKeyCause, params: FiniteKeyParams, *, n_sent: float, **kwargs: float
) -> KeyRateResult:
    values = {"n_detected": 0.0, "m_sifted": 0.0, "qber": math.nan, **kwargs}
    return KeyRateResult(
        key_bits=0.0,
        n_detected=values["n_detected"],
        m_sifted=values["m_sifted"],
        qber=values["qber"],
        delta=math.nan,
        eps_bar=params.eps_bar,
        eps_PA=params.eps_PA,
        n_sent=n_sent,
        cause=cause,
    )


def _optimized(
    evaluate: Callable[[FiniteKeyParams], KeyRateResult],
    params: FiniteKeyParams,
    budget: EpsilonBudget | None,
) -> KeyRateResult:
    if budget is None:
        return evaluate(params)
    if not math.isclose(budget.eps_EC, params.eps_EC, rel_tol=1e-12):
        params = replace(params, eps_EC=budget.eps_EC)
    best = optimize_epsilons(
        lambda eb, epa: evaluate(params.with_split(eb, epa)).key_bits,
        budget.eps_total,
        budget.eps_EC,
    )
    return evaluate(params.with_split(best.eps_bar, best.eps_PA))


def _qd_key(
    source: QDSourceSpec,
    inp: QdKeyInput,
    n_sent: float,
    params: FiniteKeyParams,
    budget: EpsilonBudget | None,
) -> KeyRateResult:
    result = _optimized(lambda p: qd_key_length(inp, p), params, budget)
    logger.debug("%s: %s", source, result)
    return replace(result, n_sent=n_sent)


def _wcp_key(
    source: WCPSourceSpec,
    obs: DecoyObservables,
    params: FiniteKeyParams,
    budget: EpsilonBudget | None,
    decoy: DecoyOptions,
    background: float,
) -> KeyRateResult:
    try:
        bounds = decoy_bounds(
            obs,
            source.mu,
            source.nu,
            params.eps_PE,
            y0=decoy.y0,
            background=background,
            Y0_L=decoy.Y0_L,
            vacuum_error_subtraction=decoy.vacuum_error_subtraction,
            fluctuation=decoy.fluctuation,
        )
    except InsufficientDataError:
        return _no_key(ZeroKeyCause.NO_DETECTIONS, params, n_sent=obs.n)
    except BoundsCollapseError as exc:
        logger.debug("no single-photon bound: %s", exc)
        assert obs.n_mu is not None
        return _no_key(
            ZeroKeyCause.BOUNDS_COLLAPSE,
            params,
            n_sent=obs.n,
            n_detected=obs.n_mu,
            m_sifted=params.q * obs.n_mu,
            qber=obs.E_mu,
        )
    return _optimized(
        lambda p: wcp_key_length(obs, bounds, p, source.K_mu), params, budget
    )


def expected_decoy_observables(
    source: WCPSourceSpec, link: LinkBudget
) -> DecoyObservables:
    """Expected gains and error rates of both intensities over a pass."""
    signal = slot_statistics(source, link)
    decoy = slot_statistics(source, link, mu=source.nu)
    n = signal.n_sent
    return DecoyObservables(
        n=n,
        N_mu=source.K_mu * n,
        N_nu=(1.0 - source.K_mu) * n,
        Q_mu=signal.p_det,
        Q_nu=decoy.p_det,
        E_mu=signal.E,
        E_nu=decoy.E,
    )


def analytic_key(
    source: SourceModel,
    link: LinkBudget,
    params: FiniteKeyParams,
    *,
    budget: EpsilonBudget | None = None,
    decoy: DecoyOptions | None = None,
) -> KeyRateResult:
    """Key length of one pass from expected counts.

    With a ``budget`` the (eps_bar, eps_PA) split is optimized, otherwise the
    split in ``params`` is used as is.
    """
    n_sent = source.rep_rate * link.channel.pass_duration
    try:
        if isinstance(source, QDSourceSpec):
            stats = slot_statistics(source, link)
            inp = QdKeyInput(
                n=stats.n_detected,
                m=params.q * stats.n_detected,
                E=stats.E,
                p_det=stats.p_det,
                Pm=source.Pm,
            )
            return _qd_key(source, inp, n_sent, params, budget)
        obs = expected_decoy_observables(source, link)
    except NoDetectionsError:
        return _no_key(ZeroKeyCause.NO_DETECTIONS, params, n_sent=n_sent)
    return _wcp_key(
        source, obs, params, budget, decoy or DecoyOptions(), link.background
    )


def _tally_qber(outcome: SimOutcome) -> float:
    # a handful of sifted bits can exceed 1/2 by chance; that is no key either way
    return min(outcome.observed_qber, 0.5)


def empirical_key_pipeline(
    cfg: SimConfig,
    params: FiniteKeyParams,
    *,
    budget: EpsilonBudget | None = None,
    decoy: DecoyOptions | None = None,
) -> KeyRateResult:
    """Key length of ``cfg.num_slots`` simulated slots.

    For a quantum-dot source with ``cfg.hbt_eta`` set, Pm is not taken from the
    source but re-estimated from a simulated HBT run of the same length.
    """
    outcome = simulate_pass(cfg)
    source = cfg.source
    n_sent = float(cfg.num_slots)
    if isinstance(source, QDSourceSpec):
        if outcome.sifted == 0:
            return _no_key(ZeroKeyCause.NO_DETECTIONS, params, n_sent=n_sent)
        Pm = source.Pm
        if cfg.hbt_eta is not None:
            assert source.R is not None
            bench = simulate_hbt(
                source.distribution,
                cfg.hbt_eta,
                cfg.num_slots,
                0.0,
                cfg.seed,
                chunk_size=cfg.chunk_size,
                workers=cfg.workers,
            )
            Pm = multiphoton_bound(bench.kappa, cfg.hbt_eta, source.R)
            logger.info("Pm estimated from simulated bench: %.4g", Pm)
        inp = QdKeyInput(
            n=float(outcome.detected),
            m=float(outcome.sifted),
            E=_tally_qber(outcome),
            p_det=outcome.gain,
            Pm=Pm,
        )
        return _qd_key(source, inp, n_sent, params, budget)

    signal = outcome.components["signal"]
    decoy_part = outcome.components.get("decoy")
    if decoy_part is None or decoy_part.sifted == 0 or signal.sifted == 0:
        return _no_key(
            ZeroKeyCause.NO_DETECTIONS,
            params,
            n_sent=n_sent,
            n_detected=float(signal.detected),
        )
    obs = DecoyObservables(
        n=n_sent,
        N_mu=float(signal.num_slots),
        N_nu=float(decoy_part.num_slots),
        Q_mu=signal.gain,
        Q_nu=decoy_part.gain,
        E_mu=_tally_qber(signal),
        E_nu=_tally_qber(decoy_part),
        n_mu=float(signal.detected),
    )
    return _wcp_key(
        source, obs, params, budget, decoy or DecoyOptions(), cfg.link.background
    )
