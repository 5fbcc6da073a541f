# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause

from qdsat.decoy import DecoyBounds, DecoyObservables, decoy_bounds, wcp_key_length
from qdsat.errors import QdsatError, ScenarioError, ZeroKeyCause
from qdsat.keyrate import FiniteKeyParams, KeyRateResult, QdKeyInput, qd_key_length
from qdsat.link import ChannelSpec, LinkBudget, ReceiverSpec
from qdsat.montecarlo import SimConfig, SimOutcome, simulate_hbt, simulate_pass
from qdsat.optimize import EpsilonBudget, optimize_epsilons
from qdsat.pipeline import analytic_key, empirical_key_pipeline
from qdsat.scenarios import Scenario, load_scenario
from qdsat.sources import (
    PhotonNumberDistribution,
    QDSourceSpec,
    WCPSourceSpec,
    multiphoton_bound,
)
from qdsat.sweep import emit_csv, run_sweep, run_sweeps
