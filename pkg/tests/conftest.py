import pytest
from hypothesis import Verbosity, settings

from qdsat.keyrate import FiniteKeyParams
from qdsat.link import ChannelSpec, LinkBudget
from qdsat.sources import (
    BENCH_EFFICIENCY,
    BENCH_KAPPA,
    QDSourceSpec,
    WCPSourceSpec,
)

settings.register_profile("ci", max_examples=1000)
settings.register_profile("dev", max_examples=10)
settings.register_profile("debug", max_examples=10, verbosity=Verbosity.verbose)


@pytest.fixture()
def qd15() -> QDSourceSpec:
    """76.4 MHz quantum dot with 15 dB internal loss and the bench kappa."""
    return QDSourceSpec.from_hbt(
        76.4e6, BENCH_KAPPA, BENCH_EFFICIENCY, internal_loss=15.0
    )


@pytest.fixture()
def wcp76() -> WCPSourceSpec:
    return WCPSourceSpec(76.4e6, mu=0.5, nu=0.1, K_mu=0.9)


@pytest.fixture()
def link() -> LinkBudget:
    return LinkBudget(channel=ChannelSpec(loss=20.0))


@pytest.fixture()
def params() -> FiniteKeyParams:
    return FiniteKeyParams()
