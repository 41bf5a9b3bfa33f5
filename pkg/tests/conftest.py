import pytest

import oracles
from canard_lab.model import LienardSystem
from canard_lab.sdi import SdiEvaluator


@pytest.fixture(scope="session")
def vdp():
    return LienardSystem.from_text(oracles.VDP_F, oracles.VDP_P, *oracles.VDP_DOMAIN)


@pytest.fixture(scope="session")
def vdp_eval(vdp):
    return SdiEvaluator(vdp)


@pytest.fixture(scope="session")
def quartic():
    return LienardSystem.from_text(
        oracles.QUARTIC_F, oracles.QUARTIC_P, *oracles.QUARTIC_DOMAIN
    )


@pytest.fixture(scope="session")
def quartic_eval(quartic):
    return SdiEvaluator(quartic)


@pytest.fixture(scope="session")
def onezero():
    return LienardSystem.from_text(
        oracles.ONEZERO_F, oracles.ONEZERO_P, *oracles.ONEZERO_DOMAIN
    )


@pytest.fixture(scope="session")
def onezero_eval(onezero):
    return SdiEvaluator(onezero)


@pytest.fixture(scope="session")
def mirrored_vdp():
    # x -> -x image of the van der Pol system: expansion dominates, so the
    # slow relation function uses the first (exhaust-minus) orientation.
    return LienardSystem.from_text("x^2/2 - x^3/3", "x", -2.0, 0.95)


@pytest.fixture(scope="session")
def mirrored_vdp_eval(mirrored_vdp):
    return SdiEvaluator(mirrored_vdp)
