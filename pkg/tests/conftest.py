import pytest

from uplan.loader import fixture_path, load_domain
from uplan.worlds import build_world_model


@pytest.fixture(scope="session")
def aircombat():
    return load_domain(fixture_path("aircombat"))


@pytest.fixture(scope="session")
def tutorial():
    return load_domain(fixture_path("tutorial"))


@pytest.fixture(scope="session")
def worstcase():
    return load_domain(fixture_path("worstcase"))


@pytest.fixture(scope="session")
def aircombat_worlds(aircombat):
    return build_world_model(aircombat)


def jammed_evidence(domain):
    """Aircombat evidence with the jamming frame forced to 'jammed'."""
    from uplan.evidence import MassDistribution

    out = []
    for dist in domain.evidence:
        if dist.frame.id == "ecm3":
            out.append(MassDistribution.from_members(dist.frame,
                                                     {("jammed",): 1.0}))
        else:
            out.append(dist)
    return out


def mixed_ecm_evidence(domain):
    """Aircombat evidence spreading belief over clean and jammed worlds."""
    from uplan.evidence import MassDistribution

    out = []
    for dist in domain.evidence:
        if dist.frame.id == "ecm3":
            out.append(MassDistribution.from_members(
                dist.frame, {("clean",): 0.6, ("jammed",): 0.3,
                             ("clean", "jammed"): 0.1}))
        else:
            out.append(dist)
    return out
