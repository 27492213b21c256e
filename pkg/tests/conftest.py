import pytest

from bogolab import LatticeModelSpec


@pytest.fixture
def free_single_site():
    """The single-site free model with the closed-form displaced spectrum."""
    return LatticeModelSpec(L=1, n_cap=14, t=0.0, phi=(0.0,),
                            beta=1.0, mu=-1.0, mu0=-1.0, nu=0.5)


@pytest.fixture
def interacting_pair():
    """Canonical interacting desk model on two sites."""
    return LatticeModelSpec(L=2, n_cap=6, t=1.0, phi=(0.5,),
                            beta=1.0, mu=-1.0, mu0=-1.0, nu=0.3)
