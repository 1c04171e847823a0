import numpy as np
import pytest

from risolve.models import (
    Damage1dSpec,
    Delamination0dSpec,
    Plasticity0dSpec,
    Toy1dSpec,
    make_damage1d,
    make_delamination0d,
    make_plasticity0d,
    make_toy1d,
)


@pytest.fixture
def toy_convex():
    return make_toy1d(Toy1dSpec(well="convex", a=1.0, kappa=1.0, ell=(0.0, 2.0)))


@pytest.fixture
def toy_doublewell():
    return make_toy1d(
        Toy1dSpec(
            well="doublewell",
            b=1.0,
            w=1.0,
            kappa=1.0,
            ell=(0.0, 3.0),
            z_box=(-3.0, 3.0),
        )
    )


@pytest.fixture
def plasticity():
    return make_plasticity0d(Plasticity0dSpec())


@pytest.fixture
def damage():
    return make_damage1d(Damage1dSpec())


@pytest.fixture
def delamination():
    return make_delamination0d(Delamination0dSpec())


@pytest.fixture
def all_models(toy_convex, toy_doublewell, plasticity, damage, delamination):
    return [toy_convex, toy_doublewell, plasticity, damage, delamination]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
