import pytest

from soficlab import (
    Alphabet,
    GroupModel,
    full_shift,
    nearest_neighbor_sft,
)


@pytest.fixture
def z_group():
    return GroupModel("int_lattice", dim=1)


@pytest.fixture
def binary():
    return Alphabet(("0", "1"))


@pytest.fixture
def golden_mean(z_group, binary):
    """Z-SFT forbidding adjacent 1s (in the pullback-name orientation)."""
    return nearest_neighbor_sft(z_group, binary, [(1, 1)])


@pytest.fixture
def binary_full_shift(z_group, binary):
    return full_shift(z_group, binary)
