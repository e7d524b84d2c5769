import pytest

from infantsim.bodymodel import load_default_body


@pytest.fixture(scope="session")
def mitten_spec():
    return load_default_body(hand_variant="mitten")


@pytest.fixture(scope="session")
def full_spec():
    return load_default_body(hand_variant="full")
