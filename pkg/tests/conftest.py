import os

import pytest

from raspvisor.machine import MachineParams

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def p32():
    """Default geometry: 32-bit words, 250 memory words, caps 10/2/10."""
    return MachineParams(w=32, n=250, ell=10, s=2, mu=10)


@pytest.fixture(scope="session")
def p8():
    return MachineParams(w=8, n=16, ell=4, s=2, mu=3)


@pytest.fixture(scope="session")
def bb_sources():
    """The three bundled busy-beaver fixtures, in rank order."""
    out = []
    for k in (1, 2, 3):
        with open(os.path.join(FIXTURES, f"bb{k}.arr"), encoding="utf-8") as f:
            out.append(f.read())
    return out
