import numpy as np
import pytest

from fockscope.fock import FockDiagonal

# Reference heralded-photon diagonals used throughout the suite (they sum to
# one exactly) and the source parameters they are consistent with.
REF_DIAG = np.array([0.4138, 0.5758, 0.0104])
REF_ETA = 0.5787
REF_GAMMA_SQ = 0.0160
REF_ETA_T = 0.07


@pytest.fixture(scope="session")
def ref_state():
    return FockDiagonal(REF_DIAG)


@pytest.fixture(scope="session")
def ref_state5():
    return FockDiagonal(np.concatenate([REF_DIAG, [0.0, 0.0]]))
