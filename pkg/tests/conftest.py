import numpy as np
import pytest

from otfs_bpf import Constellation, FrameParams, design_lpf
from otfs_bpf.interference import compute_dd_maps, fold_interference


@pytest.fixture(scope="session")
def qam4():
    return Constellation.qam(4)


@pytest.fixture(scope="session")
def params128():
    return FrameParams(M=128, N=16)


@pytest.fixture(scope="session")
def tables128(params128):
    return fold_interference(params128, design_lpf(params128))


@pytest.fixture(scope="session")
def maps128(tables128):
    return compute_dd_maps(tables128, sigma_s2=1.0)


@pytest.fixture(scope="session")
def params64():
    return FrameParams(M=64, N=16)


@pytest.fixture(scope="session")
def tables64(params64):
    return fold_interference(params64, design_lpf(params64))
