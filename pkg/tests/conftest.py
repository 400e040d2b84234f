import numpy as np
import pytest

from lesionbench.nifti import VolumeHeader, VoxelMask


def make_mask(data, pixdim=(1.0, 1.0, 1.0)):
    data = np.asarray(data, dtype=np.uint8)
    header = VolumeHeader(dims=data.shape, datatype_code=2, pixdim=pixdim)
    return VoxelMask(header=header, data=data)


def random_mask(rng, shape=(16, 16, 16), density=0.1, pixdim=(1.0, 1.0, 1.0)):
    data = (rng.random(shape) < density).astype(np.uint8)
    return make_mask(data, pixdim)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
