import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240817))


@pytest.fixture(scope="session")
def exp_kernel():
    from opstab import KernelSpec
    return KernelSpec.conv_exp(1.0, d=1, L=32.0)


@pytest.fixture(scope="session")
def bessel_kernel_1d():
    from opstab import KernelSpec
    return KernelSpec.bessel(2.0, d=1, L=32.0)
