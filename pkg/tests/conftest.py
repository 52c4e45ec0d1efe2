import pytest

from feberi.core import InteractionGeometry, TlsSpec, kinematics_from_kev
from feberi.coulomb import DipoleCoupling


@pytest.fixture(scope="session")
def kin():
    # 200 keV beam, the reference working point
    return kinematics_from_kev(200.0)


@pytest.fixture(scope="session")
def tls():
    return TlsSpec.from_lab(2.0, 5.0, "transverse")


@pytest.fixture(scope="session")
def geometry(kin):
    return InteractionGeometry.from_kinematics(2.4, kin)


@pytest.fixture(scope="session")
def coupling(tls, geometry, kin):
    return DipoleCoupling(tls, geometry, kin)


@pytest.fixture(scope="session")
def coupling_parallel(tls, geometry, kin):
    return DipoleCoupling(tls, geometry, kin, orientation="parallel")
