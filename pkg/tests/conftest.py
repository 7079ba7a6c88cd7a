"""Shared fixtures: one group setup and one enrolled population per session.

Group setup and key issuance dominate test wall-time, so they are built
once.  Anything a test mutates (key tables, pools) is assembled fresh
per test from the session-issued material, which is cheap.
"""

import pytest

from vfac import scheme
from vfac.group import Rng

ATTRS_AA1 = ["aa1:doctor", "aa1:staff", "aa1:admin"]
ATTRS_AA2 = ["aa2:cardiology", "aa2:nurse"]


@pytest.fixture(scope="session")
def gp():
    return scheme.global_setup(128, Rng(1))


@pytest.fixture(scope="session")
def authorities(gp):
    rng = Rng(2)
    aa1 = scheme.authority_setup(gp, "aa1", rng)
    aa2 = scheme.authority_setup(gp, "aa2", rng)
    return {"aa1": aa1, "aa2": aa2}


@pytest.fixture(scope="session")
def pks(authorities):
    return {aid: ak.public for aid, ak in authorities.items()}


class Enrolled:
    """One user's complete key material plus the cloud parts for them."""

    def __init__(self, gid, x, upk, usk, cloud_parts):
        self.gid = gid
        self.x = x
        self.upk = upk
        self.usk = usk
        self.cloud_parts = cloud_parts  # list of per-authority dicts


def _enroll(gp, authorities, gid, attrs, rng):
    x, upk = scheme.user_key_init(gp, gid, rng)
    usk = scheme.UserKeys(gid=gid, x_inv=x.inverse())
    cloud_parts = []
    by_auth = {}
    for attr in attrs:
        by_auth.setdefault(attr.split(":", 1)[0], []).append(attr)
    for aid, owned in by_auth.items():
        cloud, user = scheme.authority_keygen(gp, authorities[aid], gid, upk, owned, rng)
        cloud_parts.append(cloud)
        usk.add_k3(user)
    return Enrolled(gid, x, upk, usk, cloud_parts)


@pytest.fixture(scope="session")
def alice(gp, authorities):
    # holds enough for (doctor AND cardiology) policies
    return _enroll(gp, authorities, "alice", ["aa1:doctor", "aa1:staff", "aa2:cardiology"], Rng(3))


@pytest.fixture(scope="session")
def bob(gp, authorities):
    # staff only; unauthorized for doctor/cardiology policies
    return _enroll(gp, authorities, "bob", ["aa1:staff"], Rng(4))


@pytest.fixture()
def kt(alice, bob):
    table = scheme.KeyList()
    for user in (alice, bob):
        for part in user.cloud_parts:
            scheme.register_key(table, user.gid, user.upk, part)
    return table


@pytest.fixture()
def make_pool(gp, pks):
    def fill(attrs=None, count=2, seed=99):
        attrs = list(attrs) if attrs is not None else ATTRS_AA1 + ATTRS_AA2
        return scheme.offline_enc(gp, pks, attrs, count, Rng(seed))

    return fill


@pytest.fixture()
def rng():
    return Rng(12345)
