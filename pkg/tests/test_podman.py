import json
import random
import string

import pytest

from helpers import run_lifecycle_sequence
from podkeeper.errors import (
    CannotDowngradeOwner,
    DuplicatePodId,
    Forbidden,
    IllegalTransition,
    InvalidPodId,
    PodDeleted,
    PodNotFound,
    PodNotReady,
    UnknownTemplate,
    UnknownUser,
)
from podkeeper.podman import (
    TRANSITIONS,
    PermissionLevel,
    PodRegistry,
    PodState,
    build_pod_url,
    generate_credentials,
)

USERS = {"jsmith", "mia", "rex"}


@pytest.fixture
def reg():
    return PodRegistry(user_exists=USERS.__contains__)


def test_create_pod(reg):
    pod = reg.create_pod("jsmith", "kgpod", "neo4j", "demo graph")
    assert pod.state is PodState.AVAILABLE
    assert pod.owner == "jsmith"
    assert pod.permissions == {"jsmith": PermissionLevel.ADMIN}
    assert pod.history == [(PodState.REQUESTED, PodState.CREATING), (PodState.CREATING, PodState.AVAILABLE)]


def test_create_errors(reg):
    reg.create_pod("jsmith", "kgpod", "neo4j")
    with pytest.raises(DuplicatePodId):
        reg.create_pod("mia", "kgpod", "neo4j")
    with pytest.raises(UnknownTemplate):
        reg.create_pod("jsmith", "other", "mysql")
    for bad in ["Bad_Pod!", "", "x" * 41, "UPPER", "a.b"]:
        with pytest.raises(InvalidPodId):
            reg.create_pod("jsmith", bad, "neo4j")


def test_provision_failure_is_error_state():
    class Broken:
        def provision(self, pod):
            raise OSError("disk full")

        def detach(self, pod):
            pass

    reg = PodRegistry(provisioner=Broken())
    pod = reg.create_pod("jsmith", "kgpod", "neo4j")
    assert pod.state is PodState.ERROR
    with pytest.raises(PodNotReady):
        reg.get_pod_credentials("jsmith", "kgpod")
    reg.delete_pod("jsmith", "kgpod")
    assert pod.state is PodState.DELETED


def test_list_pods(reg):
    assert reg.list_pods("mia") == []
    reg.create_pod("jsmith", "kgpod", "neo4j")
    reg.create_pod("jsmith", "apod", "neo4j")
    assert [p.pod_id for p in reg.list_pods("jsmith")] == ["apod", "kgpod"]
    reg.set_permission("jsmith", "kgpod", "mia", "READ")
    assert [p.pod_id for p in reg.list_pods("mia")] == ["kgpod"]


def test_summary_has_no_credentials(reg):
    pod = reg.create_pod("jsmith", "kgpod", "neo4j")
    text = json.dumps(pod.summary())
    assert pod.credentials.user_password not in text
    assert "credentials" not in text
    assert pod.credentials.user_password not in repr(pod)


def test_credentials(reg):
    reg.create_pod("jsmith", "kgpod", "neo4j")
    creds = reg.get_pod_credentials("jsmith", "kgpod")
    assert creds.user_username == "kgpod_user"
    assert len(creds.user_password) == 24
    assert set(creds.user_password) <= set(string.ascii_letters + string.digits)
    reg.set_permission("jsmith", "kgpod", "mia", "READ")
    with pytest.raises(Forbidden):
        reg.get_pod_credentials("mia", "kgpod")
    reg.set_permission("jsmith", "kgpod", "mia", "USER")
    assert reg.get_pod_credentials("mia", "kgpod") == creds
    with pytest.raises(Forbidden):
        reg.get_pod_credentials("rex", "kgpod")
    with pytest.raises(PodNotFound):
        reg.get_pod_credentials("jsmith", "nope")


def test_credentials_are_random():
    assert len({generate_credentials("p").user_password for _ in range(50)}) == 50


def test_permissions(reg):
    reg.create_pod("jsmith", "kgpod", "neo4j")
    assert reg.set_permission("jsmith", "kgpod", "mia", "USER")["mia"] is PermissionLevel.USER
    with pytest.raises(Forbidden):
        reg.set_permission("mia", "kgpod", "rex", "READ")
    with pytest.raises(CannotDowngradeOwner):
        reg.set_permission("jsmith", "kgpod", "jsmith", "READ")
    with pytest.raises(UnknownUser):
        reg.set_permission("jsmith", "kgpod", "ghost", "READ")
    with pytest.raises(ValueError):
        reg.set_permission("jsmith", "kgpod", "mia", "OWNER")
    # a non-owner ADMIN may delete
    reg.set_permission("jsmith", "kgpod", "rex", "ADMIN")
    reg.delete_pod("rex", "kgpod")


def test_delete_is_terminal(reg):
    reg.create_pod("jsmith", "kgpod", "neo4j")
    reg.delete_pod("jsmith", "kgpod")
    assert reg.get_pod("jsmith", "kgpod").state is PodState.DELETED
    with pytest.raises(PodDeleted):
        reg.delete_pod("jsmith", "kgpod")
    with pytest.raises(IllegalTransition):
        reg.start_pod("jsmith", "kgpod")
    with pytest.raises(PodNotReady):
        reg.get_pod_credentials("jsmith", "kgpod")
    with pytest.raises(DuplicatePodId):
        reg.create_pod("jsmith", "kgpod", "neo4j")


def test_stop_start(reg):
    reg.create_pod("jsmith", "kgpod", "neo4j")
    reg.stop_pod("jsmith", "kgpod")
    with pytest.raises(PodNotReady):
        reg.get_pod_credentials("jsmith", "kgpod")
    with pytest.raises(IllegalTransition):
        reg.stop_pod("jsmith", "kgpod")
    reg.start_pod("jsmith", "kgpod")
    assert reg.get_pod_credentials("jsmith", "kgpod")


def test_transition_table_matches_declared_graph():
    s = PodState
    assert TRANSITIONS == {
        (s.REQUESTED, s.CREATING), (s.CREATING, s.AVAILABLE), (s.CREATING, s.ERROR),
        (s.AVAILABLE, s.STOPPED), (s.STOPPED, s.AVAILABLE),
        (s.AVAILABLE, s.DELETED), (s.STOPPED, s.DELETED), (s.ERROR, s.DELETED),
    }
    assert not any(src is s.DELETED for src, _ in TRANSITIONS)


def test_level_order():
    assert PermissionLevel.READ < PermissionLevel.USER < PermissionLevel.ADMIN
    assert PermissionLevel.parse("user") is PermissionLevel.USER


@pytest.mark.parametrize(
    "args,url",
    [
        (("kgpod", "icicle.develop.tapis.io"), "kg://kgpod.pods.icicle.develop.tapis.io:443"),
        (("a", "localhost", 8443), "kg://a.pods.localhost:8443"),
    ],
)
def test_build_pod_url(args, url):
    assert build_pod_url(*args) == url


def test_build_pod_url_invalid():
    with pytest.raises(InvalidPodId):
        build_pod_url("Bad_Pod!", "x")


def test_persistence_roundtrip(tmp_path):
    path = tmp_path / "registry.json"
    a = PodRegistry(path)
    a.create_pod("jsmith", "kgpod", "neo4j", "demo")
    a.set_permission("jsmith", "kgpod", "mia", "READ")
    a.create_pod("mia", "gone", "neo4j")
    a.delete_pod("mia", "gone")
    b = PodRegistry(path)
    assert b.dumps() == a.dumps()
    assert b.get_pod("mia", "kgpod").permissions["mia"] is PermissionLevel.READ
    assert b.get_pod("mia", "gone").state is PodState.DELETED


def test_model_based_sequences():
    rng = random.Random(1234)
    for _ in range(1000):
        assert run_lifecycle_sequence(rng, 25) == []
