"""Project downloads against a stubbed HTTP session."""

import json
import os

import pytest
import requests

from scratchlm.errors import NetworkError, NotFound, RateLimited
from scratchlm.fetch import fetch_project
from scratchlm.sb3 import parse_project

PROJECT_JSON = json.dumps({
    "targets": [
        {"isStage": True, "name": "Stage", "blocks": {}},
        {"isStage": False, "name": "Sprite1", "blocks": {
            "b1": {"opcode": "event_whenflagclicked", "next": None,
                   "parent": None, "inputs": {}, "fields": {},
                   "shadow": False, "topLevel": True},
        }},
    ],
}).encode()


class FakeResponse:
    def __init__(self, status_code, body=b"", doc=None):
        self.status_code = status_code
        self.content = body if doc is None else json.dumps(doc).encode()
        self._doc = doc

    def json(self):
        return self._doc if self._doc is not None else json.loads(self.content)


class FakeSession:
    """Queues responses per URL prefix; records every request."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append((url, params))
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action


def meta_response(remix_parent=None):
    return FakeResponse(200, doc={
        "id": 123, "title": "demo", "project_token": "tok",
        "remix": {"parent": remix_parent, "root": remix_parent},
    })


class TestFetchProject:
    def test_valid_id_yields_parseable_archive(self):
        session = FakeSession([meta_response(), FakeResponse(200, PROJECT_JSON)])
        fetched = fetch_project(123, session=session, sleep=lambda _: None)
        ast = parse_project(fetched.archive)
        assert len(ast.targets) == 2
        assert not fetched.is_remix
        # The token from the metadata is passed to the project host.
        assert session.calls[1][1] == {"token": "tok"}

    def test_remix_flag_from_metadata(self):
        session = FakeSession([meta_response(remix_parent=99),
                               FakeResponse(200, PROJECT_JSON)])
        fetched = fetch_project(123, session=session, sleep=lambda _: None)
        assert fetched.is_remix

    def test_unknown_id_raises_not_found(self):
        session = FakeSession([FakeResponse(404)])
        with pytest.raises(NotFound):
            fetch_project(999, session=session, sleep=lambda _: None)

    def test_429_retries_then_rate_limited(self):
        session = FakeSession([FakeResponse(429)] * 4)
        delays = []
        with pytest.raises(RateLimited):
            fetch_project(123, session=session, max_retries=3,
                          backoff=0.1, sleep=delays.append)
        assert delays == [0.1, 0.2, 0.4]

    def test_429_then_success(self):
        session = FakeSession([FakeResponse(429), meta_response(),
                               FakeResponse(200, PROJECT_JSON)])
        fetched = fetch_project(123, session=session, sleep=lambda _: None)
        assert fetched.project_id == "123"

    def test_connection_error_wrapped(self):
        session = FakeSession([requests.ConnectionError("nope")])
        with pytest.raises(NetworkError):
            fetch_project(123, session=session, sleep=lambda _: None)

    def test_non_numeric_id_rejected(self):
        with pytest.raises(ValueError):
            fetch_project("abc", session=FakeSession([]))

    def test_endpoint_env_overrides(self, monkeypatch):
        monkeypatch.setenv("SCRATCHLM_API_BASE", "http://localhost:1/api")
        monkeypatch.setenv("SCRATCHLM_PROJECT_HOST", "http://localhost:1/proj")
        session = FakeSession([meta_response(), FakeResponse(200, PROJECT_JSON)])
        fetch_project(5, session=session, sleep=lambda _: None)
        assert session.calls[0][0] == "http://localhost:1/api/projects/5"
        assert session.calls[1][0] == "http://localhost:1/proj/5"


@pytest.mark.skipif("SCRATCHLM_LIVE_FETCH" not in os.environ,
                    reason="live network smoke test; set SCRATCHLM_LIVE_FETCH")
def test_live_fetch_smoke():
    fetched = fetch_project(10128407)
    parse_project(fetched.archive)
