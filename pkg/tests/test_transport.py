from __future__ import annotations

import pytest

from care_workbench.errors import TransportFailure
from care_workbench.transport import (
    FunctionTransport,
    ModelRequest,
    RecordingTransport,
    ReplayTransport,
    RetryingTransport,
    RetryPolicy,
)


def request(text: str) -> ModelRequest:
    return ModelRequest(system_text="sys", messages=(("user", text),))


def test_request_hash_is_stable_and_sensitive():
    a = request("hello")
    b = request("hello")
    c = request("other")
    assert a.request_hash == b.request_hash
    assert a.request_hash != c.request_hash
    assert a.request_hash != ModelRequest(system_text="sys2", messages=(("user", "hello"),)).request_hash


def test_temperature_bounds_enforced():
    with pytest.raises(ValueError):
        ModelRequest(system_text="s", messages=(), temperature=1.5)


def test_record_then_replay_round_trip(tmp_path):
    cassette = tmp_path / "cassette.jsonl"
    live = FunctionTransport(lambda r: f"echo:{r.messages[-1][1]}", name="echo")
    recorder = RecordingTransport(live, cassette)
    assert recorder.complete(request("one")) == "echo:one"
    assert recorder.complete(request("two")) == "echo:two"

    replay = ReplayTransport(cassette)
    assert replay.complete(request("one")) == "echo:one"
    assert replay.complete(request("two")) == "echo:two"


def test_replay_miss_fails(tmp_path):
    cassette = tmp_path / "cassette.jsonl"
    RecordingTransport(FunctionTransport(lambda r: "x"), cassette).complete(request("known"))
    replay = ReplayTransport(cassette)
    with pytest.raises(TransportFailure):
        replay.complete(request("unknown"))


def test_replay_multiple_cassettes(tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    RecordingTransport(FunctionTransport(lambda r: "A"), first).complete(request("one"))
    RecordingTransport(FunctionTransport(lambda r: "B"), second).complete(request("two"))
    replay = ReplayTransport([first, second])
    assert replay.complete(request("one")) == "A"
    assert replay.complete(request("two")) == "B"


def test_conflicting_cassette_rejected(tmp_path):
    cassette = tmp_path / "cassette.jsonl"
    responses = iter(["first", "second"])
    recorder = RecordingTransport(FunctionTransport(lambda r: next(responses)), cassette)
    recorder.complete(request("same"))
    recorder.complete(request("same"))
    with pytest.raises(ValueError):
        ReplayTransport(cassette)


def test_retrying_transport_retries_then_fails():
    calls = {"n": 0}

    def flaky(_request: ModelRequest) -> str:
        calls["n"] += 1
        raise RuntimeError("boom")

    sleeps: list[float] = []
    transport = RetryingTransport(
        FunctionTransport(flaky), RetryPolicy(retries=2, sleeper=sleeps.append)
    )
    with pytest.raises(TransportFailure):
        transport.complete(request("x"))
    assert calls["n"] == 3
    assert len(sleeps) == 2


def test_retrying_transport_recovers():
    calls = {"n": 0}

    def flaky_once(_request: ModelRequest) -> str:
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("boom")
        return "ok"

    transport = RetryingTransport(
        FunctionTransport(flaky_once), RetryPolicy(retries=2, sleeper=lambda _d: None)
    )
    assert transport.complete(request("x")) == "ok"
