import json

import httpx
import pytest

from masqrad import backends
from masqrad.backends import (
    BackendRequest,
    BackendUnavailable,
    MockBackend,
    MockEntry,
    MockScript,
    NoMockEntry,
    RateLimited,
    RemoteBackend,
    SamplingParams,
    ScheduledFault,
    Stage,
    default_params,
)


def request(stage, prompt):
    return BackendRequest(stage, prompt, default_params(stage))


class TestSamplingParams:
    def test_valid(self):
        SamplingParams(0.5, 0.9, 2048)

    @pytest.mark.parametrize(
        "temperature,top_p,max_new_tokens",
        [(-0.1, 0.9, 64), (2.1, 0.9, 64), (0.5, 0.0, 64), (0.5, 1.1, 64), (0.5, 0.9, 0)],
    )
    def test_invalid(self, temperature, top_p, max_new_tokens):
        with pytest.raises(ValueError):
            SamplingParams(temperature, top_p, max_new_tokens)


class TestDefaultParams:
    # One row per stage; the engine's sampling profile is a fixed contract.
    @pytest.mark.parametrize(
        "stage,temperature,top_p,max_new_tokens",
        [
            (Stage.INTERPRETER_CREATIVE, 0.3, 0.7, 64),
            (Stage.ACTOR, 0.5, 0.9, 2048),
            (Stage.CRITIC, 0.7, 0.8, 2048),
            (Stage.ANALYSIS, 0.4, 0.6, 2048),
        ],
    )
    def test_stage_tuple(self, stage, temperature, top_p, max_new_tokens):
        params = default_params(stage)
        assert params.temperature == temperature
        assert params.top_p == top_p
        assert params.max_new_tokens == max_new_tokens

    def test_configurable_cap(self):
        assert default_params(Stage.ACTOR, max_new_tokens=512).max_new_tokens == 512


class TestMockBackend:
    def test_lookup_by_key(self):
        backend = MockBackend(
            MockScript((MockEntry(Stage.ACTOR, "q1", "SCRIPT_A"),))
        ).session()
        assert backend.complete(request(Stage.ACTOR, "please handle q1 now")) == "SCRIPT_A"

    def test_determinism(self):
        script = MockScript((MockEntry(Stage.ACTOR, "q1", "SCRIPT_A"),))
        r1 = MockBackend(script).session().complete(request(Stage.ACTOR, "q1"))
        r2 = MockBackend(script).session().complete(request(Stage.ACTOR, "q1"))
        assert r1 == r2

    def test_empty_table_raises(self):
        backend = MockBackend(MockScript(())).session()
        with pytest.raises(NoMockEntry):
            backend.complete(request(Stage.ACTOR, "anything"))

    def test_longest_key_wins(self):
        backend = MockBackend(
            MockScript(
                (
                    MockEntry(Stage.ACTOR, "q1", "SHORT"),
                    MockEntry(Stage.ACTOR, "q12", "LONG"),
                )
            )
        ).session()
        assert backend.complete(request(Stage.ACTOR, "about q12")) == "LONG"

    def test_fault_schedule_then_normal(self):
        script = MockScript(
            entries=(MockEntry(Stage.CRITIC, "q1", "VERDICT: APPROVE"),),
            fault_schedule=(ScheduledFault(Stage.CRITIC, 1, "reject_verdict"),),
        )
        session = MockBackend(script).session()
        first = session.complete(request(Stage.CRITIC, "q1"))
        second = session.complete(request(Stage.CRITIC, "q1"))
        assert first.startswith("VERDICT: REJECT")
        assert second == "VERDICT: APPROVE"

    def test_round_counters_are_per_session(self):
        script = MockScript(
            entries=(MockEntry(Stage.CRITIC, "q1", "VERDICT: APPROVE"),),
            fault_schedule=(ScheduledFault(Stage.CRITIC, 1, "reject_verdict"),),
        )
        backend = MockBackend(script)
        s1, s2 = backend.session(), backend.session()
        s1.complete(request(Stage.CRITIC, "q1"))  # consumes s1's round 1 fault
        # A fresh session still sees the round-1 fault.
        assert s2.complete(request(Stage.CRITIC, "q1")).startswith("VERDICT: REJECT")

    def test_duplicate_entry_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            MockScript(
                (
                    MockEntry(Stage.ACTOR, "q1", "A"),
                    MockEntry(Stage.ACTOR, "q1", "B"),
                )
            )

    def test_unknown_fault_kind_rejected(self):
        with pytest.raises(ValueError, match="fault_kind"):
            MockScript((), (ScheduledFault(Stage.CRITIC, 1, "explode"),))

    def test_from_file(self, tmp_path):
        path = tmp_path / "mock.json"
        path.write_text(
            json.dumps(
                {
                    "entries": [
                        {"stage": "actor", "match_key": "q1", "response": "SCRIPT_A"}
                    ],
                    "fault_schedule": [
                        {"stage": "critic", "round_index": 2, "fault_kind": "reject_verdict"}
                    ],
                }
            )
        )
        script = MockScript.from_file(path)
        assert script.entries[0].response == "SCRIPT_A"
        assert script.fault_schedule[0].round_index == 2


class TestRemoteBackend:
    def test_retries_rate_limit_then_succeeds(self, monkeypatch):
        calls = []

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append(url)
            if len(calls) < 3:
                return httpx.Response(429, headers={"retry-after": "0"})
            return httpx.Response(
                200, json={"choices": [{"message": {"content": "hello"}}]}
            )

        monkeypatch.setattr(backends.httpx, "post", fake_post)
        monkeypatch.setattr(backends.time, "sleep", lambda s: None)
        backend = RemoteBackend("https://example.test/v1/chat", "m1", api_key="k")
        assert backend.complete(request(Stage.ACTOR, "hi")) == "hello"
        assert len(calls) == 3

    def test_rate_limit_exhaustion(self, monkeypatch):
        monkeypatch.setattr(
            backends.httpx,
            "post",
            lambda *a, **k: httpx.Response(429, headers={"retry-after": "0"}),
        )
        monkeypatch.setattr(backends.time, "sleep", lambda s: None)
        backend = RemoteBackend("https://example.test", "m1", api_key="k")
        with pytest.raises(RateLimited):
            backend.complete(request(Stage.ACTOR, "hi"))

    def test_network_failure(self, monkeypatch):
        def boom(*a, **k):
            raise httpx.ConnectError("refused")

        monkeypatch.setattr(backends.httpx, "post", boom)
        backend = RemoteBackend("https://example.test", "m1", api_key="k")
        with pytest.raises(BackendUnavailable):
            backend.complete(request(Stage.ACTOR, "hi"))
