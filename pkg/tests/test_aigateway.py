"""Gateway capabilities: stub algorithms, remote wire handling, auditing."""

from __future__ import annotations

import json
import math

import httpx
import pytest

from delib.aigateway import (
    AbuseResult,
    AiGateway,
    RemoteBackend,
    ScriptedBackend,
    StubBackend,
    load_taxonomy,
)
from delib.errors import BackendUnavailable, EmptyInput, ExtractorFailure
from delib.transcripts import ExtractionConfig, LlmExtractor, parse_transcript

from .conftest import T0, build_fixture_store, make_tick_clock

LABELS = load_taxonomy()["labels"]


@pytest.fixture
def gateway():
    return AiGateway(clock=make_tick_clock())


class TestPrimitives:
    def test_stub_complete_is_deterministic(self, gateway):
        first = gateway.complete("same prompt")
        assert first == gateway.complete("same prompt")
        assert first.startswith("[stub completion ")
        assert first != gateway.complete("different prompt")

    def test_classify_keyword_table(self, gateway):
        assert gateway.classify_text("The broken streetlight stays dark", LABELS) == ("lighting", 2 / 3)
        assert gateway.classify_text("a broken streetlight", LABELS) == ("lighting", 0.5)
        assert gateway.classify_text("overflowing bins near the bus stop", LABELS)[0] == "waste"

    def test_classify_no_match_falls_back_to_other(self, gateway):
        label, confidence = gateway.classify_text("zzz qqq", LABELS)
        assert (label, confidence) == ("other", 0.0)

    def test_classify_tie_prefers_earlier_label(self, gateway):
        # one roads keyword, one lighting keyword: list order decides
        label, _ = gateway.classify_text("pothole under the lamppost", LABELS)
        assert label == "roads"

    def test_classify_empty_labels_rejected(self, gateway):
        with pytest.raises(ValueError):
            gateway.classify_text("anything", [])

    def test_classify_rejects_out_of_set_label(self):
        class Wild:
            kind = "stub"

            def classify(self, text, labels):
                return "made-up", 0.9

        gw = AiGateway(backend=Wild())
        with pytest.raises(BackendUnavailable):
            gw.classify_text("x", ["a", "b"])

    def test_classify_clamps_confidence(self):
        class Loud:
            kind = "stub"

            def classify(self, text, labels):
                return labels[0], 1.7

        gw = AiGateway(backend=Loud())
        assert gw.classify_text("x", ["a"]) == ("a", 1.0)

    def test_embed_is_unit_length(self, gateway):
        vec = gateway.embed("bike lanes everywhere")
        assert len(vec) == 64
        assert math.isclose(sum(x * x for x in vec), 1.0, rel_tol=1e-9)
        assert vec == gateway.embed("bike lanes everywhere")


class TestAudit:
    def test_every_call_is_recorded(self, gateway):
        gateway.complete("a")
        gateway.classify_text("street", LABELS)
        gateway.embed("b")
        gateway.abuse_check("all friendly here")
        assert [r.operation for r in gateway.audit.records] == [
            "complete", "classify", "embed", "abuse_check",
        ]

    def test_failures_are_recorded_too(self, gateway):
        with pytest.raises(ValueError):
            gateway.classify_text("x", [])
        assert len(gateway.audit.records) == 1
        assert gateway.audit.records[0].operation == "classify"

    def test_audit_file_mirror(self, tmp_path):
        path = tmp_path / "audit.jsonl"
        gw = AiGateway(audit_path=path, clock=make_tick_clock())
        gw.complete("hello")
        gw.embed("hello")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        rec = json.loads(lines[0])
        assert set(rec) == {"at", "operation", "input_digest", "output_digest"}
        assert rec["operation"] == "complete"

    def test_identical_inputs_share_digests(self, gateway):
        gateway.embed("same")
        gateway.embed("same")
        a, b = gateway.audit.records
        assert a.input_digest == b.input_digest
        assert a.output_digest == b.output_digest


class TestSummarize:
    def test_stub_synopsis_text(self, gateway):
        store, ids = build_fixture_store()
        view = store.view()
        syn = gateway.summarize_discussion(view, ids["d"])
        assert syn.text == (
            "Discussion 'Street mobility': 2 issues, 3 positions "
            "(3 pro / 1 con arguments), most-supported position: Build a protected bike lane"
        )
        assert syn.source_event_seq == view.seq
        assert syn.generated_at == T0

    def test_empty_discussion_rejected(self, gateway):
        store, ids = build_fixture_store()
        disc = store.create_discussion("Empty", "nothing here", "mod")
        with pytest.raises(EmptyInput):
            gateway.summarize_discussion(store.view(), disc.id)
        # precondition failures happen before the audited call
        assert all(r.operation != "summarize" for r in gateway.audit.records)


class TestThemes:
    def test_stub_grouping_by_dominant_word(self, gateway):
        posts = [
            ("p1", "bike lane bike"),
            ("p2", "bus night bus"),
            ("p3", "bike path"),
            ("p4", "the of and"),
        ]
        tree = gateway.extract_themes(posts)
        leaves = tree.leaves
        assert [(n.label, n.post_ids) for n in leaves] == [
            ("bike", ["p1", "p3"]),
            ("bus", ["p2"]),
            ("misc", ["p4"]),
        ]
        assert tree.root.keywords == ["bike", "bus", "lane"]
        assert leaves[0].keywords == ["bike", "lane", "path"]
        d = tree.to_dict()
        assert set(d) == {"tree", "list"}
        assert [leaf["label"] for leaf in d["list"]] == ["bike", "bus", "misc"]

    def test_misc_sorts_last_even_when_first_seen(self, gateway):
        posts = [("p1", "of the and"), ("p2", "tram stop tram")]
        tree = gateway.extract_themes(posts)
        assert [n.label for n in tree.leaves] == ["tram", "misc"]

    def test_empty_posts_rejected(self, gateway):
        with pytest.raises(EmptyInput):
            gateway.extract_themes([])

    def test_deterministic_across_runs(self, gateway):
        posts = [("a", "parks and trees"), ("b", "bus timetable"), ("c", "tree hedge park")]
        assert gateway.extract_themes(posts).to_dict() == gateway.extract_themes(posts).to_dict()


class TestMining:
    def test_stub_graph_mirrors_discussion(self, gateway):
        store, ids = build_fixture_store()
        graph = gateway.mine_arguments(store.view(), ids["d"])
        kinds = {n.id: n.kind for n in graph.nodes}
        assert kinds[ids["p1"]] == "claim"
        assert kinds[ids["a2"]] == "premise"
        edges = {(e.source, e.target): e.relation for e in graph.edges}
        assert edges[(ids["a1"], ids["p1"])] == "support"
        assert edges[(ids["a2"], ids["p1"])] == "attack"
        assert all(e.confidence == 1.0 for e in graph.edges)

    def test_transcript_segments_attach_to_overlapping_claim(self, gateway):
        store, ids = build_fixture_store()
        t = parse_transcript(
            b"Ann: But the bike lane removes parking spots.\n"
            b"Ben: Because pizza tastes great.\n"
            b"Cam: Since night bus hours help workers.\n",
            fmt="speaker_lines",
        )
        graph = gateway.mine_arguments(store.view(), ids["d"], transcripts=[t])
        extra = {e.source: e for e in graph.edges if e.source.startswith(t.id)}
        # segment 1 has a cue but zero claim-word overlap: skipped
        assert set(extra) == {f"{t.id}:0", f"{t.id}:2"}
        assert extra[f"{t.id}:0"].target == ids["p1"]
        assert extra[f"{t.id}:0"].relation == "attack"
        assert extra[f"{t.id}:2"].target == ids["p3"]
        assert extra[f"{t.id}:2"].relation == "support"
        assert all(e.confidence == 0.5 for e in extra.values())

    def test_serialized_edges_use_from_to(self, gateway):
        store, ids = build_fixture_store()
        d = gateway.mine_arguments(store.view(), ids["d"]).to_dict()
        assert set(d["edges"][0]) == {"from", "to", "relation", "confidence"}

    def test_empty_input_rejected(self, gateway):
        store, _ = build_fixture_store()
        disc = store.create_discussion("Bare", "no posts", "mod")
        with pytest.raises(EmptyInput):
            gateway.mine_arguments(store.view(), disc.id)


class TestAbuseCheck:
    def test_clean_text(self, gateway):
        result = gateway.abuse_check("The park needs more benches.")
        assert result == AbuseResult(flagged=False)
        assert result.clean

    def test_single_word_matches_on_token_boundary(self, gateway):
        assert gateway.abuse_check("what a STUPID idea").flagged
        assert gateway.abuse_check("stupidity is not a listed term").clean

    def test_phrase_matches_as_phrase(self, gateway):
        assert gateway.abuse_check("no trash talk please").terms == ("trash talk",)
        assert gateway.abuse_check("take out the trash, talk later").flagged  # punctuation ignored
        assert gateway.abuse_check("take out the trash").clean

    def test_custom_wordlist(self):
        gw = AiGateway(wordlist=["banana"])
        assert gw.abuse_check("banana republic").flagged
        assert gw.abuse_check("idiot").clean

    def test_remote_label_drives_result(self):
        def responder(request: httpx.Request) -> httpx.Response:
            return httpx.Response(
                200,
                json={
                    "choices": [
                        {"message": {"content": '{"label": "abusive", "confidence": 0.8}'}}
                    ]
                },
            )

        backend = RemoteBackend("http://ai.test/v1", "m", transport=httpx.MockTransport(responder))
        gw = AiGateway(backend=backend)
        result = gw.abuse_check("whatever")
        assert result.flagged and result.terms == ("abusive",)

    def test_backend_down_fails_closed(self):
        def responder(request: httpx.Request) -> httpx.Response:
            return httpx.Response(500)

        backend = RemoteBackend("http://ai.test/v1", "m", transport=httpx.MockTransport(responder))
        gw = AiGateway(backend=backend)
        result = gw.abuse_check("totally fine text")
        assert result.flagged
        assert result.terms == ("backend-unavailable",)
        # the failure itself is still audited
        assert gw.audit.records[-1].operation == "abuse_check"


class TestRemoteBackend:
    @staticmethod
    def backend(responder) -> RemoteBackend:
        return RemoteBackend(
            "http://ai.test/v1", "test-model", api_key="k", transport=httpx.MockTransport(responder)
        )

    def test_complete_happy_path(self):
        seen = {}

        def responder(request: httpx.Request) -> httpx.Response:
            seen["url"] = str(request.url)
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.content)
            return httpx.Response(200, json={"choices": [{"message": {"content": "fine answer"}}]})

        assert self.backend(responder).complete("hi") == "fine answer"
        assert seen["url"] == "http://ai.test/v1/chat/completions"
        assert seen["auth"] == "Bearer k"
        assert seen["body"]["model"] == "test-model"

    def test_transient_500_is_retried_once(self):
        calls = {"n": 0}

        def responder(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500)
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        assert self.backend(responder).complete("hi") == "ok"
        assert calls["n"] == 2

    def test_persistent_500_raises(self):
        calls = {"n": 0}

        def responder(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(503)

        with pytest.raises(BackendUnavailable):
            self.backend(responder).complete("hi")
        assert calls["n"] == 2

    def test_client_error_is_not_retried(self):
        calls = {"n": 0}

        def responder(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(401)

        with pytest.raises(BackendUnavailable):
            self.backend(responder).complete("hi")
        assert calls["n"] == 1

    def test_network_error_is_retried(self):
        calls = {"n": 0}

        def responder(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            raise httpx.ConnectError("refused")

        with pytest.raises(BackendUnavailable):
            self.backend(responder).complete("hi")
        assert calls["n"] == 2

    def test_malformed_completion_shape(self):
        def responder(request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, json={"choices": []})

        with pytest.raises(BackendUnavailable):
            self.backend(responder).complete("hi")

    def test_non_json_response(self):
        def responder(request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, text="<html>oops</html>")

        with pytest.raises(BackendUnavailable):
            self.backend(responder).complete("hi")

    def test_classify_parses_json_answer(self):
        def responder(request: httpx.Request) -> httpx.Response:
            content = 'Sure! {"label": "Roads", "confidence": 0.9}'
            return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

        label, confidence = self.backend(responder).classify("pothole", ["roads", "other"])
        assert (label, confidence) == ("roads", 0.9)  # case-insensitive label match

    def test_classify_unknown_label_raises(self):
        def responder(request: httpx.Request) -> httpx.Response:
            content = '{"label": "bananas", "confidence": 0.9}'
            return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

        with pytest.raises(BackendUnavailable):
            self.backend(responder).classify("pothole", ["roads", "other"])

    def test_embed(self):
        def responder(request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, json={"data": [{"embedding": [0.5, 0.5]}]})

        assert self.backend(responder).embed("x") == [0.5, 0.5]


class TestRemoteCapabilities:
    """The structured capabilities, driven through a mocked remote backend."""

    @staticmethod
    def gateway_answering(*contents: str) -> AiGateway:
        answers = list(contents)

        def responder(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            if request.url.path.endswith("/embeddings"):
                return httpx.Response(
                    200, json={"data": [{"embedding": hash_vec(body["input"])}]}
                )
            return httpx.Response(
                200, json={"choices": [{"message": {"content": answers.pop(0)}}]}
            )

        backend = RemoteBackend("http://ai.test/v1", "m", transport=httpx.MockTransport(responder))
        return AiGateway(backend=backend)

    def test_remote_summary_uses_completion(self):
        store, ids = build_fixture_store()
        gw = self.gateway_answering("A tight two-line synopsis.")
        syn = gw.summarize_discussion(store.view(), ids["d"])
        assert syn.text == "A tight two-line synopsis."

    def test_remote_empty_summary_raises(self):
        store, ids = build_fixture_store()
        gw = self.gateway_answering("   ")
        with pytest.raises(BackendUnavailable):
            gw.summarize_discussion(store.view(), ids["d"])

    def test_remote_themes_assigns_by_embedding(self):
        gw = self.gateway_answering(
            '{"themes": [{"label": "cycling", "keywords": ["bike"]}, '
            '{"label": "transit", "keywords": ["bus"]}]}'
        )
        posts = [("p1", "bike bike bike"), ("p2", "bus bus bus")]
        tree = gw.extract_themes(posts)
        by_label = {n.label: n.post_ids for n in tree.leaves}
        assert by_label == {"cycling": ["p1"], "transit": ["p2"]}

    def test_remote_themes_without_json_falls_to_misc(self):
        gw = self.gateway_answering("no structure at all")
        with pytest.raises(BackendUnavailable):
            gw.extract_themes([("p1", "bike")])

    def test_remote_mining_drops_invalid_edges(self):
        store, ids = build_fixture_store()
        answer = json.dumps(
            {
                "nodes": [
                    {"id": "n1", "text": "claim one", "kind": "claim"},
                    {"id": "n2", "text": "premise", "kind": "premise"},
                    {"id": "bad", "text": "", "kind": "claim"},
                ],
                "edges": [
                    {"from": "n2", "to": "n1", "relation": "support", "confidence": 2.5},
                    {"from": "n2", "to": "ghost", "relation": "support"},
                    {"from": "n2", "to": "n1", "relation": "sideways"},
                    {"from": "n1", "to": "n1", "relation": "attack"},
                ],
            }
        )
        gw = self.gateway_answering(answer)
        graph = gw.mine_arguments(store.view(), ids["d"])
        assert [n.id for n in graph.nodes] == ["n1", "n2"]
        assert len(graph.edges) == 1
        assert graph.edges[0].confidence == 1.0  # clamped


def hash_vec(text: str) -> list[float]:
    from delib.textutil import hash_embed

    return hash_embed(text, dim=8)


class TestLlmExtractor:
    def answer(self) -> str:
        return json.dumps(
            {
                "issues": [
                    {
                        "text": "Cycling safety",
                        "confidence": 0.9,
                        "positions": [
                            {
                                "text": "Add a lane",
                                "segment": 1,
                                "confidence": 1.4,
                                "arguments": [
                                    {"text": "fewer crashes", "segment": 2, "side": "pro"},
                                    {"text": "parking loss", "segment": 3, "side": "con"},
                                    {"text": "out of range", "segment": 99, "side": "pro"},
                                    {"text": "bad side", "segment": 2, "side": "meh"},
                                ],
                            },
                            {"text": "missing segment", "confidence": 0.7},
                        ],
                    },
                    {"text": "No surviving positions", "positions": [{"text": "nope"}]},
                ]
            }
        )

    def extract(self, *completions: str, config: ExtractionConfig | None = None):
        gw = AiGateway(backend=ScriptedBackend(list(completions)))
        t = parse_transcript(b"a\nb\nc\nd\ne\n", fmt="plain")
        return LlmExtractor(gw).extract(t, config or ExtractionConfig())

    def test_clamps_and_drops(self):
        result = self.extract(self.answer())
        assert len(result.issues) == 1
        issue = result.issues[0]
        assert issue.text == "Cycling safety"
        assert len(issue.positions) == 1
        pos = issue.positions[0]
        assert pos.confidence == 1.0  # clamped from 1.4
        assert [(a.side, a.source_span.start) for a in pos.arguments] == [("pro", 2), ("con", 3)]
        # dropped: 2 bad args, 1 spanless position, 1 positionless issue (+1 its position)
        assert result.metadata["dropped_items"] == 5
        assert result.metadata["extractor"] == "llm"

    def test_fenced_answer_accepted(self):
        fenced = "```json\n" + self.answer() + "\n```"
        assert len(self.extract(fenced).issues) == 1

    def test_garbage_answer_fails(self):
        with pytest.raises(ExtractorFailure):
            self.extract("I would rather chat about the weather.")

    def test_backend_failure_wrapped(self):
        gw = AiGateway(backend=ScriptedBackend([]))  # script exhausted -> unavailable
        t = parse_transcript(b"a\n", fmt="plain")
        with pytest.raises(ExtractorFailure):
            LlmExtractor(gw).extract(t, ExtractionConfig())
