"""HTTP dialogue service: endpoints, session lifecycle, and the report API."""

import pytest
from fastapi.testclient import TestClient

from socratic.config import ServiceConfig
from socratic.corpus import Exercise, QuestionCandidate, ReferenceSolution, save_exercises
from socratic.service import create_app

REF_TEXT = "the lasso, because the l1 penalty has corners"
BANK_QUESTION = "What does the l1 penalty look like at zero?"

SNAPSHOT_KEYS = {
    "session_id", "exercise_id", "problem", "phase", "attempt_count",
    "verdict", "mcq_options", "transcript",
}


@pytest.fixture()
def client(tmp_path):
    exercises = [
        Exercise(
            id="ex-svc",
            problem="Which regularizer can zero out weights, and why?",
            references=[
                ReferenceSolution(
                    id="ex-svc-r0", text=REF_TEXT,
                    question_bank=[QuestionCandidate(BANK_QUESTION, -0.1, 0.1)],
                )
            ],
        )
    ]
    exercises_path = tmp_path / "exercises.jsonl"
    save_exercises(exercises_path, exercises)
    config = ServiceConfig(
        exercises_path=str(exercises_path),
        interactions_path=str(tmp_path / "runs" / "interactions.jsonl"),
    )
    app = create_app(config)
    with TestClient(app) as test_client:
        yield test_client


def new_session(client):
    response = client.post("/sessions", json={"exercise_id": "ex-svc"})
    assert response.status_code == 201
    return response.json()


def send(client, session_id, text):
    return client.post(f"/sessions/{session_id}/messages", json={"text": text})


# ---------------------------------------------------------------------------
# Exercises and session creation


def test_exercise_listing_hides_references(client):
    body = client.get("/exercises").json()
    assert body == {
        "exercises": [
            {"id": "ex-svc", "problem": "Which regularizer can zero out weights, and why?"}
        ]
    }


def test_create_session_snapshot_shape(client):
    snapshot = new_session(client)
    assert set(snapshot) == SNAPSHOT_KEYS
    assert snapshot["exercise_id"] == "ex-svc"
    assert snapshot["phase"] == "awaiting_answer"
    assert snapshot["attempt_count"] == 0
    assert snapshot["verdict"] is None
    assert snapshot["mcq_options"] is None
    [entry] = snapshot["transcript"]
    assert entry["speaker"] == "system"
    assert entry["kind"] == "problem"
    assert entry["text"] == snapshot["problem"]
    # the reference solution must never leak into the session view
    assert REF_TEXT not in str(snapshot)


def test_create_session_unknown_exercise(client):
    response = client.post("/sessions", json={"exercise_id": "missing"})
    assert response.status_code == 404
    assert "missing" in response.json()["detail"]


def test_get_session_unknown_id(client):
    assert client.get("/sessions/nope").status_code == 404


# ---------------------------------------------------------------------------
# Message flow


def test_question_feedback_flow(client):
    session = new_session(client)
    sid = session["session_id"]

    first = send(client, sid, "the lasso").json()
    assert first["phase"] == "awaiting_subanswer"
    assert first["attempt_count"] == 1
    assert first["feedback_kind"] == "statement_plus_question"
    assert first["reply"] == (
        f'"the lasso" is correct! Try supplying a reason for it. {BANK_QUESTION}'
    )

    second = send(client, sid, "it looks pointy").json()
    assert second["reply"] == "Ok, now try to answer the original exercise."
    assert second["phase"] == "awaiting_retry"
    assert second["feedback_kind"] is None

    third = send(client, sid, REF_TEXT).json()
    assert third["phase"] == "done"
    assert third["verdict"] is True
    assert third["reply"] == "That's correct!"
    assert third["attempt_count"] == 2

    snapshot = client.get(f"/sessions/{sid}").json()
    assert snapshot["phase"] == "done"
    # the transcript holds the problem plus a (student, system) pair per turn
    assert len(snapshot["transcript"]) == 1 + 2 * 3
    speakers = [e["speaker"] for e in snapshot["transcript"]]
    assert speakers == ["system"] + ["student", "system"] * 3
    texts = [e["text"] for e in snapshot["transcript"]]
    assert texts[1] == "the lasso"
    assert texts[2] == first["reply"]
    assert texts[-1] == "That's correct!"


def test_mcq_flow_with_reprompt(client):
    session = new_session(client)
    sid = session["session_id"]

    first = send(client, sid, "we would pick ridge regression instead because the l1 penalty has corners").json()
    assert first["phase"] == "awaiting_mcq"
    assert first["feedback_kind"] == "mcq"
    assert first["mcq_options"] == ["Yes, I agree", "No, I disagree"]
    assert first["reply"] == (
        'Did you mean "the lasso" because "the l1 penalty has corners"?'
    )

    snapshot = client.get(f"/sessions/{sid}").json()
    assert snapshot["mcq_options"] == ["Yes, I agree", "No, I disagree"]

    reprompt = send(client, sid, "hmm not sure").json()
    assert reprompt["phase"] == "awaiting_mcq"
    assert reprompt["reply"].startswith("Please choose one of the options")
    assert reprompt["mcq_options"] == ["Yes, I agree", "No, I disagree"]
    assert reprompt["attempt_count"] == 1

    final = send(client, sid, "Yes, I agree").json()
    assert final["phase"] == "done"
    assert final["verdict"] is True
    assert final["mcq_options"] is None


def test_mcq_disagree_ends_without_success(client):
    session = new_session(client)
    sid = session["session_id"]
    send(client, sid, "we would pick ridge regression instead because the l1 penalty has corners")
    final = send(client, sid, "No, I disagree").json()
    assert final["phase"] == "done"
    assert final["verdict"] is False
    assert final["reply"] == "Let's move to another problem."


def test_finished_session_rejects_messages(client):
    session = new_session(client)
    sid = session["session_id"]
    send(client, sid, REF_TEXT)
    response = send(client, sid, "hello again")
    assert response.status_code == 409


def test_message_validation(client):
    session = new_session(client)
    sid = session["session_id"]
    assert send(client, sid, "").status_code == 422  # schema-level
    assert send(client, sid, "   ").status_code == 422  # protocol-level
    assert send(client, "ghost", "hi").status_code == 404


# ---------------------------------------------------------------------------
# Interaction log and reports


def test_attempts_are_persisted_for_analytics(client, tmp_path):
    session = new_session(client)
    sid = session["session_id"]
    send(client, sid, "the lasso")
    send(client, sid, "some thought")  # sub-answer, never logged
    send(client, sid, REF_TEXT)

    log = (tmp_path / "runs" / "interactions.jsonl").read_text().splitlines()
    assert len(log) == 2  # the two checker-evaluated attempts

    body = client.get(
        "/reports/learning-gains",
        params={"model": "question_based", "scope": "all_attempts"},
    ).json()
    [report] = body["reports"]
    assert report["model"] == "question_based"
    assert report["gain_percent"] == 100.0
    assert report["n"] == 1


def test_learning_gains_table_and_errors(client):
    # nothing logged yet: the full table is empty, a named combo is 404
    assert client.get("/reports/learning-gains").json() == {"reports": []}
    missing = client.get(
        "/reports/learning-gains",
        params={"model": "question_based", "scope": "all_attempts"},
    )
    assert missing.status_code == 404

    bad_scope = client.get("/reports/learning-gains", params={"scope": "sometimes"})
    assert bad_scope.status_code == 422

    session = new_session(client)
    sid = session["session_id"]
    send(client, sid, "the lasso")
    send(client, sid, "some thought")
    send(client, sid, REF_TEXT)
    table = client.get("/reports/learning-gains").json()["reports"]
    assert [(r["model"], r["scope"]) for r in table] == [
        ("question_based", "first_attempt"),
        ("question_based", "all_attempts"),
    ]

    scoped = client.get(
        "/reports/learning-gains", params={"scope": "first_attempt"}
    ).json()["reports"]
    assert [r["scope"] for r in scoped] == ["first_attempt"]


def test_sessions_are_isolated(client):
    a = new_session(client)["session_id"]
    b = new_session(client)["session_id"]
    send(client, a, "the lasso")
    snapshot_b = client.get(f"/sessions/{b}").json()
    assert snapshot_b["phase"] == "awaiting_answer"
    assert len(snapshot_b["transcript"]) == 1
    snapshot_a = client.get(f"/sessions/{a}").json()
    assert snapshot_a["phase"] == "awaiting_subanswer"


def test_cross_origin_requests_are_allowed(client):
    response = client.get("/exercises", headers={"origin": "http://localhost:5173"})
    assert response.status_code == 200
    assert response.headers["access-control-allow-origin"] == "*"

    preflight = client.options(
        "/sessions",
        headers={
            "origin": "http://localhost:5173",
            "access-control-request-method": "POST",
            "access-control-request-headers": "content-type",
        },
    )
    assert preflight.status_code == 200
    assert preflight.headers["access-control-allow-origin"] == "*"
