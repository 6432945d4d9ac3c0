"""HTTP dialogue service for tutoring sessions.

Sessions live in an in-memory store keyed by id; every request loads the
session, mutates it under that session's lock, and stores it back, so
concurrent requests to different sessions never contend and concurrent
requests to the same session serialize cleanly. Checker-evaluated attempts
are appended to a persistent interaction log for learning-gain analytics.

The question bank must be precomputed: the serving path never calls a
generator. Reference solutions are never exposed over the API.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import feedback as feedback_mod
from .config import ServiceConfig
from .corpus import Exercise, InteractionStore, load_exercises
from .evaluation import SCOPES, learning_gain, learning_gain_table
from .feedback import (
    DialogueState,
    FeedbackEngine,
    Phase,
    StateError,
    take_turn,
)
from .question_gen import load_question_bank
from .reranker import load_model
from .similarity import HashEmbeddingBackend


@dataclass
class TranscriptEntry:
    speaker: str  # "student" | "system"
    text: str
    kind: str  # "problem" | "message" | "reply"
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker,
            "text": self.text,
            "kind": self.kind,
            "timestamp": self.timestamp,
        }


@dataclass
class SessionResource:
    """One tutoring session: dialogue state plus its visible transcript."""

    session_id: str
    exercise: Exercise
    state: DialogueState
    transcript: list[TranscriptEntry] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> dict:
        """JSON view of the session; taken under the session lock."""
        mcq = None
        if self.state.phase is Phase.AWAITING_MCQ and self.state.last_feedback:
            mcq = list(self.state.last_feedback.mcq_options or ())
        return {
            "session_id": self.session_id,
            "exercise_id": self.exercise.id,
            "problem": self.exercise.problem,
            "phase": self.state.phase.value,
            "attempt_count": self.state.attempt_count,
            "verdict": self.state.verdict,
            "mcq_options": mcq,
            "transcript": [entry.to_dict() for entry in self.transcript],
        }


class CreateSessionRequest(BaseModel):
    exercise_id: str = Field(min_length=1)


class MessageRequest(BaseModel):
    text: str = Field(min_length=1)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """In-memory session registry with per-session locks."""

    def __init__(self):
        self._sessions: dict[str, SessionResource] = {}
        self._registry_lock = threading.Lock()

    def create(self, exercise: Exercise) -> SessionResource:
        session_id = uuid.uuid4().hex
        session = SessionResource(
            session_id=session_id,
            exercise=exercise,
            state=DialogueState(session_id=session_id, exercise_id=exercise.id),
        )
        with self._registry_lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> SessionResource:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session


def build_engine(config: ServiceConfig) -> FeedbackEngine:
    backend = HashEmbeddingBackend(dim=config.embedding_dim, seed=config.embedding_seed)
    reranker_model = (
        load_model(config.reranker_model_path) if config.reranker_model_path else None
    )
    return FeedbackEngine(
        backend=backend,
        tau=config.tau,
        tau_checker=config.tau_checker,
        generator=None,  # serving never generates; the bank is precomputed
        reranker_model=reranker_model,
        k=config.k,
        max_attempts=config.max_attempts,
    )


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the service around one config; state lives in the app closure."""
    config.validate()
    if config.templates_path:
        feedback_mod.configure_templates(config.templates_path)
    exercises = load_exercises(config.exercises_path)
    if config.question_bank_path:
        load_question_bank(config.question_bank_path, exercises)
    exercises_by_id = {ex.id: ex for ex in exercises}
    engine = build_engine(config)
    store = SessionStore()
    interactions = InteractionStore(config.interactions_path)

    unbanked = [
        ref.id for ex in exercises for ref in ex.references if not ref.question_bank
    ]

    app = FastAPI(title="tutoring dialogue service", version="1.0")
    # the browser client may be served from any origin; no credentials
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = config
    app.state.unbanked_references = unbanked

    def _get_session(session_id: str) -> SessionResource:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.get("/exercises")
    def list_exercises() -> dict:
        return {
            "exercises": [
                {"id": ex.id, "problem": ex.problem} for ex in exercises
            ]
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        exercise = exercises_by_id.get(body.exercise_id)
        if exercise is None:
            raise HTTPException(
                status_code=404, detail=f"unknown exercise {body.exercise_id!r}"
            )
        session = store.create(exercise)
        with session.lock:
            session.transcript.append(
                TranscriptEntry(
                    speaker="system",
                    text=exercise.problem,
                    kind="problem",
                    timestamp=_now(),
                )
            )
            return session.snapshot()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = _get_session(session_id)
        with session.lock:
            return session.snapshot()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageRequest) -> dict:
        session = _get_session(session_id)
        with session.lock:
            if session.state.phase is Phase.DONE:
                raise HTTPException(status_code=409, detail="session is finished")
            try:
                result = take_turn(session.state, body.text, session.exercise, engine)
            except StateError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except feedback_mod.ConfigurationError as exc:
                raise HTTPException(status_code=500, detail=str(exc))
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            if result.record is not None:
                interactions.append(result.record)
            session.state = result.state
            session.transcript.append(
                TranscriptEntry(
                    speaker="student", text=body.text, kind="message", timestamp=_now()
                )
            )
            session.transcript.append(
                TranscriptEntry(
                    speaker="system", text=result.reply, kind="reply", timestamp=_now()
                )
            )
            mcq = None
            if result.state.phase is Phase.AWAITING_MCQ and result.state.last_feedback:
                mcq = list(result.state.last_feedback.mcq_options or ())
            return {
                "reply": result.reply,
                "phase": result.state.phase.value,
                "verdict": result.state.verdict,
                "attempt_count": result.state.attempt_count,
                "mcq_options": mcq,
                "feedback_kind": (
                    result.feedback.kind.value if result.feedback else None
                ),
            }

    @app.get("/reports/learning-gains")
    def learning_gains(model: str | None = None, scope: str | None = None) -> dict:
        records = interactions.read_all()
        if model is not None and scope is not None:
            try:
                report = learning_gain(records, model, scope)
            except ValueError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            return {"reports": [report.to_dict()]}
        labels = sorted({rec.feedback_model for rec in records})
        if model is not None:
            labels = [label for label in labels if label == model]
        reports = learning_gain_table(records, labels)
        if scope is not None:
            if scope not in SCOPES:
                raise HTTPException(status_code=422, detail=f"scope must be one of {SCOPES}")
            reports = [r for r in reports if r.scope == scope]
        return {"reports": [r.to_dict() for r in reports]}

    return app
