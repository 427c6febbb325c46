"""HTTP session API used by the browser console and other clients.

One engine per process; sessions live in memory behind per-session locks so
requests for the same session are serialized while distinct sessions run in
parallel. Idle sessions are evicted lazily.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .compiler import WorkflowIr, emit_dot, ir_document
from .ontology import Literal, OntologyStore
from .runtime import DialogueEngine, DialogueState, IntentInstance, Turn


class UtteranceBody(BaseModel):
    text: str


@dataclass
class _Session:
    state: DialogueState
    lock: threading.Lock
    last_access: float


class SessionHub:
    def __init__(self, engine: DialogueEngine, idle_timeout: float = 3600.0):
        self.engine = engine
        self.idle_timeout = idle_timeout
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self) -> tuple[str, list[str]]:
        state, outputs = self.engine.start_session()
        session_id = uuid.uuid4().hex
        with self._lock:
            self._evict_idle()
            self._sessions[session_id] = _Session(state, threading.Lock(), time.monotonic())
        return session_id, outputs

    def get(self, session_id: str) -> _Session:
        with self._lock:
            self._evict_idle()
            session = self._sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail=f"unknown session '{session_id}'")
            session.last_access = time.monotonic()
            return session

    def drop(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def _evict_idle(self) -> None:
        deadline = time.monotonic() - self.idle_timeout
        for sid in [s for s, sess in self._sessions.items() if sess.last_access < deadline]:
            del self._sessions[sid]


def _value_json(value) -> object:
    return value.value if isinstance(value, Literal) else value


def _intent_json(engine: DialogueEngine, inst: IntentInstance | None) -> dict | None:
    if inst is None:
        return None
    decl = engine.store.schema.intents.get(inst.intent)
    slots = []
    if decl is not None:
        for required, pairs in ((True, decl.required_slots), (False, decl.optional_slots)):
            for prop, rng in pairs:
                slots.append({
                    "property": prop,
                    "range": rng,
                    "required": required,
                    "value": _value_json(inst.slots[prop]) if prop in inst.slots else None,
                })
    return {"intent": inst.intent, "status": inst.status, "slots": slots}


def _turn_json(engine: DialogueEngine, turn: Turn) -> dict:
    if turn.kind == "user":
        return {
            "kind": "user",
            "index": turn.index,
            "text": turn.text,
            "tokens": list(turn.tokens),
            "mapped": [
                {"start": m.start, "end": m.end, "terms": list(m.terms)} for m in turn.mapped
            ],
            "intent": turn.intent,
        }
    return {
        "kind": "system",
        "index": turn.index,
        "node": engine.ir.nodes[turn.node].id if turn.node is not None else None,
        "messages": list(turn.messages),
        "diagnostic": turn.diagnostic,
        "response_to": turn.response_to,
    }


def _state_json(engine: DialogueEngine, session_id: str, state: DialogueState) -> dict:
    return {
        "session_id": session_id,
        "current_node": engine.ir.nodes[state.current_node].id,
        "topic_stack": [engine.ir.nodes[i].id for i in state.topic_stack],
        "pending_intent": _intent_json(engine, state.pending_intent),
        "bindings": dict(state.bindings),
        "diagnostics": list(state.diagnostics),
        "history": [_turn_json(engine, t) for t in state.history],
    }


def create_app(ir: WorkflowIr, store: OntologyStore, static_dir: str | None = None,
               idle_timeout: float = 3600.0) -> FastAPI:
    engine = DialogueEngine(ir, store)
    hub = SessionHub(engine, idle_timeout)
    app = FastAPI(title="dwg session API")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.hub = hub

    @app.post("/api/sessions", status_code=201)
    def create_session() -> dict:
        session_id, outputs = hub.create()
        return {"session_id": session_id, "outputs": outputs}

    @app.post("/api/sessions/{session_id}/utterance")
    def post_utterance(session_id: str, body: UtteranceBody) -> dict:
        session = hub.get(session_id)
        with session.lock:
            before = len(session.state.diagnostics)
            outputs = engine.process_utterance(session.state, body.text)
            return {
                "outputs": outputs,
                "current_node": engine.ir.nodes[session.state.current_node].id,
                "topic_stack": [engine.ir.nodes[i].id for i in session.state.topic_stack],
                "pending_intent": _intent_json(engine, session.state.pending_intent),
                "diagnostics": session.state.diagnostics[before:],
            }

    @app.get("/api/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        session = hub.get(session_id)
        with session.lock:
            return _state_json(engine, session_id, session.state)

    @app.delete("/api/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> Response:
        if not hub.drop(session_id):
            raise HTTPException(status_code=404, detail=f"unknown session '{session_id}'")
        return Response(status_code=204)

    @app.get("/api/graph")
    def get_graph() -> dict:
        doc = ir_document(ir)
        doc["dot"] = emit_dot(ir)
        return doc

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    return app
