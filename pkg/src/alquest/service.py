"""Interactive labeling sessions over HTTP.

The service owns one ``LearningSession`` per session id and surfaces its
pending question to a human annotator:

* ``POST /sessions``              create a session (dataset ref + config)
* ``GET  /sessions/{id}/next``    the pending question and live metrics
* ``POST /sessions/{id}/answer``  submit an answer (optionally stamped
                                  with the question's step to make
                                  double-submits harmless)
* ``GET  /sessions/{id}/result``  final metrics and model parameters

Answers to one session are serialized behind a lock, so concurrent
posts can never double-charge the budget. State lives in process
memory; the JSON-lines run log is the durable record.
"""

from __future__ import annotations

import os
import threading
import uuid
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .config import ConfigError, parse_run_config
from .data import Dataset, DatasetError
from .engine import AWAITING_ANSWER, BUDGET_EXHAUSTED, LearningSession


class _SessionHolder:
    def __init__(self, session: LearningSession, dataset: Dataset, log_events: List[dict]):
        self.session = session
        self.dataset = dataset
        self.log_events = log_events
        self.lock = threading.Lock()


def _question_payload(holder: _SessionHolder) -> Optional[Dict[str, Any]]:
    pending = holder.session.pending
    if pending is None:
        return None
    q = pending.question
    pool_x, _ = holder.dataset.pool()
    display = holder.dataset.pool_display()
    return {
        "step": pending.step,
        "kind_index": pending.kind_index,
        "family": q.kind.family,
        "m": q.kind.m,
        "cost": pending.cost,
        "is_seed": pending.is_seed,
        "members": list(q.members),
        "member_features": [[float(v) for v in pool_x[i]] for i in q.members],
        "member_display": [display[i] for i in q.members] if display else None,
        "target_class": q.target_class,
        "answer_set": list(holder.session.answer_set()),
    }


def _metrics_payload(holder: _SessionHolder) -> Dict[str, Any]:
    session = holder.session
    metrics = session.metrics
    return {
        "rows": [
            {
                "budget": r.budget,
                "accuracy": r.accuracy,
                "sum_cross_entropy": r.sum_cross_entropy,
                "kind": r.kind_index,
                "entropy": r.entropy,
                "level_s": r.level,
            }
            for r in metrics.rows
        ],
        "queries": [
            {
                "step": q.step,
                "kind": q.kind_index,
                "cost": q.cost,
                "answer": q.answer,
                "budget": q.budget_after,
            }
            for q in metrics.queries
        ],
        "budget_spent": session.budget_spent,
        "budget_total": session.config.budget,
        "status": session.status,
    }


def _state_payload(holder: _SessionHolder) -> Dict[str, Any]:
    return {
        "status": holder.session.status,
        "question": _question_payload(holder),
        "metrics": _metrics_payload(holder),
    }


def create_app(console_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="alquest labeling sessions")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: Dict[str, _SessionHolder] = {}
    app.state.sessions = sessions

    @app.post("/sessions", status_code=201)
    def create_session(body: Dict[str, Any]):
        raw = dict(body) if body else {}
        dataset_ref = raw.get("dataset")
        if dataset_ref is None:
            raise HTTPException(400, "missing 'dataset'")
        config_raw = {
            "dataset": dataset_ref,
            "engine": raw.get("engine"),
            "acquisition": raw.get("acquisition"),
            "training": raw.get("training"),
        }
        config_raw = {k: v for k, v in config_raw.items() if v is not None}
        try:
            spec = parse_run_config(config_raw)
        except ConfigError as exc:
            raise HTTPException(400, str(exc))
        if spec.engine.budget <= 0:
            raise HTTPException(400, "engine.budget: must be > 0 for an interactive session")
        if spec.dataset.path is not None and not os.path.exists(spec.dataset.path):
            raise HTTPException(404, f"dataset not found: {spec.dataset.path}")
        try:
            dataset = spec.dataset.load()
        except DatasetError as exc:
            raise HTTPException(400, str(exc))
        pool_x, _ = dataset.pool()
        log_events: List[dict] = []
        session = LearningSession(
            pool_x,
            spec.engine,
            holdout=dataset.holdout(),
            n_classes=dataset.n_classes,
            log=log_events.append,
        )
        sid = uuid.uuid4().hex
        sessions[sid] = _SessionHolder(session, dataset, log_events)
        return {
            "id": sid,
            "status": session.status,
            "n_classes": dataset.n_classes,
            "n_pool": len(pool_x),
            "budget": spec.engine.budget,
            "seed_points": list(session.metrics.seed_points),
            "resolved_config": spec.resolved,
        }

    def _holder(sid: str) -> _SessionHolder:
        holder = sessions.get(sid)
        if holder is None:
            raise HTTPException(404, f"no session {sid}")
        return holder

    @app.get("/sessions/{sid}/next")
    def next_question(sid: str):
        holder = _holder(sid)
        if holder.session.status == "training":
            raise HTTPException(409, "session is training; retry shortly")
        return _state_payload(holder)

    @app.post("/sessions/{sid}/answer")
    def submit_answer(sid: str, body: Dict[str, Any]):
        holder = _holder(sid)
        if "answer" not in (body or {}):
            raise HTTPException(422, "missing 'answer'")
        answer = body["answer"]
        if isinstance(answer, bool) or not isinstance(answer, int):
            raise HTTPException(422, f"answer must be an integer, got {answer!r}")
        with holder.lock:
            session = holder.session
            pending = session.pending
            if session.status != AWAITING_ANSWER or pending is None:
                raise HTTPException(409, "no question is pending")
            step = body.get("step")
            if step is not None and step != pending.step:
                raise HTTPException(409, f"stale answer for step {step}; pending step is {pending.step}")
            if answer not in session.answer_set():
                raise HTTPException(
                    422,
                    f"answer {answer} not in the answer set {list(session.answer_set())}",
                )
            session.submit_answer(answer)
            return _state_payload(holder)

    @app.get("/sessions/{sid}/result")
    def result(sid: str):
        holder = _holder(sid)
        session = holder.session
        payload = _state_payload(holder)
        payload["final"] = session.status == BUDGET_EXHAUSTED
        if session.metrics.final_parameters is not None:
            payload["model"] = {
                "family": session.model.family,
                "parameters": [float(v) for v in session.metrics.final_parameters],
            }
        payload["log"] = holder.log_events
        return payload

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app
