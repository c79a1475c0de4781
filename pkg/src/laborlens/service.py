"""HTTP annotation API consumed by the browser wizard.

The server is the single source of truth for session state: the UI only
renders what GET .../session returns. Answers are accepted solely for
nodes in the current frontier (409 otherwise), so an interactive session
can never diverge from what batch evaluation would produce on the same
answers. Completed sessions persist their evaluation to the corpus log,
and entered feature records are validated and exported as incident CSV.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import features, ingest, qtree
from .config import Config

__all__ = ["create_app"]


class AnswerBody(BaseModel):
    node_id: str
    answer: Literal["yes", "no"]


class FeaturesBody(BaseModel):
    label: Literal["pos", "neg"] = "pos"
    values: dict[str, str] = Field(default_factory=dict)
    source_article_ids: list[str] = Field(default_factory=list)


class _Session:
    def __init__(self, annotator: str):
        self.answers: dict[str, qtree.Answer] = {}
        self.completed = False
        self.annotator = annotator


def create_app(config: Config) -> FastAPI:
    if config.tree:
        tree = qtree.load_tree_file(config.tree)
    else:
        tree = qtree.default_tree()
    problems = qtree.validate_tree(tree)
    if problems:
        raise ValueError(f"tree invalid: {'; '.join(v.message for v in problems)}")
    schema = features.load_schema_file(config.schema) if config.schema else features.default_schema()
    store = ingest.CorpusStore(config.corpus)
    topo = qtree.topological_order(tree)

    incidents: dict[str, features.IncidentRecord] = {}
    incidents_path = Path(config.incidents)
    if incidents_path.is_file():
        loaded = features.parse_incident_csv(incidents_path.read_bytes(), schema)
        incidents.update({r.incident_id: r for r in loaded.records})

    sessions: dict[str, _Session] = {}
    lock = threading.Lock()
    app = FastAPI(title="laborlens annotation API")

    def _dataset() -> features.LabeledDataset:
        return features.LabeledDataset(schema=schema, records=tuple(incidents.values()))

    def _persist_incidents() -> None:
        incidents_path.parent.mkdir(parents=True, exist_ok=True)
        incidents_path.write_bytes(features.write_incident_csv(_dataset()))

    def _article(article_id: str) -> ingest.ArticleRecord | None:
        for record in store.load_corpus():
            if record.article_id == article_id:
                return record
        return None

    def _session_payload(article_id: str, session: _Session) -> dict:
        evaluation = qtree.evaluation_from_answers(tree, session.answers, article_id)
        frontier = qtree.eligible_frontier(tree, evaluation)
        score = qtree.relevance_score(tree, evaluation)
        return {
            "article_id": article_id,
            "answers": {nid: a.value for nid, a in session.answers.items()},
            "frontier": [nid for nid in topo if nid in frontier],
            "score": score,
            "threshold": config.threshold,
            "classification": qtree.classify(score, config.threshold).value,
            "completed": session.completed,
            "annotator": session.annotator,
        }

    @app.get("/api/tree")
    def get_tree() -> dict:
        return qtree.tree_to_mapping(tree)

    @app.get("/api/schema")
    def get_schema() -> dict:
        return features.schema_to_mapping(schema)

    @app.get("/api/articles")
    def list_articles(status: str | None = None) -> list[dict]:
        records = store.load_corpus()
        if status is not None:
            try:
                wanted = ingest.ArticleStatus(status)
            except ValueError:
                return []
            records = [r for r in records if r.status is wanted]
        return [
            {
                "article_id": r.article_id,
                "title": r.title,
                "source": r.source,
                "published": r.published.isoformat() if r.published else None,
                "status": r.status.value,
                "relevance_score": r.relevance_score,
            }
            for r in records
        ]

    @app.get("/api/articles/{article_id}")
    def get_article(article_id: str):
        record = _article(article_id)
        if record is None:
            return JSONResponse(status_code=404, content={"detail": "unknown article"})
        return record.to_json()

    @app.get("/api/articles/{article_id}/session")
    def get_session(article_id: str):
        with lock:
            if _article(article_id) is None:
                return JSONResponse(status_code=404, content={"detail": "unknown article"})
            session = sessions.setdefault(article_id, _Session(config.service.annotator))
            return _session_payload(article_id, session)

    @app.post("/api/articles/{article_id}/answers")
    def post_answer(article_id: str, body: AnswerBody):
        with lock:
            if _article(article_id) is None:
                return JSONResponse(status_code=404, content={"detail": "unknown article"})
            session = sessions.setdefault(article_id, _Session(config.service.annotator))
            if session.completed:
                return JSONResponse(status_code=409, content={"detail": "session already completed"})
            evaluation = qtree.evaluation_from_answers(tree, session.answers, article_id)
            frontier = qtree.eligible_frontier(tree, evaluation)
            if body.node_id not in frontier:
                return JSONResponse(
                    status_code=409,
                    content={"detail": f"node {body.node_id!r} is not eligible to answer"},
                )
            session.answers[body.node_id] = qtree.Answer(body.answer)
            return _session_payload(article_id, session)

    @app.post("/api/articles/{article_id}/features")
    def post_features(article_id: str, body: FeaturesBody):
        with lock:
            if _article(article_id) is None:
                return JSONResponse(status_code=404, content={"detail": "unknown article"})
            values: dict[str, features.FeatureValue] = {}
            violations: list[features.Violation] = []
            for key, cell in body.values.items():
                if key not in schema:
                    violations.append(
                        features.Violation(key, "unknown_feature", f"{key!r} is not in the schema")
                    )
                    continue
                try:
                    value = features.decode_value(cell, schema.spec(key).kind)
                except ValueError as exc:
                    violations.append(features.Violation(key, "bad_value", str(exc)))
                    continue
                if not isinstance(value, features.Missing):
                    values[key] = value
            incident_id = f"inc-{article_id}"
            sources = tuple(body.source_article_ids) or (article_id,)
            record = features.IncidentRecord(incident_id, features.Label(body.label), values, sources)
            violations.extend(features.validate_record(record, schema))
            if violations:
                return JSONResponse(
                    status_code=422,
                    content={
                        "violations": [
                            {"key": v.key, "rule": v.rule, "message": v.message} for v in violations
                        ]
                    },
                )
            incidents[incident_id] = record
            _persist_incidents()
            return {"incident_id": incident_id, "stored": True}

    @app.post("/api/articles/{article_id}/complete")
    def post_complete(article_id: str):
        with lock:
            article = _article(article_id)
            if article is None:
                return JSONResponse(status_code=404, content={"detail": "unknown article"})
            session = sessions.setdefault(article_id, _Session(config.service.annotator))
            if session.completed:
                return JSONResponse(status_code=409, content={"detail": "session already completed"})
            evaluation = qtree.evaluation_from_answers(tree, session.answers, article_id)
            if qtree.eligible_frontier(tree, evaluation):
                return JSONResponse(
                    status_code=409, content={"detail": "session has unanswered eligible questions"}
                )
            record = qtree.evaluation_record(
                tree,
                evaluation,
                config.threshold,
                f"human:{session.annotator}",
                datetime.now(timezone.utc).isoformat(),
            )
            if article.status is ingest.ArticleStatus.PENDING:
                store.update_status(article_id, ingest.ArticleStatus.SCORED, record["score"])
                article = _article(article_id)
            if article.status is ingest.ArticleStatus.SCORED:
                final = (
                    ingest.ArticleStatus.ANNOTATED
                    if record["classification"] == "relevant"
                    else ingest.ArticleStatus.DISCARDED
                )
                store.update_status(article_id, final)
            store.log_evaluation(record)
            session.completed = True
            payload = _session_payload(article_id, session)
            payload["status"] = _article(article_id).status.value
            return payload

    @app.get("/api/export/incidents")
    def export_incidents() -> Response:
        return Response(content=features.write_incident_csv(_dataset()), media_type="text/csv")

    assets = Path(config.service.ui_assets)
    if assets.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(assets), html=True), name="ui")

    return app
