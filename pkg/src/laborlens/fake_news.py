"""In-repo fake news-search server implementing the wire contract.

Runs a real HTTP endpoint over a deterministic article corpus so the
whole fetch pipeline can be exercised offline, byte-for-byte
reproducibly. The same matching rules as InMemoryNewsClient apply:
a record matches when any query term appears in its title or snippet,
filtered by the optional date range.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .ingest import KeywordQuery
from .providers import _matches

__all__ = ["FakeNewsServer", "sample_articles"]

_RELEVANT_TEMPLATES = [
    ("Forced labor uncovered on {product} vessels", "Investigators found forced labor aboard {product} fleets; the supply chain spans several countries and the workers could not leave."),
    ("Supply chain audit flags {product} suppliers", "An audit of the {product} supply chain found coerced overtime, withheld wages and signs of forced labor at tier-two suppliers."),
    ("Workers trafficked to {product} plants, officials say", "Officials say workers were recruited abroad and forced to work in {product} facilities; documents appear forged and housing was controlled by the firm."),
    ("Retailers face scrutiny over {product} sourcing", "Rights groups tied {product} sourcing to forced labor in a high risk country; the goods cross national borders before reaching retailers."),
]

_IRRELEVANT_TEMPLATES = [
    ("Quarterly results beat expectations for {product} makers", "Analysts cheered strong {product} earnings this quarter amid stable demand."),
    ("New {product} recipe wins local festival", "The annual festival crowned a new {product} dish; attendance hit a record."),
    ("Weather delays {product} harvest", "Unseasonal rain pushed the {product} harvest back two weeks, growers said."),
]

_PRODUCTS = ["tuna", "onions", "cotton", "cobalt", "shrimp", "garments", "bricks", "coffee", "timber", "polysilicon"]
_SOURCES = ["Daily Ledger", "World Supply Review", "Harbor Post", "Trade Monitor"]


def sample_articles(count: int = 40) -> list[dict]:
    """Deterministic corpus: alternating relevant and irrelevant pieces."""
    articles = []
    for i in range(count):
        product = _PRODUCTS[i % len(_PRODUCTS)]
        if i % 3 != 2:
            title_t, snippet_t = _RELEVANT_TEMPLATES[i % len(_RELEVANT_TEMPLATES)]
        else:
            title_t, snippet_t = _IRRELEVANT_TEMPLATES[i % len(_IRRELEVANT_TEMPLATES)]
        year = 2016 + (i % 9)
        articles.append(
            {
                "title": title_t.format(product=product),
                "snippet": snippet_t.format(product=product),
                "url": f"https://news.example.com/{year}/{product}-{i:03d}",
                "source": _SOURCES[i % len(_SOURCES)],
                "date": f"{year}-{(i % 12) + 1:02d}-{(i % 27) + 1:02d}",
            }
        )
    return articles


class _Handler(BaseHTTPRequestHandler):
    server_version = "FakeNews/0.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _respond(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._respond(200, {"status": "ok"})
        else:
            self._respond(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/search":
            self._respond(404, {"error": "not found"})
            return
        token = self.server.token  # type: ignore[attr-defined]
        if token and self.headers.get("Authorization") != f"Bearer {token}":
            self._respond(401, {"error": "bad credentials"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length))
            from datetime import date

            query = KeywordQuery(
                terms=tuple(payload["terms"]),
                date_from=date.fromisoformat(payload["date_from"]) if payload.get("date_from") else None,
                date_to=date.fromisoformat(payload["date_to"]) if payload.get("date_to") else None,
                page_size=int(payload.get("page_size", 20)),
                max_results=10_000,
            )
            page = int(payload.get("page", 0))
        except (KeyError, ValueError, TypeError) as exc:
            self._respond(400, {"error": f"bad request: {exc}"})
            return
        matching = [a for a in self.server.articles if _matches(a, query)]  # type: ignore[attr-defined]
        start = page * query.page_size
        self._respond(
            200,
            {"total_count": len(matching), "items": matching[start : start + query.page_size]},
        )


class FakeNewsServer:
    """Threaded HTTP server bound to an ephemeral local port."""

    def __init__(self, articles: list[dict] | None = None, token: str | None = None, port: int = 0):
        self.articles = articles if articles is not None else sample_articles()
        self.token = token
        self._server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._server.articles = self.articles  # type: ignore[attr-defined]
        self._server.token = token  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}/search"

    def start(self) -> "FakeNewsServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def __enter__(self) -> "FakeNewsServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()
