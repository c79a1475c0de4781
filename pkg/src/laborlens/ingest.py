"""Article ingestion: keyword generation, paginated search, corpus storage.

The news-search side is a vendor-agnostic wire contract (terms, date
range, page, page_size in; total_count and items out) so tests and
deployments can point at any adapter, including the bundled fake
server. The corpus is an append-only JSONL log replayed on load:
articles, status updates, provider calls, and stored evaluations are
separate entry types, and a truncated final line is tolerated.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit, urlunsplit

logger = logging.getLogger(__name__)

__all__ = [
    "ArticleStatus",
    "ArticleRecord",
    "KeywordQuery",
    "SearchPage",
    "TextModelProvider",
    "NewsSearchClient",
    "CorpusStore",
    "SEED_TERMS",
    "KEYWORD_PROMPT_TEMPLATE",
    "ProviderFailureError",
    "EmptyCompletionError",
    "AuthFailureError",
    "RateLimitedError",
    "MalformedResponseError",
    "CorruptEntryError",
    "normalize_url",
    "make_article_id",
    "generate_keywords",
    "fetch_articles",
    "dedup_corpus",
]

SEED_TERMS = ("forced labor", "supply chain")

# This exact template is sent to the text-model provider; it is part of
# the documented interface so runs can be reproduced.
KEYWORD_PROMPT_TEMPLATE = (
    "You are compiling search queries for news coverage of {topic}.\n"
    "List {n} short keyword phrases that would surface relevant articles.\n"
    "Write one phrase per line, with no numbering and no commentary.\n"
)


class IngestError(Exception):
    pass


class ProviderFailureError(IngestError):
    pass


class EmptyCompletionError(IngestError):
    pass


class AuthFailureError(IngestError):
    pass


class RateLimitedError(IngestError):
    pass


class MalformedResponseError(IngestError):
    def __init__(self, page: int, detail: str):
        self.page = page
        super().__init__(f"malformed response on page {page}: {detail}")


class CorruptEntryError(IngestError):
    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f"corpus line {line_no}: {detail}")


class ArticleStatus(str, Enum):
    PENDING = "pending"
    SCORED = "scored"
    ANNOTATED = "annotated"
    DISCARDED = "discarded"


_FORWARD_TRANSITIONS = {
    ArticleStatus.PENDING: {ArticleStatus.SCORED},
    ArticleStatus.SCORED: {ArticleStatus.ANNOTATED, ArticleStatus.DISCARDED},
    ArticleStatus.ANNOTATED: set(),
    ArticleStatus.DISCARDED: set(),
}


def normalize_url(url: str) -> str:
    parts = urlsplit(url.strip())
    path = parts.path.rstrip("/")
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, ""))


def make_article_id(url: str | None, title: str = "", published: date | None = None) -> str:
    """Stable id from the normalized URL, or from title+date when no URL."""
    if url:
        identity = f"url:{normalize_url(url)}"
    else:
        identity = f"title:{title.strip().lower()}|date:{published.isoformat() if published else ''}"
    return hashlib.sha256(identity.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ArticleRecord:
    article_id: str
    title: str
    body: str = ""
    source: str = ""
    url: str = ""
    published: date | None = None
    retrieved_at: datetime | None = None
    matched_keywords: tuple[str, ...] = ()
    status: ArticleStatus = ArticleStatus.PENDING
    relevance_score: float | None = None

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "title": self.title,
            "body": self.body,
            "source": self.source,
            "url": self.url,
            "published": self.published.isoformat() if self.published else None,
            "retrieved_at": self.retrieved_at.isoformat() if self.retrieved_at else None,
            "matched_keywords": list(self.matched_keywords),
            "status": self.status.value,
            "relevance_score": self.relevance_score,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ArticleRecord":
        return cls(
            article_id=data["article_id"],
            title=data.get("title", ""),
            body=data.get("body", ""),
            source=data.get("source", ""),
            url=data.get("url", ""),
            published=date.fromisoformat(data["published"]) if data.get("published") else None,
            retrieved_at=datetime.fromisoformat(data["retrieved_at"]) if data.get("retrieved_at") else None,
            matched_keywords=tuple(data.get("matched_keywords", ())),
            status=ArticleStatus(data.get("status", "pending")),
            relevance_score=data.get("relevance_score"),
        )


@dataclass(frozen=True)
class KeywordQuery:
    terms: tuple[str, ...]
    date_from: date | None = None
    date_to: date | None = None
    page_size: int = 20
    max_results: int = 100

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("a query needs at least one term")
        if self.page_size < 1 or self.max_results < 1:
            raise ValueError("page_size and max_results must be positive")


@dataclass(frozen=True)
class SearchPage:
    total_count: int
    items: tuple[Mapping, ...]


class TextModelProvider:
    """Prompt-to-completion capability with a provenance identity."""

    identity: str = "text-model"

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class NewsSearchClient:
    """One page of search results per call, following the wire contract."""

    identity: str = "news-search"

    def search(self, query: KeywordQuery, page: int) -> SearchPage:
        raise NotImplementedError


def generate_keywords(
    provider: TextModelProvider,
    seed_topic: str,
    n: int,
    log: Callable[[str, str, str], None] | None = None,
) -> list[str]:
    """Seed terms first, then deduplicated provider phrases, truncated to n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    prompt = KEYWORD_PROMPT_TEMPLATE.format(topic=seed_topic, n=n)
    try:
        completion = provider.complete(prompt)
    except Exception as exc:
        raise ProviderFailureError(f"{provider.identity}: {exc}") from exc
    if log is not None:
        log(provider.identity, prompt, completion)
    phrases = [line.strip().lower() for line in completion.splitlines() if line.strip()]
    if not phrases:
        raise EmptyCompletionError(f"{provider.identity} returned no phrases")
    keywords = list(SEED_TERMS)
    for phrase in phrases:
        if phrase not in keywords:
            keywords.append(phrase)
    return keywords[:n]


def _record_from_item(item: Mapping, page: int, query: KeywordQuery, retrieved_at: datetime) -> ArticleRecord:
    if not isinstance(item, Mapping) or not (item.get("title") or item.get("url")):
        raise MalformedResponseError(page, f"item without title or url: {item!r}")
    published = None
    if item.get("date"):
        try:
            published = date.fromisoformat(str(item["date"]))
        except ValueError:
            raise MalformedResponseError(page, f"bad date {item['date']!r}") from None
    url = str(item.get("url") or "")
    title = str(item.get("title") or "")
    return ArticleRecord(
        article_id=make_article_id(url or None, title, published),
        title=title,
        body=str(item.get("snippet") or ""),
        source=str(item.get("source") or ""),
        url=url,
        published=published,
        retrieved_at=retrieved_at,
        matched_keywords=query.terms,
        status=ArticleStatus.PENDING,
    )


def fetch_articles(
    client: NewsSearchClient,
    query: KeywordQuery,
    now: Callable[[], datetime] | None = None,
) -> list[ArticleRecord]:
    """Page through results until max_results or exhaustion.

    A failure on the first page raises; a failure on a later page logs a
    warning and returns the records gathered so far.
    """
    clock = now or (lambda: datetime.now(timezone.utc))
    records: list[ArticleRecord] = []
    page = 0
    target = query.max_results
    while len(records) < target:
        try:
            result = client.search(query, page)
            retrieved_at = clock()
            page_records = [_record_from_item(item, page, query, retrieved_at) for item in result.items]
        except Exception as exc:
            if page == 0:
                raise
            logger.warning(
                "fetch: page %d failed (%s); returning %d partial records", page, exc, len(records)
            )
            break
        target = min(query.max_results, result.total_count)
        records.extend(page_records[: target - len(records)])
        if not result.items or len(records) >= target:
            break
        page += 1
    return records


def dedup_corpus(records: Sequence[ArticleRecord]) -> list[ArticleRecord]:
    """First occurrence per article_id wins; order is preserved."""
    seen: set[str] = set()
    kept = []
    for record in records:
        if record.article_id not in seen:
            seen.add(record.article_id)
            kept.append(record)
    return kept


class CorpusStore:
    """Append-only JSONL log of articles, status updates, and provenance.

    Loading replays the log in order. A final line that fails to parse is
    treated as a truncated write: it is skipped with a warning. Any other
    unreadable or inconsistent entry raises CorruptEntryError.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    # -- write side ------------------------------------------------------

    def _append(self, entry: Mapping) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, separators=(",", ":"), sort_keys=True) + "\n")

    def append_articles(self, records: Iterable[ArticleRecord]) -> int:
        existing = {a.article_id for a in self.load_corpus()}
        added = 0
        for record in records:
            if record.article_id in existing:
                continue
            self._append({"type": "article", **record.to_json()})
            existing.add(record.article_id)
            added += 1
        return added

    def update_status(
        self, article_id: str, status: ArticleStatus, relevance_score: float | None = None
    ) -> None:
        state = {a.article_id: a for a in self.load_corpus()}
        current = state.get(article_id)
        if current is None:
            raise KeyError(f"unknown article {article_id!r}")
        if status not in _FORWARD_TRANSITIONS[current.status]:
            raise ValueError(f"illegal status transition {current.status.value} -> {status.value}")
        entry: dict = {"type": "status", "article_id": article_id, "status": status.value}
        if relevance_score is not None:
            entry["relevance_score"] = relevance_score
        self._append(entry)

    def log_provider_call(self, identity: str, prompt: str, completion: str, timestamp: str = "") -> None:
        self._append(
            {
                "type": "provider_call",
                "identity": identity,
                "prompt": prompt,
                "completion": completion,
                "timestamp": timestamp,
            }
        )

    def log_evaluation(self, record: Mapping) -> None:
        self._append({"type": "evaluation", **record})

    # -- read side -------------------------------------------------------

    def _entries(self) -> list[Mapping]:
        if not self.path.exists():
            return []
        entries: list[Mapping] = []
        lines = self.path.read_text(encoding="utf-8").splitlines()
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                if not isinstance(entry, dict) or "type" not in entry:
                    raise ValueError("entry is not an object with a 'type'")
            except ValueError as exc:
                if line_no == len(lines):
                    logger.warning("corpus %s: ignoring truncated final line", self.path)
                    continue
                raise CorruptEntryError(line_no, str(exc)) from None
            entry["_line"] = line_no
            entries.append(entry)
        return entries

    def load_corpus(self) -> list[ArticleRecord]:
        articles: dict[str, ArticleRecord] = {}
        for entry in self._entries():
            line_no = entry["_line"]
            kind = entry["type"]
            if kind == "article":
                try:
                    record = ArticleRecord.from_json(entry)
                except (KeyError, ValueError) as exc:
                    raise CorruptEntryError(line_no, f"bad article entry: {exc}") from None
                articles.setdefault(record.article_id, record)
            elif kind == "status":
                article_id = entry.get("article_id")
                current = articles.get(article_id)
                if current is None:
                    raise CorruptEntryError(line_no, f"status for unknown article {article_id!r}")
                try:
                    status = ArticleStatus(entry.get("status"))
                except ValueError:
                    raise CorruptEntryError(line_no, f"bad status {entry.get('status')!r}") from None
                if status not in _FORWARD_TRANSITIONS[current.status]:
                    raise CorruptEntryError(
                        line_no, f"illegal transition {current.status.value} -> {status.value}"
                    )
                articles[article_id] = replace(
                    current,
                    status=status,
                    relevance_score=entry.get("relevance_score", current.relevance_score),
                )
            elif kind in ("provider_call", "evaluation"):
                continue
            else:
                raise CorruptEntryError(line_no, f"unknown entry type {kind!r}")
        return list(articles.values())

    def provider_calls(self) -> list[dict]:
        return [dict(e) for e in self._entries() if e["type"] == "provider_call"]

    def evaluations(self) -> list[dict]:
        return [dict(e) for e in self._entries() if e["type"] == "evaluation"]
