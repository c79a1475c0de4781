"""Concrete answer and text-model providers, plus the HTTP search client.

Everything here is swappable behind the contracts in qtree and ingest:
deterministic stubs for tests and offline runs, HTTP adapters for real
deployments. Credentials are read from environment variables named in
the config and are never written to disk.
"""

from __future__ import annotations

import os
import re
import time
from typing import Callable, Mapping

import requests

from .ingest import (
    AuthFailureError,
    KeywordQuery,
    MalformedResponseError,
    NewsSearchClient,
    ProviderFailureError,
    RateLimitedError,
    SearchPage,
    TextModelProvider,
)
from .qtree import Answer, AnswerProvider

__all__ = [
    "StubTextModelProvider",
    "HttpTextModelProvider",
    "ScriptedAnswerProvider",
    "KeywordAnswerProvider",
    "TextModelAnswerProvider",
    "HttpNewsSearchClient",
    "InMemoryNewsClient",
    "ANSWER_PROMPT_TEMPLATE",
]

ANSWER_PROMPT_TEMPLATE = (
    "Article title: {title}\n"
    "Article text:\n{body}\n\n"
    "Question: {question}\n"
    "Answer with exactly one word, yes or no.\n"
)


class StubTextModelProvider(TextModelProvider):
    """Fixed completion for offline runs and reproducible tests."""

    def __init__(self, completion: str, identity: str = "stub-text-model"):
        self.completion = completion
        self.identity = identity

    def complete(self, prompt: str) -> str:
        return self.completion


class HttpTextModelProvider(TextModelProvider):
    """POST {"prompt": ...} to an endpoint returning {"completion": ...}."""

    def __init__(self, endpoint: str, credential_env: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.timeout = timeout
        self.identity = f"http-text-model:{endpoint}"

    def _headers(self) -> dict[str, str]:
        token = os.environ.get(self.credential_env, "") if self.credential_env else ""
        return {"Authorization": f"Bearer {token}"} if token else {}

    def complete(self, prompt: str) -> str:
        try:
            response = requests.post(
                self.endpoint, json={"prompt": prompt}, headers=self._headers(), timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ProviderFailureError(str(exc)) from exc
        if response.status_code != 200:
            raise ProviderFailureError(f"status {response.status_code}")
        try:
            completion = response.json()["completion"]
        except (ValueError, KeyError) as exc:
            raise ProviderFailureError(f"bad completion payload: {exc}") from None
        return str(completion)


class ScriptedAnswerProvider(AnswerProvider):
    """Answers from a fixed map; raises on unknown nodes unless a default is set.

    Lookup order: (article_id, node_id), then node_id, then the default.
    """

    def __init__(
        self,
        by_node: Mapping[str, Answer | str] | None = None,
        by_article: Mapping[tuple[str, str], Answer | str] | None = None,
        default: Answer | str | None = None,
        identity: str = "scripted",
    ):
        self.by_node = dict(by_node or {})
        self.by_article = dict(by_article or {})
        self.default = default
        self.identity = identity

    def answer(self, article, question_text: str, node_id: str) -> Answer:
        article_id = getattr(article, "article_id", str(article))
        value = self.by_article.get((article_id, node_id), self.by_node.get(node_id, self.default))
        if value is None:
            raise KeyError(f"no scripted answer for ({article_id}, {node_id})")
        return Answer(value)


_STOPWORDS = {
    "a", "an", "and", "any", "are", "article", "as", "at", "be", "being", "by", "can", "cannot",
    "do", "does", "for", "from", "has", "have", "in", "is", "it", "its", "mention", "mentions",
    "named", "name", "names", "not", "of", "on", "or", "our", "over", "specific", "that", "the",
    "their", "there", "they", "this", "to", "was", "were", "where", "which", "who", "whom", "with",
}


class KeywordAnswerProvider(AnswerProvider):
    """Deterministic heuristic: yes when any content word of the question
    appears in the article's title or body. No language model involved."""

    identity = "keyword-heuristic"

    def question_terms(self, question_text: str) -> list[str]:
        words = re.findall(r"[a-z]+", question_text.lower())
        return [w for w in words if len(w) >= 4 and w not in _STOPWORDS]

    def answer(self, article, question_text: str, node_id: str) -> Answer:
        haystack = f"{getattr(article, 'title', '')} {getattr(article, 'body', '')}".lower()
        terms = self.question_terms(question_text)
        return Answer.YES if any(term in haystack for term in terms) else Answer.NO


class TextModelAnswerProvider(AnswerProvider):
    """Asks a text-model provider each question and parses a yes/no reply."""

    def __init__(self, provider: TextModelProvider, log: Callable[[str, str, str], None] | None = None):
        self.provider = provider
        self.log = log
        self.identity = f"qa:{provider.identity}"

    def answer(self, article, question_text: str, node_id: str) -> Answer:
        prompt = ANSWER_PROMPT_TEMPLATE.format(
            title=getattr(article, "title", ""),
            body=getattr(article, "body", ""),
            question=question_text,
        )
        completion = self.provider.complete(prompt)
        if self.log is not None:
            self.log(self.identity, prompt, completion)
        match = re.search(r"\b(yes|no)\b", completion.strip().lower())
        if match is None:
            raise ProviderFailureError(f"unparseable answer {completion!r} for node {node_id}")
        return Answer(match.group(1))


class HttpNewsSearchClient(NewsSearchClient):
    """Paginated search over the wire contract, with retries and rate limiting."""

    def __init__(
        self,
        endpoint: str,
        credential_env: str = "",
        min_request_interval: float = 0.0,
        max_retries: int = 2,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.min_request_interval = min_request_interval
        self.max_retries = max_retries
        self.timeout = timeout
        self.identity = f"news-search:{endpoint}"
        self._last_request = 0.0

    def _throttle(self) -> None:
        if self.min_request_interval <= 0:
            return
        wait = self._last_request + self.min_request_interval - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        self._last_request = time.monotonic()

    def search(self, query: KeywordQuery, page: int) -> SearchPage:
        payload = {
            "terms": list(query.terms),
            "date_from": query.date_from.isoformat() if query.date_from else None,
            "date_to": query.date_to.isoformat() if query.date_to else None,
            "page": page,
            "page_size": query.page_size,
        }
        headers = {}
        token = os.environ.get(self.credential_env, "") if self.credential_env else ""
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_exc: Exception | None = None
        for _ in range(self.max_retries + 1):
            self._throttle()
            try:
                response = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if response.status_code in (401, 403):
                raise AuthFailureError(f"status {response.status_code} from {self.endpoint}")
            if response.status_code == 429 or response.status_code >= 500:
                last_exc = RateLimitedError(f"status {response.status_code}")
                continue
            if response.status_code != 200:
                raise MalformedResponseError(page, f"status {response.status_code}")
            return _parse_search_payload(response, page)
        if isinstance(last_exc, RateLimitedError):
            raise last_exc
        raise RateLimitedError(f"gave up after {self.max_retries + 1} attempts: {last_exc}")


def _parse_search_payload(response, page: int) -> SearchPage:
    try:
        data = response.json()
        total = int(data["total_count"])
        items = data["items"]
        if not isinstance(items, list):
            raise TypeError("items is not a list")
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedResponseError(page, str(exc)) from None
    return SearchPage(total_count=total, items=tuple(items))


class InMemoryNewsClient(NewsSearchClient):
    """Instrumented fake for unit tests: serves a fixed article list and can
    be told to fail on a given page."""

    identity = "in-memory-news"

    def __init__(self, articles: list[dict], fail_on_page: int | None = None, total_override: int | None = None):
        self.articles = articles
        self.fail_on_page = fail_on_page
        self.total_override = total_override
        self.requests: list[int] = []

    def search(self, query: KeywordQuery, page: int) -> SearchPage:
        self.requests.append(page)
        if self.fail_on_page is not None and page >= self.fail_on_page:
            raise RateLimitedError(f"scripted failure on page {page}")
        matching = [a for a in self.articles if _matches(a, query)]
        start = page * query.page_size
        total = self.total_override if self.total_override is not None else len(matching)
        return SearchPage(total_count=total, items=tuple(matching[start : start + query.page_size]))


def _matches(item: Mapping, query: KeywordQuery) -> bool:
    haystack = f"{item.get('title', '')} {item.get('snippet', '')}".lower()
    if not any(term.lower() in haystack for term in query.terms):
        return False
    if item.get("date"):
        if query.date_from and str(item["date"]) < query.date_from.isoformat():
            return False
        if query.date_to and str(item["date"]) > query.date_to.isoformat():
            return False
    return True
