"""Command-line entry point: one subcommand per pipeline stage.

Every command is a thin wrapper over a library operation: inputs are
checked before anything is written, outputs land under the configured
paths, and failures exit nonzero with one machine-parsable error line
on stderr. Given the same inputs (and --now for stages that stamp
timestamps), reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Callable

import yaml

from . import features, formulas, ingest, qtree, temporal
from .config import Config, config_to_mapping, load_config
from .fake_news import FakeNewsServer, sample_articles
from .providers import (
    HttpNewsSearchClient,
    HttpTextModelProvider,
    KeywordAnswerProvider,
    ScriptedAnswerProvider,
    StubTextModelProvider,
    TextModelAnswerProvider,
)

__all__ = ["main", "write_booleanized", "read_booleanized"]


@dataclass
class RunContext:
    now: datetime
    rng: random.Random

    def now_iso(self) -> str:
        return self.now.isoformat()


def _parse_now(value: str | None) -> datetime:
    if value is None:
        return datetime.now(timezone.utc).replace(microsecond=0)
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def _parse_date(value: str | None) -> date | None:
    return date.fromisoformat(value) if value else None


# -- shared artifact codecs ----------------------------------------------------


def write_booleanized(data: features.BooleanizedDataset, path: Path) -> None:
    payload = {
        "variables": list(data.variables),
        "incident_ids": list(data.incident_ids),
        "labels": [label.value for label in data.labels],
        "rows": [[row[v] for v in data.variables] for row in data.rows],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_booleanized(path: Path) -> features.BooleanizedDataset:
    payload = json.loads(path.read_text(encoding="utf-8"))
    variables = tuple(payload["variables"])
    return features.BooleanizedDataset(
        variables=variables,
        rows=tuple(dict(zip(variables, row)) for row in payload["rows"]),
        labels=tuple(features.Label(v) for v in payload["labels"]),
        incident_ids=tuple(payload.get("incident_ids", ())),
    )


def _score_rows(ranked: list[formulas.FormulaScore], temporal_columns: bool) -> list[dict]:
    rows = []
    for rank, score in enumerate(ranked, start=1):
        row = {
            "rank": rank,
            "formula": score.text,
            "size": score.size,
            "tpr": score.tpr,
            "tnr": score.tnr,
            "j": score.j,
            "pos_sat": score.n_pos_sat,
            "pos_unsat": score.n_pos_unsat,
            "pos_skipped": score.n_pos_skipped,
            "neg_sat": score.n_neg_sat,
            "neg_unsat": score.n_neg_unsat,
            "neg_skipped": score.n_neg_skipped,
            "tpr_defined": score.tpr_defined,
            "tnr_defined": score.tnr_defined,
        }
        if temporal_columns:
            row["bounds"] = " ".join(f"[{lo},{hi}]" for lo, hi in score.bounds)
        rows.append(row)
    return rows


def render_score_table(rows: list[dict], temporal_columns: bool = False) -> str:
    """Fixed-width text table; ranking statistic is |J| = |tpr + tnr - 1|."""
    if not rows:
        return "(no formulas survived filtering)\n"
    width = max(len(r["formula"]) for r in rows)
    header = f"{'rank':>4}  {'formula':<{width}}  {'size':>4}  {'tpr':>6}  {'tnr':>6}  {'j':>7}  {'pos s/u/k':>9}  {'neg s/u/k':>9}"
    if temporal_columns:
        header += "  bounds"
    lines = [header, "-" * len(header)]
    for r in rows:
        line = (
            f"{r['rank']:>4}  {r['formula']:<{width}}  {r['size']:>4}  "
            f"{r['tpr']:>6.3f}  {r['tnr']:>6.3f}  {r['j']:>7.4f}  "
            f"{r['pos_sat']}/{r['pos_unsat']}/{r['pos_skipped']:<5}  "
            f"{r['neg_sat']}/{r['neg_unsat']}/{r['neg_skipped']:<5}"
        )
        if temporal_columns:
            line += f"  {r['bounds']}"
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"


def _write_report(reports_dir: Path, stem: str, payload: dict, table: str) -> None:
    reports_dir.mkdir(parents=True, exist_ok=True)
    (reports_dir / f"{stem}.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (reports_dir / f"{stem}.txt").write_text(table, encoding="utf-8")


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


# -- config-backed object factories ---------------------------------------------


def _load_tree(config: Config) -> qtree.QuestionTree:
    tree = qtree.load_tree_file(str(_require_file(config.tree, "tree file"))) if config.tree else qtree.default_tree()
    problems = qtree.validate_tree(tree)
    if problems:
        raise ValueError(f"tree invalid: {'; '.join(v.message for v in problems)}")
    return tree


def _load_schema(config: Config) -> features.FeatureSchema:
    if config.schema:
        return features.load_schema_file(str(_require_file(config.schema, "schema file")))
    return features.default_schema()


def _make_text_provider(config: Config) -> ingest.TextModelProvider:
    settings = config.text_model
    if settings.kind == "stub":
        return StubTextModelProvider(settings.stub_completion)
    if settings.kind == "http":
        if not settings.endpoint:
            raise ValueError("text_model.endpoint required for kind=http")
        return HttpTextModelProvider(settings.endpoint, settings.credential_env)
    raise ValueError(f"unknown text_model.kind {settings.kind!r}")


def _make_answer_provider(config: Config, log=None) -> qtree.AnswerProvider:
    settings = config.answer_provider
    if settings.kind == "keyword":
        return KeywordAnswerProvider()
    if settings.kind == "text-model":
        return TextModelAnswerProvider(_make_text_provider(config), log=log)
    if settings.kind == "scripted":
        path = _require_file(settings.answers_file, "scripted answers file")
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        by_node: dict[str, str] = {}
        by_article: dict[tuple[str, str], str] = {}
        default = raw.pop("_default", None)
        for key, value in raw.items():
            if isinstance(value, dict):
                for node_id, answer in value.items():
                    by_article[(str(key), str(node_id))] = str(answer)
            else:
                by_node[str(key)] = str(value)
        return ScriptedAnswerProvider(by_node, by_article, default)
    raise ValueError(f"unknown answer_provider.kind {settings.kind!r}")


def _make_news_client(config: Config) -> ingest.NewsSearchClient:
    s = config.news_search
    return HttpNewsSearchClient(
        endpoint=s.endpoint,
        credential_env=s.credential_env,
        min_request_interval=s.min_request_interval,
        max_retries=s.max_retries,
    )


# -- commands ---------------------------------------------------------------------


def cmd_init(args, config: Config, ctx: RunContext) -> int:
    target = Path(args.dir)
    target.mkdir(parents=True, exist_ok=True)
    config_path = target / "laborlens.yaml"
    if config_path.exists() and not args.force:
        raise FileExistsError(f"{config_path} already exists (use --force to overwrite)")
    fresh = Config(tree="tree.yaml", schema="schema.yaml")
    config_path.write_text(yaml.safe_dump(config_to_mapping(fresh), sort_keys=False), encoding="utf-8")
    (target / "tree.yaml").write_text(
        yaml.safe_dump(qtree.tree_to_mapping(qtree.default_tree()), sort_keys=False), encoding="utf-8"
    )
    (target / "schema.yaml").write_text(
        yaml.safe_dump(features.schema_to_mapping(features.default_schema()), sort_keys=False),
        encoding="utf-8",
    )
    print(f"wrote {config_path}, tree.yaml, schema.yaml")
    return 0


def cmd_keywords(args, config: Config, ctx: RunContext) -> int:
    provider = _make_text_provider(config)
    store = ingest.CorpusStore(config.corpus)
    log = lambda identity, prompt, completion: store.log_provider_call(  # noqa: E731
        identity, prompt, completion, timestamp=ctx.now_iso()
    )
    keywords = ingest.generate_keywords(provider, args.topic, args.n, log=log)
    for phrase in keywords:
        print(phrase)
    if args.out:
        Path(args.out).write_text("\n".join(keywords) + "\n", encoding="utf-8")
    return 0


def cmd_fetch(args, config: Config, ctx: RunContext) -> int:
    if args.terms_file:
        terms = tuple(
            line.strip() for line in _require_file(args.terms_file, "terms file").read_text().splitlines() if line.strip()
        )
    elif args.terms:
        terms = tuple(t.strip() for t in args.terms.split(",") if t.strip())
    else:
        terms = ingest.SEED_TERMS
    query = ingest.KeywordQuery(
        terms=terms,
        date_from=_parse_date(args.date_from),
        date_to=_parse_date(args.date_to),
        page_size=args.page_size or config.news_search.page_size,
        max_results=args.max_results or config.news_search.max_results,
    )
    client = _make_news_client(config)
    records = ingest.fetch_articles(client, query, now=lambda: ctx.now)
    unique = ingest.dedup_corpus(records)
    store = ingest.CorpusStore(config.corpus)
    added = store.append_articles(unique)
    print(f"fetched {len(records)} results, {len(unique)} unique, {added} new in corpus")
    return 0


def cmd_score(args, config: Config, ctx: RunContext) -> int:
    threshold = config.threshold if args.threshold is None else args.threshold
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    tree = _load_tree(config)
    store = ingest.CorpusStore(config.corpus)
    _require_file(config.corpus, "corpus file")
    provider = _make_answer_provider(config)
    scorable = (ingest.ArticleStatus.PENDING, ingest.ArticleStatus.SCORED)
    articles = [a for a in store.load_corpus() if a.status in scorable]
    records = []
    relevant = 0
    for article in articles:
        evaluation = qtree.evaluate(tree, provider, article)
        record = qtree.evaluation_record(tree, evaluation, threshold, provider.identity, ctx.now_iso())
        records.append(record)
        if record["classification"] == "relevant":
            relevant += 1
        if article.status is ingest.ArticleStatus.PENDING:
            store.update_status(article.article_id, ingest.ArticleStatus.SCORED, record["score"])
    reports_dir = Path(config.reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)
    out = reports_dir / "evaluations.jsonl"
    out.write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records), encoding="utf-8"
    )
    print(f"scored {len(records)} articles at threshold {threshold}: {relevant} relevant")
    return 0


def cmd_booleanize(args, config: Config, ctx: RunContext) -> int:
    source = _require_file(args.incidents or config.incidents, "incidents CSV")
    schema = _load_schema(config)
    dataset = features.parse_incident_csv(source.read_bytes(), schema)
    data = features.booleanize(dataset)
    out = Path(args.out) if args.out else Path(config.reports_dir) / "booleanized.json"
    write_booleanized(data, out)
    print(f"booleanized {len(data.rows)} records into {len(data.variables)} variables -> {out}")
    return 0


def cmd_mine(args, config: Config, ctx: RunContext) -> int:
    source = _require_file(args.input or str(Path(config.reports_dir) / "booleanized.json"), "booleanized dataset")
    data = read_booleanized(source)
    enum_config = formulas.EnumerationConfig(
        variables=data.variables,
        max_size=args.max_size or config.mining.max_size,
        max_vars_per_formula=args.max_vars or config.mining.max_vars,
        operators=frozenset(config.mining.operators),
    )
    top_k = args.top_k or config.mining.top_k
    workers = args.workers or config.mining.workers
    ranked = formulas.mine(enum_config, data, top_k=top_k, n_workers=workers)
    rows = _score_rows(ranked, temporal_columns=False)
    payload = {
        "ranking": "abs_youden_j",
        "statistic": "J = tpr + tnr - 1, ranked by |J|",
        "top_k": top_k,
        "max_size": enum_config.max_size,
        "max_vars_per_formula": enum_config.max_vars_per_formula,
        "operators": sorted(enum_config.operators),
        "rows": rows,
    }
    table = render_score_table(rows)
    _write_report(Path(config.reports_dir), "mining", payload, table)
    print(table, end="")
    return 0


def cmd_temporal(args, config: Config, ctx: RunContext) -> int:
    source = _require_file(args.traces or config.traces, "trace file")
    traces = temporal.read_traces(source.read_bytes())
    bounds = tuple(int(b) for b in args.bounds.split(",")) if args.bounds else config.temporal.bounds
    inferred = None
    if args.infer:
        try:
            antecedent, consequent = args.infer.split(":", 1)
        except ValueError:
            raise ValueError("--infer expects ANTECEDENT:CONSEQUENT") from None
        inferred = temporal.infer_bound(traces, antecedent.strip(), consequent.strip())
        print(
            f"inferred bound for {inferred.antecedent} -> {inferred.consequent}: "
            f"t* = {inferred.t_star if inferred.t_star is not None else 'unbounded'}"
        )
        if inferred.t_star is not None:
            bounds = tuple(sorted(set(bounds) | {inferred.t_star}))
    mining_config = temporal.TemporalMiningConfig(
        bounds=bounds,
        max_depth=args.depth if args.depth is not None else config.temporal.max_depth,
    )
    top_k = args.top_k or config.temporal.top_k
    workers = args.workers or config.temporal.workers
    ranked = temporal.mine_temporal(mining_config, traces, top_k=top_k, n_workers=workers)
    rows = _score_rows(ranked, temporal_columns=True)
    payload = {
        "ranking": "abs_youden_j",
        "statistic": "J = tpr + tnr - 1, ranked by |J|",
        "bounds": list(bounds),
        "max_depth": mining_config.max_depth,
        "top_k": top_k,
        "inferred_t_star": inferred.t_star if inferred else None,
        "rows": rows,
    }
    table = render_score_table(rows, temporal_columns=True)
    _write_report(Path(config.reports_dir), "temporal", payload, table)
    print(table, end="")
    return 0


def cmd_report(args, config: Config, ctx: RunContext) -> int:
    source = _require_file(args.incidents or config.incidents, "incidents CSV")
    schema = _load_schema(config)
    dataset = features.parse_incident_csv(source.read_bytes(), schema)
    data = features.booleanize(dataset)
    enum_config = formulas.EnumerationConfig(
        variables=data.variables,
        max_size=config.mining.max_size,
        max_vars_per_formula=config.mining.max_vars,
        operators=frozenset(config.mining.operators),
    )
    ranked = formulas.mine(enum_config, data, top_k=config.mining.top_k, n_workers=config.mining.workers)
    rows = _score_rows(ranked, temporal_columns=False)
    positives = sum(1 for r in dataset.records if r.label is features.Label.POSITIVE)
    summary = (
        f"dataset: {len(dataset.records)} incidents "
        f"({positives} instances, {len(dataset.records) - positives} non-instances), "
        f"{len(data.variables)} Boolean variables\n"
        f"ranking: |J| with J = tpr + tnr - 1\n\n"
    )
    table = summary + render_score_table(rows)
    payload = {
        "n_records": len(dataset.records),
        "n_positive": positives,
        "n_variables": len(data.variables),
        "ranking": "abs_youden_j",
        "rows": rows,
    }
    _write_report(Path(config.reports_dir), "report", payload, table)
    print(table, end="")
    return 0


def cmd_serve(args, config: Config, ctx: RunContext) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(config)
    host = args.host or config.service.host
    port = args.port if args.port is not None else config.service.port
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def cmd_fake_news(args, config: Config, ctx: RunContext) -> int:
    server = FakeNewsServer(sample_articles(args.count), port=args.port)
    print(f"fake news search listening on {server.endpoint}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


# -- wiring -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laborlens",
        description="Mine indicators of forced labor in supply chains from news-article data.",
    )
    parser.add_argument("--config", default=None, help="config file (default: ./laborlens.yaml if present)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config field, e.g. --set mining.max_size=5",
    )
    parser.add_argument("--seed", type=int, default=None, help="seed for any randomized tie-breaking")
    parser.add_argument("--now", default=None, help="fixed ISO-8601 timestamp for reproducible runs")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("init", help="write a starter config, tree and schema")
    p.add_argument("--dir", default=".")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("keywords", help="generate search keywords via the text-model provider")
    p.add_argument("--topic", default="forced labor in supply chains")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out", default=None)

    p = sub.add_parser("fetch", help="fetch articles from the news-search endpoint into the corpus")
    p.add_argument("--terms", default=None, help="comma-separated search terms")
    p.add_argument("--terms-file", default=None)
    p.add_argument("--date-from", dest="date_from", default=None)
    p.add_argument("--date-to", dest="date_to", default=None)
    p.add_argument("--page-size", dest="page_size", type=int, default=None)
    p.add_argument("--max-results", dest="max_results", type=int, default=None)

    p = sub.add_parser("score", help="evaluate corpus articles against the question tree")
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("booleanize", help="encode the incidents CSV as Boolean variables")
    p.add_argument("--incidents", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mine", help="mine ranked Boolean formulas from a booleanized dataset")
    p.add_argument("--input", default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--max-size", dest="max_size", type=int, default=None)
    p.add_argument("--max-vars", dest="max_vars", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("temporal", help="mine ranked temporal formulas from a trace file")
    p.add_argument("--traces", default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--bounds", default=None, help="comma-separated window upper bounds")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--infer", default=None, metavar="ANTECEDENT:CONSEQUENT")

    p = sub.add_parser("report", help="booleanize + mine + summarize in one step")
    p.add_argument("--incidents", default=None)

    p = sub.add_parser("serve", help="run the annotation API (and UI, when built)")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    p = sub.add_parser("fake-news", help="run the bundled fake news-search server")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--count", type=int, default=40)

    return parser


_COMMANDS: dict[str, Callable] = {
    "init": cmd_init,
    "keywords": cmd_keywords,
    "fetch": cmd_fetch,
    "score": cmd_score,
    "booleanize": cmd_booleanize,
    "mine": cmd_mine,
    "temporal": cmd_temporal,
    "report": cmd_report,
    "serve": cmd_serve,
    "fake-news": cmd_fake_news,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    stage = args.command
    try:
        config = load_config(
            args.config if args.config is not None else "laborlens.yaml",
            args.overrides,
            require=args.config is not None,
        )
        ctx = RunContext(now=_parse_now(args.now), rng=random.Random(args.seed))
        return _COMMANDS[stage](args, config, ctx)
    except Exception as exc:
        line = json.dumps(
            {"stage": stage, "type": type(exc).__name__, "message": str(exc)}, sort_keys=True
        )
        print(f"error: {line}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
