"""End-to-end CLI behavior: exit codes, artifacts, determinism, error lines."""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import pytest

from laborlens.cli import main, read_booleanized
from laborlens.features import (
    Category,
    IncidentRecord,
    Integer,
    Label,
    LabeledDataset,
    TriState,
    default_schema,
    write_incident_csv,
)
from laborlens.fake_news import FakeNewsServer, sample_articles
from laborlens.ingest import ArticleStatus, CorpusStore
from laborlens.temporal import Trace, write_traces

NOW = "2026-01-02T03:04:05+00:00"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def tri(flag: bool) -> TriState:
    return TriState.YES if flag else TriState.NO


def incident(i: int, label: Label, cb: bool, hrs: bool, hrp: bool) -> IncidentRecord:
    return IncidentRecord(
        incident_id=f"inc-{i}",
        label=label,
        values={
            "cross_border": tri(cb),
            "high_risk_source": tri(hrs),
            "high_risk_product": tri(hrp),
            "position_in_supply_chain": Integer(1 + i % 4),
            "sourcing_characteristic": Category("Fishing"),
        },
    )


def write_incidents_csv(path: Path, n_copies: int = 3) -> None:
    records = []
    i = 0
    for _ in range(n_copies):
        for cb in (False, True):
            for hrs in (False, True):
                for hrp in (False, True):
                    label = Label.POSITIVE if cb and (hrs or hrp) else Label.NEGATIVE
                    records.append(incident(i, label, cb, hrs, hrp))
                    i += 1
    dataset = LabeledDataset(default_schema(), tuple(records))
    path.write_bytes(write_incident_csv(dataset))


class TestInit:
    def test_writes_starter_files(self, workdir, capsys):
        assert main(["init"]) == 0
        for name in ("laborlens.yaml", "tree.yaml", "schema.yaml"):
            assert (workdir / name).exists()

    def test_refuses_to_overwrite(self, workdir, capsys):
        assert main(["init"]) == 0
        assert main(["init"]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        payload = json.loads(err.removeprefix("error: "))
        assert payload["type"] == "FileExistsError"


class TestKeywords:
    def test_prints_seeds_first_and_logs_call(self, workdir, capsys):
        assert main(["--now", NOW, "keywords", "--n", "4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[:2] == ["forced labor", "supply chain"]
        assert len(lines) == 4
        calls = CorpusStore(workdir / "corpus.jsonl").provider_calls()
        assert len(calls) == 1
        assert calls[0]["identity"] == "stub-text-model"
        assert calls[0]["timestamp"] == NOW


class TestFetchAndScore:
    def test_fetch_populates_corpus_idempotently(self, workdir, capsys):
        with FakeNewsServer(sample_articles(24)) as server:
            override = f"news_search.endpoint={server.endpoint}"
            assert main(["--set", override, "--now", NOW, "fetch"]) == 0
            first = len(CorpusStore("corpus.jsonl").load_corpus())
            assert first > 0
            assert main(["--set", override, "--now", NOW, "fetch"]) == 0
            assert len(CorpusStore("corpus.jsonl").load_corpus()) == first

    def test_score_writes_evaluations_and_updates_status(self, workdir, capsys):
        with FakeNewsServer(sample_articles(18)) as server:
            assert main(["--set", f"news_search.endpoint={server.endpoint}", "--now", NOW, "fetch"]) == 0
        assert main(["--now", NOW, "score"]) == 0
        store = CorpusStore("corpus.jsonl")
        articles = store.load_corpus()
        assert articles and all(a.status is ArticleStatus.SCORED for a in articles)
        assert all(a.relevance_score is not None for a in articles)
        evaluations = Path("reports/evaluations.jsonl").read_text().splitlines()
        assert len(evaluations) == len(articles)
        record = json.loads(evaluations[0])
        assert record["provider"] == "keyword-heuristic"
        assert record["timestamp"] == NOW

        # rescoring is byte-identical: statuses unchanged, same report
        before = Path("reports/evaluations.jsonl").read_bytes()
        assert main(["--now", NOW, "score"]) == 0
        assert Path("reports/evaluations.jsonl").read_bytes() == before

    def test_scripted_root_no_scores_everything_zero(self, workdir, capsys):
        with FakeNewsServer(sample_articles(12)) as server:
            assert main(["--set", f"news_search.endpoint={server.endpoint}", "--now", NOW, "fetch"]) == 0
        (workdir / "answers.yaml").write_text("_default: 'no'\n")
        assert (
            main(
                [
                    "--set",
                    "answer_provider.kind=scripted",
                    "--set",
                    "answer_provider.answers_file=answers.yaml",
                    "--now",
                    NOW,
                    "score",
                ]
            )
            == 0
        )
        records = [
            json.loads(line) for line in Path("reports/evaluations.jsonl").read_text().splitlines()
        ]
        assert records
        assert all(r["score"] == 0.0 for r in records)
        assert all(r["classification"] == "irrelevant" for r in records)
        assert all(r["answers"] == {"q01": "no"} for r in records)


class TestMiningCommands:
    def test_booleanize_then_mine(self, workdir, capsys):
        write_incidents_csv(workdir / "incidents.csv")
        assert main(["booleanize"]) == 0
        data = read_booleanized(workdir / "reports" / "booleanized.json")
        assert "cross_border" in data.variables
        assert main(["mine", "--top-k", "5", "--max-size", "5"]) == 0
        payload = json.loads((workdir / "reports" / "mining.json").read_text())
        assert payload["ranking"] == "abs_youden_j"
        assert payload["rows"][0]["j"] == 1.0
        from laborlens.formulas import parse_formula, truth_table

        best = parse_formula(payload["rows"][0]["formula"])
        separator = parse_formula("cross_border & (high_risk_source | high_risk_product)")
        assert truth_table(best) == truth_table(separator)
        table = (workdir / "reports" / "mining.txt").read_text()
        assert "cross_border" in table

    def test_mine_workers_do_not_change_report(self, workdir):
        write_incidents_csv(workdir / "incidents.csv")
        assert main(["booleanize"]) == 0
        assert main(["mine", "--max-size", "5", "--workers", "1"]) == 0
        single = (workdir / "reports" / "mining.json").read_bytes()
        assert main(["mine", "--max-size", "5", "--workers", "3"]) == 0
        assert (workdir / "reports" / "mining.json").read_bytes() == single

    def test_report_on_empty_dataset_fails_with_degenerate_message(self, workdir, capsys):
        empty = LabeledDataset(default_schema())
        (workdir / "incidents.csv").write_bytes(write_incident_csv(empty))
        assert main(["report"]) == 1
        err = capsys.readouterr().err
        payload = json.loads(err.removeprefix("error: "))
        assert payload["type"] == "DegenerateDatasetError"
        assert payload["stage"] == "report"

    def test_missing_input_aborts_before_outputs(self, workdir, capsys):
        assert main(["mine"]) == 1
        payload = json.loads(capsys.readouterr().err.removeprefix("error: "))
        assert payload["type"] == "FileNotFoundError"
        assert not (workdir / "reports" / "mining.json").exists()


class TestTemporalCommand:
    def write_traces_file(self, path: Path) -> None:
        def steps(a_at, c_at, length=6):
            return tuple({"a": t in a_at, "c": t in c_at} for t in range(length))

        traces = [
            Trace("p1", Label.POSITIVE, steps({0}, {3})),
            Trace("p2", Label.POSITIVE, steps({1}, {3})),
            Trace("n1", Label.NEGATIVE, steps({0}, {5})),
            Trace("n2", Label.NEGATIVE, steps({1}, {5})),
        ]
        path.write_bytes(write_traces(traces))

    def test_mine_with_inferred_bound(self, workdir, capsys):
        self.write_traces_file(workdir / "traces.jsonl")
        assert main(["temporal", "--bounds", "0,1", "--infer", "a:c", "--top-k", "5"]) == 0
        out = capsys.readouterr().out
        assert "t* = 3" in out
        payload = json.loads((workdir / "reports" / "temporal.json").read_text())
        assert payload["inferred_t_star"] == 3
        assert 3 in payload["bounds"]
        assert abs(payload["rows"][0]["j"]) == 1.0
        assert "bounds" in payload["rows"][0]


class TestConfigHandling:
    def test_explicit_missing_config_errors(self, workdir, capsys):
        assert main(["--config", "nope.yaml", "mine"]) == 1
        payload = json.loads(capsys.readouterr().err.removeprefix("error: "))
        assert payload["type"] == "FileNotFoundError"

    def test_bad_threshold_rejected(self, workdir, capsys):
        write_incidents_csv(workdir / "incidents.csv")
        assert main(["--set", "threshold=1.5", "booleanize"]) == 1
        payload = json.loads(capsys.readouterr().err.removeprefix("error: "))
        assert payload["type"] == "ValueError"

    def test_relative_paths_resolve_against_config_dir(self, workdir):
        nested = workdir / "proj"
        nested.mkdir()
        (nested / "laborlens.yaml").write_text("corpus: data/corpus.jsonl\n")
        write_incidents_csv(nested / "incidents.csv")
        assert main(["--config", str(nested / "laborlens.yaml"), "booleanize"]) == 0
        assert (nested / "reports" / "booleanized.json").exists()
