import json

import pytest

from queryboost.cli import (EXIT_CACHE_MISS, EXIT_FORMAT, EXIT_MISSING_FILE, EXIT_OK,
                            EXIT_USAGE, main)
from queryboost.synthetic import make_synthetic_dataset, write_dataset


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    ds = make_synthetic_dataset(num_topics=4, num_docs=60)
    paths = write_dataset(ds, out)
    rc = main(["index", "--corpus", str(paths["corpus"]),
               "--out", str(out / "index.json")])
    assert rc == EXIT_OK
    paths["index"] = out / "index.json"
    paths["dir"] = out
    return paths


class TestIndexCommand:
    def test_writes_index_and_manifest(self, dataset_dir):
        assert dataset_dir["index"].exists()
        manifest = json.loads(
            (dataset_dir["dir"] / "index.json.manifest.json").read_text())
        assert manifest["outputs"] == [str(dataset_dir["index"])]

    def test_missing_corpus_exit_code(self, tmp_path):
        rc = main(["index", "--corpus", str(tmp_path / "nope.jsonl"),
                   "--out", str(tmp_path / "i.json")])
        assert rc == EXIT_MISSING_FILE

    def test_malformed_corpus_exit_code(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        rc = main(["index", "--corpus", str(bad), "--out", str(tmp_path / "i.json")])
        assert rc == EXIT_FORMAT


class TestSearchCommand:
    def test_writes_run(self, dataset_dir, tmp_path):
        out_run = tmp_path / "sparse.run"
        rc = main(["search", "--index", str(dataset_dir["index"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--out", str(out_run)])
        assert rc == EXIT_OK
        assert out_run.exists()
        assert (tmp_path / "sparse.run.manifest.json").exists()

    def test_cache_miss_exit_code(self, dataset_dir, tmp_path):
        empty_cache = tmp_path / "empty.jsonl"
        empty_cache.write_text("")
        rc = main(["search", "--index", str(dataset_dir["index"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(empty_cache),
                   "--out", str(tmp_path / "x.run")])
        assert rc == EXIT_CACHE_MISS

    def test_constant_repetition_flag(self, dataset_dir, tmp_path):
        rc = main(["search", "--index", str(dataset_dir["index"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--t", "5", "--out", str(tmp_path / "t.run")])
        assert rc == EXIT_OK


class TestPipelineCommand:
    def test_writes_three_runs(self, dataset_dir, tmp_path):
        prefix = tmp_path / "out"
        rc = main(["pipeline", "--index", str(dataset_dir["index"]),
                   "--corpus", str(dataset_dir["corpus"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--out-prefix", str(prefix)])
        assert rc == EXIT_OK
        for stage in ("bm25", "pre", "post"):
            assert (tmp_path / f"out.{stage}.run").exists()

    def test_k_reciprocal_zero_rejected(self, dataset_dir, tmp_path):
        rc = main(["pipeline", "--index", str(dataset_dir["index"]),
                   "--corpus", str(dataset_dir["corpus"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--alpha", "0", "--k-reciprocal", "0",
                   "--out-prefix", str(tmp_path / "o")])
        assert rc == EXIT_USAGE


class TestEvalCommand:
    def test_ideal_run_scores_one(self, tmp_path, capsys):
        qrels = tmp_path / "qrels.txt"
        qrels.write_text("q1 0 d1 3\nq1 0 d2 1\n")
        run = tmp_path / "ideal.run"
        run.write_text("q1 Q0 d1 1 2.000000 t\nq1 Q0 d2 2 1.000000 t\n")
        rc = main(["eval", "--run", str(run), "--qrels", str(qrels), "--k", "10"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "mean\t1.000000" in out

    def test_end_to_end_eval_of_pipeline_run(self, dataset_dir, tmp_path, capsys):
        prefix = tmp_path / "e2e"
        assert main(["pipeline", "--index", str(dataset_dir["index"]),
                     "--corpus", str(dataset_dir["corpus"]),
                     "--queries", str(dataset_dir["queries"]),
                     "--cache", str(dataset_dir["cache"]),
                     "--out-prefix", str(prefix)]) == EXIT_OK
        rc = main(["eval", "--run", str(tmp_path / "e2e.post.run"),
                   "--qrels", str(dataset_dir["qrels"])])
        assert rc == EXIT_OK
        mean_line = [l for l in capsys.readouterr().out.splitlines()
                     if "mean" in l][-1]
        assert float(mean_line.split("\t")[-1]) > 0.9


class TestAnalyzeCommand:
    def test_overlap_report(self, dataset_dir, capsys):
        rc = main(["analyze", "--index", str(dataset_dir["index"]),
                   "--corpus", str(dataset_dir["corpus"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--qrels", str(dataset_dir["qrels"])])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "gt_pse_overlap" in out


class TestSweepCommand:
    def test_beta_sweep_writes_jsonl(self, dataset_dir, tmp_path, capsys):
        out = tmp_path / "sweep.jsonl"
        rc = main(["sweep", "--axis", "beta", "--values", "2", "4",
                   "--index", str(dataset_dir["index"]),
                   "--corpus", str(dataset_dir["corpus"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--qrels", str(dataset_dir["qrels"]),
                   "--out", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        assert {json.loads(l)["value"] for l in lines} == {2, 4}

    def test_n_refs_sweep_includes_zero(self, dataset_dir, tmp_path):
        rc = main(["sweep", "--axis", "n_refs", "--values", "0", "1",
                   "--index", str(dataset_dir["index"]),
                   "--corpus", str(dataset_dir["corpus"]),
                   "--queries", str(dataset_dir["queries"]),
                   "--cache", str(dataset_dir["cache"]),
                   "--qrels", str(dataset_dir["qrels"])])
        assert rc == EXIT_OK


class TestConfigFile:
    def test_config_provides_defaults(self, dataset_dir, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"k": 5}))
        qrels = tmp_path / "qrels.txt"
        qrels.write_text("q1 0 d1 1\n")
        run = tmp_path / "r.run"
        run.write_text("q1 Q0 d1 1 1.000000 t\n")
        rc = main(["--config", str(cfg), "eval", "--run", str(run),
                   "--qrels", str(qrels)])
        assert rc == EXIT_OK
        assert "ndcg@5" in capsys.readouterr().out

    def test_missing_config(self, tmp_path):
        rc = main(["--config", str(tmp_path / "nope.json"), "eval",
                   "--run", "x", "--qrels", "y"])
        assert rc == EXIT_MISSING_FILE


def test_unknown_flag_exits_2(dataset_dir, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--run", "x", "--qrels", "y", "--bogus"])
    assert exc.value.code == EXIT_USAGE
