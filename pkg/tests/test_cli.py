import json
from pathlib import Path

import pytest

from dockerspec.cli import main
from dockerspec.corpus_pipeline import read_corpus_records

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestInferSpecCommand:
    def test_tomcat_ffmpeg(self, capsys):
        code, out, _ = run(capsys, "infer-spec", str(FIXTURES / "tomcat-ffmpeg.Dockerfile"))
        assert code == 0
        spec = json.loads(out)
        assert spec["os"] == "any"
        assert spec["pkg_manager"] == "apt"
        assert spec["dependencies"] == ["ffmpeg", "tomcat", "x265"]
        assert spec["downloads_external"] is True

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "infer-spec", "does-not-exist.Dockerfile")
        assert code == 3
        assert err

    def test_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.Dockerfile"
        bad.write_text("definitely not dockerfile syntax\n")
        code, _, err = run(capsys, "infer-spec", str(bad))
        assert code == 1
        assert "error" in err

    def test_inference_incomplete(self, capsys, tmp_path):
        no_from = tmp_path / "nofrom.Dockerfile"
        no_from.write_text("RUN echo hi\n")
        code, _, _ = run(capsys, "infer-spec", str(no_from))
        assert code == 2

    def test_custom_word_lists(self, capsys, tmp_path):
        os_words = tmp_path / "os.txt"
        os_words.write_text("tomcat\n")
        stop_words = tmp_path / "stop.txt"
        stop_words.write_text("slim\n")
        code, out, _ = run(capsys, "infer-spec", str(FIXTURES / "tomcat-alpine.Dockerfile"),
                           "--os-words", str(os_words), "--stop-words", str(stop_words))
        assert code == 0
        # name-level match appends the purely numeric tag words
        assert json.loads(out)["os"] == "tomcat9020"


class TestParseCommand:
    def test_text_format(self, capsys, tmp_path):
        f = tmp_path / "d"
        f.write_text("FROM alpine\n")
        code, out, _ = run(capsys, "parse", str(f))
        assert code == 0
        assert out == "dockerfile\n  FROM\n    alpine\n"

    def test_json_format(self, capsys, tmp_path):
        f = tmp_path / "d"
        f.write_text("FROM alpine\n")
        code, out, _ = run(capsys, "parse", str(f), "--format", "json")
        assert code == 0
        assert json.loads(out)["label"] == "dockerfile"

    def test_shell_error_exit_code(self, capsys, tmp_path):
        f = tmp_path / "d"
        f.write_text("FROM alpine\nRUN echo 'broken\n")
        code, _, _ = run(capsys, "parse", str(f))
        assert code == 1


class TestCorpusCommands:
    def test_build_and_stats(self, capsys, corpus_dir, tmp_path):
        out = tmp_path / "corpus.jsonl"
        code, stdout, _ = run(capsys, "corpus", "build", str(corpus_dir),
                              "--out", str(out), "--seed", "42")
        assert code == 0
        summary = json.loads(stdout)
        assert summary["entries"] == len(read_corpus_records(out))
        assert summary["train"] + summary["eval"] + summary["test"] == summary["entries"]
        for suffix in ("train", "eval", "test", "pretrain"):
            assert (tmp_path / f"corpus.{suffix}.jsonl").exists()

        code, stdout, _ = run(capsys, "corpus", "stats", str(corpus_dir))
        assert code == 0
        stats = json.loads(stdout)
        assert stats["reasons"]["no-comments"] == 1
        assert stats["reasons"]["multi-stage"] == 1
        assert stats["eligible"] > 0

    def test_build_empty_directory(self, capsys, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        code, _, err = run(capsys, "corpus", "build", str(empty),
                           "--out", str(tmp_path / "c.jsonl"))
        assert code == 1
        assert "no eligible Dockerfiles" in err

    def test_build_deterministic_stdout(self, capsys, corpus_dir, tmp_path):
        out = tmp_path / "corpus.jsonl"
        args = ("corpus", "build", str(corpus_dir), "--out", str(out), "--seed", "7")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert first == second


class TestIndexAndGenerate:
    @pytest.fixture()
    def built(self, capsys, corpus_dir, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        index = tmp_path / "index.bin"
        assert main(["corpus", "build", str(corpus_dir), "--out", str(corpus)]) == 0
        assert main(["index", "build", str(corpus), "--out", str(index)]) == 0
        capsys.readouterr()
        return corpus, index

    def test_generate_returns_indexed_dockerfile(self, capsys, built, tmp_path):
        corpus, index = built
        record = read_corpus_records(corpus)[0]
        spec_file = tmp_path / "query.json"
        spec_file.write_text(json.dumps(record["spec"]))
        code, out, _ = run(capsys, "generate", "--spec", str(spec_file),
                           "--index", str(index))
        assert code == 0
        assert out == record["dockerfile"]

    def test_generate_top_k_json(self, capsys, built, tmp_path):
        corpus, index = built
        record = read_corpus_records(corpus)[0]
        spec_file = tmp_path / "query.json"
        spec_file.write_text(json.dumps(record["spec"]))
        code, out, _ = run(capsys, "generate", "--spec", str(spec_file),
                           "--index", str(index), "-k", "3")
        assert code == 0
        hits = json.loads(out)
        assert len(hits) == 3
        assert hits[0]["dockerfile"] == record["dockerfile"]
        assert hits[0]["score"] >= hits[1]["score"] >= hits[2]["score"]

    def test_generate_tfidf_method(self, capsys, built, tmp_path):
        corpus, index = built
        record = read_corpus_records(corpus)[1]
        spec_file = tmp_path / "query.json"
        spec_file.write_text(json.dumps(record["spec"]))
        code, out, _ = run(capsys, "generate", "--spec", str(spec_file),
                           "--index", str(index), "--method", "tfidf")
        assert code == 0
        assert out == record["dockerfile"]

    def test_generate_missing_index(self, capsys, tmp_path):
        spec_file = tmp_path / "query.json"
        spec_file.write_text("{}")
        code, _, _ = run(capsys, "generate", "--spec", str(spec_file),
                         "--index", str(tmp_path / "missing.bin"))
        assert code == 3

    def test_generate_invalid_spec(self, capsys, built, tmp_path):
        _, index = built
        spec_file = tmp_path / "query.json"
        spec_file.write_text('{"os": "alpine"}')
        code, _, err = run(capsys, "generate", "--spec", str(spec_file),
                           "--index", str(index))
        assert code == 1
        assert "missing" in err

    def test_index_build_on_garbage(self, capsys, tmp_path):
        garbage = tmp_path / "corpus.jsonl"
        garbage.write_text("not json\n")
        code, _, _ = run(capsys, "index", "build", str(garbage),
                         "--out", str(tmp_path / "i.bin"))
        assert code == 1


class TestEvaluateCommand:
    @pytest.fixture()
    def dirs(self, tmp_path):
        targets = tmp_path / "targets"
        outputs = tmp_path / "outputs"
        targets.mkdir()
        outputs.mkdir()
        target = ("FROM ubuntu:20.04\n\n# Install nginx\n"
                  "RUN apt-get update && apt-get install -y nginx\nEXPOSE 80\n")
        output = ("FROM ubuntu:20.04\n\n"
                  "RUN apt-get update && apt-get install -y nginx\nEXPOSE 80\n")
        for name in ("a.Dockerfile", "b.Dockerfile"):
            (targets / name).write_text(target)
            (outputs / name).write_text(output)
        return targets, outputs

    def test_single_system_report(self, capsys, dirs, tmp_path):
        targets, outputs = dirs
        report_path = tmp_path / "report.json"
        code, out, _ = run(capsys, "evaluate", "--targets", str(targets),
                           "--outputs", str(outputs), "--report", str(report_path))
        assert code == 0
        payload = json.loads(out)
        system = payload["systems"]["outputs"]
        assert system["evaluated_pairs"] == 2
        assert system["adherence_means"]["dependencies"] == 1.0
        assert "comparisons" not in payload
        assert json.loads(report_path.read_text()) == payload

    def test_multi_system_comparisons(self, capsys, dirs, tmp_path):
        targets, outputs = dirs
        other = tmp_path / "other"
        other.mkdir()
        for name in ("a.Dockerfile", "b.Dockerfile"):
            (other / name).write_text("FROM debian:10-slim\nRUN echo different\n")
        code, out, _ = run(capsys, "evaluate", "--targets", str(targets),
                           "--outputs", str(outputs), "--outputs", str(other))
        assert code == 0
        payload = json.loads(out)
        assert set(payload["systems"]) == {"outputs", "other"}
        assert len(payload["comparisons"]) == 1
        comparison = payload["comparisons"][0]
        assert comparison["systems"] == ["other", "outputs"]
        assert "p_adjusted" in comparison

    def test_usage_error_without_dirs(self, capsys):
        code, _, err = run(capsys, "evaluate")
        assert code == 3

    def test_layers(self, capsys, tmp_path):
        original = tmp_path / "m1.json"
        generated = tmp_path / "m2.json"
        original.write_text(json.dumps(["a", "b", "c", "d"]))
        generated.write_text(json.dumps(["a", "x"]))
        code, out, _ = run(capsys, "evaluate", "layers", "--original", str(original),
                           "--generated", str(generated))
        assert code == 0
        assert json.loads(out) == {"digest_equal": False, "matching_layer_ratio": 0.25}

    def test_layers_with_image_digests(self, capsys, tmp_path):
        original = tmp_path / "m1.json"
        generated = tmp_path / "m2.json"
        manifest = {"image_digest": "sha256:same", "layers": ["a"]}
        original.write_text(json.dumps(manifest))
        generated.write_text(json.dumps(manifest))
        code, out, _ = run(capsys, "evaluate", "layers", "--original", str(original),
                           "--generated", str(generated))
        assert code == 0
        assert json.loads(out) == {"digest_equal": True, "matching_layer_ratio": 1.0}

    def test_layers_bad_manifest(self, capsys, tmp_path):
        original = tmp_path / "m1.json"
        generated = tmp_path / "m2.json"
        original.write_text('{"layers": "zzz"}')
        generated.write_text("[]")
        code, _, _ = run(capsys, "evaluate", "layers", "--original", str(original),
                         "--generated", str(generated))
        assert code == 1


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 3

    def test_help_exits_zero(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == 0
        assert "infer-spec" in out

    def test_subcommand_help(self, capsys):
        for args in (["parse", "--help"], ["corpus", "build", "--help"],
                     ["index", "build", "--help"], ["generate", "--help"],
                     ["evaluate", "--help"], ["evaluate", "layers", "--help"]):
            assert main(args) == 0
        capsys.readouterr()

    def test_config_file_defaults(self, capsys, corpus_dir, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"corpus": {"build": {"seed": 99}}}))
        out = tmp_path / "corpus.jsonl"
        code, stdout, _ = run(capsys, "--config", str(config), "corpus", "build",
                              str(corpus_dir), "--out", str(out))
        assert code == 0
        assert json.loads(stdout)["seed"] == 99

    def test_flags_beat_config(self, capsys, corpus_dir, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"corpus": {"build": {"seed": 99}}}))
        out = tmp_path / "corpus.jsonl"
        code, stdout, _ = run(capsys, "--config", str(config), "corpus", "build",
                              str(corpus_dir), "--out", str(out), "--seed", "5")
        assert code == 0
        assert json.loads(stdout)["seed"] == 5
