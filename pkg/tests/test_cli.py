import json

import pytest

from topiclabel.cli import main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out", str(out), "--topics", "10", "--text-dim", "8",
                 "--visual-dim", "24", "--seed", "1"]) == 0
    return out


def data_args(d):
    return ["--embeddings", str(d / "embeddings.txt"), "--topics", str(d / "topics.tsv"),
            "--candidates", str(d / "candidates.tsv"), "--visuals", str(d / "visuals.txt"),
            "--text-dim", "8", "--visual-dim", "24"]


def test_validate_ok(corpus, capsys):
    assert main(["validate", *data_args(corpus)]) == 0
    out = capsys.readouterr().out
    assert "topics\t10" in out and "candidates\t200" in out
    assert "token_coverage\t1.0000" in out


def test_validate_bad_link_exit_1(corpus, tmp_path, capsys):
    cands = tmp_path / "c.tsv"
    cands.write_text((corpus / "candidates.tsv").read_text() + "t9999\timg000000\t1.0\tx\n")
    args = data_args(corpus)
    args[args.index("--candidates") + 1] = str(cands)
    assert main(["validate", *args]) == 1
    assert "t9999" in capsys.readouterr().err


def test_missing_file_exit_1(corpus):
    args = data_args(corpus)
    args[args.index("--topics") + 1] = str(corpus / "nope.tsv")
    assert main(["validate", *args]) == 1


def test_usage_error_exit_2():
    assert main(["train"]) == 2
    assert main(["no-such-command"]) == 2


def test_train_score_roundtrip(corpus, tmp_path, capsys):
    model = tmp_path / "m.npz"
    assert main(["train", *data_args(corpus), "--epochs", "2", "--out", str(model)]) == 0
    capsys.readouterr()
    score_args = ["score", "--model", str(model), "--embeddings", str(corpus / "embeddings.txt"),
                  "--visuals", str(corpus / "visuals.txt")]
    first_topic = (corpus / "topics.tsv").read_text().splitlines()[0].split("\t")
    terms = ",".join(first_topic[1:])
    assert main([*score_args, "--terms", terms, "--caption", "hello", "--image-id",
                 "img000000"]) == 0
    single = float(capsys.readouterr().out.strip())
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(f"{terms}\timg000000\thello\n")
    assert main([*score_args, "--pairs", str(pairs)]) == 0
    bulk = capsys.readouterr().out.strip().split("\t")
    assert float(bulk[2]) == pytest.approx(single, abs=1e-6)
    # visual vector required but unknown image id
    assert main([*score_args, "--terms", terms, "--caption", "x", "--image-id", "zzz"]) == 1


def test_cv_and_report(corpus, tmp_path, capsys):
    js, tsv = tmp_path / "r.json", tmp_path / "r.tsv"
    assert main(["cv", *data_args(corpus), "--epochs", "1", "--methods", "dnn,local-ppr",
                 "--out", str(js), "--report", str(tsv)]) == 0
    table = capsys.readouterr().out
    assert "local-ppr" in table and "reference (published)" in table
    assert json.loads(js.read_text())["methods"] == ["dnn", "local-ppr"]
    assert main(["report", str(js), "--tsv"]) == 0
    assert capsys.readouterr().out == tsv.read_text()


def test_baseline_command(corpus, capsys):
    assert main(["baseline", *data_args(corpus), "--method", "global-ppr", "--top-m", "5"]) == 0
    assert "global-ppr" in capsys.readouterr().out


def test_bad_method_exit_1(corpus):
    assert main(["cv", *data_args(corpus), "--methods", "svm"]) == 1
