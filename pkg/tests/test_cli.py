import math

import numpy as np
import pytest

from spanparser.cli import main, parse_disable_spec
from spanparser.config import ConfigError
from spanparser.lexical import write_vector_file
from spanparser.toydata import toy_treebank
from spanparser.trees import load_trees, parse_bracketed, save_trees

CONFIG = """\
# tiny model so command tests stay fast
num_layers = 1
d_model = 16
num_heads = 2
d_k = 8
d_v = 8
d_ff = 24
span_hidden = 12
variant = factored
max_sentence_length = 24
mode = tags

batch_size = 8
base_lr = 0.004
warmup_batches = 4
evals_per_epoch = 1
max_epochs = 1
seed = 0
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    trees = toy_treebank(20, seed=1)
    save_trees(trees, root / "train.txt")
    save_trees(trees[:5], root / "dev.txt")
    (root / "model.cfg").write_text(CONFIG)
    with open(root / "dev.tagged", "w") as fh:
        for t in trees[:5]:
            fh.write(" ".join("%s_%s" % (w, tag)
                              for w, tag in t.sentence()) + "\n")
    code = main(["train", str(root / "train.txt"), str(root / "dev.txt"),
                 "--config", str(root / "model.cfg"),
                 "--out", str(root / "model.ckpt"), "--quiet"])
    assert code == 0
    return root


def test_train_writes_checkpoint_and_progress(tmp_path, capsys):
    trees = toy_treebank(8, seed=2)
    save_trees(trees, tmp_path / "train.txt")
    save_trees(trees[:3], tmp_path / "dev.txt")
    (tmp_path / "model.cfg").write_text(CONFIG)
    code = main(["train", str(tmp_path / "train.txt"),
                 str(tmp_path / "dev.txt"),
                 "--config", str(tmp_path / "model.cfg"),
                 "--out", str(tmp_path / "m.ckpt"),
                 "--set", "max_epochs=2", "--set", "batch_size=4",
                 "--log", str(tmp_path / "train.log")])
    assert code == 0
    out = capsys.readouterr().out
    assert "# parameters" in out
    assert "# batches\tlr\ttrain_loss\tdev_f1" in out
    assert "# best dev F1" in out
    assert "# override max_epochs=2" in out
    assert (tmp_path / "m.ckpt").exists()
    log = (tmp_path / "train.log").read_text()
    assert "# config" in log
    # two epochs, one eval each: two data rows
    rows = [l for l in log.splitlines() if l and not l.startswith("#")]
    assert len(rows) == 2
    assert all(len(r.split("\t")) == 4 for r in rows)


def test_train_quiet_suppresses_stdout(workdir, capsys):
    capsys.readouterr()
    # the fixture already trained with --quiet; train again quickly to probe
    code = main(["train", str(workdir / "train.txt"), str(workdir / "dev.txt"),
                 "--config", str(workdir / "model.cfg"),
                 "--out", str(workdir / "quiet.ckpt"),
                 "--set", "max_epochs=0", "--quiet"])
    assert code == 0
    assert capsys.readouterr().out == ""


def test_parse_outputs_wellformed_trees(workdir, tmp_path):
    out_path = tmp_path / "pred.txt"
    code = main(["parse", str(workdir / "model.ckpt"),
                 str(workdir / "dev.tagged"), "--out", str(out_path)])
    assert code == 0
    preds = load_trees(out_path)
    gold = load_trees(workdir / "dev.txt")
    assert len(preds) == len(gold)
    for p, g in zip(preds, gold):
        assert p.sentence() == g.sentence()


def test_parse_is_deterministic(workdir, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert main(["parse", str(workdir / "model.ckpt"),
                     str(workdir / "dev.tagged"), "--out", str(path)]) == 0
    assert a.read_text() == b.read_text()


def test_parse_to_stdout(workdir, capsys):
    code = main(["parse", str(workdir / "model.ckpt"),
                 str(workdir / "dev.tagged")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("(")
    assert len(out.strip().splitlines()) == 5


def test_parse_records_failures_without_aborting(workdir, tmp_path):
    bad = tmp_path / "bad.tagged"
    words = " ".join("w%d_NN" % i for i in range(40))  # beyond max length
    bad.write_text("the_DT cat_NN\n%s\ndog_NN ran_VB\n" % words)
    out_path = tmp_path / "out.txt"
    code = main(["parse", str(workdir / "model.ckpt"), str(bad),
                 "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("(")
    assert lines[1].startswith("#PARSE-ERROR 1 ")
    assert lines[2].startswith("(")


def test_eval_reports_and_tsv(workdir, tmp_path, capsys):
    pred = tmp_path / "pred.txt"
    main(["parse", str(workdir / "model.ckpt"), str(workdir / "dev.tagged"),
          "--out", str(pred)])
    capsys.readouterr()
    code = main(["eval", str(pred), str(workdir / "dev.txt"), "--tsv"])
    assert code == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 7
    assert out[0].startswith("gold brackets")
    assert out[5].startswith("labeled F1")
    assert len(out[6].split("\t")) == 3


def test_eval_self_is_perfect(workdir, capsys):
    code = main(["eval", str(workdir / "dev.txt"), str(workdir / "dev.txt")])
    assert code == 0
    out = capsys.readouterr().out
    assert "labeled F1          100.00" in out


def test_eval_count_mismatch_is_runtime_error(workdir, tmp_path, capsys):
    short = tmp_path / "short.txt"
    save_trees(load_trees(workdir / "dev.txt")[:2], short)
    code = main(["eval", str(short), str(workdir / "dev.txt")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_2(workdir, tmp_path, capsys):
    assert main(["parse", str(tmp_path / "missing.ckpt"),
                 str(workdir / "dev.tagged")]) == 2
    assert main(["bogus-command"]) == 2
    assert main([]) == 2
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("no_such_key = 1\n")
    assert main(["train", str(workdir / "train.txt"),
                 str(workdir / "dev.txt"), "--config", str(bad_cfg),
                 "--out", str(tmp_path / "x.ckpt")]) == 2
    capsys.readouterr()


def test_analyze_window_table(workdir, tmp_path):
    out_path = tmp_path / "win.tsv"
    code = main(["analyze-window", str(workdir / "model.ckpt"),
                 str(workdir / "dev.txt"), "--distances", "0,2,inf",
                 "--mode", "strict", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == "# distance\tmode\tF1"
    assert len(lines) == 4
    dists = [l.split("\t")[0] for l in lines[1:]]
    assert dists == ["0", "2", "inf"]
    for line in lines[1:]:
        float(line.split("\t")[2])


def test_analyze_window_both_modes(workdir, tmp_path):
    out_path = tmp_path / "win2.tsv"
    code = main(["analyze-window", str(workdir / "model.ckpt"),
                 str(workdir / "dev.txt"), "--distances", "1",
                 "--mode", "both", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert [l.split("\t")[1] for l in lines[1:]] == ["strict", "relaxed"]


def test_analyze_window_bad_distance(workdir, capsys):
    assert main(["analyze-window", str(workdir / "model.ckpt"),
                 str(workdir / "dev.txt"), "--distances", "-3"]) == 2
    capsys.readouterr()


def test_parse_disable_spec_layer_subsets():
    c = parse_disable_spec("content:last2", 4)
    assert c.disable_content == (True, True, False, False)
    assert c.disable_position == (False, False, False, False)
    c = parse_disable_spec("content:none,position:first1", 3)
    assert c.disable_content == (True, True, True)
    assert c.disable_position == (False, True, True)
    c = parse_disable_spec("position:all", 2)
    assert c.disable_position == (False, False)
    c = parse_disable_spec("", 2)
    assert c.disable_content == (False, False)
    c = parse_disable_spec("content:first9", 2)  # clamps to the stack
    assert c.disable_content == (False, False)
    with pytest.raises(ConfigError):
        parse_disable_spec("tone:all", 2)
    with pytest.raises(ConfigError):
        parse_disable_spec("content-last4", 2)
    with pytest.raises(ConfigError):
        parse_disable_spec("content:middle2", 2)


def test_analyze_disable_table(workdir, tmp_path):
    out_path = tmp_path / "dis.tsv"
    code = main(["analyze-disable", str(workdir / "model.ckpt"),
                 str(workdir / "dev.txt"),
                 "--spec", "content:all,position:all",
                 "--spec", "content:none",
                 "--spec", "position:none", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == "# spec\tF1"
    assert len(lines) == 4
    baseline = float(lines[1].split("\t")[1])
    assert 0.0 <= baseline <= 100.0


def test_analyze_disable_default_is_baseline(workdir, tmp_path):
    out_path = tmp_path / "dis2.tsv"
    code = main(["analyze-disable", str(workdir / "model.ckpt"),
                 str(workdir / "dev.txt"), "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("content:all,position:all\t")


def test_dump_attention_rows_are_distributions(workdir, tmp_path):
    out_path = tmp_path / "att.tsv"
    code = main(["dump-attention", str(workdir / "model.ckpt"),
                 "--text", "the_DT cat_NN sat_VB", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("# tree (")
    assert lines[1] == "# tokens <start> the cat sat <stop>"
    assert lines[2] == "# layer\thead\tquery\tkey\tprob"
    rows = [l.split("\t") for l in lines[3:]]
    T = 5
    assert len(rows) == 1 * 2 * T * T  # layers * heads * T * T
    sums = {}
    for layer, head, q, k, p in rows:
        sums.setdefault((layer, head, q), 0.0)
        sums[(layer, head, q)] += float(p)
    for total in sums.values():
        assert total == pytest.approx(1.0, abs=1e-6)


def test_dump_attention_window_zeroes_far_pairs(workdir, tmp_path):
    out_path = tmp_path / "attw.tsv"
    code = main(["dump-attention", str(workdir / "model.ckpt"),
                 "--text", "the_DT cat_NN sat_VB down_RB",
                 "--window", "1:strict", "--out", str(out_path)])
    assert code == 0
    for line in out_path.read_text().splitlines()[3:]:
        layer, head, q, k, p = line.split("\t")
        if abs(int(q) - int(k)) > 1:
            assert float(p) == 0.0


def test_dump_attention_input_flag_and_errors(workdir, tmp_path, capsys):
    out_path = tmp_path / "atti.tsv"
    code = main(["dump-attention", str(workdir / "model.ckpt"),
                 "--input", str(workdir / "dev.tagged"),
                 "--out", str(out_path)])
    assert code == 0
    assert out_path.read_text().startswith("# tree (")
    assert main(["dump-attention", str(workdir / "model.ckpt")]) == 2
    assert main(["dump-attention", str(workdir / "model.ckpt"),
                 "--text", "a_DT", "--input",
                 str(workdir / "dev.tagged")]) == 2
    assert main(["dump-attention", str(workdir / "model.ckpt"),
                 "--text", "a_DT", "--window", "oops"]) == 2
    capsys.readouterr()


def test_external_mode_through_cli(tmp_path, capsys):
    trees = toy_treebank(6, seed=3)
    save_trees(trees, tmp_path / "train.txt")
    save_trees(trees[:2], tmp_path / "dev.txt")
    cfg = CONFIG.replace("mode = tags", "mode = external\nexternal_dim = 5")
    (tmp_path / "model.cfg").write_text(cfg)
    rng = np.random.default_rng(0)
    write_vector_file(tmp_path / "train.vec",
                      [rng.standard_normal((len(t.sentence()), 5))
                       for t in trees])
    write_vector_file(tmp_path / "dev.vec",
                      [rng.standard_normal((len(t.sentence()), 5))
                       for t in trees[:2]])
    code = main(["train", str(tmp_path / "train.txt"),
                 str(tmp_path / "dev.txt"),
                 "--config", str(tmp_path / "model.cfg"),
                 "--out", str(tmp_path / "m.ckpt"),
                 "--train-vectors", str(tmp_path / "train.vec"),
                 "--dev-vectors", str(tmp_path / "dev.vec"), "--quiet"])
    assert code == 0
    with open(tmp_path / "dev.tagged", "w") as fh:
        for t in trees[:2]:
            fh.write(" ".join("%s_%s" % (w, g) for w, g in t.sentence()) + "\n")
    code = main(["parse", str(tmp_path / "m.ckpt"),
                 str(tmp_path / "dev.tagged"),
                 "--vectors", str(tmp_path / "dev.vec"),
                 "--out", str(tmp_path / "pred.txt")])
    assert code == 0
    assert len(load_trees(tmp_path / "pred.txt")) == 2
    capsys.readouterr()
