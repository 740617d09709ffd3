import json
import math

import pytest

import headlab


def test_version_is_a_string():
    assert isinstance(headlab.__version__, str) and headlab.__version__


def test_tokenize_mixed_script():
    assert headlab.tokenize("春夏 OOTD!") == ["春", "夏", "ootd"]
    assert headlab.detokenize(["big", "sale", "春"]) == "big sale春"


def test_similarity_metrics():
    a, b = ["a", "b", "c"], ["b", "c", "d"]
    assert headlab.similarity(a, b) == 0.5
    assert headlab.similarity(a, a, "lcs") == 1.0
    assert headlab.similarity(["a", "a", "b"], ["a", "b", "b"], "cosine") == pytest.approx(0.8)
    with pytest.raises(ValueError):
        headlab.similarity(a, b, "nope")


def test_rouge_fixture():
    r = headlab.rouge_l(["a", "x", "b"], ["a", "b"])
    assert r["f1"] == pytest.approx(0.8)
    assert headlab.rouge_n(["a", "b"], ["a", "b"], 2)["f1"] == 1.0


def test_psi_and_popularity():
    assert headlab.psi([["a", "b", "c"], ["b", "c", "d"]]) == pytest.approx(0.75)
    assert headlab.popularity_index([9, 99]) == pytest.approx((math.log(10) + math.log(100)) / 2)
    with pytest.raises(headlab.HeadlabError):
        headlab.psi([])


def test_lr_schedule():
    assert headlab.lr_at(100, 100) == pytest.approx(2e-4)
    assert headlab.lr_at(400, 100) == pytest.approx(2e-3 / 20)


def test_synth_read_and_buzzwords(tmp_path):
    text = headlab.synth_corpus(seed=3, n_users=6, n_posts=300, months=14)
    assert text == headlab.synth_corpus(seed=3, n_users=6, n_posts=300, months=14)
    path = tmp_path / "corpus.jsonl"
    path.write_text(text, encoding="utf-8")
    posts = headlab.read_corpus(str(path))
    assert len(posts) == 300
    assert {"id", "user_id", "timestamp", "headline", "article", "likes"} <= set(posts[0])
    entries = headlab.buzzwords(str(path), 4, tf_min=2, tf_max=0.2)
    assert entries
    assert all(stage in {"ratio1", "ratio3", "ratio6", "fill"} for _, stage, _ in entries)


def test_run_cli(tmp_path):
    code, out, err = headlab.run_cli(["sim", "--a", "a b c", "--b", "b c d"])
    assert (code, out, err) == (0, "0.5\n", "")
    code, _, err = headlab.run_cli([])
    assert code == 2 and "Usage" in err
    out_file = tmp_path / "rouge.json"
    (tmp_path / "c.jsonl").write_text(json.dumps({"id": "1", "headline": "a x b"}) + "\n")
    (tmp_path / "r.jsonl").write_text(json.dumps({"id": "1", "headline": "a b"}) + "\n")
    code, _, err = headlab.run_cli(["evaluate", "--candidates", str(tmp_path / "c.jsonl"), "--references",
                                    str(tmp_path / "r.jsonl"), "--out", str(out_file)])
    assert code == 0, err
    assert json.loads(out_file.read_text())["rougeL"]["f1"] == pytest.approx(0.8)
