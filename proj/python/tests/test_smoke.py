import json
import math

import pytest

import conceptrank as cr


def test_text_helpers():
    assert cr.tokenize("Dense-Retrieval, a BM25 study") == ["dense", "retrieval", "bm25", "study"]
    assert cr.canonicalize("  Graph   Neural Networks ") == "graph neural networks"


def test_cosine_and_errors():
    assert cr.cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cr.cosine([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cr.cosine([1.0], [1.0, 2.0])


def test_bm25_and_fusion():
    papers = [
        ("d1", "sparse retrieval", "bm25 ranking of text"),
        ("d2", "graph models", "neural message passing"),
        ("d3", "dense retrieval", "neural ranking models"),
    ]
    hits = cr.bm25_search(papers, "neural ranking", 10)
    assert hits[0][0] == "d3"
    assert all(score > 0 for _, score in hits)
    fused = cr.hybrid_fuse(hits, [("d2", 0.9), ("d3", 0.1)], 10)
    assert {pid for pid, _ in fused} == {"d1", "d2", "d3"}


def test_recall():
    assert cr.recall_at_k(["a", "b", "c"], {"a", "c"}, 2) == 0.5


def test_prompts_and_parsing():
    assert cr.parse_tagged_list("x <ans>Topic A, topic a , B</ans>", "ans") == ["topic a", "b"]
    with pytest.raises(cr.ConceptrankError):
        cr.parse_tagged_list("no tags here", "ans")
    prompt = cr.render_prompt("core_concepts_no_corpus", {"q": "sparse retrieval"})
    assert "sparse retrieval" in prompt
    assert len(cr.prompt_hash(prompt)) == 16


def test_predict_proba_identity():
    import numpy as np

    W = np.eye(2)
    topics = np.array([[1.0, 0.0]])
    p = cr.predict_proba(W, topics, np.array([1.0, 0.0]), 0)
    assert p == pytest.approx(1.0 / (1.0 + math.exp(-math.e)))


def test_semantic_score():
    vectors = {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]}
    assert cr.semantic_score(["a", "b"], ["a"], ["b"], vectors) == pytest.approx(1.0)
    assert cr.semantic_score(["a"], [], [], vectors) == 0.0
    assert cr.semantic_score(["a"], ["c"], [], vectors) == pytest.approx(math.sqrt(0.5))


def test_synth_and_eval(tmp_path):
    code, _, err = cr.run_cli(
        ["synth", "--out", str(tmp_path), "--seed", "1", "--docs", "80", "--topics", "4"]
    )
    assert code == 0, err
    report = tmp_path / "report.json"
    code, out, err = cr.run_cli(
        ["eval", "--config", str(tmp_path / "config.json"), "--out", str(report)]
    )
    assert code == 0, err
    data = json.loads(report.read_text())
    assert data["summary"]["evaluated"] == 4
    assert 0.0 <= data["summary"]["recall"]["R@10"] <= 1.0


def test_cli_usage_error():
    code, _, err = cr.run_cli(["nonsense"])
    assert code == 1
    assert err
