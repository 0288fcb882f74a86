import json
from pathlib import Path

import pytest

import symscreen

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "golden"


def test_sixteen_categories():
    ids = symscreen.category_ids()
    assert len(ids) == 16
    assert ids[0] == "not_going_to_school"
    assert "[[category]]" in symscreen.taxonomy_toml()


def test_score_counts_matches_hand_computation():
    p, r, f1 = symscreen.score_counts("x", 7, 2, 3, 0)
    assert p == pytest.approx(7 / 9)
    assert r == pytest.approx(7 / 10)
    assert f1 == pytest.approx(14 / 19)
    assert symscreen.score_counts("x", 0, 0, 0, 5) == (None, None, None)


def test_auc_brute_force():
    scores = [0.9, 0.8, 0.3, 0.3]
    labels = [1, 0, 1, 0]
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum((a > b) + 0.5 * (a == b) for a in pos for b in neg)
    value, twice_wins, pairs = symscreen.auc(scores, labels)
    assert value == wins / (len(pos) * len(neg))
    assert (twice_wins, pairs) == (5, 4)
    with pytest.raises(symscreen.ValidationError):
        symscreen.auc([0.1, 0.2], [1, 1])


def test_parsers():
    assert symscreen.parse_chat_response("No.") == (False, None)
    present, quote = symscreen.parse_chat_response("Yes: 'stays in his room'")
    assert present and quote == "stays in his room"
    assert symscreen.parse_chat_response("maybe") is None
    assert symscreen.parse_entailment_response("Yes") is True


def test_prompts_match_goldens():
    note = (GOLDEN / "fixture_note.txt").read_text().rstrip("\n")
    assert symscreen.chat_prompt("not_going_to_school", note) == json.loads(
        (GOLDEN / "chat_not_going_to_school.json").read_text()
    )
    assert symscreen.entailment_prompt("no_motivation", note) == (
        GOLDEN / "entailment_no_motivation.txt"
    ).read_text()


def test_truncate():
    assert symscreen.truncate("short", 100) == ("short", False)
    text, cut = symscreen.truncate("word " * 100, 50)
    assert cut and len(text) <= 50


def test_cli_pipeline(tmp_path):
    corpus = tmp_path / "corpus"
    code, _, err = symscreen.run_cli(["synth", "--seed", "3", "--cases", "6", "--controls", "6", "--out", str(corpus)])
    assert code == 0, err
    dets = tmp_path / "dets.jsonl"
    code, _, err = symscreen.run_cli(["extract", "--backend", "mock", "--corpus", str(corpus), "--out", str(dets)])
    assert code == 0, err
    rows = symscreen.evaluate((corpus / "gold.jsonl").read_text(), dets.read_text())
    average = rows[-1]
    assert average["average"] is True
    assert average["precision"] == 1.0 and average["recall"] == 1.0
    assert symscreen.run_cli(["extract", "--backend", "nope", "--corpus", str(corpus), "--out", str(dets)])[0] == 1
