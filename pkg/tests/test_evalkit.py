import random
import unicodedata
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsynth.evalkit import mismatches, preprocess, read_pairs, to_gray, word_accuracy


def test_preprocess_identity_on_target_size():
    img = np.random.default_rng(0).integers(0, 256, (32, 100), dtype=np.uint8)
    out = preprocess(img)
    assert out.tobytes() == img.tobytes()


@pytest.mark.parametrize("shape", [(64, 200), (10, 13), (32, 400), (200, 50), (64, 200, 3), (40, 90, 4)])
def test_preprocess_dims(shape):
    img = np.random.default_rng(1).integers(0, 256, shape, dtype=np.uint8)
    out = preprocess(img)
    assert out.shape == (32, 100) and out.dtype == np.uint8


@pytest.mark.parametrize("value", [0, 1, 77, 254, 255])
def test_preprocess_constant(value):
    for shape in ((7, 9), (64, 200), (300, 31)):
        out = preprocess(np.full(shape, value, np.uint8))
        assert np.all(np.abs(out.astype(int) - value) <= 1)


def test_preprocess_idempotent():
    img = np.random.default_rng(2).integers(0, 256, (57, 143, 3), dtype=np.uint8)
    once = preprocess(img)
    assert np.array_equal(preprocess(once), once)


def test_preprocess_rejects_empty():
    with pytest.raises(ValueError):
        preprocess(np.zeros((0, 10), np.uint8))


def test_gray_weights():
    px = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255], [10, 20, 30]]], np.uint8)
    # 0.299 R + 0.587 G + 0.114 B, rounded
    assert to_gray(px).tolist() == [[76, 150, 29, round(0.299 * 10 + 0.587 * 20 + 0.114 * 30)]]


def test_accuracy_all_match():
    ref = [(str(i), w) for i, w in enumerate(["台北", "高雄", "新竹"])]
    assert word_accuracy(ref, ref) == 1


def test_accuracy_seven_of_ten():
    ref = [(f"id{i}", f"字{i}") for i in range(10)]
    pred = [(k, v if i < 7 else v + "x") for i, (k, v) in enumerate(ref)]
    acc = word_accuracy(pred, ref)
    assert acc == Fraction(7, 10) and float(acc) == 0.7
    assert [m[0] for m in mismatches(pred, ref)] == ["id7", "id8", "id9"]


def test_accuracy_permutation_invariant():
    rng = random.Random(0)
    ref = [(f"id{i}", f"字{i % 7}") for i in range(50)]
    pred = [(k, v if rng.random() < 0.6 else "錯") for k, v in ref]
    base = word_accuracy(pred, ref)
    for _ in range(10):
        p2, r2 = pred[:], ref[:]
        rng.shuffle(p2)
        rng.shuffle(r2)
        assert word_accuracy(p2, r2) == base


@settings(max_examples=60)
@given(st.lists(st.tuples(st.text(min_size=0, max_size=4), st.booleans()), min_size=1, max_size=30), st.randoms())
def test_accuracy_matches_count(items, rnd):
    ref = [(str(i), t) for i, (t, _) in enumerate(items)]
    pred = [(str(i), t if ok else t + "\u0000") for i, (t, ok) in enumerate(items)]
    rnd.shuffle(pred)
    assert word_accuracy(pred, ref) == Fraction(sum(ok for _, ok in items), len(items))


def _nfc_accuracy(pred, ref):
    """Reference metric that normalizes both sides to NFC first."""
    p = {k: unicodedata.normalize("NFC", v) for k, v in pred}
    r = {k: unicodedata.normalize("NFC", v) for k, v in ref}
    return Fraction(sum(p[k] == r[k] for k in r), len(r))


def test_raw_codepoints_differ_from_nfc():
    # U+F900 is a CJK compatibility ideograph whose NFC form is U+8C48
    ref = [("a", "\uf900"), ("b", "台北"), ("c", "e\u0301")]
    pred = [("a", "\u8c48"), ("b", "台北"), ("c", "\u00e9")]
    assert unicodedata.normalize("NFC", "\uf900") == "\u8c48"
    assert word_accuracy(pred, ref) == Fraction(1, 3)
    assert _nfc_accuracy(pred, ref) == 1


def test_accuracy_errors():
    ref = [("a", "x"), ("b", "y")]
    with pytest.raises(ValueError, match="duplicate"):
        word_accuracy([("a", "x"), ("a", "y")], ref)
    with pytest.raises(ValueError, match="no reference"):
        word_accuracy([("a", "x"), ("z", "y")], ref)
    with pytest.raises(ValueError, match="no prediction"):
        word_accuracy([("a", "x")], ref)
    with pytest.raises(ValueError):
        word_accuracy([], [])


def test_read_pairs(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("1\t台北\n2\t\n\n3\t高雄\r\n", encoding="utf-8")
    assert read_pairs(p) == [("1", "台北"), ("2", ""), ("3", "高雄")]
    p.write_text("oops\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":1:"):
        read_pairs(p)
