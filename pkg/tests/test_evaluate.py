import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwejoint.cupt import MweInstance as M, extract_mwes, read_cupt, with_mwes
from mwejoint.evaluate import (
    AlignmentError, build_seen_index, evaluate, lemma_key, mwe_based_prf, seen_ratio_correlation,
    token_based_prf, unseen_prf, variant_f1, variant_prf,
)
from mwejoint.tensor import DegenerateInputError
from mwejoint.toy import make_sentence
from oracles import exhaustive_overlap

EVAL = Path(__file__).parent / "fixtures" / "eval"

# unseen % and global MWE-based F1 reported for 14 languages
UNSEEN = [37, 31, 15, 22, 69, 60, 45, 29, 22, 24, 7, 31, 26, 38]
GLOBAL_F1 = [76.17, 72.62, 80.03, 79.42, 30.07, 48.30, 73.62, 63.76, 81.02, 73.34, 90.46, 71.58, 69.46, 69.63]

# Hand-scored fixture.  Train: give-a-go (contiguous), make-decision,
# take-walk, kick-bucket.  Gold: give..a go (gapped, variant), made decision
# (identical), took..walk (variant), pulled..leg (unseen), paid attention
# (unseen).  Predictions: {3,7} in s1 (wrong, unseen lemmas give+go), s2-s4
# exact, {3,4} in s5 (wrong, unseen lemmas attention+today).
#   global   3/5, 3/5
#   unseen   gold {s4, s5}; preds s4 (match) + the two wrong unseen ones -> P 1/3, R 1/2, F1 0.4
#   variant  gold {s1, s3}; only the s3 prediction qualifies -> P 1, R 1/2, F1 2/3
#   token    overlaps 2+2+2+2+1 = 9, |pred| 10, |gold| 11 -> F1 18/21
EXPECTED = {
    "global.P": "60.00", "global.R": "60.00", "global.F1": "60.00",
    "unseen.P": "33.33", "unseen.R": "50.00", "unseen.F1": "40.00",
    "variant.F1": "66.67",
    "token.P": "90.00", "token.R": "81.82", "token.F1": "85.71",
    "category.VID.P": "50.00", "category.VID.F1": "50.00",
    "category.LVC.full.P": "66.67", "category.LVC.full.R": "66.67",
    "count.gold": "5", "count.predicted": "5", "count.unseen_gold": "2", "count.variant_gold": "2",
    "count.discontinuous_gold": "4", "count.single_token_gold": "0", "flags": "none",
}


def load(name):
    return read_cupt(EVAL / f"{name}.cupt")


def test_hand_scored_fixture():
    report = dict(evaluate(load("gold"), load("pred"), load("train")).key_values())
    for k, v in EXPECTED.items():
        assert report[k] == v, k


def test_mixed_fixture_with_four_predictions():
    gold, pred, train = load("gold"), load("pred"), load("train")
    pred[2] = with_mwes(pred[2], [])
    index = build_seen_index(train)
    p, r, f = unseen_prf(gold, pred, index)
    assert (p, r) == (1 / 3, 1 / 2)
    assert variant_prf(gold, pred, index).n_pred == 0


def test_mwe_based_basics():
    a = M("VID", (3, 6, 7))
    assert tuple(mwe_based_prf([[a]], [[a]])) == (1.0, 1.0, 1.0)
    b = M("LVC.full", (1, 2))
    assert tuple(mwe_based_prf([[a, b]], [[a]])) == (1.0, 0.5, 2 / 3)
    assert mwe_based_prf([[a]], [[M("VID", (3, 6))]]).n_correct == 0
    # category ignored globally, respected per category
    assert mwe_based_prf([[a]], [[M("IRV", (3, 6, 7))]]).f1 == 1.0
    assert mwe_based_prf([[a]], [[M("IRV", (3, 6, 7))]], category="VID").f1 == 0.0


def test_disjoint_sets_and_flags():
    s = mwe_based_prf([[M("VID", (1, 2))]], [[M("VID", (3, 4))]])
    assert tuple(s) == (0.0, 0.0, 0.0)
    empty = mwe_based_prf([[M("VID", (1, 2))]], [[]])
    assert empty.empty_pred and empty.f1 == 0.0
    with pytest.raises(AlignmentError):
        mwe_based_prf([[]], [])


def test_token_based_basics():
    g = M("VID", (3, 6, 7))
    assert token_based_prf([[g]], [[g]]).n_correct == 3
    s = token_based_prf([[g]], [[M("VID", (3, 6))]])
    assert s.n_correct == 2 and s.precision == 1.0 and s.recall == pytest.approx(2 / 3)


def test_token_pairing_picks_the_larger_overlap():
    gold = [M("VID", (1, 2)), M("LVC.full", (3, 4, 5))]
    pred = [M("VID", (2, 3, 4))]
    assert token_based_prf([gold], [pred]).n_correct == exhaustive_overlap(gold, pred) == 2


def test_token_pairing_beats_greedy_when_needed():
    gold = [M("VID", (1, 2, 3)), M("VID", (4, 5))]
    pred = [M("VID", (2, 3, 4, 5)), M("VID", (1, 2))]
    # greedy would pair the first prediction with the first gold (3) and stop at 3
    assert token_based_prf([gold], [pred]).n_correct == exhaustive_overlap(gold, pred) == 4


@st.composite
def instance_sets(draw):
    out = []
    for _ in range(draw(st.integers(0, 3))):
        out.append(M("VID", tuple(sorted(draw(st.sets(st.integers(1, 8), min_size=1, max_size=4))))))
    return out


@settings(max_examples=200, deadline=None)
@given(instance_sets(), instance_sets())
def test_token_pairing_is_optimal(gold, pred):
    assert token_based_prf([gold], [pred]).n_correct == exhaustive_overlap(gold, pred)


def test_exact_predictions_score_one_on_both_measures():
    g = [[M("VID", (1, 3)), M("IRV", (2,))]]
    assert token_based_prf(g, g).f1 == mwe_based_prf(g, g).f1 == 1.0


def sent(words, lemmas, mwes, sid="x"):
    n = len(words)
    return make_sentence(words, lemmas, [0] + [1] * (n - 1), mwes, sid)


GIVE_A_GO = sent(["give", "a", "go"], ["give", "a", "go"], [("VID", (1, 2, 3))])
GAPPED = sent("I would give this job a go".split(), "I would give this job a go".split(), [("VID", (3, 6, 7))])


def test_seen_index():
    index = build_seen_index([GIVE_A_GO])
    assert ("a", "give", "go") in index.lemmas
    twice = build_seen_index([GIVE_A_GO, sent(["gave", "a", "go"], ["give", "a", "go"], [("VID", (1, 2, 3))])])
    assert len(twice.lemmas) == 1 and len(twice.surfaces) == 2
    assert build_seen_index([]).kind(GAPPED, M("VID", (3, 6, 7))) == "unseen"


def test_missing_lemma_falls_back_to_form(caplog):
    s = sent(["Make", "peace"], ["_", "_"], [("LVC.full", (1, 2))])
    index = build_seen_index([s])
    assert ("make", "peace") in index.lemmas
    assert "without lemma" in caplog.text


def test_gapped_occurrence_is_a_variant():
    index = build_seen_index([GIVE_A_GO])
    assert index.kind(GAPPED, M("VID", (3, 6, 7))) == "variant"
    assert index.kind(GIVE_A_GO, M("VID", (1, 2, 3))) == "identical"
    assert variant_f1([GAPPED], [GAPPED], index) == 1.0
    assert variant_prf([GIVE_A_GO], [GIVE_A_GO], index).n_gold == 0


def test_all_seen_gives_flagged_empty_unseen():
    s = unseen_prf([GIVE_A_GO], [GIVE_A_GO], build_seen_index([GIVE_A_GO]))
    assert s.n_gold == 0 and s.empty_gold and tuple(s) == (0.0, 0.0, 0.0)
    report = evaluate([GIVE_A_GO], [GIVE_A_GO], [GIVE_A_GO])
    assert "unseen-empty-gold" in dict(report.key_values())["flags"]


def test_unseen_exact_prediction():
    s = sent(["make", "a", "decision"], ["make", "a", "decision"], [("LVC.full", (1, 3))])
    assert tuple(unseen_prf([s], [s], build_seen_index([GIVE_A_GO])))[:2] == (1.0, 1.0)


def test_partition_and_subset():
    gold, train = load("gold"), load("train")
    index = build_seen_index(train)
    kinds = [index.kind(s, m) for s in gold for m in extract_mwes(s)]
    unseen = kinds.count("unseen")
    seen = sum(index.is_seen(s, m) for s in gold for m in extract_mwes(s))
    assert unseen + seen == len(kinds)
    assert all(index.is_seen(s, m) for s in gold for m in extract_mwes(s) if index.kind(s, m) == "variant")
    assert lemma_key(gold[0], M("VID", (3, 6, 7))) == ("a", "give", "go")


def test_scores_ignore_sentence_order():
    gold, pred, train = load("gold"), load("pred"), load("train")
    order = list(range(len(gold)))
    random.Random(3).shuffle(order)
    shuffled = evaluate([gold[i] for i in order], [pred[i] for i in order], train).key_values()
    assert dict(shuffled) == dict(evaluate(gold, pred, train).key_values())


def test_misaligned_corpora():
    gold, pred = load("gold"), load("pred")
    with pytest.raises(AlignmentError, match="sentence 2"):
        evaluate(gold, [pred[0], pred[2]] + pred[2:], load("train"))


def test_correlation_basics():
    assert seen_ratio_correlation([(1, 2), (2, 4), (3, 6)]) == pytest.approx(1.0)
    assert seen_ratio_correlation([(1, 2), (2, 1), (3, 0)]) == pytest.approx(-1.0)
    with pytest.raises(DegenerateInputError):
        seen_ratio_correlation([(1, 2), (2, 3)])
    with pytest.raises(DegenerateInputError):
        seen_ratio_correlation([(1, 2), (1, 3), (1, 4)])


def test_reported_scores_correlation():
    r = seen_ratio_correlation([(100 - u, f) for u, f in zip(UNSEEN, GLOBAL_F1)])
    assert r == pytest.approx(np.corrcoef([100 - u for u in UNSEEN], GLOBAL_F1)[0, 1], abs=1e-12)
    assert abs(r - 0.90) <= 0.02
