import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botgeo.botscore import (
    LabeledExample,
    classify,
    cross_validate,
    f1_score,
    fit_tfidf,
    import_scores,
    load_model,
    predict_probability,
    save_model,
    stratified_split,
    tokenize_multilingual,
    train_baseline,
    vectorize,
    write_scores,
)
from botgeo.records import Label
from oracles import f1_confusion_oracle

BOT, HUMAN = Label.BOT, Label.HUMAN


def make_corpus(n=200, seed=5):
    """Separable synthetic corpus: bots always say 'buy'."""
    rng = random.Random(seed)
    filler = ["great", "day", "today", "friends", "coffee", "news", "city", "game"]
    out = []
    for i in range(n):
        words = [rng.choice(filler) for _ in range(rng.randint(3, 8))]
        if i % 2 == 0:
            words.insert(rng.randrange(len(words)), "buy")
            out.append(LabeledExample(" ".join(words), BOT))
        else:
            out.append(LabeledExample(" ".join(words), HUMAN))
    return out


def test_tokenize_words():
    assert tokenize_multilingual("Get the vaccine!") == ["get", "the", "vaccine"]


def test_tokenize_cjk_ngrams():
    assert tokenize_multilingual("疫苗") == ["疫", "苗", "疫苗"]


def test_tokenize_url_and_mention():
    assert tokenize_multilingual("see https://x.co") == ["see", "<url>"]
    assert tokenize_multilingual("hi @someone !") == ["hi", "<user>"]


def test_tokenize_mixed_scripts():
    got = tokenize_multilingual("get疫苗now")
    assert got == ["get", "疫", "苗", "疫苗", "now"]


def test_tokenize_thai_as_ngrams():
    got = tokenize_multilingual("วัคซีน")
    assert "วั" in "".join(got)  # char grams present
    assert all(len(t) <= 3 for t in got)


def test_idf_formula():
    vocab, idf = fit_tfidf(["common alpha", "common beta"])
    assert idf[vocab["common"]] == pytest.approx(1.0, abs=1e-12)  # df == N
    assert idf[vocab["alpha"]] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)


def test_fit_tfidf_rejects_empty():
    with pytest.raises(ValueError):
        fit_tfidf([])
    with pytest.raises(ValueError):
        fit_tfidf(["", "  "])


def test_vectorize_l2_normalized_and_oov():
    vocab, idf = fit_tfidf(["alpha beta", "beta gamma"])
    x = vectorize(["alpha beta unseen"], vocab, idf)
    row = x.toarray()[0]
    assert row @ row == pytest.approx(1.0, abs=1e-12)
    x_oov = vectorize(["totally novel words"], vocab, idf)
    assert x_oov.nnz == 0


def test_train_requires_both_classes():
    with pytest.raises(ValueError):
        train_baseline([LabeledExample("a b", BOT)] * 10, seed=1)


def test_train_and_heldout_f1():
    corpus = make_corpus(200)
    train, test = stratified_split(corpus, 0.8, seed=7)
    model = train_baseline(train, seed=7)
    predicted = [
        classify(predict_probability(model, [ex.text])) for ex in test
    ]
    score = f1_score([ex.label for ex in test], predicted)
    assert score >= 0.95


def test_training_determinism_bytes(tmp_path):
    corpus = make_corpus(80)
    a, b = tmp_path / "a.model", tmp_path / "b.model"
    save_model(train_baseline(corpus, seed=99), str(a))
    save_model(train_baseline(corpus, seed=99), str(b))
    assert a.read_bytes() == b.read_bytes()
    different = train_baseline(corpus, seed=100)
    save_model(different, str(b))
    assert a.read_bytes() != b.read_bytes()


def test_model_roundtrip(tmp_path):
    corpus = make_corpus(60)
    model = train_baseline(corpus, seed=3)
    path = tmp_path / "m.model"
    save_model(model, str(path))
    loaded = load_model(str(path))
    text = ["buy buy buy great day"]
    assert predict_probability(loaded, text) == predict_probability(model, text)


def test_predict_mean_over_texts():
    corpus = make_corpus(100)
    model = train_baseline(corpus, seed=11)
    p1 = predict_probability(model, ["buy the thing today"])
    p2 = predict_probability(model, ["coffee with friends"])
    both = predict_probability(model, ["buy the thing today", "coffee with friends"])
    assert both == pytest.approx((p1 + p2) / 2, abs=1e-12)


def test_predict_requires_evidence():
    model = train_baseline(make_corpus(40), seed=2)
    with pytest.raises(ValueError, match="no evidence"):
        predict_probability(model, [])


def test_classify_boundary():
    assert classify(0.7) is BOT
    assert classify(0.5) is BOT
    assert classify(0.49) is HUMAN
    assert classify(0.499) is HUMAN
    with pytest.raises(ValueError):
        classify(1.5)


def test_threshold_monotonicity():
    rng = random.Random(1)
    for _ in range(200):
        p = rng.random()
        t1, t2 = sorted([rng.random(), rng.random()])
        if classify(p, t2) is BOT:  # higher threshold says bot
            assert classify(p, t1) is BOT  # lower threshold must agree


def test_stratified_split_arithmetic():
    data = [LabeledExample(f"b{i}", BOT) for i in range(60)]
    data += [LabeledExample(f"h{i}", HUMAN) for i in range(40)]
    train, test = stratified_split(data, 0.8, seed=1)
    assert sum(1 for e in train if e.label is BOT) == 48
    assert sum(1 for e in train if e.label is HUMAN) == 32
    assert len(test) == 20


def test_stratified_split_even():
    data = [LabeledExample(f"b{i}", BOT) for i in range(50)]
    data += [LabeledExample(f"h{i}", HUMAN) for i in range(50)]
    train, test = stratified_split(data, 0.5, seed=1)
    assert sum(1 for e in train if e.label is BOT) == 25
    assert sum(1 for e in train if e.label is HUMAN) == 25
    assert len(test) == 50
    # odd halves round up, staying within one example of exact
    odd = [LabeledExample(f"b{i}", BOT) for i in range(25)]
    odd += [LabeledExample(f"h{i}", HUMAN) for i in range(25)]
    train, test = stratified_split(odd, 0.5, seed=1)
    assert sum(1 for e in train if e.label is BOT) == 13
    assert len(train) + len(test) == 50


def test_stratified_split_determinism_and_errors():
    data = make_corpus(50)
    assert stratified_split(data, seed=5) == stratified_split(data, seed=5)
    assert stratified_split(data, seed=5) != stratified_split(data, seed=6)
    with pytest.raises(ValueError):
        stratified_split(
            [LabeledExample("x", BOT), LabeledExample("y", HUMAN)] [:1]
            + [LabeledExample("z", HUMAN), LabeledExample("w", HUMAN)],
            seed=1,
        )


@given(st.data())
@settings(max_examples=200, deadline=None)
def test_split_proportion_property(data):
    n_bot = data.draw(st.integers(2, 30))
    n_human = data.draw(st.integers(2, 30))
    frac = data.draw(st.floats(0.2, 0.8))
    seed = data.draw(st.integers(0, 1000))
    examples = [LabeledExample(f"b{i}", BOT) for i in range(n_bot)]
    examples += [LabeledExample(f"h{i}", HUMAN) for i in range(n_human)]
    train, test = stratified_split(examples, frac, seed)
    got_bot = sum(1 for e in train if e.label is BOT)
    got_human = sum(1 for e in train if e.label is HUMAN)
    assert abs(got_bot - frac * n_bot) < 1 + 1e-9
    assert abs(got_human - frac * n_human) < 1 + 1e-9
    assert len(train) + len(test) == n_bot + n_human


def test_f1_examples():
    assert f1_score([BOT, HUMAN], [BOT, HUMAN]) == 1.0
    # TP=1, FP=1, FN=1
    assert f1_score([BOT, HUMAN, BOT], [BOT, BOT, HUMAN]) == pytest.approx(0.5)
    assert f1_score([HUMAN, HUMAN], [HUMAN, HUMAN]) == 0.0
    with pytest.raises(ValueError):
        f1_score([BOT], [BOT, HUMAN])


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=12))
@settings(max_examples=400, deadline=None)
def test_f1_equals_confusion_oracle(pairs):
    truth = [BOT if t else HUMAN for t, _ in pairs]
    predicted = [BOT if p else HUMAN for _, p in pairs]
    want = f1_confusion_oracle([t for t, _ in pairs], [p for _, p in pairs])
    assert f1_score(truth, predicted) == pytest.approx(want, abs=1e-12)


def test_cross_validate_separable():
    mean_f1, std_f1, per_fold = cross_validate(make_corpus(150), k=5, seed=4, n_trees=30)
    assert len(per_fold) == 5
    assert mean_f1 >= 0.95
    assert std_f1 >= 0.0


def test_cross_validate_determinism_and_errors():
    corpus = make_corpus(60)
    assert cross_validate(corpus, k=3, seed=9, n_trees=10) == cross_validate(
        corpus, k=3, seed=9, n_trees=10
    )
    few = [LabeledExample(f"b{i}", BOT) for i in range(3)] + [
        LabeledExample(f"h{i}", HUMAN) for i in range(9)
    ]
    with pytest.raises(ValueError):
        cross_validate(few, k=5, seed=1)


def test_always_human_gets_zero_f1():
    truth = [BOT, BOT, HUMAN]
    predicted = [HUMAN, HUMAN, HUMAN]
    assert f1_score(truth, predicted) == 0.0


def test_import_scores(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text(
        "user_id,bot_probability\nu1,0.91\nu2,1.2\nu3,0.2\nu3,0.7\n,0.5\n",
        encoding="utf-8",
    )
    result = import_scores(str(path))
    by_user = {l.user_id: l for l in result.labels}
    assert by_user["u1"].label is BOT
    assert by_user["u3"].probability == 0.7  # last wins
    assert result.rejected == 2  # out-of-range and missing user_id
    assert result.duplicates == 1


def test_import_scores_empty(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("user_id,bot_probability\n", encoding="utf-8")
    assert import_scores(str(path)).labels == []


def test_write_scores_roundtrip(tmp_path):
    path = tmp_path / "out.csv"
    write_scores(str(path), {"b": 0.25, "a": 1.0})
    result = import_scores(str(path))
    assert result.rejected == 0
    assert [l.user_id for l in result.labels] == ["a", "b"]
