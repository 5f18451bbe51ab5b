import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from protosum.estimators import (
    NNGenSummarizer,
    PrototypeEditingSummarizer,
    RetrieveSummarizer,
    VsmSummarizer,
)
from protosum.synthetic import make_synthetic_corpus

CODES = [
    "public void setColor(Color value) { this.color = value; }",
    "public void setWidth(Width value) { this.width = value; }",
    "public Color getColor() { return this.color; }",
    "public Width getWidth() { return this.width; }",
]
SUMMARIES = [
    "sets the color of the widget",
    "sets the width of the widget",
    "returns the color of the widget",
    "returns the width of the widget",
]


@pytest.mark.parametrize(
    "estimator",
    [RetrieveSummarizer(), VsmSummarizer(), NNGenSummarizer(k=2)],
    ids=["bm25", "vsm", "nngen"],
)
def test_baselines_return_duplicate_summary(estimator):
    estimator.fit(CODES, SUMMARIES)
    predictions = estimator.predict(CODES)
    assert predictions == SUMMARIES
    assert estimator.score(CODES, SUMMARIES) == pytest.approx(100.0)


def test_estimators_are_cloneable_with_params():
    est = NNGenSummarizer(k=3, max_code_len=50)
    params = est.get_params()
    assert params["k"] == 3 and params["max_code_len"] == 50
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(k=7)
    assert est.k == 7


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        RetrieveSummarizer().predict(CODES)


def test_input_validation():
    with pytest.raises(ValueError):
        RetrieveSummarizer().fit(CODES, SUMMARIES[:2])
    with pytest.raises(ValueError):
        RetrieveSummarizer().fit([], [])
    with pytest.raises(ValueError):
        RetrieveSummarizer().fit(["code", "   "], ["a", "b"])
    with pytest.raises(TypeError):
        RetrieveSummarizer().fit("just one string", SUMMARIES)


def test_edit_summarizer_desk_preset_params():
    est = PrototypeEditingSummarizer.desk(max_epochs=2)
    params = est.get_params()
    assert params["encoder_hidden"] == 128
    assert params["batch_size"] == 32
    assert params["max_epochs"] == 2
    assert clone(est).get_params() == params


def test_edit_summarizer_fit_predict_smoke():
    """Small corpus, two epochs: the full fit/predict/score path runs."""
    splits = make_synthetic_corpus(n_train=40, n_valid=8, n_test=4, seed=5,
                                   n_rare=4, rare_train_occurrences=2)
    X = [p.code_text for p in splits["train"]]
    y = [p.summary_text for p in splits["train"]]
    est = PrototypeEditingSummarizer.desk(
        summary_embed_dim=16, code_embed_dim=16, encoder_hidden=12,
        decoder_hidden=12, edit_dim=8, max_epochs=2, beam_size=3, seed=1,
    )
    est.fit(X, y)
    assert len(est.history_) <= 2
    test_codes = [p.code_text for p in splits["test"]]
    predictions = est.predict(test_codes)
    assert len(predictions) == len(test_codes)
    for text in predictions:
        assert isinstance(text, str)
        assert len(text.split()) <= 15
    score = est.score(test_codes, [p.summary_text for p in splits["test"]])
    assert 0.0 <= score <= 100.0


def test_edit_summarizer_explicit_validation_set():
    splits = make_synthetic_corpus(n_train=30, n_valid=6, n_test=2, seed=6,
                                   n_rare=3, rare_train_occurrences=2)
    est = PrototypeEditingSummarizer.desk(
        summary_embed_dim=8, code_embed_dim=8, encoder_hidden=8,
        decoder_hidden=8, edit_dim=4, max_epochs=1, beam_size=2,
    )
    est.fit(
        [p.code_text for p in splits["train"]],
        [p.summary_text for p in splits["train"]],
        X_valid=[p.code_text for p in splits["valid"]],
        y_valid=[p.summary_text for p in splits["valid"]],
    )
    assert len(est.train_split_) == 30
