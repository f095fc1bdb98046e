import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claim_anchor.textprep import (
    PreprocessConfig,
    default_stopwords,
    load_stopwords,
    preprocess,
    stopword_hash,
)

NO_STOPWORDS = PreprocessConfig(stopwords=frozenset())


def test_bile_salts_example():
    tokens = preprocess("Bile salts in gut and liver pathophysiology")
    assert tokens == ["bile", "salts", "gut", "liver", "pathophysiology"]


def test_empty_text():
    assert preprocess("") == []


def test_edge_punct_keeps_internal_hyphen():
    assert preprocess("COVID-19, COVID-19!") == ["covid-19", "covid-19"]


def test_duplicates_preserved_in_order():
    assert preprocess("virus virus spike", NO_STOPWORDS) == ["virus", "virus", "spike"]


def test_strip_can_remove_whole_token():
    assert preprocess("... !!! risk", NO_STOPWORDS) == ["risk"]


def test_literal_pipeline_without_stripping():
    cfg = PreprocessConfig(strip_edge_punct=False, stopwords=frozenset())
    assert preprocess("COVID-19, spike!", cfg) == ["covid-19,", "spike!"]


def test_lowercase_disabled():
    cfg = PreprocessConfig(lowercase=False, stopwords=frozenset())
    assert preprocess("Spike Protein", cfg) == ["Spike", "Protein"]


def test_min_token_len():
    cfg = PreprocessConfig(stopwords=frozenset(), min_token_len=3)
    assert preprocess("go to the lab now", cfg) == ["the", "lab", "now"]


def test_min_token_len_must_be_positive():
    with pytest.raises(ValueError):
        PreprocessConfig(min_token_len=0)


def test_default_stopwords_shipped_list():
    stopwords = default_stopwords()
    assert {"in", "and", "the", "of"} <= stopwords
    assert 120 <= len(stopwords) <= 200
    assert all(word == word.lower() for word in stopwords)


def test_stopword_hash_is_order_independent(tmp_path):
    listing = tmp_path / "sw.txt"
    listing.write_text("beta\nalpha\n", encoding="utf-8")
    loaded = load_stopwords(listing)
    assert loaded == frozenset({"alpha", "beta"})
    assert stopword_hash(loaded) == stopword_hash(frozenset({"beta", "alpha"}))
    assert stopword_hash(loaded) != stopword_hash(frozenset({"alpha"}))


ascii_text = st.text(alphabet=string.printable, max_size=80)


@settings(max_examples=300, deadline=None)
@given(text=ascii_text)
def test_idempotence_default_config(text):
    once = preprocess(text)
    again = preprocess(" ".join(once))
    assert once == again


@settings(max_examples=300, deadline=None)
@given(text=ascii_text)
def test_output_free_of_stopwords_and_whitespace(text):
    cfg = PreprocessConfig()
    for token in preprocess(text, cfg):
        assert token
        assert token not in cfg.stopwords
        assert not any(ch.isspace() for ch in token)


def _strip_non_alnum_edges(token):
    while token and not token[0].isalnum():
        token = token[1:]
    while token and not token[-1].isalnum():
        token = token[:-1]
    return token


@settings(max_examples=300, deadline=None)
@given(text=ascii_text)
def test_tokens_are_subsequence_of_split_order(text):
    tokens = preprocess(text)
    stripped = (_strip_non_alnum_edges(raw) for raw in text.lower().split())
    remaining = iter(stripped)
    for token in tokens:
        assert any(token == candidate for candidate in remaining), (
            f"token {token!r} breaks whitespace-split order for {text!r}"
        )
