import json

import pytest

from multisrc.conllu import write_conllu
from multisrc.errors import DataError
from multisrc.registry import (
    DataSource,
    DatasetGroup,
    Registry,
    compute_filters,
    compute_word_overlap,
    load_registry,
    pair_by_overlap,
)

from .helpers import treebank_from_sentences


def source(source_id, language, word_lists):
    return DataSource(
        source_id=source_id,
        language=language,
        train=treebank_from_sentences(source_id, word_lists),
    )


def test_word_overlap_hand_counted():
    a = source("a", "xx", [["a", "b", "c"]])
    b = source("b", "xx", [["b", "c", "d"]])
    assert compute_word_overlap(a, b) == pytest.approx(2 / 3)
    assert compute_word_overlap(a, a) == 1.0
    c = source("c", "xx", [["q", "r"]])
    assert compute_word_overlap(a, c) == 0.0


def test_word_overlap_is_directional():
    a = source("a", "xx", [["a", "b"]])
    b = source("b", "xx", [["a", "b", "c", "d"]])
    assert compute_word_overlap(a, b) == 1.0
    assert compute_word_overlap(b, a) == 0.5


def test_word_overlap_monotone_under_vocab_growth():
    a = source("a", "xx", [["a", "b", "c", "d"]])
    small = source("s", "xx", [["a"]])
    grown = source("g", "xx", [["a", "c"]])
    assert compute_word_overlap(a, grown) >= compute_word_overlap(a, small)


def test_overlap_requires_train_split():
    a = DataSource(source_id="a", language="xx")
    b = source("b", "xx", [["x"]])
    with pytest.raises(DataError, match="no train split"):
        compute_word_overlap(a, b)


def make_registry(*sources):
    registry = Registry()
    for src in sources:
        registry.add_source(src)
    return registry


def test_pair_by_overlap_argmax():
    registry = make_registry(
        source("t", "xx", [["a", "b", "c", "d"]]),
        source("x", "xx", [["a", "b"]]),  # overlap(t, x) = 0.5
        source("y", "xx", [["a"]]),  # overlap(t, y) = 0.25
    )
    group = pair_by_overlap(registry, "t")
    assert group.members == ["t", "x"]
    assert group.strategy == "overlap_pair"


def test_pair_by_overlap_tie_breaks_lexicographically():
    registry = make_registry(
        source("t", "xx", [["a", "b"]]),
        source("ab", "xx", [["a"]]),
        source("aa", "xx", [["b"]]),
    )
    assert pair_by_overlap(registry, "t").members == ["t", "aa"]


def test_pair_by_overlap_single_source_errors():
    registry = make_registry(source("only", "xx", [["a"]]))
    with pytest.raises(DataError):
        pair_by_overlap(registry, "only")


def test_pair_by_overlap_deterministic():
    registry = make_registry(
        source("t", "xx", [["a", "b", "c"]]),
        source("m", "xx", [["a", "b"]]),
        source("n", "xx", [["b", "c"]]),
    )
    first = pair_by_overlap(registry, "t").members
    for _ in range(5):
        assert pair_by_overlap(registry, "t").members == first


def word_block(n_words):
    # sentences of 10 distinct words each
    return [[f"w{i}_{j}" for j in range(10)] for i in range(n_words // 10)]


def test_filter_small_threshold_strict():
    just_under = source("u", "aa", word_block(29_990) + [["x"] * 9])  # 29,999 words
    exactly = source("e", "bb", word_block(30_000))
    registry = make_registry(just_under, exactly)
    group = DatasetGroup(group_id="g", members=["u", "e"])
    registry.add_group(group)
    reports = compute_filters(registry, group, classifier_f1=0.5)
    assert reports["u"].word_count == 29_999
    assert reports["u"].is_small is True
    assert reports["e"].word_count == 30_000
    assert reports["e"].is_small is False


def test_filter_language_flags():
    registry = make_registry(
        source("en_ewt", "en", [["the", "cat"]]),
        source("en_gum", "en", [["a", "dog"]]),
    )
    group = DatasetGroup(group_id="en", members=["en_ewt", "en_gum"])
    registry.add_group(group)
    reports = compute_filters(registry, group, classifier_f1=0.95)
    for report in reports.values():
        assert report.exists_same_lang is True
        assert report.is_multilang_group is False
        assert report.svm_above_95 is False  # strict >


def test_filter_overlap_threshold():
    registry = make_registry(
        source("a", "aa", [[f"a{i}" for i in range(20)]]),
        source("b", "bb", [["a0", "a1", "a2"] + [f"b{i}" for i in range(7)]]),
    )
    group = DatasetGroup(group_id="ab", members=["a", "b"])
    registry.add_group(group)
    reports = compute_filters(registry, group, classifier_f1=0.99)
    assert reports["a"].max_overlap == pytest.approx(3 / 20)
    assert reports["a"].high_word_overlap is True
    assert reports["a"].is_multilang_group is True
    assert reports["a"].exists_same_lang is False
    assert reports["a"].svm_above_95 is True


def test_group_invariants():
    with pytest.raises(DataError):
        DatasetGroup(group_id="g", members=[])
    with pytest.raises(DataError):
        DatasetGroup(group_id="g", members=["a", "a"])
    with pytest.raises(DataError):
        DatasetGroup(group_id="g", members=["a", "b", "c"], strategy="overlap_pair")


def test_registry_duplicate_source_rejected():
    registry = make_registry(source("a", "xx", [["x"]]))
    with pytest.raises(DataError, match="duplicate"):
        registry.add_source(source("a", "xx", [["y"]]))


def test_registry_config_loading(tmp_path):
    tb_a = treebank_from_sentences("src_a", [["hello", "world"]])
    tb_b = treebank_from_sentences("src_b", [["bye"]])
    (tmp_path / "a-train.conllu").write_text(write_conllu(tb_a))
    (tmp_path / "b-train.conllu").write_text(write_conllu(tb_b))
    config = {
        "sources": [
            {"id": "src_a", "language": "en", "train": "a-train.conllu"},
            {"id": "src_b", "language": "de", "train": "b-train.conllu"},
        ],
        "groups": [{"id": "g1", "members": ["src_a", "src_b"], "strategy": "manual"}],
    }
    (tmp_path / "registry.json").write_text(json.dumps(config))
    registry = load_registry(tmp_path / "registry.json")
    assert set(registry.sources) == {"src_a", "src_b"}
    assert registry.source("src_a").train_word_count == 2
    assert registry.groups["g1"].members == ["src_a", "src_b"]
    assert not registry.has_split("src_a", "dev")


def test_access_log_phases():
    registry = make_registry(source("a", "xx", [["x"]]), source("b", "xx", [["y"]]))
    with registry.phase("training"):
        registry.split("a", "train")
    with registry.phase("evaluation"):
        registry.split("b", "train")
    assert registry.accessed("a", phases={"training"}) == [("training", "a", "train")]
    assert registry.accessed("b", phases={"training"}) == []
    assert registry.accessed("b") == [("evaluation", "b", "train")]
