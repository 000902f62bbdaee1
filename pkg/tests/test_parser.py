import random

import numpy as np
import pytest

from multisrc.encoder import MODE_NONE, EncoderConfig, Vocabulary
from multisrc.errors import DataError
from multisrc.metrics import las
from multisrc.nn import TrainerConfig
from multisrc.parser_model import (
    DependencyParser,
    ParserConfig,
    label_inventory,
    load_parser,
    save_parser,
    train_parser,
)
from multisrc.trees import DependencyTree, attach_tree
from multisrc.transitions import LEFT_ARC, RIGHT_ARC, SHIFT, SWAP, ParserState

from .helpers import sentence_from_words, treebank_from_sentences

SMALL = EncoderConfig(word_dim=12, char_dim=8, char_emb_dim=6, source_dim=0, hidden_dim=10)


def toy_corpus():
    # five short sentences with consistent head-final-ish structure
    specs = [
        (["the", "cat", "sleeps"], [2, 3, 0], ["det", "nsubj", "root"]),
        (["a", "dog", "barks"], [2, 3, 0], ["det", "nsubj", "root"]),
        (["the", "dog", "sleeps"], [2, 3, 0], ["det", "nsubj", "root"]),
        (["cats", "chase", "dogs"], [2, 0, 2], ["nsubj", "root", "obj"]),
        (["dogs", "see", "cats"], [2, 0, 2], ["nsubj", "root", "obj"]),
    ]
    data = []
    for words, heads, rels in specs:
        sent = sentence_from_words(words, heads=heads, deprels=rels, source_id="toy")
        data.append((sent, DependencyTree(heads=heads, deprels=rels)))
    return data


def build_model(data, cfg=None, seed=5, use_swap=True):
    vocab = Vocabulary.build(
        [treebank_from_sentences("toy", [[t.form for t in s.tokens] for s, _ in data])]
    )
    labels = label_inventory(data)
    return DependencyParser(
        ParserConfig(encoder=cfg or SMALL, scorer_hidden=24, use_swap=use_swap),
        vocab,
        labels,
        seed=seed,
    )


def trainer(epochs, seed=1):
    return TrainerConfig(optimizer="adam", learning_rate=0.01, epochs=epochs, seed=seed)


def test_score_vector_shape_and_determinism():
    data = toy_corpus()
    model = build_model(data)
    sent, gold = data[0]
    encodings = model.encoder.encode_sentence(sent, MODE_NONE)
    state = ParserState.initial(len(gold))
    scores = model.score_transitions(state, encodings)
    assert scores.data.shape == (2 * len(model.labels) + 2,)
    again = model.score_transitions(state, encodings)
    assert np.array_equal(scores.data, again.data)


def test_transition_index_roundtrip():
    model = build_model(toy_corpus())
    n = 2 + 2 * len(model.labels)
    for i in range(n):
        t = model.transition_at(i)
        assert model.index_of(t.kind, t.label) == i


def test_one_token_sentence_parses_to_root():
    model = build_model(toy_corpus())
    sent = sentence_from_words(["hello"], heads=[0], deprels=["root"])
    tree = model.parse_sentence(sent, MODE_NONE)
    assert tree.heads == [0]
    assert tree.deprels[0] in model.labels


def test_untrained_parse_always_valid_tree():
    model = build_model(toy_corpus())
    rng = random.Random(0)
    for _ in range(80):
        n = rng.randrange(1, 8)
        words = [rng.choice(["the", "cat", "dog", "zzz"]) for _ in range(n)]
        sent = sentence_from_words(words, heads=[0] + [1] * (n - 1),
                                   deprels=["root"] + ["dep"] * (n - 1))
        tree = model.parse_sentence(sent, MODE_NONE)
        assert len(tree) == n  # DependencyTree validates structure on build


def test_overfit_toy_corpus_reaches_perfect_las():
    data = toy_corpus()
    model = build_model(data)
    history = train_parser(model, data, MODE_NONE, trainer(60))
    gold_tb = treebank_from_sentences("toy", [[t.form for t in s.tokens] for s, _ in data])
    for sent, (orig, tree) in zip(gold_tb.sentences, data):
        attach_tree(sent, tree)
    pred_tb = model.parse_treebank(gold_tb, MODE_NONE)
    assert las(gold_tb, pred_tb).value == 100.0
    assert history["epoch_loss"][-1] <= history["epoch_loss"][0]


def test_nonprojective_tree_needs_swap():
    words = ["w1", "w2", "w3", "w4"]
    heads = [0, 4, 1, 1]
    rels = ["root", "obj", "mod", "arg"]
    sent = sentence_from_words(words, heads=heads, deprels=rels, source_id="toy")
    gold = DependencyTree(heads=heads, deprels=rels)
    data = [(sent, gold)]

    with_swap = build_model(data, seed=3)
    train_parser(with_swap, data, MODE_NONE, trainer(80))
    assert with_swap.parse_sentence(sent, MODE_NONE).heads == heads

    without_swap = build_model(data, seed=3, use_swap=False)
    train_parser(without_swap, data, MODE_NONE, trainer(80))
    assert without_swap.parse_sentence(sent, MODE_NONE).heads != heads


def test_training_is_deterministic_across_runs():
    data = toy_corpus()
    results = []
    for _ in range(2):
        model = build_model(data, seed=9)
        train_parser(model, data, MODE_NONE, trainer(8, seed=4))
        results.append({name: p.data.copy() for name, p in model.params.params.items()})
    for name in results[0]:
        assert np.array_equal(results[0][name], results[1][name])


def test_epoch_sentence_cap_limits_updates():
    data = toy_corpus()
    model = build_model(data)
    config = TrainerConfig(optimizer="adam", learning_rate=0.01, epochs=1, seed=0,
                           max_sentences_per_epoch=2)
    history = train_parser(model, data, MODE_NONE, config)
    assert history["epoch_updates"][0] <= 2


def test_train_errors():
    model = build_model(toy_corpus())
    with pytest.raises(DataError, match="empty training data"):
        train_parser(model, [], MODE_NONE, trainer(1))
    sent = sentence_from_words(["a", "b"], heads=[2, 0])
    bad = [(sent, DependencyTree(heads=[0]))]
    with pytest.raises(DataError, match="length mismatch"):
        train_parser(model, bad, MODE_NONE, trainer(1))


def test_parser_checkpoint_roundtrip_reproduces_parses(tmp_path):
    data = toy_corpus()
    model = build_model(data)
    train_parser(model, data, MODE_NONE, trainer(5))
    path = tmp_path / "parser.npz"
    save_parser(path, model, {"note": "test"})
    loaded = load_parser(path)
    for sent, _ in data:
        t1 = model.parse_sentence(sent, MODE_NONE)
        t2 = loaded.parse_sentence(sent, MODE_NONE)
        assert t1.heads == t2.heads
        assert t1.deprels == t2.deprels
