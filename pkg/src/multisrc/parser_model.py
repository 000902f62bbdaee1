"""Transition-based dependency parser over the shared encoder.

Scoring: a 2-layer feed-forward network over the contextual encodings of
the top three stack items and the first buffer item (learned vectors for
the artificial root and for empty slots).  Training follows the
error-exploration regime: hinge between the best costly and best
zero-cost transition under the static-dynamic oracle, following the
model's own argmax with a small probability after a burn-in epoch.
"""

from __future__ import annotations

from copy import deepcopy
from dataclasses import dataclass, field

import numpy as np

from .conllu import Sentence, Treebank
from .encoder import MODE_NONE, EncoderConfig, SentenceEncoder, Vocabulary
from .errors import DataError
from .nn import Affine, Embedding, Optimizer, ParamSet, TrainerConfig
from .nn import tensor as T
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .oracle import DynamicOracle
from .trees import ROOT, DependencyTree, attach_tree
from .transitions import (
    ARC_KINDS,
    LEFT_ARC,
    RIGHT_ARC,
    SHIFT,
    SWAP,
    ParserState,
    Transition,
    apply_transition,
    legal_transitions,
)

STACK_SLOTS = 3  # top-3 stack items feed the scorer, plus the buffer front


@dataclass
class ParserConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    scorer_hidden: int = 64
    use_swap: bool = True


class DependencyParser:
    def __init__(
        self,
        config: ParserConfig,
        vocab: Vocabulary,
        labels: list[str],
        members: list[str] | None = None,
        seed: int = 0,
    ):
        if not labels:
            raise DataError("parser needs a non-empty label inventory")
        self.config = config
        self.labels = list(labels)
        self.members = list(members or [])
        self.seed = seed
        self.params = ParamSet(np.random.default_rng(seed))
        self.encoder = SentenceEncoder(self.params, config.encoder, vocab, self.members)
        enc_dim = config.encoder.output_dim
        # row 0: artificial root encoding, row 1: empty-slot padding
        self.special = Embedding(self.params, "special_slots", 2, enc_dim)
        n_scores = 2 + 2 * len(self.labels)
        self.hidden = Affine(self.params, "scorer_hidden", (STACK_SLOTS + 1) * enc_dim, config.scorer_hidden)
        self.out = Affine(self.params, "scorer_out", config.scorer_hidden, n_scores)

    # -- transition/score index mapping ------------------------------------

    def index_of(self, kind: str, label: str | None = None) -> int:
        if kind == SHIFT:
            return 0
        if kind == SWAP:
            return 1
        offset = 2 if kind == LEFT_ARC else 2 + len(self.labels)
        return offset + self.labels.index(label)

    def transition_at(self, index: int) -> Transition:
        if index == 0:
            return Transition(SHIFT)
        if index == 1:
            return Transition(SWAP)
        index -= 2
        if index < len(self.labels):
            return Transition(LEFT_ARC, self.labels[index])
        return Transition(RIGHT_ARC, self.labels[index - len(self.labels)])

    def legal_indices(self, state: ParserState) -> list[int]:
        kinds = legal_transitions(state)
        if not self.config.use_swap and SWAP in kinds:
            kinds.remove(SWAP)
        indices = []
        for kind in kinds:
            if kind in ARC_KINDS:
                base = 2 if kind == LEFT_ARC else 2 + len(self.labels)
                indices.extend(range(base, base + len(self.labels)))
            else:
                indices.append(self.index_of(kind))
        return indices

    # -- scoring ------------------------------------------------------------

    def score_transitions(self, state: ParserState, encodings: list[T.Tensor]) -> T.Tensor:
        """One score per (kind, label) plus SHIFT and SWAP."""

        def slot(token_id: int | None) -> T.Tensor:
            if token_id is None:
                return self.special(1)
            if token_id == ROOT:
                return self.special(0)
            return encodings[token_id - 1]

        stack_items = [
            state.stack[-1 - i] if len(state.stack) > i else None for i in range(STACK_SLOTS)
        ]
        features = [slot(t) for t in stack_items] + [slot(state.front)]
        return self.out(T.tanh(self.hidden(T.concat(features))))

    # -- decoding -------------------------------------------------------------

    def parse_sentence(self, sentence: Sentence, mode: str = MODE_NONE) -> DependencyTree:
        """Greedy argmax over legal transitions; total by construction."""
        if not sentence.tokens:
            raise DataError("cannot parse an empty sentence")
        encodings = self.encoder.encode_sentence(sentence, mode)
        state = ParserState.initial(len(sentence.tokens))
        while not state.is_terminal():
            scores = self.score_transitions(state, encodings).data
            indices = self.legal_indices(state)
            best = max(indices, key=lambda i: (scores[i], -i))
            state = apply_transition(state, self.transition_at(best))
        return state.to_tree()

    def parse_treebank(self, treebank: Treebank, mode: str = MODE_NONE) -> Treebank:
        """Copy of the treebank with predicted heads and labels."""
        out = deepcopy(treebank)
        for original, copy in zip(treebank.sentences, out.sentences):
            attach_tree(copy, self.parse_sentence(original, mode))
        return out


def label_inventory(data: list[tuple[Sentence, DependencyTree]]) -> list[str]:
    return sorted({label for _, tree in data for label in tree.deprels})


def train_parser(
    model: DependencyParser,
    data: list[tuple[Sentence, DependencyTree]],
    mode: str,
    trainer: TrainerConfig,
) -> dict:
    """Error-exploration training; returns per-epoch loss diagnostics.

    Exploration follows the model's argmax among the transitions the
    static-dynamic policy allows, so oracle costs stay exact along every
    visited trajectory.
    """
    if not data:
        raise DataError("empty training data")
    for sentence, tree in data:
        if len(sentence.tokens) != len(tree):
            raise DataError("sentence/tree length mismatch in training data")
    optimizer = Optimizer(model.params.all(), trainer)
    rng = np.random.default_rng(trainer.seed)
    history = {"epoch_loss": [], "epoch_updates": []}
    for epoch in range(trainer.epochs):
        order = rng.permutation(len(data))[: trainer.max_sentences_per_epoch]
        epoch_loss, updates = 0.0, 0
        for position in order:
            sentence, gold = data[position]
            losses = _sentence_losses(model, sentence, gold, mode, trainer, rng, epoch)
            if not losses:
                continue
            total = losses[0]
            for extra in losses[1:]:
                total = T.add(total, extra)
            epoch_loss += float(total.data)
            updates += 1
            total.backward()
            optimizer.step()
        history["epoch_loss"].append(epoch_loss)
        history["epoch_updates"].append(updates)
    return history


def _sentence_losses(model, sentence, gold, mode, trainer, rng, epoch):
    oracle = DynamicOracle(gold, use_swap=model.config.use_swap)
    encodings = model.encoder.encode_sentence(sentence, mode)
    state = ParserState.initial(len(gold))
    losses = []
    explore = epoch >= trainer.explore_burnin_epochs
    while not state.is_terminal():
        scores = model.score_transitions(state, encodings)
        costs = oracle.costs(state)
        allowed_kinds = oracle.allowed(state)
        if not model.config.use_swap:
            costs.pop(SWAP, None)
            allowed_kinds = [k for k in allowed_kinds if k != SWAP]
        zero_idx, costly_idx = _partition_indices(model, state, gold, costs)
        if zero_idx and costly_idx:
            margin = T.add(
                T.constant(1.0),
                T.add(T.masked_max(scores, costly_idx), T.scale(T.masked_max(scores, zero_idx), -1.0)),
            )
            if float(margin.data) > 0.0:
                losses.append(T.relu(margin))
        kind, label = _choose_transition(
            model, state, gold, scores.data, costs, allowed_kinds, zero_idx, explore, rng, trainer
        )
        oracle.advance(state, kind)
        state = apply_transition(state, Transition(kind, label))
    return losses


def _partition_indices(model, state, gold, costs):
    """Score indices of zero-cost transitions vs costly ones.

    Labels are supervised only through the gold arc: an arc kind of cost 0
    contributes just its gold-labeled index to the zero set; every other
    legal (kind, label) index is costly.
    """
    zero_idx, costly_idx = [], []
    for kind, cost in costs.items():
        if kind not in (SHIFT, SWAP) and kind not in ARC_KINDS:
            continue
        if kind in ARC_KINDS:
            base = 2 if kind == LEFT_ARC else 2 + len(model.labels)
            gold_label = gold.deprel_of(state.stack[-1])
            for li, label in enumerate(model.labels):
                if cost == 0 and label == gold_label:
                    zero_idx.append(base + li)
                else:
                    costly_idx.append(base + li)
        else:
            index = model.index_of(kind)
            (zero_idx if cost == 0 else costly_idx).append(index)
    return zero_idx, costly_idx


def _choose_transition(model, state, gold, score_values, costs, allowed_kinds, zero_idx, explore, rng, trainer):
    if explore and rng.random() < trainer.explore_probability:
        candidate_indices = [
            i
            for kind in allowed_kinds
            for i in _kind_indices(model, kind)
        ]
        best = max(candidate_indices, key=lambda i: (score_values[i], -i))
        transition = model.transition_at(best)
        return transition.kind, transition.label
    # oracle move: model-preferred among the zero-cost transitions
    if zero_idx:
        best = max(zero_idx, key=lambda i: (score_values[i], -i))
        transition = model.transition_at(best)
        return transition.kind, transition.label
    # every option is costly (possible off the oracle path): take the
    # cheapest kind, best-scored label
    kind = min(allowed_kinds, key=lambda k: (costs[k], k))
    if kind in ARC_KINDS:
        best = max(_kind_indices(model, kind), key=lambda i: (score_values[i], -i))
        transition = model.transition_at(best)
        return transition.kind, transition.label
    return kind, None


def _kind_indices(model, kind):
    if kind in ARC_KINDS:
        base = 2 if kind == LEFT_ARC else 2 + len(model.labels)
        return range(base, base + len(model.labels))
    return [model.index_of(kind)]


# -- persistence ---------------------------------------------------------------


def save_parser(path, model: DependencyParser, extra_meta: dict | None = None):
    cfg = model.config
    meta = {
        "labels": model.labels,
        "members": model.members,
        "seed": model.seed,
        "vocab": model.encoder.vocab.to_meta(),
        "dims": {
            "word_dim": cfg.encoder.word_dim,
            "char_dim": cfg.encoder.char_dim,
            "char_emb_dim": cfg.encoder.char_emb_dim,
            "source_dim": cfg.encoder.source_dim,
            "hidden_dim": cfg.encoder.hidden_dim,
            "scorer_hidden": cfg.scorer_hidden,
        },
        "use_swap": cfg.use_swap,
        "extra": extra_meta or {},
    }
    save_checkpoint(path, "dep_parser", meta, model.params.state_arrays())


def load_parser(path) -> DependencyParser:
    kind, meta, arrays = load_checkpoint(path)
    if kind != "dep_parser":
        raise DataError(f"{path}: expected a dep_parser checkpoint, got {kind!r}")
    dims = meta["dims"]
    config = ParserConfig(
        encoder=EncoderConfig(
            word_dim=dims["word_dim"],
            char_dim=dims["char_dim"],
            char_emb_dim=dims["char_emb_dim"],
            source_dim=dims["source_dim"],
            hidden_dim=dims["hidden_dim"],
        ),
        scorer_hidden=dims["scorer_hidden"],
        use_swap=meta["use_swap"],
    )
    model = DependencyParser(
        config,
        Vocabulary.from_meta(meta["vocab"]),
        labels=meta["labels"],
        members=meta["members"],
        seed=meta["seed"],
    )
    model.params.load_arrays(arrays)
    return model
