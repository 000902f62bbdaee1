"""Joint morphological tagging and lemmatization over the shared encoder.

Tags are whole feature bundles classified per token from the contextual
encoding.  Lemmas are decoded character by character by an attention
decoder over the form's character encodings, with the bundle's tag
embedding concatenated to every decoder input (gold bundle while
training, predicted bundle at inference).
"""

from __future__ import annotations

from copy import deepcopy
from dataclasses import dataclass, field

import numpy as np

from .conllu import Sentence, Treebank
from .encoder import EncoderConfig, SentenceEncoder, Vocabulary
from .errors import DataError
from .nn import AdditiveAttention, Affine, Embedding, LSTM, Optimizer, ParamSet, TrainerConfig
from .nn import tensor as T
from .nn.checkpoint import load_checkpoint, save_checkpoint

EOS = 0  # output index 0 ends the lemma; input index 0 is begin-of-sequence


def bundle_string(morph: set[str]) -> str:
    """Canonical bundle form: sorted ';'-joined feature assignments."""
    return ";".join(sorted(morph))


def bundle_features(bundle: str) -> set[str]:
    return {part for part in bundle.split(";") if part}


def max_lemma_length(form: str) -> int:
    return 2 * len(form) + 8


@dataclass
class TaggerConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    tag_embedding_dim: int = 16
    decoder_hidden: int = 48
    decoder_char_dim: int = 16
    attention_hidden: int = 24


class JointTagger:
    def __init__(
        self,
        config: TaggerConfig,
        vocab: Vocabulary,
        bundles: list[str],
        lemma_chars: list[str],
        members: list[str] | None = None,
        seed: int = 0,
    ):
        if not bundles:
            raise DataError("tagger needs a non-empty bundle inventory")
        self.config = config
        self.bundles = list(bundles)
        self.bundle_index = {b: i for i, b in enumerate(self.bundles)}
        self.lemma_chars = list(lemma_chars)
        self.char_out_index = {c: i + 1 for i, c in enumerate(self.lemma_chars)}
        self.members = list(members or [])
        self.seed = seed
        self.params = ParamSet(np.random.default_rng(seed))
        self.encoder = SentenceEncoder(self.params, config.encoder, vocab, self.members)
        enc_dim = config.encoder.output_dim
        char_enc_dim = config.encoder.char_dim
        self.tag_head = Affine(self.params, "tag_head", enc_dim, len(self.bundles))
        self.tag_emb = Embedding(self.params, "tag_emb", len(self.bundles), config.tag_embedding_dim)
        self.dec_char_emb = Embedding(
            self.params, "dec_char_emb", len(self.lemma_chars) + 1, config.decoder_char_dim
        )
        self.dec_init = Affine(self.params, "dec_init", enc_dim, config.decoder_hidden)
        self.decoder = LSTM(
            self.params,
            "lemma_decoder",
            config.decoder_char_dim + config.tag_embedding_dim,
            config.decoder_hidden,
        )
        self.attention = AdditiveAttention(
            self.params, "lemma_att", config.decoder_hidden, char_enc_dim, config.attention_hidden
        )
        self.out_head = Affine(
            self.params, "lemma_out", config.decoder_hidden + char_enc_dim, len(self.lemma_chars) + 1
        )

    # -- tagging -----------------------------------------------------------

    def tag_logits(self, encodings):
        return [self.tag_head(e) for e in encodings]

    def tag_sentence(self, sentence: Sentence, mode: str) -> list[str]:
        """Most likely bundle per token (empty sentence: empty list)."""
        if not sentence.tokens:
            return []
        encodings = self.encoder.encode_sentence(sentence, mode)
        out = []
        for logits in self.tag_logits(encodings):
            out.append(self.bundles[int(np.argmax(logits.data))])
        return out

    # -- lemmatization ---------------------------------------------------------

    def _decoder_steps(self, token_encoding, char_encodings, bundle_id):
        """Stateful step closure shared by decoding and teacher forcing."""
        stacked, projected = self.attention.precompute(char_encodings)
        tag_vec = self.tag_emb(bundle_id)
        h = T.tanh(self.dec_init(token_encoding))
        c = T.constant(np.zeros(self.config.decoder_hidden))
        state = {"h": h, "c": c}

        def step(prev_char_index: int):
            x = T.concat([self.dec_char_emb(prev_char_index), tag_vec])
            state["h"], state["c"] = self.decoder.step(x, (state["h"], state["c"]))
            context = self.attention(state["h"], stacked, projected)
            return self.out_head(T.concat([state["h"], context]))

        return step

    def decode_lemma(self, token_encoding, form: str, bundle: str) -> str:
        """Greedy decode until EOS or the hard length cap 2*|form|+8."""
        if not form:
            raise DataError("cannot lemmatize an empty form")
        if bundle not in self.bundle_index:
            raise DataError(f"unknown bundle {bundle!r}")
        char_encodings, _ = self.encoder.char_sequence(form)
        step = self._decoder_steps(token_encoding, char_encodings, self.bundle_index[bundle])
        prev = 0  # begin-of-sequence
        chars = []
        for _ in range(max_lemma_length(form)):
            logits = step(prev)
            best = int(np.argmax(logits.data))
            if best == EOS:
                break
            chars.append(self.lemma_chars[best - 1])
            prev = best
        return "".join(chars)

    def lemma_loss(self, token_encoding, form: str, gold_lemma: str, gold_bundle: str):
        """Teacher-forced cross-entropy over the gold character sequence."""
        char_encodings, _ = self.encoder.char_sequence(form)
        bundle_id = self.bundle_index[gold_bundle]
        step = self._decoder_steps(token_encoding, char_encodings, bundle_id)
        try:
            targets = [self.char_out_index[ch] for ch in gold_lemma]
        except KeyError as exc:
            raise DataError(f"lemma char {exc.args[0]!r} missing from the inventory") from None
        targets.append(EOS)
        loss = None
        prev = 0
        for target in targets:
            logits = step(prev)
            ce = T.cross_entropy(logits, target)
            loss = ce if loss is None else T.add(loss, ce)
            prev = target
        return loss

    # -- full-sentence prediction -------------------------------------------

    def annotate_sentence(self, sentence: Sentence, mode: str) -> list[tuple[str, str]]:
        """(bundle, lemma) per token, lemma conditioned on the predicted tag."""
        if not sentence.tokens:
            return []
        encodings = self.encoder.encode_sentence(sentence, mode)
        output = []
        for tok, encoding, logits in zip(sentence.tokens, encodings, self.tag_logits(encodings)):
            bundle = self.bundles[int(np.argmax(logits.data))]
            lemma = self.decode_lemma(encoding, tok.form, bundle)
            output.append((bundle, lemma))
        return output

    def annotate_treebank(self, treebank: Treebank, mode: str) -> Treebank:
        out = deepcopy(treebank)
        for original, copy in zip(treebank.sentences, out.sentences):
            for tok, (bundle, lemma) in zip(copy.tokens, self.annotate_sentence(original, mode)):
                tok.morph = bundle_features(bundle)
                tok.lemma = lemma
        return out


def bundle_inventory(treebanks: list[Treebank]) -> list[str]:
    """Sorted canonical bundles over the training tokens (stable ids)."""
    bundles = {bundle_string(t.morph) for tb in treebanks for s in tb.sentences for t in s.tokens}
    return sorted(bundles)


def lemma_char_inventory(treebanks: list[Treebank]) -> list[str]:
    chars = {c for tb in treebanks for s in tb.sentences for t in s.tokens for c in t.lemma}
    return sorted(chars)


def train_joint(
    model: JointTagger,
    treebanks: list[Treebank],
    mode: str,
    trainer: TrainerConfig,
    tag_loss_weight: float = 1.0,
) -> dict:
    """Tag + lemma cross-entropy, word-capped shuffled epochs."""
    sentences = [s for tb in treebanks for s in tb.sentences if s.tokens]
    if not sentences:
        raise DataError("empty training data")
    optimizer = Optimizer(model.params.all(), trainer)
    rng = np.random.default_rng(trainer.seed)
    history = {"tag_loss": [], "lemma_loss": []}
    for _ in range(trainer.epochs):
        order = rng.permutation(len(sentences))
        words_used = 0
        tag_total, lemma_total = 0.0, 0.0
        for position in order:
            sentence = sentences[position]
            if words_used + len(sentence.tokens) > trainer.max_words_per_epoch and words_used > 0:
                break
            words_used += len(sentence.tokens)
            encodings = model.encoder.encode_sentence(sentence, mode)
            losses = []
            for tok, encoding in zip(sentence.tokens, encodings):
                gold_bundle = bundle_string(tok.morph)
                tag_ce = T.cross_entropy(model.tag_head(encoding), model.bundle_index[gold_bundle])
                tag_total += float(tag_ce.data)
                if tag_loss_weight != 0.0:
                    losses.append(T.scale(tag_ce, tag_loss_weight) if tag_loss_weight != 1.0 else tag_ce)
                if tok.lemma:
                    lemma_ce = model.lemma_loss(encoding, tok.form, tok.lemma, gold_bundle)
                    lemma_total += float(lemma_ce.data)
                    losses.append(lemma_ce)
            if not losses:
                continue
            total = losses[0]
            for extra in losses[1:]:
                total = T.add(total, extra)
            total.backward()
            optimizer.step()
        history["tag_loss"].append(tag_total)
        history["lemma_loss"].append(lemma_total)
    return history


# -- persistence ---------------------------------------------------------------


def save_tagger(path, model: JointTagger, extra_meta: dict | None = None):
    cfg = model.config
    meta = {
        "bundles": model.bundles,
        "lemma_chars": model.lemma_chars,
        "members": model.members,
        "seed": model.seed,
        "vocab": model.encoder.vocab.to_meta(),
        "dims": {
            "word_dim": cfg.encoder.word_dim,
            "char_dim": cfg.encoder.char_dim,
            "char_emb_dim": cfg.encoder.char_emb_dim,
            "source_dim": cfg.encoder.source_dim,
            "hidden_dim": cfg.encoder.hidden_dim,
            "tag_embedding_dim": cfg.tag_embedding_dim,
            "decoder_hidden": cfg.decoder_hidden,
            "decoder_char_dim": cfg.decoder_char_dim,
            "attention_hidden": cfg.attention_hidden,
        },
        "extra": extra_meta or {},
    }
    save_checkpoint(path, "joint_tagger", meta, model.params.state_arrays())


def load_tagger(path) -> JointTagger:
    kind, meta, arrays = load_checkpoint(path)
    if kind != "joint_tagger":
        raise DataError(f"{path}: expected a joint_tagger checkpoint, got {kind!r}")
    dims = meta["dims"]
    config = TaggerConfig(
        encoder=EncoderConfig(
            word_dim=dims["word_dim"],
            char_dim=dims["char_dim"],
            char_emb_dim=dims["char_emb_dim"],
            source_dim=dims["source_dim"],
            hidden_dim=dims["hidden_dim"],
        ),
        tag_embedding_dim=dims["tag_embedding_dim"],
        decoder_hidden=dims["decoder_hidden"],
        decoder_char_dim=dims["decoder_char_dim"],
        attention_hidden=dims["attention_hidden"],
    )
    model = JointTagger(
        config,
        Vocabulary.from_meta(meta["vocab"]),
        bundles=meta["bundles"],
        lemma_chars=meta["lemma_chars"],
        members=meta["members"],
        seed=meta["seed"],
    )
    model.params.load_arrays(arrays)
    return model
