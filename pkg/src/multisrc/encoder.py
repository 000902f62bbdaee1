"""Shared input pipeline for all neural models.

Per token: a character BiLSTM summary concatenated with a learned word
embedding, and — in gold/pred modes — the data-source embedding e(d) of
the sentence's (gold or predicted) source.  A sentence-level BiLSTM over
these inputs yields the contextual encodings consumed by the parser and
the tagger.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .conllu import Sentence, Treebank
from .errors import DataError
from .nn import BiLSTM, Embedding, ParamSet
from .nn import tensor as T
from .nn.tensor import Tensor

MODE_NONE = "none"
MODE_GOLD = "gold"
MODE_PRED = "pred"
MODES = (MODE_NONE, MODE_GOLD, MODE_PRED)

UNK = "<unk>"


@dataclass
class EncoderConfig:
    word_dim: int = 64  # learned word embedding
    char_dim: int = 64  # char BiLSTM summary (split over two directions)
    char_emb_dim: int = 16
    source_dim: int = 12  # e(d); 0 disables source conditioning entirely
    hidden_dim: int = 128  # sentence BiLSTM size per direction

    def __post_init__(self):
        if self.char_dim % 2:
            raise DataError("char_dim must be even (two directions)")

    @property
    def token_input_dim(self) -> int:
        return self.word_dim + self.char_dim

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim


@dataclass
class Vocabulary:
    words: dict[str, int] = field(default_factory=lambda: {UNK: 0})
    chars: dict[str, int] = field(default_factory=lambda: {UNK: 0})

    @classmethod
    def build(cls, treebanks: list[Treebank]) -> "Vocabulary":
        vocab = cls()
        for tb in treebanks:
            for sent in tb.sentences:
                for tok in sent.tokens:
                    vocab.words.setdefault(tok.form, len(vocab.words))
                    for ch in tok.form:
                        vocab.chars.setdefault(ch, len(vocab.chars))
        return vocab

    def word_id(self, form: str) -> int:
        return self.words.get(form, 0)

    def char_id(self, ch: str) -> int:
        return self.chars.get(ch, 0)

    def to_meta(self) -> dict:
        return {"words": list(self.words), "chars": list(self.chars)}

    @classmethod
    def from_meta(cls, meta: dict) -> "Vocabulary":
        vocab = cls()
        vocab.words = {w: i for i, w in enumerate(meta["words"])}
        vocab.chars = {c: i for i, c in enumerate(meta["chars"])}
        return vocab


class DatasetEmbeddingTable:
    """One learned vector e(d) per member source of a dataset group."""

    def __init__(self, params: ParamSet, members: list[str], dim: int):
        if not members:
            raise DataError("dataset embedding table needs at least one source")
        if len(set(members)) != len(members):
            raise DataError("duplicate source ids in dataset group")
        self.members = list(members)
        self.dim = dim
        self.index = {m: i for i, m in enumerate(self.members)}
        self.emb = Embedding(params, "source_emb", len(self.members), dim)

    def lookup(self, source_id: str) -> Tensor:
        if source_id not in self.index:
            raise DataError(f"source {source_id!r} is not a member of this model's group")
        return self.emb(self.index[source_id])

    def rows(self):
        """(members, matrix) snapshot for export and analysis."""
        return list(self.members), self.emb.table.data.copy()


class SentenceEncoder:
    """Figure-style input pipeline; owns all embedding and BiLSTM parameters.

    `members` is the dataset group served by this model; pass an empty
    list (or source_dim 0) for models trained without source conditioning.
    """

    def __init__(
        self,
        params: ParamSet,
        config: EncoderConfig,
        vocab: Vocabulary,
        members: list[str] | None = None,
    ):
        self.config = config
        self.vocab = vocab
        self.members = list(members or [])
        self.word_emb = Embedding(params, "word_emb", len(vocab.words), config.word_dim)
        self.char_emb = Embedding(params, "char_emb", len(vocab.chars), config.char_emb_dim)
        self.char_bilstm = BiLSTM(params, "char_bilstm", config.char_emb_dim, config.char_dim // 2)
        self.source_table = None
        if self.members and config.source_dim > 0:
            self.source_table = DatasetEmbeddingTable(params, self.members, config.source_dim)
        input_dim = config.token_input_dim + (config.source_dim if self.source_table else 0)
        self.sentence_bilstm = BiLSTM(params, "sent_bilstm", input_dim, config.hidden_dim)

    # -- word channel --------------------------------------------------------

    def char_sequence(self, form: str):
        """Per-character encodings plus the word summary vector."""
        if not form:
            raise DataError("cannot embed an empty form")
        embs = [self.char_emb(self.vocab.char_id(ch)) for ch in form]
        fwd = self.char_bilstm.fwd.run(embs)
        bwd = self.char_bilstm.bwd.run(list(reversed(embs)))
        per_char = [T.concat([f, b]) for f, b in zip(fwd, bwd[::-1])]
        summary = T.concat([fwd[-1], bwd[-1]])
        return per_char, summary

    def embed_word(self, form: str) -> Tensor:
        """Char-summary ++ word embedding; unseen forms hit the UNK row."""
        _, summary = self.char_sequence(form)
        return T.concat([summary, self.word_emb(self.vocab.word_id(form))])

    # -- sentence channel ------------------------------------------------------

    def _source_for(self, sentence: Sentence, mode: str) -> str:
        if mode == MODE_GOLD:
            if sentence.source_id is None:
                raise DataError("gold mode requires sentence.source_id")
            return sentence.source_id
        if sentence.predicted_source_id is None:
            raise DataError("pred mode requires sentence.predicted_source_id")
        return sentence.predicted_source_id

    def token_inputs(self, sentence: Sentence, mode: str) -> list[Tensor]:
        """Concatenated encoder inputs, one per token, before the BiLSTM."""
        if mode not in MODES:
            raise DataError(f"unknown encoder mode {mode!r}")
        if mode != MODE_NONE and not self.members:
            raise DataError(f"mode {mode!r} requires a model built with source embeddings")
        word_parts = [self.embed_word(tok.form) for tok in sentence.tokens]
        if mode == MODE_NONE:
            return word_parts
        source = self._source_for(sentence, mode)
        if source not in self.members:
            raise DataError(f"source {source!r} is not a member of this model's group")
        if self.source_table is None:  # source_dim 0: degenerates to mode none
            return word_parts
        source_vec = self.source_table.lookup(source)
        return [T.concat([w, source_vec]) for w in word_parts]

    def encode_sentence(self, sentence: Sentence, mode: str) -> list[Tensor]:
        """Contextual encodings e(c_i), one per token, width 2*hidden_dim."""
        if not sentence.tokens:
            return []
        return self.sentence_bilstm.run(self.token_inputs(sentence, mode))

    def export_table_tsv(self) -> str:
        """TSV of the source-embedding table (header + one row per source)."""
        if self.source_table is None:
            raise DataError("model has no dataset embedding table")
        members, matrix = self.source_table.rows()
        header = "source_id\t" + "\t".join(f"dim_{i}" for i in range(matrix.shape[1]))
        lines = [header]
        for member, row in zip(members, matrix):
            lines.append(member + "\t" + "\t".join(format(v, ".17g") for v in row))
        return "\n".join(lines) + "\n"
