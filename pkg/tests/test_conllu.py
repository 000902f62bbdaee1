import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multisrc.conllu import Sentence, Token, Treebank, parse_conllu, write_conllu
from multisrc.errors import ConlluParseError, DataError

TWO_TOKEN = (
    "1\tcats\tcat\tNOUN\t_\tNumber=Plur\t2\tnsubj\t_\t_\n"
    "2\tsleep\tsleep\tVERB\t_\t_\t0\troot\t_\t_\n\n"
)


def test_parse_two_token_sentence():
    tb = parse_conllu(TWO_TOKEN, "en_x")
    assert len(tb) == 1
    sent = tb.sentences[0]
    assert len(sent) == 2
    assert sent.tokens[0].form == "cats"
    assert sent.tokens[0].lemma == "cat"
    assert sent.tokens[0].morph == {"Number=Plur"}
    assert sent.tokens[0].head == 2
    assert sent.tokens[1].head == 0
    assert sent.tokens[1].deprel == "root"
    assert sent.source_id == "en_x"


def test_parse_empty_input():
    tb = parse_conllu("", "x")
    assert len(tb) == 0


def test_parse_nine_columns_fails_with_line_number():
    bad = "1\ta\tb\tc\t_\t_\t0\troot\t_\n\n"
    with pytest.raises(ConlluParseError, match="line 1"):
        parse_conllu(bad, "x")


def test_parse_errors():
    with pytest.raises(ConlluParseError, match="non-integer token id"):
        parse_conllu("x\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n", "x")
    with pytest.raises(ConlluParseError, match="non-integer head"):
        parse_conllu("1\ta\t_\t_\t_\t_\tz\troot\t_\t_\n\n", "x")
    with pytest.raises(ConlluParseError, match="out of range"):
        parse_conllu("1\ta\t_\t_\t_\t_\t5\troot\t_\t_\n\n", "x")
    dup = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n1\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n"
    with pytest.raises(ConlluParseError, match="duplicate token id"):
        parse_conllu(dup, "x")


def test_headless_sentences_allowed():
    tb = parse_conllu("1\ta\t_\t_\t_\t_\t_\t_\t_\t_\n\n", "x")
    assert tb.sentences[0].tokens[0].head is None
    assert not tb.sentences[0].has_full_tree()


def test_multiword_and_empty_node_lines_preserved_not_modeled():
    text = (
        "# sent_id = 1\n"
        "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tde\t_\t_\t_\t_\t2\tcase\t_\t_\n"
        "2\tle\t_\t_\t_\t_\t0\troot\t_\t_\n"
        "2.1\tnull\t_\t_\t_\t_\t_\t_\t_\t_\n\n"
    )
    tb = parse_conllu(text, "fr_x")
    sent = tb.sentences[0]
    assert [t.form for t in sent.tokens] == ["de", "le"]
    assert any(line.startswith("1-2\t") for line in sent.comments)
    assert any(line.startswith("2.1\t") for line in sent.comments)
    # round-trip keeps the preserved lines and the token fields
    again = parse_conllu(write_conllu(tb), "fr_x")
    assert [t.form for t in again.sentences[0].tokens] == ["de", "le"]


def test_misc_dataset_conflict_raises():
    text = "1\ta\t_\t_\t_\t_\t0\troot\t_\tdataset=en_a\n\n"
    assert parse_conllu(text, "en_a").sentences[0].source_id == "en_a"
    with pytest.raises(ConlluParseError, match="dataset"):
        parse_conllu(text, "en_b")
    two = (
        "1\ta\t_\t_\t_\t_\t0\troot\t_\tdataset=en_a\n"
        "2\tb\t_\t_\t_\t_\t1\tdep\t_\tdataset=en_b\n\n"
    )
    with pytest.raises(ConlluParseError, match="conflicting"):
        parse_conllu(two, "en_a")


def test_parse_without_declared_source_infers_from_stamps():
    stamped = "1\ta\t_\t_\t_\t_\t0\troot\t_\tdataset=en_a\n\n"
    tb = parse_conllu(stamped)
    assert tb.source_id == "en_a"
    assert tb.sentences[0].source_id == "en_a"
    # unstamped input falls back to a placeholder id
    assert parse_conllu("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n").source_id == "unknown"
    mixed = (
        "1\ta\t_\t_\t_\t_\t0\troot\t_\tdataset=en_a\n\n"
        "1\tb\t_\t_\t_\t_\t0\troot\t_\tdataset=en_b\n\n"
    )
    with pytest.raises(DataError, match="mixes dataset ids"):
        parse_conllu(mixed)


def test_write_stamps_dataset_key():
    tb = parse_conllu(TWO_TOKEN, "en_ewt")
    out = write_conllu(tb, embed_source_in_misc=True)
    for line in out.splitlines():
        if line and not line.startswith("#"):
            assert line.endswith("dataset=en_ewt")


def test_misc_written_in_sorted_key_order():
    tok = Token(id=1, form="x", head=0, deprel="root",
                misc={"dataset": "x", "SpaceAfter": "No"})
    tb = Treebank(source_id="x", sentences=[Sentence(tokens=[tok])])
    out = write_conllu(tb)
    assert out.splitlines()[0].split("\t")[9] == "SpaceAfter=No|dataset=x"
    again = parse_conllu(out, "x")
    assert again.sentences[0].tokens[0].misc == {"dataset": "x", "SpaceAfter": "No"}


def test_multiple_roots_rejected():
    text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
    with pytest.raises(ConlluParseError, match="multiple root"):
        parse_conllu(text, "x")


def test_token_invariants():
    with pytest.raises(DataError):
        Token(id=0, form="a")
    with pytest.raises(DataError):
        Token(id=1, form="a", head=1)
    with pytest.raises(DataError):
        Token(id=1, form="a", morph={"NoEquals"})


# --- randomized round-trip property ------------------------------------

_form = st.text(
    alphabet=st.characters(
        codec="utf-8",
        categories=["L", "N", "P", "S"],
        exclude_characters="\t\n\r|=#_ ",
    ),
    min_size=1,
    max_size=8,
)
_feat = st.tuples(
    st.sampled_from(["Number", "Case", "Tense", "Mood"]),
    st.sampled_from(["A", "B", "C", "Plur", "Sing"]),
).map(lambda kv: f"{kv[0]}={kv[1]}")
_misc_kv = st.tuples(
    st.sampled_from(["SpaceAfter", "Gloss", "note"]),
    st.text(alphabet="abcXYZ09", min_size=0, max_size=5),
)


@st.composite
def sentences(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    root = draw(st.integers(min_value=1, max_value=n))
    tokens = []
    for i in range(1, n + 1):
        if i == root:
            head = 0
        else:
            head = draw(st.integers(min_value=1, max_value=n).filter(lambda h, i=i: h != i))
        tokens.append(
            Token(
                id=i,
                form=draw(_form),
                lemma=draw(_form),
                upos=draw(st.sampled_from(["NOUN", "VERB", "DET", ""])),
                morph=set(draw(st.lists(_feat, max_size=3))),
                head=head,
                deprel=draw(st.sampled_from(["nsubj", "obj", "det", "root"])),
                misc=dict(draw(st.lists(_misc_kv, max_size=2))),
            )
        )
    return Sentence(tokens=tokens)


@given(st.lists(sentences(), min_size=0, max_size=5))
@settings(max_examples=120, deadline=None)
def test_roundtrip_identity_on_token_fields(sents):
    tb = Treebank(source_id="prop_src", sentences=sents)
    again = parse_conllu(write_conllu(tb), "prop_src")
    assert len(again) == len(tb)
    for s1, s2 in zip(tb.sentences, again.sentences):
        assert len(s1) == len(s2)
        for t1, t2 in zip(s1.tokens, s2.tokens):
            assert (t1.id, t1.form, t1.lemma, t1.upos) == (t2.id, t2.form, t2.lemma, t2.upos)
            assert t1.morph == t2.morph
            assert (t1.head, t1.deprel) == (t2.head, t2.deprel)
            assert t1.misc == t2.misc


def test_no_token_silently_dropped():
    text = (
        "# c\n"
        "1-2\tmw\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
        "2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
        "1\tc\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
    )
    plain_id_lines = sum(
        1
        for line in text.splitlines()
        if line and not line.startswith("#") and line.split("\t")[0].isdigit()
    )
    tb = parse_conllu(text, "x")
    assert sum(len(s) for s in tb.sentences) == plain_id_lines == 3
