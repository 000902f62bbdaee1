"""Shared builders for small synthetic treebanks used across tests."""

from multisrc.conllu import Sentence, Token, Treebank


def sentence_from_words(words, heads=None, deprels=None, lemmas=None,
                        morphs=None, source_id=None):
    n = len(words)
    heads = heads if heads is not None else [0 if i == n - 1 else i + 2 for i in range(n)]
    deprels = deprels or ["dep"] * n
    lemmas = lemmas or list(words)
    morphs = morphs or [set() for _ in range(n)]
    tokens = [
        Token(id=i + 1, form=words[i], lemma=lemmas[i], upos="X",
              morph=set(morphs[i]), head=heads[i], deprel=deprels[i])
        for i in range(n)
    ]
    return Sentence(tokens=tokens, source_id=source_id)


def treebank_from_sentences(source_id, word_lists, split="train"):
    sentences = [sentence_from_words(words) for words in word_lists]
    return Treebank(source_id=source_id, split=split, sentences=sentences)
