"""
.. module: jointparse.lexicon
    :platform: Unix
    :synopsis: Word, character, tag and relation vocabularies built from the
    training treebank, word dropout, and pretrained word vector loading.

.. version:: $$VERSION$$

"""
import io
from collections import Counter
from dataclasses import dataclass

import numpy as np

from jointparse import app
from jointparse.constants import PAD, UNK, WORD_DROPOUT_ALPHA
from jointparse.exceptions import (LexiconError, PretrainedDimensionMismatch,
                                   PretrainedFormatError)


def unk_probability(count):
    """p_unk(w) = 0.25 / (0.25 + #(w))"""
    return WORD_DROPOUT_ALPHA / (WORD_DROPOUT_ALPHA + count)


class Lexicon(object):
    """
    Dense index maps for words (with training counts), characters, tags and
    relations. Words and characters reserve index 0 for padding and 1 for
    the unknown symbol; tags and relations are exactly the training sets.
    """

    def __init__(self, words, word_counts, chars, tags, rels, word_dim=100, char_dim=50, tag_dim=100):
        self.words = list(words)
        self.word_counts = dict(word_counts)
        self.chars = list(chars)
        self.tags = list(tags)
        self.rels = list(rels)
        self.word_dim = word_dim
        self.char_dim = char_dim
        self.tag_dim = tag_dim
        self._word_index = {w: i for i, w in enumerate(self.words)}
        self._char_index = {c: i for i, c in enumerate(self.chars)}
        self._tag_index = {t: i for i, t in enumerate(self.tags)}
        self._rel_index = {r: i for i, r in enumerate(self.rels)}

    @property
    def unk_word(self):
        return self._word_index[UNK]

    @property
    def unk_char(self):
        return self._char_index[UNK]

    def word_index(self, word):
        return self._word_index.get(word, self.unk_word)

    def char_indices(self, word):
        if not word:
            return [self.unk_char]
        return [self._char_index.get(c, self.unk_char) for c in word]

    def tag_index(self, tag):
        return self._tag_index[tag]

    def rel_index(self, rel):
        return self._rel_index[rel]

    def has_tag(self, tag):
        return tag in self._tag_index

    def has_rel(self, rel):
        return rel in self._rel_index

    def count(self, word):
        """#(w) in the training data; 0 for unseen words."""
        return self.word_counts.get(word, 0)

    def word_dropout_decide(self, word, rng):
        """
        :return: True when this training occurrence of `word` should be
            replaced by the unknown word for the word-embedding lookup.
        """
        count = self.count(word)
        if count == 0:
            return False
        return rng.random() < unk_probability(count)

    def word_input(self, word, rng=None, training=False):
        """
        Indices fed to the word encoder: the word row (subject to word dropout
        when training) and the character rows, which word dropout never touches.

        :return: (word index, list of char indices)
        """
        index = self.word_index(word)
        if training and rng is not None and self.word_dropout_decide(word, rng):
            index = self.unk_word
        return index, self.char_indices(word)

    def to_dict(self):
        return {
            'words': self.words,
            'word_counts': [[w, self.word_counts[w]] for w in self.words if w in self.word_counts],
            'chars': self.chars,
            'tags': self.tags,
            'rels': self.rels,
            'word_dim': self.word_dim,
            'char_dim': self.char_dim,
            'tag_dim': self.tag_dim,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data['words'], dict((w, c) for w, c in data['word_counts']), data['chars'],
                       data['tags'], data['rels'], data['word_dim'], data['char_dim'], data['tag_dim'])
        except (KeyError, TypeError, ValueError) as e:
            raise LexiconError("Cannot restore lexicon: {}".format(e))

    def __eq__(self, other):
        return isinstance(other, Lexicon) and self.to_dict() == other.to_dict()


def build_lexicon(train_sentences, word_dim=100, char_dim=50, tag_dim=100, tag_column='upos'):
    """
    Builds the vocabularies from training sentences. Every training word gets
    an entry; there is no frequency cutoff. Entries are ordered by first
    occurrence.
    """
    if not train_sentences or not any(len(s) for s in train_sentences):
        raise LexiconError("Cannot build a lexicon from an empty corpus")

    word_counts = Counter()
    chars = Counter()
    tags = Counter()
    rels = Counter()
    for sentence in train_sentences:
        for token in sentence.tokens:
            word_counts[token.form] += 1
            chars.update(token.form)
            tags[token.tag(tag_column)] += 1
            if token.deprel is not None:
                rels[token.deprel] += 1

    lexicon = Lexicon([PAD, UNK] + list(word_counts), word_counts, [PAD, UNK] + list(chars),
                      list(tags), list(rels), word_dim, char_dim, tag_dim)
    app.logger.info("Lexicon: {} words, {} chars, {} tags, {} relations".format(
        len(lexicon.words), len(lexicon.chars), len(lexicon.tags), len(lexicon.rels)))
    return lexicon


@dataclass
class CoverageReport:
    hits: int = 0
    lowercase_hits: int = 0
    misses: int = 0
    vectors_read: int = 0

    @property
    def covered(self):
        return self.hits + self.lowercase_hits


def _is_header(fields):
    return len(fields) == 2 and all(f.isdigit() for f in fields)


def read_pretrained(path, dim):
    """
    Reads a whitespace-separated vector file, one "word v1 ... vD" per line.
    An optional "count dim" first line is skipped.

    :return: dict word -> numpy vector
    """
    vectors = {}
    with io.open(path, 'r', encoding='utf-8') as stream:
        for line_number, line in enumerate(stream, 1):
            fields = line.split()
            if not fields:
                continue
            if line_number == 1 and _is_header(fields):
                continue
            if len(fields) < 2:
                raise PretrainedFormatError(path, line_number, "no vector values")
            if len(fields) - 1 != dim:
                raise PretrainedDimensionMismatch(path, dim, len(fields) - 1)
            try:
                vectors[fields[0]] = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError:
                raise PretrainedFormatError(path, line_number, "non-numeric vector value")
    return vectors


def load_pretrained(path, lexicon, store, table='word_emb'):
    """
    Overwrites word embedding rows with pretrained vectors. Words are matched
    case-sensitively, then by their lowercase form. Words absent from the
    file keep their random initialization.

    :return: CoverageReport
    """
    vectors = read_pretrained(path, lexicon.word_dim)
    embeddings = store[table].value
    report = CoverageReport(vectors_read=len(vectors))
    for index, word in enumerate(lexicon.words):
        if word in (PAD, UNK):
            continue
        if word in vectors:
            embeddings[index] = vectors[word]
            report.hits += 1
        elif word.lower() in vectors:
            embeddings[index] = vectors[word.lower()]
            report.lowercase_hits += 1
        else:
            report.misses += 1
    app.logger.info("Pretrained vectors from {}: {} exact hits, {} lowercase hits, {} misses".format(
        path, report.hits, report.lowercase_hits, report.misses))
    return report
