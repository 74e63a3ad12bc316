"""
.. module: jointparse.conllu
    :platform: Unix
    :synopsis: Reads and writes CoNLL-U treebanks. Comments, multiword tokens and
    empty nodes are carried through untouched so predictions can be written back
    in place.

.. version:: $$VERSION$$

"""
import io
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from jointparse import app
from jointparse.constants import TAG_COLUMNS
from jointparse.exceptions import (ConfigurationError, ConllParseError, CyclicTreeError,
                                   PredictionMismatch, TreebankTooSmall)

UNSET = u'_'


@dataclass
class Token:
    id: int
    form: str
    lemma: str = UNSET
    upos: str = UNSET
    xpos: str = UNSET
    feats: str = UNSET
    head: Optional[int] = None
    deprel: Optional[str] = None
    deps: str = UNSET
    misc: str = UNSET

    def tag(self, column):
        return self.upos if column == 'upos' else self.xpos

    def columns(self, tag=None, tag_column='upos', head=None, deprel=None):
        """
        The ten CoNLL-U fields of this token, optionally with the tag column,
        HEAD and DEPREL replaced.
        """
        upos, xpos = self.upos, self.xpos
        if tag is not None:
            if tag_column == 'upos':
                upos = tag
            else:
                xpos = tag
        head = self.head if head is None else head
        deprel = self.deprel if deprel is None else deprel
        return [str(self.id), self.form, self.lemma, upos, xpos, self.feats,
                UNSET if head is None else str(head),
                UNSET if deprel is None else deprel,
                self.deps, self.misc]


@dataclass
class MultiwordSpan:
    first: int
    last: int
    form: str
    raw: str


@dataclass
class DepTree:
    """Head (0 = root) and relation label for every token of a sentence."""
    heads: List[int]
    rels: Optional[List[str]] = None

    def __len__(self):
        return len(self.heads)

    def arcs(self):
        """(head, modifier) pairs, modifiers numbered from 1."""
        return [(h, m) for m, h in enumerate(self.heads, 1)]


@dataclass
class Prediction:
    """What the model assigns to one sentence: a tag per token and a labelled tree."""
    tags: List[str]
    tree: DepTree


@dataclass
class Sentence:
    tokens: List[Token] = field(default_factory=list)
    comments: List[str] = field(default_factory=list)
    mwt_spans: List[MultiwordSpan] = field(default_factory=list)
    empty_nodes: List[str] = field(default_factory=list)
    # Original line order: ('comment', i), ('mwt', i), ('empty', i) or ('token', i)
    layout: List[tuple] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    @property
    def forms(self):
        return [t.form for t in self.tokens]

    def tags(self, column='upos'):
        return [t.tag(column) for t in self.tokens]

    def is_fully_annotated(self):
        return all(t.head is not None and t.deprel is not None for t in self.tokens)

    def gold_tree(self):
        return DepTree([t.head for t in self.tokens], [t.deprel for t in self.tokens])

    def is_well_formed(self):
        """Exactly one root child and no cycles. Checked on demand only."""
        if not self.is_fully_annotated():
            return False
        heads = [t.head for t in self.tokens]
        if heads.count(0) != 1:
            return False
        return not has_cycle(heads)


def _parse_int(value, line_number, what):
    try:
        return int(value)
    except ValueError:
        raise ConllParseError(line_number, "{} {!r} is not an integer".format(what, value))


def _finish_sentence(sentence, token_lines):
    n = len(sentence.tokens)
    for token, line_number in zip(sentence.tokens, token_lines):
        if token.head is None:
            continue
        if token.head < 0 or token.head > n:
            raise ConllParseError(line_number, "head {} out of range for a {}-token sentence".format(
                token.head, n))
        if token.head == token.id:
            raise ConllParseError(line_number, "token {} is its own head".format(token.id))
    return sentence


def _parse_sentence(block):
    sentence = Sentence()
    token_lines = []
    for line_number, line in block:
        if line.startswith(u'#'):
            sentence.layout.append(('comment', len(sentence.comments)))
            sentence.comments.append(line)
            continue
        columns = line.split(u'\t')
        if len(columns) != 10:
            raise ConllParseError(line_number, "expected 10 tab-separated columns, found {}".format(
                len(columns)))
        token_id = columns[0]
        if u'-' in token_id:
            first, last = token_id.split(u'-', 1)
            span = MultiwordSpan(_parse_int(first, line_number, 'range start'),
                                 _parse_int(last, line_number, 'range end'),
                                 columns[1], line)
            sentence.layout.append(('mwt', len(sentence.mwt_spans)))
            sentence.mwt_spans.append(span)
            continue
        if u'.' in token_id:
            sentence.layout.append(('empty', len(sentence.empty_nodes)))
            sentence.empty_nodes.append(line)
            continue

        index = _parse_int(token_id, line_number, 'id')
        expected = len(sentence.tokens) + 1
        if index < expected:
            raise ConllParseError(line_number, "duplicate id {}".format(index))
        if index != expected:
            raise ConllParseError(line_number, "id {} where {} was expected".format(index, expected))
        head = None if columns[6] == UNSET else _parse_int(columns[6], line_number, 'head')
        deprel = None if columns[7] == UNSET else columns[7]
        sentence.layout.append(('token', len(sentence.tokens)))
        sentence.tokens.append(Token(index, columns[1], columns[2], columns[3], columns[4],
                                     columns[5], head, deprel, columns[8], columns[9]))
        token_lines.append(line_number)
    return _finish_sentence(sentence, token_lines)


def read_treebank(source):
    """
    Reads a CoNLL-U treebank.

    :param source: a path or an open text stream
    :return: list of Sentence
    """
    if isinstance(source, str):
        with io.open(source, 'r', encoding='utf-8') as stream:
            return read_treebank(stream)

    sentences = []
    block = []
    for line_number, line in enumerate(source, 1):
        line = line.rstrip(u'\r\n')
        if line.strip() == u'':
            if block:
                sentences.append(_parse_sentence(block))
                block = []
            continue
        block.append((line_number, line))
    if block:
        sentences.append(_parse_sentence(block))

    app.logger.debug("Read {} sentences".format(len(sentences)))
    return sentences


def sentence_lines(sentence, prediction=None, tag_column='upos'):
    """Renders one sentence as CoNLL-U lines, without the blank separator."""
    lines = []
    for kind, index in sentence.layout:
        if kind == 'comment':
            lines.append(sentence.comments[index])
        elif kind == 'mwt':
            lines.append(sentence.mwt_spans[index].raw)
        elif kind == 'empty':
            lines.append(sentence.empty_nodes[index])
        else:
            token = sentence.tokens[index]
            if prediction is None:
                columns = token.columns()
            else:
                rel = prediction.tree.rels[index] if prediction.tree.rels is not None else None
                columns = token.columns(tag=prediction.tags[index], tag_column=tag_column,
                                        head=prediction.tree.heads[index], deprel=rel)
            lines.append(u'\t'.join(columns))
    return lines


def write_treebank(sentences, stream, predictions=None, tag_column='upos'):
    """
    Writes sentences as CoNLL-U with LF line endings. With predictions, the
    tag column, HEAD and DEPREL of every token are overwritten; everything
    else stays where it was.

    :param predictions: None, or one Prediction (or None) per sentence
    """
    if tag_column not in TAG_COLUMNS:
        raise ConfigurationError("Unknown tag column {}".format(tag_column))
    if predictions is not None and len(predictions) != len(sentences):
        raise PredictionMismatch(len(sentences), len(sentences), len(predictions))

    for index, sentence in enumerate(sentences):
        prediction = predictions[index] if predictions is not None else None
        if prediction is not None:
            n = len(sentence.tokens)
            for got in (len(prediction.tags), len(prediction.tree.heads)):
                if got != n:
                    raise PredictionMismatch(index, n, got)
            if prediction.tree.rels is not None and len(prediction.tree.rels) != n:
                raise PredictionMismatch(index, n, len(prediction.tree.rels))
        for line in sentence_lines(sentence, prediction, tag_column):
            stream.write(line + u'\n')
        stream.write(u'\n')
    return stream


def split_9_1(sentences, seed=42):
    """
    Splits a treebank without development data into train and dev parts at
    a 9:1 ratio. The split is a seeded permutation; both parts keep the
    original sentence order.

    :return: (train, dev)
    """
    n = len(sentences)
    if n < 10:
        raise TreebankTooSmall(10, n)
    dev_size = int(n / 10.0 + 0.5)
    order = np.random.default_rng(seed).permutation(n)
    dev_indices = set(int(i) for i in order[:dev_size])
    train = [s for i, s in enumerate(sentences) if i not in dev_indices]
    dev = [s for i, s in enumerate(sentences) if i in dev_indices]
    app.logger.info("Split {} sentences into {} train / {} dev".format(n, len(train), len(dev)))
    return train, dev


def has_cycle(heads):
    """True when following heads from some token never reaches the root."""
    n = len(heads)
    state = [0] * (n + 1)  # 0 unvisited, 1 on current path, 2 reaches root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
            if node is None or node < 0 or node > n:
                return True
        if state[node] == 1:
            return True
        for visited in path:
            state[visited] = 2
    return False


def arcs_cross(a, b):
    """True when two arcs, each a (head, modifier) pair, cross when drawn above the sentence."""
    (i, j), (k, l) = sorted(a), sorted(b)
    return i < k < j < l or k < i < l < j


def is_projective(tree):
    """
    True iff no two arcs cross and no arc spans a token whose head lies
    outside that arc's span.

    :raises CyclicTreeError: when the heads contain a cycle
    """
    heads = list(tree.heads)
    if has_cycle(heads):
        raise CyclicTreeError(heads)
    arcs = [(h, m) for m, h in enumerate(heads, 1)]
    for x in range(len(arcs)):
        for y in range(x + 1, len(arcs)):
            if arcs_cross(arcs[x], arcs[y]):
                return False
    for h, m in arcs:
        low, high = min(h, m), max(h, m)
        for k in range(low + 1, high):
            if not low <= heads[k - 1] <= high:
                return False
    return True


def with_prediction(sentence, prediction, tag_column='upos'):
    """A copy of the sentence whose tokens carry the predicted tag, head and relation."""
    if prediction is None:
        return sentence
    tokens = []
    for index, token in enumerate(sentence.tokens):
        changes = {tag_column: prediction.tags[index], 'head': prediction.tree.heads[index]}
        if prediction.tree.rels is not None:
            changes['deprel'] = prediction.tree.rels[index]
        tokens.append(replace(token, **changes))
    return replace(sentence, tokens=tokens)
