"""
.. module: jointparse.network
    :platform: Unix
    :synopsis: The joint tagging and parsing network. Builds the computation
    graph of one sentence: word vectors from word embeddings and a character
    BiLSTM, a BiLSTM tagger with an MLP on top, and a BiLSTM parser whose
    MLPs score arcs and relations.

.. version:: $$VERSION$$

"""
from dataclasses import asdict, dataclass, field, fields
from typing import List

import numpy as np

from jointparse.autodiff import ParameterStore, TapeGraph
from jointparse.conllu import DepTree, Prediction, is_projective
from jointparse.constants import TAG_COLUMNS
from jointparse.decoder import eisner_decode, hinge_loss_arc, loss_augmented_decode
from jointparse.exceptions import CheckpointError, ConfigurationError, CyclicTreeError


@dataclass
class Hyperparams:
    word_dim: int = 100
    char_dim: int = 50
    tag_dim: int = 100
    bilstm_layers: int = 2
    bilstm_hidden: int = 128
    mlp_hidden: int = 100
    keep_prob: float = 0.67
    epochs: int = 30
    lr: float = 0.001
    anneal: float = 0.5
    anneal_every: int = 10
    seed: int = 42
    tag_column: str = 'upos'
    single_root: bool = True
    shuffle: bool = True

    def validate(self):
        for name in ('word_dim', 'char_dim', 'tag_dim', 'bilstm_layers', 'bilstm_hidden',
                     'mlp_hidden', 'epochs', 'anneal_every'):
            if getattr(self, name) <= 0:
                raise ConfigurationError("{} must be positive, got {}".format(name, getattr(self, name)))
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigurationError("keep_prob must be in (0, 1], got {}".format(self.keep_prob))
        if self.lr <= 0.0:
            raise ConfigurationError("lr must be positive, got {}".format(self.lr))
        if not 0.0 < self.anneal <= 1.0:
            raise ConfigurationError("anneal must be in (0, 1], got {}".format(self.anneal))
        if self.tag_column not in TAG_COLUMNS:
            raise ConfigurationError("tag_column must be one of {}, got {}".format(
                ', '.join(TAG_COLUMNS), self.tag_column))
        return self

    @property
    def word_vector_dim(self):
        return self.word_dim + 2 * self.char_dim

    @property
    def parser_input_dim(self):
        return self.tag_dim + self.word_vector_dim

    @property
    def context_dim(self):
        return 2 * self.bilstm_hidden

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = set(f.name for f in fields(cls))
        return cls(**dict((k, v) for k, v in data.items() if k in known))


@dataclass
class SentenceEncoding:
    """Intermediate nodes of one sentence's graph, kept for inspection."""
    word_vectors: List[int] = field(default_factory=list)
    tag_contexts: List[int] = field(default_factory=list)
    tag_scores: int = None
    predicted_tags: List[int] = field(default_factory=list)
    parser_inputs: List[int] = field(default_factory=list)
    contexts: int = None


class ArcScoreMatrix(object):
    """
    Arc scores for one sentence. `node` is a graph vector holding one score
    per (head, modifier) pair, modifiers outer and heads inner; `matrix` is
    the same numbers laid out (n+1)x(n+1) for the decoder.
    """

    def __init__(self, n, node, values):
        self.n = n
        self.node = node
        self.pairs = pair_order(n)
        self._positions = dict((pair, i) for i, pair in enumerate(self.pairs))
        self.matrix = np.zeros((n + 1, n + 1))
        for (h, m), value in zip(self.pairs, values):
            self.matrix[h, m] = value

    def position(self, h, m):
        return self._positions[(h, m)]


def pair_order(n):
    return [(h, m) for m in range(1, n + 1) for h in range(n + 1) if h != m]


@dataclass
class LossBreakdown:
    l_pos: float = 0.0
    l_arc: float = 0.0
    l_rel: float = 0.0

    @property
    def total(self):
        return self.l_pos + self.l_arc + self.l_rel

    def __add__(self, other):
        return LossBreakdown(self.l_pos + other.l_pos, self.l_arc + other.l_arc, self.l_rel + other.l_rel)


class JointModel(object):
    """
    Owns the lexicon, hyperparameters and every trainable parameter. Graphs
    are built per sentence; the store is only written by the optimizer, so
    prediction can share one model across threads.
    """

    def __init__(self, lexicon, hyper, store=None):
        self.lexicon = lexicon
        self.hyper = hyper
        if store is None:
            store = ParameterStore(hyper.seed)
            for name, shape, init in self.parameter_specs():
                store.add(name, shape, init)
        else:
            self._check_store(store)
        self.store = store

    def parameter_specs(self):
        """(name, shape, initializer) for every parameter, in creation order."""
        hp, lex = self.hyper, self.lexicon
        specs = [
            ('word_emb', (len(lex.words), hp.word_dim), 'embedding'),
            ('char_emb', (len(lex.chars), hp.char_dim), 'embedding'),
            ('tag_emb', (len(lex.tags), hp.tag_dim), 'embedding'),
            ('root_input', (hp.parser_input_dim,), 'embedding'),
        ]
        specs.extend(_lstm_specs('char', hp.char_dim, hp.char_dim))
        for layer in range(hp.bilstm_layers):
            input_dim = hp.word_vector_dim if layer == 0 else hp.context_dim
            specs.extend(_lstm_specs('pos_l{}'.format(layer), input_dim, hp.bilstm_hidden))
        for layer in range(hp.bilstm_layers):
            input_dim = hp.parser_input_dim if layer == 0 else hp.context_dim
            specs.extend(_lstm_specs('dep_l{}'.format(layer), input_dim, hp.bilstm_hidden))
        specs.extend(_mlp_specs('pos_mlp', hp.context_dim, hp.mlp_hidden, len(lex.tags)))
        specs.extend(_mlp_specs('arc_mlp', 4 * hp.context_dim, hp.mlp_hidden, 1))
        specs.extend(_mlp_specs('rel_mlp', 4 * hp.context_dim, hp.mlp_hidden, len(lex.rels)))
        return specs

    def _check_store(self, store):
        for name, shape, _ in self.parameter_specs():
            if name not in store:
                raise CheckpointError("Parameter {} is missing".format(name))
            if store[name].shape != tuple(shape):
                raise CheckpointError("Parameter {} has shape {}, lexicon and hyperparameters need {}".format(
                    name, store[name].shape, tuple(shape)))

    # Building blocks

    def _dropout(self, graph, x, training):
        return graph.dropout(x, self.hyper.keep_prob, self.store.rng, training)

    def _lstm(self, graph, prefix, inputs, hidden, reverse=False):
        w = graph.parameter(prefix + '_W')
        b = graph.parameter(prefix + '_b')
        h = graph.constant(np.zeros(hidden))
        c = graph.constant(np.zeros(hidden))
        outputs = [None] * len(inputs)
        order = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
        for i in order:
            h, c = graph.lstm_cell(w, b, inputs[i], h, c)
            outputs[i] = h
        return outputs

    def _bilstm(self, graph, prefix, inputs, training):
        """Stacked BiLSTM; each layer reads the concatenated outputs of the one below."""
        hidden = self.hyper.bilstm_hidden
        for layer in range(self.hyper.bilstm_layers):
            name = '{}_l{}'.format(prefix, layer)
            inputs = [self._dropout(graph, x, training) for x in inputs]
            forward = self._lstm(graph, name + '_fwd', inputs, hidden)
            backward = self._lstm(graph, name + '_bwd', inputs, hidden, reverse=True)
            inputs = [graph.concat([f, b]) for f, b in zip(forward, backward)]
        return inputs

    def _mlp(self, graph, prefix, x, training):
        x = self._dropout(graph, x, training)
        hidden = graph.tanh(graph.affine(graph.parameter(prefix + '_W1'), graph.parameter(prefix + '_b1'), x))
        return graph.affine(graph.parameter(prefix + '_W2'), graph.parameter(prefix + '_b2'), hidden)

    def pair_features(self, graph, contexts, heads, mods):
        """v_h o v_m o (v_h * v_m) o |v_h - v_m| for each (head, modifier) row."""
        vh = graph.gather_rows(contexts, heads)
        vm = graph.gather_rows(contexts, mods)
        return graph.concat([vh, vm, graph.mul(vh, vm), graph.abs_diff(vh, vm)])

    # The network

    def encode_word(self, graph, word, training=False):
        """e_i = word embedding o character BiLSTM output."""
        word_index, char_indices = self.lexicon.word_input(word, self.store.rng, training)
        chars = [graph.lookup('char_emb', c) for c in char_indices]
        forward = self._lstm(graph, 'char_fwd', chars, self.hyper.char_dim)
        backward = self._lstm(graph, 'char_bwd', chars, self.hyper.char_dim, reverse=True)
        return graph.concat([graph.lookup('word_emb', word_index), forward[-1], backward[0]])

    def tag_sentence(self, graph, word_vectors, training=False):
        """
        :return: (tag contexts, tag score node with one row per token,
            predicted tag indices; ties go to the lowest index)
        """
        contexts = self._bilstm(graph, 'pos', word_vectors, training)
        scores = self._mlp(graph, 'pos_mlp', graph.stack(contexts), training)
        predicted = [int(i) for i in np.argmax(graph.value(scores), axis=1)]
        return contexts, scores, predicted

    def encode_for_parsing(self, graph, word_vectors, tags, training=False):
        """
        x_i = tag embedding o e_i, run through BiLSTM_dep behind a learned
        root input.

        :return: (parser inputs, matrix node of contexts v_0..v_n)
        """
        inputs = [graph.parameter('root_input')]
        for vector, tag in zip(word_vectors, tags):
            inputs.append(graph.concat([graph.lookup('tag_emb', tag), vector]))
        contexts = self._bilstm(graph, 'dep', inputs, training)
        return inputs, graph.stack(contexts)

    def score_arcs(self, graph, contexts, training=False):
        """Scores every (head, modifier) pair with MLP_arc; no output nonlinearity."""
        n = graph.shape(contexts)[0] - 1
        pairs = pair_order(n)
        features = self.pair_features(graph, contexts, [h for h, _ in pairs], [m for _, m in pairs])
        scores = graph.reshape(self._mlp(graph, 'arc_mlp', features, training), (len(pairs),))
        return ArcScoreMatrix(n, scores, graph.value(scores))

    def score_relations(self, graph, contexts, arcs, training=False):
        """:return: node with one row of relation scores per (head, modifier) arc"""
        features = self.pair_features(graph, contexts, [h for h, _ in arcs], [m for _, m in arcs])
        return self._mlp(graph, 'rel_mlp', features, training)

    def encode(self, graph, sentence, training=False):
        encoding = SentenceEncoding()
        encoding.word_vectors = [self.encode_word(graph, form, training) for form in sentence.forms]
        encoding.tag_contexts, encoding.tag_scores, encoding.predicted_tags = self.tag_sentence(
            graph, encoding.word_vectors, training)
        encoding.parser_inputs, encoding.contexts = self.encode_for_parsing(
            graph, encoding.word_vectors, encoding.predicted_tags, training)
        return encoding

    def build_loss(self, graph, sentence, training=True):
        """
        L = L_POS + L_ARC + L_REL for one fully annotated sentence. The
        parser sees the tagger's predicted tags.

        :return: (loss node, LossBreakdown, whether the gold tree is projective)
        """
        lex = self.lexicon
        encoding = self.encode(graph, sentence, training)
        gold_tags = [lex.tag_index(t) for t in sentence.tags(self.hyper.tag_column)]
        l_pos = graph.softmax_xent(encoding.tag_scores, gold_tags)

        gold = sentence.gold_tree()
        arc_scores = self.score_arcs(graph, encoding.contexts, training)
        predicted = loss_augmented_decode(arc_scores.matrix, gold, self.hyper.single_root)
        l_arc = hinge_loss_arc(graph, arc_scores, gold, predicted)

        rel_scores = self.score_relations(graph, encoding.contexts, gold.arcs(), training)
        l_rel = graph.softmax_xent(rel_scores, [lex.rel_index(r) for r in gold.rels])

        loss = graph.sum_scalars([l_pos, l_arc, l_rel])
        breakdown = LossBreakdown(float(graph.value(l_pos)), float(graph.value(l_arc)), float(graph.value(l_rel)))
        try:
            projective = is_projective(gold)
        except CyclicTreeError:
            projective = False
        return loss, breakdown, projective

    def predict(self, sentence):
        """
        Tags, then parses with Eisner's algorithm and labels the decoded arcs.

        :return: Prediction, or None for a sentence without tokens
        """
        if len(sentence) == 0:
            return None
        lex = self.lexicon
        graph = TapeGraph(self.store)
        encoding = self.encode(graph, sentence, training=False)
        arc_scores = self.score_arcs(graph, encoding.contexts)
        tree = eisner_decode(arc_scores.matrix, single_root=self.hyper.single_root)
        rel_scores = self.score_relations(graph, encoding.contexts, tree.arcs())
        rels = [lex.rels[int(i)] for i in np.argmax(graph.value(rel_scores), axis=1)]
        tags = [lex.tags[i] for i in encoding.predicted_tags]
        return Prediction(tags, DepTree(tree.heads, rels))


def _lstm_specs(prefix, input_dim, hidden):
    specs = []
    directions = ('fwd', 'bwd')
    for direction in directions:
        name = '{}_{}'.format(prefix, direction)
        specs.append((name + '_W', (4 * hidden, input_dim + hidden), 'xavier'))
        specs.append((name + '_b', (4 * hidden,), 'lstm_bias'))
    return specs


def _mlp_specs(prefix, input_dim, hidden, output_dim):
    return [
        (prefix + '_W1', (hidden, input_dim), 'xavier'),
        (prefix + '_b1', (hidden,), 'zeros'),
        (prefix + '_W2', (output_dim, hidden), 'xavier'),
        (prefix + '_b2', (output_dim,), 'zeros'),
    ]
