"""
.. module: jointparse.tests.test_network
    :platform: Unix

.. version:: $$VERSION$$

"""
import numpy as np

from jointparse.autodiff import ParameterStore, TapeGraph
from jointparse.conllu import Sentence, Token, read_treebank
from jointparse.exceptions import CheckpointError, ConfigurationError
from jointparse.lexicon import build_lexicon
from jointparse.network import Hyperparams, JointModel, LossBreakdown, pair_order
from jointparse.tests import (TOY_TREEBANK, JointParseTestCase, finite_difference, relative_error,
                              tiny_hyperparams)
from jointparse.trainer import predict_treebank


def five_token_sentence():
  rows = [(u'la', u'A', 2, u'r1'), (u'casa', u'B', 0, u'r2'), (u'es', u'A', 2, u'r3'),
          (u'muy', u'B', 5, u'r1'), (u'grande', u'A', 3, u'r3')]
  sentence = Sentence()
  for index, (form, tag, head, rel) in enumerate(rows, 1):
    sentence.layout.append(('token', index - 1))
    sentence.tokens.append(Token(index, form, upos=tag, head=head, deprel=rel))
  return sentence


class HyperparamsTestCase(JointParseTestCase):

  def test_defaults(self):
    hyper = Hyperparams()
    self.assertEqual(hyper.word_vector_dim, 200)
    self.assertEqual(hyper.parser_input_dim, 300)
    self.assertEqual(hyper.context_dim, 256)
    self.assertEqual((hyper.bilstm_layers, hyper.bilstm_hidden, hyper.mlp_hidden), (2, 128, 100))
    self.assertEqual((hyper.keep_prob, hyper.epochs, hyper.lr), (0.67, 30, 0.001))

  def test_validate(self):
    with self.assertRaises(ConfigurationError):
      Hyperparams(keep_prob=0.0).validate()
    with self.assertRaises(ConfigurationError):
      Hyperparams(bilstm_layers=0).validate()
    with self.assertRaises(ConfigurationError):
      Hyperparams(tag_column='lemma').validate()

  def test_round_trip(self):
    hyper = Hyperparams(bilstm_hidden=256, single_root=False)
    self.assertEqual(Hyperparams.from_dict(hyper.to_dict()), hyper)


class JointModelTestCase(JointParseTestCase):

  def setUp(self):
    super(JointModelTestCase, self).setUp()
    self.sentence = five_token_sentence()
    self.hyper = tiny_hyperparams(bilstm_layers=2)
    self.lexicon = build_lexicon([self.sentence], 4, 4, 4)
    self.model = JointModel(self.lexicon, self.hyper)

  def test_parameter_shapes(self):
    store = self.model.store
    self.assertEqual(store['word_emb'].shape, (len(self.lexicon.words), 4))
    self.assertEqual(store['root_input'].shape, (4 + 4 + 8,))
    self.assertEqual(store['char_fwd_W'].shape, (16, 8))
    self.assertEqual(store['pos_l0_fwd_W'].shape, (24, 12 + 6))
    self.assertEqual(store['dep_l0_bwd_W'].shape, (24, 16 + 6))
    self.assertEqual(store['dep_l1_fwd_W'].shape, (24, 12 + 6))
    self.assertEqual(store['arc_mlp_W1'].shape, (6, 48))
    self.assertEqual(store['arc_mlp_W2'].shape, (1, 6))
    self.assertEqual(store['rel_mlp_W2'].shape, (3, 6))
    self.assertEqual(store['pos_mlp_W2'].shape, (2, 6))
    np.testing.assert_array_equal(store['pos_l0_fwd_b'].value[6:12], np.ones(6))

  def test_pair_order(self):
    self.assertEqual(pair_order(2), [(0, 1), (2, 1), (0, 2), (1, 2)])

  def test_arc_features_depend_on_direction(self):
    graph = TapeGraph(self.model.store)
    contexts = self.model.encode(graph, self.sentence).contexts
    forward = graph.value(self.model.pair_features(graph, contexts, [1, 3], [3, 4]))
    swapped = graph.value(self.model.pair_features(graph, contexts, [3, 4], [1, 3]))
    self.assertEqual(forward.shape, (2, 48))
    self.assertFalse(np.allclose(forward, swapped))
    np.testing.assert_array_equal(forward[:, :12], swapped[:, 12:24])
    np.testing.assert_array_equal(forward[:, 24:], swapped[:, 24:])
    matrix = self.model.score_arcs(graph, contexts).matrix
    self.assertNotEqual(matrix[1, 3], matrix[3, 1])

  def test_loss_breakdown(self):
    graph = TapeGraph(self.model.store)
    loss, breakdown, projective = self.model.build_loss(graph, self.sentence, training=False)
    self.assertTrue(projective)
    self.assertGreater(breakdown.l_pos, 0.0)
    self.assertGreaterEqual(breakdown.l_arc, 0.0)
    self.assertGreater(breakdown.l_rel, 0.0)
    self.assertAlmostEqual(float(graph.value(loss)), breakdown.total)
    total = LossBreakdown(1.0, 2.0, 3.0) + breakdown
    self.assertAlmostEqual(total.l_arc, 2.0 + breakdown.l_arc)

  def test_joint_gradient_matches_finite_differences(self):
    store = self.model.store

    def loss_value():
      graph = TapeGraph(store)
      loss, _, _ = self.model.build_loss(graph, self.sentence, training=False)
      return float(graph.value(loss))

    graph = TapeGraph(store)
    loss, _, _ = self.model.build_loss(graph, self.sentence, training=False)
    graph.backward(loss)
    analytic = dict((name, store[name].grad.copy()) for name in store.names())
    store.zero_grad()

    rng = np.random.default_rng(0)
    worst = 0.0
    for name in store.names():
      size = store[name].value.size
      for flat in rng.choice(size, size=min(size, 8), replace=False):
        index = np.unravel_index(int(flat), store[name].shape)
        numeric = finite_difference(store, name, index, loss_value)
        worst = max(worst, relative_error(analytic[name][index], numeric))
    self.assertLess(worst, 1e-5)

  def test_dropout_only_while_training(self):
    model = JointModel(self.lexicon, tiny_hyperparams(bilstm_layers=2, keep_prob=0.5))

    def loss_value(training):
      graph = TapeGraph(model.store)
      loss, _, _ = model.build_loss(graph, self.sentence, training=training)
      return float(graph.value(loss))

    self.assertEqual(loss_value(False), loss_value(False))
    self.assertNotEqual(loss_value(True), loss_value(True))

  def test_predict(self):
    prediction = self.model.predict(self.sentence)
    self.assertEqual(len(prediction.tags), 5)
    self.assertEqual(len(prediction.tree.heads), 5)
    self.assertEqual(prediction.tree.heads.count(0), 1)
    self.assertTrue(set(prediction.tags) <= set(self.lexicon.tags))
    self.assertTrue(set(prediction.tree.rels) <= set(self.lexicon.rels))
    self.assertEqual(self.model.predict(self.sentence), prediction)

  def test_predict_unknown_words(self):
    sentence = Sentence(tokens=[Token(1, u'zzz'), Token(2, u'ñ')], layout=[('token', 0), ('token', 1)])
    prediction = self.model.predict(sentence)
    self.assertEqual(len(prediction.tree.heads), 2)

  def test_predict_empty_sentence(self):
    self.assertIsNone(self.model.predict(Sentence()))

  def test_worker_pool_matches_sequential(self):
    sentences = read_treebank(TOY_TREEBANK)[:6]
    model = JointModel(build_lexicon(sentences, 4, 4, 4), tiny_hyperparams())
    self.assertEqual(predict_treebank(model, sentences, workers=3), predict_treebank(model, sentences))

  def test_store_must_match(self):
    store = ParameterStore(0)
    store.add('word_emb', (3, 4), 'embedding')
    with self.assertRaises(CheckpointError):
      JointModel(self.lexicon, self.hyper, store=store)
