"""
.. module: jointparse.tests.test_trainer
    :platform: Unix

.. version:: $$VERSION$$

"""
import io
import os
import unittest

import numpy as np
from mock import patch

from jointparse.conllu import DepTree, read_treebank, split_9_1, with_prediction
from jointparse.datastore import load_checkpoint
from jointparse.exceptions import NumericFailure, PredictionMismatch, TrainingDataError
from jointparse.lexicon import build_lexicon
from jointparse.metrics import evaluate, right_branching_baseline
from jointparse.network import Hyperparams, JointModel
from jointparse.tests import SLOW_TESTS, TOY_TREEBANK, JointParseTestCase, tiny_hyperparams
from jointparse.trainer import (EpochRecord, TrainState, Trainer, is_restart_epoch,
                                learning_rate_for_epoch, mixed_accuracy, predict_treebank)


def toy_model(sentences, **overrides):
  hyper = tiny_hyperparams(**overrides)
  lexicon = build_lexicon(sentences, hyper.word_dim, hyper.char_dim, hyper.tag_dim)
  return JointModel(lexicon, hyper)


class ScheduleTestCase(JointParseTestCase):

  def test_learning_rate_schedule(self):
    hyper = Hyperparams()
    rates = [learning_rate_for_epoch(hyper, epoch) for epoch in range(1, 31)]
    self.assertEqual(rates[:10], [0.001] * 10)
    self.assertEqual(rates[10:20], [0.0005] * 10)
    self.assertEqual(rates[20:], [0.00025] * 10)

  def test_restart_epochs(self):
    hyper = Hyperparams()
    self.assertEqual([e for e in range(1, 31) if is_restart_epoch(hyper, e)], [11, 21])


class MixedAccuracyTestCase(JointParseTestCase):

  def test_all_correct(self):
    tree = DepTree([2, 0], [u'a', u'root'])
    self.assertEqual(mixed_accuracy([u'N', u'V'], tree, [u'N', u'V'], tree), 1.0)

  def test_tag_right_head_wrong(self):
    gold = DepTree([2, 0, 2], [u'a', u'root', u'b'])
    pred = DepTree([0, 3, 1], [u'a', u'root', u'b'])
    self.assertEqual(mixed_accuracy([u'N', u'V', u'N'], pred, [u'N', u'V', u'N'], gold), 0.0)

  def test_one_wrong_label(self):
    gold = DepTree([2, 0, 2, 3], [u'a', u'root', u'b', u'c'])
    pred = DepTree([2, 0, 2, 3], [u'a', u'root', u'b', u'x'])
    tags = [u'D', u'V', u'N', u'A']
    self.assertEqual(mixed_accuracy(tags, pred, tags, gold), 0.75)

  def test_length_mismatch(self):
    tree = DepTree([2, 0], [u'a', u'root'])
    with self.assertRaises(PredictionMismatch):
      mixed_accuracy([u'N'], tree, [u'N', u'V'], tree)


class TrainerTestCase(JointParseTestCase):

  def setUp(self):
    super(TrainerTestCase, self).setUp()
    self.sentences = read_treebank(TOY_TREEBANK)
    self.train_set = self.sentences[:6]
    self.dev_set = self.sentences[6:9]

  def test_epoch_log_and_checkpoint(self):
    model = toy_model(self.sentences, epochs=3)
    model_path = self.path('model.db')
    log_path = self.path('model.log.tsv')
    state = Trainer(model, model_path=model_path, log_path=log_path).train(self.train_set, self.dev_set)

    self.assertEqual(state.epoch, 3)
    self.assertEqual([r.epoch for r in state.log], [1, 2, 3])
    self.assertEqual(state.best_mixed, max(r.dev_mixed for r in state.log))
    self.assertTrue(state.log[0].best)
    self.assertTrue(os.path.isfile(model_path))
    for record in state.log:
      self.assertGreaterEqual(record.l_pos, 0.0)
      self.assertGreaterEqual(record.l_arc, 0.0)
      self.assertGreaterEqual(record.l_rel, 0.0)
      self.assertGreaterEqual(record.dev_uas, record.dev_las)

    with io.open(log_path, 'r', encoding='utf-8') as stream:
      lines = stream.read().splitlines()
    self.assertEqual(lines[0].split(u'\t'), list(EpochRecord.COLUMNS))
    self.assertEqual(len(lines), 4)
    self.assertEqual(lines[1].split(u'\t')[1], repr(0.001))
    self.assertEqual(lines[1].split(u'\t')[-1], u'*')

    _, saved = load_checkpoint(model_path)
    self.assertEqual(saved['best_epoch'], state.best_epoch)

  def test_restarts_and_annealing(self):
    model = toy_model(self.sentences, epochs=5, anneal_every=2, lr=0.01)
    trainer = Trainer(model)
    store = model.store
    seen = {}
    original = trainer.train_epoch

    def spy(sentences, epoch, lr):
      moments_zero = all(not store[n].first_moment.any() and not store[n].second_moment.any()
                         for n in store.names())
      seen[epoch] = (lr, store.step_count, moments_zero)
      return original(sentences, epoch, lr)

    with patch.object(trainer, 'train_epoch', side_effect=spy):
      state = trainer.train(self.train_set, self.dev_set)

    self.assertEqual([seen[e][0] for e in range(1, 6)], [0.01, 0.01, 0.005, 0.005, 0.0025])
    for epoch in (1, 3, 5):
      self.assertEqual(seen[epoch][1:], (0, True))
    self.assertEqual(seen[2][1], len(self.train_set))
    self.assertFalse(seen[2][2])
    self.assertEqual([r.lr for r in state.log], [0.01, 0.01, 0.005, 0.005, 0.0025])

  def test_determinism(self):
    first = toy_model(self.sentences, epochs=2)
    second = toy_model(self.sentences, epochs=2)
    log_a = Trainer(first).train(self.train_set, self.dev_set).log
    log_b = Trainer(second).train(self.train_set, self.dev_set).log
    self.assertEqual(log_a, log_b)
    for name in first.store.names():
      np.testing.assert_array_equal(first.store[name].value, second.store[name].value)

  def test_resume_matches_uninterrupted_run(self):
    straight = toy_model(self.sentences, epochs=4, anneal_every=2, keep_prob=0.67)
    straight_state = Trainer(straight).train(self.train_set, self.dev_set)

    last_path = self.path('run.last')
    first_half = toy_model(self.sentences, epochs=2, anneal_every=2, keep_prob=0.67)
    Trainer(first_half, last_path=last_path).train(self.train_set, self.dev_set)
    resumed, saved = load_checkpoint(last_path)
    resumed.hyper.epochs = 4
    resumed_state = Trainer(resumed).train(self.train_set, self.dev_set, state=TrainState.from_dict(saved))

    self.assertEqual(resumed_state.log, straight_state.log)
    self.assertEqual(resumed.store.step_count, straight.store.step_count)
    for name in straight.store.names():
      np.testing.assert_array_equal(resumed.store[name].value, straight.store[name].value)

  def test_nan_loss_aborts(self):
    model = toy_model(self.sentences)
    model.store['rel_mlp_b2'].value[:] = np.nan
    with self.assertRaises(NumericFailure) as cm:
      Trainer(model).train(self.train_set, self.dev_set)
    self.assertIn('epoch 1', str(cm.exception))

  def test_partial_annotation_is_rejected(self):
    model = toy_model(self.sentences)
    broken = read_treebank(TOY_TREEBANK)[:2]
    broken[1].tokens[0].head = None
    with self.assertRaises(TrainingDataError) as cm:
      Trainer(model).train(broken, self.dev_set)
    self.assertEqual(cm.exception.sentence_index, 1)

  def test_rejected_run_leaves_no_log(self):
    log_path = self.path('rejected.log.tsv')
    broken = read_treebank(TOY_TREEBANK)[:2]
    broken[0].tokens[0].head = None
    with self.assertRaises(TrainingDataError):
      Trainer(toy_model(self.sentences), log_path=log_path).train(broken, self.dev_set)
    self.assertFalse(os.path.exists(log_path))

  def test_fresh_run_replaces_old_log(self):
    log_path = self.path('model.log.tsv')
    with io.open(log_path, 'w', encoding='utf-8') as stream:
      stream.write(u'stale\n')
    Trainer(toy_model(self.sentences, epochs=1), log_path=log_path).train(self.train_set, self.dev_set)
    with io.open(log_path, 'r', encoding='utf-8') as stream:
      lines = stream.read().splitlines()
    self.assertEqual(lines[0].split(u'\t'), list(EpochRecord.COLUMNS))
    self.assertEqual(len(lines), 2)

  def test_empty_dev_set(self):
    with self.assertRaises(TrainingDataError):
      Trainer(toy_model(self.sentences)).train(self.train_set, [])

  def test_loss_drops_on_small_set(self):
    model = toy_model(self.sentences, word_dim=8, bilstm_hidden=16, mlp_hidden=16, epochs=15,
                      lr=0.01, anneal_every=100)
    state = Trainer(model).train(self.sentences[:8], self.sentences[:8])
    first = state.log[0].l_pos + state.log[0].l_arc + state.log[0].l_rel
    last = state.log[-1].l_pos + state.log[-1].l_arc + state.log[-1].l_rel
    self.assertLess(last, 0.5 * first)

  @unittest.skipUnless(SLOW_TESTS, "set JOINTPARSE_SLOW_TESTS=1 to run")
  def test_overfits_toy_treebank_at_default_size(self):
    hyper = Hyperparams(epochs=100)
    model = JointModel(build_lexicon(self.sentences), hyper)
    trainer = Trainer(model)
    state = trainer.train(self.sentences, self.sentences)
    self.assertGreaterEqual(state.best_mixed, 99.0)
    first = state.log[0].l_pos + state.log[0].l_arc + state.log[0].l_rel
    last = state.log[-1].l_pos + state.log[-1].l_arc + state.log[-1].l_rel
    self.assertLess(last, 0.01 * first)


SANITY_TREEBANK = os.environ.get('JOINTPARSE_SANITY_TREEBANK')
SANITY_DEV = os.environ.get('JOINTPARSE_SANITY_DEV')


@unittest.skipUnless(SLOW_TESTS and SANITY_TREEBANK,
                     "set JOINTPARSE_SLOW_TESTS=1 and JOINTPARSE_SANITY_TREEBANK to a UD training file")
class TreebankAcceptanceTestCase(JointParseTestCase):
  """Full-size training on a real treebank against the right-branching reference parser."""

  def test_beats_right_branching_baseline(self):
    train_set = read_treebank(SANITY_TREEBANK)
    if SANITY_DEV:
      dev_set = read_treebank(SANITY_DEV)
    else:
      train_set, dev_set = split_9_1(train_set)

    hyper = Hyperparams()
    self.assertEqual(hyper.epochs, 30)
    model = JointModel(build_lexicon(train_set, hyper.word_dim, hyper.char_dim, hyper.tag_dim), hyper)
    model_path = self.path('sanity.db')
    state = Trainer(model, model_path=model_path).train(train_set, dev_set)

    best, saved = load_checkpoint(model_path)
    self.assertEqual(saved['best_mixed'], max(r.dev_mixed for r in state.log))
    self.assertEqual(state.best_mixed, max(r.dev_mixed for r in state.log))

    predicted = [with_prediction(s, p) for s, p in zip(dev_set, predict_treebank(best, dev_set))]
    baseline = [with_prediction(s, p)
                for s, p in zip(dev_set, right_branching_baseline(train_set, dev_set))]
    system_report = evaluate(dev_set, predicted)
    baseline_report = evaluate(dev_set, baseline)
    self.assertGreaterEqual(system_report.uas, baseline_report.uas + 15.0)
