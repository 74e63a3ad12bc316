"""
.. module: jointparse.tests.test_datastore
    :platform: Unix

.. version:: $$VERSION$$

"""
import io
import json
import os

import numpy as np
from mock import patch
from sqlalchemy import create_engine
from sqlalchemy.orm import Session

from jointparse.conllu import read_treebank
from jointparse.constants import CHECKPOINT_FORMAT_VERSION
from jointparse.datastore import CheckpointEntry, ParameterTensor, load_checkpoint, save_checkpoint
from jointparse.exceptions import CheckpointError, CheckpointVersionMismatch
from jointparse.lexicon import build_lexicon
from jointparse.network import JointModel
from jointparse.tests import TOY_TREEBANK, JointParseTestCase, tiny_hyperparams
from jointparse.trainer import TrainState, Trainer


class CheckpointTestCase(JointParseTestCase):

  def setUp(self):
    super(CheckpointTestCase, self).setUp()
    self.sentences = read_treebank(TOY_TREEBANK)
    hyper = tiny_hyperparams(epochs=1, keep_prob=0.67)
    self.model = JointModel(build_lexicon(self.sentences, 4, 4, 4), hyper)
    self.state = Trainer(self.model).train(self.sentences[:4], self.sentences[4:6])
    self.checkpoint = self.path('model.db')
    save_checkpoint(self.checkpoint, self.model, self.state)

  def update_entry(self, key, value):
    engine = create_engine('sqlite:///' + self.checkpoint)
    with Session(engine) as session:
      session.get(CheckpointEntry, key).value = json.dumps(value)
      session.commit()
    engine.dispose()

  def test_round_trip_predictions_are_identical(self):
    loaded, saved_state = load_checkpoint(self.checkpoint)
    for sentence in self.sentences[:8]:
      self.assertEqual(loaded.predict(sentence), self.model.predict(sentence))
    self.assertEqual(loaded.lexicon, self.model.lexicon)
    self.assertEqual(loaded.hyper, self.model.hyper)
    self.assertEqual(TrainState.from_dict(saved_state).log, self.state.log)

  def test_optimizer_and_generator_state(self):
    loaded, _ = load_checkpoint(self.checkpoint)
    self.assertEqual(loaded.store.step_count, self.model.store.step_count)
    for name in self.model.store.names():
      np.testing.assert_array_equal(loaded.store[name].first_moment, self.model.store[name].first_moment)
      np.testing.assert_array_equal(loaded.store[name].second_moment, self.model.store[name].second_moment)
    np.testing.assert_array_equal(loaded.store.rng.random(5), self.model.store.rng.random(5))

  def test_tensors_are_little_endian_doubles(self):
    engine = create_engine('sqlite:///' + self.checkpoint)
    with Session(engine) as session:
      row = session.query(ParameterTensor).filter_by(name='word_emb').one()
      self.assertEqual(json.loads(row.shape), list(self.model.store['word_emb'].shape))
      self.assertEqual(len(row.value), self.model.store['word_emb'].value.size * 8)
      self.assertEqual(session.get(CheckpointEntry, 'format_version').load(), CHECKPOINT_FORMAT_VERSION)
    engine.dispose()

  def test_version_mismatch(self):
    self.update_entry('format_version', CHECKPOINT_FORMAT_VERSION + 1)
    with self.assertRaises(CheckpointVersionMismatch) as cm:
      load_checkpoint(self.checkpoint)
    self.assertEqual(cm.exception.got, CHECKPOINT_FORMAT_VERSION + 1)

  def test_lexicon_does_not_match_parameters(self):
    loaded, _ = load_checkpoint(self.checkpoint)
    lexicon = loaded.lexicon.to_dict()
    lexicon['tags'] = lexicon['tags'] + [u'EXTRA']
    self.update_entry('lexicon', lexicon)
    with self.assertRaises(CheckpointError):
      load_checkpoint(self.checkpoint)

  def test_corrupted_file(self):
    path = self.path('garbage.db')
    with io.open(path, 'wb') as stream:
      stream.write(b'this is not a checkpoint' * 100)
    with self.assertRaises(CheckpointError):
      load_checkpoint(path)

  def test_missing_file(self):
    with self.assertRaises(CheckpointError):
      load_checkpoint(self.path('nothing.db'))

  def test_failed_save_leaves_nothing_behind(self):
    target = self.path('other.db')
    with patch('jointparse.datastore.Session.commit', side_effect=RuntimeError('disk full')):
      with self.assertRaises(RuntimeError):
        save_checkpoint(target, self.model)
    self.assertFalse(os.path.exists(target))
    self.assertEqual(sorted(os.listdir(self.workdir)), ['model.db'])

  def test_overwrite_keeps_latest(self):
    self.model.store['tag_emb'].value[0, 0] = 42.0
    save_checkpoint(self.checkpoint, self.model)
    loaded, saved_state = load_checkpoint(self.checkpoint)
    self.assertEqual(loaded.store['tag_emb'].value[0, 0], 42.0)
    self.assertIsNone(saved_state)
