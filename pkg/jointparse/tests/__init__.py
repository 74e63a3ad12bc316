"""
.. module: jointparse.tests.__init__
    :platform: Unix

.. version:: $$VERSION$$

"""
import os
import shutil
import tempfile
import unittest

from jointparse import app
from jointparse.network import Hyperparams

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
TOY_TREEBANK = os.path.join(FIXTURES, 'toy32.conllu')
UD_SAMPLE = os.path.join(FIXTURES, 'ud_sample.conllu')
TINY_VECTORS = os.path.join(FIXTURES, 'tiny.vec')

# Acceptance runs at full size take minutes; enable with JOINTPARSE_SLOW_TESTS=1.
SLOW_TESTS = os.environ.get('JOINTPARSE_SLOW_TESTS') == '1'


def tiny_hyperparams(**overrides):
  """Dimensions small enough to train and finite-difference in a few seconds."""
  values = dict(word_dim=4, char_dim=4, tag_dim=4, bilstm_layers=1, bilstm_hidden=6,
                mlp_hidden=6, keep_prob=1.0, epochs=3, seed=7)
  values.update(overrides)
  return Hyperparams(**values).validate()


class JointParse(object):
  def setUp(self):
    self.test_app = app.test_cli_runner()
    self.ctx = app.app_context()
    self.ctx.push()
    self.workdir = tempfile.mkdtemp(prefix='jointparse-test-')

  def tearDown(self):
    shutil.rmtree(self.workdir, ignore_errors=True)
    self.ctx.pop()

  def path(self, name):
    return os.path.join(self.workdir, name)


class JointParseTestCase(JointParse, unittest.TestCase):
  pass


def finite_difference(store, name, index, loss_fn, h=1e-5):
  """Central difference of loss_fn() with respect to one entry of a parameter."""
  value = store[name].value
  original = value[index]
  value[index] = original + h
  plus = loss_fn()
  value[index] = original - h
  minus = loss_fn()
  value[index] = original
  return (plus - minus) / (2.0 * h)


def relative_error(analytic, numeric, floor=1e-3):
  return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
