"""
.. module: exceptions
    :synopsis: Defines all jointparse specific exceptions

.. version:: $$VERSION$$

"""

from jointparse import app
from jointparse.constants import EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC


class JointParseException(Exception):
    """Base class for all jointparse exceptions."""
    exit_code = EXIT_DATA

    def __init__(self, message):
        super(JointParseException, self).__init__(message)
        app.logger.debug("{}: {}".format(self.__class__.__name__, message))


class ConfigurationError(JointParseException):
    """A flag or setting is missing or out of range."""
    exit_code = EXIT_USAGE


class ConllParseError(JointParseException):
    """A CoNLL-U line could not be understood."""
    def __init__(self, line_number, reason):
        self.line_number = line_number
        self.reason = reason
        super(ConllParseError, self).__init__(
            "CoNLL-U error on line {}: {}".format(line_number, reason))


class PredictionMismatch(JointParseException):
    """Predicted arrays do not line up with the sentence they belong to."""
    def __init__(self, sentence_index, expected, got):
        self.sentence_index = sentence_index
        self.expected = expected
        self.got = got
        super(PredictionMismatch, self).__init__(
            "Prediction for sentence {} has {} entries, sentence has {} tokens".format(
                sentence_index, got, expected))


class TreebankMismatch(JointParseException):
    """Gold and system treebanks are not aligned."""
    def __init__(self, sentence_index, reason):
        self.sentence_index = sentence_index
        self.reason = reason
        super(TreebankMismatch, self).__init__(
            "Treebanks misaligned at sentence {}: {}".format(sentence_index, reason))


class LexiconError(JointParseException):
    """The lexicon cannot be built or restored."""
    pass


class PretrainedFormatError(JointParseException):
    """A line of a pretrained vector file is malformed."""
    def __init__(self, path, line_number, reason):
        self.path = path
        self.line_number = line_number
        super(PretrainedFormatError, self).__init__(
            "{} line {}: {}".format(path, line_number, reason))


class PretrainedDimensionMismatch(JointParseException):
    """Pretrained vectors do not have the word embedding size."""
    def __init__(self, path, expected, got):
        self.path = path
        self.expected = expected
        self.got = got
        super(PretrainedDimensionMismatch, self).__init__(
            "{} holds {}-dimensional vectors, word embeddings are {}-dimensional".format(
                path, got, expected))


class CyclicTreeError(JointParseException):
    """A head assignment contains a cycle."""
    def __init__(self, heads):
        self.heads = list(heads)
        super(CyclicTreeError, self).__init__(
            "Head assignment {} contains a cycle".format(self.heads))


class DecoderError(JointParseException):
    """The score matrix cannot be decoded."""
    pass


class ShapeMismatch(JointParseException):
    """Two operands of a graph operation do not conform."""
    def __init__(self, op, shape_a, shape_b):
        self.op = op
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        super(ShapeMismatch, self).__init__(
            "{}: shapes {} and {} do not conform".format(op, self.shape_a, self.shape_b))


class LookupOutOfRange(JointParseException):
    """Embedding lookup past the end of a table."""
    def __init__(self, table, index, size):
        self.table = table
        self.index = index
        self.size = size
        super(LookupOutOfRange, self).__init__(
            "Lookup of row {} in {} which has {} rows".format(index, table, size))


class GraphError(JointParseException):
    """A computation graph was misused."""
    pass


class TreebankTooSmall(JointParseException):
    """Not enough sentences to hold out a development part."""
    def __init__(self, needed, got):
        self.needed = needed
        self.got = got
        super(TreebankTooSmall, self).__init__(
            "Need at least {} sentences for a 9:1 split, got {}".format(needed, got))


class TrainingDataError(JointParseException):
    """Training sentences must be fully annotated."""
    def __init__(self, sentence_index, reason):
        self.sentence_index = sentence_index
        super(TrainingDataError, self).__init__(
            "Training sentence {}: {}".format(sentence_index, reason))


class CheckpointError(JointParseException):
    """The checkpoint file is missing, corrupted or inconsistent."""
    pass


class CheckpointVersionMismatch(CheckpointError):
    """The checkpoint was written by an incompatible format version."""
    def __init__(self, path, expected, got):
        self.path = path
        self.expected = expected
        self.got = got
        super(CheckpointVersionMismatch, self).__init__(
            "{} has checkpoint format version {}, expected {}".format(path, got, expected))


class NumericFailure(JointParseException):
    """A loss or gradient became NaN."""
    exit_code = EXIT_NUMERIC
