"""
.. module: jointparse.constants
    :platform: Unix

.. version:: $$VERSION$$

"""

# Bumped whenever the checkpoint layout changes. Older files are refused.
CHECKPOINT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Word dropout: p_unk(w) = WORD_DROPOUT_ALPHA / (WORD_DROPOUT_ALPHA + #(w))
WORD_DROPOUT_ALPHA = 0.25

# Added to every arc that is not in the gold tree during loss-augmented decoding.
ARC_COST = 1.0

PAD = u'<pad>'
UNK = u'<unk>'

TAG_COLUMNS = ('upos', 'xpos')

PUNCT_CONVENTIONS = ('ptb', 'ud')
PTB_PUNCT_TAGS = frozenset([u'``', u"''", u':', u',', u'.'])
UD_PUNCT_TAG = u'PUNCT'

# Enumerating trees by hand explodes quickly.
BRUTE_FORCE_MAX_TOKENS = 8
