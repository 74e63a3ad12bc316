"""
.. module: jointparse.metrics
    :platform: Unix
    :synopsis: Tagging accuracy, UAS and LAS with and without punctuation,
    per-treebank report rows, and a right-branching baseline to compare with.

.. version:: $$VERSION$$

"""
from collections import Counter
from dataclasses import dataclass, field

from jointparse import app
from jointparse.common.jinja import get_jinja_env
from jointparse.conllu import DepTree, Prediction
from jointparse.constants import PTB_PUNCT_TAGS, PUNCT_CONVENTIONS, TAG_COLUMNS, UD_PUNCT_TAG
from jointparse.exceptions import ConfigurationError, TreebankMismatch

ROOT_RELATION = u'root'

ROW_COLUMNS = ('treebank', 'tokens', 'pos', 'uas', 'las', 'uas_all', 'las_all',
               'uas_no_punct', 'las_no_punct')


def default_punct_convention(tag_column):
    """PTB punctuation tags for XPOS-tagged data, UPOS=PUNCT otherwise."""
    return 'ptb' if tag_column == 'xpos' else 'ud'


def is_punct(token, convention):
    if convention == 'ptb':
        return token.xpos in PTB_PUNCT_TAGS
    if convention == 'ud':
        return token.upos == UD_PUNCT_TAG
    raise ConfigurationError("Unknown punctuation convention {}, expected one of {}".format(
        convention, ', '.join(PUNCT_CONVENTIONS)))


def _percent(correct, total):
    # A variant without any counted token has nothing wrong in it.
    return 100.0 * correct / total if total else 100.0


@dataclass
class ScoreSet:
    """Counts over one token subset."""
    tokens: int = 0
    pos_correct: int = 0
    uas_correct: int = 0
    las_correct: int = 0

    @property
    def pos(self):
        return _percent(self.pos_correct, self.tokens)

    @property
    def uas(self):
        return _percent(self.uas_correct, self.tokens)

    @property
    def las(self):
        return _percent(self.las_correct, self.tokens)


@dataclass
class EvalReport:
    """
    Scores of one system file against its gold file. Tagging accuracy always
    counts every token; the headline UAS and LAS skip punctuation when
    exclude_punct is set. Both variants are kept.
    """
    name: str = u''
    convention: str = 'ud'
    exclude_punct: bool = True
    all_tokens: ScoreSet = field(default_factory=ScoreSet)
    no_punct: ScoreSet = field(default_factory=ScoreSet)

    @property
    def headline(self):
        return self.no_punct if self.exclude_punct else self.all_tokens

    @property
    def tokens(self):
        return self.all_tokens.tokens

    @property
    def pos(self):
        return self.all_tokens.pos

    @property
    def uas(self):
        return self.headline.uas

    @property
    def las(self):
        return self.headline.las

    def row(self):
        return {
            'treebank': self.name,
            'tokens': self.tokens,
            'pos': self.pos,
            'uas': self.uas,
            'las': self.las,
            'uas_all': self.all_tokens.uas,
            'las_all': self.all_tokens.las,
            'uas_no_punct': self.no_punct.uas,
            'las_no_punct': self.no_punct.las,
        }


def _count(scores, gold_token, pred_token, tag_column):
    scores.tokens += 1
    if pred_token.tag(tag_column) == gold_token.tag(tag_column):
        scores.pos_correct += 1
    if pred_token.head is not None and pred_token.head == gold_token.head:
        scores.uas_correct += 1
        if pred_token.deprel == gold_token.deprel:
            scores.las_correct += 1


def evaluate(gold_sentences, pred_sentences, punct_convention=None, exclude_punct=True,
             tag_column='upos', name=u''):
    """
    Scores predicted sentences against gold ones. Both sides must have the
    same sentences with the same tokens; punctuation is decided from the gold
    tags. Relation labels are compared as plain strings.

    :return: EvalReport
    """
    if tag_column not in TAG_COLUMNS:
        raise ConfigurationError("Unknown tag column {}".format(tag_column))
    if punct_convention is None:
        punct_convention = default_punct_convention(tag_column)
    if punct_convention not in PUNCT_CONVENTIONS:
        raise ConfigurationError("Unknown punctuation convention {}, expected one of {}".format(
            punct_convention, ', '.join(PUNCT_CONVENTIONS)))
    if len(gold_sentences) != len(pred_sentences):
        raise TreebankMismatch(min(len(gold_sentences), len(pred_sentences)),
                               "gold has {} sentences, system has {}".format(
                                   len(gold_sentences), len(pred_sentences)))

    report = EvalReport(name=name, convention=punct_convention, exclude_punct=exclude_punct)
    for index, (gold, pred) in enumerate(zip(gold_sentences, pred_sentences)):
        if len(gold) != len(pred):
            raise TreebankMismatch(index, "gold has {} tokens, system has {}".format(len(gold), len(pred)))
        for gold_token, pred_token in zip(gold.tokens, pred.tokens):
            if gold_token.form != pred_token.form:
                raise TreebankMismatch(index, "token {} is {!r} in gold but {!r} in system output".format(
                    gold_token.id, gold_token.form, pred_token.form))
            _count(report.all_tokens, gold_token, pred_token, tag_column)
            if not is_punct(gold_token, punct_convention):
                _count(report.no_punct, gold_token, pred_token, tag_column)

    app.logger.debug("Evaluated {}: {} tokens, POS {:.2f} UAS {:.2f} LAS {:.2f}".format(
        name or 'treebank', report.tokens, report.pos, report.uas, report.las))
    return report


def mean_row(reports, name=u'mean'):
    """Arithmetic mean of every score column over the given reports."""
    rows = [report.row() for report in reports]
    mean = {'treebank': name, 'tokens': sum(row['tokens'] for row in rows)}
    for column in ROW_COLUMNS[2:]:
        mean[column] = sum(row[column] for row in rows) / float(len(rows)) if rows else 0.0
    return mean


def report_rows(reports):
    """One row per report, plus a mean row when there is more than one."""
    rows = [report.row() for report in reports]
    if len(reports) > 1:
        rows.append(mean_row(reports))
    return rows


def report_tsv(rows):
    lines = [u'\t'.join(ROW_COLUMNS)]
    for row in rows:
        values = [row['treebank'], str(row['tokens'])]
        values.extend('{:.2f}'.format(row[column]) for column in ROW_COLUMNS[2:])
        lines.append(u'\t'.join(values))
    return u'\n'.join(lines) + u'\n'


def render_report(rows, convention, exclude_punct, tag_column='upos'):
    """The aligned plain-text table printed by `jointparse eval`."""
    jenv = get_jinja_env()
    template = jenv.get_template('eval_report.txt')
    width = max([len(u'treebank')] + [len(row['treebank']) for row in rows])
    return template.render({'rows': rows,
                            'convention': convention,
                            'exclude_punct': exclude_punct,
                            'tag_column': tag_column.upper(),
                            'width': width})


def right_branching_baseline(train_sentences, sentences, tag_column='upos'):
    """
    A deterministic reference parser: token 1 hangs off the root and every
    later token off its left neighbour. Every token gets the most frequent
    training tag. The root arc is labelled `root` when training uses that
    label (otherwise the most frequent label of root-attached training
    tokens), every other arc gets the most frequent label of the other
    training arcs.

    :return: one Prediction (or None for an empty sentence) per sentence
    """
    tags = Counter()
    rels = Counter()
    root_rels = Counter()
    for sentence in train_sentences:
        for token in sentence.tokens:
            tags[token.tag(tag_column)] += 1
            if token.deprel is None:
                continue
            if token.head == 0:
                root_rels[token.deprel] += 1
            else:
                rels[token.deprel] += 1
    if not tags:
        raise ConfigurationError("The baseline needs at least one training token")
    # Ties go to the label seen first.
    majority_tag = tags.most_common(1)[0][0]
    majority_rel = rels.most_common(1)[0][0] if rels else ROOT_RELATION
    if ROOT_RELATION in rels or ROOT_RELATION in root_rels or not root_rels:
        root_rel = ROOT_RELATION
    else:
        root_rel = root_rels.most_common(1)[0][0]

    predictions = []
    for sentence in sentences:
        n = len(sentence)
        if n == 0:
            predictions.append(None)
            continue
        heads = list(range(n))
        labels = [root_rel] + [majority_rel] * (n - 1)
        predictions.append(Prediction([majority_tag] * n, DepTree(heads, labels)))
    return predictions
