"""
.. module: jointparse.trainer
    :platform: Unix
    :synopsis: Trains the joint model one sentence at a time with Adam,
    restarting the optimizer and halving its learning rate on a fixed epoch
    schedule, and keeps the checkpoint with the best development mixed accuracy.

.. version:: $$VERSION$$

"""
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

from jointparse import app
from jointparse.autodiff import TapeGraph
from jointparse.conllu import with_prediction
from jointparse.datastore import save_checkpoint
from jointparse.exceptions import NumericFailure, PredictionMismatch, TrainingDataError
from jointparse.metrics import evaluate as score_treebank
from jointparse.network import LossBreakdown


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    l_pos: float
    l_arc: float
    l_rel: float
    dev_upos: float
    dev_uas: float
    dev_las: float
    dev_mixed: float
    best: bool

    COLUMNS = ('epoch', 'lr', 'l_pos', 'l_arc', 'l_rel', 'dev_upos', 'dev_uas', 'dev_las',
               'dev_mixed', 'best')

    def tsv(self):
        values = [str(self.epoch), repr(self.lr)]
        values.extend('{:.6f}'.format(v) for v in (self.l_pos, self.l_arc, self.l_rel))
        values.extend('{:.2f}'.format(v) for v in (self.dev_upos, self.dev_uas, self.dev_las, self.dev_mixed))
        values.append('*' if self.best else '')
        return u'\t'.join(values)


@dataclass
class TrainState:
    """
    Progress of a training run. Mixed accuracies are percentages. Stored in
    checkpoints so that training can resume where the checkpoint was taken.
    """
    epoch: int = 0
    lr: float = 0.0
    best_mixed: float = -1.0
    best_epoch: int = 0
    log: List[EpochRecord] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(data['epoch'], data['lr'], data['best_mixed'], data['best_epoch'],
                   [EpochRecord(**record) for record in data['log']])


class MetricLog(object):
    """Append-only TSV with one row per epoch."""

    def __init__(self, path):
        self.path = path

    def reset(self):
        if os.path.exists(self.path):
            os.remove(self.path)

    def append(self, record):
        fresh = not os.path.exists(self.path) or os.path.getsize(self.path) == 0
        with io.open(self.path, 'a', encoding='utf-8', newline='\n') as stream:
            if fresh:
                stream.write(u'\t'.join(EpochRecord.COLUMNS) + u'\n')
            stream.write(record.tsv() + u'\n')


def learning_rate_for_epoch(hyper, epoch):
    """lr0 scaled by `anneal` once per completed block of `anneal_every` epochs (epochs count from 1)."""
    return hyper.lr * hyper.anneal ** ((epoch - 1) // hyper.anneal_every)


def is_restart_epoch(hyper, epoch):
    """Adam restarts when entering epochs anneal_every+1, 2*anneal_every+1, ..."""
    return epoch > 1 and (epoch - 1) % hyper.anneal_every == 0


def mixed_correct(pred_tags, pred_tree, gold_tags, gold_tree):
    n = len(gold_tags)
    lengths = (len(pred_tags), len(pred_tree.heads), len(gold_tree.heads))
    if any(length != n for length in lengths):
        raise PredictionMismatch(0, n, [length for length in lengths if length != n][0])
    pred_rels = pred_tree.rels or [None] * n
    gold_rels = gold_tree.rels or [None] * n
    return sum(1 for i in range(n)
               if pred_tags[i] == gold_tags[i]
               and pred_tree.heads[i] == gold_tree.heads[i]
               and pred_rels[i] == gold_rels[i])


def mixed_accuracy(pred_tags, pred_tree, gold_tags, gold_tree):
    """Fraction of tokens whose tag, head and relation are all correct."""
    n = len(gold_tags)
    if n == 0:
        return 1.0 if not pred_tags else 0.0
    return mixed_correct(pred_tags, pred_tree, gold_tags, gold_tree) / float(n)


def predict_treebank(model, sentences, workers=1):
    """
    Predictions for every sentence, in order. With more than one worker the
    sentences are decoded on a thread pool over the shared read-only model.
    """
    if workers <= 1 or len(sentences) < 2:
        return [model.predict(sentence) for sentence in sentences]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(model.predict, sentences))


def check_training_data(sentences, lexicon, tag_column):
    for index, sentence in enumerate(sentences):
        if len(sentence) == 0:
            raise TrainingDataError(index, "sentence has no tokens")
        if not sentence.is_fully_annotated():
            raise TrainingDataError(index, "every token needs a head and a relation")
        for token in sentence.tokens:
            if not lexicon.has_tag(token.tag(tag_column)):
                raise TrainingDataError(index, "tag {} is not in the lexicon".format(token.tag(tag_column)))
            if not lexicon.has_rel(token.deprel):
                raise TrainingDataError(index, "relation {} is not in the lexicon".format(token.deprel))


class Trainer(object):
    """
    Runs the training schedule for a JointModel. Each sentence gets its own
    graph, one backward pass over L = L_POS + L_ARC + L_REL and one Adam step.
    """

    def __init__(self, model, model_path=None, log_path=None, dev_workers=None, last_path=None):
        self.model = model
        self.hyper = model.hyper
        self.store = model.store
        self.model_path = model_path
        self.last_path = last_path
        self.metric_log = MetricLog(log_path) if log_path else None
        if dev_workers is None:
            dev_workers = app.config.get('DEV_EVAL_WORKERS', 1)
        self.dev_workers = dev_workers

    def train_sentence(self, sentence, lr, index=0, epoch=0):
        graph = TapeGraph(self.store)
        loss, breakdown, projective = self.model.build_loss(graph, sentence, training=True)
        if not np.isfinite(graph.value(loss)):
            raise NumericFailure("Loss is {} at sentence {} in epoch {}".format(
                float(graph.value(loss)), index, epoch))
        graph.backward(loss)
        self.store.adam_step(lr)
        return breakdown, projective

    def train_epoch(self, sentences, epoch, lr):
        """:return: LossBreakdown summed over the epoch"""
        if self.hyper.shuffle:
            order = [int(i) for i in self.store.rng.permutation(len(sentences))]
        else:
            order = list(range(len(sentences)))
        total = LossBreakdown()
        non_projective = 0
        for index in order:
            breakdown, projective = self.train_sentence(sentences[index], lr, index, epoch)
            total = total + breakdown
            if not projective:
                non_projective += 1
        if non_projective:
            app.logger.info("Epoch {}: {} non-projective gold trees".format(epoch, non_projective))
        return total

    def evaluate(self, sentences):
        """
        Dev scores on all tokens as percentages.

        :return: (upos, uas, las, mixed)
        """
        column = self.hyper.tag_column
        predictions = predict_treebank(self.model, sentences, self.dev_workers)
        predicted = [with_prediction(s, p, column) for s, p in zip(sentences, predictions)]
        report = score_treebank(sentences, predicted, tag_column=column, exclude_punct=False)
        tokens = 0
        correct = 0
        for sentence, prediction in zip(sentences, predictions):
            if prediction is None:
                continue
            tokens += len(sentence)
            correct += mixed_correct(prediction.tags, prediction.tree,
                                     sentence.tags(column), sentence.gold_tree())
        mixed = 100.0 * correct / tokens if tokens else 0.0
        return report.pos, report.uas, report.las, mixed

    def train(self, train_set, dev_set, state=None):
        """
        Runs epochs state.epoch+1 .. hyper.epochs. After each epoch the dev
        set is scored and, when its mixed accuracy beats every earlier epoch,
        the model is checkpointed. With a last_path, the state after every
        epoch is saved there as well so an interrupted run can be resumed.

        :return: TrainState
        """
        check_training_data(train_set, self.model.lexicon, self.hyper.tag_column)
        if not dev_set:
            raise TrainingDataError(0, "the development set is empty")
        if state is None:
            state = TrainState(lr=self.hyper.lr)
            if self.metric_log:
                self.metric_log.reset()

        for epoch in range(state.epoch + 1, self.hyper.epochs + 1):
            started = time.time()
            if is_restart_epoch(self.hyper, epoch):
                self.store.adam_restart()
                app.logger.info("Epoch {}: restarting Adam".format(epoch))
            lr = learning_rate_for_epoch(self.hyper, epoch)

            losses = self.train_epoch(train_set, epoch, lr)
            upos, uas, las, mixed = self.evaluate(dev_set)
            best = mixed > state.best_mixed
            record = EpochRecord(epoch, lr, losses.l_pos, losses.l_arc, losses.l_rel,
                                 upos, uas, las, mixed, best)
            state.epoch = epoch
            state.lr = lr
            state.log.append(record)
            app.logger.info(("Epoch {} lr {} loss {:.4f} (pos {:.4f} arc {:.4f} rel {:.4f}) "
                             "dev UPOS {:.2f} UAS {:.2f} LAS {:.2f} mixed {:.2f} in {:.1f}s").format(
                epoch, lr, losses.total, losses.l_pos, losses.l_arc, losses.l_rel,
                upos, uas, las, mixed, time.time() - started))

            if best:
                state.best_mixed = mixed
                state.best_epoch = epoch
                if self.model_path:
                    save_checkpoint(self.model_path, self.model, state)
                    app.logger.info("Epoch {}: new best dev mixed accuracy {:.2f}, saved {}".format(
                        epoch, mixed, self.model_path))
            if self.metric_log:
                self.metric_log.append(record)
            if self.last_path:
                save_checkpoint(self.last_path, self.model, state)

        return state
