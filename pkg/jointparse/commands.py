"""
.. module: jointparse.commands
    :platform: Unix
    :synopsis: The jointparse command line: train, predict and eval.

.. version:: $$VERSION$$

Logs go to standard error. Standard output only ever carries data (CoNLL-U
from predict, reports from eval).

"""
import functools
import io
import os
import sys

import click
from flask.cli import AppGroup

from jointparse import app
from jointparse.common.utils.utils import atomic_write
from jointparse.conllu import read_treebank, split_9_1, with_prediction, write_treebank
from jointparse.constants import EXIT_OK, EXIT_USAGE, PUNCT_CONVENTIONS, TAG_COLUMNS
from jointparse.datastore import load_checkpoint
from jointparse.exceptions import ConfigurationError, JointParseException
from jointparse.lexicon import build_lexicon, load_pretrained
from jointparse.metrics import (default_punct_convention, evaluate, render_report, report_rows,
                                report_tsv, right_branching_baseline)
from jointparse.network import Hyperparams, JointModel
from jointparse.trainer import TrainState, Trainer, predict_treebank

manager = AppGroup('jointparse', help="Joint POS tagging and dependency parsing.")

LAST_CHECKPOINT_SUFFIX = '.last'

existing_file = click.Path(exists=True, dir_okay=False)


def exits_on_error(fn):
    """Turns a JointParseException into its exit code, with the message on standard error."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except JointParseException as e:
            app.logger.error("{}: {}".format(e.__class__.__name__, e))
            click.echo("Error: {}".format(e), err=True)
            raise click.exceptions.Exit(e.exit_code)
    return wrapper


def hyperparams_from_options(options):
    hyper = Hyperparams(
        word_dim=options['word_dim'],
        char_dim=options['char_dim'],
        tag_dim=options['tag_dim'],
        bilstm_layers=options['layers'],
        bilstm_hidden=options['hidden'],
        mlp_hidden=options['mlp_hidden'],
        keep_prob=options['keep_prob'],
        epochs=options['epochs'],
        lr=options['lr'],
        anneal=options['anneal'],
        anneal_every=options['anneal_every'],
        seed=options['seed'],
        tag_column=options['tag_column'],
        single_root=not options['multi_root'],
        shuffle=not options['no_shuffle'],
    )
    return hyper.validate()


def _resume(model_path, epochs):
    last_path = model_path + LAST_CHECKPOINT_SUFFIX
    if not os.path.isfile(last_path):
        raise ConfigurationError("Nothing to resume: {} does not exist".format(last_path))
    model, saved_state = load_checkpoint(last_path)
    if saved_state is None:
        raise ConfigurationError("{} holds no training state".format(last_path))
    if epochs is not None:
        model.hyper.epochs = epochs
    state = TrainState.from_dict(saved_state)
    app.logger.info("Resuming after epoch {} of {} (best dev mixed {:.2f} at epoch {})".format(
        state.epoch, model.hyper.epochs, state.best_mixed, state.best_epoch))
    return model, state


_defaults = Hyperparams()


@manager.command('train')
@click.option('--train', 'train_path', type=existing_file, required=True, help="Training treebank (CoNLL-U).")
@click.option('--dev', 'dev_path', type=existing_file, help="Development treebank (CoNLL-U).")
@click.option('--auto-split', is_flag=True, help="Hold out a seeded tenth of --train as development data.")
@click.option('--model', 'model_path', type=click.Path(dir_okay=False), required=True,
              help="Where the best checkpoint is written.")
@click.option('--log', 'log_path', type=click.Path(dir_okay=False),
              help="Per-epoch metric log (TSV). Defaults to the model path plus METRIC_LOG_SUFFIX.")
@click.option('--pretrained', type=existing_file, help="Whitespace-separated word vectors.")
@click.option('--resume', is_flag=True, help="Continue the run saved next to --model.")
@click.option('--word-dim', type=int, default=_defaults.word_dim, show_default=True)
@click.option('--char-dim', type=int, default=_defaults.char_dim, show_default=True)
@click.option('--tag-dim', type=int, default=_defaults.tag_dim, show_default=True)
@click.option('--layers', type=int, default=_defaults.bilstm_layers, show_default=True)
@click.option('--hidden', type=int, default=_defaults.bilstm_hidden, show_default=True)
@click.option('--mlp-hidden', type=int, default=_defaults.mlp_hidden, show_default=True)
@click.option('--keep-prob', type=float, default=_defaults.keep_prob, show_default=True)
@click.option('--epochs', type=int, default=None, help="[default: {}]".format(_defaults.epochs))
@click.option('--lr', type=float, default=_defaults.lr, show_default=True)
@click.option('--anneal', type=float, default=_defaults.anneal, show_default=True)
@click.option('--anneal-every', type=int, default=_defaults.anneal_every, show_default=True)
@click.option('--seed', type=int, default=_defaults.seed, show_default=True)
@click.option('--tag-column', type=click.Choice(TAG_COLUMNS), default=_defaults.tag_column, show_default=True)
@click.option('--multi-root', is_flag=True, help="Let the root take more than one dependent.")
@click.option('--no-shuffle', is_flag=True, help="Train on sentences in file order.")
@click.option('--dev-workers', type=int, default=None, help="Threads used to decode the dev set.")
@exits_on_error
def train(train_path, dev_path, auto_split, model_path, log_path, pretrained, resume, dev_workers, **options):
    """Trains a model, keeping the epoch with the best dev mixed accuracy."""
    if not dev_path and not auto_split:
        raise click.UsageError("Give --dev or --auto-split")
    if dev_path and auto_split:
        raise click.UsageError("--dev and --auto-split cannot be combined")
    if resume and pretrained:
        raise click.UsageError("--pretrained only applies to a fresh run")
    if options['epochs'] is None and not resume:
        options['epochs'] = _defaults.epochs

    if not os.path.isdir(os.path.dirname(os.path.abspath(model_path))):
        raise click.UsageError("The directory of --model does not exist")
    app.logger.info("train: {} -> {}".format(train_path, model_path))

    if resume:
        model, state = _resume(model_path, options['epochs'])
        hyper = model.hyper
    else:
        hyper = hyperparams_from_options(options)

    train_set = read_treebank(train_path)
    if auto_split:
        train_set, dev_set = split_9_1(train_set, seed=hyper.seed)
    else:
        dev_set = read_treebank(dev_path)

    if not resume:
        lexicon = build_lexicon(train_set, hyper.word_dim, hyper.char_dim, hyper.tag_dim, hyper.tag_column)
        model = JointModel(lexicon, hyper)
        state = None
        if pretrained:
            load_pretrained(pretrained, lexicon, model.store)

    if log_path is None:
        log_path = model_path + app.config.get('METRIC_LOG_SUFFIX')
    trainer = Trainer(model, model_path=model_path, log_path=log_path, dev_workers=dev_workers,
                      last_path=model_path + LAST_CHECKPOINT_SUFFIX)
    state = trainer.train(train_set, dev_set, state=state)
    app.logger.info("train: best dev mixed accuracy {:.2f} at epoch {}".format(state.best_mixed, state.best_epoch))


@manager.command('predict')
@click.option('--model', 'model_path', type=existing_file, required=True)
@click.option('--input', 'input_path', type=existing_file, required=True, help="CoNLL-U to tag and parse.")
@click.option('--output', 'output_path', type=click.Path(dir_okay=False, allow_dash=True), default='-',
              show_default=True)
@click.option('--workers', type=int, default=None, help="Decoding threads. Defaults to PREDICT_WORKERS.")
@exits_on_error
def predict(model_path, input_path, output_path, workers):
    """Fills in the tag column, HEAD and DEPREL of every token."""
    if workers is None:
        workers = app.config.get('PREDICT_WORKERS')
    if workers < 1:
        raise click.UsageError("--workers must be at least 1")
    app.logger.info("predict: {} with {}".format(input_path, model_path))

    model, _ = load_checkpoint(model_path)
    sentences = read_treebank(input_path)
    predictions = predict_treebank(model, sentences, workers)

    if output_path == '-':
        buffer = io.StringIO()
        write_treebank(sentences, buffer, predictions, tag_column=model.hyper.tag_column)
        click.echo(buffer.getvalue(), nl=False)
    else:
        with atomic_write(output_path) as stream:
            write_treebank(sentences, stream, predictions, tag_column=model.hyper.tag_column)
    app.logger.info("predict: {} sentences".format(len(sentences)))


@manager.command('eval')
@click.option('--gold', 'gold_paths', type=existing_file, multiple=True, required=True,
              help="Gold treebank; repeat together with --system for several treebanks.")
@click.option('--system', 'system_paths', type=existing_file, multiple=True, required=True)
@click.option('--name', 'names', multiple=True, help="Row names, one per --gold.")
@click.option('--tag-column', type=click.Choice(TAG_COLUMNS), default='upos', show_default=True)
@click.option('--punct', type=click.Choice(PUNCT_CONVENTIONS),
              help="Punctuation convention. Defaults to ptb for xpos and ud for upos.")
@click.option('--all-tokens', is_flag=True, help="Headline UAS/LAS count punctuation too.")
@click.option('--tsv', is_flag=True, help="Machine-readable output.")
@click.option('--baseline-train', type=existing_file,
              help="Add right-branching baseline rows whose majority labels come from this treebank.")
@exits_on_error
def eval_command(gold_paths, system_paths, names, tag_column, punct, all_tokens, tsv, baseline_train):
    """Scores system output against gold treebanks."""
    if len(gold_paths) != len(system_paths):
        raise click.UsageError("Every --gold needs a matching --system")
    if names and len(names) != len(gold_paths):
        raise click.UsageError("Give one --name per --gold or none")
    if not names:
        names = [os.path.basename(path) for path in gold_paths]
    convention = punct or default_punct_convention(tag_column)
    exclude_punct = not all_tokens

    baseline_train_set = read_treebank(baseline_train) if baseline_train else None
    reports = []
    baselines = []
    for name, gold_path, system_path in zip(names, gold_paths, system_paths):
        gold = read_treebank(gold_path)
        system = read_treebank(system_path)
        reports.append(evaluate(gold, system, convention, exclude_punct, tag_column, name=name))
        if baseline_train_set is not None:
            predictions = right_branching_baseline(baseline_train_set, gold, tag_column)
            guessed = [with_prediction(s, p, tag_column) for s, p in zip(gold, predictions)]
            baselines.append(evaluate(gold, guessed, convention, exclude_punct, tag_column,
                                      name=name + ' baseline'))

    rows = report_rows(reports) + [report.row() for report in baselines]
    if tsv:
        click.echo(report_tsv(rows), nl=False)
    else:
        click.echo(render_report(rows, convention, exclude_punct, tag_column), nl=False)


def main(argv=None):
    """
    Entry point of the `jointparse` console script and manage.py.

    :return: exit code: 0 success, 1 usage error, 2 data error, 3 numeric failure
    """
    with app.app_context():
        try:
            rv = manager.main(args=argv, prog_name='jointparse', standalone_mode=False)
        except click.ClickException as e:
            e.show()
            return EXIT_USAGE
        except click.Abort:
            click.echo("Aborted!", err=True)
            return EXIT_USAGE
        except JointParseException as e:
            click.echo("Error: {}".format(e), err=True)
            return e.exit_code
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
