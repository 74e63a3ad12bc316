"""
.. module: jointparse.datastore
    :platform: Unix
    :synopsis: Contains the SQLAlchemy models of the checkpoint file and the
    helpers that save and restore a trained model.

.. version:: $$VERSION$$

A checkpoint is a single SQLite file. Scalar state (format version,
hyperparameters, lexicon, random generator state, optimizer step count,
training progress) lives in checkpoint_entry as JSON text; every parameter
tensor and both of its Adam moments live in one row of parameter as
little-endian float64 bytes.

"""
import json
import os

import numpy as np
from sqlalchemy import Column, Integer, LargeBinary, String, Text, create_engine
from sqlalchemy.exc import DatabaseError
from sqlalchemy.orm import Session, declarative_base

from jointparse import app
from jointparse.autodiff import ParameterStore
from jointparse.common.utils.utils import atomic_path, to_primitive
from jointparse.constants import CHECKPOINT_FORMAT_VERSION
from jointparse.exceptions import CheckpointError, CheckpointVersionMismatch, JointParseException
from jointparse.lexicon import Lexicon
from jointparse.network import Hyperparams, JointModel

TENSOR_DTYPE = np.dtype('<f8')

Base = declarative_base()


class CheckpointEntry(Base):
    """
    One named piece of scalar state, stored as JSON text. A Text column
    keeps SQLite from applying numeric affinity to the payload.
    """
    __tablename__ = "checkpoint_entry"
    key = Column(String(64), primary_key=True)
    value = Column(Text, nullable=False)

    def load(self):
        return json.loads(self.value)


class ParameterTensor(Base):
    __tablename__ = "parameter"
    id = Column(Integer, primary_key=True)
    name = Column(String(128), unique=True, nullable=False)
    shape = Column(Text, nullable=False)
    value = Column(LargeBinary, nullable=False)
    first_moment = Column(LargeBinary, nullable=False)
    second_moment = Column(LargeBinary, nullable=False)

    @classmethod
    def from_parameter(cls, param):
        return cls(name=param.name,
                   shape=json.dumps(list(param.shape)),
                   value=_to_bytes(param.value),
                   first_moment=_to_bytes(param.first_moment),
                   second_moment=_to_bytes(param.second_moment))

    def arrays(self):
        """:return: (value, first_moment, second_moment) as float64 arrays"""
        shape = tuple(json.loads(self.shape))
        return tuple(_from_bytes(blob, shape, self.name)
                     for blob in (self.value, self.first_moment, self.second_moment))


def _to_bytes(array):
    return np.ascontiguousarray(array, dtype=TENSOR_DTYPE).tobytes()


def _from_bytes(blob, shape, name):
    array = np.frombuffer(blob, dtype=TENSOR_DTYPE)
    if array.size != int(np.prod(shape, dtype=np.int64)):
        raise CheckpointError("Parameter {} holds {} values, its shape {} needs {}".format(
            name, array.size, shape, int(np.prod(shape, dtype=np.int64))))
    return array.reshape(shape).astype(np.float64)


def _engine(path):
    return create_engine('sqlite:///' + os.path.abspath(path))


def save_checkpoint(path, model, state=None):
    """
    Writes everything needed to resume training or to predict: the lexicon,
    the hyperparameters, every parameter with its Adam moments, the optimizer
    step count, the random generator state and, when given, the TrainState.
    The file appears in one rename, so a crash never leaves a partial one.
    """
    store = model.store
    entries = {
        'format_version': CHECKPOINT_FORMAT_VERSION,
        'hyperparams': model.hyper.to_dict(),
        'lexicon': model.lexicon.to_dict(),
        'rng_state': store.rng_state(),
        'step_count': store.step_count,
        'train_state': state.to_dict() if state is not None else None,
    }
    with atomic_path(path) as temp_path:
        engine = _engine(temp_path)
        try:
            Base.metadata.create_all(engine)
            with Session(engine) as session:
                for key, value in entries.items():
                    session.add(CheckpointEntry(key=key, value=json.dumps(to_primitive(value))))
                for name in store.names():
                    session.add(ParameterTensor.from_parameter(store[name]))
                session.commit()
        finally:
            engine.dispose()
    app.logger.info("Saved checkpoint {} ({} parameters, step {})".format(
        path, len(store.names()), store.step_count))


def _read(path):
    if not os.path.isfile(path):
        raise CheckpointError("Checkpoint {} does not exist".format(path))
    engine = _engine(path)
    try:
        with Session(engine) as session:
            entries = dict((entry.key, entry.load()) for entry in session.query(CheckpointEntry))
            tensors = dict((row.name, row.arrays()) for row in session.query(ParameterTensor))
    except DatabaseError as e:
        raise CheckpointError("Cannot read checkpoint {}: {}".format(path, e.orig or e))
    except ValueError as e:
        raise CheckpointError("Checkpoint {} holds malformed JSON: {}".format(path, e))
    finally:
        engine.dispose()
    return entries, tensors


def load_checkpoint(path):
    """
    Rebuilds a model from a checkpoint. Parameter shapes are checked against
    what the stored lexicon and hyperparameters require.

    :return: (JointModel, dict of the saved TrainState or None)
    """
    entries, tensors = _read(path)
    version = entries.get('format_version')
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionMismatch(path, CHECKPOINT_FORMAT_VERSION, version)
    for key in ('hyperparams', 'lexicon', 'rng_state', 'step_count'):
        if key not in entries:
            raise CheckpointError("Checkpoint {} has no {} entry".format(path, key))

    hyper = Hyperparams.from_dict(entries['hyperparams'])
    try:
        lexicon = Lexicon.from_dict(entries['lexicon'])
    except JointParseException as e:
        raise CheckpointError("Checkpoint {}: {}".format(path, e))

    store = ParameterStore(hyper.seed)
    for name, (value, first_moment, second_moment) in tensors.items():
        param = store.add(name, value.shape, value=value)
        param.first_moment[...] = first_moment
        param.second_moment[...] = second_moment
    store.step_count = int(entries['step_count'])
    try:
        store.set_rng_state(entries['rng_state'])
    except (TypeError, ValueError, KeyError) as e:
        raise CheckpointError("Checkpoint {} has an unusable generator state: {}".format(path, e))

    model = JointModel(lexicon, hyper, store=store)
    app.logger.info("Loaded checkpoint {} ({} parameters, step {})".format(
        path, len(tensors), store.step_count))
    return model, entries.get('train_state')
