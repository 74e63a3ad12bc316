"""
.. module: jointparse.common.utils.utils
    :platform: Unix
    :synopsis: Small helpers shared by the checkpoint store and the command line.

.. version:: $$VERSION$$

"""
import contextlib
import io
import os
import tempfile

import numpy as np

from jointparse import app

prims = [int, str, bool, float, type(None)]


def sub_list(l):
    """Copy of a list with numpy scalars and tuples turned into JSON primitives."""
    r = []
    for i in l:
        r.append(to_primitive(i))
    return r


def sub_dict(d):
    r = {}
    for k in d:
        r[str(k)] = to_primitive(d[k])
    return r


def to_primitive(value):
    if type(value) in prims:
        return value
    if isinstance(value, (list, tuple)):
        return sub_list(value)
    if isinstance(value, dict):
        return sub_dict(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return sub_list(value.tolist())
    raise TypeError("Unknown Type: {}".format(type(value)))


@contextlib.contextmanager
def atomic_path(path):
    """
    Yields a temporary path next to `path`. When the block finishes the
    temporary file replaces `path` in one rename; on error it is removed and
    `path` is left as it was.
    """
    directory = os.path.dirname(os.path.abspath(path))
    handle, temp_path = tempfile.mkstemp(prefix='.' + os.path.basename(path) + '.', dir=directory)
    os.close(handle)
    try:
        yield temp_path
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    app.logger.debug("Wrote {}".format(path))


@contextlib.contextmanager
def atomic_write(path):
    """Opens a text stream (UTF-8, LF endings) whose contents replace `path` atomically."""
    with atomic_path(path) as temp_path:
        with io.open(temp_path, 'w', encoding='utf-8', newline='\n') as stream:
            yield stream
