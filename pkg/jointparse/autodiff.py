"""
.. module: jointparse.autodiff
    :platform: Unix
    :synopsis: Tape-based reverse-mode differentiation over numpy arrays, and
    the Adam optimizer that consumes the gradients.

.. version:: $$VERSION$$

A TapeGraph records one forward pass. Every operation computes its value
eagerly and appends a node to the tape; since inputs must already exist, the
tape is topologically ordered by construction. backward() walks the tape in
reverse and stages parameter gradients in the ParameterStore, where
adam_step() picks them up.

All values are float64.

"""
import numpy as np

from jointparse import app
from jointparse.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON
from jointparse.exceptions import GraphError, LookupOutOfRange, NumericFailure, ShapeMismatch


class Parameter(object):
    """A named trainable tensor with its gradient staging buffer and Adam moments."""
    __slots__ = ('name', 'value', 'grad', 'first_moment', 'second_moment')

    def __init__(self, name, value):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.first_moment = np.zeros_like(value)
        self.second_moment = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape


class ParameterStore(object):
    """
    Holds every trainable tensor of a model, the Adam state, and the seeded
    random generator used for initialization, shuffling and dropout.
    """

    def __init__(self, seed=42):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.params = {}
        self.step_count = 0

    def add(self, name, shape, init='xavier', value=None):
        """
        Creates a parameter.

        :param init: 'xavier' for matrices, 'zeros' for biases, 'embedding'
            for lookup tables and free vectors, 'lstm_bias' for a gate bias
            laid out as [input, forget, output, cell] with the forget gate at 1.
        :return: the new Parameter
        """
        if name in self.params:
            raise GraphError("Parameter {} already exists".format(name))
        shape = tuple(shape)
        if value is None:
            value = self._initial_value(shape, init)
        else:
            value = np.array(value, dtype=np.float64)
            if value.shape != shape:
                raise ShapeMismatch('parameter {}'.format(name), shape, value.shape)
        param = Parameter(name, value)
        self.params[name] = param
        return param

    def _initial_value(self, shape, init):
        if init == 'zeros':
            return np.zeros(shape)
        if init == 'lstm_bias':
            value = np.zeros(shape)
            hidden = shape[0] // 4
            value[hidden:2 * hidden] = 1.0
            return value
        if init == 'embedding':
            bound = 0.5 / shape[-1]
            return self.rng.uniform(-bound, bound, size=shape)
        if init == 'xavier':
            fan_out, fan_in = shape[0], shape[1]
            bound = np.sqrt(6.0) / np.sqrt(fan_in + fan_out)
            return self.rng.uniform(-bound, bound, size=shape)
        raise GraphError("Unknown initializer {}".format(init))

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def names(self):
        return list(self.params.keys())

    def zero_grad(self):
        for param in self.params.values():
            param.grad.fill(0.0)

    def adam_step(self, lr):
        """
        Applies one Adam update from the staged gradients, then clears them.
        Raises NumericFailure naming the first parameter with a NaN gradient;
        in that case nothing is updated.
        """
        for param in self.params.values():
            if np.isnan(param.grad).any():
                raise NumericFailure("NaN gradient for parameter {}".format(param.name))

        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - ADAM_BETA1 ** t
        correction2 = 1.0 - ADAM_BETA2 ** t
        for param in self.params.values():
            g = param.grad
            param.first_moment *= ADAM_BETA1
            param.first_moment += (1.0 - ADAM_BETA1) * g
            param.second_moment *= ADAM_BETA2
            param.second_moment += (1.0 - ADAM_BETA2) * g * g
            m_hat = param.first_moment / correction1
            v_hat = param.second_moment / correction2
            param.value -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)
            g.fill(0.0)

    def adam_restart(self):
        """Zeroes both moment buffers and the step counter. Values are untouched."""
        for param in self.params.values():
            param.first_moment.fill(0.0)
            param.second_moment.fill(0.0)
        self.step_count = 0
        app.logger.debug("Adam optimizer restarted")

    def rng_state(self):
        return self.rng.bit_generator.state

    def set_rng_state(self, state):
        self.rng.bit_generator.state = state


def adam_step(store, lr):
    store.adam_step(lr)


def adam_restart(store):
    store.adam_restart()


class Node(object):
    __slots__ = ('op', 'inputs', 'value', 'aux')

    def __init__(self, op, inputs, value, aux=None):
        self.op = op
        self.inputs = inputs
        self.value = value
        self.aux = aux


_BACKWARD = {}


def backward_rule(op):
    def register(fn):
        _BACKWARD[op] = fn
        return fn
    return register


def _as_array(value):
    return np.asarray(value, dtype=np.float64)


class TapeGraph(object):
    """
    The dynamic computation graph of one example. Nodes are addressed by
    integer ids. A graph supports a single backward pass.
    """

    def __init__(self, store):
        self.store = store
        self.nodes = []
        self._param_nodes = {}
        self._consumed = False

    def _add(self, op, inputs, value, aux=None):
        self.nodes.append(Node(op, tuple(inputs), value, aux))
        return len(self.nodes) - 1

    def value(self, node_id):
        return self.nodes[node_id].value

    def shape(self, node_id):
        return self.nodes[node_id].value.shape

    def _check_same(self, op, a, b):
        if self.shape(a) != self.shape(b):
            raise ShapeMismatch(op, self.shape(a), self.shape(b))

    # Leaves

    def parameter(self, name):
        """A node reading a whole parameter. Its gradient is staged at backward()."""
        if name not in self._param_nodes:
            self._param_nodes[name] = self._add('parameter', (), self.store[name].value, aux=name)
        return self._param_nodes[name]

    def constant(self, value):
        return self._add('constant', (), _as_array(value))

    def lookup(self, name, index):
        """Embedding lookup. The gradient reaches row `index` of `name` only."""
        table = self.store[name].value
        if index < 0 or index >= table.shape[0]:
            raise LookupOutOfRange(name, index, table.shape[0])
        node_id = self._add('lookup', (), table[index].copy(), aux=(name, index))
        return node_id

    # Linear algebra

    def affine(self, w, b, x):
        """W x + b for a vector x, or one row per example when x is a matrix."""
        wv, bv, xv = self.value(w), self.value(b), self.value(x)
        if wv.ndim != 2 or xv.shape[-1] != wv.shape[1]:
            raise ShapeMismatch('affine', wv.shape, xv.shape)
        if bv.shape != (wv.shape[0],):
            raise ShapeMismatch('affine bias', wv.shape, bv.shape)
        return self._add('affine', (w, b, x), xv.dot(wv.T) + bv)

    def concat(self, node_ids, axis=-1):
        values = [self.value(i) for i in node_ids]
        for v in values[1:]:
            if v.ndim != values[0].ndim:
                raise ShapeMismatch('concat', values[0].shape, v.shape)
        sizes = [v.shape[axis] for v in values]
        return self._add('concat', node_ids, np.concatenate(values, axis=axis), aux=(axis, sizes))

    def stack(self, node_ids):
        """Stacks equally shaped vectors into the rows of a matrix."""
        values = [self.value(i) for i in node_ids]
        for v in values[1:]:
            if v.shape != values[0].shape:
                raise ShapeMismatch('stack', values[0].shape, v.shape)
        return self._add('stack', node_ids, np.stack(values))

    def slice(self, x, start, stop):
        """Slice along the last axis."""
        return self._add('slice', (x,), self.value(x)[..., start:stop].copy(), aux=(start, stop))

    def reshape(self, x, shape):
        xv = self.value(x)
        if int(np.prod(shape)) != xv.size:
            raise ShapeMismatch('reshape', xv.shape, shape)
        return self._add('reshape', (x,), xv.reshape(shape))

    def gather_rows(self, x, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return self._add('gather_rows', (x,), self.value(x)[rows], aux=rows)

    def pick(self, x, indices):
        """Selects entries of a vector."""
        indices = np.asarray(indices, dtype=np.int64)
        return self._add('pick', (x,), self.value(x)[indices], aux=indices)

    # Elementwise

    def add(self, a, b):
        self._check_same('add', a, b)
        return self._add('add', (a, b), self.value(a) + self.value(b))

    def sub(self, a, b):
        self._check_same('sub', a, b)
        return self._add('sub', (a, b), self.value(a) - self.value(b))

    def mul(self, a, b):
        self._check_same('mul', a, b)
        return self._add('mul', (a, b), self.value(a) * self.value(b))

    def abs_diff(self, a, b):
        self._check_same('abs_diff', a, b)
        diff = self.value(a) - self.value(b)
        return self._add('abs_diff', (a, b), np.abs(diff), aux=np.sign(diff))

    def tanh(self, x):
        return self._add('tanh', (x,), np.tanh(self.value(x)))

    def sigmoid(self, x):
        xv = self.value(x)
        return self._add('sigmoid', (x,), 0.5 * (np.tanh(0.5 * xv) + 1.0))

    def rectify(self, x):
        """max(0, x); used on the scalar hinge."""
        return self._add('rectify', (x,), np.maximum(self.value(x), 0.0))

    def dropout(self, x, keep_prob, rng, training=True):
        """
        Inverted dropout: kept units are scaled by 1/keep_prob so that the
        expectation is unchanged. The identity when not training.
        """
        if not training or keep_prob >= 1.0:
            return x
        mask = (rng.random(self.shape(x)) < keep_prob) / keep_prob
        return self._add('dropout', (x,), self.value(x) * mask, aux=mask)

    # Reductions and losses

    def sum(self, x):
        return self._add('sum', (x,), np.asarray(self.value(x).sum()))

    def sum_scalars(self, node_ids, constant=0.0):
        """Adds scalar nodes together with an optional constant."""
        total = float(constant)
        for i in node_ids:
            if self.value(i).size != 1:
                raise ShapeMismatch('sum_scalars', (), self.shape(i))
            total += float(self.value(i))
        return self._add('sum_scalars', node_ids, np.asarray(total))

    def softmax_xent(self, logits, gold):
        """
        Softmax followed by cross-entropy against the gold index. For a
        matrix of logits, `gold` holds one index per row and the losses are
        summed.
        """
        z = self.value(logits)
        single = z.ndim == 1
        z2 = z[None, :] if single else z
        gold = np.atleast_1d(np.asarray(gold, dtype=np.int64))
        if gold.shape[0] != z2.shape[0]:
            raise ShapeMismatch('softmax_xent', z.shape, gold.shape)
        shifted = z2 - z2.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        total = exp.sum(axis=1, keepdims=True)
        probs = exp / total
        rows = np.arange(z2.shape[0])
        losses = np.log(total[:, 0]) - shifted[rows, gold]
        return self._add('softmax_xent', (logits,), np.asarray(losses.sum()), aux=(probs, gold, single))

    # Composites

    def lstm_cell(self, w, b, x, h_prev, c_prev):
        """
        One step of a standard LSTM without peepholes. W maps [x; h_prev] to
        the four gates [input, forget, output, candidate].

        :return: (h, c) node ids
        """
        hidden = self.shape(h_prev)[-1]
        gates = self.affine(w, b, self.concat([x, h_prev]))
        i = self.sigmoid(self.slice(gates, 0, hidden))
        f = self.sigmoid(self.slice(gates, hidden, 2 * hidden))
        o = self.sigmoid(self.slice(gates, 2 * hidden, 3 * hidden))
        g = self.tanh(self.slice(gates, 3 * hidden, 4 * hidden))
        c = self.add(self.mul(f, c_prev), self.mul(i, g))
        h = self.mul(o, self.tanh(c))
        return h, c

    def backward(self, loss_node):
        """
        Reverse pass from a scalar loss node. Gradients of every parameter
        that took part are accumulated into the store's staging buffers.
        """
        if self._consumed:
            raise GraphError("Graph has already been differentiated")
        if self.value(loss_node).size != 1:
            raise GraphError("Loss must be scalar, got shape {}".format(self.shape(loss_node)))
        self._consumed = True

        grads = [None] * len(self.nodes)
        grads[loss_node] = np.ones_like(self.value(loss_node))
        for node_id in range(loss_node, -1, -1):
            g = grads[node_id]
            if g is None:
                continue
            node = self.nodes[node_id]
            if node.op == 'parameter':
                self.store[node.aux].grad += g
            elif node.op == 'lookup':
                name, row = node.aux
                self.store[name].grad[row] += g
            elif node.op != 'constant':
                _BACKWARD[node.op](self, node, g, grads)


def backward(graph, loss_node):
    graph.backward(loss_node)


def _accumulate(grads, node_id, g):
    if grads[node_id] is None:
        grads[node_id] = np.array(g, dtype=np.float64)
    else:
        grads[node_id] = grads[node_id] + g


@backward_rule('affine')
def _affine_backward(graph, node, g, grads):
    w, b, x = node.inputs
    wv, xv = graph.value(w), graph.value(x)
    if xv.ndim == 1:
        _accumulate(grads, w, np.outer(g, xv))
        _accumulate(grads, b, g)
    else:
        _accumulate(grads, w, g.T.dot(xv))
        _accumulate(grads, b, g.sum(axis=0))
    _accumulate(grads, x, g.dot(wv))


@backward_rule('concat')
def _concat_backward(graph, node, g, grads):
    axis, sizes = node.aux
    offset = 0
    for node_id, size in zip(node.inputs, sizes):
        index = [slice(None)] * g.ndim
        index[axis] = slice(offset, offset + size)
        _accumulate(grads, node_id, g[tuple(index)])
        offset += size


@backward_rule('stack')
def _stack_backward(graph, node, g, grads):
    for row, node_id in enumerate(node.inputs):
        _accumulate(grads, node_id, g[row])


@backward_rule('slice')
def _slice_backward(graph, node, g, grads):
    start, stop = node.aux
    x = node.inputs[0]
    full = np.zeros_like(graph.value(x))
    full[..., start:stop] = g
    _accumulate(grads, x, full)


@backward_rule('reshape')
def _reshape_backward(graph, node, g, grads):
    x = node.inputs[0]
    _accumulate(grads, x, g.reshape(graph.shape(x)))


@backward_rule('gather_rows')
def _gather_rows_backward(graph, node, g, grads):
    x = node.inputs[0]
    full = np.zeros_like(graph.value(x))
    np.add.at(full, node.aux, g)
    _accumulate(grads, x, full)


@backward_rule('pick')
def _pick_backward(graph, node, g, grads):
    x = node.inputs[0]
    full = np.zeros_like(graph.value(x))
    np.add.at(full, node.aux, g)
    _accumulate(grads, x, full)


@backward_rule('add')
def _add_backward(graph, node, g, grads):
    a, b = node.inputs
    _accumulate(grads, a, g)
    _accumulate(grads, b, g)


@backward_rule('sub')
def _sub_backward(graph, node, g, grads):
    a, b = node.inputs
    _accumulate(grads, a, g)
    _accumulate(grads, b, -g)


@backward_rule('mul')
def _mul_backward(graph, node, g, grads):
    a, b = node.inputs
    _accumulate(grads, a, g * graph.value(b))
    _accumulate(grads, b, g * graph.value(a))


@backward_rule('abs_diff')
def _abs_diff_backward(graph, node, g, grads):
    a, b = node.inputs
    _accumulate(grads, a, g * node.aux)
    _accumulate(grads, b, -g * node.aux)


@backward_rule('tanh')
def _tanh_backward(graph, node, g, grads):
    _accumulate(grads, node.inputs[0], g * (1.0 - node.value * node.value))


@backward_rule('sigmoid')
def _sigmoid_backward(graph, node, g, grads):
    _accumulate(grads, node.inputs[0], g * node.value * (1.0 - node.value))


@backward_rule('rectify')
def _rectify_backward(graph, node, g, grads):
    x = node.inputs[0]
    _accumulate(grads, x, g * (graph.value(x) > 0.0))


@backward_rule('dropout')
def _dropout_backward(graph, node, g, grads):
    _accumulate(grads, node.inputs[0], g * node.aux)


@backward_rule('sum')
def _sum_backward(graph, node, g, grads):
    x = node.inputs[0]
    _accumulate(grads, x, np.full(graph.shape(x), float(g)))


@backward_rule('sum_scalars')
def _sum_scalars_backward(graph, node, g, grads):
    for node_id in node.inputs:
        _accumulate(grads, node_id, np.full(graph.shape(node_id), float(g)))


@backward_rule('softmax_xent')
def _softmax_xent_backward(graph, node, g, grads):
    probs, gold, single = node.aux
    dz = probs.copy()
    dz[np.arange(dz.shape[0]), gold] -= 1.0
    dz *= float(g)
    _accumulate(grads, node.inputs[0], dz[0] if single else dz)
