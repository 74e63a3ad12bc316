"""
.. module: jointparse.decoder
    :platform: Unix
    :synopsis: Projective arc-factored decoding with Eisner's algorithm,
    loss-augmented decoding and the structured hinge loss used in training,
    plus an exhaustive search used to verify the chart.

.. version:: $$VERSION$$

Score matrices are (n+1)x(n+1) numpy arrays indexed [head, modifier], with
the artificial root at index 0. The diagonal and column 0 are never read.

"""
import numpy as np

from jointparse.conllu import DepTree, arcs_cross
from jointparse.constants import ARC_COST, BRUTE_FORCE_MAX_TOKENS
from jointparse.exceptions import DecoderError

LEFT = 0   # head at the right end of the span
RIGHT = 1  # head at the left end of the span


def _as_matrix(scores):
    matrix = getattr(scores, 'matrix', scores)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DecoderError("Score matrix must be square, got shape {}".format(matrix.shape))
    if matrix.shape[0] < 2:
        raise DecoderError("Cannot decode a sentence without tokens")
    return matrix


class EisnerChart(object):
    """
    The four dynamic programming tables of Eisner's algorithm, complete and
    incomplete spans in both directions, with backpointers to split points.

    With single_root, the root may only take one dependent: an incomplete
    span headed by the root is only ever built from the empty root span and
    a complete span over the tokens.
    """

    def __init__(self, scores, single_root=True):
        self.scores = _as_matrix(scores)
        self.single_root = single_root
        self.n = self.scores.shape[0] - 1
        size = self.n + 1
        self.complete = np.full((size, size, 2), -np.inf)
        self.incomplete = np.full((size, size, 2), -np.inf)
        self.complete_split = np.zeros((size, size, 2), dtype=np.int64)
        self.incomplete_split = np.zeros((size, size, 2), dtype=np.int64)
        for i in range(size):
            self.complete[i, i, LEFT] = 0.0
            self.complete[i, i, RIGHT] = 0.0
        self._fill()

    def _fill(self):
        s = self.scores
        size = self.n + 1
        for width in range(1, size):
            for i in range(0, size - width):
                j = i + width

                # Incomplete spans: an arc between i and j over two complete halves.
                if i == 0 and self.single_root:
                    splits = np.array([self.complete[0, 0, RIGHT] + self.complete[1, j, LEFT]])
                    offset = 0
                else:
                    splits = self.complete[i, i:j, RIGHT] + self.complete[i + 1:j + 1, j, LEFT]
                    offset = i
                best = int(np.argmax(splits))
                self.incomplete[i, j, RIGHT] = splits[best] + s[i, j]
                self.incomplete_split[i, j, RIGHT] = best + offset
                if i > 0:
                    self.incomplete[i, j, LEFT] = splits[best] + s[j, i]
                    self.incomplete_split[i, j, LEFT] = best + offset

                # Complete spans.
                candidates = self.complete[i, i:j, LEFT] + self.incomplete[i:j, j, LEFT]
                best = int(np.argmax(candidates))
                self.complete[i, j, LEFT] = candidates[best]
                self.complete_split[i, j, LEFT] = best + i

                candidates = self.incomplete[i, i + 1:j + 1, RIGHT] + self.complete[i + 1:j + 1, j, RIGHT]
                best = int(np.argmax(candidates))
                self.complete[i, j, RIGHT] = candidates[best]
                self.complete_split[i, j, RIGHT] = best + i + 1

    @property
    def best_score(self):
        return float(self.complete[0, self.n, RIGHT])

    def backtrack(self):
        """:return: DepTree with heads only"""
        heads = [None] * self.n
        stack = [(0, self.n, RIGHT, True)]
        while stack:
            i, j, direction, complete = stack.pop()
            if i == j:
                continue
            if complete:
                k = int(self.complete_split[i, j, direction])
                if direction == RIGHT:
                    stack.append((i, k, RIGHT, False))
                    stack.append((k, j, RIGHT, True))
                else:
                    stack.append((i, k, LEFT, True))
                    stack.append((k, j, LEFT, False))
            else:
                k = int(self.incomplete_split[i, j, direction])
                if direction == RIGHT:
                    heads[j - 1] = i
                else:
                    heads[i - 1] = j
                stack.append((i, k, RIGHT, True))
                stack.append((k + 1, j, LEFT, True))
        return DepTree(heads)


def eisner_decode(scores, single_root=True):
    """
    The highest scoring projective tree under arc-factored scores, in O(n^3).
    Ties go to the smallest split point.

    :return: DepTree (heads only)
    """
    return EisnerChart(scores, single_root=single_root).backtrack()


def tree_score(scores, heads):
    matrix = getattr(scores, 'matrix', scores)
    return float(sum(matrix[h, m] for m, h in enumerate(heads, 1)))


def _brute_force_search(matrix, single_root):
    n = matrix.shape[0] - 1
    heads = [0] * n
    best = [None, None]

    def reaches_root(m, assigned):
        seen = set()
        node = m
        while node != 0:
            if node in seen or node > assigned:
                return node not in seen
            seen.add(node)
            node = heads[node - 1]
        return True

    def extend(m, score, roots):
        if m > n:
            if best[0] is None or score > best[0]:
                best[0] = score
                best[1] = list(heads)
            return
        for h in range(n + 1):
            if h == m:
                continue
            if h == 0 and single_root and roots == 1:
                continue
            heads[m - 1] = h
            # A cycle among assigned tokens can never be repaired later.
            if not reaches_root(m, m):
                continue
            if any(arcs_cross((h, m), (heads[k - 1], k)) for k in range(1, m)):
                continue
            extend(m + 1, score + matrix[h, m], roots + (1 if h == 0 else 0))
        heads[m - 1] = 0

    extend(1, 0.0, 0)
    return best


def brute_force_best_tree(scores, single_root=True):
    """
    Searches every head assignment in lexicographic order, keeping acyclic,
    projective (and, with single_root, single-rooted) ones, and returns the
    best. Ties go to the lexicographically smallest head vector. Used to
    check the chart.
    """
    matrix = _as_matrix(scores)
    n = matrix.shape[0] - 1
    if n > BRUTE_FORCE_MAX_TOKENS:
        raise DecoderError("Brute force search is limited to {} tokens, got {}".format(
            BRUTE_FORCE_MAX_TOKENS, n))
    score, heads = _brute_force_search(matrix, single_root)
    if single_root and heads is not None and heads.count(0) != 1:
        raise DecoderError("No single-rooted tree found")
    return DepTree(heads)


def augment_scores(scores, gold, cost=ARC_COST):
    """Adds `cost` to every arc that is not in the gold tree."""
    matrix = _as_matrix(scores).copy()
    matrix += cost
    for h, m in gold.arcs():
        matrix[h, m] -= cost
    return matrix


def loss_augmented_decode(scores, gold, single_root=True):
    """Decodes under scores inflated by 1 for every non-gold arc."""
    return eisner_decode(augment_scores(scores, gold), single_root=single_root)


def hinge_loss_arc(graph, arc_scores, gold, predicted_aug):
    """
    max(0, sum over predicted arcs of (score + cost if not gold) - sum over
    gold arcs of score), built from the arc score nodes so that gradients
    reach exactly the arcs of both trees.

    :param arc_scores: the network's ArcScoreMatrix for this sentence
    :return: scalar loss node
    """
    gold_arcs = set(gold.arcs())
    predicted = predicted_aug.arcs()
    cost = sum(ARC_COST for arc in predicted if arc not in gold_arcs)
    predicted_total = graph.sum(graph.pick(arc_scores.node, [arc_scores.position(h, m) for h, m in predicted]))
    gold_total = graph.sum(graph.pick(arc_scores.node, [arc_scores.position(h, m) for h, m in gold.arcs()]))
    margin = graph.sum_scalars([graph.sub(predicted_total, gold_total)], constant=cost)
    return graph.rectify(margin)
