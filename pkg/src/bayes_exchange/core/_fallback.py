"""Pure-Python implementations of the engine's hot kernels.

These mirror ``_kernels.pyx`` exactly (same outputs, same label order) and
are used when the compiled extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np


def refine(labels: np.ndarray, keys: np.ndarray) -> tuple[np.ndarray, int]:
    """Split each class of ``labels`` by ``keys``.

    New labels are dense and numbered in order of first appearance.
    """
    labels = np.asarray(labels, dtype=np.int64)
    keys = np.asarray(keys, dtype=np.int64)
    if labels.size == 0:
        return labels.copy(), 0
    width = int(keys.max()) + 1
    combined = labels * width + keys
    _, first, inverse = np.unique(combined, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size, dtype=np.int64)
    return rank[inverse.reshape(-1)], int(order.size)


def config_weights(radices, numerators) -> list[int]:
    """Exact weight of every mixed-radix configuration (digit 0 fastest)."""
    weights = [1]
    for r, nums in zip(reversed(list(radices)), reversed(list(numerators))):
        weights = [w * nums[d] for w in weights for d in range(r)]
    return weights


def class_sums(labels, n_classes: int, radices, num_true, num_false):
    """Per-class sums of the configuration weights under each state.

    ``num_true[j][d]`` is the integer weight of digit ``d`` of position ``j``
    under T (likewise ``num_false``). Returns two lists of Python ints.
    """
    wt = config_weights(radices, num_true)
    wf = config_weights(radices, num_false)
    st = [0] * n_classes
    sf = [0] * n_classes
    for c, lab in enumerate(np.asarray(labels, dtype=np.int64).tolist()):
        st[lab] += wt[c]
        sf[lab] += wf[c]
    return st, sf
