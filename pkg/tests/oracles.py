"""Slow, independent reference implementations used as test oracles."""
import itertools
import math

import numpy as np


def brute_energy(q, x):
    """Plain double loop over the coefficient arrays."""
    total = q.offset
    for i, w in enumerate(q.linear):
        total += w * int(x[i])
    for (i, j), w in zip(q.topology.edges.tolist(), q.quadratic):
        total += w * int(x[i]) * int(x[j])
    return total


def enumerate_minimum(q):
    """Scan every assignment in lexicographic order, keep the first strict minimum."""
    best, best_x = math.inf, None
    for x in itertools.product((0, 1), repeat=q.num_vars):
        e = brute_energy(q, x)
        if e < best:
            best, best_x = e, x
    return np.array(best_x, dtype=np.uint8), best


def brute_ising_energy(m, s):
    total = m.offset
    for i, w in enumerate(m.h):
        total += w * s[i]
    for (i, j), w in zip(m.topology.edges.tolist(), m.J):
        total += w * s[i] * s[j]
    return total


def reverse_scan_freezeout(reps):
    """Walk back from the last slice until a variable's value differs."""
    reps = np.asarray(reps)
    K, n = reps.shape
    out = []
    for i in range(n):
        k = K - 1
        while k > 0 and reps[k - 1, i] == reps[K - 1, i]:
            k -= 1
        out.append(k)
    return np.array(out)


def flat_sort_topk(sets, top_k):
    values = []
    for ss in sets:
        values.extend(sorted(ss.energies.tolist())[:top_k])
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var), len(values)


def dense_enumerate(q):
    """All 2^n states via a dense upper-triangular matrix; returns (states, energies)."""
    n = q.num_vars
    Q = np.zeros((n, n))
    for (i, j), w in zip(q.topology.edges.tolist(), q.quadratic):
        Q[i, j] += w
    codes = np.arange(2 ** n, dtype=np.int64)
    # column 0 is the most significant bit, so row order is lexicographic
    X = ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(float)
    E = X @ q.linear + np.einsum("ki,ij,kj->k", X, Q, X) + q.offset
    return X.astype(np.uint8), E
