"""Experiments on random permutations and brute-force class censuses.

Ordinal view of a binary tree: first child = left child, next sibling =
right child, and a dummy root adopts the right spine of the binary root.
The arity of an ordinal node v is then the length of the right spine of
v's left child, which is also the number of stack pops when v is pushed
during the left-to-right Cartesian tree construction.
"""

import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from math import comb
from typing import Optional

import numpy as np

from .errors import RangeError, ResourceError
from .succinct_tree import AlphaParams
from .tree_model import BinaryTreeModel, build_cartesian, make_rng

EXTENDED_TREE_CAP = 14
CENSUS_CAPS = {"rmq": 10, "rt2q": 8, "r2m": 8}


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


# -- reports -----------------------------------------------------------------

@dataclass
class ExperimentReport:
    name: str
    n: int
    trials: int
    seed: int
    values: list
    mean: float = 0.0
    stddev: float = 0.0
    fit: Optional[dict] = None
    extra: dict = field(default_factory=dict)
    extra_values: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = [float(v) for v in self.values]
        if self.values:
            self.mean = statistics.fmean(self.values)
            self.stddev = statistics.stdev(self.values) if len(self.values) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "experiment": self.name, "n": self.n, "trials": self.trials, "seed": self.seed,
            "mean": self.mean, "stddev": self.stddev, "values": self.values,
            "fit": self.fit, "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        rows = [("experiment", self.name), ("n", str(self.n)), ("trials", str(self.trials)),
                ("seed", str(self.seed)), ("mean", f"{self.mean:.6f}"),
                ("stddev", f"{self.stddev:.6f}")]
        for k in sorted(self.extra):
            v = self.extra[k]
            rows.append((k, f"{v:.6f}" if isinstance(v, float) else str(v)))
        if self.fit:
            for k in sorted(self.fit):
                rows.append(("fit." + k, f"{self.fit[k]:.6f}"))
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{w}}  {v}" for k, v in rows)


def _run_trials(fn, trials, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(trials)))
    return [fn(k) for k in range(trials)]


# -- ultra-succinct entropy --------------------------------------------------

def _entropy_of_counts(counts, total: int) -> float:
    return sum(c * math.log2(total / c) for c in counts if c)


def ordinal_arities(t: BinaryTreeModel):
    """Arity of every ordinal node; index 0 is the dummy root."""
    left, right = t.left, t.right
    out = [0] * (t.m + 1)

    def spine(x):
        k = 0
        while x:
            k += 1
            x = right[x]
        return k

    out[0] = spine(t.root)
    for v in range(1, t.m + 1):
        out[v] = spine(left[v])
    return out


def ultra_succinct_entropy(t: BinaryTreeModel) -> float:
    """sum_a n_a lg(N/n_a) over the N = m+1 nodes of the ordinal tree."""
    ar = ordinal_arities(t)
    counts = np.bincount(np.asarray(ar, dtype=np.int64))
    return _entropy_of_counts(counts.tolist(), len(ar))


def arities_from_values(values):
    """Ordinal arities straight from the array via the construction stack."""
    vals = values.tolist() if isinstance(values, np.ndarray) else list(values)
    out = [0] * (len(vals) + 1)
    stack = []
    pop, push = stack.pop, stack.append
    for k, x in enumerate(vals, 1):
        c = 0
        while stack and stack[-1] > x:
            pop()
            c += 1
        out[k] = c
        push(x)
    out[0] = len(stack)
    return out


def ultra_entropy_per_node(values) -> float:
    ar = arities_from_values(values)
    counts = np.bincount(np.asarray(ar, dtype=np.int64)).tolist()
    # per node of the ordinal tree, dummy root included
    return _entropy_of_counts(counts, len(ar)) / len(ar)


def ultra_entropy_experiment(n: int, trials: int, seed: int = 0, threads: int = 1) -> ExperimentReport:
    if n < 1 or trials < 1:
        raise RangeError("n and trials must be positive")

    def one(k):
        return ultra_entropy_per_node(make_rng(seed, k).permutation(n))

    return ExperimentReport("ultra-entropy", n, trials, seed, _run_trials(one, trials, threads))


def fit_log_model(ns, totals) -> dict:
    """Least squares for total = 2n - c lg n; returns the fitted c."""
    xs = [math.log2(n) for n in ns]
    ys = [2 * n - t for n, t in zip(ns, totals)]
    c = sum(x * y for x, y in zip(xs, ys)) / sum(x * x for x in xs)
    return {"c": c}


# -- average-case measure ------------------------------------------------------

def node_types_from_values(values) -> np.ndarray:
    """Type code 2*hasLeft + hasRight per node, from neighbour comparisons."""
    a = np.asarray(values)
    n = len(a)
    has_l = np.zeros(n, dtype=np.int8)
    has_r = np.zeros(n, dtype=np.int8)
    if n > 1:
        has_l[1:] = a[:-1] > a[1:]
        has_r[:-1] = a[1:] > a[:-1]
    return 2 * has_l + has_r


def tree_node_types(t: BinaryTreeModel) -> np.ndarray:
    return np.array([t.node_type(v) for v in range(1, t.m + 1)], dtype=np.int8)


def avg_case_measure(n: int, trials: int, seed: int = 0, alpha: AlphaParams = None,
                     check_every: int = 0, threads: int = 1) -> ExperimentReport:
    """Per-trial sum n_i lg(1/alpha_i) / n on random Cartesian trees.

    check_every > 0 rebuilds the tree for every such trial and asserts the
    neighbour rule for child presence node by node.
    """
    if n < 2 or trials < 1:
        raise RangeError("need n >= 2 and trials >= 1")
    alpha = alpha or AlphaParams.default()
    costs = [math.log2(1 / float(p)) for p in alpha.by_type()]

    def one(k):
        a = make_rng(seed, k).permutation(n)
        types = node_types_from_values(a)
        if check_every and k % check_every == 0:
            ref = tree_node_types(build_cartesian(a + 1))
            if not np.array_equal(ref, types):
                bad = int(np.flatnonzero(ref != types)[0]) + 1
                raise AssertionError(f"child rule fails at node {bad} in trial {k}")
        counts = np.bincount(types, minlength=4)
        value = float(sum(c * w for c, w in zip(counts.tolist(), costs))) / n
        left_freq = float((types[1:] >= 2).mean())
        return value, left_freq, counts[0] / n

    res = _run_trials(one, trials, threads)
    rep = ExperimentReport("avgcase", n, trials, seed, [r[0] for r in res])
    rep.extra_values = {"left_child_frequency": [r[1] for r in res]}
    rep.extra = {
        "left_child_frequency": statistics.fmean(r[1] for r in res),
        "leaf_fraction": statistics.fmean(float(r[2]) for r in res),
        "target": 1 / 3 + math.log2(3),
    }
    return rep


def fact24_experiment(n: int, trials: int, seed: int = 0, threads: int = 1) -> ExperimentReport:
    """Frequency of a left child among nodes 2..n, with the tree-built check on."""
    rep = avg_case_measure(n, trials, seed, check_every=1, threads=threads)
    out = ExperimentReport("fact24", n, trials, seed, rep.extra_values["left_child_frequency"])
    out.extra = {"leaf_fraction": rep.extra["leaf_fraction"]}
    return out


# -- extended Cartesian trees --------------------------------------------------

def count_extended_trees(n: int) -> int:
    """Sum over n-node shapes of prod C(l_v + r_v, r_v) over two-child nodes.

    DP over (size, left spine length, right spine length).
    """
    if n < 1:
        raise RangeError("n must be at least 1")
    if n > EXTENDED_TREE_CAP:
        raise ResourceError(f"count_extended_trees is capped at n={EXTENDED_TREE_CAP}")
    f = [dict() for _ in range(n + 1)]
    f[1][(1, 1)] = 1
    for s in range(2, n + 1):
        cur = {}
        for (a, b), w in f[s - 1].items():
            cur[(a + 1, 1)] = cur.get((a + 1, 1), 0) + w   # left child only
            cur[(1, b + 1)] = cur.get((1, b + 1), 0) + w   # right child only
        for s1 in range(1, s - 1):
            s2 = s - 1 - s1
            for (a1, b1), w1 in f[s1].items():
                for (a2, b2), w2 in f[s2].items():
                    key = (a1 + 1, b2 + 1)
                    cur[key] = cur.get(key, 0) + w1 * w2 * comb(b1 + a2, a2)
        f[s] = cur
    return sum(f[n].values())


def _shapes(n):
    if n == 0:
        yield None
        return
    for s1 in range(n):
        for l in _shapes(s1):
            for r in _shapes(n - 1 - s1):
                yield (l, r)


def count_extended_trees_brute(n: int) -> int:
    """Same count by listing every shape; small n only."""
    def lspine(t):
        k = 0
        while t is not None:
            k, t = k + 1, t[0]
        return k

    def rspine(t):
        k = 0
        while t is not None:
            k, t = k + 1, t[1]
        return k

    def weight(t):
        if t is None:
            return 1
        l, r = t
        w = weight(l) * weight(r)
        if l is not None and r is not None:
            w *= comb(rspine(l) + lspine(r), lspine(r))
        return w

    return sum(weight(t) for t in _shapes(n))


# -- class censuses ----------------------------------------------------------

@dataclass
class ClassCensus:
    n: int
    family: str
    classes: int
    extended_trees: Optional[int]
    catalan: int

    def to_dict(self):
        return {"n": self.n, "family": self.family, "classes": self.classes,
                "extended_trees": self.extended_trees, "catalan": self.catalan}


def _answer_tables(perms: np.ndarray, family: str) -> np.ndarray:
    """uint8 answer table per row, one column per (i, j) in lexicographic order."""
    rows, n = perms.shape
    cols = []
    for i in range(n):
        m1 = np.full(rows, i, dtype=np.uint8)
        v1 = perms[:, i].copy()
        m2 = np.full(rows, 255, dtype=np.uint8)
        v2 = np.full(rows, np.iinfo(perms.dtype).max, dtype=perms.dtype)
        if family == "rmq":
            cols.append(m1.copy())
        for j in range(i + 1, n):
            x = perms[:, j]
            new_min = x < v1
            new_second = ~new_min & (x < v2)
            m2 = np.where(new_min, m1, np.where(new_second, j, m2)).astype(np.uint8)
            v2 = np.where(new_min, v1, np.where(new_second, x, v2))
            m1 = np.where(new_min, j, m1).astype(np.uint8)
            v1 = np.where(new_min, x, v1)
            if family == "rmq":
                cols.append(m1.copy())
            elif family == "rt2q":
                cols.append(m1.copy())
                cols.append(m2.copy())
            else:
                cols.append(m2.copy())
    return np.ascontiguousarray(np.stack(cols, axis=1))


def _chunk_fingerprints(n, first, family):
    rest = [x for x in range(n) if x != first]
    body = np.array(list(permutations(rest)), dtype=np.int8).reshape(-1, n - 1)
    perms = np.empty((body.shape[0], n), dtype=np.int8)
    perms[:, 0] = first
    perms[:, 1:] = body
    tables = _answer_tables(perms, family)
    width = tables.shape[1]
    # full rows are compared byte for byte; no hashing shortcut
    uniq = np.unique(tables.view(np.dtype((np.void, width))).ravel())
    return {u.tobytes() for u in uniq}


def class_census(n: int, family: str, threads: int = 1) -> ClassCensus:
    family = family.lower()
    if family not in CENSUS_CAPS:
        raise ValueError(f"unknown query family {family!r}")
    lo = 1 if family == "rmq" else 2
    if n < lo:
        raise RangeError(f"{family} census needs n >= {lo}")
    if n > CENSUS_CAPS[family]:
        raise ResourceError(f"{family} census is capped at n={CENSUS_CAPS[family]}")
    if n == 1:
        seen = {b""}
    else:
        seen = set()
        for part in _run_trials(lambda f: _chunk_fingerprints(n, f, family), n, threads):
            seen |= part
    ext = count_extended_trees(n) if family != "rmq" else None
    return ClassCensus(n, family, len(seen), ext, catalan(n))


def census_report(n: int, family: str, threads: int = 1) -> ExperimentReport:
    c = class_census(n, family, threads)
    rep = ExperimentReport("census", n, 1, 0, [c.classes])
    rep.extra = {"family": family, "classes": c.classes, "catalan": c.catalan,
                 "extended_trees": c.extended_trees,
                 "effective_entropy_bits": math.ceil(math.log2(c.classes)) if c.classes > 1 else 0}
    return rep
