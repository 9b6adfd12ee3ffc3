"""Exact feasibility oracles for character-covering splits.

A test set is valid iff every character of a test label also occurs in some
train label. Equivalently the train side must contain, for every character,
at least one record holding it: train is a set cover of the character
universe. So the largest valid test side has ``n - min_cover`` records, and
every size from 0 up to that bound is reachable by growing a minimum cover.
"""

from __future__ import annotations

import random
from typing import Sequence

import numpy as np


def min_cover_dp(labels: Sequence[str]) -> int:
    """Minimum number of records covering all characters, by DP over character subsets."""
    chars = sorted(set("".join(labels)))
    if len(chars) > 20:
        raise ValueError("too many characters for subset DP")
    bit = {c: 1 << i for i, c in enumerate(chars)}
    masks = {sum(bit[c] for c in set(lab)) for lab in labels}
    full = (1 << len(chars)) - 1
    inf = len(labels) + 1
    best = [inf] * (full + 1)
    best[0] = 0
    for s in range(full + 1):
        if best[s] == inf:
            continue
        for m in masks:
            t = s | m
            if best[s] + 1 < best[t]:
                best[t] = best[s] + 1
    return best[full]


def brute_force_max_test(labels: Sequence[str]) -> int:
    """Enumerate train subsets by size until one covers; only for tiny inputs."""
    from itertools import combinations

    universe = set("".join(labels))
    for k in range(1, len(labels) + 1):
        for combo in combinations(range(len(labels)), k):
            if set("".join(labels[i] for i in combo)) == universe:
                return len(labels) - k
    return 0


def min_cover_milp(labels: Sequence[str]) -> int:
    """Minimum set cover as a 0/1 integer program (scipy HiGHS)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    chars = sorted(set("".join(labels)))
    idx = {c: i for i, c in enumerate(chars)}
    a = lil_matrix((len(chars), len(labels)))
    for j, lab in enumerate(labels):
        for c in set(lab):
            a[idx[c], j] = 1
    res = milp(
        c=np.ones(len(labels)),
        constraints=LinearConstraint(a.tocsr(), lb=1, ub=np.inf),
        integrality=np.ones(len(labels)),
        bounds=Bounds(0, 1),
    )
    if not res.success:
        raise RuntimeError(res.message)
    return int(round(res.fun))


def random_labels(rng: random.Random, n: int, alphabet: int, zipf: float = 1.1, max_len: int = 5) -> list[str]:
    """Labels over ``alphabet`` CJK characters with Zipf-like frequencies."""
    chars = [chr(0x4E00 + i) for i in range(alphabet)]
    weights = [1 / (k + 1) ** zipf for k in range(alphabet)]
    return ["".join(rng.choices(chars, weights, k=rng.randint(1, max_len))) for _ in range(n)]


def check_plan(labels: Sequence[str], plan) -> list[str]:
    """Return the list of violated split properties (empty when all hold)."""
    problems = []
    train, test = set(plan.train), set(plan.test)
    if train & test:
        problems.append("train and test overlap")
    if train | test != set(range(len(labels))):
        problems.append("split is not exhaustive")
    train_chars = set("".join(labels[i] for i in train))
    leaked = set("".join(labels[i] for i in test)) - train_chars
    if leaked:
        problems.append(f"test characters missing from train: {''.join(sorted(leaked))}")
    counts: dict[str, int] = {}
    for lab in labels:
        for c in set(lab):
            counts[c] = counts.get(c, 0) + 1
    for i in test:
        if any(counts[c] == 1 for c in set(labels[i])):
            problems.append(f"record {i} holds a single-record character but is in test")
    return problems
