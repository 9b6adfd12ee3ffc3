"""Character-balanced train/test splitting and counted augmentation."""

from __future__ import annotations

import math
import multiprocessing as mp
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

import cv2
import numpy as np

from . import seeding
from .errors import TcsynthError


class SplitInfeasible(TcsynthError):
    def __init__(self, message: str, blocking: Sequence[str]):
        self.blocking = tuple(blocking)
        super().__init__(f"{message}; blocking characters: {''.join(self.blocking[:50])}")


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    test: tuple[int, ...]
    # character -> (occurrences in train labels, occurrences in test labels)
    char_table: dict[str, tuple[int, int]]
    target_test_fraction: float

    @property
    def test_fraction(self) -> float:
        return len(self.test) / (len(self.train) + len(self.test))

    def balance_report(self) -> str:
        lines = ["char\ttrain\ttest"]
        for ch, (a, b) in sorted(self.char_table.items(), key=lambda kv: (-sum(kv[1]), kv[0])):
            lines.append(f"{ch}\t{a}\t{b}")
        return "\n".join(lines) + "\n"


def split_balanced(labels: Sequence[str], target_test_fraction: float, tolerance: float = 0.02) -> SplitPlan:
    """Split labeled records so every test character also occurs in train.

    Records are visited rarest-character first (ties by index). A record goes
    to test only when all its characters already have train coverage, no
    character's test share would pass its target share, and the test quota
    is not yet full. If the test side is still short, a second pass moves
    train records whose characters stay covered without them, most
    redundantly covered first. If that still falls short, train is rebuilt
    around a small set cover of all characters and test is filled from the
    remaining records in rarity order. Records holding a character that
    occurs only once always stay in train.
    """
    if not 0 < target_test_fraction < 1:
        raise ValueError("target_test_fraction must be in (0, 1)")
    n = len(labels)
    if n == 0:
        raise ValueError("no records to split")
    f = target_test_fraction
    total = Counter(ch for lab in labels for ch in lab)
    per_record = [Counter(lab) for lab in labels]
    quota = math.floor(f * n + 0.5)
    rarity = [min((total[c] for c in rc), default=math.inf) for rc in per_record]

    train_cnt: Counter[str] = Counter()
    test_cnt: Counter[str] = Counter()
    in_test = [False] * n
    n_test = 0
    for i in sorted(range(n), key=lambda i: (rarity[i], i)):
        rc = per_record[i]
        if (
            n_test < quota
            and rarity[i] > 1
            and all(train_cnt[c] > 0 for c in rc)
            and all(test_cnt[c] + k <= f * total[c] + 0.5 for c, k in rc.items())
        ):
            in_test[i] = True
            n_test += 1
            test_cnt.update(rc)
        else:
            train_cnt.update(rc)

    if n_test < quota:
        def slack(i: int) -> float:
            return min((train_cnt[c] - k for c, k in per_record[i].items()), default=math.inf)

        for i in sorted((i for i in range(n) if not in_test[i]), key=lambda i: (-slack(i), i)):
            if n_test >= quota:
                break
            rc = per_record[i]
            if rarity[i] > 1 and all(train_cnt[c] - k >= 1 for c, k in rc.items()):
                in_test[i] = True
                n_test += 1
                train_cnt.subtract(rc)
                test_cnt.update(rc)

    if n_test < quota:
        # the greedy passes can stall on a minimal but not minimum train cover;
        # rebuild around a smaller cover if one frees enough records
        cover = _small_cover(per_record)
        if n - len(cover) > n_test:
            in_cover = [False] * n
            for i in cover:
                in_cover[i] = True
            free = [i for i in sorted(range(n), key=lambda i: (rarity[i], i)) if not in_cover[i]]
            chosen = set(free[:quota])
            in_test = [i in chosen for i in range(n)]
            n_test = len(chosen)
            train_cnt, test_cnt = Counter(), Counter()
            for i in range(n):
                (test_cnt if in_test[i] else train_cnt).update(per_record[i])

    if abs(n_test - quota) > tolerance * n:
        blocking = sorted(
            {c for i in range(n) if not in_test[i] for c, k in per_record[i].items() if train_cnt[c] - k < 1}
        )
        raise SplitInfeasible(
            f"test side reached {n_test} of the {quota} records targeted ({f:.2%} of {n})", blocking
        )
    table = {c: (train_cnt[c], test_cnt[c]) for c in total}
    return SplitPlan(
        train=tuple(i for i in range(n) if not in_test[i]),
        test=tuple(i for i in range(n) if in_test[i]),
        char_table=table,
        target_test_fraction=f,
    )


def _reduce_cover(sets: Sequence[frozenset], covered: frozenset = frozenset()) -> set[int]:
    """Set-cover reductions applied to a fixed point; returns the forced picks.

    A character held by one live record forces that record. A record whose
    uncovered characters are a subset of another live record's is dropped.
    A character whose holders include all holders of another character is
    covered for free and dropped.
    """
    live = set(range(len(sets)))
    chars: dict[str, set[int]] = {}
    for i, s in enumerate(sets):
        for c in s - covered:
            chars.setdefault(c, set()).add(i)
    forced: set[int] = set()
    changed = True
    while changed and chars:
        changed = False
        for c, h in list(chars.items()):
            if c in chars and len(h) == 1:
                (i,) = h
                forced.add(i)
                for d in sets[i]:
                    chars.pop(d, None)
                live.discard(i)
                changed = True
        rest = {i: frozenset(c for c in sets[i] if c in chars) for i in live}
        for i in sorted(live, key=lambda i: (len(rest[i]), -i)):
            if not rest[i]:
                live.discard(i)
                changed = True
                continue
            rarest = min(rest[i], key=lambda c: (len(chars[c]), c))
            if any(j != i and j in live and rest[i] <= rest[j] for j in chars[rarest]):
                live.discard(i)
                for c in rest[i]:
                    chars[c].discard(i)
                changed = True
        for c in sorted(chars, key=lambda c: (-len(chars[c]), c)):
            h = chars[c]
            probe = min(h, key=lambda i: (len(rest.get(i, ())), i)) if h else None
            if probe is None:
                continue
            if any(d != c and d in chars and chars[d] <= h for d in rest.get(probe, ())):
                del chars[c]
                changed = True
    return forced


def _small_cover(per_record: Sequence[Counter]) -> list[int]:
    """Small set of records whose labels hold every character.

    Forced picks from :func:`_reduce_cover` alternate with greedy
    max-new-characters picks. Redundant picks are dropped, and any outside
    record that can replace two or more picks at once is swapped in.
    """
    sets = [frozenset(rc) for rc in per_record]
    universe = frozenset().union(*sets)
    chosen: set[int] = set()
    covered: frozenset = frozenset()
    while True:
        chosen |= _reduce_cover(sets, covered)
        covered = frozenset().union(*(sets[i] for i in chosen))
        uncovered = universe - covered
        if not uncovered:
            break
        best = max(range(len(sets)), key=lambda i: (len(sets[i] & uncovered), -i))
        chosen.add(best)
        covered |= sets[best]

    count = Counter(c for i in chosen for c in sets[i])
    for i in sorted(chosen, key=lambda i: (len(sets[i]), i)):
        if all(count[c] > 1 for c in sets[i]):
            chosen.discard(i)
            count.subtract(sets[i])

    improved = True
    while improved:
        improved = False
        # characters each chosen record covers alone
        unique = {i: frozenset(c for c in sets[i] if count[c] == 1) for i in chosen}
        for x in range(len(sets)):
            if x in chosen:
                continue
            candidates = [i for i in sorted(chosen) if unique[i] <= sets[x]]
            if len(candidates) < 2:
                continue
            trial = count + Counter(sets[x])
            dropped = []
            for i in candidates:
                # picks may share a character neither covers alone
                if all(trial[c] > 1 for c in sets[i]):
                    trial.subtract(sets[i])
                    dropped.append(i)
            if len(dropped) >= 2:
                chosen.difference_update(dropped)
                chosen.add(x)
                count = trial
                improved = True
                break
    return sorted(chosen)


# ---------------------------------------------------------------------------
# augmentation

OPS = ("original", "distort", "stretch", "perspective")


def variant_layout(
    n_scales: int = 7, n_distort: int = 24, n_stretch: int = 24, n_perspective: int = 6
) -> tuple[tuple[str, int], ...]:
    """``(op, scale_index)`` for every variant of one record; variant 0 is the original."""
    if min(n_scales, n_distort, n_stretch, n_perspective) < 0:
        raise ValueError("augmentation counts must be >= 0")
    layout = [("original", -1)]
    for s in range(n_scales):
        layout += [("distort", s)] * n_distort
        layout += [("stretch", s)] * n_stretch
        layout += [("perspective", s)] * n_perspective
    return tuple(layout)


@dataclass(frozen=True)
class AugmentedItem:
    record: int
    variant: int
    op: str
    scale: float
    label: str
    source: str


class AugmentedSet(Sequence):
    """Lazy view of every (record, variant) pair; pixels come from :meth:`render`."""

    def __init__(
        self,
        records: Sequence[tuple[str, str]],
        layout: Sequence[tuple[str, int]],
        scales: Sequence[float],
        seed: int = 0,
    ):
        self.records = list(records)
        self.layout = tuple(layout)
        self.scales = tuple(scales)
        self.seed = seed

    @property
    def per_record(self) -> int:
        return len(self.layout)

    def __len__(self) -> int:
        return len(self.records) * len(self.layout)

    def __getitem__(self, k):  # type: ignore[override]
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        r, v = divmod(k, self.per_record)
        op, s = self.layout[v]
        source, label = self.records[r]
        return AugmentedItem(r, v, op, 1.0 if s < 0 else self.scales[s], label, source)

    def render(self, item: AugmentedItem, image: np.ndarray) -> np.ndarray:
        rng = seeding.stream_rng(self.seed, seeding.STREAM_AUGMENT, item.record, item.variant)
        return augment_image(image, item.op, item.scale, rng)


def augment(
    records: Sequence[tuple[str, str]],
    n_scales: int = 7,
    n_distort: int = 24,
    n_stretch: int = 24,
    n_perspective: int = 6,
    scale_range: tuple[float, float] = (0.8, 1.2),
    seed: int = 0,
) -> AugmentedSet:
    """Expand ``(source, label)`` records into originals plus counted variants.

    Each record yields ``1 + (n_distort + n_stretch + n_perspective) * n_scales``
    items, and every item keeps its source label.
    """
    lo, hi = scale_range
    if n_scales == 1:
        scales = [(lo + hi) / 2]
    else:
        scales = [float(x) for x in np.linspace(lo, hi, n_scales)]
    return AugmentedSet(records, variant_layout(n_scales, n_distort, n_stretch, n_perspective), scales, seed)


def augment_image(image: np.ndarray, op: str, scale: float, rng: np.random.Generator) -> np.ndarray:
    if op == "original":
        return image.copy()
    h, w = image.shape[:2]
    if scale != 1.0:
        image = cv2.resize(image, (max(1, round(w * scale)), max(1, round(h * scale))), interpolation=cv2.INTER_LINEAR)
        h, w = image.shape[:2]
    if op == "distort":
        amp_y, amp_x = rng.uniform(0.02, 0.08) * h, rng.uniform(0.0, 0.03) * w
        fy, fx = rng.uniform(0.5, 2.0, size=2)
        py, px = rng.uniform(0, 2 * np.pi, size=2)
        xs = np.arange(w, dtype=np.float32)
        ys = np.arange(h, dtype=np.float32)
        # both displacement fields are 1-D; broadcast instead of building full grids
        dy = (amp_y * np.sin(2 * np.pi * fy * xs / w + py)).astype(np.float32)
        dx = (amp_x * np.sin(2 * np.pi * fx * ys / h + px)).astype(np.float32)
        map_y = ys[:, None] + dy[None, :]
        map_x = xs[None, :] + dx[:, None]
        return cv2.remap(image, map_x, map_y, cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE)
    if op == "stretch":
        factor = rng.uniform(0.7, 1.4)
        if rng.random() < 0.5:
            size = (max(1, round(w * factor)), h)
        else:
            size = (w, max(1, round(h * factor)))
        return cv2.resize(image, size, interpolation=cv2.INTER_LINEAR)
    if op == "perspective":
        jitter = rng.uniform(0, 0.1, size=(4, 2)) * (w, h)
        src = np.float32([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]])
        dst = (src + np.float32([[1, 1], [-1, 1], [-1, -1], [1, -1]]) * jitter).astype(np.float32)
        m = cv2.getPerspectiveTransform(src, dst)
        return cv2.warpPerspective(image, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE)
    raise ValueError(f"unknown augmentation op {op!r}")


# ---------------------------------------------------------------------------
# writing augmented datasets

_AUG: tuple[AugmentedSet, Path, Path] | None = None


def _init_aug(state: tuple[AugmentedSet, Path, Path]) -> None:
    global _AUG
    _AUG = state


def _load_gray(path: Path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise TcsynthError(f"cannot read image {path}")
    return img


def _augment_records(span: tuple[int, int]) -> list[tuple[str, str]]:
    assert _AUG is not None
    aug, src_root, out_root = _AUG
    rows = []
    per = aug.per_record
    for r in range(*span):
        source, label = aug.records[r]
        image = _load_gray(src_root / source)
        for v in range(per):
            item = aug[r * per + v]
            rel = f"images/{r // 1000:05d}/r{r:08d}_v{v:04d}.png"
            dest = out_root / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            ok, buf = cv2.imencode(".png", aug.render(item, image))
            if not ok:
                raise TcsynthError(f"PNG encoding failed for {rel}")
            tmp = dest.with_name(dest.name + ".tmp")
            tmp.write_bytes(buf.tobytes())
            os.replace(tmp, dest)
            rows.append((rel, label))
    return rows


def write_augmented(
    aug: AugmentedSet, source_root: str | Path, out_dir: str | Path, workers: int = 1, chunk: int = 8
) -> Iterator[tuple[str, str]]:
    """Render every item to ``out_dir/images`` and yield manifest rows in order."""
    out = Path(out_dir)
    state = (aug, Path(source_root), out)
    spans = [(a, min(a + chunk, len(aug.records))) for a in range(0, len(aug.records), chunk)]
    if workers == 1:
        _init_aug(state)
        for rows in map(_augment_records, spans):
            yield from rows
        return
    ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
    with ctx.Pool(workers, initializer=_init_aug, initargs=(state,)) as pool:
        for rows in pool.imap(_augment_records, spans):
            yield from rows


def count_rendered(aug: AugmentedSet, images: Callable[[int], np.ndarray]) -> int:
    """Render every item in memory and count the results."""
    n = 0
    per = aug.per_record
    for r in range(len(aug.records)):
        image = images(r)
        for v in range(per):
            out = aug.render(aug[r * per + v], image)
            if out.size:
                n += 1
    return n
