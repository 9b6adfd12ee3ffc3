"""Input normalization for recognizers and exact-match word accuracy."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import cv2
import numpy as np

TARGET_HEIGHT = 32
TARGET_WIDTH = 100


def to_gray(image: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma, integer-rounded. Alpha, if present, is ignored."""
    image = np.asarray(image)
    if image.ndim == 2:
        return image.astype(np.uint8, copy=False)
    if image.ndim == 3 and image.shape[2] == 1:
        return image[..., 0].astype(np.uint8, copy=False)
    if image.ndim == 3 and image.shape[2] in (3, 4):
        rgb = image[..., :3].astype(np.uint32)
        y = (rgb[..., 0] * 299 + rgb[..., 1] * 587 + rgb[..., 2] * 114 + 500) // 1000
        return y.astype(np.uint8)
    raise ValueError(f"unsupported image shape {image.shape}")


def preprocess(image: np.ndarray) -> np.ndarray:
    """Grayscale, then bilinear resize to 32x100 ignoring aspect ratio.

    RGB input is taken in R, G, B channel order.
    """
    image = np.asarray(image)
    if image.ndim < 2 or image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError(f"cannot preprocess an empty image of shape {image.shape}")
    gray = to_gray(image)
    if gray.shape == (TARGET_HEIGHT, TARGET_WIDTH):
        return gray.copy()
    return cv2.resize(gray, (TARGET_WIDTH, TARGET_HEIGHT), interpolation=cv2.INTER_LINEAR)


def _as_dict(pairs: Iterable[tuple[str, str]], what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for key, text in pairs:
        if key in out:
            raise ValueError(f"duplicate id in {what}: {key!r}")
        out[key] = text
    return out


def word_accuracy(predictions: Iterable[tuple[str, str]], references: Iterable[tuple[str, str]]) -> Fraction:
    """Share of ids whose predicted string equals the reference exactly.

    Strings are compared codepoint by codepoint with no Unicode normalization;
    callers that want NFC/NFKC equivalence must normalize first.
    """
    pred = _as_dict(predictions, "predictions")
    ref = _as_dict(references, "references")
    missing = sorted(set(pred) - set(ref))
    if missing:
        raise ValueError(f"{len(missing)} predictions have no reference, e.g. {missing[0]!r}")
    if len(pred) != len(ref):
        unpredicted = sorted(set(ref) - set(pred))
        raise ValueError(f"{len(unpredicted)} references have no prediction, e.g. {unpredicted[0]!r}")
    if not ref:
        raise ValueError("no references")
    hits = sum(pred[k] == ref[k] for k in ref)
    return Fraction(hits, len(ref))


def mismatches(predictions: Iterable[tuple[str, str]], references: Iterable[tuple[str, str]]) -> list[tuple[str, str, str]]:
    """``(id, predicted, reference)`` for every wrong id, sorted by id."""
    pred = dict(predictions)
    ref = dict(references)
    return [(k, pred[k], ref[k]) for k in sorted(ref) if k in pred and pred[k] != ref[k]]


def read_pairs(path: str) -> list[tuple[str, str]]:
    """``id<TAB>text`` rows; the text may be empty."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            key, sep, text = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected id<TAB>text")
            rows.append((key, text))
    return rows
