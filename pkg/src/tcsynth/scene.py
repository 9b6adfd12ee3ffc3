"""Backgrounds, compositing and blur. Everything here is single-channel gray."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ResourceError

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp", ".tif", ".tiff")

Kind = Literal["simple", "wild"]


@dataclass(frozen=True)
class BackgroundPool:
    simple: tuple[Path, ...] = ()
    wild: tuple[Path, ...] = ()
    excluded: frozenset[str] = frozenset()
    # wild images dropped because their stem was on the exclusion list
    excluded_paths: tuple[Path, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        both = set(self.simple) & set(self.wild)
        if both:
            raise ResourceError(f"{len(both)} images listed as both simple and wild, e.g. {sorted(both)[0]}")
        bad = [p for p in self.wild if p.stem.lower() in self.excluded]
        if bad:
            raise ResourceError(f"excluded image in wild pool: {bad[0]}")

    def images(self, kind: Kind) -> tuple[Path, ...]:
        if kind == "simple":
            return self.simple
        if kind == "wild":
            return self.wild
        raise ValueError(f"unknown background kind {kind!r}")

    def stats(self) -> dict[str, int]:
        return {
            "simple": len(self.simple),
            "wild": len(self.wild),
            "excluded": len(self.excluded_paths),
            "exclusion_list": len(self.excluded),
        }


def list_images(root: str | Path | None) -> list[Path]:
    if root is None:
        return []
    root = Path(root)
    if not root.is_dir():
        raise ResourceError(f"background directory not found: {root}")
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def read_exclusion_list(path: str | Path | None) -> frozenset[str]:
    """Stems to exclude, lowercased. Blank lines and ``#`` comments are ignored."""
    if path is None:
        return frozenset()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ResourceError(f"cannot read exclusion list {path}: {e}") from e
    stems = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            # accept full file names as well as bare ids
            stems.add(Path(line).stem.lower() if Path(line).suffix.lower() in IMAGE_SUFFIXES else line.lower())
    return frozenset(stems)


def build_pool(
    simple_dir: str | Path | None = None,
    wild_dir: str | Path | None = None,
    exclusion_list_path: str | Path | None = None,
    require_simple: bool = False,
    require_wild: bool = False,
) -> BackgroundPool:
    simple = list_images(simple_dir)
    wild = list_images(wild_dir)
    excluded = read_exclusion_list(exclusion_list_path)
    keep = [p for p in wild if p.stem.lower() not in excluded]
    dropped = [p for p in wild if p.stem.lower() in excluded]
    if dropped:
        logger.info("excluded %d of %d wild backgrounds", len(dropped), len(wild))
    if require_simple and not simple:
        raise ResourceError(f"no simple backgrounds found in {simple_dir}")
    if require_wild and not keep:
        raise ResourceError(f"no wild backgrounds left in {wild_dir} after exclusion")
    return BackgroundPool(tuple(simple), tuple(keep), excluded, tuple(dropped))


@functools.lru_cache(maxsize=256)
def _load_gray(path: str) -> np.ndarray:
    with Image.open(path) as im:
        im.load()
        # PIL's L conversion uses the ITU-R 601-2 luma weights
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    if arr.size == 0:
        raise ValueError("empty image")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Patch:
    pixels: np.ndarray
    path: Path
    x: int
    y: int


def sample_patch(
    pool: BackgroundPool,
    kind: Kind,
    target_w: int,
    target_h: int,
    rng: np.random.Generator,
    max_attempts: int = 16,
) -> Patch:
    """Random ``target_w`` x ``target_h`` crop from a random image of ``kind``.

    Images smaller than the target are upscaled (aspect kept) to cover it.
    Unreadable images are logged and another draw is made from the same rng.
    """
    if target_w <= 0 or target_h <= 0:
        raise ValueError("target dimensions must be positive")
    paths = pool.images(kind)
    if not paths:
        raise ResourceError(f"no {kind} backgrounds available")
    for _ in range(max_attempts):
        path = paths[int(rng.integers(len(paths)))]
        try:
            img = _load_gray(str(path))
        except (OSError, ValueError, UnidentifiedImageError) as e:
            logger.warning("skipping unreadable background %s: %s", path, e)
            continue
        h, w = img.shape
        if w < target_w or h < target_h:
            scale = max(target_w / w, target_h / h)
            new_w, new_h = max(target_w, math.ceil(w * scale)), max(target_h, math.ceil(h * scale))
            img = cv2.resize(img, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
            h, w = img.shape
        x = int(rng.integers(w - target_w + 1))
        y = int(rng.integers(h - target_h + 1))
        return Patch(img[y : y + target_h, x : x + target_w].copy(), path, x, y)
    raise ResourceError(f"no readable {kind} background after {max_attempts} attempts")


def compose(
    foreground: np.ndarray,
    mask: np.ndarray,
    patch: np.ndarray,
    rng: np.random.Generator,
    margin_range: tuple[int, int] = (1, 4),
) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    """Alpha-blend the text onto the patch with random per-side margins.

    Returns the image and its ``(left, right, top, bottom)`` margins.
    """
    lo, hi = margin_range
    fh, fw = mask.shape
    if patch.shape[0] < fh + 2 * hi or patch.shape[1] < fw + 2 * hi:
        raise ValueError(f"patch {patch.shape} too small for foreground {mask.shape} with margin {hi}")
    left, right, top, bottom = (int(v) for v in rng.integers(lo, hi + 1, size=4))
    out = patch[: top + fh + bottom, : left + fw + right].copy()
    region = out[top : top + fh, left : left + fw].astype(np.uint32)
    a = mask.astype(np.uint32)
    blended = (foreground.astype(np.uint32) * a + region * (255 - a) + 127) // 255
    out[top : top + fh, left : left + fw] = blended.astype(np.uint8)
    return out, (left, right, top, bottom)


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    """Normalized 1-D Gaussian sampled at integer offsets."""
    radius = max(1, math.ceil(truncate * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflected borders; ``sigma == 0`` is a copy."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return image.copy()
    k = gaussian_kernel(sigma)
    out = cv2.sepFilter2D(image.astype(np.float64), cv2.CV_64F, k, k, borderType=cv2.BORDER_REFLECT)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
