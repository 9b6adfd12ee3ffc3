"""Small bundled inputs for tests and demos.

The fonts and word list ship with the package (see tools/make_fixtures.py).
Background images are synthesized on demand so nothing large is committed:
"simple" ones are smooth gradients and stripes, "wild" ones are cluttered
noise fields with blobs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

DATA_DIR = Path(__file__).parent / "data"
FONT_DIR = DATA_DIR / "fonts"
WORDS_1000 = DATA_DIR / "words_1000.txt"
DEFAULT_FONT = "FixtureSans"


def _simple_background(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    a, b = rng.uniform(-1, 1, size=2)
    base = rng.uniform(80, 220)
    img = base + 40 * (a * x / w + b * y / h)
    if rng.random() < 0.5:
        period = rng.uniform(8, 40)
        img += 12 * np.sin(2 * np.pi * (x + y * rng.uniform(-1, 1)) / period)
    return np.clip(img, 0, 255).astype(np.uint8)


def _wild_background(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    img = rng.normal(128, 40, size=(h, w))
    y, x = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(5, 15))):
        cx, cy, r = rng.uniform(0, w), rng.uniform(0, h), rng.uniform(5, max(w, h) / 3)
        img[(x - cx) ** 2 + (y - cy) ** 2 < r * r] += rng.uniform(-80, 80)
    return np.clip(img, 0, 255).astype(np.uint8)


def write_backgrounds(
    root: str | Path,
    n_simple: int = 6,
    n_wild: int = 8,
    size: tuple[int, int] = (320, 240),
    seed: int = 0,
) -> tuple[Path, Path]:
    """Create ``root/simple`` and ``root/wild`` image folders; returns both paths.

    Wild images are named like COCO files (``COCO_train2014_%012d.jpg``) so
    exclusion lists can be exercised. Sizes vary a little around ``size`` and
    one simple image is deliberately smaller than typical patch requests.
    """
    root = Path(root)
    simple, wild = root / "simple", root / "wild"
    simple.mkdir(parents=True, exist_ok=True)
    wild.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    w0, h0 = size
    for i in range(n_simple):
        w, h = (48, 24) if i == 0 else (w0 + 16 * i, h0 - 8 * i)
        Image.fromarray(_simple_background(rng, w, h)).convert("RGB").save(simple / f"texture_{i:03d}.png")
    for i in range(n_wild):
        w, h = w0 + 8 * i, h0 + 4 * i
        rgb = np.dstack([_wild_background(rng, w, h) for _ in range(3)])
        Image.fromarray(rgb).save(wild / f"COCO_train2014_{i + 1:012d}.jpg", quality=90)
    return simple, wild


def write_config(
    path: str | Path,
    backgrounds: str | Path,
    units: tuple[int, int] = (1, 0),
    seed: int = 0,
    output_dir: str | Path = "out",
    words: str | Path = WORDS_1000,
    exclude: str | Path | None = None,
    extra: dict | None = None,
) -> Path:
    """Write a YAML config pointing at the bundled fonts and ``backgrounds``."""
    import yaml

    bg = Path(backgrounds)
    data: dict = {
        "seed": seed,
        "lexicon": [str(words)],
        "fonts": str(FONT_DIR),
        "default_font": DEFAULT_FONT,
        "backgrounds": {"simple": str(bg / "simple"), "wild": str(bg / "wild")},
        "units": {"simple": units[0], "wild": units[1]},
        "output": {"dir": str(output_dir), "shard_size": 1000},
    }
    if exclude is not None:
        data["backgrounds"]["exclude"] = str(exclude)
    for section, values in (extra or {}).items():
        if isinstance(values, dict):
            data.setdefault(section, {}).update(values)
        else:
            data[section] = values
    path = Path(path)
    path.write_text(yaml.safe_dump(data, allow_unicode=True, sort_keys=False), encoding="utf-8")
    return path
