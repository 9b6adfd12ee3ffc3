"""Text styling and glyph rasterization.

Sizes and stroke widths are in points, rendered at 1 pt = 1 px. Glyphs are
laid out one codepoint at a time (no shaping), which is what CJK text needs.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from fontTools.ttLib import TTCollection, TTFont
from PIL import Image, ImageDraw, ImageFont

from .errors import ResourceError

logger = logging.getLogger(__name__)

FONT_SUFFIXES = (".ttf", ".otf", ".ttc", ".otc")
CACHE_ENV = "TCSYNTH_CACHE_DIR"

PALETTE_LEVELS = (0x00, 0x14, 0x28, 0x3C, 0x50, 0x64, 0x78, 0x8C, 0xA0, 0xB4, 0xC8, 0xDC, 0xF0, 0xFF)


class NoCoveringFont(ResourceError):
    def __init__(self, word: str, missing: Sequence[str]):
        self.word = word
        self.missing = tuple(missing)
        super().__init__(f"no single font covers {word!r}; missing: {''.join(self.missing)}")


class RasterizeError(ResourceError):
    pass


@dataclass(frozen=True)
class GrayPalette:
    levels: tuple[int, ...] = PALETTE_LEVELS

    def __post_init__(self) -> None:
        if len(self.levels) != 14:
            raise ValueError("palette must have 14 levels")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("palette levels must be strictly increasing")
        if not all(0 <= v <= 255 for v in self.levels):
            raise ValueError("palette levels must be 8-bit")

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, i: int) -> int:
        return self.levels[i]


@dataclass(frozen=True)
class FontEntry:
    font_id: str
    path: Path
    family: str
    coverage: np.ndarray = field(repr=False, compare=False)  # sorted uint32 codepoints
    face_index: int = 0
    # advance of U+3000 as a fraction of the em, None when the font lacks it
    ideo_space_em: float | None = None

    def covers(self, ch: str) -> bool:
        cp = ord(ch)
        i = np.searchsorted(self.coverage, cp)
        return bool(i < len(self.coverage) and self.coverage[i] == cp)


def _cache_dir() -> Path | None:
    env = os.environ.get(CACHE_ENV)
    if env == "":
        return None
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "tcsynth"


def _scan_faces(path: Path) -> list[dict]:
    """Parse every face in a font file; result is JSON-serializable."""
    if path.suffix.lower() in (".ttc", ".otc"):
        fonts = list(TTCollection(str(path), lazy=True).fonts)
    else:
        fonts = [TTFont(str(path), lazy=True)]
    faces = []
    for i, f in enumerate(fonts):
        cmap = f.getBestCmap() or {}
        upm = f["head"].unitsPerEm
        ideo = None
        if 0x3000 in cmap:
            ideo = f["hmtx"][cmap[0x3000]][0] / upm
        family = f["name"].getBestFamilyName() or path.stem
        faces.append({"index": i, "family": family, "ideo": ideo, "cps": sorted(cmap)})
        f.close()
    return faces


def _scan_cached(path: Path) -> list[dict]:
    cache = _cache_dir()
    if cache is None:
        return _scan_faces(path)
    st = path.stat()
    key = hashlib.sha1(f"{path.resolve()}|{st.st_size}|{st.st_mtime_ns}".encode()).hexdigest()
    entry = cache / "fonts" / f"{key}.json"
    try:
        return json.loads(entry.read_text())
    except (OSError, ValueError):
        pass
    faces = _scan_faces(path)
    try:
        entry.parent.mkdir(parents=True, exist_ok=True)
        tmp = entry.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(json.dumps(faces))
        os.replace(tmp, entry)
    except OSError as e:
        logger.debug("font cache not written: %s", e)
    return faces


class FontRegistry:
    """Immutable set of fonts with per-character coverage lookup."""

    def __init__(self, fonts: Sequence[FontEntry]):
        if not fonts:
            raise ResourceError("font registry is empty")
        ids = [f.font_id for f in fonts]
        if len(set(ids)) != len(ids):
            raise ResourceError("duplicate font ids")
        self.fonts: tuple[FontEntry, ...] = tuple(fonts)
        self._by_id = {f.font_id: f for f in self.fonts}
        self._masks: dict[str, int] = {}

    @classmethod
    def from_dir(cls, font_dir: str | Path) -> "FontRegistry":
        root = Path(font_dir)
        if not root.is_dir():
            raise ResourceError(f"font directory not found: {root}")
        entries = []
        for path in sorted(p for p in root.rglob("*") if p.suffix.lower() in FONT_SUFFIXES):
            try:
                faces = _scan_cached(path)
            except Exception as e:  # fontTools raises a zoo of types on corrupt files
                raise ResourceError(f"cannot parse font {path}: {e}") from e
            stem = path.relative_to(root).with_suffix("").as_posix()
            for face in faces:
                if not face["cps"]:
                    raise ResourceError(f"font {path} has an empty character map")
                font_id = stem if len(faces) == 1 else f"{stem}#{face['index']}"
                entries.append(
                    FontEntry(
                        font_id=font_id,
                        path=path,
                        family=face["family"],
                        coverage=np.asarray(face["cps"], dtype=np.uint32),
                        face_index=face["index"],
                        ideo_space_em=face["ideo"],
                    )
                )
        if not entries:
            raise ResourceError(f"no fonts found in {root}")
        return cls(entries)

    def __len__(self) -> int:
        return len(self.fonts)

    def __getitem__(self, font_id: str) -> FontEntry:
        try:
            return self._by_id[font_id]
        except KeyError:
            raise ResourceError(f"unknown font id {font_id!r}") from None

    def __contains__(self, font_id: object) -> bool:
        return font_id in self._by_id

    def subset(self, font_ids: Sequence[str]) -> "FontRegistry":
        return FontRegistry([self[i] for i in font_ids])

    def char_mask(self, ch: str) -> int:
        """Bit i is set when font i has a glyph for ``ch``."""
        m = self._masks.get(ch)
        if m is None:
            m = 0
            for i, f in enumerate(self.fonts):
                if f.covers(ch):
                    m |= 1 << i
            self._masks[ch] = m
        return m

    def covering(self, word: str) -> list[FontEntry]:
        m = (1 << len(self.fonts)) - 1
        for ch in set(word):
            m &= self.char_mask(ch)
        return [f for i, f in enumerate(self.fonts) if m >> i & 1]

    def uncovered_chars(self, word: str) -> list[str]:
        """Characters of ``word`` with no glyph in any font."""
        return sorted({ch for ch in word if not self.char_mask(ch)})


@dataclass(frozen=True)
class TextStyle:
    font_id: str
    size_pt: int
    intensity: int  # palette index
    stroke_width_pt: int = 0
    spacing_plan: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not 1 <= self.size_pt:
            raise ValueError(f"size_pt must be positive, got {self.size_pt}")
        if not 0 <= self.intensity < 14:
            raise ValueError(f"intensity index out of range: {self.intensity}")
        if self.stroke_width_pt < 0:
            raise ValueError("stroke_width_pt must be >= 0")
        positions = [p for p, _ in self.spacing_plan]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError("spacing gap positions must be strictly increasing")
        if any(n < 1 for _, n in self.spacing_plan):
            raise ValueError("each gap needs at least one space")


def insert_spacing(
    word: str,
    rng: np.random.Generator,
    max_gaps: int = 2,
    max_spaces_per_gap: int = 3,
    gap_prob: float = 0.25,
) -> tuple[tuple[int, int], ...]:
    """Pick up to ``max_gaps`` interior gaps, each kept with ``gap_prob``.

    A gap at position ``p`` sits between ``word[p-1]`` and ``word[p]``.
    """
    n_gaps = len(word) - 1
    if n_gaps <= 0 or max_gaps <= 0 or max_spaces_per_gap <= 0:
        return ()
    candidates = rng.permutation(np.arange(1, len(word)))[:max_gaps]
    keep = rng.random(len(candidates)) < gap_prob
    counts = rng.integers(1, max_spaces_per_gap + 1, size=len(candidates))
    return tuple(sorted((int(p), int(c)) for p, c, k in zip(candidates, counts, keep) if k))


def apply_spacing(word: str, plan: Sequence[tuple[int, int]]) -> str:
    out = []
    gaps = dict(plan)
    for i, ch in enumerate(word):
        if i in gaps:
            out.append(" " * gaps[i])
        out.append(ch)
    return "".join(out)


def choose_style(
    registry: FontRegistry,
    palette: GrayPalette,
    word: str,
    rng: np.random.Generator,
    size_range: tuple[int, int] = (20, 50),
    stroke_range: tuple[int, int] = (0, 3),
    intensities: Sequence[int] | None = None,
    spacing_plan: Sequence[tuple[int, int]] = (),
) -> TextStyle:
    """Draw a style uniformly: font among covering fonts, then size, intensity, stroke."""
    fonts = registry.covering(word)
    if not fonts:
        missing = [ch for ch in dict.fromkeys(word) if not registry.char_mask(ch)]
        if not missing:
            # every character exists somewhere, just not in a single font
            missing = sorted(set(word))
        raise NoCoveringFont(word, missing)
    font = fonts[int(rng.integers(len(fonts)))]
    size = int(rng.integers(size_range[0], size_range[1] + 1))
    if intensities is None:
        intensity = int(rng.integers(len(palette)))
    else:
        intensity = int(intensities[int(rng.integers(len(intensities)))])
    stroke = int(rng.integers(stroke_range[0], stroke_range[1] + 1))
    return TextStyle(font.font_id, size, intensity, stroke, tuple(spacing_plan))


@functools.lru_cache(maxsize=512)
def load_font(path: str, face_index: int, size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(path, size, index=face_index, layout_engine=ImageFont.Layout.BASIC)


def rasterize(
    word: str,
    style: TextStyle,
    registry: FontRegistry,
    palette: GrayPalette = GrayPalette(),
) -> tuple[np.ndarray, np.ndarray]:
    """Render ``word`` in ``style``; returns ``(foreground, mask)`` uint8 arrays.

    The foreground is flat at the palette intensity, the mask holds glyph plus
    stroke coverage, and both are cropped tightly to the mask's nonzero pixels.
    """
    entry = registry[style.font_id]
    try:
        font = load_font(str(entry.path), entry.face_index, style.size_pt)
    except OSError as e:
        raise RasterizeError(f"cannot load font {entry.path}: {e}") from e
    sw = style.stroke_width_pt
    if entry.ideo_space_em is not None:
        space_adv = entry.ideo_space_em * style.size_pt
    else:
        space_adv = float(style.size_pt)

    gaps = dict(style.spacing_plan)
    xs = []
    x = 0.0
    for i, ch in enumerate(word):
        x += gaps.get(i, 0) * space_adv
        xs.append(round(x))
        x += font.getlength(ch)
    ascent, descent = font.getmetrics()
    pad = style.size_pt // 2 + sw + 2
    width = math.ceil(x) + 2 * pad
    height = ascent + descent + 2 * pad

    canvas = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(canvas)
    baseline = pad + ascent
    try:
        for ch, cx in zip(word, xs):
            draw.text((pad + cx, baseline), ch, fill=255, font=font, anchor="ls", stroke_width=sw, stroke_fill=255)
    except (OSError, ValueError) as e:
        raise RasterizeError(f"glyph rendering failed for {word!r} in {style.font_id}: {e}") from e
    bbox = canvas.getbbox()
    if bbox is None:
        raise RasterizeError(f"no ink rendered for {word!r} in {style.font_id}")
    mask = np.asarray(canvas.crop(bbox), dtype=np.uint8).copy()
    fg = np.full(mask.shape, palette[style.intensity], dtype=np.uint8)
    return fg, mask
