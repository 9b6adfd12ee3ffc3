"""Per-sample rendering and sharded dataset generation.

Sample ``i`` is a pure function of ``(config, i)``: its random stream is
derived from ``(seed, i)`` alone, so any worker count and any scheduling order
produce the same bytes.

Index layout: with ``L`` words and ``U = n_s + n_w`` units, sample ``i`` uses
word ``i mod L`` in unit ``u = i // L`` and gets background slot
``(i mod L + u) mod U``; slots below ``n_s`` are simple, the rest wild. Inside
one unit the kinds interleave with period ``U``, and across the ``U`` units
every word meets every slot exactly once, so each word is drawn ``n_s`` times
on simple and ``n_w`` times on wild backgrounds.
"""

from __future__ import annotations

import io
import json
import logging
import multiprocessing as mp
import os
import shutil
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from . import seeding
from .config import GenConfig, apply_ablation
from .errors import ResourceError
from .geometry import GeometryParams, apply_geometry, sample_geometry, trim_to_ink
from .lexicon import Lexicon, LexiconError, load_lexicon, subsample_words
from .scene import BackgroundPool, blur, build_pool, compose, sample_patch
from .typography import (
    FontRegistry,
    GrayPalette,
    choose_style,
    insert_spacing,
    load_font,
    rasterize,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.tsv"
METADATA_NAME = "metadata.jsonl"
REPORT_NAME = "report.txt"


@dataclass(frozen=True)
class MixPlan:
    n_s: int
    n_w: int
    unit_size: int

    def __post_init__(self) -> None:
        if self.n_s < 0 or self.n_w < 0:
            raise ValueError("unit counts must be >= 0")
        if self.n_s + self.n_w < 1:
            raise ValueError("at least one unit is required")
        if self.unit_size < 1:
            raise ValueError("unit_size must be >= 1")

    @property
    def units(self) -> int:
        return self.n_s + self.n_w

    @property
    def wild_ratio(self) -> Fraction:
        return Fraction(self.n_w, self.units)

    @property
    def total(self) -> int:
        return self.units * self.unit_size

    @property
    def simple_count(self) -> int:
        return self.n_s * self.unit_size

    @property
    def wild_count(self) -> int:
        return self.n_w * self.unit_size

    def word_index(self, index: int) -> int:
        return index % self.unit_size

    def kind(self, index: int) -> str:
        if not 0 <= index < self.total:
            raise IndexError(f"sample index {index} outside [0, {self.total})")
        slot = (index % self.unit_size + index // self.unit_size) % self.units
        return "simple" if slot < self.n_s else "wild"

    def describe(self) -> str:
        return (
            f"units: simple={self.n_s} wild={self.n_w}\n"
            f"unit size: {self.unit_size:,}\n"
            f"wild ratio: {float(self.wild_ratio) * 100:.2f}% ({self.wild_ratio})\n"
            f"simple samples: {self.simple_count:,}\n"
            f"wild samples: {self.wild_count:,}\n"
            f"total: {self.total:,}"
        )


def plan_mix(n_s: int, n_w: int, unit_size: int) -> MixPlan:
    return MixPlan(n_s, n_w, unit_size)


@dataclass
class Resources:
    config: GenConfig  # effective, ablations applied
    lexicon: Lexicon
    registry: FontRegistry
    pool: BackgroundPool | None
    plan: MixPlan
    palette: GrayPalette = field(default_factory=GrayPalette)
    # words some single font can render; substitution draws from these
    covered_words: tuple[str, ...] = ()
    rejected_words: tuple[tuple[str, str], ...] = ()


def build_resources(config: GenConfig) -> Resources:
    """Load and validate everything a run needs.

    Words with a character missing from every usable font are rejected here,
    before any rendering, so the dataset size is known up front.
    """
    eff = apply_ablation(config)
    registry = FontRegistry.from_dir(eff.fonts)
    if eff.typography.font_ids is not None:
        missing = [f for f in eff.typography.font_ids if f not in registry]
        if missing:
            raise ResourceError(f"default font {missing[0]!r} not found in {eff.fonts}")
        registry = registry.subset(eff.typography.font_ids)

    full = load_lexicon(eff.lexicon)
    kept, tags, rejected = [], [], []
    for i, w in enumerate(full.words):
        bad = registry.uncovered_chars(w)
        if bad:
            rejected.append((w, "".join(bad)))
        else:
            kept.append(w)
            tags.append(full.source_tags[i] if full.source_tags else "")
    if rejected:
        logger.warning("rejected %d words with characters no font can render", len(rejected))
    if not kept:
        raise LexiconError("no word in the lexicon can be rendered with the available fonts")
    lexicon = Lexicon.from_words(kept, tags)
    keep = eff.ablation.word_keep_fraction
    if keep < 1:
        lexicon = subsample_words(lexicon, keep, seeding.stream_rng(eff.seed, seeding.STREAM_LEXICON))
    covered = tuple(w for w in lexicon.words if registry.covering(w))
    if not covered:
        raise ResourceError("no word is fully covered by any single font")

    pool = None
    if not eff.scene.plain_white:
        pool = build_pool(
            eff.simple_backgrounds,
            eff.wild_backgrounds,
            eff.exclusion_list,
            require_simple=eff.units_simple > 0,
            require_wild=eff.units_wild > 0,
        )
    plan = plan_mix(eff.units_simple, eff.units_wild, len(lexicon))
    return Resources(eff, lexicon, registry, pool, plan, GrayPalette(), covered, tuple(rejected))


@dataclass(frozen=True)
class SampleRecord:
    index: int
    label: str
    image_path: str
    background_kind: str
    font_id: str
    size_pt: int
    intensity: int  # gray value, not palette index
    stroke_width_pt: int
    spacing_plan: tuple[tuple[int, int], ...]
    geometry: GeometryParams
    blur_sigma: float
    margins: tuple[int, int, int, int]  # left, right, top, bottom
    width: int
    height: int
    background_source: str | None = None
    background_offset: tuple[int, int] | None = None
    substituted_for: str | None = None

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "SampleRecord":
        d = json.loads(line)
        d["spacing_plan"] = tuple(tuple(g) for g in d["spacing_plan"])
        d["geometry"] = GeometryParams(**d["geometry"])
        d["margins"] = tuple(d["margins"])
        if d["background_offset"] is not None:
            d["background_offset"] = tuple(d["background_offset"])
        return cls(**d)


def image_relpath(index: int, shard_size: int) -> str:
    return f"images/shard-{index // shard_size:05d}/{index:08d}.png"


def render_sample(resources: Resources, index: int) -> tuple[SampleRecord, np.ndarray]:
    """Run all rendering steps for sample ``index``."""
    record, image, _ = render_layers(resources, index)
    return record, image


def render_layers(resources: Resources, index: int) -> tuple[SampleRecord, np.ndarray, np.ndarray]:
    """Like :func:`render_sample`, plus the text coverage mask placed on the output canvas."""
    cfg, plan = resources.config, resources.plan
    typo, scene = cfg.typography, cfg.scene
    kind = plan.kind(index)
    rng = seeding.sample_rng(cfg.seed, index)

    word = resources.lexicon.words[plan.word_index(index)]
    substituted = None
    if not resources.registry.covering(word):
        substituted = word
        word = resources.covered_words[int(rng.integers(len(resources.covered_words)))]
        logger.info("sample %d: %r has no single covering font, using %r", index, substituted, word)

    spacing = insert_spacing(word, rng, typo.max_gaps, typo.max_spaces_per_gap, typo.gap_prob)
    style = choose_style(
        resources.registry,
        resources.palette,
        word,
        rng,
        size_range=typo.size_pt,
        stroke_range=typo.stroke_pt,
        intensities=typo.intensities,
        spacing_plan=spacing,
    )
    fg, mask = rasterize(word, style, resources.registry, resources.palette)

    geom = sample_geometry(cfg.geometry, rng)
    if not geom.is_identity:
        fg, mask = trim_to_ink(*apply_geometry(fg, mask, geom))

    max_margin = scene.margin_pt[1]
    ph, pw = mask.shape[0] + 2 * max_margin, mask.shape[1] + 2 * max_margin
    source = offset = None
    if scene.plain_white:
        patch = np.full((ph, pw), 255, dtype=np.uint8)
    else:
        p = sample_patch(resources.pool, kind, pw, ph, rng)
        patch, source, offset = p.pixels, p.path.name, (p.x, p.y)
    image, margins = compose(fg, mask, patch, rng, scene.margin_pt)
    alpha = np.zeros_like(image)
    alpha[margins[2] : margins[2] + mask.shape[0], margins[0] : margins[0] + mask.shape[1]] = mask

    sigma = 0.0
    if scene.blur_prob > 0 and rng.random() < scene.blur_prob:
        lo, hi = scene.blur_sigma
        sigma = float(lo + (hi - lo) * rng.random())
        image = blur(image, sigma)

    record = SampleRecord(
        index=index,
        label=word,
        image_path=image_relpath(index, cfg.shard_size),
        background_kind=kind,
        font_id=style.font_id,
        size_pt=style.size_pt,
        intensity=resources.palette[style.intensity],
        stroke_width_pt=style.stroke_width_pt,
        spacing_plan=style.spacing_plan,
        geometry=geom,
        blur_sigma=sigma,
        margins=margins,
        width=image.shape[1],
        height=image.shape[0],
        background_source=source,
        background_offset=offset,
        substituted_for=substituted,
    )
    return record, image, alpha


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image, mode="L").save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# parallel generation

_WORKER: Resources | None = None


def _init_worker(resources: Resources | None, config: GenConfig | None) -> None:
    global _WORKER
    _WORKER = resources if resources is not None else build_resources(config)


def _render_chunk(task: tuple[int, int, str]) -> list[str]:
    start, stop, out_dir = task
    assert _WORKER is not None
    rows = []
    for i in range(start, stop):
        rec, img = render_sample(_WORKER, i)
        path = Path(out_dir) / rec.image_path
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_atomic(path, encode_png(img))
        rows.append(rec.to_json())
    return rows


def _chunks(total: int, shard_size: int, chunk: int) -> Iterator[tuple[int, int]]:
    for s0 in range(0, total, shard_size):
        s1 = min(s0 + shard_size, total)
        for c0 in range(s0, s1, chunk):
            yield c0, min(c0 + chunk, s1)


@dataclass
class RunReport:
    total: int = 0
    simple: int = 0
    wild: int = 0
    workers: int = 1
    elapsed_s: float = 0.0
    substitutions: list[tuple[int, str, str]] = field(default_factory=list)
    rejected_words: list[tuple[str, str]] = field(default_factory=list)
    excluded_backgrounds: int = 0

    @property
    def images_per_minute(self) -> float:
        return self.total / self.elapsed_s * 60 if self.elapsed_s > 0 else float("inf")

    def to_text(self) -> str:
        lines = [
            f"samples: {self.total}",
            f"simple: {self.simple}",
            f"wild: {self.wild}",
            f"workers: {self.workers}",
            f"elapsed_s: {self.elapsed_s:.3f}",
            f"images_per_minute: {self.images_per_minute:.1f}",
            f"rejected_words: {len(self.rejected_words)}",
            f"substitutions: {len(self.substitutions)}",
            f"excluded_backgrounds: {self.excluded_backgrounds}",
        ]
        lines += [f"  rejected {w}\tmissing {m}" for w, m in self.rejected_words[:100]]
        lines += [f"  substituted #{i} {a} -> {b}" for i, a, b in self.substitutions[:100]]
        return "\n".join(lines) + "\n"


@dataclass
class DatasetManifest:
    output_dir: Path
    plan: MixPlan
    records: list[SampleRecord]
    report: RunReport

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / MANIFEST_NAME

    @property
    def metadata_path(self) -> Path:
        return self.output_dir / METADATA_NAME

    def __len__(self) -> int:
        return len(self.records)


def resolve_workers(workers: int) -> int:
    if workers < 0:
        raise ValueError("workers must be >= 0")
    return workers or os.cpu_count() or 1


def generate_dataset(
    config: GenConfig,
    workers: int = 1,
    resources: Resources | None = None,
    chunk: int = 64,
) -> DatasetManifest:
    """Render every sample and write images, manifest, metadata and report.

    Workers render chunks of indices; rows are written strictly in index
    order. On failure, shard directories that did not complete are removed
    and no manifest is written.
    """
    workers = resolve_workers(workers)
    res = resources or build_resources(config)
    cfg, plan = res.config, res.plan
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(a, b, str(out_dir)) for a, b in _chunks(plan.total, cfg.shard_size, chunk)]
    n_shards = -(-plan.total // cfg.shard_size)
    shard_remaining = {s: min(cfg.shard_size, plan.total - s * cfg.shard_size) for s in range(n_shards)}

    report = RunReport(workers=workers, rejected_words=list(res.rejected_words))
    if res.pool is not None:
        report.excluded_backgrounds = len(res.pool.excluded_paths)
    records: list[SampleRecord] = []
    manifest_tmp = out_dir / (MANIFEST_NAME + ".tmp")
    meta_tmp = out_dir / (METADATA_NAME + ".tmp")
    t0 = time.perf_counter()
    pool = None
    try:
        if workers == 1:
            _init_worker(res, None)
            results: Iterator[list[str]] = map(_render_chunk, tasks)
        else:
            methods = mp.get_all_start_methods()
            if "fork" in methods:
                # children inherit the already-built resources
                ctx = mp.get_context("fork")
                pool = ctx.Pool(workers, initializer=_init_worker, initargs=(res, None))
            else:
                ctx = mp.get_context("spawn")
                pool = ctx.Pool(workers, initializer=_init_worker, initargs=(None, config))
            results = pool.imap(_render_chunk, tasks)
        with open(manifest_tmp, "w", encoding="utf-8", newline="\n") as mf, open(
            meta_tmp, "w", encoding="utf-8", newline="\n"
        ) as jf:
            for rows in results:
                for row in rows:
                    rec = SampleRecord.from_json(row)
                    records.append(rec)
                    mf.write(f"{rec.image_path}\t{rec.label}\n")
                    jf.write(row + "\n")
                    shard_remaining[rec.index // cfg.shard_size] -= 1
                    if rec.substituted_for is not None:
                        report.substitutions.append((rec.index, rec.substituted_for, rec.label))
        if pool is not None:
            pool.close()
            pool.join()
    except BaseException:
        if pool is not None:
            pool.terminate()
            pool.join()
        for s, left in shard_remaining.items():
            if left:
                shutil.rmtree(out_dir / "images" / f"shard-{s:05d}", ignore_errors=True)
        for p in (manifest_tmp, meta_tmp):
            p.unlink(missing_ok=True)
        raise
    os.replace(manifest_tmp, out_dir / MANIFEST_NAME)
    os.replace(meta_tmp, out_dir / METADATA_NAME)

    report.elapsed_s = time.perf_counter() - t0
    report.total = len(records)
    report.simple = sum(r.background_kind == "simple" for r in records)
    report.wild = report.total - report.simple
    (out_dir / REPORT_NAME).write_text(report.to_text(), encoding="utf-8")
    logger.info("wrote %d samples to %s (%.0f images/min)", report.total, out_dir, report.images_per_minute)
    return DatasetManifest(out_dir, plan, records, report)


def read_manifest(path: str | Path) -> list[tuple[str, str]]:
    """Rows of a ``path<TAB>label`` TSV file."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(parts)}")
            rows.append((parts[0], parts[1]))
    return rows


# ---------------------------------------------------------------------------
# contact sheet

CAPTION_HEIGHT = 24


def _caption_font(resources: Resources, label: str, size: int = 16):
    default = resources.config.default_font
    candidates = resources.registry.covering(label)
    if default and default in resources.registry and resources.registry[default] in candidates:
        entry = resources.registry[default]
    elif candidates:
        entry = candidates[0]
    else:
        return None
    return load_font(str(entry.path), entry.face_index, size)


def contact_sheet(
    resources: Resources, samples: Sequence[tuple[SampleRecord, np.ndarray]], columns: int = 4
) -> np.ndarray:
    """Tile samples on a white sheet, each with a caption band underneath."""
    if not samples:
        raise ValueError("nothing to tile")
    cols = min(columns, len(samples))
    rows = -(-len(samples) // cols)
    tile_w = max(img.shape[1] for _, img in samples)
    tile_h = max(img.shape[0] for _, img in samples) + CAPTION_HEIGHT
    sheet = Image.new("L", (cols * tile_w, rows * tile_h), 255)
    draw = ImageDraw.Draw(sheet)
    ascii_font = ImageFont.load_default(size=11)
    for n, (rec, img) in enumerate(samples):
        x, y = (n % cols) * tile_w, (n // cols) * tile_h
        sheet.paste(Image.fromarray(img, mode="L"), (x, y))
        cy = y + img.shape[0]
        tag = f"{rec.index} {rec.background_kind[0]}"
        draw.text((x + 2, cy + 6), tag, fill=0, font=ascii_font)
        font = _caption_font(resources, rec.label)
        if font is not None:
            tx = x + 4 + int(draw.textlength(tag, font=ascii_font))
            draw.text((tx, cy + 3), rec.label, fill=0, font=font)
    return np.asarray(sheet, dtype=np.uint8)


def render_preview(resources: Resources, count: int, columns: int = 4) -> tuple[np.ndarray, list[SampleRecord]]:
    if count <= 0:
        raise ValueError("count must be positive")
    count = min(count, resources.plan.total)
    samples = [render_sample(resources, i) for i in range(count)]
    return contact_sheet(resources, samples, columns), [r for r, _ in samples]
