"""Generation config: a YAML file mapped onto frozen dataclasses.

Schema (every key optional unless noted; relative paths resolve against the
config file's directory)::

    seed: 0                       # 64-bit integer
    lexicon: [words.txt]          # required; one path or a list
    fonts: fonts/                 # required; directory of .ttf/.otf/.ttc
    default_font: SourceHanSans   # font id used when font diversity is ablated
    backgrounds:
      simple: bg/simple           # required when units.simple > 0
      wild: bg/wild               # required when units.wild > 0
      exclude: coco_text.txt      # stems of wild images to drop
    units: {simple: 1, wild: 0}   # n_s, n_w; at least one positive
    typography:
      size_pt: [20, 50]
      stroke_pt: [0, 3]
      max_gaps: 2
      max_spaces_per_gap: 3
      gap_prob: 0.25
    geometry:                     # engine defaults, not taken from any source
      skew_deg: [-7, 7]
      amplitude_px: [0, 3]
      frequency: [0.5, 2]
      p_identity: 0.3
    scene:
      margin_pt: [1, 4]
      blur_sigma: [0, 1.5]
      blur_prob: 0.5
    ablation:
      no_background_diversity: false
      no_font_diversity: false
      no_scene_diversity: false
      word_keep_fraction: 1
    output: {dir: out, shard_size: 1000}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .geometry import GeometryRanges


@dataclass(frozen=True)
class TypographyConfig:
    size_pt: tuple[int, int] = (20, 50)
    stroke_pt: tuple[int, int] = (0, 3)
    max_gaps: int = 2
    max_spaces_per_gap: int = 3
    gap_prob: float = 0.25
    # set by ablations only
    intensities: tuple[int, ...] | None = None
    font_ids: tuple[str, ...] | None = None


@dataclass(frozen=True)
class SceneConfig:
    margin_pt: tuple[int, int] = (1, 4)
    blur_sigma: tuple[float, float] = (0.0, 1.5)
    blur_prob: float = 0.5
    # set by ablations only: skip the pools and use a white background
    plain_white: bool = False


@dataclass(frozen=True)
class AblationConfig:
    no_background_diversity: bool = False
    no_font_diversity: bool = False
    no_scene_diversity: bool = False
    word_keep_fraction: float = 1.0

    @property
    def any(self) -> bool:
        return self != AblationConfig()


@dataclass(frozen=True)
class GenConfig:
    lexicon: tuple[Path, ...]
    fonts: Path
    output_dir: Path
    default_font: str | None = None
    simple_backgrounds: Path | None = None
    wild_backgrounds: Path | None = None
    exclusion_list: Path | None = None
    units_simple: int = 1
    units_wild: int = 0
    seed: int = 0
    shard_size: int = 1000
    typography: TypographyConfig = field(default_factory=TypographyConfig)
    geometry: GeometryRanges = field(default_factory=GeometryRanges)
    scene: SceneConfig = field(default_factory=SceneConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    def __post_init__(self) -> None:
        if self.units_simple < 0:
            raise ConfigError("units.simple must be >= 0")
        if self.units_wild < 0:
            raise ConfigError("units.wild must be >= 0")
        if self.units_simple + self.units_wild < 1:
            raise ConfigError("units.simple + units.wild must be >= 1")
        if self.shard_size < 1:
            raise ConfigError("output.shard_size must be >= 1")
        if not 0 < self.ablation.word_keep_fraction <= 1:
            raise ConfigError("ablation.word_keep_fraction must be in (0, 1]")
        if not self.lexicon:
            raise ConfigError("lexicon: at least one word file is required")
        lo, hi = self.typography.size_pt
        if not 1 <= lo <= hi:
            raise ConfigError("typography.size_pt must satisfy 1 <= min <= max")
        lo, hi = self.typography.stroke_pt
        if not 0 <= lo <= hi:
            raise ConfigError("typography.stroke_pt must satisfy 0 <= min <= max")
        lo, hi = self.scene.margin_pt
        if not 0 <= lo <= hi:
            raise ConfigError("scene.margin_pt must satisfy 0 <= min <= max")
        lo, hi = self.scene.blur_sigma
        if not 0 <= lo <= hi:
            raise ConfigError("scene.blur_sigma must satisfy 0 <= min <= max")
        for name, p in (("typography.gap_prob", self.typography.gap_prob), ("scene.blur_prob", self.scene.blur_prob)):
            if not 0 <= p <= 1:
                raise ConfigError(f"{name} must be in [0, 1]")

    def replace(self, **changes: Any) -> "GenConfig":
        return dataclasses.replace(self, **changes)


def apply_ablation(config: GenConfig) -> GenConfig:
    """Fold the ablation flags into the concrete settings they switch off.

    Word subsampling needs the loaded lexicon, so ``word_keep_fraction`` is
    carried through and applied when resources are built.
    """
    ab = config.ablation
    typo, scene, geom = config.typography, config.scene, config.geometry
    if ab.no_background_diversity:
        typo = dataclasses.replace(typo, intensities=(0,))
        scene = dataclasses.replace(scene, plain_white=True)
    if ab.no_font_diversity:
        if not config.default_font:
            raise ConfigError("ablation.no_font_diversity needs default_font")
        typo = dataclasses.replace(typo, font_ids=(config.default_font,), stroke_pt=(0, 0))
    if ab.no_scene_diversity:
        geom = GeometryRanges(skew_deg=(0.0, 0.0), amplitude_px=(0.0, 0.0), frequency=geom.frequency, p_identity=1.0)
        scene = dataclasses.replace(scene, blur_prob=0.0, blur_sigma=(0.0, 0.0))
    if (typo, scene, geom) == (config.typography, config.scene, config.geometry):
        return config
    return config.replace(typography=typo, scene=scene, geometry=geom)


# --------------------------------------------------------------------------
# YAML loading

_SCHEMA: dict[str, Any] = {
    "seed": int,
    "lexicon": "paths",
    "fonts": "path",
    "default_font": str,
    "backgrounds": {"simple": "path", "wild": "path", "exclude": "path"},
    "units": {"simple": int, "wild": int},
    "typography": {
        "size_pt": "int_range",
        "stroke_pt": "int_range",
        "max_gaps": int,
        "max_spaces_per_gap": int,
        "gap_prob": float,
    },
    "geometry": {"skew_deg": "range", "amplitude_px": "range", "frequency": "range", "p_identity": float},
    "scene": {"margin_pt": "int_range", "blur_sigma": "range", "blur_prob": float},
    "ablation": {
        "no_background_diversity": bool,
        "no_font_diversity": bool,
        "no_scene_diversity": bool,
        "word_keep_fraction": float,
    },
    "output": {"dir": "path", "shard_size": int},
}


def _key_lines(node: yaml.Node, prefix: str = "") -> dict[str, int]:
    lines: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}{k.value}"
            lines[key] = k.start_mark.line + 1
            lines.update(_key_lines(v, key + "."))
    return lines


class _Reader:
    def __init__(self, source: str, lines: dict[str, int], base: Path):
        self.source = source
        self.lines = lines
        self.base = base

    def fail(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        while line is None and "." in key:
            key = key.rsplit(".", 1)[0]
            line = self.lines.get(key)
        return ConfigError(message, self.source, line)

    def convert(self, key: str, value: Any, kind: Any) -> Any:
        if kind is bool:
            if not isinstance(value, bool):
                raise self.fail(key, f"{key}: expected true/false, got {value!r}")
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise self.fail(key, f"{key}: expected an integer, got {value!r}")
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self.fail(key, f"{key}: expected a number, got {value!r}")
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise self.fail(key, f"{key}: expected a string, got {value!r}")
            return value
        if kind == "path":
            if not isinstance(value, str) or not value:
                raise self.fail(key, f"{key}: expected a path, got {value!r}")
            return (self.base / value).resolve()
        if kind == "paths":
            items = [value] if isinstance(value, str) else value
            if not isinstance(items, list) or not items:
                raise self.fail(key, f"{key}: expected a path or a non-empty list of paths")
            return tuple(self.convert(key, v, "path") for v in items)
        if kind in ("range", "int_range"):
            elem = int if kind == "int_range" else float
            if not isinstance(value, list) or len(value) != 2:
                raise self.fail(key, f"{key}: expected [min, max], got {value!r}")
            lo, hi = (self.convert(key, v, elem) for v in value)
            if lo > hi:
                raise self.fail(key, f"{key}: min {lo} > max {hi}")
            return (lo, hi)
        raise AssertionError(kind)

    def section(self, data: Any, schema: dict, prefix: str = "") -> dict[str, Any]:
        if not isinstance(data, dict):
            raise self.fail(prefix.rstrip("."), f"{prefix.rstrip('.') or 'config'}: expected a mapping")
        out: dict[str, Any] = {}
        for k, v in data.items():
            key = f"{prefix}{k}"
            if k not in schema:
                raise self.fail(key, f"unknown key {key!r}")
            kind = schema[k]
            out[k] = self.section(v, kind, key + ".") if isinstance(kind, dict) else self.convert(key, v, kind)
        return out


def config_from_mapping(
    data: Any, base_dir: str | Path = ".", source: str = "<config>", lines: dict[str, int] | None = None
) -> GenConfig:
    r = _Reader(source, lines or {}, Path(base_dir).resolve())
    d = r.section(data, _SCHEMA)
    for required in ("lexicon", "fonts"):
        if required not in d:
            raise ConfigError(f"missing required key {required!r}", source)
    bg = d.get("backgrounds", {})
    units = d.get("units", {})
    out = d.get("output", {})
    try:
        typo = TypographyConfig(**d.get("typography", {}))
        scene = SceneConfig(**d.get("scene", {}))
        ablation = AblationConfig(**d.get("ablation", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), source) from e
    try:
        geometry = GeometryRanges(**d.get("geometry", {}))
    except ValueError as e:
        raise r.fail("geometry", f"geometry: {e}") from e
    seed = d.get("seed", 0)
    if not -(2**63) <= seed < 2**64:
        raise r.fail("seed", "seed must fit in 64 bits")
    try:
        return GenConfig(
            lexicon=d["lexicon"],
            fonts=d["fonts"],
            output_dir=out.get("dir", (Path(base_dir) / "out").resolve()),
            default_font=d.get("default_font"),
            simple_backgrounds=bg.get("simple"),
            wild_backgrounds=bg.get("wild"),
            exclusion_list=bg.get("exclude"),
            units_simple=units.get("simple", 1),
            units_wild=units.get("wild", 0),
            seed=seed,
            shard_size=out.get("shard_size", 1000),
            typography=typo,
            geometry=geometry,
            scene=scene,
            ablation=ablation,
        )
    except ConfigError as e:
        # GenConfig messages start with the dotted key they concern
        key = e.message.split(" ", 1)[0].rstrip(":")
        raise r.fail(key, e.message) from None


def load_config(path: str | Path) -> GenConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config: {e}", str(path)) from e
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigError(f"YAML syntax error: {e.problem}", str(path), line) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML error: {e}", str(path)) from e
    if data is None:
        raise ConfigError("config is empty", str(path))
    return config_from_mapping(data, path.parent, str(path), _key_lines(node) if node else {})


def config_to_mapping(config: GenConfig) -> dict[str, Any]:
    """Inverse of :func:`config_from_mapping` (paths stay absolute)."""
    t, g, s, a = config.typography, config.geometry, config.scene, config.ablation
    bg = {
        k: str(v)
        for k, v in (("simple", config.simple_backgrounds), ("wild", config.wild_backgrounds), ("exclude", config.exclusion_list))
        if v is not None
    }
    data: dict[str, Any] = {
        "seed": config.seed,
        "lexicon": [str(p) for p in config.lexicon],
        "fonts": str(config.fonts),
        "backgrounds": bg,
        "units": {"simple": config.units_simple, "wild": config.units_wild},
        "typography": {
            "size_pt": list(t.size_pt),
            "stroke_pt": list(t.stroke_pt),
            "max_gaps": t.max_gaps,
            "max_spaces_per_gap": t.max_spaces_per_gap,
            "gap_prob": t.gap_prob,
        },
        "geometry": {
            "skew_deg": list(g.skew_deg),
            "amplitude_px": list(g.amplitude_px),
            "frequency": list(g.frequency),
            "p_identity": g.p_identity,
        },
        "scene": {"margin_pt": list(s.margin_pt), "blur_sigma": list(s.blur_sigma), "blur_prob": s.blur_prob},
        "ablation": dataclasses.asdict(a),
        "output": {"dir": str(config.output_dir), "shard_size": config.shard_size},
    }
    if config.default_font is not None:
        data["default_font"] = config.default_font
    return data
