import dataclasses
from pathlib import Path

import pytest

from tcsynth import fixtures as fx
from tcsynth.config import (
    AblationConfig,
    GenConfig,
    apply_ablation,
    config_from_mapping,
    config_to_mapping,
    load_config,
)
from tcsynth.errors import ConfigError
from tcsynth.geometry import GeometryRanges

BASE = """\
seed: 3
lexicon: words.txt
fonts: fonts
units:
  simple: 2
  wild: 1
"""


def _write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_relative_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "cfg"
    sub.mkdir()
    cfg = load_config(_write(sub, BASE + "output:\n  dir: ../out\n"))
    assert cfg.lexicon == ((sub / "words.txt").resolve(),)
    assert cfg.fonts == (sub / "fonts").resolve()
    assert cfg.output_dir == (tmp_path / "out").resolve()
    assert (cfg.units_simple, cfg.units_wild, cfg.seed) == (2, 1, 3)


def test_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, "lexicon: [a.txt, b.txt]\nfonts: f\n"))
    assert len(cfg.lexicon) == 2
    assert cfg.units_simple == 1 and cfg.units_wild == 0
    assert cfg.typography.size_pt == (20, 50)
    assert cfg.typography.stroke_pt == (0, 3)
    assert cfg.typography.max_gaps == 2 and cfg.typography.max_spaces_per_gap == 3
    assert cfg.typography.gap_prob == 0.25
    assert cfg.geometry == GeometryRanges()
    assert cfg.scene.margin_pt == (1, 4)
    assert cfg.ablation == AblationConfig()
    assert cfg.shard_size == 1000


@pytest.mark.parametrize(
    "extra, line, fragment",
    [
        ("  simple: -1\n", 5, "units.simple"),
        ("bogus: 1\n", 8, "unknown key 'bogus'"),
        ("typography:\n  size_pt: [50, 20]\n", 9, "typography.size_pt"),
        ("typography:\n  gap_prob: high\n", 9, "typography.gap_prob"),
        ("scene:\n  blur_prob: 2.0\n", 9, "scene.blur_prob"),
        ("ablation:\n  word_keep_fraction: 0\n", 9, "ablation.word_keep_fraction"),
        ("output:\n  shard_size: 0\n", 9, "output.shard_size"),
        ("geometry:\n  p_identity: 3\n", 8, "geometry"),
    ],
)
def test_errors_are_line_anchored(tmp_path, extra, line, fragment):
    if extra.startswith("  simple"):
        text = BASE.replace("  simple: 2\n", extra)
    else:
        text = BASE + "\n" + extra
    with pytest.raises(ConfigError) as ei:
        load_config(_write(tmp_path, text))
    msg = str(ei.value)
    assert f"c.yaml:{line}:" in msg
    assert fragment in msg


def test_yaml_syntax_error_has_line(tmp_path):
    with pytest.raises(ConfigError, match=r"c\.yaml:2: YAML syntax error"):
        load_config(_write(tmp_path, "lexicon: a\n  fonts: b\nunits: 1\n"))


def test_missing_required_and_empty(tmp_path):
    with pytest.raises(ConfigError, match="fonts"):
        load_config(_write(tmp_path, "lexicon: a\n"))
    with pytest.raises(ConfigError, match="empty"):
        load_config(_write(tmp_path, "\n"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_zero_units_rejected(tmp_path):
    with pytest.raises(ConfigError, match="units"):
        load_config(_write(tmp_path, "lexicon: a\nfonts: b\nunits: {simple: 0, wild: 0}\n"))


def test_mapping_round_trip(backgrounds, tmp_path):
    path = fx.write_config(tmp_path / "c.yaml", backgrounds, units=(3, 1), seed=99,
                           extra={"ablation": {"word_keep_fraction": 0.5}, "scene": {"blur_prob": 0.1}})
    cfg = load_config(path)
    again = config_from_mapping(config_to_mapping(cfg), tmp_path)
    assert again == cfg


def test_ablation_identity_when_no_flags(make_config):
    cfg = make_config()
    assert apply_ablation(cfg) is cfg


def test_ablation_effects(make_config):
    cfg = make_config(ablation={"no_background_diversity": True, "no_font_diversity": True, "no_scene_diversity": True})
    eff = apply_ablation(cfg)
    assert eff.typography.intensities == (0,)
    assert eff.scene.plain_white
    assert eff.typography.font_ids == (fx.DEFAULT_FONT,)
    assert eff.typography.stroke_pt == (0, 0)
    assert eff.geometry.p_identity == 1.0
    assert eff.scene.blur_prob == 0.0


def test_no_font_diversity_needs_default(make_config):
    cfg = make_config(ablation={"no_font_diversity": True})
    with pytest.raises(ConfigError, match="default_font"):
        apply_ablation(dataclasses.replace(cfg, default_font=None))


def test_genconfig_validation():
    with pytest.raises(ConfigError):
        GenConfig(lexicon=(Path("a"),), fonts=Path("f"), output_dir=Path("o"), units_simple=0, units_wild=0)
    with pytest.raises(ConfigError):
        GenConfig(lexicon=(), fonts=Path("f"), output_dir=Path("o"))
