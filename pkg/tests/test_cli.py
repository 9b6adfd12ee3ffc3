import numpy as np
import pytest
from PIL import Image

from tcsynth import fixtures as fx
from tcsynth.cli import main
from tcsynth.config import load_config
from tcsynth.lexicon import load_lexicon
from tcsynth.pipeline import CAPTION_HEIGHT, build_resources, render_sample


@pytest.fixture
def cfg_path(tmp_path, backgrounds):
    def make(units=(1, 0), words=fx.WORDS_1000, name="c.yaml", **extra):
        return fx.write_config(tmp_path / name, backgrounds, units=units, output_dir=tmp_path / "out",
                               words=words, extra=extra)

    return make


@pytest.fixture
def small_words(tmp_path):
    p = tmp_path / "small.txt"
    p.write_text("\n".join(load_lexicon([fx.WORDS_1000]).words[:12]) + "\n", encoding="utf-8")
    return p


def test_generate_dry_run_total(cfg_path, capsys):
    assert main(["generate", str(cfg_path(units=(2, 1))), "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert "total: 3,000" in out
    assert "wild ratio: 33.33% (1/3)" in out


def test_generate_dry_run_ratio(cfg_path, capsys):
    assert main(["generate", str(cfg_path(units=(15, 5))), "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert "wild ratio: 25.00%" in out
    assert "total: 20,000" in out


def test_malformed_config_exit_2_with_line(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("lexicon: words.txt\nfonts: fonts\nunits:\n  simple: -1\n", encoding="utf-8")
    assert main(["generate", str(bad)]) == 2
    assert "bad.yaml:4:" in capsys.readouterr().err
    bad.write_text("lexicon: [a\n", encoding="utf-8")
    assert main(["validate-config", str(bad)]) == 2


def test_missing_resource_exit_3(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"lexicon: {fx.WORDS_1000}\nfonts: {tmp_path / 'nofonts'}\n", encoding="utf-8")
    assert main(["generate", str(cfg), "--dry-run"]) == 3
    assert "font directory not found" in capsys.readouterr().err


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as ei:
        main(["preview", "x.yaml", "--count", "0"])
    assert ei.value.code == 2


def test_generate_writes_dataset(cfg_path, small_words, tmp_path, capsys):
    path = cfg_path(units=(1, 1), words=small_words)
    assert main(["generate", str(path), "--output", str(tmp_path / "ds")]) == 0
    assert "wrote 24 samples" in capsys.readouterr().out
    rows = (tmp_path / "ds" / "manifest.tsv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 24


def test_validate_config(cfg_path, capsys):
    assert main(["validate-config", str(cfg_path())]) == 0
    assert "ok" in capsys.readouterr().out


def test_preview_single_tile(cfg_path, tmp_path, capsys):
    path = cfg_path()
    out = tmp_path / "p.png"
    assert main(["preview", str(path), "--count", "1", "--out", str(out)]) == 0
    sheet = np.asarray(Image.open(out))
    _, img = render_sample(build_resources(load_config(path)), 0)
    assert sheet.shape == (img.shape[0] + CAPTION_HEIGHT, img.shape[1])
    assert np.array_equal(sheet[: img.shape[0]], img)


def test_preview_deterministic_and_kinds(cfg_path, tmp_path, capsys):
    path = cfg_path(units=(2, 2))
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    assert main(["preview", str(path), "--count", "12", "--out", str(a)]) == 0
    listing = capsys.readouterr().out.splitlines()
    assert main(["preview", str(path), "--count", "12", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    res = build_resources(load_config(path))
    tiles = [line.split("\t") for line in listing[:12]]
    for idx, kind, label in tiles:
        rec, _ = render_sample(res, int(idx))
        assert (kind, label) == (rec.background_kind, rec.label)
        assert kind == ("wild" if (int(idx) % 4) >= 2 else "simple")


def test_split_command(tmp_path, capsys):
    manifest = tmp_path / "m.tsv"
    labels = ["台北", "台中", "北中", "台北市", "中北", "高雄", "高中", "雄中", "台", "北"]
    manifest.write_text("".join(f"img/{i}.png\t{w}\n" for i, w in enumerate(labels)), encoding="utf-8")
    assert main(["split", str(manifest), "--test-fraction", "0.3", "--out", str(tmp_path / "s")]) == 0
    train = (tmp_path / "s" / "train.tsv").read_text(encoding="utf-8").splitlines()
    test = (tmp_path / "s" / "test.tsv").read_text(encoding="utf-8").splitlines()
    assert len(train) + len(test) == 10 and len(test) == 3
    train_chars = set("".join(r.split("\t")[1] for r in train))
    assert set("".join(r.split("\t")[1] for r in test)) <= train_chars
    assert (tmp_path / "s" / "balance.tsv").read_text(encoding="utf-8").startswith("char\ttrain\ttest")


def test_split_infeasible_exit_1(tmp_path, capsys):
    manifest = tmp_path / "m.tsv"
    manifest.write_text("a.png\t台\nb.png\t北\n", encoding="utf-8")
    assert main(["split", str(manifest), "--out", str(tmp_path / "s")]) == 1
    assert "blocking characters" in capsys.readouterr().err


def test_augment_command(tmp_path, capsys):
    src = tmp_path / "src"
    src.mkdir()
    Image.fromarray(np.full((16, 48), 90, np.uint8)).save(src / "a.png")
    manifest = src / "manifest.tsv"
    manifest.write_text("a.png\t台北\n", encoding="utf-8")
    assert main(["augment", str(manifest), "--dry-run"]) == 0
    assert "total: 379" in capsys.readouterr().out
    out = tmp_path / "aug"
    assert main(["augment", str(manifest), "--out", str(out), "--scales", "2", "--distort", "1",
                 "--stretch", "1", "--perspective", "1"]) == 0
    rows = (out / "manifest.tsv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 7 and all(r.endswith("\t台北") for r in rows)


def test_eval_command(tmp_path, capsys):
    ref = tmp_path / "ref.tsv"
    pred = tmp_path / "pred.tsv"
    ref.write_text("".join(f"{i}\t字{i}\n" for i in range(10)), encoding="utf-8")
    pred.write_text("".join(f"{i}\t字{i if i < 7 else 0}\n" for i in reversed(range(10))), encoding="utf-8")
    assert main(["eval", str(pred), str(ref), "--show", "2"]) == 0
    out = capsys.readouterr().out
    assert "word accuracy: 70.00% (7/10)" in out
    assert "... 1 more mismatches" in out
    pred.write_text("0\tx\n", encoding="utf-8")
    assert main(["eval", str(pred), str(ref)]) == 1


def test_fonts_list(capsys, cfg_path):
    assert main(["fonts", "list", str(fx.FONT_DIR)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split("\t")[0] for ln in lines] == ["FixtureMing", "FixturePartial", "FixtureSans"]
    assert main(["fonts", "list", "--config", str(cfg_path())]) == 0


def test_pool_stats(tmp_path, backgrounds, capsys):
    ex = tmp_path / "ex.txt"
    ex.write_text("COCO_train2014_000000000002\nCOCO_train2014_000000000005\n")
    assert main(["pool", "stats", "--simple", str(backgrounds / "simple"), "--wild", str(backgrounds / "wild"),
                 "--exclude", str(ex)]) == 0
    out = capsys.readouterr().out
    assert "simple: 6" in out and "wild: 6" in out and "excluded: 2" in out


def test_lexicon_dump(tmp_path, capsys):
    a = tmp_path / "a.txt"
    a.write_text("台北\n高雄\n台北\n", encoding="utf-8")
    out = tmp_path / "o.txt"
    assert main(["lexicon", "dump", str(a), "-o", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == "台北\n高雄\n"
    assert "words: 2" in capsys.readouterr().out
    assert main(["lexicon", "dump", str(a)]) == 0
    cap = capsys.readouterr()
    assert cap.out == "台北\n高雄\n" and "characters: 4" in cap.err
