from pathlib import Path

import numpy as np
import pytest

from tcsynth import fixtures as fx
from tcsynth.config import load_config
from tcsynth.lexicon import load_lexicon
from tcsynth.pipeline import build_resources
from tcsynth.typography import FontRegistry


@pytest.fixture(autouse=True)
def _font_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("TCSYNTH_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cache"))


@pytest.fixture(scope="session")
def registry() -> FontRegistry:
    return FontRegistry.from_dir(fx.FONT_DIR)


@pytest.fixture(scope="session")
def lexicon_1000():
    return load_lexicon([fx.WORDS_1000])


@pytest.fixture(scope="session")
def backgrounds(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("bg")
    fx.write_backgrounds(root)
    return root


@pytest.fixture
def make_config(tmp_path, backgrounds):
    """Write a fixture config into tmp_path and load it."""

    def make(units=(1, 0), seed=0, words=fx.WORDS_1000, name="cfg.yaml", **extra):
        path = fx.write_config(
            tmp_path / name, backgrounds, units=units, seed=seed, output_dir=tmp_path / "out", words=words, extra=extra
        )
        return load_config(path)

    return make


@pytest.fixture
def words_file(tmp_path):
    """Write a word list of the first ``n`` fixture words (or given words)."""

    def make(words, name="words.txt") -> Path:
        p = tmp_path / name
        p.write_text("\n".join(words) + "\n", encoding="utf-8")
        return p

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def resources_for(make_config):
    def make(**kw):
        return build_resources(make_config(**kw))

    return make


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
