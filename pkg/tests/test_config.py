import pytest

from motorlint.config import CONFIG_ENV, ToolConfig, resolve_config
from motorlint.errors import ConfigError


def test_defaults():
    c = ToolConfig()
    assert (c.touch_target_min, c.icon_gap_min, c.crop_pad, c.similarity_min) == (48, 8.0, 15, 0.95)


def test_round_trip():
    c = ToolConfig(touch_target_min=44, icon_gap_min=6.5, lexicon_extra="/tmp/words.txt", seed=9)
    assert ToolConfig.loads(c.dumps()) == c
    assert ToolConfig.loads(ToolConfig().dumps()) == ToolConfig()


def test_comments_and_relative_paths(tmp_path):
    p = tmp_path / "motorlint.conf"
    p.write_text("# tuned for tablets\n\ntouch_target_min = 56  # dp\nlexicon_extra = words.txt\n")
    c = ToolConfig.load(p)
    assert c.touch_target_min == 56
    assert c.lexicon_extra == str(tmp_path / "words.txt")


@pytest.mark.parametrize("text", [
    "touch_target_minimum = 4",        # unknown key
    "crop_pad = 3\ncrop_pad = 4",      # duplicate
    "crop_pad 3",                      # no '='
    "icon_gap_min = wide",             # not a number
    "touch_target_min = 0",            # not positive
    "similarity_min = 1.5",
    "section_area_min = 0.9\nsection_area_max = 0.5",
    "text_extractor = tesseract",
])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        ToolConfig.loads(text)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        ToolConfig.load(tmp_path / "absent.conf")


def test_env_var(tmp_path, monkeypatch):
    p = tmp_path / "c.conf"
    p.write_text("crop_pad = 20\n")
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert resolve_config() == ToolConfig()
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert resolve_config().crop_pad == 20
    q = tmp_path / "d.conf"
    q.write_text("crop_pad = 5\n")
    assert resolve_config(q).crop_pad == 5      # explicit path wins
