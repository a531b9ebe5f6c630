import pytest

from randfactor import config
from randfactor.errors import ConfigError
from randfactor.randproj import FAMILIES


def write(tmp_path, text):
    path = tmp_path / "c.ini"
    path.write_text(text)
    return path


def test_experiment_round_trip(tmp_path):
    path = write(tmp_path, """
[experiment]
k_grid = 2, 10   # comment
families = all
pair_sample = all
metrics = corr_error
remove_market = yes
base_seed = 42
scale = 0.5

[data]
source = synthetic
""")
    conf = config.load(path, "experiment")
    cfg = config.experiment_config(conf["experiment"], workers=2)
    assert cfg.k_grid == (2, 10) and cfg.families == FAMILIES
    assert cfg.pair_sample == "all" and cfg.metrics == ("corr_error",)
    assert cfg.remove_market and cfg.base_seed == 42 and cfg.workers == 2 and cfg.scale == 0.5
    assert config.experiment_config(conf["experiment"], seed=7).base_seed == 7


@pytest.mark.parametrize("text", [
    "[experiment]\nk_grid = 2\nbogus = 1\n",
    "[extras]\nx = 1\n",
    "[experiment\nk_grid = 2\n",
])
def test_rejects(tmp_path, text):
    with pytest.raises(ConfigError):
        config.load(write(tmp_path, text), "experiment")


@pytest.mark.parametrize("section", [
    {}, {"k_grid": "two"}, {"k_grid": "2", "remove_market": "maybe"}, {"k_grid": "2", "scale": "-1"},
    {"k_grid": "2", "families": "gaussian, cauchy"},
])
def test_bad_values(section):
    with pytest.raises(ConfigError):
        config.experiment_config(section)


def test_parsers():
    assert config.parse_list(" a, b ,,c") == ["a", "b", "c"]
    assert config.parse_bool("Off", "x") is False
    assert config.parse_scale("mean") == "mean"
    with pytest.raises(ConfigError):
        config.parse_float("abc", "x")
