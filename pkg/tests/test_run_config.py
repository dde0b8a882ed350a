import json
import logging

import pytest

from src.cli.commands import ablation_overrides, fit_channels, parse_overrides
from src.cli.run_config import RunConfigFile, flatten, load_run_config
from src.data import Series
from src.exceptions import ConfigError, DataError
from src.model import ModelConfig


def _write(tmp_path, payload):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_empty_path_gives_defaults():
    rc = load_run_config(None)
    assert rc.model_config() == ModelConfig()
    assert rc.split_spec().mode == 'ratio'


@pytest.mark.parametrize("payload", [
    {'epochs': 3},
    {'data': {'file': 'x.csv'}},
    {'data': {'split': {'mode': 'fixed', 'train': 1, 'holdout': 2}}},
    {'output': {'dir': 'runs'}},
    {'model': {'ddi': {'beta': 0.5, 'gamma': 1}}},
    {'preset': 'unknown'},
])
def test_unknown_keys_rejected(tmp_path, payload):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, payload))


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(str(tmp_path / "none.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_run_config(str(bad))


def test_merge_order(tmp_path, caplog):
    rc = load_run_config(_write(tmp_path, {
        'preset': 'etth2',
        'model': {'seq_len': 336, 'ddi': {'beta': 0.5}},
    }))
    with caplog.at_level(logging.INFO):
        cfg = rc.model_config(overrides={'ddi.beta': '0.25'})
    assert cfg.ddi.patch_len == 4             # preset
    assert cfg.seq_len == 336                 # file over preset
    assert cfg.ddi.beta == 0.25               # command line over file
    assert "Config command line: ddi.beta 0.5 -> 0.25" in caplog.text
    assert "Config preset etth2" in caplog.text


def test_preset_argument_wins_over_file(tmp_path):
    rc = load_run_config(_write(tmp_path, {'preset': 'etth2'}))
    assert rc.model_config(preset='ettm2').ddi.patch_len == 8
    assert rc.split_spec(preset='ettm2').train == 34465


def test_explicit_split_wins(tmp_path):
    rc = load_run_config(_write(tmp_path, {
        'preset': 'etth1',
        'data': {'path': 'x.csv', 'split': {'mode': 'ratio', 'train': 0.6, 'val': 0.2, 'test': 0.2}},
    }))
    assert rc.split_spec().train == 0.6
    assert rc.data.path == 'x.csv'


def test_flatten():
    assert flatten({'ddi': {'beta': 0.5, 'patch_len': 8}, 'seq_len': 96, 'ams.top_k': 1}) == {
        'ddi.beta': 0.5, 'ddi.patch_len': 8, 'seq_len': 96, 'ams.top_k': 1,
    }


def test_parse_overrides():
    assert parse_overrides(['ddi.beta=0.5', ' ams.mode = sparse ']) == {'ddi.beta': '0.5', 'ams.mode': 'sparse'}
    with pytest.raises(ConfigError):
        parse_overrides(['ddi.beta'])


def test_ablation_overrides():
    assert ablation_overrides('average') == {'ams.mode': 'average'}
    assert ablation_overrides('beta=0') == {'ddi.beta': '0'}
    assert ablation_overrides('lambda1=0') == {'loss.lambda1': '0'}
    assert ablation_overrides('mdm.num_scales=2') == {'mdm.num_scales': '2'}
    with pytest.raises(ConfigError):
        ablation_overrides('everything')


def test_fit_channels():
    series = Series(values=[[1.0, 2.0, 3.0]], channel_names=['a', 'b', 'c'])
    assert fit_channels(ModelConfig(), series, explicit=False).channels == 3
    with pytest.raises(DataError, match="channel count mismatch"):
        fit_channels(ModelConfig(), series, explicit=True)


def test_run_config_from_dict_builds_sections():
    rc = RunConfigFile.from_dict({'data': {'stride': 2, 'has_header': False}, 'output': {'journal': 'j.json'}})
    assert rc.data.stride == 2 and rc.data.has_header is False
    assert rc.output.journal == 'j.json' and rc.output.checkpoint is None
