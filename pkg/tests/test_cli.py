import json

import numpy as np
import pandas as pd
import pytest

from src.cli.runner import run
from src.data import load_csv

TOY_MODEL = {
    'seq_len': 16, 'pred_len': 4,
    'mdm': {'num_scales': 2},
    'ddi': {'patch_len': 4, 'd_model': 8},
    'ams': {'num_predictors': 2, 'top_k': 1, 'hidden': 8, 'selector_hidden': 4},
    'train': {'epochs': 2, 'batch_size': 16, 'learning_rate': 1e-3, 'seed': 0},
}


@pytest.fixture
def run_config(tmp_path, toy_csv):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        'model': TOY_MODEL,
        'data': {'path': str(toy_csv), 'split': {'mode': 'fixed', 'train': 210, 'val': 30, 'test': 60}},
        'output': {'checkpoint': str(tmp_path / "out" / "toy.ckpt")},
    }))
    return path


@pytest.fixture
def trained(tmp_path, run_config, capsys):
    assert run(['train', '--config', str(run_config)]) == 0
    capsys.readouterr()
    return tmp_path / "out" / "toy.ckpt"


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_train_writes_checkpoint_and_journal(tmp_path, run_config, capsys):
    assert run(['train', '--config', str(run_config)]) == 0
    report = _stdout_json(capsys)
    assert report['checkpoint'].endswith("toy.ckpt")
    assert len(report['epochs']) == 2
    assert set(report['test']) == {'mse', 'mae'}
    journal = json.loads((tmp_path / "out" / "runs.json").read_text())
    assert journal[0]['config_digest'] and journal[0]['seed'] == 0


def test_train_multiple_seeds(tmp_path, run_config, capsys):
    assert run(['train', '--config', str(run_config), '--seeds', '2', '--set', 'train.epochs=1']) == 0
    out = _stdout_json(capsys)
    assert [r['seed'] for r in out['runs']] == [0, 1]
    assert out['summary']['runs'] == 2
    assert (tmp_path / "out" / "toy-seed0.ckpt").exists()
    assert (tmp_path / "out" / "toy-seed1.ckpt").exists()


def test_evaluate_reports_horizons(trained, toy_csv, capsys):
    assert run(['evaluate', '--ckpt', str(trained), '--data', str(toy_csv),
                '--horizon', '1', '--horizon', '4', '--partition', 'test']) == 0
    out = _stdout_json(capsys)
    assert [h['horizon'] for h in out['horizons']] == [1, 4]
    assert out['windows'] == 57
    assert all(np.isfinite(h['mse']) for h in out['horizons'])


def test_evaluate_channel_mismatch_exits_2(trained, tmp_path, capsys):
    other = tmp_path / "three.csv"
    other.write_text("a,b,c\n" + "\n".join("1,2,3" for _ in range(40)) + "\n")
    assert run(['evaluate', '--ckpt', str(trained), '--data', str(other)]) == 2
    assert "channel count" in capsys.readouterr().err


def test_predict_writes_forecast(trained, toy_csv, tmp_path):
    out = tmp_path / "forecast.csv"
    assert run(['predict', '--ckpt', str(trained), '--input', str(toy_csv), '--out', str(out)]) == 0
    forecast = load_csv(str(out))
    assert forecast.values.shape == (4, 2)
    assert forecast.channel_names == ['ch0', 'ch1']


def test_gates_rows_sum_to_one(trained, toy_csv, tmp_path):
    out = tmp_path / "gates.csv"
    assert run(['gates', '--ckpt', str(trained), '--data', str(toy_csv), '--out', str(out), '--stride', '10']) == 0
    gates = pd.read_csv(out)
    assert list(gates.columns) == ['window', 'start_row', 'channel', 'channel_name', 's0', 's1']
    assert len(gates) == 2 * 29
    np.testing.assert_allclose(gates[['s0', 's1']].sum(axis=1), 1.0, atol=1e-8)


def test_ablate_average(run_config, capsys):
    assert run(['ablate', '--config', str(run_config), '--mode', 'average', '--set', 'train.epochs=1']) == 0
    rows = _stdout_json(capsys)['rows']
    assert [r['variant'] for r in rows] == ['dense', 'average']
    assert rows[0]['num_parameters'] == rows[1]['num_parameters']


def test_sweep(run_config, capsys):
    assert run(['sweep', '--config', str(run_config), '--param', 'ddi.beta', '--values', '0,0.5',
                '--set', 'train.epochs=1']) == 0
    out = _stdout_json(capsys)
    assert [r['variant'] for r in out['rows']] == ['ddi.beta=0', 'ddi.beta=0.5']


def test_theorem_check_passes(capsys):
    assert run(['theorem-check', '--trials', '10']) == 0
    report = _stdout_json(capsys)
    assert report['passed'] and report['num_violations'] == 0


def test_theorem_check_to_file(tmp_path):
    out = tmp_path / "bound.json"
    assert run(['theorem-check', '--trials', '3', '--verbose-trials', '--out', str(out)]) == 0
    assert len(json.loads(out.read_text())['results']) == 3


def test_gradcheck(capsys):
    assert run(['gradcheck']) == 0
    assert _stdout_json(capsys)['passed'] is True


def test_synth(tmp_path):
    out = tmp_path / "sine.csv"
    assert run(['synth', '--kind', 'sine', '--out', str(out), '--length', '50', '--channels', '3']) == 0
    assert load_csv(str(out)).values.shape == (50, 3)


@pytest.mark.parametrize("argv", [[], ['bogus'], ['train', '--seeds']])
def test_usage_errors_exit_1(argv):
    assert run(argv) == 1


def test_bad_config_key_exits_1(tmp_path, toy_csv):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({'model': {'ddi': {'patch': 4}}, 'data': {'path': str(toy_csv)}}))
    assert run(['train', '--config', str(path)]) == 1


def test_missing_data_exits_2(tmp_path, run_config):
    assert run(['train', '--config', str(run_config), '--data', str(tmp_path / "missing.csv")]) == 2


def test_unwritable_output_exits_2(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    out = blocker / "sine.csv"
    assert run(['synth', '--kind', 'sine', '--out', str(out), '--length', '20']) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_help_exits_0(capsys):
    assert run(['--help']) == 0
    assert "theorem-check" in capsys.readouterr().out
