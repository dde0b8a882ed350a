import numpy as np
import pytest

from src.autograd import functions as F
from src.data import gen_synthetic, make_windows
from src.exceptions import DataError, NumericError
from src.model import AmdModel
from src.training import trainer as trainer_module
from src.training.trainer import TrainCallback, evaluate, evaluate_horizons, train


def _datasets(series, config, windows=None):
    L, T = config.seq_len, config.pred_len
    end = series.num_timesteps if windows is None else windows + L + T - 1
    ds = make_windows(series, L, T, partition=(0, end))
    return {'train': ds, 'val': ds}


class _Snapshots(TrainCallback):
    def __init__(self, model):
        self.model = model
        self.states = {}
        self.batches = 0

    def on_batch_end(self, epoch, batch, loss):
        self.batches += 1

    def on_epoch_end(self, record, is_best):
        self.states[record.epoch] = self.model.registry.state_dict()


def test_overfits_sine(toy_config):
    config = toy_config.with_overrides({
        'ams.hidden': 64, 'ams.selector_hidden': 16, 'train.learning_rate': 5e-3,
        'train.batch_size': 32, 'train.epochs': 200, 'train.weight_decay': 0.0,
    })
    series = gen_synthetic('sine', 219, C=2, period=8)
    datasets = _datasets(series, config, windows=200)
    model = AmdModel(config)
    report = train(model, datasets)
    assert evaluate(model, datasets['train'])['mse'] < 1e-2
    assert report.best_val_mse < report.initial_val['mse']


def test_zero_epochs_changes_nothing(toy_config, sine_series):
    config = toy_config.with_overrides({'train.epochs': 0})
    model = AmdModel(config)
    before = model.registry.state_dict()
    report = train(model, _datasets(sine_series, config))
    assert report.epochs == [] and report.best_epoch == 0
    assert report.best_val_mse == report.initial_val['mse']
    for name, value in model.registry.state_dict().items():
        np.testing.assert_array_equal(value, before[name])


def test_training_is_deterministic(toy_config, sine_series):
    config = toy_config.with_overrides({'train.epochs': 3, 'train.learning_rate': 1e-3})
    runs = []
    for _ in range(2):
        model = AmdModel(config)
        report = train(model, _datasets(sine_series, config, windows=100))
        runs.append((model.registry.state_dict(), report.batch_losses))
    (params_a, losses_a), (params_b, losses_b) = runs
    assert losses_a == losses_b
    for name in params_a:
        np.testing.assert_array_equal(params_a[name], params_b[name])


def test_best_epoch_parameters_restored(toy_config, sine_series):
    config = toy_config.with_overrides({'train.epochs': 4, 'train.learning_rate': 2e-2})
    model = AmdModel(config)
    initial = model.registry.state_dict()
    snapshots = _Snapshots(model)
    report = train(model, _datasets(sine_series, config, windows=100), callbacks=[snapshots])
    expected = snapshots.states[report.best_epoch] if report.best_epoch else initial
    for name, value in model.registry.state_dict().items():
        np.testing.assert_array_equal(value, expected[name])
    assert snapshots.batches == len(report.batch_losses) == 4 * 4
    assert set(report.rng_state) == {'shuffle', 'noise'}


def test_test_metrics_reported(toy_config, sine_series):
    config = toy_config.with_overrides({'train.epochs': 1})
    datasets = _datasets(sine_series, config, windows=60)
    datasets['test'] = make_windows(sine_series, 16, 4, partition=(300, 400))
    report = train(AmdModel(config), datasets)
    assert set(report.test) == {'mse', 'mae'}
    assert 'batch_losses' not in report.to_dict()


def test_non_finite_loss_reports_epoch_and_batch(toy_config, sine_series, monkeypatch):
    config = toy_config.with_overrides({'train.epochs': 1})
    monkeypatch.setattr(trainer_module, 'pred_loss',
                        lambda y_hat, y: F.scale(F.mean(y_hat), float('nan')))
    with pytest.raises(NumericError, match="epoch 1, batch 0"):
        train(AmdModel(config), _datasets(sine_series, config, windows=40))


def test_empty_validation_set_rejected(toy_config, sine_series):
    datasets = _datasets(sine_series, toy_config, windows=40)
    datasets['val'] = None
    with pytest.raises(DataError):
        train(AmdModel(toy_config), datasets)


def test_evaluate_horizons(toy_config, sine_series):
    model = AmdModel(toy_config)
    ds = make_windows(sine_series, 16, 4)
    results = evaluate_horizons(model, ds, [1, 4])
    assert results[4] == pytest.approx(evaluate(model, ds))
    with pytest.raises(DataError):
        evaluate_horizons(model, ds, [5])
