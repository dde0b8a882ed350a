"""
Training loop: seeded minibatch Adam on the composite loss, validation after
every epoch, best-validation parameters restored at the end.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from src.autograd import no_grad
from src.data.windows import WindowDataset
from src.exceptions import DataError, NumericError
from src.model.amd import AmdModel
from src.model.config import ModelConfig
from src.training.losses import evaluate_metrics, pred_loss, selector_balance_loss, total_loss
from src.training.optimizer import Adam

EVAL_BATCH = 256


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_mse: float
    val_mse: float
    val_mae: float
    seconds: float


@dataclass
class TrainReport:
    initial_val: Dict[str, float]
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mse: float = float('inf')
    test: Optional[Dict[str, float]] = None
    num_parameters: int = 0
    batch_losses: List[float] = field(default_factory=list)
    rng_state: Dict = field(default_factory=dict)

    @property
    def final_train_mse(self) -> float:
        return self.epochs[-1].train_mse if self.epochs else float('nan')

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop('batch_losses')
        return data


class TrainCallback:
    """Hooks called by `train`; override what you need."""

    def on_batch_end(self, epoch: int, batch: int, loss: float) -> None:
        pass

    def on_epoch_end(self, record: EpochRecord, is_best: bool) -> None:
        pass


def _streams(seed: int):
    shuffle_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(shuffle_seq), np.random.default_rng(noise_seq)


def predict_dataset(model: AmdModel, dataset: WindowDataset, batch_size: int = EVAL_BATCH):
    """Forecasts and targets for every window, without gate noise."""
    preds, targets = [], []
    with no_grad():
        for start in range(0, len(dataset), batch_size):
            X, Y = dataset.batch(range(start, min(start + batch_size, len(dataset))))
            y_hat, _ = model.forward(X, training=False)
            preds.append(y_hat.data)
            targets.append(Y)
    if not preds:
        raise DataError("cannot evaluate an empty window dataset")
    return np.concatenate(preds), np.concatenate(targets)


def evaluate(model: AmdModel, dataset: WindowDataset, batch_size: int = EVAL_BATCH) -> Dict[str, float]:
    y_hat, y = predict_dataset(model, dataset, batch_size)
    return evaluate_metrics(y_hat, y)


def evaluate_horizons(model: AmdModel, dataset: WindowDataset, horizons: Sequence[int],
                      batch_size: int = EVAL_BATCH) -> Dict[int, Dict[str, float]]:
    """Metrics over the first h forecast steps, for each requested h."""
    y_hat, y = predict_dataset(model, dataset, batch_size)
    results = {}
    for h in horizons:
        if not 1 <= h <= y.shape[1]:
            raise DataError(f"horizon {h} outside 1..{y.shape[1]}")
        results[int(h)] = evaluate_metrics(y_hat[:, :h], y[:, :h])
    return results


def train(
    model: AmdModel,
    datasets: Mapping[str, WindowDataset],
    config: Optional[ModelConfig] = None,
    callbacks: Sequence[TrainCallback] = (),
    logger: Optional[logging.Logger] = None,
) -> TrainReport:
    """
    Args:
        model: Model to train in place (ends holding the best-validation parameters)
        datasets: 'train' and 'val' WindowDatasets, optional 'test'
        config: Defaults to model.config
        callbacks: Observers of batch/epoch progress

    Returns:
        TrainReport; test metrics (when a test set is given) use the best parameters
    """
    logger = logger or logging.getLogger(__name__)
    config = config or model.config
    tc = config.train
    train_set, val_set = datasets.get('train'), datasets.get('val')
    if not train_set or not val_set:
        raise DataError("train and val datasets must be non-empty")

    shuffle_rng, noise_rng = _streams(tc.seed)
    optimizer = Adam(model.registry, lr=tc.learning_rate, weight_decay=tc.weight_decay,
                     grad_clip=tc.grad_clip, logger=logger)

    initial = evaluate(model, val_set)
    report = TrainReport(initial_val=initial, best_val_mse=initial['mse'],
                         num_parameters=model.num_parameters())
    best_state = model.registry.state_dict()
    logger.info(f"Training {model.num_parameters()} parameters on {len(train_set)} windows "
                f"for {tc.epochs} epochs (initial val mse {initial['mse']:.6f})")

    for epoch in range(1, tc.epochs + 1):
        t0 = time.time()
        order = shuffle_rng.permutation(len(train_set))
        loss_sum = mse_sum = 0.0
        batches = 0
        for b, start in enumerate(range(0, len(order), tc.batch_size)):
            X, Y = train_set.batch(order[start:start + tc.batch_size])
            optimizer.zero_grad()
            y_hat, S = model.forward(X, rng=noise_rng, training=True)
            pred = pred_loss(y_hat, Y)
            balance = selector_balance_loss(S, eps=config.loss.eps, per_row=config.loss.per_row)
            try:
                loss = total_loss(pred, balance, config.loss)
            except NumericError as e:
                logger.error(f"Aborting: {e} at epoch {epoch}, batch {b}")
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}") from e
            loss.backward()
            optimizer.step()

            value = loss.item()
            report.batch_losses.append(value)
            loss_sum += value
            mse_sum += pred.item()
            batches += 1
            for cb in callbacks:
                cb.on_batch_end(epoch, b, value)

        val = evaluate(model, val_set)
        record = EpochRecord(epoch=epoch, train_loss=loss_sum / batches, train_mse=mse_sum / batches,
                             val_mse=val['mse'], val_mae=val['mae'], seconds=time.time() - t0)
        report.epochs.append(record)
        is_best = val['mse'] < report.best_val_mse
        if is_best:
            report.best_val_mse, report.best_epoch = val['mse'], epoch
            best_state = model.registry.state_dict()
        logger.info(f"Epoch {epoch}/{tc.epochs}: loss {record.train_loss:.6f}, "
                    f"val mse {record.val_mse:.6f}, val mae {record.val_mae:.6f} "
                    f"({record.seconds:.1f}s){' *best*' if is_best else ''}")
        for cb in callbacks:
            cb.on_epoch_end(record, is_best)

    model.registry.load_state_dict(best_state)
    report.rng_state = {
        'shuffle': shuffle_rng.bit_generator.state,
        'noise': noise_rng.bit_generator.state,
    }
    if datasets.get('test'):
        report.test = evaluate(model, datasets['test'])
        logger.info(f"Test (best epoch {report.best_epoch}): mse {report.test['mse']:.6f}, "
                    f"mae {report.test['mae']:.6f}")
    return report
