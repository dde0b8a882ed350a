from .losses import BALANCE_EPS, evaluate_metrics, pred_loss, selector_balance_loss, total_loss
from .optimizer import Adam, AdamState, adam_step, clip_grad_norm, collect_grads
from .trainer import (
    EpochRecord, TrainCallback, TrainReport, evaluate, evaluate_horizons, predict_dataset, train,
)
from .checkpoint import CHECKPOINT_VERSION, MAGIC, Checkpoint, load_checkpoint, read_checkpoint, save_checkpoint
from .run_journal import RunJournal, summarize_metrics

__all__ = [
    'BALANCE_EPS', 'evaluate_metrics', 'pred_loss', 'selector_balance_loss', 'total_loss',
    'Adam', 'AdamState', 'adam_step', 'clip_grad_norm', 'collect_grads',
    'EpochRecord', 'TrainCallback', 'TrainReport', 'evaluate', 'evaluate_horizons',
    'predict_dataset', 'train', 'CHECKPOINT_VERSION', 'MAGIC', 'Checkpoint', 'load_checkpoint',
    'read_checkpoint', 'save_checkpoint', 'RunJournal', 'summarize_metrics',
]
