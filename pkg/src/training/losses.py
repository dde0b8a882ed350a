"""
Training loss and evaluation metrics.

total = pred_mse + lambda1 * balance. The parameter-norm penalty is applied
as decoupled weight decay by the optimizer and is not part of the value.
"""

from typing import Dict

import numpy as np

from src.autograd import Tensor, as_tensor, functions as F
from src.exceptions import NumericError, ShapeError
from src.model.config import LossConfig

BALANCE_EPS = 1e-10


def pred_loss(y_hat, y) -> Tensor:
    y_hat, y = as_tensor(y_hat), as_tensor(y)
    if y_hat.shape != y.shape:
        raise ShapeError(f"prediction shape {y_hat.shape} != target shape {y.shape}")
    return F.mean(F.square(F.sub(y_hat, y)))


def selector_balance_loss(S, eps: float = BALANCE_EPS, per_row: bool = False) -> Tensor:
    """
    Squared coefficient of variation of expert importance.

    S: gate weights (..., m); leading axes are flattened into rows.
    Default: importance I = column sums over rows, loss = Var(I) / (Mean(I)^2 + eps).
    per_row=True: the same ratio per row over its m weights, averaged over rows.
    """
    S = as_tensor(S)
    m = S.shape[-1]
    rows = int(np.prod(S.shape[:-1]))
    if rows == 0:
        raise ShapeError("selector_balance_loss needs at least one gate row")
    S = F.reshape(S, (rows, m))
    if per_row:
        ratio = F.div(F.var(S, axis=-1), F.add(F.square(F.mean(S, axis=-1)), eps))
        return F.mean(ratio)
    importance = F.sum_(S, axis=0)
    return F.div(F.var(importance), F.add(F.square(F.mean(importance)), eps))


def total_loss(pred: Tensor, balance: Tensor, config: LossConfig) -> Tensor:
    for label, value in (("prediction", pred), ("balance", balance)):
        if not np.all(np.isfinite(as_tensor(value).data)):
            raise NumericError(f"non-finite {label} loss component")
    if config.lambda1 == 0:
        return as_tensor(pred)
    return F.add(pred, F.scale(balance, config.lambda1))


def evaluate_metrics(y_hat, y) -> Dict[str, float]:
    y_hat = np.asarray(y_hat.data if isinstance(y_hat, Tensor) else y_hat, dtype=np.float64)
    y = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise ShapeError(f"prediction shape {y_hat.shape} != target shape {y.shape}")
    err = y_hat - y
    return {'mse': float(np.mean(err * err)), 'mae': float(np.mean(np.abs(err)))}
