"""
AMD forecaster: RevIN -> MDM -> DDI -> AMS -> RevIN^-1.
"""

import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.autograd import Tensor, as_tensor, functions as F
from src.exceptions import ShapeError
from src.model.ams import TPProjection, TPSelector, ams_forward
from src.model.config import ModelConfig
from src.model.ddi import DDI, compute_d_model
from src.model.layers import ParameterRegistry
from src.model.mdm import MDM
from src.model.revin import RevIN


class AmdModel:
    """
    All blocks of one forecaster plus the registry of their parameters.

    Ablation flags only decide which blocks exist: `no_mdm` skips MDM
    (u = normalized input), `no_ddi` skips DDI (v = u).
    """

    def __init__(self, config: ModelConfig, rng: Optional[np.random.Generator] = None, logger=None):
        self.config = config.validate()
        self.logger = logger or logging.getLogger(__name__)
        rng = rng if rng is not None else np.random.default_rng(config.train.seed)
        L, T, C = config.seq_len, config.pred_len, config.channels
        self.registry = ParameterRegistry()
        self.metadata: Dict = {}

        self.revin = RevIN(self.registry, C)
        self.mdm = None
        if not config.no_mdm:
            self.mdm = MDM(self.registry, L, config.mdm.num_scales, config.mdm.rate,
                           linear=config.mdm.linear, rng=rng)
        self.ddi = None
        if not config.no_ddi:
            self.ddi = DDI(self.registry, L, C, config.ddi.patch_len, num_blocks=config.ddi.num_blocks,
                           beta=config.ddi.beta, layer_norm=config.ddi.layer_norm,
                           d_model=config.ddi.d_model or compute_d_model(C), depth=config.ddi.depth, rng=rng)
        ams = config.ams
        self.selector = TPSelector(self.registry, L, ams.num_predictors, ams.top_k, ams.alpha,
                                   hidden=ams.selector_hidden, noise=ams.noise, rng=rng)
        self.projection = TPProjection(self.registry, L, T, ams.num_predictors, hidden=ams.hidden, rng=rng)

        self.logger.debug(f"AmdModel built: {len(self.registry)} tensors, {self.num_parameters()} parameters")

    def num_parameters(self) -> int:
        return self.registry.num_parameters()

    def zero_grad(self) -> None:
        self.registry.zero_grad()

    def forward(self, X: Union[Tensor, np.ndarray], rng: Optional[np.random.Generator] = None,
                training: bool = False) -> Tuple[Tensor, Tensor]:
        """
        Args:
            X: (B, L, C) input windows
            rng: source of gate noise (required when training with noise)
            training: enables gate noise

        Returns:
            (Y_hat (B, T, C), S_all (B, C, m))
        """
        X = as_tensor(X)
        cfg = self.config
        if X.ndim != 3 or X.shape[1:] != (cfg.seq_len, cfg.channels):
            raise ShapeError(f"model expects (B, {cfg.seq_len}, {cfg.channels}) input, got {X.shape}")

        x, state = self.revin.norm(X)
        x = F.transpose(x)                       # (B, C, L)
        u = self.mdm(x) if self.mdm is not None else x
        v = self.ddi(u) if self.ddi is not None else u
        y, S = ams_forward(u, v, self.selector, self.projection, mode=cfg.ams.mode,
                           rng=rng, training=training)
        y = F.transpose(y)                       # (B, T, C)
        return self.revin.denorm(y, state), S

    __call__ = forward
