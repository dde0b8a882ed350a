"""
Per-dataset presets.

Hyper-parameters (patch length, alpha, batch size, epochs, blocks, learning
rate, layer norm) and dataset shapes (channels, fixed train/val/test counts)
of the standard long-term forecasting benchmarks.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from src.data.csv_data_handler import SplitSpec
from src.exceptions import ConfigError
from src.model.config import ModelConfig


@dataclass(frozen=True)
class Preset:
    name: str
    patch_len: int
    alpha: float
    batch_size: int
    epochs: int
    num_blocks: int
    learning_rate: float
    layer_norm: bool
    channels: int
    split: Tuple[int, int, int]
    pred_len: int = 96
    seq_len: int = 512

    def overrides(self) -> Dict[str, Any]:
        return {
            'seq_len': self.seq_len,
            'pred_len': self.pred_len,
            'channels': self.channels,
            'ddi.patch_len': self.patch_len,
            'ddi.num_blocks': self.num_blocks,
            'ddi.layer_norm': self.layer_norm,
            'ams.alpha': self.alpha,
            'train.batch_size': self.batch_size,
            'train.epochs': self.epochs,
            'train.learning_rate': self.learning_rate,
        }

    def split_spec(self) -> SplitSpec:
        train, val, test = self.split
        return SplitSpec(mode='fixed', train=train, val=val, test=test)


_ETTH_SPLIT = (8545, 2881, 2881)
_ETTM_SPLIT = (34465, 11521, 11521)

PRESETS: Dict[str, Preset] = {p.name: p for p in (
    #      name       P   alpha batch ep  n  lr     LN     C    split
    Preset('etth1',   16, 0.0, 128, 10, 1, 5e-5, True,  7,   _ETTH_SPLIT),
    Preset('etth2',   4,  1.0, 128, 10, 1, 5e-5, False, 7,   _ETTH_SPLIT),
    Preset('ettm1',   16, 0.0, 128, 10, 1, 3e-5, True,  7,   _ETTM_SPLIT),
    Preset('ettm2',   8,  0.0, 128, 10, 1, 1e-5, True,  7,   _ETTM_SPLIT),
    Preset('exchange', 4, 0.0, 512, 10, 1, 3e-4, True,  8,   (5120, 665, 1422)),
    Preset('weather', 16, 0.0, 128, 10, 1, 5e-5, True,  21,  (36792, 5271, 10540)),
    Preset('ecl',     16, 0.0, 128, 20, 1, 3e-4, False, 321, (18317, 2633, 5261)),
    Preset('traffic', 16, 0.0, 32,  20, 1, 8e-5, False, 862, (12185, 1757, 3509)),
    Preset('solar',   8,  1.0, 128, 10, 1, 2e-5, True,  137, (36601, 5161, 10417)),
    Preset('pems03',  4,  1.0, 32,  10, 1, 5e-5, False, 358, (15617, 5135, 5135), pred_len=12),
    Preset('pems04',  4,  1.0, 32,  5,  1, 5e-5, False, 307, (10172, 3375, 3375), pred_len=12),
    Preset('pems07',  16, 1.0, 32,  10, 1, 5e-5, False, 883, (16911, 5622, 5622), pred_len=12),
    Preset('pems08',  16, 1.0, 32,  10, 1, 5e-5, False, 170, (10690, 3548, 3548), pred_len=12),
)}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"Unknown preset '{name}' (available: {', '.join(sorted(PRESETS))})") from None


def apply_preset(config: ModelConfig, name: Optional[str], logger: Optional[logging.Logger] = None) -> ModelConfig:
    """Overlay a preset on `config`; None returns the config unchanged."""
    if not name:
        return config
    preset = get_preset(name)
    return config.with_overrides(preset.overrides(), logger=logger, source=f"preset {preset.name}")
