from .config import (
    AMS_MODES, AmsConfig, DdiConfig, LossConfig, MdmConfig, ModelConfig, TrainConfig,
)
from .presets import PRESETS, Preset, apply_preset, get_preset
from .layers import FeedForward, ParameterRegistry
from .revin import RevIN, RevinState, revin_denorm, revin_norm
from .mdm import MDM, avg_downsample, mdm_forward
from .ddi import DDI, DDIBlock, compute_d_model, ddi_block_forward, patchify, unpatchify
from .ams import TPProjection, TPSelector, ams_forward, selector_forward, topk_scale
from .amd import AmdModel

__all__ = [
    'AMS_MODES', 'AmsConfig', 'DdiConfig', 'LossConfig', 'MdmConfig', 'ModelConfig', 'TrainConfig',
    'PRESETS', 'Preset', 'apply_preset', 'get_preset', 'FeedForward', 'ParameterRegistry',
    'RevIN', 'RevinState', 'revin_denorm', 'revin_norm', 'MDM', 'avg_downsample', 'mdm_forward',
    'DDI', 'DDIBlock', 'compute_d_model', 'ddi_block_forward', 'patchify', 'unpatchify',
    'TPProjection', 'TPSelector', 'ams_forward', 'selector_forward', 'topk_scale', 'AmdModel',
]
