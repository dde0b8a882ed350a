"""
Run configuration file (JSON).

    {
      "preset": "etth1",
      "model": {"seq_len": 336, "ddi": {"beta": 0.5}},
      "data": {"path": "ETTh1.csv", "has_header": true, "date_column": 0,
               "stride": 1, "split": {"mode": "fixed", "train": 8545, "val": 2881, "test": 2881}},
      "output": {"checkpoint": "runs/etth1.ckpt", "journal": "runs/runs.json"}
    }

Every section is optional; unknown keys at any level are rejected.
Merge order: defaults -> preset -> "model" section -> command-line overrides.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

from src.data.csv_data_handler import SplitSpec
from src.exceptions import ConfigError
from src.model.config import ModelConfig
from src.model.presets import apply_preset, get_preset

_TOP_KEYS = {'preset', 'model', 'data', 'output'}
_DATA_KEYS = {'path', 'has_header', 'date_column', 'stride', 'split'}
_SPLIT_KEYS = {'mode', 'train', 'val', 'test'}
_OUTPUT_KEYS = {'checkpoint', 'journal'}


@dataclass
class DataSection:
    path: Optional[str] = None
    has_header: bool = True
    date_column: Optional[int] = None
    stride: int = 1
    split: Optional[SplitSpec] = None


@dataclass
class OutputSection:
    checkpoint: Optional[str] = None
    journal: Optional[str] = None


@dataclass
class RunConfigFile:
    preset: Optional[str] = None
    model: Dict[str, Any] = field(default_factory=dict)
    data: DataSection = field(default_factory=DataSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RunConfigFile":
        _reject_unknown(raw, _TOP_KEYS, "run config")
        data_raw = raw.get('data') or {}
        _reject_unknown(data_raw, _DATA_KEYS, "data")
        split = None
        if data_raw.get('split') is not None:
            _reject_unknown(data_raw['split'], _SPLIT_KEYS, "data.split")
            split = SplitSpec(**data_raw['split'])
        output_raw = raw.get('output') or {}
        _reject_unknown(output_raw, _OUTPUT_KEYS, "output")
        model = raw.get('model') or {}
        if not isinstance(model, Mapping):
            raise ConfigError("'model' section must be an object")

        rc = cls(
            preset=raw.get('preset'),
            model=dict(model),
            data=DataSection(
                path=data_raw.get('path'),
                has_header=bool(data_raw.get('has_header', True)),
                date_column=data_raw.get('date_column'),
                stride=int(data_raw.get('stride', 1)),
                split=split,
            ),
            output=OutputSection(**output_raw),
        )
        if rc.preset:
            get_preset(rc.preset)
        # unknown model keys surface here rather than mid-run
        rc.model_config()
        return rc

    def model_config(self, preset: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None,
                     logger: Optional[logging.Logger] = None) -> ModelConfig:
        """defaults -> preset (argument wins over file) -> file model section -> overrides."""
        config = apply_preset(ModelConfig(), preset or self.preset, logger=logger)
        config = config.with_overrides(flatten(self.model), logger=logger, source="config file")
        if overrides:
            config = config.with_overrides(overrides, logger=logger, source="command line")
        return config.validate()

    def split_spec(self, preset: Optional[str] = None) -> SplitSpec:
        """Explicit file split, else the preset's fixed counts, else the 0.7/0.1/0.2 ratio."""
        if self.data.split is not None:
            return self.data.split
        name = preset or self.preset
        return get_preset(name).split_spec() if name else SplitSpec()


def flatten(section: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """{"ddi": {"beta": 0.5}} -> {"ddi.beta": 0.5}; dotted keys pass through."""
    flat: Dict[str, Any] = {}
    for key, value in section.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def load_run_config(path: Optional[str]) -> RunConfigFile:
    if not path:
        return RunConfigFile()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return RunConfigFile.from_dict(raw)


def _reject_unknown(section: Any, allowed: set, where: str) -> None:
    if not isinstance(section, Mapping):
        raise ConfigError(f"'{where}' must be an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"Unknown key(s) in {where}: {', '.join(unknown)}")
