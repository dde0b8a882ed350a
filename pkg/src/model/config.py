"""
Model and training configuration.

A tree of dataclasses with dict round-tripping, invariant checks and
dotted-key overrides ("ddi.beta" -> config.ddi.beta).
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

from src.exceptions import ConfigError

AMS_MODES = ('dense', 'sparse', 'average')


@dataclass
class MdmConfig:
    num_scales: int = 4      # tau levels including the raw input
    rate: int = 2            # downsampling rate d
    linear: bool = False     # single linear layer per mixing step, no activation


@dataclass
class DdiConfig:
    patch_len: int = 16
    num_blocks: int = 1
    beta: float = 0.1
    layer_norm: bool = True
    d_model: Optional[int] = None   # None = max(32, 2**round(log2 C))
    depth: int = 2


@dataclass
class AmsConfig:
    num_predictors: int = 8
    top_k: int = 2
    alpha: float = 1.0
    hidden: int = 2048
    selector_hidden: int = 128
    mode: str = 'dense'
    noise: bool = True


@dataclass
class LossConfig:
    lambda1: float = 1.0
    eps: float = 1e-10
    per_row: bool = False


@dataclass
class TrainConfig:
    batch_size: int = 128
    epochs: int = 10
    learning_rate: float = 5e-5
    weight_decay: float = 1e-7
    seed: int = 2021
    grad_clip: Optional[float] = None


@dataclass
class ModelConfig:
    seq_len: int = 512
    pred_len: int = 96
    channels: int = 7
    mdm: MdmConfig = field(default_factory=MdmConfig)
    ddi: DdiConfig = field(default_factory=DdiConfig)
    ams: AmsConfig = field(default_factory=AmsConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    no_mdm: bool = False
    no_ddi: bool = False

    # ---- invariants -----------------------------------------------------
    def validate(self) -> "ModelConfig":
        L, P = self.seq_len, self.ddi.patch_len
        problems = []
        if L < 1 or self.pred_len < 1 or self.channels < 1:
            problems.append(f"seq_len, pred_len, channels must be positive "
                            f"(got {L}, {self.pred_len}, {self.channels})")
        if P < 1 or L % P != 0:
            problems.append(f"seq_len {L} must be a multiple of ddi.patch_len {P}")
        if self.mdm.num_scales < 1 or self.mdm.rate < 1:
            problems.append(f"mdm.num_scales and mdm.rate must be positive "
                            f"(got {self.mdm.num_scales}, {self.mdm.rate})")
        elif L < self.mdm.rate ** self.mdm.num_scales:
            problems.append(f"seq_len {L} must be >= mdm.rate**mdm.num_scales "
                            f"= {self.mdm.rate ** self.mdm.num_scales}")
        if self.ddi.num_blocks < 0:
            problems.append(f"ddi.num_blocks must be >= 0, got {self.ddi.num_blocks}")
        if self.ddi.depth not in (1, 2):
            problems.append(f"ddi.depth must be 1 or 2, got {self.ddi.depth}")
        if self.ddi.beta < 0:
            problems.append(f"ddi.beta must be >= 0, got {self.ddi.beta}")
        if self.ddi.d_model is not None and self.ddi.d_model < 1:
            problems.append(f"ddi.d_model must be positive, got {self.ddi.d_model}")
        if not 1 <= self.ams.top_k <= self.ams.num_predictors:
            problems.append(f"ams.top_k must satisfy 1 <= k <= m "
                            f"(got k={self.ams.top_k}, m={self.ams.num_predictors})")
        if self.ams.mode not in AMS_MODES:
            problems.append(f"ams.mode '{self.ams.mode}' not in {AMS_MODES}")
        if self.ams.hidden < 1 or self.ams.selector_hidden < 1:
            problems.append("ams.hidden and ams.selector_hidden must be positive")
        if self.loss.lambda1 < 0 or self.train.weight_decay < 0:
            problems.append("loss.lambda1 and train.weight_decay must be >= 0")
        if self.loss.eps <= 0:
            problems.append(f"loss.eps must be > 0, got {self.loss.eps}")
        if self.train.batch_size < 1 or self.train.epochs < 0 or self.train.learning_rate <= 0:
            problems.append("train.batch_size >= 1, train.epochs >= 0 and train.learning_rate > 0 required")
        if self.train.grad_clip is not None and self.train.grad_clip <= 0:
            problems.append(f"train.grad_clip must be > 0 when set, got {self.train.grad_clip}")
        if problems:
            raise ConfigError("Invalid config: " + "; ".join(problems))
        return self

    # ---- serialization ----------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        return _build(cls, data, prefix="")

    def digest(self) -> str:
        """Short stable hash of the config, for journals."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode('utf-8')
        return hashlib.sha256(blob).hexdigest()[:12]

    def get(self, dotted: str) -> Any:
        node: Any = self
        for part in dotted.split('.'):
            if not dataclasses.is_dataclass(node) or part not in {f.name for f in dataclasses.fields(node)}:
                raise ConfigError(f"Unknown config key '{dotted}'")
            node = getattr(node, part)
        return node

    def with_overrides(self, overrides: Mapping[str, Any], logger: Optional[logging.Logger] = None,
                       source: str = "override") -> "ModelConfig":
        """
        Return a copy with dotted keys replaced. String values are parsed as
        JSON when possible ("0.5" -> 0.5, "true" -> True, "null" -> None).
        Every changed key is logged.
        """
        logger = logger or logging.getLogger(__name__)
        data = self.to_dict()
        for dotted, value in overrides.items():
            old = self.get(dotted)
            if dataclasses.is_dataclass(old):
                raise ConfigError(f"Config key '{dotted}' is a section, not a value")
            new = _coerce(dotted, _parse(value), old)
            parts = dotted.split('.')
            target = data
            for part in parts[:-1]:
                target = target[part]
            target[parts[-1]] = new
            if new != old:
                logger.info(f"Config {source}: {dotted} {old!r} -> {new!r}")
        return ModelConfig.from_dict(data)


def _parse(value: Any) -> Any:
    if isinstance(value, str):
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return value
    return value


def _coerce(key: str, value: Any, old: Any) -> Any:
    if value is None or old is None:
        return value
    if isinstance(old, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"Config key '{key}' expects true/false, got {value!r}")
        return value
    if isinstance(old, int) and not isinstance(old, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(f"Config key '{key}' expects an integer, got {value!r}")
        return int(value)
    if isinstance(old, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Config key '{key}' expects a number, got {value!r}")
        return float(value)
    if isinstance(old, str) and not isinstance(value, str):
        raise ConfigError(f"Config key '{key}' expects a string, got {value!r}")
    return value


def _build(cls, data: Mapping[str, Any], prefix: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"Config section '{prefix or 'model'}' must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = f" in '{prefix.rstrip('.')}'" if prefix else ""
        raise ConfigError(f"Unknown config key(s){where}: {', '.join(unknown)}")

    defaults = cls()
    kwargs = {}
    for name, value in data.items():
        default = getattr(defaults, name)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, prefix=f"{prefix}{name}.")
        else:
            kwargs[name] = _coerce(f"{prefix}{name}", value, default)
    return cls(**kwargs)
