"""
Subcommand implementations.

Each `cmd_*` takes the parsed argparse namespace and returns an exit code.
Machine-readable results go to stdout (JSON) or to the requested file
(CSV); progress and diagnostics go through the logger.
"""

import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.autograd import Tensor, grad_check, no_grad
from src.autograd import functions as F
from src.data.csv_data_handler import CSVDataHandler, ChannelStats, Series, SplitSpec
from src.data.synthetic import gen_synthetic
from src.data.windows import WindowDataset, make_windows, split_windows
from src.exceptions import ConfigError, DataError
from src.model.amd import AmdModel
from src.model.config import ModelConfig
from src.model.ddi import DDIBlock
from src.model.layers import ParameterRegistry
from src.model.mdm import MDM
from src.model.revin import RevIN
from src.model.ams import TPSelector
from src.cli.run_config import RunConfigFile, flatten, load_run_config
from src.theory.theorem_check import SmoothSeriesSpec, theorem1_bound_check
from src.training.checkpoint import load_checkpoint, save_checkpoint
from src.training.losses import pred_loss, selector_balance_loss, total_loss
from src.training.run_journal import RunJournal, summarize_metrics
from src.training.trainer import evaluate_horizons, train

logger = logging.getLogger(__name__)

PRIMITIVE_TOL = 1e-5
FULL_MODEL_TOL = 1e-4

ABLATIONS: Dict[str, Dict[str, Any]] = {
    'average': {'ams.mode': 'average'},
    'sparse': {'ams.mode': 'sparse'},
    'no-ddi': {'no_ddi': True},
    'no-mdm': {'no_mdm': True},
    'no-ams': {'ams.num_predictors': 1, 'ams.top_k': 1},
}
_ABLATION_KEYS = {'beta': 'ddi.beta', 'lambda1': 'loss.lambda1'}


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------
def emit_json(payload: Any, path: Optional[str] = None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if path:
        Path(path).write_text(text + "\n", encoding='utf-8')
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text + "\n")


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def resolve_threads(requested: Optional[int]) -> int:
    if requested:
        return max(1, int(requested))
    env = os.getenv('AMD_THREADS')
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"AMD_THREADS must be an integer, got {env!r}") from None
    return 1


def parse_overrides(pairs: Optional[Sequence[str]]) -> Dict[str, str]:
    """["ddi.beta=0.5", ...] -> {"ddi.beta": "0.5"}"""
    out: Dict[str, str] = {}
    for pair in pairs or ():
        key, sep, value = pair.partition('=')
        if not sep or not key:
            raise ConfigError(f"override '{pair}' must look like KEY=VALUE")
        out[key.strip()] = value.strip()
    return out


def ablation_overrides(mode: str) -> Dict[str, Any]:
    """average | sparse | no-ddi | no-mdm | no-ams | beta=<v> | lambda1=<v> | <dotted.key>=<v>"""
    if mode in ABLATIONS:
        return dict(ABLATIONS[mode])
    key, sep, value = mode.partition('=')
    if sep and key:
        return {_ABLATION_KEYS.get(key, key): value}
    raise ConfigError(f"Unknown ablation '{mode}' (expected {', '.join(ABLATIONS)}, beta=<v> or lambda1=<v>)")


def fit_channels(config: ModelConfig, series: Series, explicit: bool) -> ModelConfig:
    """Adopt the data's channel count unless the run fixed it (preset or explicit key)."""
    if series.num_channels == config.channels:
        return config
    if explicit:
        raise DataError(f"channel count mismatch: config expects {config.channels} channels, "
                        f"data has {series.num_channels}")
    return config.with_overrides({'channels': series.num_channels}, logger=logger, source="data")


@dataclass
class PreparedData:
    """Standardized series plus resolved split; windows are cut per config."""
    raw: Series
    series: Series
    stats: ChannelStats
    split: SplitSpec
    ranges: Dict[str, Tuple[int, int]]
    stride: int = 1

    def windows(self, config: ModelConfig) -> Dict[str, WindowDataset]:
        return split_windows(self.series, config.seq_len, config.pred_len,
                             stride=self.stride, ranges=self.ranges)

    def metadata(self) -> Dict[str, Any]:
        return {
            'data_stats': self.stats.to_dict(),
            'split': self.split.to_dict(),
            'ranges': {k: list(v) for k, v in self.ranges.items()},
            'channel_names': list(self.raw.channel_names),
        }


def prepare_data(series: Series, split: SplitSpec, stride: int = 1) -> PreparedData:
    handler = CSVDataHandler(logger=logger)
    ranges = split.resolve(series.num_timesteps, logger=logger)
    logger.info(f"Split {split.mode}: " + ", ".join(f"{k}=[{a}, {b})" for k, (a, b) in ranges.items()))
    standardized, stats = handler.standardize(series, ranges['train'])
    return PreparedData(raw=series, series=standardized, stats=stats, split=split, ranges=ranges, stride=stride)


def _load_series(path: Optional[str], has_header: bool, date_column: Optional[int]) -> Series:
    if not path:
        raise ConfigError("no data file: pass --data or set data.path in the config file")
    return CSVDataHandler(logger=logger).load_csv(path, has_header=has_header, date_column=date_column)


def _data_options(args, rc: RunConfigFile) -> Tuple[Optional[str], bool, Optional[int]]:
    path = getattr(args, 'data', None) or rc.data.path
    has_header = rc.data.has_header if getattr(args, 'no_header', None) is None else not args.no_header
    date_column = getattr(args, 'date_column', None)
    if date_column is None:
        date_column = rc.data.date_column
    return path, has_header, date_column


def _experiment_setup(args) -> Tuple[RunConfigFile, ModelConfig, PreparedData]:
    """Config file + preset + overrides + data, as shared by train / ablate / sweep."""
    rc = load_run_config(args.config)
    overrides: Dict[str, Any] = parse_overrides(getattr(args, 'set', None))
    if getattr(args, 'seed', None) is not None:
        overrides['train.seed'] = args.seed
    config = rc.model_config(preset=args.preset, overrides=overrides, logger=logger)

    path, has_header, date_column = _data_options(args, rc)
    series = _load_series(path, has_header, date_column)
    explicit = bool(args.preset or rc.preset) or 'channels' in flatten(rc.model) or 'channels' in overrides
    config = fit_channels(config, series, explicit)
    prepared = prepare_data(series, rc.split_spec(args.preset), stride=rc.data.stride)
    return rc, config, prepared


def _seed_list(config: ModelConfig, count: int) -> List[int]:
    if count < 1:
        raise ConfigError(f"--seeds must be >= 1, got {count}")
    return [config.train.seed + i for i in range(count)]


def train_variant(config: ModelConfig, prepared: PreparedData) -> Tuple[AmdModel, Dict]:
    model = AmdModel(config, logger=logger)
    report = train(model, prepared.windows(config), config, logger=logger)
    return model, report.to_dict()


def run_variants(variants: Sequence[Tuple[str, Mapping[str, Any]]], base: ModelConfig,
                 prepared: PreparedData, seeds: int, journal: Optional[RunJournal]) -> List[Dict]:
    """Train each (label, overrides) variant over `seeds` seeds; one result row per variant."""
    rows = []
    for label, overrides in variants:
        config = base.with_overrides(overrides, logger=logger, source=label).validate()
        tests, vals, params = [], [], 0
        for seed in _seed_list(config, seeds):
            seeded = config.with_overrides({'train.seed': seed}, logger=logger, source="seed")
            _, report = train_variant(seeded, prepared)
            if journal is not None:
                journal.log_run(report, seeded.to_dict(), seeded.digest(), label=label)
            tests.append(report['test'])
            vals.append(report['best_val_mse'])
            params = report['num_parameters']
        row = {
            'variant': label,
            'overrides': dict(overrides),
            'num_parameters': params,
            'seeds': seeds,
            'val_mse': float(np.mean(vals)),
            'test_mse': float(np.mean([t['mse'] for t in tests])),
            'test_mae': float(np.mean([t['mae'] for t in tests])),
        }
        if seeds > 1:
            row['summary'] = summarize_metrics(tests)
        rows.append(row)
    return rows


def _seed_path(path: Path, seed: int, multi: bool) -> Path:
    return path.with_name(f"{path.stem}-seed{seed}{path.suffix}") if multi else path


def _load_eval_inputs(args) -> Tuple[AmdModel, Series, np.ndarray]:
    """Checkpoint, raw CSV and its values standardized with the checkpoint's training statistics."""
    model = load_checkpoint(args.ckpt)
    series = CSVDataHandler(logger=logger).load_csv(
        args.data, has_header=not args.no_header, date_column=args.date_column)
    if series.num_channels != model.config.channels:
        raise DataError(f"channel count mismatch: checkpoint expects {model.config.channels} channels, "
                        f"{args.data} has {series.num_channels}")
    if 'data_stats' not in model.metadata:
        raise DataError(f"{args.ckpt} carries no standardization statistics")
    stats = ChannelStats.from_dict(model.metadata['data_stats'])
    return model, series, CSVDataHandler.apply_stats(series.values, stats)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_train(args) -> int:
    rc, config, prepared = _experiment_setup(args)
    out = Path(args.out or rc.output.checkpoint or "amd.ckpt")
    journal = RunJournal(args.journal or rc.output.journal or out.parent, logger=logger)
    seeds = _seed_list(config, args.seeds)

    runs = []
    for seed in seeds:
        seeded = config.with_overrides({'train.seed': seed}, logger=logger, source="seed")
        model, report = train_variant(seeded, prepared)
        path = _seed_path(out, seed, len(seeds) > 1)
        save_checkpoint(model, str(path), metadata={
            **prepared.metadata(),
            'epoch': report['best_epoch'],
            'best_val_mse': report['best_val_mse'],
            'rng_state': report['rng_state'],
        })
        journal.log_run(report, seeded.to_dict(), seeded.digest(), label="train", checkpoint=str(path))
        report = {k: v for k, v in report.items() if k != 'rng_state'}
        runs.append({'checkpoint': str(path), 'seed': seed, **report})

    if len(runs) == 1:
        emit_json(runs[0])
    else:
        emit_json({'runs': runs, 'summary': summarize_metrics([r['test'] for r in runs])})
    return 0


def cmd_evaluate(args) -> int:
    model, series, values = _load_eval_inputs(args)
    cfg = model.config
    standardized = series.with_values(values)
    if args.partition == 'all':
        dataset = make_windows(standardized, cfg.seq_len, cfg.pred_len, args.stride)
    else:
        ranges = model.metadata.get('ranges')
        if not ranges:
            raise DataError(f"{args.ckpt} carries no split; use --partition all")
        a, b = ranges[args.partition]
        if b > series.num_timesteps:
            raise DataError(f"partition {args.partition} ends at row {b}, {args.data} has {series.num_timesteps}")
        dataset = make_windows(standardized, cfg.seq_len, cfg.pred_len, args.stride, (a, b),
                               borrow_lookback=args.partition != 'train')
    horizons = args.horizon or [cfg.pred_len]
    results = evaluate_horizons(model, dataset, horizons)
    emit_json({
        'checkpoint': args.ckpt,
        'data': args.data,
        'partition': args.partition,
        'windows': len(dataset),
        'horizons': [{'horizon': h, **metrics} for h, metrics in results.items()],
    })
    return 0


def cmd_predict(args) -> int:
    model, series, values = _load_eval_inputs(args)
    cfg = model.config
    if series.num_timesteps < cfg.seq_len:
        raise DataError(f"{args.data} has {series.num_timesteps} rows, prediction needs the last {cfg.seq_len}")
    with no_grad():
        y_hat, _ = model.forward(values[None, -cfg.seq_len:, :], training=False)
    stats = ChannelStats.from_dict(model.metadata['data_stats'])
    forecast = CSVDataHandler.destandardize(y_hat.data[0], stats)
    names = model.metadata.get('channel_names') or series.channel_names
    CSVDataHandler(logger=logger).write_csv(args.out, forecast, names)
    return 0


def cmd_gates(args) -> int:
    model, series, values = _load_eval_inputs(args)
    cfg = model.config
    dataset = make_windows(series.with_values(values), cfg.seq_len, cfg.pred_len, args.stride)
    m = cfg.ams.num_predictors
    records = []
    with no_grad():
        for start in range(0, len(dataset), 256):
            index = range(start, min(start + 256, len(dataset)))
            X, _ = dataset.batch(index)
            _, S = model.forward(X, training=False)
            for b, window in enumerate(index):
                for c in range(cfg.channels):
                    records.append([window, dataset.start_of(window), c, series.channel_names[c],
                                    *S.data[b, c].tolist()])
    columns = ['window', 'start_row', 'channel', 'channel_name'] + [f"s{j}" for j in range(m)]
    pd.DataFrame(records, columns=columns).to_csv(args.out, index=False, float_format='%.17g')
    logger.info(f"Wrote {len(records)} gate rows to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    _, config, prepared = _experiment_setup(args)
    journal = RunJournal(args.journal, logger=logger) if args.journal else None
    variants: List[Tuple[str, Mapping[str, Any]]] = [(config.ams.mode, {})]
    variants += [(mode, ablation_overrides(mode)) for mode in args.mode]
    rows = run_variants(variants, config, prepared, args.seeds, journal)
    emit_json({'config_digest': config.digest(), 'rows': rows})
    return 0


def cmd_sweep(args) -> int:
    _, config, prepared = _experiment_setup(args)
    config.get(args.param)
    journal = RunJournal(args.journal, logger=logger) if args.journal else None
    values = [v.strip() for v in args.values.split(',') if v.strip()]
    if not values:
        raise ConfigError("--values needs at least one value")
    variants = [(f"{args.param}={v}", {args.param: v}) for v in values]
    rows = run_variants(variants, config, prepared, args.seeds, journal)
    emit_json({'param': args.param, 'config_digest': config.digest(), 'rows': rows})
    return 0


def cmd_theorem_check(args) -> int:
    spec = SmoothSeriesSpec(kind=args.kind, period=args.period, length=args.length, rate=args.rate,
                            depth=args.depth, amplitude=args.amplitude, slope=args.slope)
    report = theorem1_bound_check(spec, args.horizon, trials=args.trials, seed=args.seed,
                                  threads=resolve_threads(args.threads), weight_bound=args.weight_bound)
    emit_json(report.to_dict(include_trials=args.verbose_trials), args.out)
    if not report.passed:
        first = report.violations[0]
        logger.error(f"{len(report.violations)} bound violations; first: trial {first.trial}, "
                     f"t={first.t}, lhs {first.lhs:.6g} > rhs {first.rhs:.6g}")
        return 3
    return 0


def cmd_gradcheck(args) -> int:
    errors = run_gradient_checks(seed=args.seed, full_model=args.full_model)
    limits = {name: FULL_MODEL_TOL if name == 'full_model' else PRIMITIVE_TOL for name in errors}
    failed = sorted(name for name, err in errors.items() if not err < limits[name])
    emit_json({'max_relative_error': errors, 'tolerance': limits, 'failed': failed, 'passed': not failed})
    if failed:
        logger.error(f"Gradient check failed for: {', '.join(failed)}")
        return 3
    return 0


def cmd_synth(args) -> int:
    series = gen_synthetic(args.kind, args.length, C=args.channels, period=args.period,
                           amplitude=args.amplitude, slope=args.slope, noise=args.noise, seed=args.seed)
    CSVDataHandler(logger=logger).write_csv(args.out, series.values, series.channel_names)
    return 0


# ---------------------------------------------------------------------------
# gradient-check suite
# ---------------------------------------------------------------------------
def toy_config(**overrides: Any) -> ModelConfig:
    """L=16, T=4, C=2, P=4, two scales, two predictors, k=1, small hidden sizes."""
    base = ModelConfig.from_dict({
        'seq_len': 16, 'pred_len': 4, 'channels': 2,
        'mdm': {'num_scales': 2},
        'ddi': {'patch_len': 4, 'd_model': 8},
        'ams': {'num_predictors': 2, 'top_k': 1, 'hidden': 8, 'selector_hidden': 4},
        'train': {'batch_size': 32, 'seed': 0},
    })
    return base.with_overrides(overrides) if overrides else base


def run_gradient_checks(seed: int = 0, full_model: bool = False) -> Dict[str, float]:
    """Max relative finite-difference error per primitive and block."""
    rng = np.random.default_rng(seed)

    def rand(*shape, low=-1.0, high=1.0):
        return Tensor(rng.uniform(low, high, size=shape))

    w = rng.uniform(-1, 1, size=(3, 5))
    checks = {
        'matmul': lambda: grad_check(F.matmul, [rand(3, 4), rand(4, 5)]),
        'elementwise': lambda: grad_check(lambda a, b: F.div(F.mul(F.sub(a, b), F.add(a, b)), F.add(F.square(b), 1.0)),
                                          [rand(3, 5), rand(3, 5)]),
        'softmax': lambda: grad_check(lambda a: F.mul(F.softmax(a), w), [rand(3, 5)]),
        'softplus_gelu': lambda: grad_check(lambda a: F.gelu(F.softplus(a)), [rand(3, 5)]),
        'exp_log_sqrt': lambda: grad_check(lambda a: F.log(F.add(F.exp(a), F.sqrt(F.add(a, 2.0)))), [rand(3, 5)]),
        'mean_var': lambda: grad_check(lambda a: F.add(F.var(a, axis=-1), F.square(F.mean(a, axis=-1))), [rand(3, 5)]),
        'shape_ops': lambda: grad_check(
            lambda a: F.mul(F.concat([F.transpose(F.reshape(a, (5, 3))), F.slice_(a, (slice(None), slice(1, 3)))], axis=-1), 1.5),
            [rand(3, 5)]),
        'gather': lambda: grad_check(lambda a: F.mul(F.gather(a, np.array([[4, 0], [1, 1], [3, 2]]), axis=-1), w[:, :2]),
                                     [rand(3, 5)]),
        'avg_pool1d': lambda: grad_check(lambda a: F.mul(F.avg_pool1d(a, 2), w[:, :3]), [rand(3, 7)]),
        'layer_norm': lambda: grad_check(F.layer_norm, [rand(2, 8), rand(8), rand(8)]),
    }

    def revin_check():
        registry = ParameterRegistry()
        revin = RevIN(registry, 3)
        revin.affine_weight.data[...] = rng.uniform(0.5, 1.5, 3)
        x, y = rand(2, 6, 3), rng.uniform(-1, 1, size=(2, 6, 3))

        def fn(xx, *_):
            out, state = revin.norm(xx)
            return F.mul(revin.denorm(F.mul(out, 2.0), state), y)
        return grad_check(fn, [x, revin.affine_weight, revin.affine_bias])

    def mdm_check():
        registry = ParameterRegistry()
        mdm = MDM(registry, 8, num_scales=3, rate=2, rng=rng)
        y = rng.uniform(-1, 1, size=(2, 8))
        return grad_check(lambda x, *_: F.mul(mdm(x), y), [rand(2, 8)] + [t for _, t in registry.items()])

    def ddi_check():
        registry = ParameterRegistry()
        block = DDIBlock(registry, "ddi.0", 8, 2, 4, beta=0.5, d_model=4, rng=rng)
        y = rng.uniform(-1, 1, size=(2, 8))
        return grad_check(lambda u, *_: F.mul(block(u), y), [rand(2, 8)] + [t for _, t in registry.items()])

    def selector_check():
        registry = ParameterRegistry()
        sel = TPSelector(registry, 8, 4, 2, 1.0, hidden=4, rng=rng)
        sel.w_noise.data[...] = rng.uniform(-0.5, 0.5, (4, 4))
        y = rng.uniform(-1, 1, size=(3, 4))

        def fn(u, *_):
            return F.add(F.mul(sel(u, rng=np.random.default_rng(1), training=True), y),
                         selector_balance_loss(sel(u, rng=np.random.default_rng(1), training=True)))
        return grad_check(fn, [rand(3, 8)] + [t for _, t in registry.items()])

    checks.update(revin=revin_check, mdm=mdm_check, ddi=ddi_check, selector=selector_check)

    if full_model:
        def model_check():
            config = toy_config()
            model = AmdModel(config, rng=np.random.default_rng(seed))
            X = rng.standard_normal((2, config.seq_len, config.channels))
            Y = rng.standard_normal((2, config.pred_len, config.channels))

            def fn(*_):
                y_hat, S = model.forward(X, rng=np.random.default_rng(seed), training=True)
                return total_loss(pred_loss(y_hat, Y), selector_balance_loss(S), config.loss)
            return grad_check(fn, [t for _, t in model.registry.items()])
        checks['full_model'] = model_check

    errors = {}
    for name, check in checks.items():
        errors[name] = float(check())
        logger.info(f"grad_check {name}: max relative error {errors[name]:.3e}")
    return errors
