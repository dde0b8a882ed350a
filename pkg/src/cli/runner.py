"""
Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data, checkpoint or file-system error,
3 numeric failure (non-finite values, failed gradient or bound check).
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from src.cli import commands
from src.data.synthetic import SYNTHETIC_KINDS
from src.exceptions import AmdError, ConfigError, DataError, NumericError
from src.model.presets import PRESETS

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit code 1."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', help='Run config JSON file')
    p.add_argument('--preset', choices=sorted(PRESETS), help='Dataset preset')
    p.add_argument('--data', help='CSV file (overrides data.path)')
    p.add_argument('--no-header', dest='no_header', action='store_const', const=True, default=None,
                   help='CSV has no header row')
    p.add_argument('--date-column', type=int, default=None, help='Index of a date column to drop')
    p.add_argument('--set', action='append', metavar='KEY=VALUE', help='Config override, e.g. ddi.beta=0.5')
    p.add_argument('--seed', type=int, default=None, help='Overrides train.seed')
    p.add_argument('--seeds', type=int, default=1, help='Repeat over N consecutive seeds')
    p.add_argument('--journal', help='Run journal file or directory')


def _add_checkpoint_input_args(p: argparse.ArgumentParser, data_flag: str = '--data') -> None:
    p.add_argument('--ckpt', required=True, help='Checkpoint file')
    p.add_argument(data_flag, dest='data', required=True, help='CSV file')
    p.add_argument('--no-header', dest='no_header', action='store_true', help='CSV has no header row')
    p.add_argument('--date-column', type=int, default=None, help='Index of a date column to drop')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='amd', description='AMD multi-scale forecaster: training, evaluation and checks')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('train', help='Train a model and save a checkpoint')
    _add_experiment_args(p)
    p.add_argument('--out', help='Checkpoint path (overrides output.checkpoint)')
    p.set_defaults(func=commands.cmd_train)

    p = sub.add_parser('evaluate', help='MSE/MAE of a checkpoint on a CSV')
    _add_checkpoint_input_args(p)
    p.add_argument('--horizon', type=int, action='append', help='Report the first H steps (repeatable)')
    p.add_argument('--partition', choices=['all', 'train', 'val', 'test'], default='all')
    p.add_argument('--stride', type=int, default=1)
    p.set_defaults(func=commands.cmd_evaluate)

    p = sub.add_parser('predict', help='Forecast the next T steps after the last L rows')
    _add_checkpoint_input_args(p, data_flag='--input')
    p.add_argument('--out', required=True, help='Output CSV')
    p.set_defaults(func=commands.cmd_predict)

    p = sub.add_parser('ablate', help='Train the base config and ablated variants side by side')
    _add_experiment_args(p)
    p.add_argument('--mode', action='append', required=True,
                   help='average | sparse | no-ddi | no-mdm | no-ams | beta=<v> | lambda1=0 (repeatable)')
    p.set_defaults(func=commands.cmd_ablate)

    p = sub.add_parser('sweep', help='Train one model per value of a config key')
    _add_experiment_args(p)
    p.add_argument('--param', required=True, help='Dotted config key, e.g. mdm.num_scales')
    p.add_argument('--values', required=True, help='Comma-separated values')
    p.set_defaults(func=commands.cmd_sweep)

    p = sub.add_parser('gates', help='Per-window, per-channel selector weights as CSV')
    _add_checkpoint_input_args(p)
    p.add_argument('--out', required=True, help='Output CSV')
    p.add_argument('--stride', type=int, default=1)
    p.set_defaults(func=commands.cmd_gates)

    p = sub.add_parser('theorem-check', help='Property check of the linear error bound')
    p.add_argument('--period', type=int, default=24)
    p.add_argument('--length', type=int, default=96)
    p.add_argument('--horizon', type=int, default=48)
    p.add_argument('--trials', type=int, default=100)
    p.add_argument('--seed', type=int, default=7)
    p.add_argument('--kind', choices=SYNTHETIC_KINDS, default='sine')
    p.add_argument('--amplitude', type=float, default=1.0)
    p.add_argument('--slope', type=float, default=0.0)
    p.add_argument('--rate', type=int, default=2, help='Downsampling rate d')
    p.add_argument('--depth', type=int, default=3, help='Number of pooling steps')
    p.add_argument('--weight-bound', type=float, default=None,
                   help='Mixing weights drawn from U(-b, b); default 1/(length + horizon)')
    p.add_argument('--threads', type=int, default=None, help='Worker threads (default: AMD_THREADS or 1)')
    p.add_argument('--verbose-trials', action='store_true', help='Include per-trial results')
    p.add_argument('--out', help='Write the report here instead of stdout')
    p.set_defaults(func=commands.cmd_theorem_check)

    p = sub.add_parser('gradcheck', help='Finite-difference check of every block')
    p.add_argument('--full-model', action='store_true', help='Also check the full toy model')
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=commands.cmd_gradcheck)

    p = sub.add_parser('synth', help='Write a synthetic series to CSV')
    p.add_argument('--kind', choices=SYNTHETIC_KINDS, required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--length', type=int, default=2000)
    p.add_argument('--channels', type=int, default=1)
    p.add_argument('--period', type=float, default=24.0)
    p.add_argument('--amplitude', type=float, default=1.0)
    p.add_argument('--slope', type=float, default=0.0)
    p.add_argument('--noise', type=float, default=0.0)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=commands.cmd_synth)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, dispatch, and map errors onto exit codes."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except ConfigError as e:
        return _fail(1, e)
    except DataError as e:
        return _fail(2, e)
    except NumericError as e:
        return _fail(3, e)
    except AmdError as e:
        return _fail(1, e)
    except OSError as e:
        return _fail(2, e)
    except ValueError as e:
        return _fail(1, e)


def _fail(code: int, error: Exception) -> int:
    if os.getenv('AMD_LOG_LEVEL', '').upper() == 'DEBUG':
        logger.exception(str(error))
    sys.stderr.write(f"error: {error}\n")
    return code
