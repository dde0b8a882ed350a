from .csv_data_handler import (
    CSVDataHandler, ChannelStats, Series, SplitSpec, destandardize, load_csv, standardize,
)
from .windows import WindowDataset, make_windows, split_windows
from .synthetic import SYNTHETIC_KINDS, gen_synthetic, lipschitz_bound, lipschitz_scan

__all__ = [
    'CSVDataHandler', 'ChannelStats', 'Series', 'SplitSpec', 'destandardize', 'load_csv',
    'standardize', 'WindowDataset', 'make_windows', 'split_windows', 'SYNTHETIC_KINDS',
    'gen_synthetic', 'lipschitz_bound', 'lipschitz_scan',
]
