"""
CSV Data Handler for multichannel series

Loads comma-separated numeric series (optional header row, optional date
column), standardizes channels with train-partition statistics, and resolves
chronological train/val/test splits.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from src.exceptions import DataError


@dataclass(frozen=True)
class Series:
    """values: (num_timesteps, C) float64; timestamps are carried but unused."""
    values: np.ndarray
    channel_names: List[str]
    timestamps: Optional[List[str]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] < 1:
            raise DataError(f"Series needs a (timesteps, C>=1) matrix, got shape {values.shape}")
        if np.isnan(values).any():
            raise DataError("Series contains NaN values")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def num_timesteps(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "Series":
        return replace(self, values=values)


@dataclass
class ChannelStats:
    """Per-channel standardization statistics (std already clamped to 1 for constants)."""
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> Dict:
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}

    @classmethod
    def from_dict(cls, data: Dict) -> "ChannelStats":
        return cls(mean=np.asarray(data['mean'], dtype=np.float64),
                   std=np.asarray(data['std'], dtype=np.float64))


@dataclass(frozen=True)
class SplitSpec:
    """
    Chronological split.

    mode 'ratio': train/val/test are fractions of the whole series
    (default 0.7/0.1/0.2, test takes the remainder).
    mode 'fixed': train/val/test are row counts, taken from the start.
    """
    mode: str = 'ratio'
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    def resolve(self, total: int, logger: Optional[logging.Logger] = None) -> Dict[str, Tuple[int, int]]:
        """
        Returns:
            {'train': (0, a), 'val': (a, b), 'test': (b, c)} half-open row ranges
        """
        logger = logger or logging.getLogger(__name__)
        if self.mode == 'ratio':
            if min(self.train, self.val, self.test) < 0 or self.train + self.val + self.test > 1.0 + 1e-9:
                raise DataError(f"Invalid split fractions {self.train}/{self.val}/{self.test}")
            a = int(total * self.train)
            b = a + int(total * self.val)
            c = total
        elif self.mode == 'fixed':
            counts = [int(self.train), int(self.val), int(self.test)]
            if min(counts) < 0:
                raise DataError(f"Split counts must be non-negative, got {counts}")
            if sum(counts) > total:
                raise DataError(f"Split counts {counts} need {sum(counts)} rows, series has {total}")
            a, b, c = counts[0], counts[0] + counts[1], sum(counts)
            if c < total:
                logger.warning(f"Fixed split uses {c} of {total} rows; trailing {total - c} rows ignored")
        else:
            raise DataError(f"Unknown split mode '{self.mode}' (expected ratio|fixed)")
        return {'train': (0, a), 'val': (a, b), 'test': (b, c)}

    def to_dict(self) -> Dict:
        return {'mode': self.mode, 'train': self.train, 'val': self.val, 'test': self.test}


class CSVDataHandler:
    """
    Import and prepare CSV series.

    Expected CSV format:
    - optional header row, optional leading date column (any string)
    - every other cell a finite float
    """

    def __init__(self, logger=None):
        self.logger = logger or logging.getLogger(__name__)

    def load_csv(
        self,
        filepath: str,
        has_header: bool = True,
        date_column: Optional[int] = None,
    ) -> Series:
        """
        Load a multichannel series from CSV.

        Args:
            filepath: Path to CSV file
            has_header: First row holds column names
            date_column: Index of a date column to drop (None = no date column)

        Returns:
            Series with columns in file order, date column removed
        """
        try:
            df = pd.read_csv(
                filepath,
                header=0 if has_header else None,
                dtype=str,
                keep_default_na=False,
                skipinitialspace=True,
                encoding='utf-8',
            )
        except FileNotFoundError as e:
            raise DataError(f"CSV not found: {filepath}") from e
        except pd.errors.ParserError as e:
            raise DataError(f"Ragged rows in {filepath}: {e}") from e
        except pd.errors.EmptyDataError as e:
            raise DataError(f"CSV is empty: {filepath}") from e

        first_data_line = 2 if has_header else 1

        # Short rows are padded with NaN by the parser
        ragged = df.isna().any(axis=1).to_numpy()
        if ragged.any():
            row = int(np.argmax(ragged))
            raise DataError(f"Ragged row at line {row + first_data_line} of {filepath}")

        timestamps = None
        if date_column is not None:
            if not 0 <= date_column < df.shape[1]:
                raise DataError(f"date_column {date_column} out of range for {df.shape[1]} columns")
            timestamps = df.iloc[:, date_column].tolist()
            df = df.drop(columns=df.columns[date_column])

        if df.shape[1] < 1:
            raise DataError(f"No value columns in {filepath}")

        numeric = df.apply(lambda col: pd.to_numeric(col.str.strip(), errors='coerce'))
        values = numeric.to_numpy(dtype=np.float64)
        bad = ~np.isfinite(values)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DataError(
                f"Unparsable cell {df.iat[r, c]!r} at line {r + first_data_line}, "
                f"column '{df.columns[c]}' of {filepath}"
            )

        names = [str(col).strip() for col in df.columns] if has_header else [f"ch{j}" for j in range(values.shape[1])]
        series = Series(values=values, channel_names=names, timestamps=timestamps)

        self.logger.info(f"Loaded CSV: {filepath} ({series.num_timesteps} rows, {series.num_channels} channels)")
        return series

    def standardize(self, series: Series, stats_from: Tuple[int, int]) -> Tuple[Series, ChannelStats]:
        """
        Z-score every row with per-channel statistics of rows [start, end).

        Channels with zero std over the stats range keep std 1.
        """
        start, end = stats_from
        if end <= start:
            raise DataError(f"Empty statistics range [{start}, {end})")
        if start < 0 or end > series.num_timesteps:
            raise DataError(f"Statistics range [{start}, {end}) outside series of {series.num_timesteps} rows")

        scaler = StandardScaler()
        scaler.fit(series.values[start:end])
        stats = ChannelStats(mean=scaler.mean_.copy(), std=scaler.scale_.copy())
        return series.with_values(scaler.transform(series.values)), stats

    @staticmethod
    def destandardize(values: np.ndarray, stats: ChannelStats) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * stats.std + stats.mean

    @staticmethod
    def apply_stats(values: np.ndarray, stats: ChannelStats) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - stats.mean) / stats.std

    def write_csv(self, filepath: str, values: np.ndarray, channel_names: List[str]) -> None:
        pd.DataFrame(np.asarray(values), columns=channel_names).to_csv(filepath, index=False, float_format='%.17g')
        self.logger.info(f"Wrote {len(values)} rows to {filepath}")


def standardize(series: Series, stats_from: Tuple[int, int]) -> Tuple[Series, ChannelStats]:
    return CSVDataHandler().standardize(series, stats_from)


def destandardize(values: np.ndarray, stats: ChannelStats) -> np.ndarray:
    return CSVDataHandler.destandardize(values, stats)


def load_csv(path: str, has_header: bool = True, date_column: Optional[int] = None) -> Series:
    return CSVDataHandler().load_csv(path, has_header=has_header, date_column=date_column)
