"""
Sliding-window views over a Series.

A window starting at row s pairs input rows [s, s+L) with target rows
[s+L, s+L+T). Windows are read-only views; batches are copied out.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from src.data.csv_data_handler import Series, SplitSpec
from src.exceptions import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowDataset:
    source: Series
    L: int
    T: int
    stride: int
    index_range: Tuple[int, int]  # [start, end) over window start rows

    def __len__(self) -> int:
        start, end = self.index_range
        return max(0, (end - start + self.stride - 1) // self.stride)

    def start_of(self, i: int) -> int:
        if not 0 <= i < len(self):
            raise IndexError(f"window {i} out of range for {len(self)} windows")
        return self.index_range[0] + i * self.stride

    def __getitem__(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        s = self.start_of(i)
        v = self.source.values
        return v[s:s + self.L], v[s + self.L:s + self.L + self.T]

    def __iter__(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for i in range(len(self)):
            yield self[i]

    def batch(self, indices: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            (inputs (B, L, C), targets (B, T, C)) as fresh arrays
        """
        starts = np.array([self.start_of(int(i)) for i in indices], dtype=np.int64)
        v = self.source.values
        x = v[starts[:, None] + np.arange(self.L)[None, :]]
        y = v[starts[:, None] + self.L + np.arange(self.T)[None, :]]
        return x, y

    @property
    def target_rows(self) -> Tuple[int, int]:
        """Half-open row range covered by the targets of all windows."""
        if len(self) == 0:
            return (self.index_range[0] + self.L, self.index_range[0] + self.L)
        last = self.start_of(len(self) - 1)
        return (self.index_range[0] + self.L, last + self.L + self.T)


def make_windows(
    series: Series,
    L: int,
    T: int,
    stride: int = 1,
    partition: Tuple[int, int] = None,
    borrow_lookback: bool = False,
) -> WindowDataset:
    """
    Build windows whose rows stay inside `partition`.

    With borrow_lookback, inputs may start up to L rows before the partition
    (in the preceding one) while targets stay inside it.

    Window count = floor((partition_len - L - T) / stride) + 1, where
    partition_len includes any borrowed look-back rows.
    """
    if L < 1 or T < 1 or stride < 1:
        raise DataError(f"L, T and stride must be positive, got L={L}, T={T}, stride={stride}")
    start, end = partition if partition is not None else (0, series.num_timesteps)
    if not 0 <= start <= end <= series.num_timesteps:
        raise DataError(f"Partition [{start}, {end}) outside series of {series.num_timesteps} rows")
    if borrow_lookback:
        start = max(0, start - L)

    length = end - start
    if length < L + T:
        raise DataError(f"Partition of {length} rows too short: need at least L + T = {L + T} rows")

    count = (length - L - T) // stride + 1
    dataset = WindowDataset(source=series, L=L, T=T, stride=stride,
                            index_range=(start, start + (count - 1) * stride + 1))
    logger.debug(f"{count} windows over rows [{start}, {end}) (L={L}, T={T}, stride={stride})")
    return dataset


def split_windows(
    series: Series,
    L: int,
    T: int,
    split: Optional[SplitSpec] = None,
    stride: int = 1,
    ranges: Optional[Dict[str, Tuple[int, int]]] = None,
) -> Dict[str, WindowDataset]:
    """
    Train windows stay inside train; val/test borrow look-back from the partition before them.
    Pass `ranges` when the split was already resolved.
    """
    if ranges is None:
        ranges = (split or SplitSpec()).resolve(series.num_timesteps, logger=logger)
    datasets = {
        'train': make_windows(series, L, T, stride, ranges['train']),
        'val': make_windows(series, L, T, stride, ranges['val'], borrow_lookback=True),
        'test': make_windows(series, L, T, stride, ranges['test'], borrow_lookback=True),
    }
    logger.info(
        "Windows: " + ", ".join(
            f"{k}={len(v)} (rows [{ranges[k][0]}, {ranges[k][1]}))" for k, v in datasets.items()
        )
    )
    return datasets
