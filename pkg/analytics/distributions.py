"""Empirical CDF and fixed-width PDF series"""

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError, DataError

CDF = "cdf"
PDF = "pdf"
LINEAR = "linear"
LOG = "log"


class EmptyInput(DataError):
    """A distribution was requested over no values"""


class NonPositiveBin(ConfigError):
    """PDF bin width must be positive"""


@dataclass(frozen=True)
class DistributionSeries:
    """(x, y) points of a CDF (one per distinct value) or PDF (one per bin, x at the left edge)"""
    kind: str
    variable: str
    points: Tuple[Tuple[float, float], ...]
    bin_width: float = 0.0
    x_scale: str = LINEAR

    @property
    def xs(self) -> Tuple[float, ...]:
        return tuple(x for x, _ in self.points)

    @property
    def ys(self) -> Tuple[float, ...]:
        return tuple(y for _, y in self.points)


def build_cdf(values: Sequence[float], x_scale: str = LINEAR, variable: str = '') -> DistributionSeries:
    """
    Exact empirical CDF

    Raises:
        EmptyInput: no values
    """
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        raise EmptyInput(f"cannot build a CDF of {variable or 'an empty sample'}: no values")
    xs, counts = np.unique(data, return_counts=True)
    ys = np.cumsum(counts) / data.size
    return DistributionSeries(CDF, variable, tuple(zip(xs.tolist(), ys.tolist())), x_scale=x_scale)


def build_pdf(values: Sequence[float], bin_width: float = 3.0, variable: str = '') -> DistributionSeries:
    """
    Histogram mass over half-open bins [k·w, (k+1)·w) from 0 to the maximum

    Raises:
        EmptyInput: no values
        NonPositiveBin: bin_width <= 0
    """
    if not bin_width > 0:
        raise NonPositiveBin(f"bin width must be positive, got {bin_width}")
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        raise EmptyInput(f"cannot build a PDF of {variable or 'an empty sample'}: no values")
    bins = np.floor_divide(data, bin_width).astype(np.int64)
    counts = np.bincount(bins)
    ys = counts / data.size
    xs = np.arange(counts.size) * bin_width
    return DistributionSeries(PDF, variable, tuple(zip(xs.tolist(), ys.tolist())), bin_width=bin_width)


def cdf_at(series: DistributionSeries, x: float) -> float:
    """F(x) of a CDF series: share of values <= x"""
    xs = np.asarray(series.xs)
    i = int(np.searchsorted(xs, x, side='right'))
    return series.points[i - 1][1] if i else 0.0


def volume_share(flows: Iterable, predicate: Callable) -> float:
    """Share of total bytes carried by flows matching `predicate` (0.0 for no bytes)"""
    total = selected = 0
    for flow in flows:
        total += flow.bytes
        if predicate(flow):
            selected += flow.bytes
    return selected / total if total else 0.0
