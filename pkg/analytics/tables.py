"""Percent tables with half-up rounding"""

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from utils.errors import DataError

CENT = Decimal('0.01')

Counts = Mapping[str, Union[int, Tuple[int, int], Tuple[int, int, int]]]


class EmptyUniverse(DataError):
    """Every count of a percent table is zero"""


def percent(part: int, total: int) -> Decimal:
    """100·part/total rounded half-up to 2 decimals; 0.00 when total is 0"""
    if total == 0:
        return Decimal('0.00')
    return (Decimal(100 * part) / Decimal(total)).quantize(CENT, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class PercentRow:
    label: str
    count: int
    byte_volume: int
    percent_by_count: Decimal
    percent_by_bytes: Decimal
    secondary_count: Optional[int] = None
    percent_by_secondary: Optional[Decimal] = None


@dataclass(frozen=True)
class PercentTable:
    """
    Rows of (label, count, bytes, %count, %bytes[, secondary, %secondary])

    Percentages are rounded per row, so a column may miss 100.00 by a
    rounding step per row.
    """
    title: str
    rows: Tuple[PercentRow, ...]
    count_label: str = "packets"
    secondary_label: Optional[str] = None

    @property
    def total_count(self) -> int:
        return sum(r.count for r in self.rows)

    @property
    def total_bytes(self) -> int:
        return sum(r.byte_volume for r in self.rows)

    def as_dict(self) -> Dict[str, Decimal]:
        return {r.label: r.percent_by_count for r in self.rows}

    def row(self, label: str) -> PercentRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def header(self) -> List[str]:
        cols = ['label', self.count_label, 'bytes', f'percent_{self.count_label}', 'percent_bytes']
        if self.secondary_label:
            cols += [self.secondary_label, f'percent_{self.secondary_label}']
        return cols

    def csv_rows(self) -> List[List[str]]:
        out = []
        for r in self.rows:
            row = [r.label, str(r.count), str(r.byte_volume), str(r.percent_by_count), str(r.percent_by_bytes)]
            if self.secondary_label:
                row += [str(r.secondary_count or 0), str(r.percent_by_secondary or Decimal('0.00'))]
            out.append(row)
        return out

    def render_text(self) -> str:
        """Aligned plain-text rendering with a total line"""
        header = self.header()
        body = self.csv_rows()
        total = ['Total', str(self.total_count), str(self.total_bytes),
                 str(sum((r.percent_by_count for r in self.rows), Decimal('0.00'))),
                 str(sum((r.percent_by_bytes for r in self.rows), Decimal('0.00')))]
        if self.secondary_label:
            total += [str(sum(r.secondary_count or 0 for r in self.rows)),
                      str(sum((r.percent_by_secondary or Decimal('0.00') for r in self.rows), Decimal('0.00')))]
        grid = [header] + body + [total]
        widths = [max(len(row[i]) for row in grid) for i in range(len(header))]

        def fmt(row):
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            return '  '.join(cells).rstrip()

        rule = '-' * len(fmt(header))
        lines = [self.title, '=' * len(self.title), fmt(header), rule]
        lines += [fmt(row) for row in body]
        lines += [rule, fmt(total)]
        return '\n'.join(lines) + '\n'


def _unpack(value) -> Tuple[int, int, Optional[int]]:
    if isinstance(value, int):
        return value, 0, None
    if len(value) == 1:
        return value[0], 0, None
    if len(value) == 2:
        return value[0], value[1], None
    return value[0], value[1], value[2]


def percent_table(counts: Counts, title: str = '', count_label: str = 'packets',
                  secondary_label: Optional[str] = None, allow_empty: bool = False) -> PercentTable:
    """
    Build a percent table, keeping the label order of `counts`

    Args:
        counts: label -> count, (count, bytes) or (count, bytes, secondary count)
        title: table title
        count_label: what the primary count measures
        secondary_label: name of the optional secondary count column
        allow_empty: return all-zero percentages instead of raising on an empty universe

    Raises:
        EmptyUniverse: every count is zero and allow_empty is False
    """
    unpacked = [(label, *_unpack(value)) for label, value in counts.items()]
    total = sum(c for _, c, _, _ in unpacked)
    total_bytes = sum(b for _, _, b, _ in unpacked)
    total_secondary = sum(s or 0 for _, _, _, s in unpacked)
    if total == 0 and not allow_empty:
        raise EmptyUniverse(f"no observations for table {title or '(untitled)'}")

    rows = tuple(
        PercentRow(
            label=label,
            count=count,
            byte_volume=nbytes,
            percent_by_count=percent(count, total),
            percent_by_bytes=percent(nbytes, total_bytes),
            secondary_count=secondary if secondary_label else None,
            percent_by_secondary=percent(secondary or 0, total_secondary) if secondary_label else None,
        )
        for label, count, nbytes, secondary in unpacked
    )
    return PercentTable(title=title, rows=rows, count_label=count_label, secondary_label=secondary_label)


def fold_other(counts: Mapping[str, Sequence[int]], threshold_percent: float, fixed: Iterable[str],
               other_label: str = "Other") -> Dict[str, Tuple[int, ...]]:
    """
    Fold labels outside `fixed` whose count share is below the threshold into `other_label`

    Totals are unchanged; fixed labels keep their position and never fold.
    """
    fixed = list(fixed)
    total = sum(v[0] for v in counts.values())
    threshold = Decimal(str(threshold_percent))
    width = max((len(v) for v in counts.values()), default=1)
    other = [0] * width

    result: Dict[str, Tuple[int, ...]] = {label: tuple([0] * width) for label in fixed}
    named: List[Tuple[str, Tuple[int, ...]]] = []
    for label, value in counts.items():
        value = tuple(value)
        if label in result:
            result[label] = tuple(a + b for a, b in zip(result[label], value))
        elif label == other_label or (total and percent(value[0], total) < threshold):
            other = [a + b for a, b in zip(other, value)]
        else:
            named.append((label, value))

    if other_label in result:
        result[other_label] = tuple(a + b for a, b in zip(result[other_label], other))
    else:
        result[other_label] = tuple(other)
    for label, value in sorted(named, key=lambda item: (-item[1][0], item[0])):
        result[label] = value
    return result
