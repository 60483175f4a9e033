"""Calendar helpers: year-month arithmetic and the study window."""
from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from functools import total_ordering

_YM_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


@total_ordering
@dataclass(frozen=True)
class YearMonth:
    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        m = _YM_RE.match(text)
        if not m:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def of(cls, day: dt.date) -> "YearMonth":
        return cls(day.year, day.month)

    @property
    def index(self) -> int:
        """Months since year 0; differences give month counts."""
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_index(cls, idx: int) -> "YearMonth":
        return cls(idx // 12, idx % 12 + 1)

    def __add__(self, months: int) -> "YearMonth":
        return YearMonth.from_index(self.index + months)

    def __sub__(self, other):
        if isinstance(other, YearMonth):
            return self.index - other.index
        return YearMonth.from_index(self.index - other)

    def __lt__(self, other: "YearMonth") -> bool:
        return self.index < other.index

    def first_day(self) -> dt.date:
        return dt.date(self.year, self.month, 1)

    def last_day(self) -> dt.date:
        return (self + 1).first_day() - dt.timedelta(days=1)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(first: YearMonth, last: YearMonth) -> list[YearMonth]:
    """Inclusive list of months from ``first`` to ``last``."""
    return [YearMonth.from_index(i) for i in range(first.index, last.index + 1)]


@dataclass(frozen=True)
class StudyWindow:
    first_month: YearMonth
    last_month: YearMonth

    def __post_init__(self) -> None:
        if self.last_month < self.first_month:
            raise ValueError("study window ends before it starts")
        if len(self) < 3:
            raise ValueError("study window must span at least 3 months")

    @classmethod
    def parse(cls, first: str, last: str) -> "StudyWindow":
        return cls(YearMonth.parse(first), YearMonth.parse(last))

    def months(self) -> list[YearMonth]:
        return month_range(self.first_month, self.last_month)

    def weather_months(self) -> list[YearMonth]:
        """Months whose weather is needed: two lead-in months plus the window."""
        return month_range(self.first_month - 2, self.last_month)

    def contains(self, day: dt.date) -> bool:
        return self.first_month <= YearMonth.of(day) <= self.last_month

    def __len__(self) -> int:
        return self.last_month - self.first_month + 1

    def __str__(self) -> str:
        return f"{self.first_month}..{self.last_month}"


# default study period: weaning in Feb 2022 through Oct 2022
DEFAULT_WINDOW = StudyWindow(YearMonth(2022, 2), YearMonth(2022, 10))
