"""Month-index arithmetic.

All time series in the package live on an integer month grid: index 0 is
January 2000, index 12*k + (m-1) is month m of year 2000+k. Negative
indices address months before 2000.
"""

import datetime

_EPOCH_YEAR = 2000


def month_index(year: int, month: int) -> int:
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    return (year - _EPOCH_YEAR) * 12 + (month - 1)


def year_month(index: int) -> tuple[int, int]:
    year, m = divmod(index, 12)
    return _EPOCH_YEAR + year, m + 1


def month_of_year(index: int) -> int:
    """Calendar month 1..12 of a month index."""
    return index % 12 + 1


def parse_month(text: str) -> int:
    """Parse 'YYYY-MM' into a month index."""
    try:
        year_s, month_s = text.strip().split("-")
        return month_index(int(year_s), int(month_s))
    except (ValueError, AttributeError) as exc:
        raise ValueError(f"expected YYYY-MM, got {text!r}") from exc


def format_month(index: int) -> str:
    year, month = year_month(index)
    return f"{year:04d}-{month:02d}"


def parse_date(text: str) -> datetime.date:
    """Parse an ISO-8601 calendar date."""
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise ValueError(f"expected YYYY-MM-DD, got {text!r}") from exc


def date_month_index(d: datetime.date) -> int:
    return month_index(d.year, d.month)


def days_in_month(index: int) -> int:
    year, month = year_month(index)
    if month == 12:
        nxt = datetime.date(year + 1, 1, 1)
    else:
        nxt = datetime.date(year, month + 1, 1)
    return (nxt - datetime.date(year, month, 1)).days


def month_start(index: int) -> datetime.date:
    year, month = year_month(index)
    return datetime.date(year, month, 1)
