"""Raw payment / GDP table ingestion and the source-file correction rules.

Raw inputs are CSV or TSV exports whose first rows carry narrative text and
split headers, and whose cells may hold thousands separators, currency
symbols or negative signs.  Cleaning is an explicit, ordered list of
:class:`CleaningRule` objects applied by :func:`apply_cleaning_rules`; every
application is recorded in the table's ``log``.
"""

from __future__ import annotations

import csv
import io
import re
import urllib.error
import urllib.request
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import (
    DuplicatePeriod,
    HttpStatusError,
    MissingColumn,
    MissingData,
    MissingYear,
    NetworkError,
    RuleRangeOutsideData,
    UnparseableDate,
    UnparseableValue,
)
from .series import Frequency, Period, TimeSeries


@dataclass(frozen=True)
class RawTable:
    rows: tuple
    source_name: str = ""
    origin: str | None = None
    log: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(str(c) for c in r) for r in self.rows))
        object.__setattr__(self, "log", tuple(self.log))

    @property
    def width(self):
        return max((len(r) for r in self.rows), default=0)

    def cell(self, i, j):
        row = self.rows[i]
        return row[j] if j < len(row) else ""


def read_raw(source, source_name=None, delimiter=None, origin=None):
    """Read CSV/TSV text (or a path) into a :class:`RawTable` without cleaning.

    The delimiter defaults to tab for ``.tsv``/``.tab`` paths and comma
    otherwise.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        path = Path(source)
        text = path.read_bytes().decode("utf-8-sig")
        source_name = source_name or path.name
        if delimiter is None:
            delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    else:
        text = source.decode("utf-8-sig") if isinstance(source, bytes) else str(source)
        text = text.lstrip("\ufeff")
    delimiter = delimiter or ","
    rows = list(csv.reader(io.StringIO(text, newline=""), delimiter=delimiter))
    return RawTable(tuple(rows), source_name or "", origin)


def fetch_raw(url, timeout=30.0, delimiter=None):
    """Download ``url`` and parse the body as CSV/TSV, verbatim."""
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise HttpStatusError(exc.code, url) from exc
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(f"cannot reach {url}: {getattr(exc, 'reason', exc)}") from exc
    text = body.decode("utf-8-sig")
    if delimiter is None:
        first = text.split("\n", 1)[0]
        delimiter = "\t" if url.lower().endswith((".tsv", ".tab")) or ("\t" in first and "," not in first) else ","
    name = url.rstrip("/").rsplit("/", 1)[-1] or url
    return read_raw(text, source_name=name, delimiter=delimiter, origin=url)


# -- column references -------------------------------------------------------

def column_index(ref, header=None):
    """Resolve a column reference: a 0-based int, a spreadsheet letter
    (``"A"``, ``"G"``, ``"AA"``), or a header name when ``header`` is given."""
    if isinstance(ref, int):
        return ref
    s = str(ref).strip()
    if s.isdigit():
        return int(s)
    if header is not None:
        for j, h in enumerate(header):
            if h.strip().lower() == s.lower():
                return j
    if re.fullmatch(r"[A-Za-z]{1,2}", s):
        idx = 0
        for ch in s.upper():
            idx = idx * 26 + (ord(ch) - ord("A") + 1)
        return idx - 1
    raise MissingColumn(f"column {ref!r} not found")


@dataclass(frozen=True)
class TableSchema:
    """Where the date and amount fields live in a raw table.

    Either ``period`` (one date cell) or ``year`` + ``month`` must be given.
    ``header_rows`` lists raw-row indices whose cells are joined to resolve
    named references; positional references need no header.
    """

    year: object = None
    month: object = None
    period: object = None
    volume: object = None
    value: object = None
    header_rows: tuple = ()

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["header_rows"] = tuple(d.get("header_rows", ()))
        return cls(**d)

    def header(self, table):
        if not self.header_rows:
            return None
        width = table.width
        parts = [[table.cell(i, j).strip() for i in self.header_rows if i < len(table.rows)] for j in range(width)]
        return [" ".join(p for p in col if p) for col in parts]

    def resolve(self, table, name):
        ref = getattr(self, name)
        if ref is None:
            return None
        idx = column_index(ref, self.header(table))
        if idx >= table.width:
            raise MissingColumn(f"{name} column {ref!r} is beyond the table width {table.width}")
        return idx


# -- cell parsing ------------------------------------------------------------

_MONTHS = {m: i + 1 for i, m in enumerate(
    ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"])}
_YEAR_RE = re.compile(r"(?<!\d)(\d{4})(?:\.0+)?(?!\d)")
_NUMBER_STRIP = re.compile("[£,\\s\u00a0]")


def parse_number(text):
    """Parse an amount cell; strips ``£``, thousands separators and spaces.
    Parenthesised amounts read as negative.  Returns the signed value."""
    s = _NUMBER_STRIP.sub("", str(text))
    neg = s.startswith("(") and s.endswith(")")
    if neg:
        s = s[1:-1]
    try:
        v = float(s)
    except ValueError:
        raise UnparseableValue(f"not a number: {text!r}") from None
    if v != v or v in (float("inf"), float("-inf")):
        raise UnparseableValue(f"not a finite number: {text!r}")
    return -v if neg else v


def format_number(v):
    return format(v, ".15g")


def parse_year(text):
    m = _YEAR_RE.search(str(text))
    if not m:
        raise UnparseableDate(f"not a year: {text!r}")
    return int(m.group(1))


def parse_month(text):
    s = str(text).strip().lower()
    if not s:
        raise UnparseableDate("blank month cell")
    if s[:3] in _MONTHS:
        return _MONTHS[s[:3]]
    try:
        m = int(float(s))
    except ValueError:
        raise UnparseableDate(f"not a month: {text!r}") from None
    if not 1 <= m <= 12:
        raise UnparseableDate(f"month out of range: {text!r}")
    return m


def parse_period_cell(text):
    """Parse a single date cell (``1994 Q1``, ``1994-Q1``, ``1994-03``, ``1994-04-01``)."""
    s = " ".join(str(text).split())
    if not s:
        raise UnparseableDate("blank date cell")
    return Period.parse(s)


def _is_blank(row):
    return all(not c.strip() for c in row)


# -- cleaning rules ----------------------------------------------------------

class RuleKind(str, Enum):
    SKIP_ROWS = "skip_rows"
    IMPUTE_YEAR_FORWARD = "impute_year_forward"
    SCALE_RANGE = "scale_range"
    COLUMN_REMAP_RANGE = "column_remap_range"
    TRIM_DATE_WHITESPACE = "trim_date_whitespace"


@dataclass(frozen=True)
class CleaningRule:
    """One correction step.

    ``date_range`` is an inclusive ``(start, end)`` pair of periods (or
    period strings).  ``head``/``tail`` are row counts for ``skip_rows``;
    ``columns`` restricts ``scale_range`` (default: the schema's value
    column).
    """

    kind: RuleKind
    date_range: tuple | None = None
    factor: float | None = None
    column_map: dict | None = None
    head: int = 0
    tail: int = 0
    columns: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.date_range is not None:
            start, end = (p if isinstance(p, Period) else Period.parse(p) for p in self.date_range)
            object.__setattr__(self, "date_range", (start, end))
        if self.kind is RuleKind.SCALE_RANGE:
            if self.factor is None or not self.factor > 0:
                raise ValueError("scale_range requires factor > 0")
        if self.kind is RuleKind.COLUMN_REMAP_RANGE and not self.column_map:
            raise ValueError("column_remap_range requires a non-empty column_map")
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))
        if self.head < 0 or self.tail < 0:
            raise ValueError("skip_rows counts must be non-negative")

    @classmethod
    def from_dict(cls, d):
        return cls(**dict(d))

    def to_dict(self):
        out = {"kind": self.kind.value}
        if self.date_range is not None:
            out["date_range"] = [str(p) for p in self.date_range]
        if self.factor is not None:
            out["factor"] = self.factor
        if self.column_map:
            out["column_map"] = dict(self.column_map)
        if self.head:
            out["head"] = self.head
        if self.tail:
            out["tail"] = self.tail
        if self.columns is not None:
            out["columns"] = list(self.columns)
        return out


def _month_span(p):
    if p.freq is Frequency.QUARTERLY:
        first = p.year * 12 + (p.sub - 1) * 3
        return first, first + 2
    m = p.year * 12 + p.sub - 1
    return m, m


def _row_periods(rows, table, schema):
    """Best-effort period per row (``None`` when undeterminable).

    Blank year cells inherit the previous year here, so range rules work
    whether or not year imputation has run yet.
    """
    out = []
    if schema is None:
        return [None] * len(rows)
    if schema.period is not None:
        j = schema.resolve(table, "period")
        for r in rows:
            try:
                out.append(parse_period_cell(r[j] if j < len(r) else ""))
            except UnparseableDate:
                out.append(None)
        return out
    if schema.year is None or schema.month is None:
        return [None] * len(rows)
    jy, jm = schema.resolve(table, "year"), schema.resolve(table, "month")
    year = None
    for r in rows:
        ycell = r[jy] if jy < len(r) else ""
        if ycell.strip():
            try:
                year = parse_year(ycell)
            except UnparseableDate:
                year = None
        try:
            month = parse_month(r[jm] if jm < len(r) else "")
            out.append(Period.month(year, month) if year is not None else None)
        except UnparseableDate:
            out.append(None)
    return out


def _in_range(p, date_range):
    if p is None:
        return False
    lo, _ = _month_span(date_range[0])
    _, hi = _month_span(date_range[1])
    a, b = _month_span(p)
    return lo <= a and b <= hi


def _set(row, j, value):
    row = list(row)
    if j >= len(row):
        row.extend([""] * (j + 1 - len(row)))
    row[j] = value
    return row


def _apply_rule(table, rule, schema):
    rows = [list(r) for r in table.rows]
    touched = 0
    note = None
    kind = rule.kind

    if kind is RuleKind.SKIP_ROWS:
        end = len(rows) - rule.tail
        touched = min(len(rows), rule.head + rule.tail)
        rows = rows[rule.head:end] if end > rule.head else []

    elif kind is RuleKind.IMPUTE_YEAR_FORWARD:
        if schema is None or schema.year is None:
            raise MissingColumn("impute_year_forward needs a schema with a year column")
        jy = schema.resolve(table, "year")
        current = None
        for i, r in enumerate(rows):
            if _is_blank(r):
                continue
            cell = r[jy] if jy < len(r) else ""
            if cell.strip():
                current = cell.strip()
            elif current is None:
                raise MissingYear(f"row {i} has a blank year before any year value")
            else:
                rows[i] = _set(r, jy, current)
                touched += 1

    elif kind is RuleKind.TRIM_DATE_WHITESPACE:
        if schema is None:
            raise MissingColumn("trim_date_whitespace needs a schema")
        cols = [schema.resolve(table, n) for n in ("period", "year", "month")]
        cols = [j for j in cols if j is not None]
        for i, r in enumerate(rows):
            for j in cols:
                if j < len(r):
                    cleaned = " ".join(r[j].replace("\u00a0", " ").split())
                    if cleaned != r[j]:
                        r[j] = cleaned
                        touched += 1

    elif kind in (RuleKind.SCALE_RANGE, RuleKind.COLUMN_REMAP_RANGE):
        periods = _row_periods(rows, table, schema)
        if rule.date_range is None:
            in_range = [p is not None for p in periods]
        else:
            in_range = [_in_range(p, rule.date_range) for p in periods]
        if not any(in_range):
            note = "rule date range does not overlap the table's data"
            warnings.warn(f"{kind.value} on {table.source_name!r}: {note}", RuleRangeOutsideData, stacklevel=3)
        if kind is RuleKind.SCALE_RANGE:
            if rule.columns is not None:
                targets = [column_index(c, schema.header(table) if schema else None) for c in rule.columns]
            elif schema is not None and schema.value is not None:
                targets = [schema.resolve(table, "value")]
            else:
                raise MissingColumn("scale_range needs target columns or a schema value column")
            for i, r in enumerate(rows):
                if not in_range[i]:
                    continue
                hit = False
                for j in targets:
                    if j < len(r) and r[j].strip():
                        try:
                            v = parse_number(r[j])
                        except UnparseableValue:
                            continue
                        r[j] = format_number(v * rule.factor)
                        hit = True
                touched += hit
        else:
            header = schema.header(table) if schema else None
            mapping = [(column_index(s, header), column_index(d, header)) for s, d in rule.column_map.items()]
            for i, r in enumerate(rows):
                if not in_range[i]:
                    continue
                for src, dst in mapping:
                    cell = r[src] if src < len(r) else ""
                    r = _set(r, dst, cell)
                    if src != dst:
                        r = _set(r, src, "")
                rows[i] = r
                touched += 1

    entry = {"rule": kind.value, "rows_touched": int(touched)}
    if note:
        entry["warning"] = note
    return replace(table, rows=tuple(tuple(r) for r in rows), log=table.log + (entry,))


def apply_cleaning_rules(raw, rules, schema=None):
    """Apply ``rules`` in order and return a new table; ``raw`` is untouched.

    Date-ranged rules locate each row's period through ``schema``.  Ranges
    that miss the data are warned about and logged, not raised.
    """
    table = raw
    for rule in rules:
        if isinstance(rule, dict):
            rule = CleaningRule.from_dict(rule)
        table = _apply_rule(table, rule, schema)
    return table


# -- datasets ----------------------------------------------------------------

class PaymentType(str, Enum):
    HIGH_VALUE = "HighValue"
    LOW_VALUE = "LowValue"
    CHEQUE = "Cheque"
    CREDIT_CARD = "CreditCard"


@dataclass(frozen=True)
class PaymentDataset:
    payment_type: PaymentType
    volume: TimeSeries
    value: TimeSeries
    log: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "payment_type", PaymentType(self.payment_type))
        if self.volume.periods != self.value.periods:
            raise ValueError("volume and value must share identical periods")
        if (self.volume.values < 0).any() or (self.value.values < 0).any():
            raise ValueError("volumes and values must be non-negative")

    def __eq__(self, other):
        if not isinstance(other, PaymentDataset):
            return NotImplemented
        return (
            self.payment_type == other.payment_type
            and self.volume.periods == other.volume.periods
            and (self.volume.values == other.volume.values).all()
            and (self.value.values == other.value.values).all()
        )

    __hash__ = None

    @property
    def periods(self):
        return self.volume.periods

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["period", "volume", "value"])
        for p, vol, val in zip(self.periods, self.volume.values, self.value.values):
            w.writerow([str(p), repr(float(vol)), repr(float(val))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, payment_type):
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or [c.strip() for c in rows[0]] != ["period", "volume", "value"]:
            raise MissingColumn("canonical payment CSV must have header period,volume,value")
        periods = tuple(Period.parse(r[0]) for r in rows[1:])
        vol = [float(r[1]) for r in rows[1:]]
        val = [float(r[2]) for r in rows[1:]]
        freq = periods[0].freq if periods else Frequency.MONTHLY
        name = PaymentType(payment_type).value
        return cls(payment_type, TimeSeries(periods, vol, freq, f"{name}:volume"),
                   TimeSeries(periods, val, freq, f"{name}:value"))


def _check_increasing(periods, source):
    seen = set()
    for p in periods:
        if p in seen:
            raise DuplicatePeriod(f"{source}: duplicate period {p}")
        seen.add(p)
    return sorted(range(len(periods)), key=lambda i: periods[i].ordinal)


def parse_payment_table(raw, schema, payment_type=PaymentType.LOW_VALUE):
    """Turn a cleaned raw payment table into a monthly :class:`PaymentDataset`.

    Every non-blank row is a data row: header/footer rows must already have
    been removed (``skip_rows``).  Amounts are stored as absolute values.
    """
    if isinstance(schema, dict):
        schema = TableSchema.from_dict(schema)
    if schema.volume is None or schema.value is None:
        raise MissingColumn("schema must name volume and value columns")
    if schema.period is None and (schema.year is None or schema.month is None):
        raise MissingColumn("schema must name a period column or year and month columns")
    data = [r for r in raw.rows if not _is_blank(r)]
    if not data:
        raise MissingData(f"{raw.source_name or 'table'} has no data rows")
    jvol, jval = schema.resolve(raw, "volume"), schema.resolve(raw, "value")
    periods, vols, vals = [], [], []
    for r in data:
        get = lambda j: r[j] if j < len(r) else ""  # noqa: E731
        try:
            if schema.period is not None:
                p = parse_period_cell(get(schema.resolve(raw, "period")))
            else:
                p = Period.month(parse_year(get(schema.resolve(raw, "year"))),
                                 parse_month(get(schema.resolve(raw, "month"))))
        except UnparseableDate as exc:
            raise UnparseableDate(f"{raw.source_name}: row {list(r)}: {exc}") from None
        try:
            vol, val = abs(parse_number(get(jvol))), abs(parse_number(get(jval)))
        except UnparseableValue as exc:
            raise UnparseableValue(f"{raw.source_name}: {p}: {exc}") from None
        periods.append(p)
        vols.append(vol)
        vals.append(val)
    order = _check_increasing(periods, raw.source_name)
    periods = tuple(periods[i] for i in order)
    freq = periods[0].freq
    name = PaymentType(payment_type).value
    return PaymentDataset(
        payment_type,
        TimeSeries(periods, [vols[i] for i in order], freq, f"{name}:volume"),
        TimeSeries(periods, [vals[i] for i in order], freq, f"{name}:value"),
        log=raw.log,
    )


def _gdp_period(text):
    p = parse_period_cell(text)
    return p.to_quarter() if p.freq is Frequency.MONTHLY else p


def parse_gdp_csv(raw, name="GDP"):
    """Parse a two-column (period, value) GDP table into a quarterly series.

    A single leading header row is skipped.  Period cells tolerate stray
    whitespace; ``YYYY-MM[-DD]`` dates map to their calendar quarter.
    """
    rows = [r for r in raw.rows if not _is_blank(r)]
    if rows:
        first = rows[0]
        try:
            _gdp_period(first[0])
        except UnparseableDate:
            try:
                parse_number(first[1] if len(first) > 1 else "")
            except UnparseableValue:
                rows = rows[1:]
    if not rows:
        raise MissingData(f"{raw.source_name or 'GDP table'} has no data rows")
    pairs = []
    for r in rows:
        if len(r) < 2:
            raise UnparseableValue(f"row {list(r)} has no value column")
        p = _gdp_period(r[0])
        pairs.append((p, parse_number(r[1])))
    periods = [p for p, _ in pairs]
    order = _check_increasing(periods, raw.source_name)
    return TimeSeries(tuple(periods[i] for i in order), [pairs[i][1] for i in order], Frequency.QUARTERLY, name)


def load_payment_file(path, schema, rules=(), payment_type=PaymentType.LOW_VALUE, delimiter=None):
    """Read, clean and parse one payment source file."""
    if isinstance(schema, dict):
        schema = TableSchema.from_dict(schema)
    raw = read_raw(Path(path), delimiter=delimiter)
    return parse_payment_table(apply_cleaning_rules(raw, rules, schema), schema, payment_type)
