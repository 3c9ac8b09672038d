import dataclasses
import datetime
import io
import math
import re
from typing import Callable, Final, Iterable, Mapping, Optional, Sequence, TextIO, Union

import pandas as pd
from kutil.logger import get_logger

from cherryyield.errors import DomainError, IngestError
from cherryyield.phenology import (
    WHOLE_TREE, BbchStage, CountRecord, ObjectType, RuleId, SeasonLedger, Severity, Violation
)

_logger = get_logger(__name__)


COLUMNS: Final[tuple[str, ...]] = (
    "Date", "BBCH", "treeID", "branchID", "branchColor", "objectType", "objectCount", "cropWeight"
)
"""
Canonical ledger header, in emission order.
"""

_MONTHS: Final[tuple[str, ...]] = (
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"
)
_MONTH_DAY: Final = re.compile(r"^([A-Za-z]{3})-(\d{1,2})$")
_ISO_DATE: Final = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_INTEGER: Final = re.compile(r"^[+-]?\d+$")
_DIGITS: Final = re.compile(r"^\d+$")

# First cell of a row that had more cells than the header.
_OVERLONG: Final[str] = "\x00overlong"

CsvSource = Union[str, TextIO, Iterable[str]]


@dataclasses.dataclass(frozen=True)
class CsvDialect:
    """
    Input/output conventions of ledger CSV files.

    Both '.' and ',' decimal separators and both 'Mar-2' and ISO dates are
    accepted on input; output always uses '.' decimals and ISO dates.
    """

    delimiter: str = ","
    quotechar: str = '"'

    def __post_init__(self):
        if len(self.delimiter) != 1 or self.delimiter == ".":
            raise DomainError(f"Unsupported delimiter {self.delimiter!r}.")


def parse_season_date(text: str, season_year: Optional[int]) -> datetime.date:
    """
    Parses 'Mar-2' / 'Jun-06' style dates within a season, or ISO 8601 dates.

    Raises:
        ValueError: If the text is not a valid date in either form.
    """

    text = text.strip()
    match = _MONTH_DAY.match(text)

    if match:
        month_name, day = match.groups()

        if month_name.lower() not in _MONTHS:
            raise ValueError(f"unknown month '{month_name}'")

        if season_year is None:
            raise ValueError(f"date '{text}' has no year and no season was given")

        return datetime.date(season_year, _MONTHS.index(month_name.lower()) + 1, int(day))

    if not _ISO_DATE.match(text):
        raise ValueError(f"unrecognised date '{text}'")

    return datetime.date.fromisoformat(text)


def month_day_label(date: datetime.date) -> str:
    """
    Formats a date the way field sheets do, e.g. 'Jul-6'.
    """
    return f"{_MONTHS[date.month - 1].capitalize()}-{date.day}"


def parse_decimal(text: str) -> float:
    """
    Parses a decimal number written with either '.' or ',' as separator.

    Raises:
        ValueError: If the text isn't a finite number.
    """

    value = float(text.strip().replace(",", "."))

    if not math.isfinite(value):
        raise ValueError(f"'{text}' is not a finite number")

    return value


def parse_csv(text: CsvSource, season_year: int,
              dialect: Optional[CsvDialect] = None) -> tuple[list[CountRecord], list[Violation]]:
    """
    Reads a ledger CSV.

    Args:
        text: CSV content, an open text stream or an iterable of lines.
        season_year (int): Year of the season; completes dates like 'Mar-2'.
        dialect (CsvDialect): Delimiter and quoting conventions.

    Returns:
        One CountRecord per well-formed row and one violation per malformed row.

    Raises:
        IngestError: If the header is missing or wrong, or the stream can't be read.
    """

    rows, violations = parse_csv_rows(text, season_year, dialect)
    return [record for _, record in rows], violations


def parse_csv_rows(text: CsvSource, season_year: int,
                   dialect: Optional[CsvDialect] = None) -> tuple[list[tuple[int, CountRecord]], list[Violation]]:
    """
    Same as parse_csv, but keeps the CSV row number of every record.
    """

    dialect = dialect or CsvDialect()
    content = _read_source(text)

    index = _header_index(row_cells(read_cells(content, dialect, nrows=1).iloc[0]))
    frame = read_cells(content, dialect, on_bad_lines=_decimal_comma_repair(index))

    rows: list[tuple[int, CountRecord]] = []
    violations: list[Violation] = []

    for position, *row in frame.iloc[1:].itertuples(name=None):
        cells = row_cells(row)

        if not any(cell.strip() for cell in cells):
            continue

        width = int(cells[1]) if cells[0] == _OVERLONG else len(cells)
        record, problems = _parse_row(cells, width, index, season_year, position + 1)

        if record is None:
            violations.extend(problems)
        else:
            rows.append((position + 1, record))

    _logger.info("Parsed %s records, %s malformed rows.", len(rows), len(violations))
    return rows, violations


def _read_source(source: CsvSource) -> str:
    if isinstance(source, str):
        return source

    try:
        if hasattr(source, "read"):
            return source.read()

        return "".join(line if line.endswith("\n") else f"{line}\n" for line in source)
    except (OSError, UnicodeDecodeError) as error:
        raise IngestError(f"Failed to read CSV stream: {error}") from error


def read_cells(content: str, dialect: Optional[CsvDialect] = None, nrows: Optional[int] = None,
               on_bad_lines: Union[str, Callable[[list[str]], Optional[list[str]]]] = "error",
               source_name: str = "Ledger CSV") -> pd.DataFrame:
    """
    Reads CSV content into a frame of untyped string cells.

    The header is kept as row 0 and blank lines are kept as all-NA rows, so row
    i of the frame is line i + 1 of the content. Rows shorter than the header
    are padded with NA.

    Args:
        content (str): CSV content.
        dialect (CsvDialect): Delimiter and quoting conventions.
        nrows (Optional[int]): Number of rows to read, header included.
        on_bad_lines: What pandas does with rows longer than the header.
        source_name (str): Name used in error messages.

    Raises:
        IngestError: If the content is empty or can't be tokenized.
    """

    dialect = dialect or CsvDialect()

    try:
        frame = pd.read_csv(
            io.StringIO(content),
            sep=dialect.delimiter,
            quotechar=dialect.quotechar,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            engine="python",
            nrows=nrows,
            on_bad_lines=on_bad_lines,
        )
    except pd.errors.EmptyDataError:
        raise IngestError(f"{source_name} is empty; a header row is required.")
    except pd.errors.ParserError as error:
        raise IngestError(f"Failed to read {source_name}: {error}") from error

    if frame.empty:
        raise IngestError(f"{source_name} is empty; a header row is required.")

    return frame


def row_cells(row: Iterable[object]) -> list[str]:
    """
    Cells of a frame row without the NA padding of short rows.
    """
    return [cell for cell in row if not pd.isna(cell)]


def write_cells(rows: Iterable[Mapping[str, object]], columns: Sequence[str],
                dialect: Optional[CsvDialect] = None) -> str:
    """
    Writes mappings as CSV with the given header; missing and None values become empty cells.
    """

    dialect = dialect or CsvDialect()
    frame = pd.DataFrame(list(rows), columns=list(columns))

    return frame.to_csv(index=False, sep=dialect.delimiter, quotechar=dialect.quotechar, lineterminator="\n")


def _header_index(header: list[str]) -> dict[str, int]:
    """
    Maps lower-cased column names to their position.
    """

    names = [cell.strip().lstrip("\ufeff").lower() for cell in header]
    expected = [column.lower() for column in COLUMNS]

    missing = [column for column in COLUMNS if column.lower() not in names]
    unknown = [cell for cell, name in zip(header, names) if name not in expected]

    if missing or unknown or len(set(names)) != len(names):
        raise IngestError(
            f"Invalid ledger header. Missing: {missing or 'none'}; unknown: {unknown or 'none'}. "
            f"Expected columns: {', '.join(COLUMNS)}."
        )

    return {name: position for position, name in enumerate(names)}


def _decimal_comma_repair(index: dict[str, int]) -> Callable[[list[str]], list[str]]:
    """
    Builds the handler pandas calls for rows longer than the header.

    The handler re-joins an unquoted trailing '0,29' weight that the delimiter
    split in two. That only applies when cropWeight is the last column, the row
    has exactly one extra cell and both trailing cells are digit runs. Any other
    long row is replaced by a marker carrying its cell count.
    """

    def repair(row: list[str]) -> list[str]:
        if len(row) == len(COLUMNS) + 1 and index["cropweight"] == len(COLUMNS) - 1:
            whole, fraction = row[-2].strip(), row[-1].strip()

            if _DIGITS.match(whole) and _DIGITS.match(fraction):
                return row[:-2] + [f"{whole}.{fraction}"]

        return [_OVERLONG, str(len(row))]

    return repair


def _parse_row(row: list[str], width: int, index: dict[str, int], season_year: int,
               row_number: int) -> tuple[Optional[CountRecord], list[Violation]]:
    """
    Converts one CSV row into a record, or into the violations explaining why it can't be.
    """

    def violation(rule_id: RuleId, message: str):
        return Violation(Severity.ERROR, rule_id, f"row {row_number}: {message}", row=row_number)

    if width != len(COLUMNS):
        return None, [violation(RuleId.MALFORMED_ROW, f"expected {len(COLUMNS)} columns, got {width}")]

    def cell(name: str) -> str:
        return row[index[name]].strip()

    problems = []
    date = bbch = object_type = count = weight = None

    try:
        date = parse_season_date(cell("date"), season_year)
    except ValueError as error:
        problems.append(violation(RuleId.INVALID_DATE, str(error)))

    try:
        bbch = BbchStage(int(cell("bbch")))
    except (ValueError, DomainError):
        problems.append(violation(RuleId.INVALID_BBCH, f"invalid BBCH code '{cell('bbch')}'"))

    tree_id = cell("treeid")
    if not tree_id:
        problems.append(violation(RuleId.MALFORMED_ROW, "missing treeID"))

    try:
        object_type = ObjectType.parse(cell("objecttype"))
    except ValueError:
        problems.append(violation(RuleId.UNKNOWN_OBJECT_TYPE, f"unknown object type '{cell('objecttype')}'"))

    if _INTEGER.match(cell("objectcount")):
        count = int(cell("objectcount"))
    else:
        problems.append(violation(RuleId.INVALID_NUMBER, f"objectCount '{cell('objectcount')}' is not an integer"))

    if cell("cropweight"):
        try:
            weight = parse_decimal(cell("cropweight"))
        except ValueError:
            problems.append(violation(RuleId.INVALID_NUMBER, f"cropWeight '{cell('cropweight')}' is not a number"))

    if problems:
        return None, problems

    return CountRecord(
        date=date,
        season=season_year,
        bbch=bbch,
        tree_id=tree_id,
        branch_id=cell("branchid") or WHOLE_TREE,
        branch_color=cell("branchcolor") or None,
        object_type=object_type,
        object_count=count,
        crop_weight=weight,
    ), []


def record_to_row(record: CountRecord) -> dict[str, object]:
    """
    Converts a record into its canonical ledger row.

    Args:
        record (CountRecord): Record to convert.

    Returns:
        Mapping of every column in COLUMNS to its value; the date is ISO
        formatted, an absent color or weight becomes an empty cell and the
        weight keeps full float precision.
    """

    return {
        "Date": record.date.isoformat(),
        "BBCH": record.bbch.code,
        "treeID": record.tree_id,
        "branchID": record.branch_id,
        "branchColor": record.branch_color or "",
        "objectType": record.object_type.value,
        "objectCount": int(record.object_count),
        "cropWeight": "" if record.crop_weight is None else repr(float(record.crop_weight)),
    }


def emit_csv(ledger: SeasonLedger, dialect: Optional[CsvDialect] = None) -> str:
    """
    Writes a ledger in canonical form: ISO dates, '.' decimals, rows sorted by
    (tree_id, branch_id, date, object_type).
    """
    return write_cells((record_to_row(record) for record in ledger.records), COLUMNS, dialect)
