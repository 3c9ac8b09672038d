import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, TextIO

from kutil.file import read_file, save_file
from kutil.logger import get_logger

from cherryyield.errors import IngestError, NoCalibrationError, UsageError, YieldError
from cherryyield.ingest import parse_csv_rows
from cherryyield.phenology import RecordKey, SeasonLedger, Violation, build_ledger

if TYPE_CHECKING:
    from cherryyield.cli import YieldCLI


_logger = get_logger(__name__)

TEXT = "text"
CSV = "csv"
JSON = "json"
FORMATS = (TEXT, CSV, JSON)


@dataclasses.dataclass
class CommandContext:
    """
    Data container that holds the necessary state for executing a CLI command.

    Attributes:
        args (Any): The parsed command-line arguments from argparse.
        cli (YieldCLI): A reference to the main CLI application instance.
        output (Optional[TextIO]): Stream reports are written to; standard output when unset.
    """

    args: Any
    cli: "YieldCLI"
    output: Optional[TextIO] = None

    @property
    def out(self) -> TextIO:
        return self.output or sys.stdout

    def emit(self, content: str):
        """
        Writes a report to the output stream, or to args.output when a file was requested.
        """

        output_path = getattr(self.args, "output", None)

        if isinstance(output_path, str) and output_path:
            path = Path(os.path.expandvars(output_path))
            path.parent.mkdir(parents=True, exist_ok=True)
            save_file(str(path), content)
            _logger.info("Report written to %s", path)
            return

        self.out.write(content)

    def emit_json(self, payload: Any):
        self.emit(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


@dataclasses.dataclass
class LoadedLedger:
    """
    A ledger read from disk, with the violations found while reading it and
    the CSV row each record came from.
    """

    ledger: SeasonLedger
    violations: list[Violation]
    rows: dict[RecordKey, int]

    @property
    def has_errors(self) -> bool:
        return any(violation.is_error for violation in self.violations)

    def rows_of(self, violation: Violation) -> list[int]:
        if violation.row is not None:
            return [violation.row]
        return sorted(self.rows[key] for key in violation.offending_keys if key in self.rows)


class CLICommand:
    """
    Base class for all CLI command implementations.

    Maps failures onto exit statuses: 0 clean, 1 for domain failures and 2
    for usage or IO failures.
    """

    def __init__(self, cli: "YieldCLI"):
        """
        Initializes the command with a reference to the main CLI.

        Args:
            cli (YieldCLI): The parent CLI instance.
        """
        self.__cli = cli

    def execute(self, args) -> int:
        """
        The entry point called by argparse. Prepares the CommandContext,
        runs the command and translates failures into exit statuses.

        Args:
            args (Any): The arguments parsed from the command line.

        Returns:
            int: Exit status.
        """

        context = CommandContext(args=args, cli=self.__cli)

        try:
            return self._execute_command(context) or 0

        except YieldError as error:
            _logger.error("Command failed: %s", error)
            print(f"Error: {error}", file=sys.stderr)

            if isinstance(error, NoCalibrationError):
                print(f"Available stages: {', '.join(error.available) or 'none'}", file=sys.stderr)

            return 1

        except (UsageError, OSError) as error:
            _logger.error("Command can't run: %s", error)
            print(f"Error: {error}", file=sys.stderr)
            return 2

    def _execute_command(self, context: CommandContext) -> Optional[int]:  # pragma: no cover
        """
        Abstract method meant to be overridden by subclasses to implement
        specific command logic.

        Args:
            context (CommandContext): The prepared execution context.

        Returns:
            Optional[int]: Exit status, None meaning success.
        """
        pass

    @staticmethod
    def _read_text(path: str) -> str:
        """
        Reads a whole UTF-8 input file after expanding environment variables in its path.

        Args:
            path (str): Path of the file, e.g. '$LEDGER_DIR/2023.csv'.

        Returns:
            str: File content.

        Raises:
            FileNotFoundError: If the path is not a file.
            IngestError: If the content isn't valid UTF-8.
        """

        path = os.path.expandvars(path)

        if not os.path.isfile(path):
            raise FileNotFoundError(f"File not found: {path}")

        _logger.info("Reading %s", path)

        try:
            return read_file(path)
        except UnicodeDecodeError as error:
            raise IngestError(f"Can't decode {path} as UTF-8: {error}") from error

    @classmethod
    def _read_ledger(cls, path: str, season_year: int) -> LoadedLedger:
        """
        Reads a ledger CSV and builds a ledger from its valid records.

        Raises:
            IngestError: If the CSV header or stream is unusable.
            OSError: If the file can't be read.
        """

        rows, parse_violations = parse_csv_rows(cls._read_text(path), season_year)
        ledger, violations = build_ledger(record for _, record in rows)

        return LoadedLedger(
            ledger=ledger,
            violations=parse_violations + violations,
            rows={record.key: number for number, record in rows},
        )
