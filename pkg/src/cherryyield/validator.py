from kutil.logger import get_logger

from cherryyield.command import CLICommand, CommandContext, CSV, JSON, LoadedLedger
from cherryyield.ingest import write_cells

_logger = get_logger(__name__)

REPORT_COLUMNS = ("severity", "rule", "rows", "message")


class ValidateCommand(CLICommand):
    """
    Checks a ledger CSV and reports every violation with its row references.

    Exits with 1 when any error-severity violation is present.
    """

    def _execute_command(self, context: CommandContext):
        """
        Reads the ledger given as input and reports its violations.

        The report is a JSON list, a CSV table or one text line per violation;
        a clean ledger prints nothing in text format.

        Args:
            context (CommandContext): The context containing CLI arguments and
                the output stream.

        Returns:
            int: 1 when an error-severity violation is present, 0 otherwise.
        """

        args = context.args
        loaded = self._read_ledger(args.input, args.season)
        report = [self.__report_row(loaded, index) for index in range(len(loaded.violations))]

        if args.format == JSON:
            context.emit_json(report)
        elif args.format == CSV:
            context.emit(write_cells(report, REPORT_COLUMNS))
        elif report:
            context.emit("".join(
                f"{row['severity'].upper()} {row['rule']} rows {row['rows'] or '-'}: {row['message']}\n"
                for row in report
            ))

        errors = sum(1 for violation in loaded.violations if violation.is_error)
        _logger.info("Validated %s: %s records kept, %s errors, %s warnings.",
                     args.input, len(loaded.ledger), errors, len(loaded.violations) - errors)

        return 1 if loaded.has_errors else 0

    @staticmethod
    def __report_row(loaded: LoadedLedger, index: int) -> dict[str, str]:
        """
        Flattens one violation into a report row, listing the CSV rows it refers to.
        """

        violation = loaded.violations[index]

        return {
            "severity": violation.severity.value,
            "rule": violation.rule_id.value,
            "rows": " ".join(str(row) for row in loaded.rows_of(violation)),
            "message": violation.message,
        }
