from kutil.logger import get_logger

from cherryyield.command import CLICommand, CommandContext, CSV, JSON
from cherryyield.errors import NoFittableStagesError
from cherryyield.forecast import (
    CalibrationTable, calibrate, calibration_rows, calibration_to_csv, recommend_phases, recommend_timepoints
)
from cherryyield.phenology import ObjectType

_logger = get_logger(__name__)


class FitCommand(CLICommand):
    """
    Calibrates stage regressions from a ledger and prints the calibration table.
    """

    def _execute_command(self, context: CommandContext):
        """
        Calibrates every fittable stage of the input ledger against the target.

        Invalid records are left out of the fit with a warning. The text
        report adds the ranked forecasting timepoints.

        Args:
            context (CommandContext): The context containing CLI arguments and
                the output stream.

        Raises:
            NoFittableStagesError: If no stage has enough complete branches.
        """

        args = context.args
        loaded = self._read_ledger(args.input, args.season)

        if loaded.has_errors:
            _logger.warning("Ledger %s has invalid records; they are left out of the fit.", args.input)

        cal = calibrate(loaded.ledger, ObjectType.parse(args.target))

        if not cal.entries:
            raise NoFittableStagesError(
                "no fittable stages: no measurement day has 3 complete branches with varying counts"
            )

        if args.format == CSV:
            context.emit(calibration_to_csv(cal))
        elif args.format == JSON:
            context.emit_json(self.__as_json(cal))
        else:
            context.emit(self.__as_text(cal))

    @staticmethod
    def __as_json(cal: CalibrationTable) -> dict:
        phases = recommend_phases(cal)

        return {
            "season": cal.season,
            "target": cal.target.value,
            "harvest_date": cal.harvest_date.isoformat() if cal.harvest_date else None,
            "entries": calibration_rows(cal),
            "annotations": list(cal.annotations),
            "recommendations": {
                name: None if item is None else {
                    "stage": item.stage.date.isoformat(),
                    "score": item.score,
                    "rationale": item.rationale,
                }
                for name, item in phases._asdict().items()
            },
        }

    @staticmethod
    def __as_text(cal: CalibrationTable) -> str:
        lines = [
            f"Calibration of {cal.target} for season {cal.season}",
            "",
            f"{'Date':<8} {'Object':<10} {'BBCH':>4} {'Slope':>7} {'Intercept':>9} {'R2':>6} {'p-value':>8} {'n':>3}",
        ]

        for row in calibration_rows(cal):
            r_squared = row["R2"] if row["R2"] == "degenerate" else f"{float(row['R2']):.2f}"
            lines.append(
                f"{row['Date'][5:]:<8} {row['Object']:<10} {row['BBCH']:>4} {row['Slope']:>7} "
                f"{row['Intercept']:>9} {r_squared:>6} {row['p-value']:>8} {row['n']:>3}"
            )

        lines.extend(f"note: {annotation}" for annotation in cal.annotations)
        lines.extend(["", "Ranked forecasting timepoints:"])
        lines.extend(f"  {item.stage}: {item.score:.3f} ({item.rationale})" for item in recommend_timepoints(cal))

        phases = recommend_phases(cal)
        if phases.early is not None:
            lines.append(f"Early forecast: {phases.early.stage}")
        if phases.after_fruit_drop is not None:
            lines.append(f"After fruit drop: {phases.after_fruit_drop.stage}")

        return "\n".join(lines) + "\n"
