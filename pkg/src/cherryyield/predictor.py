from kutil.logger import get_logger

from cherryyield.command import CLICommand, CommandContext, CSV, JSON
from cherryyield.forecast import (
    Forecast, TreeMode, forecast_branch, forecast_tree, mean_fruit_weight, parse_calibration_csv
)
from cherryyield.ingest import write_cells

_logger = get_logger(__name__)

FORECAST_COLUMNS = ("stage", "bbch", "scope", "point", "lower", "upper", "level", "weight_kg", "annotations")


class PredictCommand(CLICommand):
    """
    Forecasts the harvest of a branch or a tree from counts at a calibrated stage.

    A single count without --tree-mode forecasts one branch; several counts,
    or --tree-mode, forecast a tree.
    """

    def _execute_command(self, context: CommandContext):
        """
        Loads the calibration and forecasts the harvest at the requested stage.

        Args:
            context (CommandContext): The context containing CLI arguments and
                the output stream.

        Raises:
            NoCalibrationError: If the stage isn't calibrated.
        """

        args = context.args
        cal = parse_calibration_csv(self._read_text(args.calibration), args.season)
        weight = self.__mean_fruit_weight(context)

        if len(args.count) == 1 and args.tree_mode is None:
            forecast = forecast_branch(cal, args.stage, args.count[0], args.level, weight, args.forecast_season)
        else:
            mode = TreeMode(args.tree_mode or TreeMode.SUM_OF_BRANCHES.value)
            forecast = forecast_tree(cal, args.stage, args.count, mode, args.level, weight, args.forecast_season)

        _logger.info("Forecast at %s: %.2f [%.2f, %.2f]", forecast.stage_used, forecast.point,
                     forecast.lower, forecast.upper)

        row = self.__as_row(forecast)

        if args.format == JSON:
            context.emit_json({**row, "annotations": list(forecast.annotations)})
        elif args.format == CSV:
            context.emit(write_cells([{**row, "annotations": "; ".join(forecast.annotations)}], FORECAST_COLUMNS))
        else:
            context.emit(self.__as_text(forecast))

    def __mean_fruit_weight(self, context: CommandContext):
        """
        Mean mass of one fruit from --mean-fruit-weight, else from the harvest
        records of --ledger, else None.
        """

        args = context.args

        if args.mean_fruit_weight is not None:
            return args.mean_fruit_weight

        if args.ledger is None:
            return None

        return mean_fruit_weight(self._read_ledger(args.ledger, args.season).ledger)

    @staticmethod
    def __as_row(forecast: Forecast) -> dict:
        return {
            "stage": forecast.stage_used.date.isoformat(),
            "bbch": forecast.stage_used.bbch.code,
            "scope": forecast.scope.value,
            "point": round(forecast.point, 6),
            "lower": round(forecast.lower, 6),
            "upper": round(forecast.upper, 6),
            "level": forecast.level,
            "weight_kg": None if forecast.weight_estimate is None else round(forecast.weight_estimate, 6),
        }

    @staticmethod
    def __as_text(forecast: Forecast) -> str:
        lines = [
            f"Stage: {forecast.stage_used}",
            f"Scope: {forecast.scope.value}",
            f"Point: {forecast.point:.2f}",
            f"Interval ({forecast.level:.0%}): [{forecast.lower:.2f}, {forecast.upper:.2f}]",
        ]

        if forecast.weight_estimate is not None:
            lines.append(f"Weight: {forecast.weight_estimate:.3f} kg")

        lines.extend(f"Note: {annotation}" for annotation in forecast.annotations)
        return "\n".join(lines) + "\n"
