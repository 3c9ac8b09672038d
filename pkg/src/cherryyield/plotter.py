import os

from cherryyield.command import CLICommand, CommandContext, CSV, JSON
from cherryyield.errors import UsageError
from cherryyield.forecast import parse_calibration_csv
from cherryyield.plotting import PlotSpec, render_plot


class PlotCommand(CLICommand):
    """
    Renders a ledger and/or a calibration as an SVG file.
    """

    def _execute_command(self, context: CommandContext):
        """
        Renders the requested plot kind into an SVG file.

        A renderer registered under the kind replaces the built-in one. The
        file defaults to output/<kind>.svg.

        Args:
            context (CommandContext): The context containing CLI arguments and
                the output stream.

        Raises:
            UsageError: If neither a ledger nor a calibration is given.
            EmptyInputError: If there is nothing to draw.
        """

        args = context.args

        if args.ledger is None and args.calibration is None:
            raise UsageError("Plotting needs --ledger, --calibration or both.")

        plot_file = os.path.expandvars(args.plot_file or os.path.join("output", f"{args.kind}.svg"))
        spec = PlotSpec(args.kind, plot_file, args.width, args.height, args.level)

        ledger = self._read_ledger(args.ledger, args.season).ledger if args.ledger else None
        calibration = None

        if args.calibration:
            calibration = parse_calibration_csv(self._read_text(args.calibration), args.season)

        render_plot(spec, ledger, calibration, context.cli.get_renderer(args.kind))

        if args.format == JSON:
            context.emit_json({"kind": spec.kind, "path": spec.output_path})
        elif args.format == CSV:
            context.emit(f"kind,path\n{spec.kind},{spec.output_path}\n")
        else:
            context.emit(f"Wrote {spec.kind} plot to {spec.output_path}\n")
