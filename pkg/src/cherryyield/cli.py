from importlib.metadata import entry_points
import argparse
import sys
from typing import Final, Optional

from kutil.meta import SingletonMeta

from cherryyield.command import FORMATS, TEXT, CSV
from cherryyield.fitter import FitCommand
from cherryyield.forecast import DEFAULT_LEVEL, TARGETS, TreeMode
from cherryyield.plotter import PlotCommand
from cherryyield.plotting import DEFAULT_RENDERERS, PlotRenderer, renderer_name
from cherryyield.predictor import PredictCommand
from cherryyield.simulation import DEFAULT_BRANCHES, DEFAULT_SEASON, DEFAULT_TREES
from cherryyield.simulator import SimulateCommand
from cherryyield.validator import ValidateCommand


class YieldCLI(metaclass=SingletonMeta):
    """
    The main entry point of the cherry-yield command line interface.

    Validates count ledgers, calibrates stage regressions, forecasts
    harvests, simulates seasons and renders plots. It utilizes a Singleton
    pattern so plugins can register plot renderers before the command line
    is parsed.
    """

    PluginGroup: Final[str] = "cherryyield.plugins"
    """
    Entry point group scanned for plugins.
    """

    def __init__(self):
        """
        Initializes the CLI with an empty renderer registry.
        """

        self.__renderers: dict[str, PlotRenderer] = {}

    def post_init(self):
        """
        Registers the built-in plot renderers.
        """

        for renderer in DEFAULT_RENDERERS:
            self.add_renderer(renderer)

    def add_renderer(self, renderer: PlotRenderer):
        """
        Registers a plot renderer. The plot kind is derived from the class name
        (stripping 'Plot' and converting to snake case).

        Args:
            renderer (PlotRenderer): The renderer instance to register.
        """

        self.__renderers[renderer_name(renderer)] = renderer

    def get_renderer(self, kind: str) -> Optional[PlotRenderer]:
        """
        Retrieves a registered renderer by plot kind.

        Args:
            kind (str): Plot kind, e.g. 'trajectory'.

        Returns:
            Optional[PlotRenderer]: The renderer, or None when the kind is unknown.
        """
        return self.__renderers.get(kind)

    @property
    def plot_kinds(self) -> list[str]:
        return list(self.__renderers.keys())

    def run(self):
        """
        Main execution loop for the CLI tool.

        Handles plugin discovery, parses command-line arguments using argparse,
        and dispatches execution to the appropriate command handler.
        """

        self.__discover_plugins()

        parser = argparse.ArgumentParser(
            description="Harvest forecasting from phenological counts of sweet cherry trees.",
            formatter_class=argparse.RawTextHelpFormatter
        )

        subparsers = parser.add_subparsers(
            title="Available Commands",
            dest="command",
            required=True,
            help="Select an operation to perform."
        )

        self.__add_validate_command(subparsers)
        self.__add_fit_command(subparsers)
        self.__add_predict_command(subparsers)
        self.__add_simulate_command(subparsers)
        self.__add_plot_command(subparsers)

        if len(sys.argv) == 1:
            parser.print_help(sys.stderr)
            sys.exit(2)

        args = parser.parse_args()

        try:
            exit_code = args.func(args)
            sys.exit(exit_code)
        except Exception as e:
            print(f"\nCritical Error during execution: {e}", file=sys.stderr)
            sys.exit(1)

    @staticmethod
    def __add_common_arguments(parser, default_format: str):
        parser.add_argument(
            "--season",
            default=DEFAULT_SEASON,
            type=int,
            help="Season year used to complete dates like 'Mar-2'."
        )

        parser.add_argument(
            "--format",
            default=default_format,
            choices=FORMATS,
            help="Output format."
        )

    def __add_validate_command(self, subparsers):
        """
        Configures the 'validate' subcommand and its arguments.

        Args:
            subparsers: The argparse subparser object to attach to.
        """

        validate_command = ValidateCommand(self)
        validate_parser = subparsers.add_parser(
            "validate",
            help="Check a count ledger CSV and report violations."
        )

        validate_parser.add_argument("input", type=str, help="Ledger CSV file.")
        self.__add_common_arguments(validate_parser, TEXT)

        validate_parser.set_defaults(func=validate_command.execute)

    def __add_fit_command(self, subparsers):
        """
        Configures the 'fit' subcommand and its arguments.

        Args:
            subparsers: The argparse subparser object to attach to.
        """

        fit_command = FitCommand(self)
        fit_parser = subparsers.add_parser(
            "fit",
            help="Calibrate stage regressions of harvest on counts."
        )

        fit_parser.add_argument("input", type=str, help="Ledger CSV file.")

        fit_parser.add_argument(
            "--target",
            default=TARGETS[0].value,
            choices=[target.value for target in TARGETS],
            help="Harvest count to forecast."
        )

        fit_parser.add_argument(
            "--output",
            type=str,
            help="Write the calibration to this file instead of standard output."
        )

        self.__add_common_arguments(fit_parser, CSV)
        fit_parser.set_defaults(func=fit_command.execute)

    def __add_predict_command(self, subparsers):
        """
        Configures the 'predict' subcommand and its arguments.

        Args:
            subparsers: The argparse subparser object to attach to.
        """

        predict_command = PredictCommand(self)
        predict_parser = subparsers.add_parser(
            "predict",
            help="Forecast a harvest from counts at a calibrated stage."
        )

        predict_parser.add_argument("calibration", type=str, help="Calibration CSV file.")

        predict_parser.add_argument(
            "--stage",
            required=True,
            type=str,
            help="Stage date, e.g. 'Jul-6' or '2023-07-06'."
        )

        predict_parser.add_argument(
            "--count",
            required=True,
            nargs="+",
            type=float,
            help="Count of one branch, or one count per branch of a tree."
        )

        predict_parser.add_argument(
            "--tree-mode",
            choices=[mode.value for mode in TreeMode],
            help="Forecast a tree from its branch counts."
        )

        predict_parser.add_argument(
            "--level",
            default=DEFAULT_LEVEL,
            type=float,
            help="Coverage of the prediction interval."
        )

        predict_parser.add_argument(
            "--mean-fruit-weight",
            type=float,
            help="Mean mass of one fruit in kg, for a weight estimate."
        )

        predict_parser.add_argument(
            "--ledger",
            type=str,
            help="Ledger CSV whose weighed harvest records give the mean fruit weight."
        )

        predict_parser.add_argument(
            "--forecast-season",
            type=int,
            help="Season the counts were taken in, when it differs from the calibration's."
        )

        self.__add_common_arguments(predict_parser, TEXT)
        predict_parser.set_defaults(func=predict_command.execute)

    def __add_simulate_command(self, subparsers):
        """
        Configures the 'simulate' subcommand and its arguments.

        Args:
            subparsers: The argparse subparser object to attach to.
        """

        simulate_command = SimulateCommand(self)
        simulate_parser = subparsers.add_parser(
            "simulate",
            help="Generate a synthetic season ledger."
        )

        simulate_parser.add_argument("params", nargs="?", type=str, help="Key-value parameters file.")
        simulate_parser.add_argument("--trees", default=DEFAULT_TREES, type=int, help="Number of trees.")
        simulate_parser.add_argument("--branches", default=DEFAULT_BRANCHES, type=int, help="Branches per tree.")
        simulate_parser.add_argument("--seed", type=int, help="Master seed, overrides the parameters file.")
        simulate_parser.add_argument("--noise-sd", type=float, help="Count noise, overrides the parameters file.")

        simulate_parser.add_argument(
            "--output",
            type=str,
            help="Write the ledger to this file instead of standard output."
        )

        self.__add_common_arguments(simulate_parser, CSV)
        simulate_parser.set_defaults(func=simulate_command.execute)

    def __add_plot_command(self, subparsers):
        """
        Configures the 'plot' subcommand and its arguments.

        Args:
            subparsers: The argparse subparser object to attach to.
        """

        plot_command = PlotCommand(self)
        plot_parser = subparsers.add_parser(
            "plot",
            help="Render a ledger or a calibration as SVG."
        )

        plot_parser.add_argument(
            "--kind",
            required=True,
            choices=self.plot_kinds,
            type=str,
            help="Plot kind."
        )

        plot_parser.add_argument("--ledger", type=str, help="Ledger CSV file.")
        plot_parser.add_argument("--calibration", type=str, help="Calibration CSV file.")

        plot_parser.add_argument(
            "--plot-file",
            type=str,
            help="Destination SVG file, output/<kind>.svg by default."
        )

        plot_parser.add_argument("--width", default=800, type=int, help="Width in pixels.")
        plot_parser.add_argument("--height", default=600, type=int, help="Height in pixels.")
        plot_parser.add_argument("--level", default=DEFAULT_LEVEL, type=float, help="Coverage of prediction bands.")

        self.__add_common_arguments(plot_parser, TEXT)
        plot_parser.set_defaults(func=plot_command.execute)

    @classmethod
    def __discover_plugins(cls):
        """
        Uses importlib.metadata to find and load external plugins registered
        under the 'cherryyield.plugins' entry point group.
        """

        for plugin in entry_points(group=cls.PluginGroup):
            plugin.load()
