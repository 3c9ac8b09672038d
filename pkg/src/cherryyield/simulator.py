import dataclasses

from kutil.logger import get_logger

from cherryyield.command import CLICommand, CommandContext, JSON, TEXT
from cherryyield.ingest import emit_csv, record_to_row
from cherryyield.phenology import WHOLE_TREE, trajectory
from cherryyield.simulation import SimulationParams, default_schedule, parse_params, simulate_season

_logger = get_logger(__name__)


class SimulateCommand(CLICommand):
    """
    Generates a synthetic season ledger from model parameters.
    """

    def _execute_command(self, context: CommandContext):
        """
        Simulates a season and writes it as a ledger.

        Parameters come from the --params file or the defaults, with --seed and
        --noise-sd applied on top. Text output shows one count series per branch.

        Args:
            context (CommandContext): The context containing CLI arguments and
                the output stream.

        Raises:
            InvalidParameterError: If a parameter is out of range.
        """

        args = context.args
        params = parse_params(self._read_text(args.params)) if args.params else SimulationParams()

        overrides = {
            name: value for name, value in (("seed", args.seed), ("noise_sd", args.noise_sd))
            if value is not None
        }
        params = dataclasses.replace(params, **overrides)

        _logger.info("Simulating season %s: %s trees × %s branches, seed %s.",
                     args.season, args.trees, args.branches, params.seed)
        ledger = simulate_season(params, args.trees, args.branches, default_schedule(args.season))

        if args.format == JSON:
            context.emit_json([record_to_row(record) for record in ledger])
        elif args.format == TEXT:
            lines = []

            for tree_id, branch_id in ledger.branches():
                if branch_id != WHOLE_TREE:
                    counts = " ".join(str(point.count) for point in trajectory(ledger, tree_id, branch_id))
                    lines.append(f"{tree_id}/{branch_id}: {counts}\n")

            context.emit("".join(lines))
        else:
            context.emit(emit_csv(ledger))
