import dataclasses
import datetime
import math
from typing import Final, NamedTuple, Optional, Sequence

import numpy as np
from kutil.file import read_file
from kutil.logger import get_logger

from cherryyield.errors import DomainError, EmptyScheduleError, InvalidParameterError, UnknownStageError
from cherryyield.forecast import StageKey
from cherryyield.phenology import BbchStage, CountRecord, ObjectType, SeasonLedger, build_ledger

_logger = get_logger(__name__)


DEFAULT_SEASON: Final[int] = 2023
DEFAULT_TREES: Final[int] = 3
DEFAULT_BRANCHES: Final[int] = 6

_DEFAULT_STAGES: Final[tuple[tuple[int, int, int, ObjectType], ...]] = (
    (3, 2, 51, ObjectType.BUD),
    (4, 14, 56, ObjectType.BUD),
    (4, 25, 60, ObjectType.BLOSSOM),
    (5, 25, 65, ObjectType.BLOSSOM),
    (6, 6, 75, ObjectType.CHERRY),
    (6, 16, 81, ObjectType.CHERRY),
    (7, 6, 85, ObjectType.CHERRY),
    (7, 14, 89, ObjectType.TOTAL_CROPS),
)

OPEN_CLUSTER_BBCH: Final[int] = 56


class FrostEvent(NamedTuple):
    bbch: BbchStage
    kill_fraction: float


@dataclasses.dataclass(frozen=True)
class SimulationParams:
    """
    Parameters of the multiplicative fruit development model.

    A branch starts with initial_buds·count_scale buds. Only a share of them
    are flower buds, each flower bud opens into a cluster of blossoms, a share
    of blossoms sets fruit, fruit drops happen after setting and late-season
    attrition removes a constant share per step. An optional frost kills a
    share of what is present at its stage.

    Attributes:
        initial_buds (int): Buds per branch before heterogeneity is applied.
        flower_bud_fraction (float): Share of buds that carry flowers.
        blossoms_per_cluster (float): Blossoms per flower bud.
        fruit_set_fraction (float): Share of blossoms that set fruit.
        drop_fractions (tuple[float, ...]): Share dropped in each fruit drop.
        attrition_rate (float): Share lost per late-season step.
        frost (Optional[FrostEvent]): Frost stage and the share it kills.
        noise_sd (float): Standard deviation of additive count noise; 0 is deterministic.
        seed (int): Master seed.
        good_fraction (float): Share of harvested fruit that is marketable.
        fruit_weight_kg (float): Mass of one harvested fruit.
        bud_spread (float): Relative spread of initial buds between branches.
        count_scale (int): Multiplier applied to every branch's initial buds.
    """

    initial_buds: int = 175
    flower_bud_fraction: float = 0.55
    blossoms_per_cluster: float = 2.7
    fruit_set_fraction: float = 0.35
    drop_fractions: tuple[float, ...] = (0.1, 0.05)
    attrition_rate: float = 0.01
    frost: Optional[FrostEvent] = None
    noise_sd: float = 0.0
    seed: int = 0
    good_fraction: float = 0.6
    fruit_weight_kg: float = 0.0087
    bud_spread: float = 0.3
    count_scale: int = 1

    def __post_init__(self):
        object.__setattr__(self, "drop_fractions", tuple(self.drop_fractions))

        if not isinstance(self.initial_buds, int) or self.initial_buds < 1:
            raise InvalidParameterError("initial_buds", f"must be a positive integer, got {self.initial_buds!r}")

        if not isinstance(self.count_scale, int) or self.count_scale < 1:
            raise InvalidParameterError("count_scale", f"must be a positive integer, got {self.count_scale!r}")

        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidParameterError("seed", f"must be a non-negative integer, got {self.seed!r}")

        for name in ("flower_bud_fraction", "fruit_set_fraction", "attrition_rate", "good_fraction"):
            _check_fraction(name, getattr(self, name))

        for value in self.drop_fractions:
            _check_fraction("drop_fractions", value)

        if not self.blossoms_per_cluster > 0 or not math.isfinite(self.blossoms_per_cluster):
            raise InvalidParameterError("blossoms_per_cluster", f"must be positive, got {self.blossoms_per_cluster}")

        if not self.noise_sd >= 0 or not math.isfinite(self.noise_sd):
            raise InvalidParameterError("noise_sd", f"must not be negative, got {self.noise_sd}")

        if not self.fruit_weight_kg >= 0:
            raise InvalidParameterError("fruit_weight_kg", f"must not be negative, got {self.fruit_weight_kg}")

        if not 0.0 <= self.bud_spread < 1.0:
            raise InvalidParameterError("bud_spread", f"must lie in [0, 1), got {self.bud_spread}")

        if self.frost is not None:
            _check_fraction("frost_kill_fraction", self.frost.kill_fraction)

    @property
    def is_deterministic(self) -> bool:
        return self.noise_sd == 0.0


def _check_fraction(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise InvalidParameterError(name, f"must lie in [0, 1], got {value}")


_INT_KEYS: Final = frozenset({"initial_buds", "seed", "count_scale"})
_FLOAT_KEYS: Final = frozenset({
    "flower_bud_fraction", "blossoms_per_cluster", "fruit_set_fraction", "attrition_rate",
    "noise_sd", "good_fraction", "fruit_weight_kg", "bud_spread"
})


def parse_params(text: str, base: Optional[SimulationParams] = None) -> SimulationParams:
    """
    Reads simulation parameters from 'key = value' lines on top of base.

    Lines starting with '#' and empty lines are skipped. drop_fractions takes
    a comma separated list; frost is given by frost_bbch together with
    frost_kill_fraction.

    Raises:
        InvalidParameterError: On unknown keys, malformed lines or bad values.
    """

    values = {}
    frost_bbch = frost_kill = None

    for number, line in enumerate(text.split("\n"), start=1):
        line = line.strip()

        # Allow comments and skip empty lines.
        if line.startswith("#") or len(line) == 0:
            continue

        if "=" not in line:
            raise InvalidParameterError(line, f"line {number} is not a 'key = value' pair")

        key, value = (part.strip() for part in line.split("=", 1))

        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "drop_fractions":
                values[key] = tuple(float(part) for part in value.split(",") if part.strip())
            elif key == "frost_bbch":
                frost_bbch = BbchStage(int(value))
            elif key == "frost_kill_fraction":
                frost_kill = float(value)
            else:
                raise InvalidParameterError(key, "unknown parameter")
        except ValueError as error:
            raise InvalidParameterError(key, f"can't read value '{value}': {error}") from error

    if (frost_bbch is None) != (frost_kill is None):
        raise InvalidParameterError("frost_bbch", "frost_bbch and frost_kill_fraction must be given together")

    if frost_bbch is not None:
        values["frost"] = FrostEvent(frost_bbch, frost_kill)

    return dataclasses.replace(base or SimulationParams(), **values)


def load_params(path: str) -> SimulationParams:
    """
    Loads simulation parameters from a key-value file.
    """

    _logger.info("Loading simulation parameters: %s", path)
    return parse_params(read_file(path))


def default_schedule(season: int = DEFAULT_SEASON) -> list[StageKey]:
    """
    The eight measurement days of a season, from bud swelling to harvest.
    """

    return [
        StageKey.create(datetime.date(season, month, day), BbchStage(code), object_type)
        for month, day, code, object_type in _DEFAULT_STAGES
    ]


def _check_schedule(schedule: Sequence[StageKey]):
    if not schedule:
        raise EmptyScheduleError("empty schedule")

    dates = [stage.date for stage in schedule]

    if any(later <= earlier for earlier, later in zip(dates, dates[1:])):
        raise DomainError("Schedule dates must be strictly ascending.")

    if not schedule[-1].object_type.is_harvest:
        raise DomainError(f"Schedule must end in a harvest stage, got {schedule[-1].object_type}.")


def stage_factors(params: SimulationParams, schedule: Sequence[StageKey]) -> list[float]:
    """
    Multiplicative factor the model applies on reaching each stage of the schedule.

    Raises:
        EmptyScheduleError: If the schedule is empty.
    """

    _check_schedule(schedule)

    factors = []
    flowered = clustered = fruit_set = frozen = False

    for stage in schedule:
        factor = 1.0
        rank = stage.object_type.development_rank

        if not flowered and (rank > 0 or stage.bbch.code >= OPEN_CLUSTER_BBCH):
            factor *= params.flower_bud_fraction
            flowered = True

        if not clustered and rank >= 1:
            factor *= params.blossoms_per_cluster
            clustered = True

        if rank >= 2:
            if fruit_set:
                factor *= 1.0 - params.attrition_rate
            else:
                factor *= params.fruit_set_fraction * math.prod(1.0 - drop for drop in params.drop_fractions)
                fruit_set = True

        if params.frost is not None and not frozen and stage.bbch >= params.frost.bbch:
            factor *= 1.0 - params.frost.kill_fraction
            frozen = True

        factors.append(factor)

    return factors


def expected_survival_slope(params: SimulationParams, stage: StageKey,
                            schedule: Optional[Sequence[StageKey]] = None) -> float:
    """
    Product of all factors applied after the stage up to harvest.

    This is the exact regression slope of harvest on stage counts in a
    noiseless season.

    Raises:
        UnknownStageError: If the stage isn't part of the schedule.
    """

    schedule = list(schedule) if schedule is not None else default_schedule(stage.date.year)
    factors = stage_factors(params, schedule)

    if stage not in schedule:
        raise UnknownStageError(f"unknown stage: {stage}")

    return math.prod(factors[schedule.index(stage) + 1:])


def simulate_branch(params: SimulationParams, schedule: Sequence[StageKey],
                    tree_id: str = "sim_1", branch_id: str = "1s1") -> list[CountRecord]:
    """
    Generates one branch trajectory over the schedule.

    Expected counts are rounded at emission. With noise, Gaussian noise drawn
    from a generator seeded with params.seed is added first and the result is
    clipped at zero. The harvest stage emits goodCrops, badCrops and totalCrops.

    Raises:
        EmptyScheduleError: If the schedule is empty.
    """

    factors = stage_factors(params, schedule)
    expected = params.initial_buds * params.count_scale * np.cumprod(factors)

    if not params.is_deterministic:
        rng = np.random.default_rng(params.seed)
        expected = np.clip(expected + rng.normal(0.0, params.noise_sd, size=len(expected)), 0.0, None)

    counts = [int(round(float(value))) for value in expected]
    records = []

    def record(stage: StageKey, object_type: ObjectType, count: int, weight: Optional[float] = None):
        return CountRecord(
            date=stage.date,
            season=stage.date.year,
            bbch=stage.bbch,
            tree_id=tree_id,
            branch_id=branch_id,
            object_type=object_type,
            object_count=count,
            crop_weight=weight,
        )

    for stage, count in zip(schedule[:-1], counts[:-1]):
        records.append(record(stage, stage.object_type, count))

    total = counts[-1]
    good = int(round(total * params.good_fraction))
    bad = total - good
    good_weight = round(good * params.fruit_weight_kg, 3)
    bad_weight = round(bad * params.fruit_weight_kg, 3)

    harvest = schedule[-1]
    records.append(record(harvest, ObjectType.GOOD_CROPS, good, good_weight))
    records.append(record(harvest, ObjectType.BAD_CROPS, bad, bad_weight))
    records.append(record(harvest, ObjectType.TOTAL_CROPS, total, round(good_weight + bad_weight, 3)))

    return records


def derive_branch_params(params: SimulationParams, index: int) -> SimulationParams:
    """
    Per-branch parameters: initial buds varied by bud_spread and a noise seed,
    both derived from the master seed and the branch index.
    """

    buds_seed, noise_seed = np.random.SeedSequence(params.seed, spawn_key=(index,)).generate_state(2)
    factor = np.random.default_rng(int(buds_seed)).uniform(1.0 - params.bud_spread, 1.0 + params.bud_spread)

    return dataclasses.replace(
        params,
        initial_buds=max(1, int(round(params.initial_buds * factor))),
        seed=int(noise_seed),
    )


def simulate_season(params: SimulationParams, n_trees: int = DEFAULT_TREES, n_branches: int = DEFAULT_BRANCHES,
                    schedule: Optional[Sequence[StageKey]] = None) -> SeasonLedger:
    """
    Simulates n_trees × n_branches branches, tree ids 'sim_<t>' and branch ids '<t>s<b>'.

    Raises:
        DomainError: If a dimension is below one.
    """

    if n_trees < 1 or n_branches < 1:
        raise DomainError(f"At least one tree and one branch are required, got {n_trees} × {n_branches}.")

    schedule = list(schedule) if schedule is not None else default_schedule()
    records = []

    for tree in range(1, n_trees + 1):
        for branch in range(1, n_branches + 1):
            branch_params = derive_branch_params(params, (tree - 1) * n_branches + (branch - 1))
            records.extend(simulate_branch(branch_params, schedule, f"sim_{tree}", f"{tree}s{branch}"))

    ledger, violations = build_ledger(records)
    errors = [violation for violation in violations if violation.is_error]

    if errors:
        raise DomainError(f"Simulated season is inconsistent: {errors[0].message}")

    _logger.info("Simulated %s trees × %s branches, %s records.", n_trees, n_branches, len(ledger))
    return ledger
