import dataclasses
import datetime
import enum
import math
from collections import Counter, defaultdict
from types import MappingProxyType
from typing import Final, Mapping, NamedTuple, Optional, Sequence, Union

from kutil.logger import get_logger

from cherryyield.errors import (
    DegeneratePredictorError, DomainError, IngestError, NoCalibrationError, NoTargetDataError, NoWeightDataError
)
from cherryyield.ingest import month_day_label, parse_decimal, parse_season_date, read_cells, row_cells, write_cells
from cherryyield.phenology import WHOLE_TREE, BbchStage, ObjectType, SeasonLedger
from cherryyield.regression import (
    RegressionFit, fit_ols, p_value_band, predict_with_interval, student_t_quantile
)

_logger = get_logger(__name__)


DEFAULT_LEVEL: Final[float] = 0.95
MIN_PAIRS: Final[int] = 3
FRUIT_DROP_COMPLETE_BBCH: Final[int] = 73
"""
Stage after which the second fruit drop is over and fruit numbers stabilise.
"""

TARGETS: Final[tuple[ObjectType, ...]] = (ObjectType.TOTAL_CROPS, ObjectType.GOOD_CROPS)

_OBJECT_NAMES: Final[dict[ObjectType, str]] = {
    ObjectType.BUD: "Buds",
    ObjectType.BLOSSOM: "Blossoms",
    ObjectType.CHERRY: "Cherries",
    ObjectType.GOOD_CROPS: "goodCrops",
    ObjectType.BAD_CROPS: "badCrops",
    ObjectType.TOTAL_CROPS: "totalCrops",
}

TABLE_COLUMNS: Final[tuple[str, ...]] = (
    "Date", "Object", "Development stage", "BBCH", "Slope", "Intercept", "R2", "p-value", "n"
)
EXACT_COLUMNS: Final[tuple[str, ...]] = (
    "target", "slope_exact", "intercept_exact", "r2_exact", "p_value_exact",
    "residual_se", "sxx", "mean_x", "mean_y", "harvest_date"
)
DEGENERATE: Final[str] = "degenerate"
UNKNOWN: Final[str] = "n/a"


@dataclasses.dataclass(frozen=True, order=True)
class StageKey:
    """
    One measurement campaign day of a season.

    Keys compare by (date, bbch); the object type and the stage label are
    descriptive.
    """

    date: datetime.date
    bbch: BbchStage
    object_type: ObjectType = dataclasses.field(default=ObjectType.BUD, compare=False)
    development_stage_label: str = dataclasses.field(default="", compare=False)

    @classmethod
    def create(cls, date: datetime.date, bbch: BbchStage, object_type: ObjectType) -> "StageKey":
        return cls(date, bbch, object_type, bbch.description)

    @property
    def label(self) -> str:
        return month_day_label(self.date)

    def __str__(self):
        return f"{self.label} (BBCH {self.bbch.code})"


class RiskSeverity(enum.IntEnum):
    LOW = 1
    MEDIUM = 2
    HIGH = 3


@dataclasses.dataclass(frozen=True)
class RiskWindow:
    """
    A span of development during which an external event can invalidate a forecast.

    Attributes:
        label (str): What can happen, e.g. 'night frost during flowering'.
        bbch_range (tuple[BbchStage, BbchStage]): Inclusive stage range.
        severity (RiskSeverity): Ordinal impact of the event.
    """

    label: str
    bbch_range: tuple[BbchStage, BbchStage]
    severity: RiskSeverity

    def __post_init__(self):
        start, end = self.bbch_range

        if start > end:
            raise DomainError(f"Risk window '{self.label}' has an empty range {start}..{end}.")

    @property
    def start(self) -> BbchStage:
        return self.bbch_range[0]

    def remaining_fraction(self, bbch: BbchStage) -> float:
        """
        Share of the window still ahead of a stage: 1 before it opens, 0 once it's over.
        """

        start, end = self.bbch_range[0].code, self.bbch_range[1].code

        if bbch.code <= start:
            return 1.0

        if bbch.code >= end:
            return 0.0

        return (end - bbch.code) / (end - start)

    def mass_ahead(self, bbch: BbchStage) -> float:
        return int(self.severity) * self.remaining_fraction(bbch)


DEFAULT_RISKS: Final[tuple[RiskWindow, ...]] = (
    RiskWindow("night frost during flowering", (BbchStage(60), BbchStage(69)), RiskSeverity.HIGH),
    RiskWindow("drought during fruit growth", (BbchStage(71), BbchStage(85)), RiskSeverity.MEDIUM),
)


@dataclasses.dataclass(frozen=True)
class ScoringWeights:
    fit: float = 1.0
    early: float = 0.5
    risk: float = 0.5


class Recommendation(NamedTuple):
    stage: StageKey
    score: float
    rationale: str


class PhaseRecommendation(NamedTuple):
    early: Optional[Recommendation]
    after_fruit_drop: Optional[Recommendation]


class ForecastScope(str, enum.Enum):
    BRANCH = "branch"
    TREE = "tree"


class TreeMode(str, enum.Enum):
    SUM_OF_BRANCHES = "sum_of_branches"
    WHOLE_TREE = "whole_tree"


@dataclasses.dataclass(frozen=True)
class Forecast:
    """
    Predicted harvest count with its interval at the stated coverage level.
    """

    point: float
    lower: float
    upper: float
    level: float
    stage_used: StageKey
    scope: ForecastScope
    weight_estimate: Optional[float] = None
    annotations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lower <= self.point <= self.upper:
            raise DomainError(f"Forecast bounds out of order: {self.lower} <= {self.point} <= {self.upper}.")

        if self.weight_estimate is not None and self.weight_estimate < 0:
            raise DomainError(f"Weight estimate must not be negative, got {self.weight_estimate}.")


class StagePair(NamedTuple):
    tree_id: str
    branch_id: str
    x: int
    y: int


@dataclasses.dataclass(frozen=True)
class CalibrationTable:
    """
    Stage-indexed regression fits converting counts into harvest forecasts.

    Attributes:
        season (int): Season the fits were estimated on.
        target (ObjectType): totalCrops or goodCrops.
        entries (Mapping[StageKey, RegressionFit]): Fits ordered by date.
        harvest_date (Optional[date]): Harvest day of the season, when known.
        annotations (tuple[str, ...]): Notes about skipped stages.
    """

    season: int
    target: ObjectType
    entries: Mapping[StageKey, RegressionFit]
    harvest_date: Optional[datetime.date] = None
    annotations: tuple[str, ...] = ()

    def __post_init__(self):
        if self.target not in TARGETS:
            raise DomainError(f"Calibration target must be one of {[str(t) for t in TARGETS]}, got {self.target}.")

        ordered = dict(sorted(self.entries.items(), key=lambda item: item[0]))
        object.__setattr__(self, "entries", MappingProxyType(ordered))

    def __len__(self):
        return len(self.entries)

    @property
    def stages(self) -> list[StageKey]:
        return list(self.entries)

    def find_stage(self, stage: Union[StageKey, datetime.date, str]) -> StageKey:
        """
        Resolves a stage from a StageKey, a date, an ISO date string or a 'Jul-6' label.

        Raises:
            NoCalibrationError: If no entry matches.
        """

        if isinstance(stage, StageKey):
            stage = stage.date

        if isinstance(stage, datetime.date):
            matches = [key for key in self.entries if key.date == stage]
        else:
            text = str(stage).strip()

            try:
                wanted = parse_season_date(text, self.season)
            except ValueError:
                raise NoCalibrationError(text, self.__labels()) from None

            month_day_only = "-" in text and not text[:4].isdigit()
            matches = [
                key for key in self.entries
                if (key.date.month, key.date.day) == (wanted.month, wanted.day)
                and (month_day_only or key.date == wanted)
            ]

        if not matches:
            raise NoCalibrationError(str(stage), self.__labels())

        return matches[0]

    def fit_for(self, stage: Union[StageKey, datetime.date, str]) -> RegressionFit:
        return self.entries[self.find_stage(stage)]

    def __labels(self) -> list[str]:
        return [key.label for key in self.entries]


def stage_keys(ledger: SeasonLedger) -> list[StageKey]:
    """
    Derives one StageKey per measurement day from the modal (BBCH, object type)
    of that day's developmental branch records.
    """

    per_day: dict[datetime.date, Counter] = defaultdict(Counter)

    for record in ledger:
        if record.object_type.is_developmental and record.branch_id != WHOLE_TREE:
            per_day[record.date][(record.bbch, record.object_type)] += 1

    keys = []

    for date in sorted(per_day):
        counts = per_day[date]
        (bbch, object_type), _ = max(
            counts.items(),
            key=lambda item: (item[1], item[0][0], item[0][1].development_rank)
        )
        keys.append(StageKey.create(date, bbch, object_type))

    return keys


def _check_target(target: ObjectType):
    if target not in TARGETS:
        raise DomainError(f"Target must be one of {[str(t) for t in TARGETS]}, got {target}.")


def pair_stage_with_harvest(ledger: SeasonLedger, stage: StageKey,
                            target: ObjectType = ObjectType.TOTAL_CROPS) -> list[StagePair]:
    """
    Pairs each branch's developmental count on the stage's date with its harvest count.

    Branches missing either side are left out (pairwise-complete deletion).
    """

    _check_target(target)
    pairs = []

    for tree_id, branch_id in ledger.branches():
        if branch_id == WHOLE_TREE:
            continue

        harvest = ledger.harvest_records(tree_id, branch_id).get(target)

        if harvest is None:
            continue

        observed = [
            record for record in ledger.records_for(tree_id, branch_id)
            if record.date == stage.date and record.object_type.is_developmental
        ]

        if observed:
            x = sum(record.object_count for record in observed)
            pairs.append(StagePair(tree_id, branch_id, x, harvest.object_count))

    return pairs


def calibrate(ledger: SeasonLedger, target: ObjectType = ObjectType.TOTAL_CROPS) -> CalibrationTable:
    """
    Fits one regression per measurement day, counts at that day against harvest counts.

    Days with fewer than three complete branches, or without any spread in
    their counts, are skipped and noted in the table's annotations.

    Raises:
        NoTargetDataError: If no branch has a harvest record of the target type.
    """

    _check_target(target)

    harvests = [
        ledger.harvest_records(tree_id, branch_id).get(target)
        for tree_id, branch_id in ledger.branches() if branch_id != WHOLE_TREE
    ]
    harvests = [record for record in harvests if record is not None]

    if not harvests:
        raise NoTargetDataError(f"no target data: the ledger holds no {target} branch harvest records")

    seasons = ledger.seasons
    if len(seasons) > 1:
        _logger.warning("Ledger spans seasons %s; calibrating as season %s.", seasons, seasons[-1])

    entries: dict[StageKey, RegressionFit] = {}
    annotations = []

    for stage in stage_keys(ledger):
        pairs = pair_stage_with_harvest(ledger, stage, target)

        if len(pairs) < MIN_PAIRS:
            annotations.append(f"{stage.label}: skipped, only {len(pairs)} complete branches")
            _logger.warning("Skipping stage %s: only %s complete branches.", stage, len(pairs))
            continue

        try:
            fit = fit_ols([(pair.x, pair.y) for pair in pairs])
        except DegeneratePredictorError:
            annotations.append(f"{stage.label}: skipped, all branches have the same count")
            _logger.warning("Skipping stage %s: counts have no spread.", stage)
            continue

        _logger.info("Stage %s: n=%s, slope=%.4f, intercept=%.4f, R²=%s.",
                     stage, fit.n, fit.slope, fit.intercept, fit.r_squared)
        entries[stage] = fit

    return CalibrationTable(
        season=seasons[-1],
        target=target,
        entries=entries,
        harvest_date=max(record.date for record in harvests),
        annotations=tuple(annotations),
    )


def forecast_branch(cal: CalibrationTable, stage: Union[StageKey, datetime.date, str], count: float,
                    level: float = DEFAULT_LEVEL, mean_fruit_weight_kg: Optional[float] = None,
                    season: Optional[int] = None) -> Forecast:
    """
    Forecasts the harvest of one branch from its count at a calibrated stage.

    Raises:
        NoCalibrationError: If the stage isn't in the calibration.
        DomainError: If the count is negative.
    """

    if count < 0:
        raise DomainError(f"Counts must not be negative, got {count}.")

    key = cal.find_stage(stage)
    interval = predict_with_interval(cal.entries[key], count, level)

    return _finish_forecast(
        cal, key, interval.point, interval.lower, interval.upper, level,
        ForecastScope.BRANCH, list(interval.annotations), mean_fruit_weight_kg, season
    )


def forecast_tree(cal: CalibrationTable, stage: Union[StageKey, datetime.date, str], branch_counts: Sequence[float],
                  mode: TreeMode = TreeMode.SUM_OF_BRANCHES, level: float = DEFAULT_LEVEL,
                  mean_fruit_weight_kg: Optional[float] = None, season: Optional[int] = None) -> Forecast:
    """
    Forecasts a tree's harvest from the counts of its branch units.

    * **sum_of_branches:** branch forecasts are summed, interval bounds included.
    * **whole_tree:** the slope is applied to the summed count and the
      intercept once per branch unit; the interval accounts for the k units.

    Raises:
        NoCalibrationError: If the stage isn't in the calibration.
        DomainError: If no counts, or a negative count, are given.
    """

    if not branch_counts:
        raise DomainError("At least one branch count is required.")

    key = cal.find_stage(stage)

    if len(branch_counts) == 1:
        single = forecast_branch(cal, key, branch_counts[0], level, mean_fruit_weight_kg, season)
        return dataclasses.replace(single, scope=ForecastScope.TREE)

    if any(count < 0 for count in branch_counts):
        raise DomainError(f"Counts must not be negative, got {list(branch_counts)}.")

    if mode is TreeMode.SUM_OF_BRANCHES:
        forecasts = [forecast_branch(cal, key, count, level) for count in branch_counts]
        annotations = [f"conservative: interval bounds of {len(forecasts)} branch forecasts summed"]

        for forecast in forecasts:
            annotations.extend(note for note in forecast.annotations if note not in annotations)

        return _finish_forecast(
            cal, key,
            sum(forecast.point for forecast in forecasts),
            sum(forecast.lower for forecast in forecasts),
            sum(forecast.upper for forecast in forecasts),
            level, ForecastScope.TREE, annotations, mean_fruit_weight_kg, season
        )

    fit = cal.entries[key]
    units = len(branch_counts)
    total = sum(branch_counts)
    point = fit.slope * total + units * fit.intercept
    annotations = [f"extrapolation: branch-level calibration applied to {units} branch units as one tree"]

    if not fit.has_interval_statistics or fit.residual_se == 0.0:
        annotations.append("degenerate: interval collapsed to the point")
        lower = upper = point
    else:
        t = student_t_quantile(level, fit.df)
        half_width = t * fit.residual_se * math.sqrt(
            units + units ** 2 / fit.n + (total - units * fit.mean_x) ** 2 / fit.sxx
        )
        lower, upper = point - half_width, point + half_width

    return _finish_forecast(cal, key, point, lower, upper, level, ForecastScope.TREE, annotations,
                            mean_fruit_weight_kg, season)


def _finish_forecast(cal: CalibrationTable, key: StageKey, point: float, lower: float, upper: float,
                     level: float, scope: ForecastScope, annotations: list[str],
                     mean_fruit_weight_kg: Optional[float], season: Optional[int]) -> Forecast:
    """
    Applies the non-negativity clamp, the cross-season note and the weight estimate.
    """

    if point < 0:
        annotations.append(f"clamped: raw forecast {point:.2f} is negative, reported as 0")
        _logger.warning("Forecast at %s clamped from %.2f to 0.", key, point)
        point, lower, upper = 0.0, max(lower, 0.0), max(upper, 0.0)

    if season is not None and season != cal.season:
        annotations.append(
            f"cross-season: {cal.season} calibration applied to {season} counts; "
            f"events such as frost can invalidate the transfer"
        )
        _logger.warning("Applying %s calibration to season %s.", cal.season, season)

    weight_estimate = None

    if mean_fruit_weight_kg is not None:
        if mean_fruit_weight_kg < 0:
            raise DomainError(f"Mean fruit weight must not be negative, got {mean_fruit_weight_kg}.")

        weight_estimate = point * mean_fruit_weight_kg

    return Forecast(
        point=point,
        lower=lower,
        upper=upper,
        level=level,
        stage_used=key,
        scope=scope,
        weight_estimate=weight_estimate,
        annotations=tuple(annotations),
    )


def mean_fruit_weight(ledger: SeasonLedger) -> float:
    """
    Average mass of one harvested fruit in kilograms over all weighed totalCrops records.

    Raises:
        NoWeightDataError: If no weighed harvest record has a positive count.
    """

    weighed = [
        record for record in ledger
        if record.object_type is ObjectType.TOTAL_CROPS and record.crop_weight is not None
    ]
    total_count = sum(record.object_count for record in weighed)

    if total_count <= 0:
        raise NoWeightDataError("no weight data: no weighed totalCrops record with a positive count")

    return sum(record.crop_weight for record in weighed) / total_count


def recommend_timepoints(cal: CalibrationTable, risks: Sequence[RiskWindow] = DEFAULT_RISKS,
                         weights: ScoringWeights = ScoringWeights()) -> list[Recommendation]:
    """
    Ranks calibrated stages by fit quality, earliness and the risk still ahead.

    score = w_fit·R² + w_early·earliness − w_risk·(severity mass of risk windows ahead)

    Earliness is the time left until harvest relative to the first stage.
    Ties are broken by the earlier date.

    The ranking is not the after-fruit-drop choice: under the default weights
    later stages can outscore the first one past the drop. recommend_phases
    picks that stage by date, as the earliest one at BBCH >= 73.
    """

    if not cal.entries:
        return []

    stages = cal.stages
    end = cal.harvest_date or stages[-1].date
    span = (end - stages[0].date).days
    ranked = []

    for stage, fit in cal.entries.items():
        earliness = (end - stage.date).days / span if span > 0 else 0.0
        risk_mass = sum(window.mass_ahead(stage.bbch) for window in risks)
        ahead = [window.label for window in risks if window.remaining_fraction(stage.bbch) > 0]
        r_squared = fit.r_squared or 0.0

        score = weights.fit * r_squared + weights.early * earliness - weights.risk * risk_mass
        rationale = (
            f"R²={r_squared:.2f}, earliness={earliness:.2f}, risk ahead={risk_mass:.2f}"
            + (f" ({'; '.join(ahead)})" if ahead else "")
        )
        ranked.append(Recommendation(stage, score, rationale))

    ranked.sort(key=lambda recommendation: (-recommendation.score, recommendation.stage.date))
    return ranked


def recommend_phases(cal: CalibrationTable, risks: Sequence[RiskWindow] = DEFAULT_RISKS,
                     weights: ScoringWeights = ScoringWeights()) -> PhaseRecommendation:
    """
    Picks the two forecasting timepoints of the earliness/risk trade-off.

    * **early:** the best-scoring stage before the first risk window opens.
    * **after_fruit_drop:** the earliest stage once the second fruit drop is
      over (BBCH 73 or later).
    """

    ranked = recommend_timepoints(cal, risks, weights)
    first_risk = min((window.start for window in risks), default=None)

    early = next(
        (item for item in ranked if first_risk is None or item.stage.bbch < first_risk),
        None
    )
    after_drop = min(
        (item for item in ranked if item.stage.bbch.code >= FRUIT_DROP_COMPLETE_BBCH),
        key=lambda item: item.stage.date,
        default=None
    )

    return PhaseRecommendation(early, after_drop)


def _exact(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _p_value_label(fit: RegressionFit) -> str:
    if fit.p_value is not None:
        return p_value_band(fit.p_value)

    # Fits read from result tables carry no p-value at all.
    return DEGENERATE if fit.has_interval_statistics else UNKNOWN


def calibration_rows(cal: CalibrationTable) -> list[dict[str, object]]:
    """
    Table-shaped rows of a calibration, rounded columns first, then full precision ones.
    """

    rows = []

    for stage, fit in cal.entries.items():
        rows.append({
            "Date": stage.date.isoformat(),
            "Object": _OBJECT_NAMES[stage.object_type],
            "Development stage": stage.development_stage_label or stage.bbch.description,
            "BBCH": stage.bbch.code,
            "Slope": f"{fit.slope:.2f}",
            "Intercept": f"{fit.intercept:.2f}",
            "R2": DEGENERATE if fit.r_squared is None else f"{fit.r_squared:.6f}",
            "p-value": _p_value_label(fit),
            "n": fit.n,
            "target": cal.target.value,
            "slope_exact": _exact(fit.slope),
            "intercept_exact": _exact(fit.intercept),
            "r2_exact": _exact(fit.r_squared),
            "p_value_exact": _exact(fit.p_value),
            "residual_se": _exact(fit.residual_se),
            "sxx": _exact(fit.sxx),
            "mean_x": _exact(fit.mean_x),
            "mean_y": _exact(fit.mean_y),
            "harvest_date": cal.harvest_date.isoformat() if cal.harvest_date else "",
        })

    return rows


def calibration_to_csv(cal: CalibrationTable) -> str:
    """
    Serializes a calibration as CSV in the layout of a regression result table,
    extended with full precision columns.
    """
    return write_cells(calibration_rows(cal), TABLE_COLUMNS + EXACT_COLUMNS)


def _normalize_column(name: str) -> str:
    return name.strip().lstrip("\ufeff").lower().replace(" ", "").replace("²", "2")


def _parse_object(text: str) -> ObjectType:
    lookup = text.strip().lower()

    for object_type, name in _OBJECT_NAMES.items():
        if lookup in (name.lower(), object_type.value.lower()):
            return object_type

    raise ValueError(f"unknown object '{text}'")


def parse_calibration_csv(text: str, season_year: Optional[int] = None,
                          target: Optional[ObjectType] = None) -> CalibrationTable:
    """
    Loads a calibration written by calibration_to_csv, or a bare result table
    with only the Date, Object, Development stage, BBCH, Slope, Intercept, R2,
    p-value and n columns.

    Full precision columns take precedence over rounded ones when present.
    Fits loaded without residual statistics predict points but no intervals.

    Args:
        text (str): CSV content.
        season_year (Optional[int]): Year for 'Jul-6' style dates.
        target (Optional[ObjectType]): Target to assume when the file has no target column.

    Raises:
        IngestError: If the header or a row can't be interpreted.
    """

    frame = read_cells(text, source_name="Calibration CSV")
    header = [_normalize_column(cell) for cell in row_cells(frame.iloc[0])]

    required = ["date", "object", "developmentstage", "bbch", "slope", "intercept", "n"]
    missing = [column for column in required if column not in header]

    if missing:
        raise IngestError(f"Calibration CSV is missing columns: {', '.join(missing)}.")

    entries: dict[StageKey, RegressionFit] = {}
    harvest_date = None
    targets = set()

    for position, *row in frame.iloc[1:].itertuples(name=None):
        cells = row_cells(row)
        row_number = position + 1

        if not any(cell.strip() for cell in cells):
            continue

        values = {name: cell.strip() for name, cell in zip(header, cells)}

        def optional_float(*names: str) -> Optional[float]:
            for name in names:
                value = values.get(name, "")
                if value and value != DEGENERATE:
                    return parse_decimal(value)
            return None

        try:
            date = parse_season_date(values["date"], season_year)
            bbch = BbchStage(int(values["bbch"]))
            object_type = _parse_object(values["object"])
            stage = StageKey(date, bbch, object_type, values["developmentstage"] or bbch.description)

            fit = RegressionFit(
                slope=optional_float("slope_exact", "slope"),
                intercept=optional_float("intercept_exact", "intercept"),
                r_squared=optional_float("r2_exact", "r2"),
                p_value=optional_float("p_value_exact"),
                n=int(values["n"]),
                residual_se=optional_float("residual_se"),
                sxx=optional_float("sxx"),
                mean_x=optional_float("mean_x"),
                mean_y=optional_float("mean_y"),
            )

            if values.get("harvest_date"):
                harvest_date = parse_season_date(values["harvest_date"], season_year)
        except (ValueError, TypeError, KeyError) as error:
            raise IngestError(f"Calibration CSV row {row_number}: {error}") from error

        if fit.slope is None or fit.intercept is None:
            raise IngestError(f"Calibration CSV row {row_number}: slope and intercept are required.")

        if values.get("target"):
            targets.add(ObjectType.parse(values["target"]))

        entries[stage] = fit

    if len(targets) > 1:
        raise IngestError(f"Calibration CSV mixes targets {sorted(str(t) for t in targets)}.")

    season = season_year if season_year is not None else min((key.date.year for key in entries), default=None)

    if season is None:
        raise IngestError("Calibration CSV has no rows and no season was given.")

    return CalibrationTable(
        season=season,
        target=targets.pop() if targets else (target or ObjectType.TOTAL_CROPS),
        entries=entries,
        harvest_date=harvest_date,
    )
