import dataclasses
import datetime
import enum
import numbers
from collections import defaultdict
from typing import Final, Iterable, Iterator, NamedTuple, Optional, Sequence

from kutil.logger import get_logger

from cherryyield.errors import DomainError, NotFoundError

_logger = get_logger(__name__)


WHOLE_TREE: Final[str] = "WHOLE_TREE"
"""
Reserved branch identifier for records that cover a whole tree.
"""

WEIGHT_TOLERANCE_KG: Final[float] = 1e-9
"""
Largest accepted difference between goodCrops + badCrops and totalCrops weight.
"""

_STAGE_DESCRIPTIONS: Final[dict[int, str]] = {
    51: "Swelling",
    56: "Open cluster",
    60: "First bloom",
    65: "Full bloom",
    75: "Development of fruit",
    81: "Beginning of fruit coloring",
    85: "Advanced fruit coloring",
    89: "Harvest ripe",
}


@dataclasses.dataclass(frozen=True, order=True)
class BbchStage:
    """
    A phenological development stage on the BBCH scale.

    Stages are totally ordered by their numeric code.

    Attributes:
        code (int): BBCH code in [0, 99].
    """

    code: int

    def __post_init__(self):
        if isinstance(self.code, bool) or not isinstance(self.code, numbers.Integral) \
                or not 0 <= self.code <= 99:
            raise DomainError(f"BBCH code must be an integer in [0, 99], got {self.code!r}.")

        object.__setattr__(self, "code", int(self.code))

    @property
    def principal_stage(self) -> int:
        """
        Principal growth stage (the tens digit of the code).
        """
        return self.code // 10

    @property
    def description(self) -> str:
        """
        Human readable name of the stage, or a generic label for stages
        without a registered description.
        """
        return _STAGE_DESCRIPTIONS.get(self.code, f"BBCH {self.code}")

    def __str__(self):
        return str(self.code)


class ObjectType(str, enum.Enum):
    """
    Kind of object counted in an observation.
    """

    BUD = "bud"
    BLOSSOM = "blossom"
    CHERRY = "cherry"
    GOOD_CROPS = "goodCrops"
    BAD_CROPS = "badCrops"
    TOTAL_CROPS = "totalCrops"

    @property
    def is_harvest(self) -> bool:
        return self in _HARVEST_TYPES

    @property
    def is_developmental(self) -> bool:
        return not self.is_harvest

    @property
    def development_rank(self) -> int:
        """
        Position in the bud → blossom → cherry → harvest sequence.
        """
        return _DEVELOPMENT_RANK[self]

    @property
    def sort_index(self) -> int:
        return _SORT_INDEX[self]

    @classmethod
    def parse(cls, text: str) -> "ObjectType":
        """
        Resolves an object type from its name, ignoring case.

        Raises:
            ValueError: If the name isn't a known object type.
        """

        lookup = text.strip().lower()
        for object_type in cls:
            if object_type.value.lower() == lookup:
                return object_type

        raise ValueError(f"unknown object type '{text}'")

    def __str__(self):
        return self.value


_HARVEST_TYPES: Final = frozenset({ObjectType.GOOD_CROPS, ObjectType.BAD_CROPS, ObjectType.TOTAL_CROPS})
_DEVELOPMENT_RANK: Final = {
    ObjectType.BUD: 0,
    ObjectType.BLOSSOM: 1,
    ObjectType.CHERRY: 2,
    ObjectType.GOOD_CROPS: 3,
    ObjectType.BAD_CROPS: 3,
    ObjectType.TOTAL_CROPS: 3,
}
_SORT_INDEX: Final = {object_type: index for index, object_type in enumerate(ObjectType)}


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


class RuleId(str, enum.Enum):
    """
    Closed set of rules a Violation can refer to.
    """

    NEGATIVE_COUNT = "negative-count"
    NON_INTEGRAL_COUNT = "non-integral-count"
    WEIGHT_ON_NON_HARVEST = "weight-on-non-harvest"
    NEGATIVE_WEIGHT = "negative-weight"
    SEASON_MISMATCH = "season-mismatch"
    COUNT_MISMATCH = "count-mismatch"
    WEIGHT_MISMATCH = "weight-mismatch"
    MISSING_TOTAL = "missing-total"
    HARVEST_NOT_FINAL = "harvest-not-final"
    STAGE_ORDER = "stage-order"
    POSSIBLE_MISCOUNT = "possible-miscount"
    DUPLICATE_KEY = "duplicate-key"
    MALFORMED_ROW = "malformed-row"
    INVALID_DATE = "invalid-date"
    INVALID_BBCH = "invalid-bbch"
    UNKNOWN_OBJECT_TYPE = "unknown-object-type"
    INVALID_NUMBER = "invalid-number"

    def __str__(self):
        return self.value


RecordKey = tuple[datetime.date, str, str, ObjectType]


@dataclasses.dataclass(frozen=True)
class Violation:
    """
    A data problem found while reading or validating observations.

    Attributes:
        severity (Severity): Errors drop data, warnings keep it.
        rule_id (RuleId): The rule that was broken.
        message (str): Human readable description.
        offending_keys (tuple): Keys of the records involved.
        row (Optional[int]): CSV row number, when the problem was found while parsing.
    """

    severity: Severity
    rule_id: RuleId
    message: str
    offending_keys: tuple = ()
    row: Optional[int] = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR


@dataclasses.dataclass(frozen=True)
class CountRecord:
    """
    One dated observation of one object type on one branch or tree.
    """

    date: datetime.date
    season: int
    bbch: BbchStage
    tree_id: str
    branch_id: str
    object_type: ObjectType
    object_count: int
    branch_color: Optional[str] = None
    crop_weight: Optional[float] = None

    @property
    def key(self) -> RecordKey:
        return self.date, self.tree_id, self.branch_id, self.object_type

    @property
    def branch(self) -> tuple[str, str]:
        return self.tree_id, self.branch_id

    @property
    def is_whole_tree(self) -> bool:
        return self.branch_id == WHOLE_TREE


def describe_key(key: RecordKey) -> str:
    """
    Human readable form of a record key, e.g. '2023-07-14 satin_2/2s1 totalCrops'.

    Args:
        key (RecordKey): Date, tree, branch and object type of a record.

    Returns:
        str: Text used in violation messages.
    """

    date, tree_id, branch_id, object_type = key
    return f"{date.isoformat()} {tree_id}/{branch_id} {object_type}"


def _sort_key(record: CountRecord):
    return record.tree_id, record.branch_id, record.date, record.object_type.sort_index


@dataclasses.dataclass(frozen=True)
class SeasonLedger:
    """
    Validated, deduplicated observations of one season.

    Records are kept sorted by (tree_id, branch_id, date, object_type), so two
    ledgers holding the same records compare equal.
    """

    records: tuple[CountRecord, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.records, key=_sort_key))

        if len({record.key for record in ordered}) != len(ordered):
            raise DomainError("Ledger records must have unique keys.")

        object.__setattr__(self, "records", ordered)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[CountRecord]:
        return iter(self.records)

    @property
    def is_empty(self) -> bool:
        return len(self.records) == 0

    @property
    def seasons(self) -> list[int]:
        return sorted({record.season for record in self.records})

    def branches(self) -> list[tuple[str, str]]:
        """
        Returns every (tree_id, branch_id) pair present, WHOLE_TREE included.
        """
        return sorted({record.branch for record in self.records})

    def records_for(self, tree_id: str, branch_id: str) -> list[CountRecord]:
        return [record for record in self.records if record.branch == (tree_id, branch_id)]

    def harvest_records(self, tree_id: str, branch_id: str) -> dict[ObjectType, CountRecord]:
        """
        Returns the crop records of a branch on its latest harvest date.
        """

        crops = [record for record in self.records_for(tree_id, branch_id) if record.object_type.is_harvest]

        if not crops:
            return {}

        harvest_date = max(record.date for record in crops)
        return {record.object_type: record for record in crops if record.date == harvest_date}


def validate_record(record: CountRecord) -> list[Violation]:
    """
    Checks a single record against the CountRecord invariants.

    Args:
        record (CountRecord): The record to check.

    Returns:
        list[Violation]: Empty when the record is valid.
    """

    violations = []
    keys = (record.key,)
    count = record.object_count

    if isinstance(count, bool) or not isinstance(count, numbers.Integral):
        violations.append(Violation(
            Severity.ERROR, RuleId.NON_INTEGRAL_COUNT,
            f"non-integral count {count!r} for {describe_key(record.key)}", keys
        ))
    elif count < 0:
        violations.append(Violation(
            Severity.ERROR, RuleId.NEGATIVE_COUNT,
            f"negative count {count} for {describe_key(record.key)}", keys
        ))

    if record.crop_weight is not None:
        if not record.object_type.is_harvest:
            violations.append(Violation(
                Severity.ERROR, RuleId.WEIGHT_ON_NON_HARVEST,
                f"crop weight given for {record.object_type} in {describe_key(record.key)}", keys
            ))

        if record.crop_weight < 0:
            violations.append(Violation(
                Severity.ERROR, RuleId.NEGATIVE_WEIGHT,
                f"negative crop weight {record.crop_weight} for {describe_key(record.key)}", keys
            ))

    if record.date.year != record.season:
        violations.append(Violation(
            Severity.ERROR, RuleId.SEASON_MISMATCH,
            f"date {record.date.isoformat()} lies outside season {record.season}", keys
        ))

    return violations


def check_harvest_consistency(group: Sequence[CountRecord]) -> list[Violation]:
    """
    Checks that goodCrops and badCrops add up to totalCrops for one harvest group.

    Args:
        group (Sequence[CountRecord]): Harvest records sharing date, tree and branch.

    Returns:
        list[Violation]: Errors for count or weight mismatches and missing totals.

    Raises:
        DomainError: If the records don't share (date, tree_id, branch_id).
    """

    if len({(record.date, record.tree_id, record.branch_id) for record in group}) > 1:
        raise DomainError("A harvest group must share date, tree and branch.")

    by_type = {record.object_type: record for record in group if record.object_type.is_harvest}
    good = by_type.get(ObjectType.GOOD_CROPS)
    bad = by_type.get(ObjectType.BAD_CROPS)
    total = by_type.get(ObjectType.TOTAL_CROPS)

    if good is None or bad is None:
        return []

    if total is None:
        return [Violation(
            Severity.ERROR, RuleId.MISSING_TOTAL,
            f"missing totalCrops beside goodCrops and badCrops for {describe_key(good.key)}",
            (good.key, bad.key)
        )]

    violations = []
    keys = (good.key, bad.key, total.key)

    if good.object_count + bad.object_count != total.object_count:
        violations.append(Violation(
            Severity.ERROR, RuleId.COUNT_MISMATCH,
            f"count mismatch: goodCrops {good.object_count} + badCrops {bad.object_count} "
            f"!= totalCrops {total.object_count}",
            keys
        ))

    weights = (good.crop_weight, bad.crop_weight, total.crop_weight)

    if all(weight is not None for weight in weights):
        difference = abs(good.crop_weight + bad.crop_weight - total.crop_weight)

        if difference > WEIGHT_TOLERANCE_KG:
            violations.append(Violation(
                Severity.ERROR, RuleId.WEIGHT_MISMATCH,
                f"weight mismatch: goodCrops {good.crop_weight} kg + badCrops {bad.crop_weight} kg "
                f"!= totalCrops {total.crop_weight} kg",
                keys
            ))

    return violations


def build_ledger(records: Iterable[CountRecord]) -> tuple[SeasonLedger, list[Violation]]:
    """
    Turns raw records into a validated season ledger.

    * **Records** failing validate_record are dropped.
    * **Duplicates** of an already accepted key produce a warning; the first one is kept.
    * **Harvest groups** that are inconsistent, or not on the branch's final
      observation date, are dropped.
    * **Plausibility** problems (stage order, rising cherry counts) are reported as warnings.

    Args:
        records (Iterable[CountRecord]): Raw records in input order.

    Returns:
        tuple[SeasonLedger, list[Violation]]: The ledger and every drop or warning.
    """

    violations: list[Violation] = []
    accepted: dict[RecordKey, CountRecord] = {}

    for record in records:
        problems = validate_record(record)
        violations.extend(problems)

        if any(problem.is_error for problem in problems):
            continue

        if record.key in accepted:
            violations.append(Violation(
                Severity.WARNING, RuleId.DUPLICATE_KEY,
                f"duplicate record {describe_key(record.key)}; keeping the first occurrence",
                (record.key,)
            ))
            continue

        accepted[record.key] = record

    kept, harvest_violations = _drop_inconsistent_harvests(list(accepted.values()))
    violations.extend(harvest_violations)

    ledger = SeasonLedger(tuple(kept))
    violations.extend(_plausibility_warnings(ledger))

    _logger.info("Built ledger with %s records (%s violations).", len(ledger), len(violations))
    return ledger, violations


def _drop_inconsistent_harvests(records: list[CountRecord]) -> tuple[list[CountRecord], list[Violation]]:
    """
    Removes crop records that break the harvest rules of a branch.
    """

    violations = []
    dropped: set[RecordKey] = set()
    by_branch: dict[tuple[str, str], list[CountRecord]] = defaultdict(list)

    for record in records:
        by_branch[record.branch].append(record)

    for branch_records in by_branch.values():
        final_date = max(record.date for record in branch_records)
        crops = [record for record in branch_records if record.object_type.is_harvest]

        for record in crops:
            if record.date != final_date:
                dropped.add(record.key)
                violations.append(Violation(
                    Severity.ERROR, RuleId.HARVEST_NOT_FINAL,
                    f"harvest record {describe_key(record.key)} precedes the branch's final "
                    f"observation on {final_date.isoformat()}",
                    (record.key,)
                ))

        group = [record for record in crops if record.date == final_date]
        problems = check_harvest_consistency(group)

        if any(problem.is_error for problem in problems):
            dropped.update(record.key for record in group)

        violations.extend(problems)

    return [record for record in records if record.key not in dropped], violations


def _plausibility_warnings(ledger: SeasonLedger) -> list[Violation]:
    """
    Flags stage-order regressions and rising cherry counts before harvest.
    """

    violations = []

    for tree_id, branch_id in ledger.branches():
        if branch_id == WHOLE_TREE:
            continue

        branch_records = ledger.records_for(tree_id, branch_id)
        harvest = ledger.harvest_records(tree_id, branch_id)
        harvest_date = next(iter(harvest.values())).date if harvest else None

        highest: Optional[CountRecord] = None
        cherry_counts: dict[datetime.date, int] = defaultdict(int)
        cherry_keys: dict[datetime.date, list[RecordKey]] = defaultdict(list)

        for record in branch_records:
            if not record.object_type.is_developmental:
                continue

            if highest is not None and record.object_type.development_rank < highest.object_type.development_rank:
                violations.append(Violation(
                    Severity.WARNING, RuleId.STAGE_ORDER,
                    f"{record.object_type} observed on {record.date.isoformat()} after "
                    f"{highest.object_type} on {highest.date.isoformat()} for {tree_id}/{branch_id}",
                    (record.key, highest.key)
                ))
            elif highest is None or record.object_type.development_rank > highest.object_type.development_rank:
                highest = record

            if record.object_type is ObjectType.CHERRY and record.date != harvest_date:
                cherry_counts[record.date] += record.object_count
                cherry_keys[record.date].append(record.key)

        dates = sorted(cherry_counts)

        for previous, current in zip(dates, dates[1:]):
            if cherry_counts[current] > cherry_counts[previous]:
                violations.append(Violation(
                    Severity.WARNING, RuleId.POSSIBLE_MISCOUNT,
                    f"possible miscount: cherries on {tree_id}/{branch_id} rose from "
                    f"{cherry_counts[previous]} to {cherry_counts[current]} on {current.isoformat()}",
                    tuple(cherry_keys[previous] + cherry_keys[current])
                ))

    return violations


class TrajectoryPoint(NamedTuple):
    date: datetime.date
    bbch: BbchStage
    object_type: ObjectType
    count: int


class TreePoint(NamedTuple):
    date: datetime.date
    count: int


def trajectory(ledger: SeasonLedger, tree_id: str, branch_id: str) -> list[TrajectoryPoint]:
    """
    Builds the development series of one branch.

    Contains one point per observation date: developmental counts plus the
    totalCrops harvest point. Several developmental records on one date are
    summed under the most advanced object type; on the harvest date the
    totalCrops count replaces them.

    Raises:
        NotFoundError: If the ledger has no developmental or totalCrops records for the branch.
    """

    points = _development_series(ledger.records_for(tree_id, branch_id))

    if not points:
        raise NotFoundError(f"not found: no development records for tree '{tree_id}', branch '{branch_id}'")

    return points


def _development_series(records: Sequence[CountRecord]) -> list[TrajectoryPoint]:
    by_date: dict[datetime.date, list[CountRecord]] = defaultdict(list)

    for record in records:
        if record.object_type.is_developmental or record.object_type is ObjectType.TOTAL_CROPS:
            by_date[record.date].append(record)

    points = []

    for date in sorted(by_date):
        day = by_date[date]
        total = next((record for record in day if record.object_type is ObjectType.TOTAL_CROPS), None)

        if total is not None:
            points.append(TrajectoryPoint(date, total.bbch, total.object_type, total.object_count))
            continue

        lead = max(day, key=lambda record: record.object_type.development_rank)
        points.append(TrajectoryPoint(date, lead.bbch, lead.object_type, sum(r.object_count for r in day)))

    return points


def aggregate_by_tree(ledger: SeasonLedger) -> dict[str, list[TreePoint]]:
    """
    Sums branch trajectories per tree and date.

    Whole-tree records are not branches and are left out; dates on which a
    tree has no branch observation are absent from its series.
    """

    sums: dict[str, dict[datetime.date, int]] = defaultdict(lambda: defaultdict(int))

    for tree_id, branch_id in ledger.branches():
        if branch_id == WHOLE_TREE:
            continue

        for point in _development_series(ledger.records_for(tree_id, branch_id)):
            sums[tree_id][point.date] += point.count

    return {
        tree_id: [TreePoint(date, count) for date, count in sorted(per_date.items())]
        for tree_id, per_date in sorted(sums.items())
    }
