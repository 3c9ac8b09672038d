import dataclasses
import datetime
import math

import pytest

from cherryyield.errors import EmptyScheduleError, InvalidParameterError, UnknownStageError
from cherryyield.forecast import StageKey, calibrate
from cherryyield.ingest import emit_csv
from cherryyield.phenology import BbchStage, ObjectType, build_ledger, trajectory
from cherryyield.simulation import (
    FrostEvent, SimulationParams, default_schedule, derive_branch_params, expected_survival_slope, load_params,
    parse_params, simulate_branch, simulate_season, stage_factors
)

IDENTITY = SimulationParams(
    initial_buds=100,
    flower_bud_fraction=1.0,
    blossoms_per_cluster=1.0,
    fruit_set_fraction=1.0,
    drop_fractions=(),
    attrition_rate=0.0,
    good_fraction=0.5,
)

# Factors with short binary expansions keep scaled counts exact integers.
EXACT = SimulationParams(
    initial_buds=160,
    flower_bud_fraction=0.5,
    blossoms_per_cluster=3.0,
    fruit_set_fraction=0.5,
    drop_fractions=(0.5,),
    attrition_rate=0.0,
    bud_spread=0.4,
    count_scale=1000,
)


def _counts(records, object_type=None):
    return [record.object_count for record in records if object_type is None or record.object_type is object_type]


class TestSimulateBranch:

    def test_identity_dynamics(self):
        records = simulate_branch(IDENTITY, default_schedule())
        developmental = [record for record in records if record.object_type.is_developmental]

        assert _counts(developmental) == [100] * 7
        assert _counts(records, ObjectType.TOTAL_CROPS) == [100]

    def test_bloom_count(self):
        records = simulate_branch(SimulationParams(), default_schedule())

        assert [record.object_count for record in records[:3]] == [175, 96, 260]

    def test_harvest_group_is_consistent(self):
        records = simulate_branch(SimulationParams(), default_schedule())
        ledger, violations = build_ledger(records)

        assert violations == []
        harvest = ledger.harvest_records("sim_1", "1s1")
        good, bad, total = (harvest[object_type] for object_type in
                            (ObjectType.GOOD_CROPS, ObjectType.BAD_CROPS, ObjectType.TOTAL_CROPS))

        assert good.object_count + bad.object_count == total.object_count
        assert good.object_count == round(total.object_count * 0.6)
        assert abs(good.crop_weight + bad.crop_weight - total.crop_weight) <= 1e-9

    def test_total_frost_at_flowering(self):
        params = dataclasses.replace(SimulationParams(), frost=FrostEvent(BbchStage(60), 1.0))
        records = simulate_branch(params, default_schedule())
        after_frost = [record for record in records if record.bbch >= BbchStage(60)]

        assert set(_counts(after_frost)) == {0}
        assert _counts(records[:2]) == [175, 96]

    def test_counts_never_rise_after_bloom(self):
        records = simulate_branch(SimulationParams(), default_schedule())
        points = trajectory(build_ledger(records)[0], "sim_1", "1s1")
        after_bloom = [point.count for point in points][2:]

        assert all(later <= earlier for earlier, later in zip(after_bloom, after_bloom[1:]))

    def test_noise_is_seeded(self):
        params = dataclasses.replace(SimulationParams(), noise_sd=5.0, seed=42)

        assert simulate_branch(params, default_schedule()) == simulate_branch(params, default_schedule())
        assert simulate_branch(params, default_schedule()) != \
               simulate_branch(dataclasses.replace(params, seed=43), default_schedule())

    def test_noisy_counts_are_non_negative(self):
        params = dataclasses.replace(SimulationParams(), initial_buds=5, noise_sd=50.0, seed=1)
        assert min(_counts(simulate_branch(params, default_schedule()))) >= 0

    def test_empty_schedule(self):
        with pytest.raises(EmptyScheduleError, match="empty schedule"):
            simulate_branch(SimulationParams(), [])


class TestExpectedSurvivalSlope:

    def test_harvest_stage_is_one(self):
        schedule = default_schedule()
        assert expected_survival_slope(SimulationParams(), schedule[-1], schedule) == 1.0

    def test_single_drop(self):
        schedule = [
            StageKey.create(datetime.date(2023, 5, 25), BbchStage(65), ObjectType.BLOSSOM),
            StageKey.create(datetime.date(2023, 7, 14), BbchStage(89), ObjectType.TOTAL_CROPS),
        ]
        params = dataclasses.replace(IDENTITY, drop_fractions=(0.3,))

        assert expected_survival_slope(params, schedule[0], schedule) == pytest.approx(0.7, abs=1e-15)

    def test_bud_stage_product(self):
        schedule = default_schedule()
        expected = 0.55 * 2.7 * 0.35 * 0.9 * 0.95 * 0.99 ** 3

        assert expected_survival_slope(SimulationParams(), schedule[0]) == pytest.approx(expected, rel=1e-12)

    def test_unknown_stage(self):
        stage = StageKey.create(datetime.date(2023, 8, 1), BbchStage(89), ObjectType.TOTAL_CROPS)

        with pytest.raises(UnknownStageError, match="unknown stage"):
            expected_survival_slope(SimulationParams(), stage)

    def test_factors_multiply_to_harvest_share(self):
        factors = stage_factors(SimulationParams(), default_schedule())
        assert math.prod(factors) == pytest.approx(expected_survival_slope(SimulationParams(), default_schedule()[0]))


class TestSimulateSeason:

    def test_dimensions(self):
        ledger = simulate_season(SimulationParams(seed=7), 3, 6)
        branches = ledger.branches()

        assert len(branches) == 18
        assert {tree_id for tree_id, _ in branches} == {"sim_1", "sim_2", "sim_3"}
        assert ("sim_2", "2s4") in branches

    def test_single_branch_matches_derived_branch(self):
        params = SimulationParams(seed=13, noise_sd=2.0)
        ledger = simulate_season(params, 1, 1)
        expected, _ = build_ledger(simulate_branch(derive_branch_params(params, 0), default_schedule()))

        assert ledger == expected

    def test_same_seed_is_identical(self):
        params = SimulationParams(seed=7, noise_sd=3.0)
        assert emit_csv(simulate_season(params)) == emit_csv(simulate_season(params))

    def test_different_seeds_differ(self):
        assert simulate_season(SimulationParams(seed=1)) != simulate_season(SimulationParams(seed=2))

    def test_branches_vary_in_size(self):
        ledger = simulate_season(SimulationParams(seed=3))
        first_counts = {trajectory(ledger, *branch)[0].count for branch in ledger.branches()}

        assert len(first_counts) > 1

    @pytest.mark.parametrize("n_trees, n_branches", [(0, 6), (3, 0)])
    def test_rejects_empty_design(self, n_trees, n_branches):
        with pytest.raises(ValueError):
            simulate_season(SimulationParams(), n_trees, n_branches)


class TestNoiselessCalibrationOracle:

    def test_slopes_match_survival_products(self):
        schedule = default_schedule()
        cal = calibrate(simulate_season(EXACT, 3, 6, schedule))

        assert len(cal) == 7

        for stage, fit in cal.entries.items():
            assert abs(fit.slope - expected_survival_slope(EXACT, stage, schedule)) <= 1e-9
            assert abs(fit.intercept) <= 1e-6
            assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_default_params_within_rounding(self):
        params = dataclasses.replace(SimulationParams(seed=21), count_scale=1000)
        cal = calibrate(simulate_season(params))

        for stage, fit in cal.entries.items():
            assert fit.slope == pytest.approx(expected_survival_slope(params, stage), rel=1e-4)
            assert fit.r_squared > 0.9999


class TestParams:

    @pytest.mark.parametrize("name, value", [
        ("flower_bud_fraction", 1.5),
        ("fruit_set_fraction", -0.1),
        ("attrition_rate", 2.0),
        ("good_fraction", math.nan),
        ("blossoms_per_cluster", 0.0),
        ("noise_sd", -1.0),
        ("initial_buds", 0),
        ("count_scale", 0),
        ("bud_spread", 1.0),
        ("seed", -1),
    ])
    def test_invalid_values_name_the_parameter(self, name, value):
        with pytest.raises(InvalidParameterError) as error:
            SimulationParams(**{name: value})

        assert error.value.parameter == name
        assert name in str(error.value)

    def test_invalid_drop(self):
        with pytest.raises(InvalidParameterError, match="drop_fractions"):
            SimulationParams(drop_fractions=(0.2, 1.2))

    def test_parse_params(self):
        params = parse_params(
            "# season 2024\n"
            "initial_buds = 120\n"
            "\n"
            "drop_fractions = 0.2, 0.1\n"
            "frost_bbch = 65\n"
            "frost_kill_fraction = 0.95\n"
            "seed=9\n"
        )

        assert params.initial_buds == 120
        assert params.drop_fractions == (0.2, 0.1)
        assert params.frost == FrostEvent(BbchStage(65), 0.95)
        assert params.seed == 9
        assert params.flower_bud_fraction == SimulationParams().flower_bud_fraction

    @pytest.mark.parametrize("text, parameter", [
        ("petals = 5", "petals"),
        ("fruit_set_fraction = 1.4", "fruit_set_fraction"),
        ("seed = many", "seed"),
        ("frost_bbch = 60", "frost_bbch"),
    ])
    def test_parse_params_errors(self, text, parameter):
        with pytest.raises(InvalidParameterError) as error:
            parse_params(text)

        assert error.value.parameter == parameter

    def test_load_params(self, module_patch):
        read_file_mock = module_patch("read_file", return_value="initial_buds = 50\n")

        assert load_params("params.cfg").initial_buds == 50
        read_file_mock.assert_called_once_with("params.cfg")
