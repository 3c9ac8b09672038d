import pytest
from pytest_mock import MockerFixture


# Single branch of tree satin_2, followed through the 2023 season.
BRANCH_CSV = """\
Date,BBCH,treeID,branchID,branchColor,objectType,objectCount,cropWeight
Mar-2,51,satin_2,2s1,pink,bud,175,
Apr-14,56,satin_2,2s1,pink,bud,96,
Apr-25,60,satin_2,2s1,pink,blossom,257,
May-25,65,satin_2,2s1,pink,blossom,141,
Jun-06,75,satin_2,2s1,pink,cherry,53,
Jun-16,81,satin_2,2s1,pink,cherry,52,
Jul-06,85,satin_2,2s1,pink,cherry,52,
Jul-14,89,satin_2,2s1,pink,goodCrops,31,"0,29"
Jul-14,89,satin_2,2s1,pink,badCrops,23,"0,18"
Jul-14,89,satin_2,2s1,pink,totalCrops,54,"0,47"
"""

# Published stage regressions of total harvest on counts, 2023 season.
PUBLISHED_CSV = """\
Date,Object,Development stage,BBCH,Slope,Intercept,R²,p-value,n
Mar-2,Buds,Swelling,51,0.23,11.49,0.39,P<.05,14
Apr-14,Buds,Open cluster,56,0.40,2.03,0.84,P<.001,15
Apr-25,Blossoms,First bloom,60,0.16,0.81,0.76,P<.001,14
May-23,Blossoms,Full bloom,65,0.31,2.33,0.85,P<.001,14
Jun-6,Cherries,Development of fruit,75,0.91,-0.10,0.72,P<.001,15
Jun-16,Cherries,Beginning of fruit coloring,81,1.11,-11.52,0.94,P<.001,14
Jul-6,Cherries,Advanced fruit coloring,85,1.11,-3.75,0.99,P<.001,15
"""


@pytest.fixture
def module_patch(request, mocker: MockerFixture):
    """
    Patches a name inside the module under test, derived from the test
    module name (tests/test_cli.py patches inside cherryyield.cli).
    """

    module_name = request.module.__name__.split(".")[-1].removeprefix("test_")

    def patch(name: str, *args, **kwargs):
        return mocker.patch(f"cherryyield.{module_name}.{name}", *args, **kwargs)

    return patch


@pytest.fixture
def branch_csv():
    return BRANCH_CSV


@pytest.fixture
def published_csv():
    return PUBLISHED_CSV


@pytest.fixture
def branch_ledger(branch_csv):
    from cherryyield.ingest import parse_csv
    from cherryyield.phenology import build_ledger

    records, violations = parse_csv(branch_csv, 2023)
    assert violations == []

    ledger, violations = build_ledger(records)
    assert violations == []

    return ledger


@pytest.fixture
def published(published_csv):
    from cherryyield.forecast import parse_calibration_csv

    return parse_calibration_csv(published_csv, 2023)
