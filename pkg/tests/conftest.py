import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
BUNDLE = FIXTURES / "bundle"

# seven-token fixture: "a red cat on a wooden table"
SAMPLE_CONLLU = (
    "# text = a red cat on a wooden table\n"
    "1\ta\ta\tDET\tDT\t_\t3\tdet\t_\t_\n"
    "2\tred\tred\tADJ\tJJ\t_\t3\tamod\t_\t_\n"
    "3\tcat\tcat\tNOUN\tNN\t_\t0\troot\t_\t_\n"
    "4\ton\ton\tADP\tIN\t_\t7\tcase\t_\t_\n"
    "5\ta\ta\tDET\tDT\t_\t7\tdet\t_\t_\n"
    "6\twooden\twooden\tADJ\tJJ\t_\t7\tamod\t_\t_\n"
    "7\ttable\ttable\tNOUN\tNN\t_\t3\tnmod\t_\t_\n"
)


@pytest.fixture(scope="session")
def oracle_cases() -> dict:
    return json.loads((FIXTURES / "oracle_cases.json").read_text())


@pytest.fixture(scope="session")
def ancestor_cases() -> list:
    return json.loads((FIXTURES / "ancestor_cases.json").read_text())


@pytest.fixture(scope="session")
def bundle_golden() -> dict:
    return json.loads((BUNDLE / "golden.json").read_text())
