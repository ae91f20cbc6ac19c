from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mremix import DatasetDescriptor, LabelEntityPair, MreRecord
from mremix.ingest import Split, save_split


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        number, description = marker.args
        print(f"\n[acceptance] {status} criterion {number}: {description}")


@pytest.fixture(scope="session")
def scnm_en() -> DatasetDescriptor:
    return DatasetDescriptor.builtin("SCNM", "en")


@pytest.fixture(scope="session")
def scpos_adj_en() -> DatasetDescriptor:
    return DatasetDescriptor.builtin("SCPOS:Adj", "en")


@pytest.fixture(scope="session")
def tconer_en() -> DatasetDescriptor:
    return DatasetDescriptor.builtin("TCONER", "en")


@pytest.fixture
def scnm_record() -> MreRecord:
    return MreRecord(
        id="r1",
        text="Tanaka visited Tokyo.",
        text_label="Society",
        pairs=(LabelEntityPair("people", "Tanaka"), LabelEntityPair("places", "Tokyo")),
    )


def write_split(path, records, role="train"):
    split = Split(records=tuple(records), role=role)
    save_split(path, split)
    return split


@pytest.fixture
def make_record():
    def _make(rid, text="some text", label="Society", pairs=()):
        return MreRecord(
            id=rid,
            text=text,
            text_label=label,
            pairs=tuple(LabelEntityPair(l, e) for l, e in pairs),
        )

    return _make
