"""Shared fixtures plus the acceptance-criteria summary.

Tests marked ``@pytest.mark.acceptance("<label>")`` get one PASS/FAIL line
each at the end of the run, so the acceptance surface is readable at a
glance.
"""

from __future__ import annotations

import pytest

from vistruct.corpus import ImageCaptionPair, ImageRef, SeedRecord, TaskTriplet


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): labels a test as one acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        report._acceptance_label = marker.args[0]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines: list[tuple[str, str]] = []
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            label = getattr(report, "_acceptance_label", None)
            if label is not None:
                lines.append((label, verdict))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label, verdict in sorted(lines):
        terminalreporter.write_line(f"{verdict}  {label}")


@pytest.fixture
def sample_pair() -> ImageCaptionPair:
    return ImageCaptionPair(
        id="pair-1",
        image=ImageRef.file("images/scan_001.png"),
        caption="a chest x-ray with a small left pleural effusion",
    )


@pytest.fixture
def sample_triplet() -> TaskTriplet:
    return TaskTriplet(
        instruction="Which side of the chest shows the pleural effusion?",
        informative_response=(
            "The costophrenic angle on the left side is blunted, which "
            "indicates fluid collecting in the pleural space on that side."
        ),
        precise_response="The left side.",
    )


@pytest.fixture
def sample_seed(sample_pair, sample_triplet) -> SeedRecord:
    return SeedRecord(pair=sample_pair, triplet=sample_triplet)
