import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from eventlog.model import ColumnMapping, Event, ParseReport, build_log  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"
BASE_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)


def build_event_log(cases, case_attributes=None):
    """
    Build an EventLog from {case_id: [(activity, seconds after BASE_TIME[, extras]), ...]}.

    An "org:resource" key in extras becomes the event resource.
    """
    case_events = {}
    for case_id, events in cases.items():
        built = []
        for entry in events:
            activity, offset = entry[0], entry[1]
            extras = dict(entry[2]) if len(entry) > 2 else {}
            resource = extras.pop("org:resource", None)
            built.append(
                Event(
                    activity=activity,
                    timestamp=BASE_TIME + timedelta(seconds=offset),
                    resource=resource,
                    extras=extras,
                )
            )
        case_events[case_id] = built
    return build_log(case_events, case_attributes or {}, ColumnMapping(), ParseReport())


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def make_log():
    return build_event_log


@pytest.fixture
def payment_log():
    """Two cases with an expense attribute; only c1 has a Payment."""
    return build_event_log(
        {
            "c1": [("Create Fine", 0, {"expense": 10}), ("Payment", 5)],
            "c2": [("Create Fine", 0, {"expense": 20}), ("Send Fine", 9, {"expense": 30})],
        }
    )
