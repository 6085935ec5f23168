"""Directly-follows graph with frequency and performance annotations."""

from dataclasses import dataclass, field

import pandas as pd

MEAN = "mean"
MEDIAN = "median"
AGGREGATIONS = (MEAN, MEDIAN)

CASE = "case"
ACTIVITY = "activity"
TIMESTAMP = "timestamp"


def check_aggregation(aggregation):
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}, expected one of {AGGREGATIONS}")


def event_frame(log):
    """One row per event: positional case index, activity, UTC timestamp; events in case order."""
    frame = pd.DataFrame(
        [
            (index, event.activity, event.timestamp)
            for index, case in enumerate(log.cases)
            for event in case.events
        ],
        columns=[CASE, ACTIVITY, TIMESTAMP],
    )
    frame[TIMESTAMP] = pd.to_datetime(frame[TIMESTAMP], utc=True)
    return frame


@dataclass(frozen=True)
class DfgEdge:
    source_activity: str
    target_activity: str
    frequency: int
    performance: float


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    edges: tuple = ()
    activities: frozenset = frozenset()
    start_activities: dict = field(default_factory=dict)
    end_activities: dict = field(default_factory=dict)

    def edge(self, source, target):
        for e in self.edges:
            if e.source_activity == source and e.target_activity == target:
                return e
        return None


def edge_order(edge):
    """Frequency descending, then source/target lexicographic."""
    return (-edge.frequency, edge.source_activity, edge.target_activity)


def _counts(series):
    return {activity: int(count) for activity, count in series.value_counts(sort=False).items()}


def compute_dfg(log, aggregation=MEAN):
    """Count consecutive activity pairs per case and aggregate their time deltas (seconds)."""
    check_aggregation(aggregation)
    frame = event_frame(log)
    if frame.empty:
        return DirectlyFollowsGraph()

    by_case = frame.groupby(CASE, sort=False)
    pairs = frame.assign(
        target=by_case[ACTIVITY].shift(-1),
        seconds=(by_case[TIMESTAMP].shift(-1) - frame[TIMESTAMP]).dt.total_seconds(),
    ).dropna(subset=["target"])
    assert (pairs["seconds"] >= 0).all(), "events within a case must be sorted by timestamp"

    stats = pairs.groupby([ACTIVITY, "target"], sort=False)["seconds"].agg(["count", aggregation])
    edges = [
        DfgEdge(source, target, int(row["count"]), float(row[aggregation]))
        for (source, target), row in stats.iterrows()
    ]
    edges.sort(key=edge_order)
    return DirectlyFollowsGraph(
        edges=tuple(edges),
        activities=frozenset(frame[ACTIVITY]),
        start_activities=_counts(by_case[ACTIVITY].first()),
        end_activities=_counts(by_case[ACTIVITY].last()),
    )
