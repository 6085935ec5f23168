import logging
import random
import statistics
from collections import defaultdict

import pytest

from abstraction import (
    abstract_attributes,
    abstract_dfg,
    abstract_petri_net,
    abstract_variants,
)
from abstraction.budget import BudgetTooSmallError, RenderBudget, estimate_tokens, fit_lines
from abstraction.dfg import MEDIAN, DfgEdge, DirectlyFollowsGraph, compute_dfg, edge_order
from abstraction.render import (
    parse_dfg_lines,
    quote_activity,
    render_attributes,
    render_dfg,
    render_variants,
)
from abstraction.variants import Variant, VariantTable, compute_variants
from eventlog import load_log
from petrinet.model import Marking, PetriNet, Place, Transition
from petrinet.pnml import load_pnml

ROAD_TRAFFIC_DFG = """\
Create Fine -> Send Fine ( frequency = 103392  performance = 7568635.65 )
Send Fine -> Insert Fine Notification ( frequency = 79757  performance = 1501626.95 )
Insert Fine Notification -> Add penalty ( frequency = 72334  performance = 5184000.0 )
Add penalty -> Send for Credit Collection ( frequency = 57182  performance = 45566346.44 )
Create Fine -> Payment ( frequency = 46952  performance = 905663.45 )"""

ROAD_TRAFFIC_VARIANTS = """\
Create Fine -> Send Fine -> Insert Fine Notification -> Add penalty -> Send for Credit Collection ( frequency = 56482  performance = 59591524.946000494 )
Create Fine -> Payment ( frequency = 46371  performance = 889688.4000776347 )
Create Fine -> Send Fine ( frequency = 20385  performance = 8380516.026490066 )"""

SEQUENTIAL_NET = """\
places: [ p1, sink, source ]
transitions: [ (A, 'A'), (B, 'B') ]
arcs: [ (A, 'A')->p1, (B, 'B')->sink, p1->(B, 'B'), source->(A, 'A') ]
initial marking: ['source:1']
final marking: ['sink:1']"""


def test_road_traffic_dfg_lines():
    dfg = DirectlyFollowsGraph(
        edges=(
            DfgEdge("Create Fine", "Send Fine", 103392, 7568635.6512),
            DfgEdge("Send Fine", "Insert Fine Notification", 79757, 1501626.9501),
            DfgEdge("Insert Fine Notification", "Add penalty", 72334, 5184000.0),
            DfgEdge("Add penalty", "Send for Credit Collection", 57182, 45566346.4391),
            DfgEdge("Create Fine", "Payment", 46952, 905663.4499),
        )
    )

    assert render_dfg(dfg, decimals=2) == ROAD_TRAFFIC_DFG


def test_road_traffic_variant_lines():
    table = VariantTable(
        (
            Variant(
                (
                    "Create Fine",
                    "Send Fine",
                    "Insert Fine Notification",
                    "Add penalty",
                    "Send for Credit Collection",
                ),
                56482,
                59591524.946000494,
            ),
            Variant(("Create Fine", "Payment"), 46371, 889688.4000776347),
            Variant(("Create Fine", "Send Fine"), 20385, 8380516.026490066),
        )
    )

    assert render_variants(table) == ROAD_TRAFFIC_VARIANTS


def test_attribute_line_layout(make_log):
    amounts = [0.0, 33.6, 38.0, 71.5, 8000.0]
    events = [("Pay", i, {"amount": a}) for i, a in enumerate(amounts)]
    events += [("Pay", 10 + i) for i in range(3)]
    log = make_log({"c1": events})

    assert render_attributes(log, ["amount"]) == (
        "amount  empty: 3  quantiles: {0.0: 0.0, 0.25: 33.6, 0.5: 38.0, 0.75: 71.5, 1.0: 8000.0}"
    )


def test_integer_and_real_attribute_lines_with_gaps(make_log):
    articles = [157, 7, 401, 7, 157]
    expenses = [10.0, 0.0, 13.5, 76.0, 11.88]
    events = [
        ("Fine", i, {"article": a, "expense": e}) for i, (a, e) in enumerate(zip(articles, expenses))
    ]
    events += [("Notify", 10 + i) for i in range(3)]
    log = make_log({"c1": events})

    assert render_attributes(log, ["article", "expense"]).splitlines() == [
        "article  empty: 3  quantiles: {0.0: 7.0, 0.25: 7.0, 0.5: 157.0, 0.75: 157.0, 1.0: 401.0}",
        "expense  empty: 3  quantiles: {0.0: 0.0, 0.25: 10.0, 0.5: 11.88, 0.75: 13.5, 1.0: 76.0}",
    ]


def test_sequential_petri_net(fixtures_dir):
    assert abstract_petri_net(*load_pnml(fixtures_dir / "sequential.pnml")) == SEQUENTIAL_NET


def test_invisible_transition_from_pnml_rendered_with_none_label(fixtures_dir):
    text = abstract_petri_net(*load_pnml(fixtures_dir / "skip_silent.pnml"))

    assert "transitions: [ (create, 'Create Fine'), (pay, 'Payment'), (tau_1, None) ]" in text


def test_silent_transition_rendered_with_none_label():
    net = PetriNet(
        places=frozenset({Place("i"), Place("o")}),
        transitions=frozenset({Transition("tau")}),
        arcs=frozenset({("i", "tau"), ("tau", "o")}),
    )

    text = abstract_petri_net(net, Marking({"i": 1}), Marking({"o": 1}))

    assert "transitions: [ (tau, None) ]" in text
    assert "arcs: [ (tau, None)->o, i->(tau, None) ]" in text


def test_small_log_dfg_and_variants(fixtures_dir):
    log = load_log(fixtures_dir / "small.xes")

    assert abstract_dfg(log) == (
        "A -> B ( frequency = 2  performance = 5400.0 )\n"
        "B -> C ( frequency = 2  performance = 7200.0 )\n"
        "A -> C ( frequency = 1  performance = 3600.0 )"
    )
    assert abstract_variants(log) == (
        "A -> B -> C ( frequency = 2  performance = 12600.0 )\n"
        "A -> C ( frequency = 1  performance = 3600.0 )"
    )


def test_small_log_attributes(fixtures_dir):
    log = load_log(fixtures_dir / "small.xes")

    assert abstract_attributes(log).splitlines() == [
        "amount  empty: 5  quantiles: {0.0: 10.0, 0.25: 15.0, 0.5: 20.0, 0.75: 25.0, 1.0: 30.0}",
        "time:timestamp  empty: 0  quantiles: {0.0: 2024-01-01T00:00:00+00:00, "
        "0.25: 2024-01-01T02:30:00+00:00, 0.5: 2024-01-02T01:00:00+00:00, "
        "0.75: 2024-01-02T09:00:00+00:00, 1.0: 2024-01-03T01:00:00+00:00}",
    ]


def test_text_attributes_skipped_with_warning(fixtures_dir, caplog):
    log = load_log(fixtures_dir / "small.xes")

    with caplog.at_level(logging.WARNING, logger="Abstraction"):
        text = render_attributes(log, ["concept:name", "missing", "amount"])

    assert text.startswith("amount  empty: 5")
    assert len(text.splitlines()) == 1
    assert "attribute skipped" in caplog.text


def test_median_aggregation(make_log):
    log = make_log(
        {
            "c1": [("A", 0), ("B", 1)],
            "c2": [("A", 0), ("B", 2)],
            "c3": [("A", 0), ("B", 10)],
        }
    )

    assert compute_dfg(log).edge("A", "B").performance == pytest.approx(13 / 3)
    assert compute_dfg(log, MEDIAN).edge("A", "B").performance == 2.0
    assert abstract_dfg(log) == "A -> B ( frequency = 3  performance = 4.33 )"
    assert abstract_variants(log, MEDIAN) == "A -> B ( frequency = 3  performance = 2.0 )"


def test_unknown_aggregation_rejected(make_log):
    with pytest.raises(ValueError, match="unknown aggregation"):
        compute_dfg(make_log({"c": [("A", 0)]}), "mode")


def test_start_and_end_activities(fixtures_dir):
    dfg = compute_dfg(load_log(fixtures_dir / "small.xes"))

    assert dfg.start_activities == {"A": 3}
    assert dfg.end_activities == {"C": 3}
    assert dfg.activities == {"A", "B", "C"}


def test_activity_names_with_arrows_round_trip():
    names = ["x -> y", '"quoted', "plain", 'a""b', "->"]
    edges = tuple(DfgEdge(a, b, 1, 1.0) for a in names for b in names)

    parsed = parse_dfg_lines(render_dfg(DirectlyFollowsGraph(edges=edges)))

    assert [(e.source_activity, e.target_activity) for e in parsed] == [
        (e.source_activity, e.target_activity) for e in edges
    ]
    assert quote_activity("x -> y") == '"x -> y"'
    assert quote_activity('"q') == '"""q"'


def _random_cases(rng):
    cases = {}
    for i in range(rng.randint(1, 8)):
        offset = 0
        events = []
        for _ in range(rng.randint(1, 6)):
            offset += rng.randint(1, 5000)
            events.append((rng.choice("ABCD"), offset))
        cases[f"c{i}"] = events
    return cases


def test_dfg_and_variants_match_naive_counts_on_random_logs(make_log):
    rng = random.Random(20240101)
    for _ in range(500):
        cases = _random_cases(rng)
        log = make_log(cases)

        deltas = defaultdict(list)
        durations = defaultdict(list)
        for events in cases.values():
            for (a, ta), (b, tb) in zip(events, events[1:]):
                deltas[(a, b)].append(tb - ta)
            durations[tuple(a for a, _ in events)].append(events[-1][1] - events[0][1])

        dfg = compute_dfg(log)
        assert {(e.source_activity, e.target_activity): e.frequency for e in dfg.edges} == {
            pair: len(values) for pair, values in deltas.items()
        }
        for edge in dfg.edges:
            expected = statistics.fmean(deltas[(edge.source_activity, edge.target_activity)])
            assert edge.performance == pytest.approx(expected, rel=1e-12)
        assert list(dfg.edges) == sorted(dfg.edges, key=edge_order)
        assert sum(e.frequency for e in dfg.edges) == sum(len(ev) - 1 for ev in cases.values())

        variants = compute_variants(log)
        assert sum(v.frequency for v in variants.variants) == len(cases)
        for variant in variants.variants:
            assert variant.frequency == len(durations[variant.sequence])
            assert variant.performance == pytest.approx(
                statistics.fmean(durations[variant.sequence]), rel=1e-12
            )


def test_budget_truncation_is_monotone_on_large_dfg():
    dfg = DirectlyFollowsGraph(
        edges=tuple(DfgEdge(f"a{i}", f"b{i}", 1000 - i, float(i)) for i in range(1000))
    )
    full = render_dfg(dfg)

    previous = 0
    for max_chars in [*range(100, len(full), 997), len(full)]:
        text = render_dfg(dfg, RenderBudget(max_chars=max_chars))
        kept = len(text.splitlines())
        assert len(text) <= max_chars
        assert full.startswith(text)
        assert kept >= previous
        previous = kept
    assert previous == 1000


def test_budget_too_small_reports_minimum():
    dfg = DirectlyFollowsGraph(edges=(DfgEdge("A", "B", 1, 1.0),))

    with pytest.raises(BudgetTooSmallError) as info:
        render_dfg(dfg, RenderBudget(max_chars=10))

    assert info.value.minimum == len("A -> B ( frequency = 1  performance = 1.0 )")


def test_budget_helpers():
    assert RenderBudget.from_tokens(100, 4).max_chars == 400
    assert RenderBudget.from_tokens(100, 4).max_tokens == 100
    assert estimate_tokens("abcde", 4) == 2
    assert estimate_tokens("") == 0
    assert fit_lines(["aaa", "bbb", "ccc"], 7) == ["aaa", "bbb"]
    with pytest.raises(ValueError):
        RenderBudget(max_chars=0)
