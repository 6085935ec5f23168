from dataclasses import dataclass

import pandas as pd

from abstraction.dfg import ACTIVITY, CASE, MEAN, TIMESTAMP, check_aggregation, event_frame


@dataclass(frozen=True)
class Variant:
    sequence: tuple
    frequency: int
    performance: float


@dataclass(frozen=True)
class VariantTable:
    variants: tuple = ()

    def __len__(self):
        return len(self.variants)

    def find(self, sequence):
        sequence = tuple(sequence)
        for variant in self.variants:
            if variant.sequence == sequence:
                return variant
        return None


def variant_order(variant):
    return (-variant.frequency, variant.sequence)


def compute_variants(log, aggregation=MEAN):
    """Group cases by activity sequence; performance aggregates case throughput times."""
    check_aggregation(aggregation)
    frame = event_frame(log)
    if frame.empty:
        return VariantTable()

    by_case = frame.groupby(CASE, sort=False)
    sequences = by_case[ACTIVITY].agg(tuple)
    throughput = (by_case[TIMESTAMP].last() - by_case[TIMESTAMP].first()).dt.total_seconds()
    # factorize on the raw array: an Index of tuples would turn into a MultiIndex
    codes, uniques = pd.factorize(sequences.to_numpy(), sort=False)

    stats = throughput.groupby(codes, sort=False).agg(["count", aggregation])
    variants = [
        Variant(uniques[code], int(row["count"]), float(row[aggregation]))
        for code, row in stats.iterrows()
    ]
    variants.sort(key=variant_order)
    return VariantTable(tuple(variants))
