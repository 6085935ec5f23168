"""One-call textual abstractions of event logs and Petri nets."""

from abstraction.dfg import MEAN, compute_dfg
from abstraction.render import (
    render_attributes,
    render_dfg,
    render_petri_net,
    render_variants,
)
from abstraction.variants import compute_variants

DFG = "dfg"
VARIANTS = "variants"
PETRI_NET = "petri_net"
ATTRIBUTES = "attributes"
KINDS = (DFG, VARIANTS, PETRI_NET, ATTRIBUTES)


def abstract_dfg(log, aggregation=MEAN, budget=None, decimals=2):
    return render_dfg(compute_dfg(log, aggregation), budget, decimals)


def abstract_variants(log, aggregation=MEAN, budget=None, decimals=None):
    return render_variants(compute_variants(log, aggregation), budget, decimals)


def abstract_attributes(log, attributes=None):
    return render_attributes(log, attributes)


def abstract_petri_net(net, initial, final):
    return render_petri_net(net, initial, final)
