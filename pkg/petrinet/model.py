from dataclasses import dataclass, field


class PetriNetError(Exception):
    """Base class for Petri-net construction and import errors."""


class NetStructureError(PetriNetError):
    pass


@dataclass(frozen=True, order=True)
class Place:
    id: str


@dataclass(frozen=True, order=True)
class Transition:
    id: str
    label: str | None = None

    @property
    def is_silent(self):
        return self.label is None


@dataclass(frozen=True)
class Marking:
    tokens: dict = field(default_factory=dict)

    def __post_init__(self):
        for place_id, count in self.tokens.items():
            if not isinstance(count, int) or count < 1:
                raise NetStructureError(
                    f"marking for place {place_id!r} must be a positive integer, got {count!r}"
                )

    def __bool__(self):
        return bool(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class PetriNet:
    """Bipartite place/transition graph; arcs are (source id, target id) pairs."""

    places: frozenset = frozenset()
    transitions: frozenset = frozenset()
    arcs: frozenset = frozenset()

    def __post_init__(self):
        place_ids = [p.id for p in self.places]
        transition_ids = [t.id for t in self.transitions]
        for node_id in place_ids + transition_ids:
            if not node_id:
                raise NetStructureError("node ids must be non-empty")
        if len(set(transition_ids)) != len(transition_ids):
            raise NetStructureError("transition ids must be unique")
        duplicates = set(place_ids) & set(transition_ids)
        if duplicates:
            raise NetStructureError(
                f"ids used by both a place and a transition: {sorted(duplicates)}"
            )
        places, transitions = set(place_ids), set(transition_ids)
        for source, target in self.arcs:
            if source not in places and source not in transitions:
                raise NetStructureError(f"arc {source}->{target}: unknown source {source!r}")
            if target not in places and target not in transitions:
                raise NetStructureError(f"arc {source}->{target}: unknown target {target!r}")
            if (source in places) == (target in places):
                kind = "place" if source in places else "transition"
                raise NetStructureError(
                    f"arc {source}->{target} connects {kind} {source!r} to {kind} {target!r}"
                )

    def place_ids(self):
        return {p.id for p in self.places}

    def transition(self, transition_id):
        for t in self.transitions:
            if t.id == transition_id:
                return t
        return None


def validate(net, initial, final):
    """Return human-readable diagnostics; an empty list means the model is clean."""
    diagnostics = []
    connected = {node for arc in net.arcs for node in arc}
    for place in sorted(net.places):
        if place.id not in connected:
            diagnostics.append(f"place {place.id!r} is disconnected")
    for transition in sorted(net.transitions):
        if transition.id not in connected:
            diagnostics.append(f"transition {transition.id!r} is disconnected")
    if not initial:
        diagnostics.append("initial marking is empty")
    place_ids = net.place_ids()
    for name, marking in (("initial", initial), ("final", final)):
        for place_id in sorted(marking):
            if place_id not in place_ids:
                diagnostics.append(f"{name} marking references unknown place {place_id!r}")
    return diagnostics
