"""
PNML importer (place/transition nets).

Final markings are not part of core PNML; they are read from the
<finalmarkings> element written by common process-mining tools:

    <finalmarkings><marking><place idref="sink"><text>1</text></place></marking></finalmarkings>
"""

import logging
import xml.etree.ElementTree as ET

from petrinet.model import (
    Marking,
    NetStructureError,
    PetriNet,
    PetriNetError,
    Place,
    Transition,
)

logger = logging.getLogger("PnmlImporter")


class PnmlParseError(PetriNetError):
    pass


def _local(tag):
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def _child(element, name):
    for child in element:
        if _local(child.tag) == name:
            return child
    return None


def _text_of(element):
    """Text of <name><text>..</text></name>-style labels."""
    if element is None:
        return None
    text_el = _child(element, "text")
    if text_el is None or text_el.text is None:
        return None
    return text_el.text.strip()


def _node_elements(net_el, name):
    """Nodes of the net, including those nested in <page> elements."""
    found = []
    for child in net_el:
        tag = _local(child.tag)
        if tag == name:
            found.append(child)
        elif tag == "page":
            found.extend(_node_elements(child, name))
    return found


INVISIBLE_ACTIVITY = "$invisible$"


def _is_invisible(transition_el):
    """Silent transitions carry <toolspecific activity="$invisible$"/> next to their name."""
    return any(
        _local(child.tag) == "toolspecific" and child.get("activity") == INVISIBLE_ACTIVITY
        for child in transition_el
    )


def _token_count(text, where):
    try:
        count = int(text)
    except (TypeError, ValueError):
        raise PnmlParseError(f"PNML: {where}: token count {text!r} is not an integer")
    return count


def _read_final_marking(root):
    for element in root.iter():
        if _local(element.tag) != "finalmarkings":
            continue
        marking_el = _child(element, "marking")
        if marking_el is None:
            return {}
        tokens = {}
        for place_el in marking_el:
            if _local(place_el.tag) != "place":
                continue
            idref = place_el.get("idref")
            count = _token_count(_text_of(place_el), "final marking")
            if idref and count > 0:
                tokens[idref] = count
        return tokens
    return None


def parse_pnml(source):
    """Parse a PNML document into (net, initial marking, final marking)."""
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        line, column = exc.position
        raise PnmlParseError(
            f"PNML: malformed XML: {exc.msg} (line {line}, column {column})"
        ) from exc

    nets = [el for el in root.iter() if _local(el.tag) == "net"]
    if not nets:
        raise PnmlParseError("PNML: no <net> element found")
    if len(nets) > 1:
        logger.warning(f"PNML: {len(nets)} nets found, using the first one.")
    net_el = nets[0]

    seen_ids = set()

    def claim(node_id, kind):
        if not node_id:
            raise PnmlParseError(f"PNML: {kind} without id")
        if node_id in seen_ids:
            raise PnmlParseError(f"PNML: duplicate node id {node_id!r}")
        seen_ids.add(node_id)

    places = []
    initial = {}
    for place_el in _node_elements(net_el, "place"):
        place_id = place_el.get("id")
        claim(place_id, "place")
        places.append(Place(place_id))
        marking_el = _child(place_el, "initialMarking")
        if marking_el is not None:
            count = _token_count(_text_of(marking_el), f"place {place_id!r}")
            if count > 0:
                initial[place_id] = count

    transitions = []
    for transition_el in _node_elements(net_el, "transition"):
        transition_id = transition_el.get("id")
        claim(transition_id, "transition")
        label = _text_of(_child(transition_el, "name"))
        if _is_invisible(transition_el):
            label = None
        transitions.append(Transition(transition_id, label or None))

    arcs = []
    for arc_el in _node_elements(net_el, "arc"):
        if _child(arc_el, "inscription") is not None:
            logger.debug(f"PNML: arc {arc_el.get('id')!r} weight ignored.")
        arcs.append((arc_el.get("source"), arc_el.get("target")))

    try:
        net = PetriNet(
            places=frozenset(places),
            transitions=frozenset(transitions),
            arcs=frozenset(arcs),
        )
    except NetStructureError as exc:
        raise PnmlParseError(f"PNML: {exc}") from exc

    final = _read_final_marking(root)
    if final is None:
        logger.warning("PNML: no final marking found, using an empty one.")
        final = {}

    logger.info(
        f"PNML: loaded {len(net.places)} places, {len(net.transitions)} transitions, "
        f"{len(net.arcs)} arcs."
    )
    return net, Marking(initial), Marking(final)


def load_pnml(path):
    with open(path, "rb") as f:
        return parse_pnml(f)
