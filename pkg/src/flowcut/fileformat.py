"""
The textual format for frames and machines: a restricted YAML document.

One self-describing format serves as the only ingress: a frame file
declares the data domain, locations (with explicit trace sets or LTS
bodies), channels, and optionally named channel sets and declarative
blurs.  A machine file declares domains, the influence relation, the
action table, transitions, and the per-domain observation table.  Unknown
keys are rejected everywhere; YAML syntax errors surface with line and
column.
"""

from __future__ import annotations

from typing import Any

import yaml

from .blur import AllBlur, BlurSpec, IdentityBlur, PermutationBlur, SelectionBlur
from .frames import Channel, ExplicitTraces, Frame, Location, Lts
from .purge import MachineSpec


class FileFormatError(ValueError):
    """Raised for unparseable or malformed frame/machine files."""


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise FileFormatError(f"unknown key {min(unknown)!r} in {where}")


def _require(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise FileFormatError(f"missing key {key!r} in {where}")
    return mapping[key]


def _load_yaml(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:  # pragma: no cover - mark presence varies
        mark = exc.problem_mark or exc.context_mark
        if mark is not None:
            raise FileFormatError(
                f"parse error at line {mark.line + 1}, column {mark.column + 1}: {exc.problem}"
            ) from exc
        raise FileFormatError(f"parse error: {exc}") from exc
    except yaml.YAMLError as exc:
        raise FileFormatError(f"parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise FileFormatError("document must be a mapping")
    return doc


def _label(entry: Any, where: str) -> tuple[str, str]:
    if not isinstance(entry, (list, tuple)) or len(entry) != 2:
        raise FileFormatError(f"label in {where} must be a [channel, value] pair")
    return str(entry[0]), str(entry[1])


def _parse_location(entry: Any) -> Location:
    if not isinstance(entry, dict):
        raise FileFormatError("each location must be a mapping")
    _reject_unknown(entry, {"id", "traces", "lts"}, "location")
    loc_id = str(_require(entry, "id", "location"))
    if ("traces" in entry) == ("lts" in entry):
        raise FileFormatError(f"location {loc_id!r} needs exactly one of 'traces' or 'lts'")
    if "traces" in entry:
        traces = entry["traces"]
        if not isinstance(traces, list):
            raise FileFormatError(f"traces of {loc_id!r} must be a list")
        parsed = []
        for t in traces:
            if not isinstance(t, list):
                raise FileFormatError(f"each trace of {loc_id!r} must be a list of labels")
            parsed.append(tuple(_label(lab, f"traces of {loc_id!r}") for lab in t))
        # Stored as given: prefix-closure is a well-formedness condition
        # that validate_frame reports, not something the parser repairs.
        return Location(loc_id, ExplicitTraces(frozenset(parsed)))
    body = entry["lts"]
    if not isinstance(body, dict):
        raise FileFormatError(f"lts of {loc_id!r} must be a mapping")
    _reject_unknown(body, {"states", "initial", "transitions"}, f"lts of {loc_id!r}")
    states = frozenset(str(s) for s in _require(body, "states", f"lts of {loc_id!r}"))
    initial = str(_require(body, "initial", f"lts of {loc_id!r}"))
    transitions = set()
    for row in _require(body, "transitions", f"lts of {loc_id!r}"):
        if not isinstance(row, list) or len(row) != 4:
            raise FileFormatError(
                f"each transition of {loc_id!r} must be [state, channel, value, state]"
            )
        s, c, v, t = (str(x) for x in row)
        transitions.add((s, (c, v), t))
    return Location(loc_id, Lts(states, initial, frozenset(transitions)))


def _parse_blur(name: str, body: Any) -> BlurSpec:
    if not isinstance(body, dict):
        raise FileFormatError(f"blur {name!r} must be a mapping")
    kind = str(_require(body, "kind", f"blur {name!r}"))
    if kind == "identity":
        _reject_unknown(body, {"kind"}, f"blur {name!r}")
        return IdentityBlur()
    if kind == "all":
        _reject_unknown(body, {"kind"}, f"blur {name!r}")
        return AllBlur()
    if kind == "permutation":
        _reject_unknown(body, {"kind", "members", "blocks", "fixed"}, f"blur {name!r}")
        members = tuple(str(m) for m in _require(body, "members", f"blur {name!r}"))
        blocks = None
        if body.get("blocks") is not None:
            blocks = tuple(frozenset(str(x) for x in blk) for blk in body["blocks"])
        fixed = frozenset(str(x) for x in body.get("fixed", []))
        return PermutationBlur(members=members, blocks=blocks, fixed=fixed)
    if kind == "selection":
        _reject_unknown(body, {"kind", "channels", "values"}, f"blur {name!r}")
        channels = body.get("channels")
        values = body.get("values")
        return SelectionBlur(
            name=name,
            channels=None if channels is None else frozenset(str(c) for c in channels),
            values=None if values is None else frozenset(str(v) for v in values),
        )
    raise FileFormatError(f"blur {name!r} has unknown kind {kind!r}")


def parse_frame_document(
    text: str,
) -> tuple[Frame, dict[str, frozenset[str]], dict[str, BlurSpec]]:
    """Parse a frame file into (frame, named channel sets, blurs)."""
    doc = _load_yaml(text)
    _reject_unknown(doc, {"frame"}, "document")
    body = _require(doc, "frame", "document")
    if not isinstance(body, dict):
        raise FileFormatError("'frame' must be a mapping")
    _reject_unknown(
        body, {"data", "locations", "channels", "channel_sets", "blurs"}, "frame"
    )

    data = [str(v) for v in _require(body, "data", "frame")]
    locations = [_parse_location(e) for e in _require(body, "locations", "frame")]
    channels = []
    for e in _require(body, "channels", "frame"):
        if not isinstance(e, dict):
            raise FileFormatError("each channel must be a mapping")
        _reject_unknown(e, {"id", "sender", "recipient"}, "channel")
        channels.append(
            Channel(
                str(_require(e, "id", "channel")),
                str(_require(e, "sender", "channel")),
                str(_require(e, "recipient", "channel")),
            )
        )
    frame = Frame.build(locations, channels, data)

    named: dict[str, frozenset[str]] = {}
    for name, ids in (body.get("channel_sets") or {}).items():
        if not isinstance(ids, list):
            raise FileFormatError(f"channel set {name!r} must be a list")
        named[str(name)] = frozenset(str(c) for c in ids)

    blurs: dict[str, BlurSpec] = {}
    for name, spec in (body.get("blurs") or {}).items():
        blurs[str(name)] = _parse_blur(str(name), spec)
    return frame, named, blurs


def parse_machine_document(text: str) -> MachineSpec:
    """Parse a machine file.  Reflexive influence pairs are implicit."""
    doc = _load_yaml(text)
    _reject_unknown(doc, {"machine"}, "document")
    body = _require(doc, "machine", "document")
    if not isinstance(body, dict):
        raise FileFormatError("'machine' must be a mapping")
    _reject_unknown(
        body,
        {"domains", "influence", "actions", "outputs", "states", "initial", "transitions", "obs"},
        "machine",
    )
    domains = [str(d) for d in _require(body, "domains", "machine")]
    influence = {(d, d) for d in domains}
    for pair in body.get("influence", []):
        if not isinstance(pair, list) or len(pair) != 2:
            raise FileFormatError("each influence entry must be a [from, to] pair")
        influence.add((str(pair[0]), str(pair[1])))
    actions = _require(body, "actions", "machine")
    if not isinstance(actions, dict):
        raise FileFormatError("'actions' must map action to domain")
    transitions = set()
    for row in _require(body, "transitions", "machine"):
        if not isinstance(row, list) or len(row) != 3:
            raise FileFormatError("each transition must be [state, action, state]")
        transitions.add(tuple(str(x) for x in row))
    obs_body = _require(body, "obs", "machine")
    if not isinstance(obs_body, dict):
        raise FileFormatError("'obs' must map state to {domain: output}")
    obs = {}
    for s, per_domain in obs_body.items():
        if not isinstance(per_domain, dict):
            raise FileFormatError(f"obs[{s!r}] must map domain to output")
        for d, o in per_domain.items():
            obs[(str(s), str(d))] = str(o)
    try:
        return MachineSpec.build(
            domains=domains,
            influence=influence,
            action_domain={str(a): str(d) for a, d in actions.items()},
            outputs=[str(o) for o in _require(body, "outputs", "machine")],
            states=[str(s) for s in _require(body, "states", "machine")],
            initial=str(_require(body, "initial", "machine")),
            transitions=transitions,
            obs=obs,
        )
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc


# -- emission ----------------------------------------------------------------


def emit_frame_document(
    frame: Frame,
    named_sets: dict[str, frozenset[str]] | None = None,
    blurs: dict[str, BlurSpec] | None = None,
) -> str:
    """Serialize a frame (with optional named sets and declarative blurs)
    so that reparsing yields an equal frame."""
    locations = []
    for loc in frame.locations:
        spec = loc.behavior
        if isinstance(spec, ExplicitTraces):
            body = {
                "id": loc.id,
                "traces": [[[c, v] for c, v in t] for t in sorted(spec.traces)],
            }
        else:
            body = {
                "id": loc.id,
                "lts": {
                    "states": sorted(spec.states),
                    "initial": spec.initial,
                    "transitions": [
                        [s, lab[0], lab[1], t] for s, lab, t in sorted(spec.transitions)
                    ],
                },
            }
        locations.append(body)
    doc: dict = {
        "frame": {
            "data": sorted(frame.data),
            "locations": locations,
            "channels": [
                {"id": c.id, "sender": c.sender, "recipient": c.recipient}
                for c in frame.channels
            ],
        }
    }
    if named_sets:
        doc["frame"]["channel_sets"] = {k: sorted(v) for k, v in sorted(named_sets.items())}
    if blurs:
        rendered = {}
        for name, blur in sorted(blurs.items()):
            rendered[name] = _emit_blur(name, blur)
        doc["frame"]["blurs"] = rendered
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _emit_blur(name: str, blur: BlurSpec) -> dict:
    if isinstance(blur, IdentityBlur):
        return {"kind": "identity"}
    if isinstance(blur, AllBlur):
        return {"kind": "all"}
    if isinstance(blur, PermutationBlur):
        out: dict = {"kind": "permutation", "members": list(blur.members)}
        if blur.blocks is not None:
            out["blocks"] = [sorted(b) for b in blur.blocks]
        if blur.fixed:
            out["fixed"] = sorted(blur.fixed)
        return out
    if isinstance(blur, SelectionBlur):
        out = {"kind": "selection"}
        if blur.channels is not None:
            out["channels"] = sorted(blur.channels)
        if blur.values is not None:
            out["values"] = sorted(blur.values)
        return out
    raise FileFormatError(
        f"blur {name!r} of kind {type(blur).__name__} has no file representation"
    )
