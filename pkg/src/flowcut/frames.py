"""
Static frames: locations, channels, data values, and per-location behavior.

A frame is a directed multigraph of locations connected by unidirectional
channels.  Each location owns a prefix-closed set of traces over labels
(channel, value); a channel whose sender and recipient coincide is a
self-loop.  Behaviors may be given either as an explicit finite trace set
(the test-fixture form) or as a finite labeled transition system (the
machine form).  Frames are immutable after construction and all operations
here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import networkx as nx

#: A label is a (channel id, data value) pair.
Label = tuple[str, str]
Trace = tuple[Label, ...]


class FrameError(ValueError):
    """Raised for malformed frames or unresolvable references."""


class UnknownChannelError(FrameError):
    """A channel id does not name a channel of the frame."""


@dataclass(frozen=True)
class Channel:
    """A one-directional conduit; ``sender`` holds the entry endpoint,
    ``recipient`` the exit endpoint.  Self-loop iff sender == recipient."""

    id: str
    sender: str
    recipient: str

    @property
    def is_self_loop(self) -> bool:
        return self.sender == self.recipient


@dataclass(frozen=True)
class ExplicitTraces:
    """A finite, explicitly listed trace set.  Must be prefix-closed; the
    empty trace is always a member of a well-formed set."""

    traces: frozenset[Trace]

    @staticmethod
    def of(*traces: Iterable[Label]) -> "ExplicitTraces":
        """Build from the given traces, adding all prefixes."""
        closed: set[Trace] = {()}
        for t in traces:
            tt = tuple((str(c), str(v)) for c, v in t)
            for i in range(len(tt) + 1):
                closed.add(tt[:i])
        return ExplicitTraces(frozenset(closed))

    def prefix_violations(self) -> list[Trace]:
        """Traces whose immediate prefix is missing (empty iff closed)."""
        bad = []
        for t in sorted(self.traces):
            if t and t[:-1] not in self.traces:
                bad.append(t)
        if () not in self.traces:
            bad.append(())
        return bad

    def labels(self) -> set[Label]:
        return {lab for t in self.traces for lab in t}


@dataclass(frozen=True)
class Lts:
    """A finite labeled transition system; generates a prefix-closed trace
    set by construction.  May be nondeterministic."""

    states: frozenset[str]
    initial: str
    transitions: frozenset[tuple[str, Label, str]]

    def labels(self) -> set[Label]:
        return {lab for _, lab, _ in self.transitions}


TraceSpec = Union[ExplicitTraces, Lts]


@dataclass(frozen=True)
class Location:
    id: str
    behavior: TraceSpec


@dataclass(frozen=True)
class Frame:
    """An immutable frame.  ``locations`` and ``channels`` are kept sorted
    by id so equal frames hash and compare equal."""

    locations: tuple[Location, ...]
    channels: tuple[Channel, ...]
    data: frozenset[str]

    @staticmethod
    def build(
        locations: Iterable[Location],
        channels: Iterable[Channel],
        data: Iterable[str],
    ) -> "Frame":
        locs = tuple(sorted(locations, key=lambda l: l.id))
        chans = tuple(sorted(channels, key=lambda c: c.id))
        return Frame(locs, chans, frozenset(str(d) for d in data))

    # -- lookup helpers -------------------------------------------------

    @property
    def location_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.locations)

    @property
    def channel_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.channels)

    def location(self, loc_id: str) -> Location:
        for l in self.locations:
            if l.id == loc_id:
                return l
        raise FrameError(f"unknown location: {loc_id!r}")

    def channel(self, chan_id: str) -> Channel:
        for c in self.channels:
            if c.id == chan_id:
                return c
        raise UnknownChannelError(f"unknown channel: {chan_id!r}")

    def sender(self, chan_id: str) -> str:
        return self.channel(chan_id).sender

    def recipient(self, chan_id: str) -> str:
        return self.channel(chan_id).recipient

    def chans(self, locs: str | Iterable[str]) -> frozenset[str]:
        """Channels with an endpoint at any of the given locations."""
        if isinstance(locs, str):
            locs = {locs}
        locset = set(locs)
        return frozenset(
            c.id for c in self.channels if c.sender in locset or c.recipient in locset
        )

    def pends(self, chans: Iterable[str]) -> frozenset[str]:
        """Locations holding an endpoint of any of the given channels."""
        out: set[str] = set()
        for cid in chans:
            c = self.channel(cid)
            out.add(c.sender)
            out.add(c.recipient)
        return frozenset(out)

    def label_kind(self, loc_id: str, chan_id: str) -> str:
        """Classify a label on ``chan_id`` relative to ``loc_id``."""
        c = self.channel(chan_id)
        if c.sender == loc_id == c.recipient:
            return "local"
        if c.sender == loc_id:
            return "transmission"
        if c.recipient == loc_id:
            return "reception"
        raise FrameError(f"channel {chan_id!r} is not at location {loc_id!r}")

    def check_channels(self, chans: Iterable[str]) -> frozenset[str]:
        """Validate a channel-id collection, returning it as a frozenset."""
        out = frozenset(chans)
        known = set(self.channel_ids)
        unknown = out - known
        if unknown:
            raise UnknownChannelError(f"unknown channels: {sorted(unknown)}")
        return out


# -- behavior stepping ---------------------------------------------------
#
# Both TraceSpec forms are driven through one stepping interface.  A
# behavior state is the residual-language identifier: the consumed prefix
# for ExplicitTraces, the subset of reachable LTS states for an Lts.
# Subset construction collapses nondeterministic branching so that equal
# label sequences always reach equal states.


def behavior_start(spec: TraceSpec):
    if isinstance(spec, ExplicitTraces):
        return ()
    return frozenset({spec.initial})


def behavior_step(spec: TraceSpec, state, label: Label):
    """Advance by one label; None if the label is not enabled."""
    if isinstance(spec, ExplicitTraces):
        nxt = state + (label,)
        return nxt if nxt in spec.traces else None
    targets = frozenset(t for (s, lab, t) in spec.transitions if s in state and lab == label)
    return targets or None


def behavior_enabled(spec: TraceSpec, state) -> set[Label]:
    if isinstance(spec, ExplicitTraces):
        n = len(state)
        return {t[n] for t in spec.traces if len(t) > n and t[:n] == state}
    return {lab for (s, lab, _) in spec.transitions if s in state}


def accepts_trace(spec: TraceSpec, trace: Iterable[Label]) -> bool:
    """Membership of a label sequence in the trace set of ``spec``."""
    state = behavior_start(spec)
    for lab in trace:
        state = behavior_step(spec, state, lab)
        if state is None:
            return False
    return True


# -- validation ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_frame(frame: Frame) -> ValidationReport:
    """Check the well-formedness conditions of a frame.

    Violations are data, not failures: the report lists every broken
    condition (dangling endpoints, duplicate ids, labels on foreign
    channels, non-prefix-closed explicit trace sets, data values outside
    the declared domain).
    """
    out: list[Violation] = []
    loc_ids = [l.id for l in frame.locations]
    chan_ids = [c.id for c in frame.channels]

    for dup in _duplicates(loc_ids):
        out.append(Violation("duplicate-location", f"location id {dup!r} declared twice"))
    for dup in _duplicates(chan_ids):
        # Two channel records with one id would hand the same endpoint to
        # two locations, the analogue of duplicate endpoint ownership.
        out.append(Violation("duplicate-channel", f"channel id {dup!r} declared twice"))

    known_locs = set(loc_ids)
    for c in frame.channels:
        for end, loc in (("entry", c.sender), ("exit", c.recipient)):
            if loc not in known_locs:
                out.append(
                    Violation(
                        "dangling-endpoint",
                        f"channel {c.id!r} {end} endpoint names unknown location {loc!r}",
                    )
                )

    for loc in frame.locations:
        own = frame.chans(loc.id) if not any(v.code == "duplicate-channel" for v in out) else None
        spec = loc.behavior
        if isinstance(spec, ExplicitTraces):
            for t in spec.prefix_violations():
                out.append(
                    Violation(
                        "not-prefix-closed",
                        f"traces({loc.id}) misses a prefix of {_fmt_trace(t)}",
                    )
                )
        else:
            if spec.initial not in spec.states:
                out.append(
                    Violation("bad-lts", f"lts of {loc.id!r}: initial state not declared")
                )
            for (s, _lab, t) in spec.transitions:
                if s not in spec.states or t not in spec.states:
                    out.append(
                        Violation("bad-lts", f"lts of {loc.id!r}: transition uses unknown state")
                    )
        for (cid, val) in sorted(spec.labels()):
            if cid not in set(chan_ids):
                out.append(
                    Violation(
                        "foreign-channel",
                        f"traces({loc.id}) uses unknown channel {cid!r}",
                    )
                )
            elif own is not None and cid not in own:
                out.append(
                    Violation(
                        "foreign-channel",
                        f"traces({loc.id}) uses channel {cid!r} not at {loc.id}",
                    )
                )
            if val not in frame.data:
                out.append(
                    Violation(
                        "value-outside-domain",
                        f"traces({loc.id}) uses value {val!r} outside the data domain",
                    )
                )
    return ValidationReport(tuple(out))


def _duplicates(items: list[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for x in items:
        if x in seen and x not in dups:
            dups.append(x)
        seen.add(x)
    return dups


def _fmt_trace(t: Trace) -> str:
    return "<" + ",".join(f"({c},{v})" for c, v in t) + ">"


# -- graphs --------------------------------------------------------------


def frame_graph(frame: Frame) -> nx.MultiDiGraph:
    """The directed graph of a frame: one vertex per location, one edge
    per channel (keyed by channel id)."""
    g = nx.MultiDiGraph()
    g.add_nodes_from(frame.location_ids)
    for c in frame.channels:
        g.add_edge(c.sender, c.recipient, key=c.id)
    return g


def undirected_frame_graph(frame: Frame) -> nx.MultiGraph:
    """The undirected graph of a frame (channel-keyed multigraph)."""
    g = nx.MultiGraph()
    g.add_nodes_from(frame.location_ids)
    for c in frame.channels:
        g.add_edge(c.sender, c.recipient, key=c.id)
    return g


# -- language ------------------------------------------------------------


def location_language(loc: Location, max_len: int) -> set[Trace]:
    """All traces of the location of length <= ``max_len``.

    The result is prefix-closed and always contains the empty trace.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    spec = loc.behavior
    if isinstance(spec, ExplicitTraces):
        return {t for t in spec.traces if len(t) <= max_len}
    out: set[Trace] = set()
    frontier: dict[Trace, object] = {(): behavior_start(spec)}
    for _ in range(max_len + 1):
        out.update(frontier)
        nxt: dict[Trace, object] = {}
        for trace, state in frontier.items():
            if len(trace) >= max_len:
                continue
            for lab in behavior_enabled(spec, state):
                t2 = trace + (lab,)
                if t2 not in out and t2 not in nxt:
                    nxt[t2] = behavior_step(spec, state, lab)
        if not nxt:
            break
        frontier = nxt
    return out


def shortest_language_difference(
    a: TraceSpec, b: TraceSpec, max_len: int
) -> Trace | None:
    """Shortest label sequence (up to ``max_len``) in exactly one of the
    two trace sets, or None if they agree to that depth."""
    queue: list[tuple[Trace, object, object]] = [((), behavior_start(a), behavior_start(b))]
    seen: set[Trace] = {()}
    while queue:
        trace, sa, sb = queue.pop(0)
        labels = set()
        if sa is not None:
            labels |= behavior_enabled(a, sa)
        if sb is not None:
            labels |= behavior_enabled(b, sb)
        if len(trace) >= max_len:
            continue
        for lab in sorted(labels):
            na = behavior_step(a, sa, lab) if sa is not None else None
            nb = behavior_step(b, sb, lab) if sb is not None else None
            if (na is None) != (nb is None):
                return trace + (lab,)
            t2 = trace + (lab,)
            if na is not None and t2 not in seen:
                seen.add(t2)
                queue.append((t2, na, nb))
    return None


def trace_specs_equal(a: TraceSpec, b: TraceSpec, depth: int) -> bool:
    """Trace-set equality.  Exact for two ExplicitTraces and for two Lts
    (determinized product walk); bounded to ``depth`` for mixed forms."""
    if isinstance(a, ExplicitTraces) and isinstance(b, ExplicitTraces):
        return a.traces == b.traces
    if isinstance(a, Lts) and isinstance(b, Lts):
        return _dfa_equal(a, b)
    return shortest_language_difference(a, b, depth) is None


def _dfa_equal(a: Lts, b: Lts) -> bool:
    """Language equality of two LTSs via determinized product search."""
    start = (behavior_start(a), behavior_start(b))
    seen = {start}
    queue = [start]
    while queue:
        sa, sb = queue.pop(0)
        ea, eb = behavior_enabled(a, sa), behavior_enabled(b, sb)
        if ea != eb:
            return False
        for lab in ea:
            nxt = (behavior_step(a, sa, lab), behavior_step(b, sb, lab))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True
