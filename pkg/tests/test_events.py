from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from flowcut.enumeration import Bound, enumerate_executions
from flowcut.events import (
    CanonicalizeError,
    CanonicalRun,
    Event,
    EventSystem,
    EventSystemError,
    LinearityError,
    canonicalize,
    is_execution,
    is_initial_substructure,
    project,
)
from flowcut.frames import Channel, ExplicitTraces, Frame, Location, UnknownChannelError

from support import random_budget_complete_frame


def tiny_frame() -> Frame:
    loc = Location("L", ExplicitTraces.of())
    return Frame.build([loc], [Channel("c", "L", "L")], ["v"])


def test_empty_system_is_execution_everywhere():
    assert is_execution(EventSystem.empty(), tiny_frame()).ok


def test_trace_membership_diagnostic():
    sys = EventSystem.build([("c", "v")])
    check = is_execution(sys, tiny_frame())
    assert not check.ok
    assert check.failures == (("L", "trace membership"),)


def test_linearity_diagnostic():
    loc = Location("L", ExplicitTraces.of([("c", "v"), ("c", "v")]))
    frame = Frame.build([loc], [Channel("c", "L", "L")], ["v"])
    sys = EventSystem.build([("c", "v"), ("c", "v")])  # no order
    check = is_execution(sys, frame)
    assert check.failures == (("L", "linearity"),)


def test_unknown_channel_raises():
    sys = EventSystem.build([("ghost", "v")])
    with pytest.raises(UnknownChannelError):
        is_execution(sys, tiny_frame())


def test_project_empty_and_ordered():
    frame = tiny_frame()
    assert project(EventSystem.empty(), frame, "L") == ()
    sys = EventSystem.build([("c", "v"), ("c", "v")], [(0, 1)])
    assert project(sys, frame, "L") == (("c", "v"), ("c", "v"))


def test_project_linearity_error_carries_pair():
    sys = EventSystem.build([("c", "v"), ("c", "v")])
    with pytest.raises(LinearityError) as info:
        project(sys, tiny_frame(), "L")
    assert set(info.value.pair) == {0, 1}


def test_order_must_be_acyclic():
    with pytest.raises(EventSystemError):
        EventSystem.build([("c", "v"), ("c", "v")], [(0, 1), (1, 0)])


def test_restrict_identity_and_empty():
    sys = EventSystem.build([("c", "v"), ("d", "w")], [(0, 1)])
    assert canonicalize(sys.restrict({"c", "d"})) == canonicalize(sys)
    assert sys.restrict(set()).n_events == 0


def test_restrict_keeps_induced_order_through_dropped_events():
    # a < b < c with b on its own channel: restricting away b must keep a < c.
    sys = EventSystem.build(
        [("x", "v"), ("y", "v"), ("x", "v")], [(0, 1), (1, 2)]
    )
    out = sys.restrict({"x"})
    assert out.n_events == 2
    assert out.precedes(0, 1)


def test_canonicalize_empty_and_isomorphism():
    assert canonicalize(EventSystem.empty()) == CanonicalRun.empty()
    s1 = EventSystem.build([("c", "v")])
    s2 = EventSystem.build([("c", "v")])
    assert canonicalize(s1) == canonicalize(s2)


def test_canonicalize_distinguishes_order():
    runs = {
        canonicalize(EventSystem.build([("c", "v"), ("d", "w")], pairs)).serialize()
        for pairs in ([(0, 1)], [(1, 0)], [])
    }
    assert len(runs) == 3


def test_canonicalize_rejects_incomparable_same_channel():
    sys = EventSystem.build([("c", "v"), ("c", "v")])
    with pytest.raises(CanonicalizeError):
        canonicalize(sys)


def test_canonicalize_invariant_under_event_relabeling():
    # The same poset presented with permuted event indices canonicalizes
    # identically.
    events = [("a", "0"), ("b", "1"), ("a", "1")]
    pairs = [(0, 1), (1, 2)]
    base = canonicalize(EventSystem.build(events, pairs))
    for perm in itertools.permutations(range(3)):
        shuffled = [events[i] for i in perm]
        inv = {old: new for new, old in enumerate(perm)}
        mapped = [(inv[a], inv[b]) for a, b in pairs]
        assert canonicalize(EventSystem.build(shuffled, mapped)) == base


def test_initial_substructure_basics():
    frame = tiny_frame()
    sys = EventSystem.build([("c", "v"), ("c", "v")], [(0, 1)])
    assert is_initial_substructure(EventSystem.empty(), sys)
    assert is_initial_substructure(sys, sys)
    # Keeping the later event without its predecessor is not downward closed;
    # under canonical identity the one kept event reads as the chain head,
    # which mismatches the original system's first event only when msgs
    # differ, so use distinct messages.
    sys2 = EventSystem.build([("c", "v"), ("c", "w")], [(0, 1)])
    frame2 = Frame.build(
        [Location("L", ExplicitTraces.of([("c", "v"), ("c", "w")]))],
        [Channel("c", "L", "L")],
        ["v", "w"],
    )
    tail_only = EventSystem.build([("c", "w")])
    assert not is_initial_substructure(tail_only, sys2)


def test_initial_substructures_of_executions_are_executions():
    rng = random.Random(5)
    frame = random_budget_complete_frame(rng, 4)
    exset = enumerate_executions(frame, Bound(4))
    for sys in exset.systems:
        n = sys.n_events
        for mask in range(1 << n):
            keep = [i for i in range(n) if mask >> i & 1]
            downward = all(
                a in keep for b in keep for a in sys.down_set(b)
            )
            if not downward:
                continue
            sub = sys.induced(keep)
            assert is_execution(sub, frame).ok
            assert is_initial_substructure(sub, sys)


@pytest.mark.parametrize("seed", [0, 3])
def test_nested_restriction_composes(seed):
    rng = random.Random(seed)
    frame = random_budget_complete_frame(rng, 5)
    chans = list(frame.channel_ids)
    exset = enumerate_executions(frame, Bound(5))
    for sys in exset.systems:
        c1 = frozenset(chans[: max(1, len(chans) // 2 + 1)])
        c0 = frozenset(list(c1)[:1])
        direct = canonicalize(sys.restrict(c0))
        nested = canonicalize(sys.restrict(c1).restrict(c0))
        assert direct == nested


def test_restriction_commutes_with_canonicalization():
    # Two isomorphic presentations restrict to equal canonical runs.
    rng = random.Random(11)
    frame = random_budget_complete_frame(rng, 5)
    exset = enumerate_executions(frame, Bound(5))
    for sys in exset.systems:
        rebuilt = canonicalize(sys).to_event_system()
        for cid in frame.channel_ids:
            assert canonicalize(sys.restrict({cid})) == canonicalize(
                rebuilt.restrict({cid})
            )


def test_to_event_system_round_trip():
    rng = random.Random(2)
    frame = random_budget_complete_frame(rng, 5)
    for sys in enumerate_executions(frame, Bound(5)).systems:
        run = canonicalize(sys)
        assert canonicalize(run.to_event_system()) == run


@given(st.integers(0, 2 ** 4 - 1))
@settings(max_examples=16, deadline=None)
def test_canonical_equality_iff_bijection_exists(mask):
    # Three fixed events with the same-channel pair always ordered (so the
    # systems are canonicalizable), random cross-channel pairs: canonical
    # equality must track brute-force isomorphism.
    events = [Event("a", "0"), Event("b", "0"), Event("a", "1")]
    candidates = [(0, 1), (1, 2)]
    chosen = [(0, 2)] + [p for k, p in enumerate(candidates) if mask >> k & 1]
    chosen2 = [(0, 2)] + [p for k, p in enumerate(candidates) if mask >> (k + 2) & 1]
    s1 = EventSystem.build(events, chosen)
    s2 = EventSystem.build(events, chosen2)
    run_equal = canonicalize(s1) == canonicalize(s2)
    iso = _brute_force_iso(s1, s2)
    assert run_equal == iso


def _brute_force_iso(s1: EventSystem, s2: EventSystem) -> bool:
    n = s1.n_events
    if n != s2.n_events:
        return False
    for perm in itertools.permutations(range(n)):
        if any(s1.events[i] != s2.events[perm[i]] for i in range(n)):
            continue
        if all(
            ((i, j) in s1.strict) == ((perm[i], perm[j]) in s2.strict)
            for i in range(n)
            for j in range(n)
        ):
            return True
    return False
