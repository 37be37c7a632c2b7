from __future__ import annotations

import json

import pytest

from flowcut.cli import main
from flowcut.fileformat import (
    FileFormatError,
    emit_frame_document,
    parse_frame_document,
    parse_machine_document,
)
from flowcut.scenarios import FirewallParams, VotingParams, build_firewall, build_voting

GOOD_FRAME = """
frame:
  data: ["0", "1"]
  locations:
    - id: S
      traces:
        - []
        - [[a, "0"]]
        - [[a, "1"]]
    - id: A
      lts:
        states: [q0, q1]
        initial: q0
        transitions:
          - [q0, a, "0", q1]
          - [q0, a, "1", q1]
  channels:
    - id: a
      sender: S
      recipient: A
  channel_sets:
    src: [a]
  blurs:
    ident: {kind: identity}
    everything: {kind: all}
"""

BAD_PREFIX_FRAME = """
frame:
  data: [v]
  locations:
    - id: L
      traces:
        - [[c, v]]
  channels:
    - id: c
      sender: L
      recipient: L
"""

MACHINE = """
machine:
  domains: [hi, lo]
  influence: [[lo, hi]]
  actions: {ah: hi, al: lo}
  outputs: [o0]
  states: [s]
  initial: s
  transitions:
    - [s, ah, s]
    - [s, al, s]
  obs:
    s: {hi: o0, lo: o0}
"""


@pytest.fixture()
def frame_file(tmp_path):
    p = tmp_path / "frame.yaml"
    p.write_text(GOOD_FRAME)
    return str(p)


@pytest.fixture()
def machine_file(tmp_path):
    p = tmp_path / "machine.yaml"
    p.write_text(MACHINE)
    return str(p)


def test_parse_good_frame_and_named_artifacts():
    frame, named, blurs = parse_frame_document(GOOD_FRAME)
    assert frame.channel_ids == ("a",)
    assert named == {"src": frozenset({"a"})}
    assert set(blurs) == {"ident", "everything"}


def test_parser_rejects_unknown_keys():
    with pytest.raises(FileFormatError) as info:
        parse_frame_document(GOOD_FRAME.replace("channel_sets", "channelz"))
    assert "channelz" in str(info.value)


def test_parser_names_line_and_column():
    with pytest.raises(FileFormatError) as info:
        parse_frame_document("frame: {a: b")
    assert "line" in str(info.value)


def test_machine_document_parses_with_implicit_reflexivity():
    machine = parse_machine_document(MACHINE)
    assert ("hi", "hi") in machine.influence
    assert ("lo", "hi") in machine.influence


def test_emit_parse_round_trip_voting():
    scn = build_voting(VotingParams(precincts=(2,)))
    text = emit_frame_document(scn.frame, scn.named_sets, scn.blurs)
    frame2, named2, blurs2 = parse_frame_document(text)
    assert frame2 == scn.frame
    assert named2 == scn.named_sets
    assert set(blurs2) == set(scn.blurs)


def test_emit_parse_round_trip_firewall():
    scn = build_firewall(FirewallParams())
    text = emit_frame_document(scn.frame, scn.named_sets, scn.blurs)
    frame2, named2, blurs2 = parse_frame_document(text)
    assert frame2 == scn.frame
    assert blurs2["f_e"] == scn.blurs["f_e"]


def test_cli_validate_exit_codes(frame_file, tmp_path, capsys):
    assert main(["validate", frame_file]) == 0
    capsys.readouterr()
    bad = tmp_path / "bad.yaml"
    bad.write_text(BAD_PREFIX_FRAME)
    assert main(["validate", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "not-prefix-closed" in out
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 2


def test_cli_parse_error_exit_2(tmp_path, capsys):
    broken = tmp_path / "broken.yaml"
    broken.write_text("frame: {a: b")
    assert main(["validate", str(broken)]) == 2
    assert "line" in capsys.readouterr().err


def test_cli_runs_and_enumerate(frame_file, capsys):
    assert main(["enumerate", frame_file, "--bound", "2", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "flowcut-report/1"
    assert doc["details"]["count"] == 3
    assert main(["runs", frame_file, "--channels", "src", "--bound", "2"]) == 0


def test_cli_nodisclosure_failure_carries_counterexample(frame_file, capsys):
    code = main(
        ["nodisclosure", frame_file, "--source", "a", "--observed", "a", "--bound", "2", "--json"]
    )
    assert code == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] is False
    assert "counterexample_observed" in doc["details"]


def test_cli_check_blur_identity_holds(frame_file):
    assert (
        main(
            [
                "check-blur",
                frame_file,
                "--blur",
                "ident",
                "--source",
                "src",
                "--observed",
                "src",
                "--bound",
                "2",
            ]
        )
        == 0
    )


def test_cli_unknown_blur_is_usage_error(frame_file):
    assert (
        main(
            [
                "check-blur",
                frame_file,
                "--blur",
                "nope",
                "--source",
                "src",
                "--observed",
                "src",
            ]
        )
        == 2
    )


def test_cli_cut_commands(tmp_path, capsys):
    scn = build_firewall(FirewallParams())
    path = tmp_path / "fw.yaml"
    path.write_text(emit_frame_document(scn.frame, scn.named_sets, scn.blurs))
    assert main(["check-cut", str(path), "--source", "chans_i", "--cut", "c1,c2", "--observed", "chans_n"]) == 0
    capsys.readouterr()
    assert main(["check-cut", str(path), "--source", "chans_i", "--cut", "c1", "--observed", "chans_n"]) == 1
    out = capsys.readouterr().out
    assert "witness" in out
    assert main(["min-cut", str(path), "--source", "chans_i", "--observed", "chans_n", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["details"]["cut"]) == 2


def test_cli_machine_commands(machine_file, capsys):
    assert main(["nd", machine_file, "--target", "hi", "--purge", "gm", "--bound", "6"]) in (0, 1)
    capsys.readouterr()
    assert main(["purge-blur", machine_file, "--target", "hi", "--purge", "hy", "--bound", "6", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["details"]["class_count"] >= 1


def test_cli_scenario_voting_roundtrips_through_analysis(tmp_path, capsys):
    out = tmp_path / "v.yaml"
    assert main(["scenario", "voting", "--precincts", "2", "--out", str(out)]) == 0
    capsys.readouterr()
    assert (
        main(
            [
                "check-blur",
                str(out),
                "--blur",
                "f0",
                "--source",
                "voters",
                "--observed",
                "p",
                "--bound",
                "8",
            ]
        )
        == 0
    )


def test_cli_reports_are_byte_deterministic(frame_file, capsys):
    argv = [
        "cmpt",
        frame_file,
        "--observed",
        "src",
        "--source",
        "src",
        "--run-index",
        "1",
        "--bound",
        "2",
        "--json",
        "--seed",
        "7",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    from flowcut.enumeration import _enumerate_cached
    from flowcut.disclosure import _cmpt_table

    _enumerate_cached.cache_clear()
    _cmpt_table.cache_clear()
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    assert json.loads(first)["params"]["seed"] == 7


def test_cli_default_bound_is_announced(frame_file, capsys):
    assert main(["runs", frame_file, "--channels", "src"]) == 0
    out = capsys.readouterr().out
    assert "defaulting to 6" in out


def test_emitted_files_reproduce_in_memory_analyses_bit_for_bit(tmp_path, capsys):
    from flowcut.enumeration import Bound, enumerate_runs

    scn = build_voting(VotingParams(precincts=(2,)))
    path = tmp_path / "v.yaml"
    path.write_text(emit_frame_document(scn.frame, scn.named_sets, scn.blurs))
    assert main(["runs", str(path), "--channels", "voters", "--bound", "6", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    in_memory = sorted(
        r.serialize()
        for r in enumerate_runs(scn.frame, scn.named_sets["voters"], Bound(6))
    )
    assert doc["details"]["runs"] == in_memory
