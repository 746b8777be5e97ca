"""Shared fixtures: in-memory sb3 archives and the T1 toy corpus."""

import io
import json
import zipfile

import pytest

from scratchlm.vocab import Vocabulary


def make_sb3(targets, extra_entries=None) -> bytes:
    """Build an in-memory sb3 archive from target dicts."""
    doc = {
        "targets": targets,
        "monitors": [],
        "extensions": [],
        "meta": {"semver": "3.0.0", "vm": "1.2.0", "agent": ""},
    }
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as zf:
        zf.writestr("project.json", json.dumps(doc))
        for name, payload in (extra_entries or {}).items():
            zf.writestr(name, payload)
    return buffer.getvalue()


def stage(blocks=None) -> dict:
    return {"isStage": True, "name": "Stage", "variables": {}, "lists": {},
            "broadcasts": {}, "blocks": blocks or {}}


def sprite(name, blocks) -> dict:
    return {"isStage": False, "name": name, "variables": {}, "lists": {},
            "broadcasts": {}, "blocks": blocks}


def block(opcode, next_id=None, parent_id=None, inputs=None, fields=None,
          shadow=False, top_level=False) -> dict:
    return {
        "opcode": opcode,
        "next": next_id,
        "parent": parent_id,
        "inputs": inputs or {},
        "fields": fields or {},
        "shadow": shadow,
        "topLevel": top_level,
    }


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return Vocabulary.default()


@pytest.fixture
def fig1b_sb3() -> bytes:
    """Flag-clicked hat, a repeat block with a literal count, and a say block
    with a literal message in the repeat body."""
    blocks = {
        "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
        "b2": block("control_repeat", parent_id="b1", inputs={
            "TIMES": [1, [6, "10"]],
            "SUBSTACK": [2, "b3"],
        }),
        "b3": block("looks_say", parent_id="b2", inputs={
            "MESSAGE": [1, [10, "Hello World!"]],
        }),
    }
    return make_sb3([stage(), sprite("Sprite1", blocks)])


@pytest.fixture
def fig2a_sb3() -> bytes:
    """Flag-clicked hat and an empty repeat-until with an equality condition
    whose operands are free text slots."""
    blocks = {
        "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
        "b2": block("control_repeat_until", parent_id="b1", inputs={
            "CONDITION": [2, "b3"],
        }),
        "b3": block("operator_equals", parent_id="b2", inputs={
            "OPERAND1": [1, [10, ""]],
            "OPERAND2": [1, [10, ""]],
        }),
    }
    return make_sb3([stage(), sprite("Sprite1", blocks)])


# T1: four short scripts over a tiny artificial vocabulary of 8 ids.
# 0 and 1 stand in for the script markers, 2/3/4 for blocks; ids 5..7 are
# in-vocabulary but unseen.  26 tokens in total.
T1_VOCAB_SIZE = 8
T1_STREAMS = [
    [0, 2, 3, 4, 2, 3, 1],
    [0, 2, 3, 4, 3, 1],
    [0, 3, 2, 2, 3, 4, 1],
    [0, 2, 3, 2, 3, 1],
]


@pytest.fixture(scope="session")
def t1_streams():
    return [list(s) for s in T1_STREAMS]


def shared_fixture_projects():
    """The two projects behind fixtures/shared-streams.jsonl.

    The stream file written from these projects is the cross-component
    interchange fixture; the non-ASCII sprite name pins the UTF-8 handling.
    """
    from scratchlm.sb3 import parse_project
    from scratchlm.tokenizer import TokenizeOptions, tokenize_project

    fig1b_blocks = {
        "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
        "b2": block("control_repeat", parent_id="b1", inputs={
            "TIMES": [1, [6, "10"]],
            "SUBSTACK": [2, "b3"],
        }),
        "b3": block("looks_say", parent_id="b2", inputs={
            "MESSAGE": [1, [10, "Hello World!"]],
        }),
    }
    game_blocks = {
        "d1": block("procedures_definition", next_id="d4", top_level=True,
                    inputs={"custom_block": [1, "d2"]}),
        "d2": block("procedures_prototype", parent_id="d1", shadow=True),
        "d4": block("motion_movesteps", parent_id="d1",
                    inputs={"STEPS": [1, [4, "10"]]}),
        "m1": block("event_whenflagclicked", next_id="m2", top_level=True),
        "m2": block("control_forever", parent_id="m1",
                    inputs={"SUBSTACK": [2, "m3"]}),
        "m3": block("procedures_call", parent_id="m2"),
        "x1": block("looks_hide", top_level=True),
    }
    archives = [
        ("fig1b", make_sb3([stage(), sprite("Sprite1", fig1b_blocks)])),
        ("game", make_sb3([stage(), sprite("Bühne", game_blocks)])),
    ]
    return [
        tokenize_project(parse_project(archive), TokenizeOptions(),
                         project_id=project_id)
        for project_id, archive in archives
    ]
