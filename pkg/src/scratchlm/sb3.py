"""Parsing of Scratch ``.sb3`` archives into per-script block trees.

An ``.sb3`` file is a ZIP archive whose ``project.json`` entry describes the
program as a list of *targets* (the stage plus sprites).  Each target carries
a flat map of blocks keyed by id; blocks reference each other through
``parent``, ``next`` and input descriptors, which this module links into
per-script trees.  Listing order of top-level blocks in the file is preserved
because it defines script order downstream.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Mapping

from .errors import MalformedArchive, MalformedProgram

PROJECT_JSON = "project.json"

# Compact input arrays: [type, value, ...]; types 4-10 are literals,
# 11 broadcast, 12 variable, 13 list.
_VARIABLE_PRIMITIVE = 12
_LIST_PRIMITIVE = 13

# Substack inputs hold statement bodies rather than expressions.
SUBSTACK_INPUTS = ("SUBSTACK", "SUBSTACK2")


@dataclass
class Block:
    """One block node, normalized from its project.json form."""

    block_id: str
    opcode: str
    next_id: str | None
    parent_id: str | None
    inputs: list[tuple[str, list]]  # (input name, raw descriptor), file order
    fields: Mapping[str, Any]
    shadow: bool
    top_level: bool

    def input_block_ids(self) -> list[str]:
        """Ids of blocks referenced from the input descriptors."""
        ids = []
        for _, descriptor in self.inputs:
            for ref in descriptor[1:]:
                if isinstance(ref, str):
                    ids.append(ref)
        return ids


@dataclass
class Target:
    """The stage or one sprite: its blocks and top-level script roots."""

    name: str
    is_stage: bool
    blocks: dict[str, Block]
    script_roots: list[str]  # file order


@dataclass
class ProjectAST:
    targets: list[Target] = field(default_factory=list)

    @property
    def sprites(self) -> list[Target]:
        return [t for t in self.targets if not t.is_stage]


def parse_project(archive: "bytes | BinaryIO | str") -> ProjectAST:
    """Parse an sb3 ZIP byte stream (or path) into a linked ProjectAST.

    Raises MalformedArchive when the input is not a ZIP with a project.json
    entry, and MalformedProgram when the block graph has dangling references
    or cycles.  Either error aborts this project only.
    """
    if isinstance(archive, bytes):
        archive = io.BytesIO(archive)
    try:
        with zipfile.ZipFile(archive) as zf:
            try:
                raw = zf.read(PROJECT_JSON)
            except KeyError:
                raise MalformedArchive("archive has no project.json entry") from None
    except zipfile.BadZipFile as exc:
        raise MalformedArchive(f"not a ZIP archive: {exc}") from None

    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedProgram(f"project.json is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("targets"), list):
        raise MalformedProgram("project.json has no targets list")

    ast = ProjectAST()
    for target_doc in doc["targets"]:
        ast.targets.append(_parse_target(target_doc))
    return ast


def _parse_target(doc: Mapping) -> Target:
    name = doc.get("name", "")
    blocks_doc = doc.get("blocks", {})
    if not isinstance(blocks_doc, dict):
        raise MalformedProgram(f"target {name!r}: blocks is not a map")

    blocks: dict[str, Block] = {}
    roots: list[str] = []
    for block_id, entry in blocks_doc.items():
        block = _normalize_block(name, block_id, entry)
        blocks[block_id] = block
        if block.top_level and not block.shadow:
            roots.append(block_id)

    _lift_input_primitives(blocks)
    _validate_links(name, blocks, roots)
    return Target(name=name, is_stage=bool(doc.get("isStage")), blocks=blocks,
                  script_roots=roots)


def _lift_input_primitives(blocks: dict[str, Block]) -> None:
    """Turn compact variable/list input arrays into reporter nodes.

    The serializer compresses a variable or list reporter sitting in an input
    slot to ``[12, name, id]`` / ``[13, name, id]`` instead of a block entry;
    lifting them to synthetic nodes keeps the syntax tree uniform.
    """
    for block_id, block in list(blocks.items()):
        for input_name, descriptor in block.inputs:
            for position in range(1, len(descriptor)):
                element = descriptor[position]
                if not (isinstance(element, list) and element
                        and element[0] in (_VARIABLE_PRIMITIVE,
                                           _LIST_PRIMITIVE)):
                    continue
                opcode = ("data_variable" if element[0] == _VARIABLE_PRIMITIVE
                          else "data_listcontents")
                synthetic_id = f"{block_id}.{input_name}.{position}"
                while synthetic_id in blocks:
                    synthetic_id += "'"
                blocks[synthetic_id] = Block(
                    block_id=synthetic_id, opcode=opcode, next_id=None,
                    parent_id=block_id, inputs=[],
                    fields={"NAME": element[1:]}, shadow=False,
                    top_level=False)
                descriptor[position] = synthetic_id


def _normalize_block(target: str, block_id: str, entry: Any) -> Block:
    if isinstance(entry, list):
        # Top-level variable or list reporter serialized in compact form.
        if entry and entry[0] == _VARIABLE_PRIMITIVE:
            opcode = "data_variable"
        elif entry and entry[0] == _LIST_PRIMITIVE:
            opcode = "data_listcontents"
        else:
            raise MalformedProgram(
                f"target {target!r}: block {block_id!r} has unsupported compact form")
        return Block(block_id, opcode, None, None, [], {}, False, True)
    if not isinstance(entry, dict) or "opcode" not in entry:
        raise MalformedProgram(f"target {target!r}: block {block_id!r} has no opcode")

    inputs_doc = entry.get("inputs", {})
    inputs = []
    for input_name, descriptor in inputs_doc.items():
        if isinstance(descriptor, list) and descriptor:
            inputs.append((input_name, descriptor))
    return Block(
        block_id=block_id,
        opcode=entry["opcode"],
        next_id=entry.get("next"),
        parent_id=entry.get("parent"),
        inputs=inputs,
        fields=entry.get("fields", {}),
        shadow=bool(entry.get("shadow")),
        top_level=bool(entry.get("topLevel")),
    )


def _validate_links(target: str, blocks: Mapping[str, Block], roots: list[str]) -> None:
    for block in blocks.values():
        refs = [block.next_id, block.parent_id] + block.input_block_ids()
        for ref in refs:
            if ref is not None and ref not in blocks:
                raise MalformedProgram(
                    f"target {target!r}: block {block.block_id!r} references "
                    f"missing block {ref!r}")

    # A block reached twice from the script roots has either a cycle or two
    # parents; valid programs have neither.
    seen: set[str] = set()
    for root in roots:
        stack = [root]
        while stack:
            block_id = stack.pop()
            if block_id in seen:
                raise MalformedProgram(
                    f"target {target!r}: cyclic or shared link at block {block_id!r}")
            seen.add(block_id)
            block = blocks[block_id]
            if block.next_id:
                stack.append(block.next_id)
            stack.extend(block.input_block_ids())
