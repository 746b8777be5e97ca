"""Closed token vocabulary for Scratch block streams.

The concrete vocabulary is a static table of 137 block opcodes shipped as a
package data file (``data/vocabulary.json``) so it can be swapped without code
changes.  Five reserved tokens follow the concrete entries: the generalized
procedure-definition hat and the structural script/sprite markers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import UnknownToken

CATEGORIES = (
    "motion",
    "looks",
    "sound",
    "event",
    "control",
    "sensing",
    "operator",
    "data",
    "myblocks",
    "pen",
)

SHAPES = ("hat", "stack", "c", "end", "oval", "diamond", "structural")

STRUCTURAL_CATEGORY = "structural-none"

PROCEDURE_DEF = "PROCEDURE_DEF"
BEGIN_SCRIPT = "BEGIN_SCRIPT"
END_SCRIPT = "END_SCRIPT"
BEGIN_SPRITE = "BEGIN_SPRITE"
END_SPRITE = "END_SPRITE"

# Opcodes generalized away entirely, emitted as PROCEDURE_DEF, or dropped.
PROCEDURES_DEFINITION = "procedures_definition"
PROCEDURES_PROTOTYPE = "procedures_prototype"


@dataclass(frozen=True)
class Token:
    """One vocabulary entry: a small integer id and its canonical name."""

    id: int
    name: str


@dataclass(frozen=True)
class BlockMetadata:
    """Static category and shape of a token."""

    category: str
    shape: str


class Vocabulary:
    """Immutable id/name table with per-token metadata.

    Ids are assigned by file order: concrete blocks first, reserved tokens
    after.  The table hash identifies the vocabulary in stream and model
    files.
    """

    def __init__(self, blocks: Sequence[Mapping], reserved: Sequence[Mapping],
                 aliases: Mapping[str, str] | None = None):
        entries = list(blocks) + list(reserved)
        self._names = [e["name"] for e in entries]
        self._meta = [BlockMetadata(e["category"], e["shape"]) for e in entries]
        self._ids = {name: i for i, name in enumerate(self._names)}
        if len(self._ids) != len(self._names):
            raise ValueError("duplicate names in vocabulary table")
        self._concrete_size = len(blocks)
        self._aliases = dict(aliases or {})
        for src, dst in self._aliases.items():
            if dst not in self._ids:
                raise ValueError(f"alias target {dst!r} not in vocabulary")
        canon = json.dumps(
            {"blocks": list(blocks), "reserved": list(reserved)},
            sort_keys=True, separators=(",", ":"),
        )
        self.hash = hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

        self.procedure_def = self._ids[PROCEDURE_DEF]
        self.begin_script = self._ids[BEGIN_SCRIPT]
        self.end_script = self._ids[END_SCRIPT]
        self.begin_sprite = self._ids[BEGIN_SPRITE]
        self.end_sprite = self._ids[END_SPRITE]

    @classmethod
    def from_table(cls, table: Mapping) -> "Vocabulary":
        return cls(table["blocks"], table["reserved"], table.get("aliases"))

    @classmethod
    def from_file(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_table(json.load(fh))

    _default: "Vocabulary | None" = None

    @classmethod
    def default(cls) -> "Vocabulary":
        if cls._default is None:
            data = resources.files("scratchlm.data").joinpath("vocabulary.json")
            cls._default = cls.from_table(json.loads(data.read_text("utf-8")))
        return cls._default

    @property
    def size(self) -> int:
        """Total number of token ids, reserved tokens included."""
        return len(self._names)

    @property
    def concrete_size(self) -> int:
        """Number of concrete block tokens (the closed 137-block set)."""
        return self._concrete_size

    def id(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise UnknownToken(f"unknown token name {name!r}") from None

    def name(self, token_id: int) -> str:
        self._check_id(token_id)
        return self._names[token_id]

    def token(self, key: "int | str") -> Token:
        token_id = key if isinstance(key, int) else self.id(key)
        self._check_id(token_id)
        return Token(token_id, self._names[token_id])

    def metadata(self, token_id: int) -> BlockMetadata:
        self._check_id(token_id)
        return self._meta[token_id]

    def is_concrete(self, token_id: int) -> bool:
        self._check_id(token_id)
        return token_id < self._concrete_size

    def is_marker(self, token_id: int) -> bool:
        """True for the structural script/sprite boundary tokens."""
        self._check_id(token_id)
        return self._meta[token_id].shape == "structural"

    def resolve_opcode(self, opcode: str) -> "int | None":
        """Map a project.json opcode to a token id, applying generalization
        aliases; None when the opcode is outside the vocabulary."""
        opcode = self._aliases.get(opcode, opcode)
        return self._ids.get(opcode)

    def tokens(self) -> Iterable[Token]:
        return (Token(i, n) for i, n in enumerate(self._names))

    def marker_ids(self) -> frozenset[int]:
        return frozenset(
            i for i in range(self.size) if self._meta[i].shape == "structural"
        )

    def _check_id(self, token_id: int) -> None:
        if not isinstance(token_id, int) or not 0 <= token_id < len(self._names):
            raise UnknownToken(f"token id {token_id!r} outside vocabulary")


def block_metadata(token: "Token | int | str", vocab: Vocabulary | None = None) -> BlockMetadata:
    """Category and shape of a token from the bundled metadata table."""
    vocab = vocab or Vocabulary.default()
    if isinstance(token, Token):
        return vocab.metadata(token.id)
    if isinstance(token, str):
        return vocab.metadata(vocab.id(token))
    return vocab.metadata(token)
