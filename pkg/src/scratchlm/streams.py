"""Versioned line-delimited file formats: token streams and corpus manifests.

A token-stream file is UTF-8 JSON lines.  The first line is a header record
naming the format, its version, and the vocabulary hash; every following line
holds one sprite: project id, sprite name, the flattened token-id list with
script markers inline, and one reachability flag per script.  The full layout
is documented in docs/FORMATS.md; serialization is byte-stable so independent
implementations can round-trip files identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import FormatVersionMismatch, ScratchLMError
from .tokenizer import TokenizeOptions, TokenizedProject
from .vocab import Vocabulary

STREAM_FORMAT = "sb3-token-streams"
STREAM_VERSION = 1

MANIFEST_FORMAT = "sb3-corpus-manifest"
MANIFEST_VERSION = 1


class StreamFormatError(ScratchLMError):
    """A stream or manifest file does not follow its documented layout."""


@dataclass
class SpriteRecord:
    """One line of a token-stream file."""

    project: str
    sprite: str
    tokens: list[int]
    reachable: list[bool]

    def script_sequences(self, vocab: Vocabulary,
                         reachable_only: bool = False) -> list[list[int]]:
        """Split the flat id list back into per-script marker-wrapped runs."""
        scripts: list[list[int]] = []
        current: list[int] | None = None
        for token in self.tokens:
            if token == vocab.begin_script:
                current = [token]
            elif token == vocab.end_script:
                if current is not None:
                    current.append(token)
                    scripts.append(current)
                    current = None
            elif current is not None:
                current.append(token)
        if reachable_only:
            scripts = [s for s, ok in zip(scripts, self.reachable) if ok]
        return scripts


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def stream_header(vocab: Vocabulary) -> str:
    return _dump({"format": STREAM_FORMAT, "version": STREAM_VERSION,
                  "vocab": vocab.hash})


def sprite_record_line(record: SpriteRecord) -> str:
    return _dump({"project": record.project, "sprite": record.sprite,
                  "tokens": record.tokens, "reachable": record.reachable})


def write_streams(projects: Iterable[TokenizedProject], fh: IO[str],
                  options: TokenizeOptions | None = None,
                  vocab: Vocabulary | None = None) -> int:
    """Serialize tokenized projects; returns the number of sprite records."""
    options = options or TokenizeOptions()
    vocab = vocab or Vocabulary.default()
    fh.write(stream_header(vocab) + "\n")
    written = 0
    for project in projects:
        flats = dict(project.sprite_token_ids(options, vocab))
        for sprite, streams in project.sprites:
            record = SpriteRecord(
                project=project.meta.project_id,
                sprite=sprite,
                tokens=flats[sprite],
                reachable=[s.reachable for s in streams],
            )
            fh.write(sprite_record_line(record) + "\n")
            written += 1
    return written


def write_records(records: Iterable[SpriteRecord], fh: IO[str],
                  vocab: Vocabulary | None = None) -> int:
    vocab = vocab or Vocabulary.default()
    fh.write(stream_header(vocab) + "\n")
    written = 0
    for record in records:
        fh.write(sprite_record_line(record) + "\n")
        written += 1
    return written


def read_streams(fh: IO[str], expected_vocab: Vocabulary | None = None
                 ) -> tuple[dict, list[SpriteRecord]]:
    """Parse a token-stream file; returns (header, sprite records)."""
    first = fh.readline()
    if not first:
        raise StreamFormatError("empty stream file")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise StreamFormatError(f"bad header line: {exc}") from None
    if header.get("format") != STREAM_FORMAT:
        raise StreamFormatError(f"not a {STREAM_FORMAT} file")
    if header.get("version") != STREAM_VERSION:
        raise FormatVersionMismatch(
            f"stream format version {header.get('version')!r}, "
            f"supported: {STREAM_VERSION}")
    if expected_vocab is not None and header.get("vocab") != expected_vocab.hash:
        raise StreamFormatError(
            f"stream file vocabulary {header.get('vocab')!r} does not match "
            f"the loaded table {expected_vocab.hash!r}")

    records = []
    for lineno, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            records.append(SpriteRecord(
                project=doc["project"], sprite=doc["sprite"],
                tokens=list(doc["tokens"]),
                reachable=[bool(b) for b in doc["reachable"]]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise StreamFormatError(f"line {lineno}: bad sprite record: {exc}") from None
    return header, records


def script_sequences(records: Iterable[SpriteRecord],
                     vocab: Vocabulary | None = None,
                     reachable_only: bool = False) -> Iterator[list[int]]:
    """All per-script token sequences across the given sprite records."""
    vocab = vocab or Vocabulary.default()
    for record in records:
        yield from record.script_sequences(vocab, reachable_only=reachable_only)


@dataclass
class ManifestEntry:
    """One corpus project: id, archive path, remix flag, optional split."""

    project_id: str
    path: str
    is_remix: bool = False
    split: str | None = None
    blocks: int | None = None


def write_manifest(entries: Iterable[ManifestEntry], fh: IO[str]) -> int:
    fh.write(_dump({"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION}) + "\n")
    count = 0
    for entry in entries:
        doc = {"id": entry.project_id, "path": entry.path, "remix": entry.is_remix}
        if entry.split is not None:
            doc["split"] = entry.split
        if entry.blocks is not None:
            doc["blocks"] = entry.blocks
        fh.write(_dump(doc) + "\n")
        count += 1
    return count


def read_manifest(fh: IO[str]) -> list[ManifestEntry]:
    first = fh.readline()
    if not first:
        raise StreamFormatError("empty manifest file")
    header = json.loads(first)
    if header.get("format") != MANIFEST_FORMAT:
        raise StreamFormatError(f"not a {MANIFEST_FORMAT} file")
    if header.get("version") != MANIFEST_VERSION:
        raise FormatVersionMismatch(
            f"manifest version {header.get('version')!r}, supported: {MANIFEST_VERSION}")
    entries = []
    for lineno, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            entries.append(ManifestEntry(
                project_id=str(doc["id"]), path=doc["path"],
                is_remix=bool(doc.get("remix", False)),
                split=doc.get("split"), blocks=doc.get("blocks")))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise StreamFormatError(f"line {lineno}: bad manifest entry: {exc}") from None
    return entries
