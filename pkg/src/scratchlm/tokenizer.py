"""Linearization of parsed Scratch programs into token streams.

Scripts are traversed in preorder; every node that resolves to a concrete
vocabulary block contributes one token.  Literals and drop-down menus are
dropped, variable/list/parameter reporters collapse to the generic variable
token, custom-block calls collapse to the generic call token, and each
procedure-definition hat is emitted as the reserved PROCEDURE_DEF token with
its prototype dropped.  Every stream is wrapped in BEGIN_SCRIPT/END_SCRIPT.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from sklearn.base import BaseEstimator, TransformerMixin

from . import sb3
from .errors import MalformedArchive, MalformedProgram
from .vocab import PROCEDURES_DEFINITION, Vocabulary


@dataclass(frozen=True)
class TokenizeOptions:
    """Switches for stream construction.

    sprite_markers wraps each sprite's flattened stream in
    BEGIN_SPRITE/END_SPRITE; procedures_first orders procedure-definition
    scripts before event scripts within a sprite (the sequence layout used
    for sprite-level sequence models), otherwise file order is kept.
    """

    sprite_markers: bool = False
    procedures_first: bool = False


@dataclass(frozen=True)
class SourceLoc:
    """Anchor of one token in the archive; block_id is None for markers."""

    sprite: str
    script: int
    block_id: str | None


@dataclass
class ScriptStream:
    """Preorder token ids for one script, wrapped in script markers."""

    tokens: list[int]
    locations: list[SourceLoc]
    reachable: bool

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class ProjectMeta:
    project_id: str
    block_count: int
    is_remix: bool = False


@dataclass
class TokenizedProject:
    """Per-sprite, per-script token streams plus project metadata."""

    sprites: list[tuple[str, list[ScriptStream]]]
    meta: ProjectMeta
    # Nodes excluded from the streams, keyed by reason (menu, prototype,
    # extension, orphan).  extension drops are the per-project warning count.
    dropped: Counter = field(default_factory=Counter)

    @property
    def extension_warnings(self) -> int:
        return self.dropped.get("extension", 0)

    def streams(self, reachable_only: bool = False) -> list[ScriptStream]:
        out = []
        for _, scripts in self.sprites:
            for stream in scripts:
                if not reachable_only or stream.reachable:
                    out.append(stream)
        return out

    def sprite_token_ids(self, options: TokenizeOptions,
                         vocab: Vocabulary) -> list[tuple[str, list[int]]]:
        """Flattened per-sprite id lists with script markers inline."""
        out = []
        for name, scripts in self.sprites:
            flat: list[int] = []
            for stream in scripts:
                flat.extend(stream.tokens)
            if options.sprite_markers:
                flat = [vocab.begin_sprite] + flat + [vocab.end_sprite]
            out.append((name, flat))
        return out


def tokenize_script(target: sb3.Target, root_id: str,
                    options: TokenizeOptions | None = None,
                    vocab: Vocabulary | None = None,
                    sprite_name: str | None = None,
                    script_index: int = 0,
                    dropped: Counter | None = None,
                    handled: set[str] | None = None) -> ScriptStream:
    """Tokenize one script of a parsed target into a marker-wrapped stream.

    ``dropped`` accumulates per-reason counts of excluded nodes and
    ``handled`` the ids of every node either emitted or excluded, so that a
    project-level walk can account for every block node exactly once.
    """
    vocab = vocab or Vocabulary.default()
    dropped = dropped if dropped is not None else Counter()
    handled = handled if handled is not None else set()
    sprite = sprite_name if sprite_name is not None else target.name

    tokens: list[int] = [vocab.begin_script]
    locations: list[SourceLoc] = [SourceLoc(sprite, script_index, None)]

    def emit(token_id: int, block_id: str) -> None:
        tokens.append(token_id)
        locations.append(SourceLoc(sprite, script_index, block_id))
        handled.add(block_id)

    def drop_subtree(block_id: str, reason: str) -> None:
        block = target.blocks[block_id]
        dropped[reason] += 1
        handled.add(block_id)
        for child in block.input_block_ids():
            drop_subtree(child, reason)
        if block.next_id:
            drop_subtree(block.next_id, reason)

    def visit(block_id: str) -> None:
        block = target.blocks[block_id]
        if block.opcode == PROCEDURES_DEFINITION:
            emit(vocab.procedure_def, block_id)
            # The prototype (and its parameter reporters) is declaration
            # machinery, not code; only the body is tokenized.
            for _, descriptor in block.inputs:
                for ref in descriptor[1:]:
                    if isinstance(ref, str):
                        drop_subtree(ref, "prototype")
        else:
            token_id = vocab.resolve_opcode(block.opcode)
            if token_id is not None:
                emit(token_id, block_id)
            elif block.shadow:
                dropped["menu"] += 1
                handled.add(block_id)
            else:
                dropped["extension"] += 1
                handled.add(block_id)
            expressions, substacks = _partition_inputs(block)
            for ref, obscured in expressions:
                for menu_id in obscured:
                    drop_subtree(menu_id, "menu")
                visit(ref)
            for ref in substacks:
                visit(ref)
        if block.next_id:
            visit(block.next_id)

    root = target.blocks[root_id]
    visit(root_id)
    tokens.append(vocab.end_script)
    locations.append(SourceLoc(sprite, script_index, None))

    reachable = root.opcode == PROCEDURES_DEFINITION
    root_token = vocab.resolve_opcode(root.opcode)
    if root_token is not None and vocab.metadata(root_token).shape == "hat":
        reachable = True
    return ScriptStream(tokens=tokens, locations=locations, reachable=reachable)


def _partition_inputs(block: sb3.Block):
    """Split inputs into expression references and substack references.

    Expressions keep file order and precede the substacks so that a block's
    operands are tokenized before its body and its body before its successor.
    When a block obscures a menu shadow ([3, block, shadow]), the shadow id is
    reported for drop accounting.
    """
    expressions: list[tuple[str, list[str]]] = []
    substacks: list[tuple[str, str]] = []
    for name, descriptor in block.inputs:
        refs = [r for r in descriptor[1:] if isinstance(r, str)]
        if not refs:
            continue
        if name in sb3.SUBSTACK_INPUTS:
            substacks.append((name, refs[0]))
        else:
            expressions.append((refs[0], refs[1:]))
    substacks.sort(key=lambda item: item[0])  # SUBSTACK before SUBSTACK2
    return expressions, [ref for _, ref in substacks]


def tokenize_project(ast: sb3.ProjectAST,
                     options: TokenizeOptions | None = None,
                     vocab: Vocabulary | None = None,
                     project_id: str = "",
                     is_remix: bool = False) -> TokenizedProject:
    """Tokenize every script of every target, preserving file order."""
    options = options or TokenizeOptions()
    vocab = vocab or Vocabulary.default()

    sprites: list[tuple[str, list[ScriptStream]]] = []
    dropped: Counter = Counter()
    block_count = 0
    for target in ast.targets:
        roots = list(target.script_roots)
        if options.procedures_first:
            defs = [r for r in roots
                    if target.blocks[r].opcode == PROCEDURES_DEFINITION]
            rest = [r for r in roots
                    if target.blocks[r].opcode != PROCEDURES_DEFINITION]
            roots = defs + rest
        streams = []
        handled: set[str] = set()
        for index, root_id in enumerate(roots):
            stream = tokenize_script(target, root_id, options, vocab,
                                     sprite_name=target.name,
                                     script_index=index, dropped=dropped,
                                     handled=handled)
            streams.append(stream)
            block_count += sum(1 for t in stream.tokens if not vocab.is_marker(t))
        dropped["orphan"] += sum(1 for b in target.blocks if b not in handled)
        sprites.append((target.name, streams))

    meta = ProjectMeta(project_id=project_id, block_count=block_count,
                       is_remix=is_remix)
    return TokenizedProject(sprites=sprites, meta=meta, dropped=dropped)


def filter_corpus(meta: ProjectMeta, min_blocks: int = 10,
                  exclude_remixes: bool = True) -> bool:
    """Corpus admission rule: enough blocks, and optionally no remixes."""
    if meta.block_count < min_blocks:
        return False
    if exclude_remixes and meta.is_remix:
        return False
    return True


class ScratchTokenizer(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper: sb3 archives in, TokenizedProjects out.

    Stateless apart from its options; fit is a no-op.  ``transform`` accepts
    paths, byte strings, or (source, project_id, is_remix) triples.  With
    ``on_error="skip"`` malformed projects are dropped and counted instead of
    aborting the batch.
    """

    def __init__(self, sprite_markers: bool = False, procedures_first: bool = False,
                 on_error: str = "raise"):
        self.sprite_markers = sprite_markers
        self.procedures_first = procedures_first
        self.on_error = on_error

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: Iterable) -> list[TokenizedProject]:
        if self.on_error not in ("raise", "skip"):
            raise ValueError("on_error must be 'raise' or 'skip'")
        options = TokenizeOptions(sprite_markers=self.sprite_markers,
                                  procedures_first=self.procedures_first)
        vocab = Vocabulary.default()
        out = []
        self.skipped_ = []
        for item in X:
            source, project_id, is_remix = _coerce_item(item)
            try:
                ast = sb3.parse_project(source)
            except (MalformedArchive, MalformedProgram) as exc:
                if self.on_error == "raise":
                    raise
                self.skipped_.append((project_id, str(exc)))
                continue
            out.append(tokenize_project(ast, options, vocab,
                                        project_id=project_id, is_remix=is_remix))
        return out


def _coerce_item(item):
    if isinstance(item, tuple):
        source, project_id, is_remix = item
        return source, project_id, bool(is_remix)
    if isinstance(item, (str,)):
        return item, item, False
    return item, "", False
