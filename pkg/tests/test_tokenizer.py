"""Tokenization: golden sequences, generalization, ordering, bookkeeping."""

import pytest

from scratchlm.sb3 import parse_project
from scratchlm.tokenizer import (ProjectMeta, ScratchTokenizer,
                                 TokenizeOptions, filter_corpus,
                                 tokenize_project)

from .conftest import block, make_sb3, sprite, stage


def names(vocab, tokens):
    return [vocab.name(t) for t in tokens]


def tokenize(sb3_bytes, vocab, **kwargs):
    return tokenize_project(parse_project(sb3_bytes), TokenizeOptions(**kwargs),
                            vocab)


class TestGoldenScripts:
    def test_fig1b_token_sequence(self, fig1b_sb3, vocab):
        project = tokenize(fig1b_sb3, vocab)
        (_, streams), = [s for s in project.sprites if s[0] == "Sprite1"]
        assert names(vocab, streams[0].tokens) == [
            "BEGIN_SCRIPT",
            "event_whenflagclicked",
            "control_repeat",
            "looks_say",
            "END_SCRIPT",
        ]

    def test_fig2a_token_sequence(self, fig2a_sb3, vocab):
        project = tokenize(fig2a_sb3, vocab)
        (_, streams), = [s for s in project.sprites if s[0] == "Sprite1"]
        assert names(vocab, streams[0].tokens) == [
            "BEGIN_SCRIPT",
            "event_whenflagclicked",
            "control_repeat_until",
            "operator_equals",
            "END_SCRIPT",
        ]

    def test_hat_only_script(self, vocab):
        blocks = {"b1": block("event_whenflagclicked", top_level=True)}
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        stream = project.sprites[1][1][0]
        assert names(vocab, stream.tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "END_SCRIPT"]


class TestPreorder:
    def test_operand_precedes_body_precedes_successor(self, vocab):
        # repeat (x position) times { say } then hide: the count operand must
        # come before the body, the body before the successor.
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("control_repeat", parent_id="b1", next_id="b5", inputs={
                "TIMES": [3, "b3", [6, "10"]],
                "SUBSTACK": [2, "b4"],
            }),
            "b3": block("motion_xposition", parent_id="b2"),
            "b4": block("looks_say", parent_id="b2",
                        inputs={"MESSAGE": [1, [10, "hi"]]}),
            "b5": block("looks_hide", parent_id="b1"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "control_repeat",
            "motion_xposition", "looks_say", "looks_hide", "END_SCRIPT"]

    def test_if_else_orders_condition_then_branches(self, vocab):
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("control_if_else", parent_id="b1", inputs={
                "SUBSTACK2": [2, "b5"],
                "CONDITION": [2, "b3"],
                "SUBSTACK": [2, "b4"],
            }),
            "b3": block("sensing_mousedown", parent_id="b2"),
            "b4": block("looks_show", parent_id="b2"),
            "b5": block("looks_hide", parent_id="b2"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "control_if_else",
            "sensing_mousedown", "looks_show", "looks_hide", "END_SCRIPT"]

    def test_nested_expression_preorder(self, vocab):
        # say (join (answer) (username))
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("looks_say", parent_id="b1",
                        inputs={"MESSAGE": [3, "b3", [10, ""]]}),
            "b3": block("operator_join", parent_id="b2", inputs={
                "STRING1": [3, "b4", [10, ""]],
                "STRING2": [3, "b5", [10, ""]],
            }),
            "b4": block("sensing_answer", parent_id="b3"),
            "b5": block("sensing_username", parent_id="b3"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "looks_say",
            "operator_join", "sensing_answer", "sensing_username", "END_SCRIPT"]


class TestGeneralization:
    def test_variables_lists_and_menus(self, vocab):
        # set score to (item 1 of mylist); go to (random position menu)
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("data_setvariableto", parent_id="b1", next_id="b4",
                        inputs={"VALUE": [3, "b3", [10, "0"]]},
                        fields={"VARIABLE": ["score", "score-id"]}),
            "b3": block("data_itemoflist", parent_id="b2",
                        inputs={"INDEX": [1, [7, "1"]]},
                        fields={"LIST": ["mylist", "list-id"]}),
            "b4": block("motion_goto", parent_id="b2",
                        inputs={"TO": [1, "b5"]}),
            "b5": block("motion_goto_menu", parent_id="b4", shadow=True,
                        fields={"TO": ["_random_", None]}),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "data_setvariableto",
            "data_itemoflist", "motion_goto", "END_SCRIPT"]
        assert project.dropped["menu"] == 1

    def test_variable_reporter_becomes_var_token(self, vocab):
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("looks_say", parent_id="b1",
                        inputs={"MESSAGE": [3, "b3", [10, ""]]}),
            "b3": block("data_variable", parent_id="b2",
                        fields={"VARIABLE": ["lives", "lives-id"]}),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens)[3] == "data_variable"

    def test_compact_variable_input_becomes_var_token(self, vocab):
        # Variables in input slots usually serialize as [12, name, id]
        # arrays, not block entries; lists as [13, name, id].
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("looks_say", parent_id="b1", next_id="b3",
                        inputs={"MESSAGE": [3, [12, "lives", "lives-id"],
                                            [10, "0"]]}),
            "b3": block("looks_think", parent_id="b2",
                        inputs={"MESSAGE": [2, [13, "items", "items-id"]]}),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "looks_say",
            "data_variable", "looks_think", "data_variable", "END_SCRIPT"]

    def test_compact_inputs_counted_in_node_accounting(self, vocab):
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("looks_say", parent_id="b1",
                        inputs={"MESSAGE": [3, [12, "v", "v-id"], [10, ""]]}),
        }
        archive = make_sb3([stage(), sprite("S", blocks)])
        ast = parse_project(archive)
        total_nodes = sum(len(t.blocks) for t in ast.targets)
        assert total_nodes == 3  # hat, say, lifted variable reporter
        project = tokenize(archive, vocab)
        emitted = sum(
            sum(1 for t in s.tokens if not vocab.is_marker(t))
            for _, streams in project.sprites for s in streams)
        assert emitted + sum(project.dropped.values()) == total_nodes

    def test_extension_blocks_dropped_with_warning(self, vocab):
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("music_playDrumForBeats", parent_id="b1", next_id="b3",
                        inputs={"BEATS": [1, [4, "0.25"]]}),
            "b3": block("looks_show", parent_id="b2"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert names(vocab, project.sprites[1][1][0].tokens) == [
            "BEGIN_SCRIPT", "event_whenflagclicked", "looks_show", "END_SCRIPT"]
        assert project.extension_warnings == 1

    def test_pen_blocks_stay_in_vocabulary(self, vocab):
        blocks = {
            "b1": block("event_whenflagclicked", next_id="b2", top_level=True),
            "b2": block("pen_penDown", parent_id="b1"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        assert "pen_penDown" in names(vocab, project.sprites[1][1][0].tokens)


def procedure_project():
    """One custom block defined and called twice, plus a parameter use."""
    definition = {
        "d1": block("procedures_definition", next_id="d4", top_level=True,
                    inputs={"custom_block": [1, "d2"]}),
        "d2": block("procedures_prototype", parent_id="d1", shadow=True,
                    inputs={"ARG": [1, "d3"]}),
        "d3": block("argument_reporter_string_number", parent_id="d2",
                    shadow=True, fields={"VALUE": ["n", None]}),
        "d4": block("looks_say", parent_id="d1",
                    inputs={"MESSAGE": [3, "d5", [10, ""]]}),
        "d5": block("argument_reporter_string_number", parent_id="d4",
                    fields={"VALUE": ["n", None]}),
        "m1": block("event_whenflagclicked", next_id="m2", top_level=True),
        "m2": block("procedures_call", parent_id="m1", next_id="m3",
                    inputs={"input0": [1, [10, "1"]]}),
        "m3": block("procedures_call", parent_id="m2"),
    }
    return make_sb3([stage(), sprite("S", definition)])


class TestProcedures:
    def test_definition_and_calls(self, vocab):
        project = tokenize(procedure_project(), vocab)
        streams = project.sprites[1][1]
        flat = [n for s in streams for n in names(vocab, s.tokens)]
        assert flat.count("PROCEDURE_DEF") == 1
        assert flat.count("procedures_call") == 2
        # Parameter reporter in the body generalizes to the variable token.
        assert names(vocab, streams[0].tokens) == [
            "BEGIN_SCRIPT", "PROCEDURE_DEF", "looks_say", "data_variable",
            "END_SCRIPT"]
        # Prototype and its parameter reporter are dropped declarations.
        assert project.dropped["prototype"] == 2

    def test_definition_script_is_reachable(self, vocab):
        project = tokenize(procedure_project(), vocab)
        assert all(s.reachable for s in project.sprites[1][1])

    def test_procedures_first_ordering(self, vocab):
        blocks = {
            "m1": block("event_whenflagclicked", top_level=True),
            "d1": block("procedures_definition", top_level=True,
                        inputs={"custom_block": [1, "d2"]}),
            "d2": block("procedures_prototype", parent_id="d1", shadow=True),
        }
        archive = make_sb3([stage(), sprite("S", blocks)])
        file_order = tokenize(archive, vocab)
        assert names(vocab, file_order.sprites[1][1][0].tokens)[1] == \
            "event_whenflagclicked"
        defs_first = tokenize(archive, vocab, procedures_first=True)
        assert names(vocab, defs_first.sprites[1][1][0].tokens)[1] == \
            "PROCEDURE_DEF"


class TestReachability:
    def test_loose_stack_is_unreachable(self, vocab):
        blocks = {
            "b1": block("looks_say", next_id="b2", top_level=True,
                        inputs={"MESSAGE": [1, [10, "hi"]]}),
            "b2": block("looks_hide", parent_id="b1"),
        }
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        stream = project.sprites[1][1][0]
        assert not stream.reachable
        assert names(vocab, stream.tokens) == [
            "BEGIN_SCRIPT", "looks_say", "looks_hide", "END_SCRIPT"]

    def test_hat_script_is_reachable(self, fig1b_sb3, vocab):
        project = tokenize(fig1b_sb3, vocab)
        assert project.sprites[1][1][0].reachable

    def test_loose_reporter_is_unreachable_var(self, vocab):
        blocks = {"v1": [12, "score", "score-id", 5, 5]}
        project = tokenize(make_sb3([stage(), sprite("S", blocks)]), vocab)
        stream = project.sprites[1][1][0]
        assert not stream.reachable
        assert names(vocab, stream.tokens) == [
            "BEGIN_SCRIPT", "data_variable", "END_SCRIPT"]


class TestProjectStructure:
    def test_multi_sprite_streams_and_locations(self, vocab):
        s1 = {
            "a1": block("event_whenflagclicked", next_id="a2", top_level=True),
            "a2": block("looks_show", parent_id="a1"),
            "a3": block("event_whenkeypressed", top_level=True,
                        fields={"KEY_OPTION": ["space", None]}),
        }
        s2 = {"c1": block("event_whenflagclicked", top_level=True)}
        project = tokenize(make_sb3([stage(), sprite("A", s1), sprite("B", s2)]),
                           vocab)
        assert [name for name, _ in project.sprites] == ["Stage", "A", "B"]
        assert [len(streams) for _, streams in project.sprites] == [0, 2, 1]
        stream = project.sprites[1][1][0]
        assert stream.locations[1].block_id == "a1"
        assert stream.locations[0].block_id is None
        assert stream.locations[1].sprite == "A"

    def test_block_count_counts_non_marker_tokens(self, vocab):
        project = tokenize(procedure_project(), vocab)
        # PROCEDURE_DEF + say + VAR + flag hat + 2 calls
        assert project.meta.block_count == 6

    def test_round_trip_node_accounting(self, vocab):
        project = tokenize(procedure_project(), vocab)
        ast = parse_project(procedure_project())
        total_nodes = sum(len(t.blocks) for t in ast.targets)
        emitted = sum(
            sum(1 for t in s.tokens if not vocab.is_marker(t))
            for _, streams in project.sprites for s in streams)
        assert emitted + sum(project.dropped.values()) == total_nodes

    def test_determinism(self, fig1b_sb3, vocab):
        first = tokenize(fig1b_sb3, vocab)
        second = tokenize(fig1b_sb3, vocab)
        assert [(n, [s.tokens for s in streams]) for n, streams in first.sprites] \
            == [(n, [s.tokens for s in streams]) for n, streams in second.sprites]

    def test_all_tokens_within_vocabulary(self, vocab):
        project = tokenize(procedure_project(), vocab)
        for _, streams in project.sprites:
            for stream in streams:
                assert all(0 <= t < vocab.size for t in stream.tokens)

    def test_sprite_markers_optional(self, fig1b_sb3, vocab):
        project = tokenize(fig1b_sb3, vocab)
        plain = project.sprite_token_ids(TokenizeOptions(), vocab)
        marked = project.sprite_token_ids(TokenizeOptions(sprite_markers=True),
                                          vocab)
        sprite_flat = dict(plain)["Sprite1"]
        assert vocab.begin_sprite not in sprite_flat
        wrapped = dict(marked)["Sprite1"]
        assert wrapped[0] == vocab.begin_sprite
        assert wrapped[-1] == vocab.end_sprite
        assert wrapped[1:-1] == sprite_flat


class TestFilterCorpus:
    def test_below_threshold_rejected(self):
        assert not filter_corpus(ProjectMeta("p", 9, False), min_blocks=10)

    def test_remix_rejected_when_excluded(self):
        assert not filter_corpus(ProjectMeta("p", 10, True),
                                 exclude_remixes=True)

    def test_boundary_inclusive(self):
        assert filter_corpus(ProjectMeta("p", 10, False), min_blocks=10)

    def test_remix_kept_when_allowed(self):
        assert filter_corpus(ProjectMeta("p", 10, True), exclude_remixes=False)


class TestEstimator:
    def test_transform_batches(self, fig1b_sb3, fig2a_sb3):
        tokenizer = ScratchTokenizer()
        projects = tokenizer.fit_transform([
            (fig1b_sb3, "fig1b", False), (fig2a_sb3, "fig2a", True)])
        assert [p.meta.project_id for p in projects] == ["fig1b", "fig2a"]
        assert projects[1].meta.is_remix

    def test_skip_mode_collects_failures(self, fig1b_sb3):
        tokenizer = ScratchTokenizer(on_error="skip")
        projects = tokenizer.transform([
            (fig1b_sb3, "good", False), (b"garbage", "bad", False)])
        assert len(projects) == 1
        assert tokenizer.skipped_[0][0] == "bad"

    def test_raise_mode(self):
        from scratchlm.errors import MalformedArchive
        with pytest.raises(MalformedArchive):
            ScratchTokenizer().transform([b"garbage"])

    def test_get_params_round_trip(self):
        tokenizer = ScratchTokenizer(sprite_markers=True)
        params = tokenizer.get_params()
        assert params["sprite_markers"] is True
        clone = ScratchTokenizer(**params)
        assert clone.get_params() == params
