"""Command-line entry point: corpus management, training, and evaluation."""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bugfinder, completion, metrics, ngram, stats, streams
from .errors import ScratchLMError
from .fetch import fetch_project
from .sb3 import parse_project
from .streams import ManifestEntry, SpriteRecord, read_manifest, read_streams, write_manifest
from .tokenizer import (ProjectMeta, TokenizeOptions, filter_corpus,
                        tokenize_project)
from .vocab import Vocabulary


def _load_vocab(args) -> Vocabulary:
    if getattr(args, "vocab", None):
        return Vocabulary.from_file(args.vocab)
    return Vocabulary.default()


def _tokenize_one(item):
    path, project_id, is_remix, options_kw, vocab_path = item
    vocab = Vocabulary.from_file(vocab_path) if vocab_path else Vocabulary.default()
    ast = parse_project(path)
    return tokenize_project(ast, TokenizeOptions(**options_kw), vocab,
                            project_id=project_id, is_remix=is_remix)


def cmd_tokenize(args) -> int:
    vocab = _load_vocab(args)
    if args.manifest:
        with open(args.manifest) as fh:
            entries = read_manifest(fh)
        items = [(e.path, e.project_id, e.is_remix) for e in entries]
    else:
        items = [(p, Path(p).stem, False) for p in args.projects]
    options_kw = {"sprite_markers": args.sprite_markers,
                  "procedures_first": args.procedures_first}
    work = [(path, pid, remix, options_kw, args.vocab)
            for path, pid, remix in items]

    projects = []
    failures = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for item, result in zip(work, pool.map(_tokenize_one_safe, work)):
                if isinstance(result, Exception):
                    failures.append((item[1], result))
                else:
                    projects.append(result)
    else:
        for item in work:
            try:
                projects.append(_tokenize_one(item))
            except ScratchLMError as exc:
                failures.append((item[1], exc))
    for project_id, exc in failures:
        if args.on_error == "raise":
            raise exc
        print(f"skipped {project_id}: {exc}", file=sys.stderr)

    options = TokenizeOptions(**options_kw)
    with open(args.out, "w", encoding="utf-8") as fh:
        written = streams.write_streams(projects, fh, options, vocab)
    warn = sum(p.extension_warnings for p in projects)
    print(f"wrote {written} sprite records for {len(projects)} projects to "
          f"{args.out}" + (f" ({warn} extension blocks dropped)" if warn else ""))
    return 0


def _tokenize_one_safe(item):
    try:
        return _tokenize_one(item)
    except ScratchLMError as exc:
        return exc


def _read_stream_files(paths, vocab) -> list[SpriteRecord]:
    records = []
    for path in paths:
        path = Path(path)
        files = sorted(path.glob("*.jsonl")) if path.is_dir() else [path]
        for file in files:
            with open(file, encoding="utf-8") as fh:
                _, recs = read_streams(fh, expected_vocab=vocab)
            records.extend(recs)
    return records


def cmd_train(args) -> int:
    vocab = _load_vocab(args)
    records = _read_stream_files(args.inputs, vocab)
    sequences = list(streams.script_sequences(records, vocab,
                                              reachable_only=args.reachable_only))
    model = ngram.KneserNeyModel(order=args.order, vocab_size=vocab.size)
    model.fit(sequences)
    model.save(args.out)
    print(f"trained order-{args.order} model on {len(sequences)} scripts "
          f"({model.counts_.total_tokens} tokens) -> {args.out}")
    return 0


def _parse_context(text: str, vocab: Vocabulary) -> list[int]:
    tokens = []
    for part in text.replace(",", " ").split():
        tokens.append(int(part) if part.isdigit() else vocab.id(part))
    return tokens


def cmd_complete(args) -> int:
    vocab = _load_vocab(args)
    model = ngram.load_model(args.model)
    context = _parse_context(args.context, vocab)
    suggestions = completion.complete(model, context, args.top, vocab)
    if args.json:
        print(json.dumps([[s.token.id, s.token.name, s.probability]
                          for s in suggestions]))
    else:
        for rank, s in enumerate(suggestions, start=1):
            print(f"{rank:>2}. {s.token.name:<32} {s.probability:.4%}")
    return 0


def cmd_score(args) -> int:
    vocab = _load_vocab(args)
    model = ngram.load_model(args.model)
    records = _read_stream_files(args.inputs, vocab)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for record in records:
            scripts = record.script_sequences(vocab,
                                              reachable_only=args.reachable_only)
            for index, script in enumerate(scripts):
                out.write(json.dumps({
                    "project": record.project, "sprite": record.sprite,
                    "script": index,
                    "logprob": model.sequence_logprob(script),
                    "tokens": script,
                }, separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_find_bugs(args) -> int:
    vocab = _load_vocab(args)
    model = ngram.load_model(args.model)
    records_fh = open(args.records, "w", encoding="utf-8") if args.records else None
    try:
        for path in args.programs:
            ast = parse_project(path)
            project = tokenize_project(ast, TokenizeOptions(), vocab,
                                       project_id=Path(path).stem)
            candidates = bugfinder.extract_sequences(project, args.length,
                                                     allow_short=args.allow_short)
            report = bugfinder.rank_suspicious(model, candidates, k=args.bottom,
                                               project_id=project.meta.project_id,
                                               length=args.length)
            print(bugfinder.report_to_text(report, vocab))
            if records_fh:
                bugfinder.write_report_records(report, records_fh)
    finally:
        if records_fh:
            records_fh.close()
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.replace(",", " ").split()]


def cmd_eval_completion(args) -> int:
    vocab = _load_vocab(args)
    train_records = _read_stream_files(args.train, vocab)
    eval_records = _read_stream_files(args.eval, vocab)
    overlap = {r.project for r in train_records} & {r.project for r in eval_records}
    if overlap:
        raise ScratchLMError(
            f"train/eval partitions overlap on {len(overlap)} project(s), "
            f"e.g. {sorted(overlap)[:3]}")

    train_seqs = list(streams.script_sequences(train_records, vocab,
                                               reachable_only=args.reachable_only))
    eval_seqs = list(streams.script_sequences(eval_records, vocab,
                                              reachable_only=args.reachable_only))
    orders = _parse_int_list(args.orders)
    x_values = _parse_int_list(args.top)

    counts = ngram.count_ngrams(train_seqs, max(orders), vocab.size)
    results = {}
    for order in orders:
        model = ngram.KneserNeyModel.from_counts(counts, order=order)
        results[order] = completion.batch_evaluate(model, eval_seqs, x_values,
                                                   vocab)
        if args.records:
            path = f"{args.records}.{order}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                completion.write_prediction_records(results[order].records, fh)

    grid = metrics.accuracy_grid(
        {order: result.records for order, result in results.items()}, x_values)
    header = "order" + "".join(f"{f'top {x}':>10}" for x in x_values)
    print(header)
    for order in orders:
        row = f"{order}-gram" + "".join(f"{grid[order][x]:>10.4f}" for x in x_values)
        print(row)
    sample = results[orders[0]]
    print(f"({len(sample.records)} prediction sites; "
          f"{sample.end_positions} end-of-script and "
          f"{sample.definition_positions} procedure-definition positions excluded)")

    if args.by:
        order = args.at_order if args.at_order is not None else max(orders)
        rows = metrics.accuracy_by_group(results[order].records, args.by,
                                         x=args.at_top, vocab=vocab)
        print(f"\n{args.by} breakdown (n={order}, x={args.at_top}):")
        print(f"{'group':<16}{'occurrences':>12}{'accuracy':>10}")
        for row in rows:
            print(f"{row.group:<16}{row.occurrence_share:>12.2%}"
                  f"{row.accuracy:>10.2%}")
    return 0


def _load_judgments(path) -> dict[str, list[dict]]:
    judgments = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            judgments[str(doc["project"])] = doc["bugs"]
    return judgments


def _selection_metrics(selection, bugs):
    """precision@k and bugs-found over a window selection."""
    buggy_windows = 0
    found: set[int] = set()
    for seq in selection:
        blocks = {b for b in seq.block_ids if b is not None}
        hit = False
        for index, bug in enumerate(bugs):
            if blocks & set(bug["blocks"]):
                found.add(index)
                hit = True
        if hit:
            buggy_windows += 1
    precision = 100.0 * buggy_windows / len(selection) if selection else 0.0
    return precision, found


def cmd_eval_bugs(args) -> int:
    vocab = _load_vocab(args)
    references = []
    for path in args.references:
        ast = parse_project(path)
        references.append(tokenize_project(ast, TokenizeOptions(), vocab,
                                           project_id=Path(path).stem))
    model = bugfinder.train_reference_model(references, order=args.order,
                                            vocab=vocab)
    judgments = _load_judgments(args.judgments) if args.judgments else {}
    rng = random.Random(args.seed)

    rows: list[metrics.BugEvalRecord] = []
    out = open(args.records, "w", encoding="utf-8") if args.records else None
    try:
        for path in args.programs:
            ast = parse_project(path)
            project = tokenize_project(ast, TokenizeOptions(), vocab,
                                       project_id=Path(path).stem)
            candidates = bugfinder.extract_sequences(project, args.length,
                                                     allow_short=args.allow_short)
            report = bugfinder.rank_suspicious(model, candidates, k=args.bottom,
                                               project_id=project.meta.project_id,
                                               length=args.length)
            sample_size = min(args.bottom, len(candidates))
            random_pick = rng.sample(candidates, sample_size) if sample_size else []
            bottom_locs = {s.location for s in report.sequences}
            overlap = (sum(1 for s in random_pick if s.location in bottom_locs)
                       / sample_size if sample_size else 0.0)

            bugs = judgments.get(project.meta.project_id, [])
            precision_bottom, found_bottom = _selection_metrics(report.sequences, bugs)
            precision_random, found_random = _selection_metrics(random_pick, bugs)
            total = len(bugs)
            row = metrics.BugEvalRecord(
                project_id=project.meta.project_id,
                precision_bottom=precision_bottom,
                precision_random=precision_random,
                bugs_found_bottom=(metrics.percent_bugs_found(len(found_bottom), total)
                                   if total else 0.0),
                bugs_found_random=(metrics.percent_bugs_found(len(found_random), total)
                                   if total else 0.0),
                total_bugs=total,
                overlap=overlap,
            )
            rows.append(row)
            if out:
                out.write(json.dumps(row.__dict__, separators=(",", ":")) + "\n")
    finally:
        if out:
            out.close()

    print(f"{'program':<12}{'p@k bot':>9}{'p@k rnd':>9}{'%bugs bot':>11}"
          f"{'%bugs rnd':>11}{'bugs':>6}{'overlap':>9}")
    for row in rows:
        print(f"{row.project_id:<12}{row.precision_bottom:>9.1f}"
              f"{row.precision_random:>9.1f}{row.bugs_found_bottom:>11.1f}"
              f"{row.bugs_found_random:>11.1f}{row.total_bugs:>6d}"
              f"{row.overlap:>9.2%}")
    if len(rows) >= 2 and any(r.total_bugs for r in rows):
        for label, bottom, rand in (
            ("precision@k", [r.precision_bottom for r in rows],
             [r.precision_random for r in rows]),
            ("% bugs found", [r.bugs_found_bottom for r in rows],
             [r.bugs_found_random for r in rows]),
        ):
            _, p_two = stats.mann_whitney_u(bottom, rand)
            _, p_greater = stats.mann_whitney_u(bottom, rand,
                                                alternative="greater")
            a_hat = stats.vargha_delaney_a(bottom, rand)
            print(f"{label}: p(two-sided)={p_two:.4f} p(greater)={p_greater:.4f} "
                  f"A={a_hat:.3f}")
    return 0


def cmd_fetch(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = list(args.ids)
    if args.ids_file:
        with open(args.ids_file) as fh:
            ids.extend(line.strip() for line in fh if line.strip())
    entries = []
    for project_id in ids:
        target = out_dir / f"{project_id}.sb3"
        if target.exists() and not args.force:
            print(f"{project_id}: already fetched")
            continue
        fetched = fetch_project(project_id, api_base=args.api_base,
                                project_host=args.project_host)
        target.write_bytes(fetched.archive)
        entries.append(ManifestEntry(project_id=fetched.project_id,
                                     path=str(target),
                                     is_remix=fetched.is_remix))
        print(f"{project_id}: saved {target} (remix={fetched.is_remix})")
    if args.manifest and entries:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            write_manifest(entries, fh)
    return 0


def cmd_corpus_filter(args) -> int:
    vocab = _load_vocab(args)
    with open(args.manifest) as fh:
        entries = read_manifest(fh)
    kept = []
    for entry in entries:
        blocks = entry.blocks
        if blocks is None:
            ast = parse_project(entry.path)
            project = tokenize_project(ast, TokenizeOptions(), vocab,
                                       project_id=entry.project_id,
                                       is_remix=entry.is_remix)
            blocks = project.meta.block_count
        meta = ProjectMeta(project_id=entry.project_id, block_count=blocks,
                           is_remix=entry.is_remix)
        if filter_corpus(meta, min_blocks=args.min_blocks,
                         exclude_remixes=not args.keep_remixes):
            kept.append(ManifestEntry(entry.project_id, entry.path,
                                      entry.is_remix, entry.split, blocks))
    with open(args.out, "w", encoding="utf-8") as fh:
        write_manifest(kept, fh)
    print(f"kept {len(kept)} of {len(entries)} projects -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scratchlm",
        description="Tokenize Scratch programs, train n-gram models, complete "
                    "code, and rank suspicious sequences.")
    parser.add_argument("--vocab", help="path to an alternative vocabulary table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="sb3 archives -> token-stream file")
    p.add_argument("projects", nargs="*", help="sb3 paths (or use --manifest)")
    p.add_argument("--manifest", help="corpus manifest with ids and remix flags")
    p.add_argument("--out", required=True)
    p.add_argument("--sprite-markers", action="store_true")
    p.add_argument("--procedures-first", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--on-error", choices=("skip", "raise"), default="skip")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("train", help="token streams -> smoothed n-gram model")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reachable-only", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("complete", help="suggest the next block for a context")
    p.add_argument("--model", required=True)
    p.add_argument("--context", required=True,
                   help="token names or ids, space/comma separated")
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("score", help="per-script log-probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out")
    p.add_argument("--reachable-only", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("find-bugs", help="bottom-k least probable windows")
    p.add_argument("programs", nargs="+", help="sb3 paths")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, default=4)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--allow-short", action="store_true")
    p.add_argument("--records", help="also write line-delimited records here")
    p.set_defaults(func=cmd_find_bugs)

    p = sub.add_parser("eval-completion", help="top-x accuracy grid")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--eval", nargs="+", required=True)
    p.add_argument("--orders", default="1,2,3,4")
    p.add_argument("--top", default="1,2,3,5,10")
    p.add_argument("--reachable-only", action="store_true")
    p.add_argument("--records", help="prefix for per-order record files")
    p.add_argument("--by", choices=metrics.GROUPINGS)
    p.add_argument("--at-order", type=int)
    p.add_argument("--at-top", type=int, default=3)
    p.set_defaults(func=cmd_eval_completion)

    p = sub.add_parser("eval-bugs", help="precision@k and %%bugs for bottom vs random")
    p.add_argument("--references", nargs="+", required=True, help="sb3 paths")
    p.add_argument("--programs", nargs="+", required=True, help="sb3 paths")
    p.add_argument("--judgments", help="line-delimited bug judgments")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--length", type=int, default=4)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--allow-short", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records")
    p.set_defaults(func=cmd_eval_bugs)

    p = sub.add_parser("fetch", help="download projects over the REST API")
    p.add_argument("ids", nargs="*")
    p.add_argument("--ids-file")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.add_argument("--api-base")
    p.add_argument("--project-host")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("corpus-filter", help="apply the corpus admission rule")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-blocks", type=int, default=10)
    p.add_argument("--keep-remixes", action="store_true")
    p.set_defaults(func=cmd_corpus_filter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScratchLMError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
