"""Command-line entry point orchestrating the pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
Every artifact-writing subcommand drops a manifest next to its outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import timezone
from pathlib import Path

from . import __version__, coordination, evaluation, features, labeling, topics
from .corpus import (Corpus, diff_deleted, key_str, merge, parse_export,
                     parse_stream, parse_timestamp)
from .embeddings import build_store_from_texts, load_store, save_store
from .errors import ConfigError, DataError, FormatError, ParseError, PropdetectError
from .models import (GBTParams, MLPParams, build_pair_vector, load_model,
                     save_model, train_gbt, train_mlp)
from .runconfig import RunManifest, load_config
from .synthgen import GenConfig, generate

PROPAGANDA = labeling.PROPAGANDA
USER = labeling.USER


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _manifest(args, subcommand: str, inputs: list, outputs: list,
              corpus_digest: str | None = None) -> None:
    out = [str(o) for o in outputs]
    manifest = RunManifest(
        subcommand=subcommand,
        config_path=str(args.config) if getattr(args, "config", None) else None,
        inputs=[str(i) for i in inputs],
        outputs=out,
        seed=getattr(args, "seed", None),
        corpus_hash=corpus_digest,
        tool_version=__version__,
    )
    first = Path(out[0])
    target = first.parent / f"{subcommand.replace(' ', '-')}.manifest.json"
    manifest.write(target)


def _load_corpus(path) -> Corpus:
    if not Path(path).exists():
        raise DataError(f"corpus file not found: {path}")
    return Corpus.load_jsonl(path)


def _load_labels(path) -> labeling.LabelSet:
    if not Path(path).exists():
        raise DataError(f"label file not found: {path}")
    return labeling.LabelSet.load_jsonl(path)


def _cohort(corpus: Corpus, labels: labeling.LabelSet, which: str) -> set[str]:
    if which == "all":
        return {m.account_id for m in corpus.iter_messages() if m.account_id}
    return set(labels.accounts(which))


def _iter_parsers(parser):
    yield parser
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                yield from _iter_parsers(sub)


def _apply_config(parser, argv, args):
    """Install config values as parser defaults and reparse: explicit flags
    win over the config, which wins over built-in defaults."""
    if not getattr(args, "config", None):
        return args
    values = {k.replace("-", "_"): v for k, v in load_config(args.config).items()}
    for sub in _iter_parsers(parser):
        known = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in values.items() if k in known})
    return parser.parse_args(argv)


# --------------------------------------------------------------------- ingest

def cmd_ingest(args) -> int:
    batches = []
    malformed_total = 0
    for path in args.export or []:
        if not Path(path).exists():
            raise DataError(f"export file not found: {path}")
        result = parse_export(path, channel_id=args.channel)
        batches.append(result.messages)
        malformed_total += result.malformed_count
    for path in args.stream or []:
        if not Path(path).exists():
            raise DataError(f"stream file not found: {path}")
        result = parse_stream(path)
        batches.append(result.messages)
        malformed_total += result.malformed_count
    if not batches:
        raise UsageError("ingest needs at least one --export or --stream file")
    corpus = merge(batches)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "corpus.jsonl"
    corpus.dump_jsonl(out)
    digest = evaluation.corpus_hash(corpus)
    _manifest(args, "ingest", (args.export or []) + (args.stream or []), [out], digest)
    print(f"ingested {len(corpus)} messages ({malformed_total} malformed records "
          f"reported) -> {out}")
    return 0


def cmd_diff(args) -> int:
    corpus = _load_corpus(args.corpus)
    counts = diff_deleted(corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_out = out_dir / "corpus.jsonl"
    corpus.dump_jsonl(corpus_out)
    counts_out = out_dir / "deletions.json"
    with open(counts_out, "w", encoding="utf-8") as fh:
        json.dump(counts, fh, sort_keys=True, indent=2)
    _manifest(args, "diff", [args.corpus], [corpus_out, counts_out],
              evaluation.corpus_hash(corpus))
    print(f"marked deletions per channel: {counts}")
    return 0


# -------------------------------------------------------------------- labels

def cmd_label_augment(args) -> int:
    corpus = _load_corpus(args.corpus)
    seeds = _load_labels(args.seeds)
    exclusions = (labeling.load_exclusions(args.exclusions)
                  if args.exclusions else frozenset())
    result = labeling.augment_labels(corpus, seeds, min_len=args.min_len,
                                     exclusions=exclusions)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels_out = out_dir / "labels.jsonl"
    result.labels.dump_jsonl(labels_out)
    review_out = out_dir / "review.jsonl"
    with open(review_out, "w", encoding="utf-8") as fh:
        for account, text in result.review:
            fh.write(json.dumps({"account_id": account, "matched_text": text},
                                ensure_ascii=False, sort_keys=True) + "\n")
    _manifest(args, "label augment", [args.corpus, args.seeds],
              [labels_out, review_out], evaluation.corpus_hash(corpus))
    print(f"augmented in {result.iterations} iterations, additions per "
          f"iteration {result.iteration_counts}; labels -> {labels_out}")
    return 0


# ------------------------------------------------------------------- analyze

def cmd_analyze_graph(args) -> int:
    corpus = _load_corpus(args.corpus)
    labels = _load_labels(args.labels)
    cohort = _cohort(corpus, labels, args.cohort)
    graph = coordination.build_graph(corpus, cohort, min_len=args.min_len)
    partition = coordination.louvain(graph, seed=args.seed) if graph.edges else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    edges_out = out_dir / f"graph-{args.cohort}.tsv"
    graph.dump_edges(edges_out)
    outputs = [edges_out]
    if partition is not None:
        part_out = out_dir / f"partition-{args.cohort}.jsonl"
        partition.dump_jsonl(part_out)
        outputs.append(part_out)
    comps = graph.components()
    summary = {
        "cohort": args.cohort,
        "nodes": len(graph),
        "edges": len(graph.edges),
        "largest_component": len(comps[0]) if comps else 0,
        "modularity": partition.modularity if partition else None,
        "communities": len(set(partition.communities.values())) if partition else 0,
    }
    summary_out = out_dir / f"graph-{args.cohort}.json"
    with open(summary_out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    outputs.append(summary_out)
    if args.plots:
        outputs.append(_plot_degrees(graph, out_dir / f"degrees-{args.cohort}.svg"))
    _manifest(args, "analyze graph", [args.corpus, args.labels], outputs,
              evaluation.corpus_hash(corpus))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_analyze_stats(args) -> int:
    corpus = _load_corpus(args.corpus)
    labels = _load_labels(args.labels)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    summary = {}
    for which in (PROPAGANDA, USER):
        cohort = _cohort(corpus, labels, which)
        if not cohort:
            continue
        stats = coordination.account_stats(corpus, cohort)
        csv_out = out_dir / f"accounts-{which}.csv"
        with open(csv_out, "w", encoding="utf-8") as fh:
            fh.write("account_id,lifespan_hours,message_count,channel_count,"
                     "mean_message_length\n")
            for s in stats:
                fh.write(f"{s.account_id},{s.lifespan_hours:.4f},{s.message_count},"
                         f"{s.channel_count},{s.mean_message_length:.2f}\n")
        outputs.append(csv_out)
        eff = coordination.effectiveness(corpus, cohort)
        summary[which] = {"accounts": len(stats),
                          "effectiveness": round(eff.mean, 4),
                          "messages": eff.message_count}
    summary_out = out_dir / "stats.json"
    with open(summary_out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    outputs.append(summary_out)
    if args.plots:
        outputs.append(_plot_lifespans(corpus, labels, out_dir / "lifespans.svg"))
    _manifest(args, "analyze stats", [args.corpus, args.labels], outputs,
              evaluation.corpus_hash(corpus))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_analyze_wordshift(args) -> int:
    corpus = _load_corpus(args.corpus)
    labels = _load_labels(args.labels)
    texts = {PROPAGANDA: [], USER: []}
    for msg in corpus.iter_messages():
        label = labels.label_of(msg.account_id) if msg.account_id else None
        if label in texts and msg.text:
            texts[label].append(msg.text)
    a_side, b_side = coordination.wordshift(texts[PROPAGANDA], texts[USER],
                                            top_k=args.top_k)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "wordshift.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("side,stem,score,freq_propaganda,freq_user\n")
        for side, entries in (("propaganda", a_side), ("user", b_side)):
            for e in entries:
                fh.write(f"{side},{e.stem},{e.score:.6f},{e.freq_a:.6f},{e.freq_b:.6f}\n")
    _manifest(args, "analyze wordshift", [args.corpus, args.labels], [out],
              evaluation.corpus_hash(corpus))
    print(f"top propaganda stems: {[e.stem for e in a_side[:5]]}")
    print(f"top user stems:       {[e.stem for e in b_side[:5]]}")
    return 0


# -------------------------------------------------------------------- topics

def cmd_topics_cluster(args) -> int:
    corpus = _load_corpus(args.corpus)
    if args.embeddings:
        if not Path(args.embeddings).exists():
            raise DataError(f"embedding store not found: {args.embeddings}")
        store = load_store(args.embeddings)
    else:
        store = build_store_from_texts(
            ((key_str(*m.key), m.text) for m in corpus.iter_messages()),
            dimension=args.hash_dim)
    keys, vectors = [], []
    for msg in corpus.iter_messages():
        vec = store.get(key_str(*msg.key))
        if vec is not None:
            keys.append(msg.key)
            vectors.append(vec)
    import numpy as np
    assignment = topics.cluster_messages(keys, np.vstack(vectors), eps=args.eps,
                                         min_pts=args.min_pts, metric=args.metric)
    if args.rules:
        assignment = topics.keyword_augment(assignment, corpus,
                                            topics.load_rules(args.rules))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "topics.jsonl"
    assignment.dump_jsonl(out)
    _manifest(args, "topics cluster", [args.corpus], [out],
              evaluation.corpus_hash(corpus))
    print(f"assigned {len(assignment)} of {len(keys)} messages to "
          f"{len(assignment.topics())} topics -> {out}")
    return 0


def cmd_topics_timeline(args) -> int:
    corpus = _load_corpus(args.corpus)
    assignment = topics.TopicAssignment.load_jsonl(args.assignment)
    timeline = topics.topic_timeline(corpus, assignment, bin_days=args.bin_days)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    timeline_out = out_dir / "timeline.csv"
    topics.dump_timeline_csv(timeline, timeline_out)
    longevity = topics.topic_longevity(timeline)
    longevity_out = out_dir / "longevity.json"
    with open(longevity_out, "w", encoding="utf-8") as fh:
        json.dump(longevity, fh, sort_keys=True, indent=2)
    outputs = [timeline_out, longevity_out]
    if args.plots:
        outputs.append(_plot_timeline(timeline, out_dir / "timeline.svg"))
    _manifest(args, "topics timeline", [args.corpus, args.assignment], outputs,
              evaluation.corpus_hash(corpus))
    print(f"timeline for {len(timeline)} topics -> {timeline_out}")
    return 0


# ------------------------------------------------------------------ features

def cmd_features(args) -> int:
    corpus = _load_corpus(args.corpus)
    pairs = [(m, corpus.trigger_of(m.key)) for m in corpus.iter_messages()]
    matrix, schema = features.batch_extract(pairs, time_mode=args.time_mode)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "features.csv"
    features.dump_features_csv(matrix, out)
    _manifest(args, "features", [args.corpus], [out], evaluation.corpus_hash(corpus))
    print(f"wrote {matrix.shape[0]} rows x {matrix.shape[1]} features "
          f"(schema {schema['hash']}) -> {out}")
    return 0


# --------------------------------------------------------------------- train

def _train_common(args):
    corpus = _load_corpus(args.corpus)
    labels = _load_labels(args.labels)
    cutoff = parse_timestamp(args.cutoff)
    train_keys, _ = evaluation.temporal_split(corpus, cutoff)
    keys, truth = [], []
    for key in train_keys:
        msg = corpus.messages[key]
        label = labels.label_of(msg.account_id) if msg.account_id else None
        if label is not None and corpus.trigger_of(key) is not None:
            keys.append(key)
            truth.append(label)
    idx = evaluation.balance(keys, truth, seed=args.seed)
    keys = [keys[i] for i in idx]
    import numpy as np
    y = np.array([1.0 if truth[i] == PROPAGANDA else 0.0 for i in idx])
    if len(keys) == 0:
        raise DataError("no labeled reply messages before the cutoff")
    return corpus, keys, y


def cmd_train_gbt(args) -> int:
    corpus, keys, y = _train_common(args)
    pairs = [(corpus.messages[k], corpus.trigger_of(k)) for k in keys]
    X, schema = features.batch_extract(pairs)
    params = GBTParams(trees=args.trees, depth=args.depth, lr=args.lr,
                       min_child=args.min_child, seed=args.seed)
    model = train_gbt(X, y, params, feature_schema_hash=schema["hash"])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _manifest(args, "train gbt", [args.corpus, args.labels], [out],
              evaluation.corpus_hash(corpus))
    print(f"gbt trained on {len(keys)} rows, final log-loss "
          f"{model.train_loss[-1]:.4f} -> {out}")
    return 0


def _embedding_lookup(args, corpus, keys, trigger_side: bool):
    import numpy as np
    if args.embeddings:
        if not Path(args.embeddings).exists():
            raise DataError(f"embedding store not found: {args.embeddings}; "
                            "pass --embeddings PATH or --hash-dim N")
        store = load_store(args.embeddings)
        dim = store.dim

        def vec_of(msg):
            v = store.get(key_str(*msg.key))
            if v is None:
                raise DataError(f"no embedding for message {key_str(*msg.key)} "
                                f"in {args.embeddings}")
            return v
    elif args.hash_dim:
        from .embeddings import hash_embed
        dim = args.hash_dim

        def vec_of(msg):
            return hash_embed(msg.text, dim)
    else:
        raise DataError("no embedding store given: pass --embeddings PATH "
                        "(or --hash-dim N for the built-in test embedder)")
    rows = []
    for key in keys:
        msg = corpus.messages[key]
        if trigger_side == "pair":
            trig = corpus.trigger_of(key)
            rows.append(build_pair_vector(
                vec_of(trig) if trig is not None else None, vec_of(msg)))
        elif trigger_side:
            trig = corpus.trigger_of(key)
            rows.append(vec_of(trig) if trig is not None
                        else np.zeros(dim, dtype=np.float32))
        else:
            rows.append(vec_of(msg))
    return np.vstack(rows), dim


def cmd_train_mlp(args) -> int:
    corpus, keys, y = _train_common(args)
    side = args.input == "trigger"
    X, dim = _embedding_lookup(args, corpus, keys, side)
    params = MLPParams(epochs=args.epochs, batch=args.batch, lr=args.lr,
                       seed=args.seed)
    model = train_mlp(X, y, h1=args.h1, h2=args.h2, params=params,
                      input_kind=f"{args.input}-emb", embedding_dim=dim)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _manifest(args, "train mlp", [args.corpus, args.labels], [out],
              evaluation.corpus_hash(corpus))
    print(f"mlp[{args.input}] trained on {len(keys)} rows, final loss "
          f"{model.train_loss[-1]:.4f} -> {out}")
    return 0


def cmd_train_pair(args) -> int:
    corpus, keys, y = _train_common(args)
    X, dim = _embedding_lookup(args, corpus, keys, "pair")
    params = MLPParams(epochs=args.epochs, batch=args.batch, lr=args.lr,
                       seed=args.seed)
    model = train_mlp(X, y, h1=args.h1, h2=args.h2, params=params,
                      input_kind="pair-emb", embedding_dim=dim)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _manifest(args, "train pair", [args.corpus, args.labels], [out],
              evaluation.corpus_hash(corpus))
    print(f"pair model trained on {len(keys)} rows, final loss "
          f"{model.train_loss[-1]:.4f} -> {out}")
    return 0


# ---------------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    corpus = _load_corpus(args.corpus)
    labels = _load_labels(args.labels)
    assignment = (topics.TopicAssignment.load_jsonl(args.topics)
                  if args.topics else topics.TopicAssignment())
    cutoff = parse_timestamp(args.cutoff)
    cfg = evaluation.SuiteConfig(dim=args.dim, seed=args.seed,
                                 threshold=args.threshold)
    suite = evaluation.run_detector_suite(corpus, labels, assignment, cutoff, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_out = out_dir / "report.json"
    with open(json_out, "w", encoding="utf-8") as fh:
        fh.write(suite.report.to_json())
    md_out = out_dir / "report.md"
    with open(md_out, "w", encoding="utf-8") as fh:
        fh.write(suite.report.to_markdown())
    _manifest(args, "eval", [args.corpus, args.labels], [json_out, md_out],
              suite.report.corpus_digest)
    for name, ev in sorted(suite.report.models.items()):
        nta = f"{ev.new_topic_accuracy:.3f}" if ev.new_topic_accuracy is not None else "-"
        print(f"{name:12s} accuracy={ev.overall_accuracy:.3f} "
              f"new-topics={nta} fpr={ev.false_positive_rate:.3f}")
    return 0


# --------------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    from .modbot import BotConfig, ModBot, latency_bench
    if not Path(args.pair_model).exists():
        raise DataError(f"model file not found: {args.pair_model}")
    config = BotConfig(pair_model_path=args.pair_model,
                       embedding_source=f"hash:{args.dim}")
    bot = ModBot(config)
    res = generate(GenConfig(seed=args.seed))
    pairs = []
    for msg in res.corpus.iter_messages():
        trig = res.corpus.trigger_of(msg.key)
        if trig is not None:
            pairs.append((msg, trig))
        if len(pairs) >= args.pairs:
            break
    mean_s, std_s, _ = latency_bench(bot, pairs)
    print(json.dumps({"pairs": len(pairs), "mean_seconds": mean_s,
                      "std_seconds": std_s}, sort_keys=True))
    return 0


# --------------------------------------------------------------------- serve

def cmd_serve(args) -> int:
    from .modbot import BotConfig, serve
    config = BotConfig(
        pair_model_path=args.pair_model,
        reply_model_path=args.reply_model,
        embedding_source=args.embed,
        threshold=args.threshold,
        action=args.action,
        allowlist=set(args.allow) if args.allow else None,
        api_base_url=args.api_url,
        api_token=args.token,
        on_missing_embedding=args.on_missing,
    )
    if args.input == "-":
        events = (line for line in sys.stdin if line.strip())
    else:
        if not Path(args.input).exists():
            raise DataError(f"event stream not found: {args.input}")
        events = (line for line in open(args.input, encoding="utf-8")
                  if line.strip())
    scored, actions = serve(config, events)
    writer = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for outcome in scored:
            record = {
                "channel_id": outcome.message.channel_id,
                "message_id": outcome.message.message_id,
                "verdict": None if outcome.verdict is None else {
                    "score": outcome.verdict.score,
                    "label": outcome.verdict.label,
                    "model": outcome.verdict.model_id,
                },
                "latency_seconds": round(outcome.latency_seconds, 6),
                "error": outcome.error,
            }
            writer.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    finally:
        if writer is not sys.stdout:
            writer.close()
    acted = sum(1 for a in actions if a.ok)
    print(f"scored {len(scored)} events, {acted} successful actions",
          file=sys.stderr)
    return 0


# --------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    cfg = GenConfig(seed=args.seed)
    if args.propaganda is not None:
        cfg.propaganda = args.propaganda
    if args.users is not None:
        cfg.users = args.users
    if args.channels is not None:
        cfg.channels = args.channels
    result = generate(cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_out = out_dir / "corpus.jsonl"
    result.corpus.dump_jsonl(corpus_out)
    labels_out = out_dir / "labels.jsonl"
    result.labels.dump_jsonl(labels_out)
    topics_out = out_dir / "topics.jsonl"
    result.topics.dump_jsonl(topics_out)
    stats_out = out_dir / "stats.json"
    s = result.stats
    with open(stats_out, "w", encoding="utf-8") as fh:
        json.dump({
            "cutoff": s.cutoff.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "prop_messages": s.prop_messages,
            "user_messages": s.user_messages,
            "effectiveness_prop": s.effectiveness_prop,
            "effectiveness_user": s.effectiveness_user,
            "deletion_ratio_prop": s.deletion_ratio_prop,
            "deletion_ratio_user": s.deletion_ratio_user,
            "prop_lifespan_median_hours": s.prop_lifespan_median_hours,
            "user_lifespan_median_hours": s.user_lifespan_median_hours,
            "prop_channels_mean": s.prop_channels_mean,
            "prop_text_reuse": s.prop_text_reuse,
            "short_topic": s.short_topic,
            "unseen_topics": sorted(s.unseen_topics),
        }, fh, sort_keys=True, indent=2)
    seeds_out = out_dir / "seed-labels.jsonl"
    seed_set = labeling.LabelSet()
    if s.prop_accounts:
        seed_set.add(s.prop_accounts[0], PROPAGANDA, labeling.PROVENANCE_SEED)
    seed_set.dump_jsonl(seeds_out)
    outputs = [corpus_out, labels_out, topics_out, stats_out, seeds_out]
    _manifest(args, "synth", [], outputs, evaluation.corpus_hash(result.corpus))
    print(f"synthetic corpus: {len(result.corpus)} messages, "
          f"{len(s.prop_accounts)} propaganda accounts -> {out_dir}")
    return 0


# --------------------------------------------------------------------- plots

def _plot_degrees(graph, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    degrees = sorted((graph.degree(n) for n in graph.nodes), reverse=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(degrees)
    ax.set_xlabel("rank")
    ax.set_ylabel("weighted degree")
    ax.set_title("coordination graph degree distribution")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def _plot_lifespans(corpus, labels, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from .corpus import build_accounts
    spans = {PROPAGANDA: [], USER: []}
    for acct in build_accounts(corpus):
        label = labels.label_of(acct.account_id)
        if label in spans:
            spans[label].append(acct.lifespan_hours)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([spans[PROPAGANDA], spans[USER]], bins=24,
            label=["propaganda", "user"])
    ax.set_xlabel("lifespan (hours)")
    ax.set_ylabel("accounts")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def _plot_timeline(timeline, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(8, 4))
    for topic in sorted(timeline):
        days = sorted(timeline[topic])
        ax.plot(days, [timeline[topic][d] for d in days], label=topic)
    ax.set_xlabel("day")
    ax.set_ylabel("messages")
    ax.legend(fontsize=6)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


# -------------------------------------------------------------------- parser

def build_parser() -> _Parser:
    parser = _Parser(prog="propdetect",
                     description="Coordinated-propaganda detection toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", default=None, help="flat TOML config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-o", "--out", default="out")

    p = sub.add_parser("ingest", help="parse export/stream files into a corpus")
    common(p)
    p.add_argument("--export", action="append", help="historical export JSON")
    p.add_argument("--stream", action="append", help="realtime JSONL stream")
    p.add_argument("--channel", default=None, help="override channel id for exports")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("diff", help="derive deletion ground truth")
    common(p)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("label", help="labeling operations")
    label_sub = p.add_subparsers(dest="label_command")
    pa = label_sub.add_parser("augment", help="propagate seed labels via reuse")
    common(pa)
    pa.add_argument("--corpus", required=True)
    pa.add_argument("--seeds", required=True)
    pa.add_argument("--exclusions", default=None)
    pa.add_argument("--min-len", type=int, default=30)
    pa.set_defaults(func=cmd_label_augment)

    p = sub.add_parser("analyze", help="coordination analyses")
    an_sub = p.add_subparsers(dest="analyze_command")
    pg = an_sub.add_parser("graph", help="shared-text coordination graph")
    common(pg)
    pg.add_argument("--corpus", required=True)
    pg.add_argument("--labels", required=True)
    pg.add_argument("--cohort", choices=[PROPAGANDA, USER, "all"],
                    default=PROPAGANDA)
    pg.add_argument("--min-len", type=int, default=10)
    pg.add_argument("--plots", action="store_true")
    pg.set_defaults(func=cmd_analyze_graph)
    ps = an_sub.add_parser("stats", help="per-account statistics")
    common(ps)
    ps.add_argument("--corpus", required=True)
    ps.add_argument("--labels", required=True)
    ps.add_argument("--plots", action="store_true")
    ps.set_defaults(func=cmd_analyze_stats)
    pw = an_sub.add_parser("wordshift", help="stem frequency shifts")
    common(pw)
    pw.add_argument("--corpus", required=True)
    pw.add_argument("--labels", required=True)
    pw.add_argument("--top-k", type=int, default=20)
    pw.set_defaults(func=cmd_analyze_wordshift)

    p = sub.add_parser("topics", help="topic clustering and timelines")
    tp_sub = p.add_subparsers(dest="topics_command")
    pc = tp_sub.add_parser("cluster", help="density-cluster message embeddings")
    common(pc)
    pc.add_argument("--corpus", required=True)
    pc.add_argument("--embeddings", default=None)
    pc.add_argument("--hash-dim", type=int, default=128)
    pc.add_argument("--eps", type=float, default=0.35)
    pc.add_argument("--min-pts", type=int, default=5)
    pc.add_argument("--metric", choices=["euclidean", "cosine-distance"],
                    default="cosine-distance")
    pc.add_argument("--rules", default=None, help="keyword rules JSON")
    pc.set_defaults(func=cmd_topics_cluster)
    pt = tp_sub.add_parser("timeline", help="per-topic daily counts")
    common(pt)
    pt.add_argument("--corpus", required=True)
    pt.add_argument("--assignment", required=True)
    pt.add_argument("--bin-days", type=int, default=1)
    pt.add_argument("--plots", action="store_true")
    pt.set_defaults(func=cmd_topics_timeline)

    p = sub.add_parser("features", help="extract handcrafted feature matrix")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--time-mode", choices=["midnight", "epoch"], default="midnight")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train detectors")
    tr_sub = p.add_subparsers(dest="train_command")

    def train_common_args(pp):
        pp.add_argument("--corpus", required=True)
        pp.add_argument("--labels", required=True)
        pp.add_argument("--cutoff", required=True, help="ISO-8601 split instant")

    pg = tr_sub.add_parser("gbt", help="boosted trees on handcrafted features")
    common(pg)
    train_common_args(pg)
    pg.add_argument("--trees", type=int, default=200)
    pg.add_argument("--depth", type=int, default=4)
    pg.add_argument("--lr", type=float, default=0.1)
    pg.add_argument("--min-child", type=int, default=5)
    pg.set_defaults(func=cmd_train_gbt, out="gbt-model.json")
    pm = tr_sub.add_parser("mlp", help="mlp on reply or trigger embeddings")
    common(pm)
    train_common_args(pm)
    pm.add_argument("--input", choices=["reply", "trigger"], default="reply")
    pm.add_argument("--embeddings", default=None)
    pm.add_argument("--hash-dim", type=int, default=None)
    pm.add_argument("--epochs", type=int, default=30)
    pm.add_argument("--batch", type=int, default=64)
    pm.add_argument("--lr", type=float, default=1e-3)
    pm.add_argument("--h1", type=int, default=256)
    pm.add_argument("--h2", type=int, default=64)
    pm.set_defaults(func=cmd_train_mlp, out="mlp-model.json")
    pp = tr_sub.add_parser("pair", help="mlp on concatenated trigger-reply pairs")
    common(pp)
    train_common_args(pp)
    pp.add_argument("--embeddings", default=None)
    pp.add_argument("--hash-dim", type=int, default=None)
    pp.add_argument("--epochs", type=int, default=30)
    pp.add_argument("--batch", type=int, default=64)
    pp.add_argument("--lr", type=float, default=1e-3)
    pp.add_argument("--h1", type=int, default=256)
    pp.add_argument("--h2", type=int, default=64)
    pp.set_defaults(func=cmd_train_pair, out="pair-model.json")

    p = sub.add_parser("eval", help="run the full detector evaluation")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--topics", default=None)
    p.add_argument("--cutoff", required=True)
    p.add_argument("--dim", type=int, default=384)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="latency benchmark for the pair detector")
    common(p)
    p.add_argument("--pair-model", required=True)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--dim", type=int, default=128)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="score a live event stream")
    common(p)
    p.add_argument("--pair-model", required=True)
    p.add_argument("--reply-model", default=None)
    p.add_argument("--input", default="-", help="JSONL event file or - for stdin")
    p.add_argument("--embed", default="hash:128",
                   help="hash:<dim> | store:<path> | http:<url>")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--action", choices=["log", "delete", "delete+ban"],
                   default="log")
    p.add_argument("--allow", action="append", help="allowlisted channel id")
    p.add_argument("--api-url", default=None)
    p.add_argument("--token", default=None)
    p.add_argument("--on-missing", choices=["skip", "fallback"], default="skip")
    p.set_defaults(func=cmd_serve, out=None)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    common(p)
    p.add_argument("--propaganda", type=int, default=None)
    p.add_argument("--users", type=int, default=None)
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            return 1
        args = _apply_config(parser, argv, args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ParseError, FormatError, ConfigError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except PropdetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
