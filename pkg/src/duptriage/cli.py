"""Command-line pipeline: ingest -> graph -> embeddings -> candidates ->
training -> evaluation, plus one-shot queries and corpus stats."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta
from pathlib import Path

from . import baseline, corpus, embed, features, metrics, retrieval, taggraph, timepred
from .config import DEFAULTS, ConfigError, config_datetime, resolve_config

log = logging.getLogger("duptriage")

TAG_GRAPH_FILE = "tag_graph.tsv"
TAG_COUNTS_FILE = "tag_counts.tsv"
TOKEN_STORE_FILE = "tokens.vec"
TAG_STORE_FILE = "tags.vec"
CANDIDATES_VALIDATION_FILE = "candidates_validation.jsonl"
CANDIDATES_TEST_FILE = "candidates_test.jsonl"
HEAD_FILE = "head.ckpt"
TIME_MLP_FILE = "time_mlp.ckpt"
TIME_TREE_FILE = "time_tree.ckpt"


class MissingArtifactError(RuntimeError):
    """A pipeline input is absent; the message names the producing command."""

    def __init__(self, path, producer: str):
        super().__init__(f"missing {path}; run `duptriage {producer}` first")
        self.path = Path(path)
        self.producer = producer


class CommandError(RuntimeError):
    pass


def _dir(cfg: dict, key: str) -> Path:
    base = Path(cfg["paths.workdir"])
    path = Path(cfg[key])
    return path if path.is_absolute() else base / path


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, producer)
    return path


def _setup(args) -> dict:
    overrides = getattr(args, "_overrides", None) or []
    cfg = resolve_config(args.config, overrides)
    log.debug("resolved config: %s", json.dumps(cfg, sort_keys=True))
    log.info(
        "seed=%d threads=%d feature_mode=%s", cfg["seed"], cfg["threads"], cfg["feature_mode"]
    )
    return cfg


def _bounds(cfg: dict) -> corpus.SplitBounds:
    return corpus.SplitBounds(
        train_start=config_datetime(cfg, "split.train_start"),
        train_end=config_datetime(cfg, "split.train_end"),
        validation_start=config_datetime(cfg, "split.validation_start"),
        validation_end=config_datetime(cfg, "split.validation_end"),
        test_start=config_datetime(cfg, "split.test_start"),
        test_end=config_datetime(cfg, "split.test_end"),
    )


def _load_archive(cfg: dict):
    archive = _dir(cfg, "paths.archive_dir")
    _require(archive / corpus.QUESTIONS_FILE, "ingest")
    _require(archive / corpus.PAIRS_FILE, "ingest")
    return corpus.load_archive(archive)


def _encoder(cfg: dict) -> embed.QuestionEncoder:
    if cfg["encoder.kind"] == "precomputed":
        path = cfg["encoder.field_vectors"]
        if not path:
            raise CommandError("encoder.kind is 'precomputed' but encoder.field_vectors is empty")
        path = Path(path)
        if not path.is_absolute():
            path = Path(cfg["paths.workdir"]) / path
        if not path.exists():
            raise CommandError(f"field-vector store not found: {path}")
        return embed.PrecomputedEncoder(embed.load_store(path))
    stores = _dir(cfg, "paths.stores_dir")
    token_path = _require(stores / TOKEN_STORE_FILE, "train-embeddings")
    return embed.MeanPoolEncoder(embed.load_store(token_path))


def _tag_assets(cfg: dict):
    """Tag store and graph, required by the text+network feature mode."""
    stores = _dir(cfg, "paths.stores_dir")
    graph_edges = _require(stores / TAG_GRAPH_FILE, "build-graph")
    graph_counts = _require(stores / TAG_COUNTS_FILE, "build-graph")
    tag_path = _require(stores / TAG_STORE_FILE, "train-embeddings")
    graph = taggraph.load_graph(graph_edges, graph_counts)
    return embed.load_store(tag_path), graph


def _mode_assets(cfg: dict, mode: str):
    if mode == "text+network":
        return _tag_assets(cfg)
    return None, None


def _features_subset(ids, by_id, encoder, tag_store, graph):
    return {
        qid: features.question_features(by_id[qid], encoder, tag_store, graph)
        for qid in sorted(ids)
    }


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    cfg = _setup(args)
    dump = _dir(cfg, "paths.dump_dir")
    posts_path = dump / "Posts.xml"
    links_path = dump / "PostLinks.xml"
    for path in (posts_path, links_path):
        if not path.exists():
            raise CommandError(f"dump file not found: {path}")
    parsed = corpus.parse_posts(posts_path)
    linkset = corpus.parse_links(links_path)
    pairs, pair_stats = corpus.derive_pairs(linkset.links, parsed.records)
    records = sorted(parsed.records, key=lambda r: r.id)
    stats = corpus.corpus_stats(records, pairs)
    stats.update(
        {
            "malformed_post_rows": parsed.malformed_rows,
            "malformed_link_rows": linkset.malformed_rows,
            "links_dropped_unresolved": pair_stats.dropped_unresolved,
            "links_dropped_self": pair_stats.dropped_self_links,
            "links_deduplicated": pair_stats.deduplicated,
            "pairs_backdated": pair_stats.backdated,
        }
    )
    archive = _dir(cfg, "paths.archive_dir")
    corpus.save_archive(archive, records, pairs, stats)
    log.info(
        "ingested %d questions, %d duplicate pairs (unresolved %d, self %d, deduplicated %d)",
        len(records),
        len(pairs),
        pair_stats.dropped_unresolved,
        pair_stats.dropped_self_links,
        pair_stats.deduplicated,
    )
    return 0


def cmd_stats(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    print(json.dumps(corpus.corpus_stats(records, pairs), indent=2, sort_keys=True))
    return 0


def cmd_build_graph(args) -> int:
    cfg = _setup(args)
    records, _ = _load_archive(cfg)
    if cfg["taggraph.period"] == "train":
        end = config_datetime(cfg, "split.train_end")
        records = [r for r in records if r.created_at < end]
    graph = taggraph.build_graph(records, threshold=cfg["taggraph.edge_threshold"])
    stores = _dir(cfg, "paths.stores_dir")
    stores.mkdir(parents=True, exist_ok=True)
    taggraph.save_graph(graph, stores / TAG_GRAPH_FILE, stores / TAG_COUNTS_FILE)
    log.info("tag graph: %d nodes, %d edges kept", len(graph.nodes), len(graph.edges))
    return 0


def cmd_train_embeddings(args) -> int:
    cfg = _setup(args)
    records, _ = _load_archive(cfg)
    sequences = []
    for r in records:
        if r.title_tokens:
            sequences.append(list(r.title_tokens))
        if r.body_tokens:
            sequences.append(list(r.body_tokens))
    token_cfg = embed.SgnsConfig(
        dimension=cfg["word2vec.dimension"],
        window=cfg["word2vec.window"],
        negatives_per_positive=cfg["word2vec.negatives"],
        epochs=cfg["word2vec.epochs"],
        initial_learning_rate=cfg["word2vec.learning_rate"],
        min_count=cfg["word2vec.min_count"],
        seed=cfg["seed"],
        batch_words=cfg["word2vec.batch_words"],
    )
    token_store = embed.train_sgns(sequences, token_cfg)
    stores = _dir(cfg, "paths.stores_dir")
    stores.mkdir(parents=True, exist_ok=True)
    embed.save_store(token_store, stores / TOKEN_STORE_FILE)
    log.info("token store: %d vectors of dim %d", len(token_store), token_store.dimension)
    graph_path = stores / TAG_GRAPH_FILE
    if cfg["feature_mode"] == "text+network" or graph_path.exists():
        if not graph_path.exists():
            raise MissingArtifactError(graph_path, "build-graph")
        graph = taggraph.load_graph(graph_path, _require(stores / TAG_COUNTS_FILE, "build-graph"))
        walk_cfg = taggraph.WalkConfig(
            p=cfg["node2vec.p"],
            q=cfg["node2vec.q"],
            walks_per_node=cfg["node2vec.walks_per_node"],
            walk_length=cfg["node2vec.walk_length"],
            seed=cfg["seed"],
        )
        walks = taggraph.generate_walks(graph, walk_cfg)
        tag_cfg = embed.SgnsConfig(
            dimension=cfg["node2vec.dimension"],
            window=cfg["node2vec.window"],
            negatives_per_positive=cfg["node2vec.negatives"],
            epochs=cfg["node2vec.epochs"],
            initial_learning_rate=cfg["node2vec.learning_rate"],
            min_count=cfg["node2vec.min_count"],
            seed=cfg["seed"],
            batch_words=cfg["node2vec.batch_words"],
        )
        tag_store = embed.train_sgns(walks, tag_cfg)
        embed.save_store(tag_store, stores / TAG_STORE_FILE)
        log.info("tag store: %d vectors of dim %d", len(tag_store), tag_store.dimension)
    return 0


def cmd_build_candidates(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    encoder = _encoder(cfg)
    titles = features.title_vectors(records, encoder)
    generator = retrieval.CandidateGenerator(
        records,
        titles,
        tag_jaccard_floor=cfg["candidates.tag_jaccard"],
        title_cosine_floor=cfg["candidates.title_cosine"],
    )
    split = corpus.split_pairs(pairs, _bounds(cfg))
    out_dir = _dir(cfg, "paths.candidates_dir")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, plist, fname in (
        ("validation", split.validation, CANDIDATES_VALIDATION_FILE),
        ("test", split.test, CANDIDATES_TEST_FILE),
    ):
        entries = []
        for pair in plist:
            cset = generator.for_anchor(pair.anchor)
            entry = retrieval.EvalEntry(
                anchor=pair.anchor, gold=pair.master, candidates=tuple(cset.ids())
            )
            entries.append((entry, cset))
        retrieval.save_candidates(entries, out_dir / fname)
        if entries:
            present = [e.gold in e.candidates for e, _ in entries]
            sizes = [len(e.candidates) for e, _ in entries]
            log.info(
                "%s candidates: %d anchors, mean set size %.1f, upper bound %.3f",
                name,
                len(entries),
                sum(sizes) / len(sizes),
                sum(present) / len(present),
            )
        else:
            log.info("%s candidates: no anchors in the window", name)
    return 0


def cmd_train_retrieval(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    by_id = {r.id: r for r in records}
    encoder = _encoder(cfg)
    mode = cfg["feature_mode"]
    tag_store, graph = _mode_assets(cfg, mode)
    split = corpus.split_pairs(pairs, _bounds(cfg))
    if not split.train:
        raise CommandError("no duplicate pairs inside the training window")
    cand_path = _require(
        _dir(cfg, "paths.candidates_dir") / CANDIDATES_VALIDATION_FILE, "build-candidates"
    )
    validation = [entry for entry, _ in retrieval.load_candidates(cand_path)]
    member_ids = {p.anchor for p in split.train} | {p.master for p in split.train}
    text_vecs = {
        qid: features.question_text_vector(by_id[qid], encoder) for qid in sorted(member_ids)
    }
    buckets = retrieval.build_buckets(split.train, text_vecs)
    sampler = retrieval.NegativeSampler(
        buckets,
        retrieval.bucket_similarity(buckets),
        records,
        alpha=cfg["head.alpha"],
        seed=cfg["seed"],
    )
    needed = set(member_ids)
    for entry in validation:
        needed.add(entry.anchor)
        needed.update(entry.candidates)
    feats = _features_subset(needed, by_id, encoder, tag_store, graph)

    def triplet_source(epoch: int):
        return [
            retrieval.Triplet(p.anchor, p.master, sampler.sample(p.anchor)) for p in split.train
        ]

    head_cfg = retrieval.HeadTrainConfig(
        output_dim=cfg["head.output_dim"],
        learning_rate=cfg["head.learning_rate"],
        epsilon=cfg["head.epsilon"],
        epochs=cfg["head.epochs"],
        batch_size=cfg["head.batch_size"],
        margin=cfg["head.margin"],
        norm_degree=cfg["head.norm_degree"],
        seed=cfg["seed"],
        feature_mode=mode,
        score=cfg["head.score"],
        optimizer=cfg["head.optimizer"],
    )
    head, history = retrieval.train_head(
        triplet_source, feats, head_cfg, validation=validation or None
    )
    ckpt_dir = _dir(cfg, "paths.checkpoints_dir")
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    retrieval.save_head(head, ckpt_dir / HEAD_FILE)
    if history.validation_mrr:
        log.info(
            "trained %d epochs; best validation MRR %.4f at epoch %d; %d fallback negatives",
            head_cfg.epochs,
            max(history.validation_mrr),
            history.best_epoch,
            sampler.fallback_count,
        )
    else:
        log.info(
            "trained %d epochs (no validation anchors); %d fallback negatives",
            head_cfg.epochs,
            sampler.fallback_count,
        )
    return 0


def cmd_eval_retrieval(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    by_id = {r.id: r for r in records}
    created = {r.id: r.created_at for r in records}
    cand_path = _require(_dir(cfg, "paths.candidates_dir") / CANDIDATES_TEST_FILE, "build-candidates")
    loaded = retrieval.load_candidates(cand_path)
    if not loaded:
        raise CommandError("no test anchors; the test window produced no candidates")
    method = args.method
    if method == "head":
        head = retrieval.load_head(
            _require(_dir(cfg, "paths.checkpoints_dir") / HEAD_FILE, "train-retrieval")
        )
        encoder = _encoder(cfg)
        tag_store, graph = _mode_assets(cfg, head.feature_mode)
        needed = set()
        for entry, _ in loaded:
            needed.add(entry.anchor)
            needed.update(entry.candidates)
        feats = _features_subset(needed, by_id, encoder, tag_store, graph)

        def rank_one(item):
            entry, cset = item
            return retrieval.rank_candidates(
                entry.anchor,
                cset,
                head,
                feats,
                created,
                gold=entry.gold,
                score=cfg["head.score"],
            )

    else:
        index = baseline.index_corpus(records, k1=cfg["bm25.k1"], b=cfg["bm25.b"])

        def rank_one(item):
            entry, cset = item
            return baseline.bm25_rank(by_id[entry.anchor], cset, index, created, gold=entry.gold)

    ranked = _parallel_map(rank_one, loaded, cfg["threads"])
    present = [entry.gold in entry.candidates for entry, _ in loaded]
    report = metrics.compute_retrieval_report(
        retrieval.gold_ranks(ranked), present, ks=cfg["eval.recall_ks"]
    )
    reports_dir = _dir(cfg, "paths.reports_dir")
    reports_dir.mkdir(parents=True, exist_ok=True)
    retrieval.write_ranked(ranked, reports_dir / f"ranked_{method}.tsv", top_k=cfg["eval.top_k"])
    kv = metrics.retrieval_report_kv(report)
    table = metrics.retrieval_report_table(report)
    if args.compare_with:
        other_path = Path(args.compare_with)
        if not other_path.exists():
            raise CommandError(f"comparison ranking not found: {other_path}")
        other = {anchor: rank for anchor, rank, _ in retrieval.read_ranked(other_path)}
        ours = {r.anchor: r.gold_rank for r in ranked}
        shared = sorted(set(ours) & set(other))
        if not shared:
            raise CommandError("comparison ranking shares no anchors with this run")
        rr_ours = [0.0 if ours[a] is None else 1.0 / ours[a] for a in shared]
        rr_other = [0.0 if other[a] is None else 1.0 / other[a] for a in shared]
        u_stat, p_value = metrics.mann_whitney_u(rr_ours, rr_other)
        kv += f"mw_u\t{u_stat!r}\nmw_p\t{p_value!r}\n"
        table += f"U vs {other_path.name}  {u_stat:.1f} (p = {p_value:.4f}, n = {len(shared)})\n"
        log.info("rank-sum test on reciprocal ranks: U=%.1f p=%.4f", u_stat, p_value)
    (reports_dir / f"report_{method}.kv").write_text(kv, encoding="utf-8")
    (reports_dir / f"report_{method}.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def cmd_train_timepred(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    by_id = {r.id: r for r in records}
    encoder = _encoder(cfg)
    mode = cfg["feature_mode"]
    tag_store, graph = _mode_assets(cfg, mode)
    cutoff = config_datetime(cfg, "timepred.train_cutoff")
    train_p, val_p, _ = timepred.split_time_pairs(
        pairs, by_id, cutoff=cutoff, validation_fraction=cfg["timepred.validation_fraction"]
    )
    if not train_p:
        raise CommandError("no duplicate pairs before the time-task cutoff")
    clamp = cfg["timepred.gap_clamp_hours"]
    samples, clamped = timepred.build_time_samples(train_p, by_id, encoder, tag_store, graph, clamp)
    ckpt_dir = _dir(cfg, "paths.checkpoints_dir")
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    if args.model == "mlp":
        per_question = samples[0].features.size // 2
        hidden1 = cfg["timepred.hidden1"] or timepred.hidden_sizes_for_mode(mode)[0]
        mlp_cfg = timepred.TimeMlpConfig(
            input_dim=per_question,
            hidden1=hidden1,
            hidden2=cfg["timepred.hidden2"],
            learning_rate=cfg["timepred.learning_rate"],
            batch_size=cfg["timepred.batch_size"],
            epochs=cfg["timepred.epochs"],
            seed=cfg["seed"],
            feature_mode=mode,
        )
        val_samples = None
        if val_p:
            val_samples, _ = timepred.build_time_samples(val_p, by_id, encoder, tag_store, graph, clamp)
        mlp, history = timepred.train_time_mlp(samples, mlp_cfg, val_samples)
        timepred.save_time_mlp(mlp, ckpt_dir / TIME_MLP_FILE)
        if history.validation_mae:
            log.info(
                "time mlp: %d train pairs (%d clamped), best validation MAE %.4f at epoch %d",
                len(samples),
                clamped,
                min(history.validation_mae),
                history.best_epoch,
            )
        else:
            log.info("time mlp: %d train pairs (%d clamped), no validation split", len(samples), clamped)
    else:
        tree = timepred.train_time_tree(
            samples,
            max_depth=cfg["timepred.tree_max_depth"],
            min_samples_split=cfg["timepred.tree_min_samples_split"],
        )
        timepred.save_time_tree(tree, ckpt_dir / TIME_TREE_FILE)
        log.info(
            "time tree: %d train pairs (%d clamped), depth %d, %d leaves",
            len(samples),
            clamped,
            tree.depth(),
            tree.leaf_count(),
        )
    return 0


def cmd_eval_timepred(args) -> int:
    cfg = _setup(args)
    records, pairs = _load_archive(cfg)
    by_id = {r.id: r for r in records}
    encoder = _encoder(cfg)
    ckpt_dir = _dir(cfg, "paths.checkpoints_dir")
    if args.model == "mlp":
        model = timepred.load_time_mlp(
            _require(ckpt_dir / TIME_MLP_FILE, "train-timepred --model mlp")
        )
        mode = model.feature_mode
    else:
        model = timepred.load_time_tree(
            _require(ckpt_dir / TIME_TREE_FILE, "train-timepred --model tree")
        )
        mode = cfg["feature_mode"]
    tag_store, graph = _mode_assets(cfg, mode)
    cutoff = config_datetime(cfg, "timepred.train_cutoff")
    _, _, test_p = timepred.split_time_pairs(
        pairs, by_id, cutoff=cutoff, validation_fraction=cfg["timepred.validation_fraction"]
    )
    if len(test_p) < 2:
        raise CommandError("need at least two test pairs after the cutoff to evaluate")
    samples, _ = timepred.build_time_samples(
        test_p, by_id, encoder, tag_store, graph, cfg["timepred.gap_clamp_hours"]
    )
    ranking = timepred.predict_and_rank(model, samples)
    report = metrics.TimePredReport(
        rmse=metrics.rmse(ranking.gold(), ranking.predicted()),
        spearman_rho=metrics.spearman_rho(ranking.gold(), ranking.predicted()),
        pairs=len(ranking.entries),
    )
    reports_dir = _dir(cfg, "paths.reports_dir")
    reports_dir.mkdir(parents=True, exist_ok=True)
    timepred.write_time_ranking(ranking, reports_dir / f"time_ranked_{args.model}.tsv")
    (reports_dir / f"time_report_{args.model}.kv").write_text(
        metrics.time_report_kv(report), encoding="utf-8"
    )
    table = metrics.time_report_table(report)
    (reports_dir / f"time_report_{args.model}.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def cmd_query(args) -> int:
    cfg = _setup(args)
    if cfg["encoder.kind"] != "word2vec":
        raise CommandError("query needs the built-in word2vec encoder (ad-hoc text cannot be looked up)")
    records, _ = _load_archive(cfg)
    if not records:
        raise CommandError("the archive holds no questions")
    encoder = _encoder(cfg)
    head = retrieval.load_head(
        _require(_dir(cfg, "paths.checkpoints_dir") / HEAD_FILE, "train-retrieval")
    )
    tag_store, graph = _mode_assets(cfg, head.feature_mode)
    tags = tuple(t.strip() for t in args.tags.split(",") if t.strip())
    if not tags:
        raise CommandError("--tags needs at least one tag")
    max_id = max(r.id for r in records)
    latest = max(r.created_at for r in records)
    record = corpus.QuestionRecord(
        id=max_id + 1,
        title_raw=args.title,
        body_raw=args.body,
        title_tokens=tuple(corpus.preprocess_text(args.title)),
        body_tokens=tuple(corpus.preprocess_text(args.body)),
        tags=tags,
        created_at=latest + timedelta(seconds=1),
        answer_count=0,
    )
    titles = features.title_vectors(records, encoder)
    generator = retrieval.CandidateGenerator(
        records,
        titles,
        tag_jaccard_floor=cfg["candidates.tag_jaccard"],
        title_cosine_floor=cfg["candidates.title_cosine"],
    )
    cset = generator.for_anchor(record, anchor_title_vector=encoder.encode(record)[0])
    if not cset.candidates:
        print("no candidates survived filtering for this question")
        return 0
    by_id = {r.id: r for r in records}
    created = {r.id: r.created_at for r in records}
    feats = _features_subset(cset.ids(), by_id, encoder, tag_store, graph)
    anchor_vec = features.question_features(record, encoder, tag_store, graph)
    ranked = retrieval.rank_candidates(
        record,
        cset,
        head,
        feats,
        created,
        score=cfg["head.score"],
        anchor_vector=anchor_vec,
    )
    top_k = args.k if args.k is not None else cfg["query.top_k"]
    for position, (qid, score) in enumerate(ranked.ranking[:top_k], start=1):
        print(f"{position:3d}. {qid}  score={score:.6f}  {by_id[qid].title_raw}")
    return 0


# ------------------------------------------------------------------ parser


class _Override(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        key = option_string.lstrip("-").replace("-", "_")
        current = getattr(namespace, "_overrides", None)
        if current is None:
            current = []
            setattr(namespace, "_overrides", current)
        current.append((key, values))


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", metavar="FILE", default=None, help="JSON config file")
    group = sp.add_argument_group("config overrides")
    group.add_argument("--seed", action=_Override, metavar="N", help="override the run seed")
    group.add_argument("--threads", action=_Override, metavar="N", help="worker threads for inference")
    group.add_argument(
        "--feature-mode",
        action=_Override,
        metavar="MODE",
        help="question features: text or text+network",
    )
    for key in DEFAULTS:
        if key in ("seed", "threads"):
            continue
        group.add_argument(f"--{key}", action=_Override, metavar="VALUE", help=argparse.SUPPRESS)
    sp.set_defaults(_overrides=None)


_EPILOG = (
    "Any config key can be overridden with a flag of the same dotted name, "
    "e.g. --head.epochs 10 or --candidates.tag_jaccard 0.2; see the README "
    "for the full key list."
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duptriage",
        description="Duplicate-question triage: retrieval of likely masters and confirmation-time ranking.",
        epilog=_EPILOG,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    specs = [
        ("ingest", cmd_ingest, "parse a Posts/PostLinks dump into the corpus archive"),
        ("stats", cmd_stats, "print descriptive statistics of the archived corpus"),
        ("build-graph", cmd_build_graph, "build the tag co-occurrence graph"),
        ("train-embeddings", cmd_train_embeddings, "train token and tag embedding stores"),
        ("build-candidates", cmd_build_candidates, "generate filtered candidate sets"),
        ("train-retrieval", cmd_train_retrieval, "train the retrieval projection head"),
        ("eval-retrieval", cmd_eval_retrieval, "rank test candidates and report MRR/RR@k"),
        ("train-timepred", cmd_train_timepred, "train a confirmation-time regressor"),
        ("eval-timepred", cmd_eval_timepred, "evaluate confirmation-time predictions"),
        ("query", cmd_query, "rank likely masters for an ad-hoc question"),
    ]
    for name, func, help_text in specs:
        sp = sub.add_parser(name, help=help_text, epilog=_EPILOG)
        _add_config_flags(sp)
        if name == "eval-retrieval":
            sp.add_argument("--method", choices=("head", "bm25"), default="head")
            sp.add_argument(
                "--compare-with",
                metavar="RANKED_TSV",
                default=None,
                help="second ranking; adds a rank-sum test on reciprocal ranks",
            )
        if name in ("train-timepred", "eval-timepred"):
            sp.add_argument("--model", choices=("mlp", "tree"), default="mlp")
        if name == "query":
            sp.add_argument("--title", required=True)
            sp.add_argument("--body", default="")
            sp.add_argument("--tags", required=True, help="comma-separated tag list")
            sp.add_argument("--k", type=int, default=None, help="how many candidates to print")
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingArtifactError as exc:
        log.error(str(exc))
        return 2
    except (CommandError, ConfigError, embed.StoreFormatError) as exc:
        log.error(str(exc))
        return 1
    except ValueError as exc:
        log.error(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
