"""Pipeline stages.  Each stage reads its inputs from the config and from earlier
stages' artifacts in the output directory, and writes its own artifact
directory atomically (a failed stage leaves nothing behind).
"""

from __future__ import annotations

import csv
import json
import logging
import shutil
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path

from . import communities as comm
from . import measures as meas
from . import simnet, stats, svg
from .config import PipelineConfig
from .corpus import Corpus, community_stats, load_corpus
from .propaganda import PropagandaModel, article_items, chunk_tweets, load_lexicons, train_classifier
from .propaganda.model import read_training_corpus
from .trends import TrendSeries

logger = logging.getLogger(__name__)

STAGES = ("ingest", "network", "communities", "propaganda", "trends", "report")
OVERALL = "overall"


class StageError(Exception):
    """Stage failure.  ``code`` is the process exit status: 2 for missing inputs, 1 otherwise."""

    def __init__(self, stage: str, message: str, code: int = 1):
        self.stage = stage
        self.code = code
        super().__init__(f"{stage} stage: {message}")


@contextmanager
def _stage_dir(cfg: PipelineConfig, stage: str):
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    tmp = out / f".{stage}.tmp"
    final = out / stage
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    try:
        yield tmp
    except StageError:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    except Exception as exc:
        shutil.rmtree(tmp, ignore_errors=True)
        raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc
    if final.exists():
        shutil.rmtree(final)
    tmp.rename(final)


def _need(path: Path, stage: str, what: str) -> Path:
    if not path.exists():
        raise StageError(stage, f"missing {what}: {path} (run the earlier stage first)", code=2)
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _load(cfg: PipelineConfig, stage: str) -> Corpus:
    if cfg.tweets is None:
        raise StageError(stage, "no tweet file configured", code=2)
    for p in (cfg.tweets, cfg.articles, cfg.signals):
        if p is not None and not Path(p).exists():
            raise StageError(stage, f"input file not found: {p}", code=2)
    try:
        return load_corpus(cfg.tweets, cfg.articles, cfg.signals)
    except Exception as exc:
        raise StageError(stage, str(exc)) from exc


def _names(cfg: PipelineConfig, assignment: dict[str, int]) -> dict[str, str]:
    return comm.label_assignment(assignment, cfg.names)


# -- stages -----------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig, corpus: Corpus | None = None) -> Corpus:
    corpus = corpus or _load(cfg, "ingest")
    with _stage_dir(cfg, "ingest") as d:
        _write_json(d / "corpus_summary.json", corpus.summary())
    return corpus


def stage_network(cfg: PipelineConfig, corpus: Corpus | None = None) -> None:
    corpus = corpus or _load(cfg, "network")
    with _stage_dir(cfg, "network") as d:
        users = simnet.select_superspreaders(corpus, cfg.fraction)
        counts = simnet.retweet_counts(corpus)
        with open(d / "superspreaders.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "retweets"])
            for u in users:
                w.writerow([u, counts[u]])
        vectors = simnet.build_retweet_vectors(corpus, users)
        net = simnet.similarity_network(vectors)
        bb = simnet.backbone(net, cfg.alpha)
        simnet.write_edges(net, d / "similarity_edges.csv")
        simnet.write_edges(bb, d / "backbone_edges.csv")
        _write_json(
            d / "network_summary.json",
            {
                "superspreaders": len(users),
                "fraction": cfg.fraction,
                "alpha": cfg.alpha,
                "network_nodes": len(net.nodes),
                "network_edges": len(net.edges),
                "backbone_nodes": len(bb.nodes),
                "backbone_edges": len(bb.edges),
            },
        )


def stage_communities(cfg: PipelineConfig, corpus: Corpus | None = None) -> None:
    bb = simnet.read_edges(_need(Path(cfg.output) / "network" / "backbone_edges.csv", "communities", "backbone"))
    corpus = corpus or _load(cfg, "communities")
    with _stage_dir(cfg, "communities") as d:
        if not bb.edges:
            raise StageError("communities", "backbone is empty; nothing to partition (try a larger alpha)")
        assignment = comm.louvain(bb, cfg.resolution, cfg.seed)
        raw = comm.dismantle_raw(bb)
        scores = comm.normalize_scores(raw)
        names = _names(cfg, assignment)
        comm.write_assignment(assignment, scores, d / "assignment.csv")
        with open(d / "coordination_scores.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "raw_threshold", "coordination_score"])
            for u in sorted(raw):
                w.writerow([u, f"{raw[u]:.10g}", f"{scores[u]:.6f}"])
        rows = community_stats(corpus, {u: names[u] for u in assignment})
        with open(d / "community_stats.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = list(rows[0].keys())
            w.writerow(cols)
            for r in rows:
                w.writerow(["" if r[c] is None else (f"{r[c]:.6g}" if isinstance(r[c], float) else r[c]) for c in cols])
        _write_json(
            d / "communities_summary.json",
            {
                "communities": len(set(assignment.values())),
                "modularity": round(comm.modularity(bb, assignment, cfg.resolution), 12),
                "resolution": cfg.resolution,
                "seed": cfg.seed,
                "names": {str(k): v for k, v in sorted(cfg.names.items())},
            },
        )


def _network_users(cfg: PipelineConfig, stage: str) -> tuple[dict[str, int], dict[str, float]]:
    return comm.read_assignment(_need(Path(cfg.output) / "communities" / "assignment.csv", stage, "community assignment"))


def _get_model(cfg: PipelineConfig, stage: str) -> tuple[PropagandaModel, bool]:
    if cfg.model is not None and Path(cfg.model).exists():
        return PropagandaModel.load(cfg.model), False
    if cfg.training is None or not Path(cfg.training).exists():
        raise StageError(stage, "no trained model and no training corpus configured (set paths.model or paths.training)", code=2)
    return train_propaganda(cfg), True


def train_propaganda(cfg: PipelineConfig) -> PropagandaModel:
    data = read_training_corpus(cfg.training)
    lex = load_lexicons(cfg.lexicons) if cfg.lexicons else None
    model = train_classifier(data, lam=cfg.lam, seed=cfg.train_seed, lexicons=lex, max_iter=cfg.max_iter, threads=cfg.threads)
    if not model.converged:
        logger.warning("classifier stopped after %d iterations without reaching the gradient tolerance", model.iterations)
    return model


def stage_propaganda_train(cfg: PipelineConfig) -> None:
    with _stage_dir(cfg, "model") as d:
        if cfg.training is None or not Path(cfg.training).exists():
            raise StageError("propaganda", "no training corpus configured (paths.training)", code=2)
        train_propaganda(cfg).save(d / "model.json")


def stage_propaganda(cfg: PipelineConfig, corpus: Corpus | None = None) -> None:
    """Score every tweet chunk and shared article of the network users."""
    assignment, _ = _network_users(cfg, "propaganda")
    corpus = corpus or _load(cfg, "propaganda")
    trained_model = Path(cfg.output) / "model" / "model.json"
    if cfg.model is None and trained_model.exists():
        cfg.model = trained_model
    with _stage_dir(cfg, "propaganda") as d:
        model, fresh = _get_model(cfg, "propaganda")
        if fresh:
            model.save(d / "model.json")
        items, owners = [], defaultdict(set)
        seen = set()
        for user in sorted(assignment):
            for it in chunk_tweets(corpus, user, cfg.chunk_tokens) + article_items(corpus, user):
                owners[it.item_id].add(user)
                if it.item_id not in seen:
                    seen.add(it.item_id)
                    items.append(it)
        scores = model.score_items(items, threads=cfg.threads)
        with open(d / "item_scores.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item_id", "kind", "users", "score", "label"])
            for it, s in zip(items, scores):
                w.writerow([it.item_id, it.kind, ";".join(sorted(owners[it.item_id])), f"{s.score:.10g}", s.label])


def read_item_scores(path) -> tuple[dict[str, dict[str, list[float]]], dict[str, float], dict[str, list[str]]]:
    """-> (per-kind per-user scores, article scores by url, article urls by user)."""
    by_kind = {"tweets": defaultdict(list), "articles": defaultdict(list)}
    article_scores, shares = {}, defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            score = float(row["score"])
            kind = "tweets" if row["kind"] == "tweet_chunk" else "articles"
            if kind == "articles":
                article_scores[row["item_id"]] = score
            for u in row["users"].split(";"):
                by_kind[kind][u].append(score)
                if kind == "articles":
                    shares[u].append(row["item_id"])
    return by_kind, article_scores, shares


def _measure_trends(spec, by_kind, coord, named, k_grid) -> tuple[list[TrendSeries], TrendSeries]:
    scores = by_kind[spec.item_kind]
    p_u = meas.user_propaganda(scores, spec.psi)
    counts = {u: len(s) for u, s in scores.items()}
    labels = sorted(set(named.values()), key=_label_order(named))
    trends = [meas.community_trend(p_u, coord, named, c, spec.phi, k_grid, counts) for c in labels]
    overall = meas.community_trend(p_u, coord, dict.fromkeys(named, OVERALL), OVERALL, spec.phi, k_grid, counts)
    return trends, overall


def _label_order(named: dict[str, str]):
    sizes = defaultdict(int)
    for c in named.values():
        sizes[c] += 1
    return lambda c: (-sizes[c], c)


def stage_trends(cfg: PipelineConfig) -> None:
    out = Path(cfg.output)
    assignment, coord = _network_users(cfg, "trends")
    by_kind, _, _ = read_item_scores(_need(out / "propaganda" / "item_scores.csv", "trends", "item scores"))
    named = _names(cfg, assignment)
    with _stage_dir(cfg, "trends") as d:
        info_rows, notes = [], {}
        for mid in cfg.measures:
            spec = meas.get_measure(mid)
            trends, overall = _measure_trends(spec, by_kind, coord, named, cfg.k_grid)
            meas.write_trends(trends + [overall], d / f"trends_{spec.id}.csv")
            if len(trends) >= 2:
                try:
                    res = meas.informativeness(trends, spec.id)
                except ValueError as exc:
                    notes[spec.id] = str(exc)
                    continue
                info_rows.append((spec, res))
                if res.excluded:
                    notes[spec.id] = [f"{a} vs {b}: {why}" for a, b, why in res.excluded]
            else:
                notes[spec.id] = "fewer than 2 communities"
        meas.write_informativeness(info_rows, d / "informativeness.csv")
        _write_json(d / "informativeness_notes.json", notes)


def stage_report(cfg: PipelineConfig, corpus: Corpus | None = None) -> None:
    out = Path(cfg.output)
    assignment, coord = _network_users(cfg, "report")
    by_kind, article_scores, shares = read_item_scores(_need(out / "propaganda" / "item_scores.csv", "report", "item scores"))
    corpus = corpus or _load(cfg, "report")
    named = _names(cfg, assignment)
    spec = meas.get_measure(cfg.primary)
    with _stage_dir(cfg, "report") as d:
        trends, overall = _measure_trends(spec, by_kind, coord, named, cfg.k_grid)
        labels = [t.community for t in trends]
        everyone = dict.fromkeys(named, OVERALL)

        deltas = []
        for t in trends:
            try:
                deltas.append(meas.delta(t))
            except ValueError as exc:
                logger.info("no delta for %s: %s", t.community, exc)
        with open(d / "delta.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["community", "baseline", "top", "delta", "delta_pct"])
            for ds in deltas:
                pct = "" if ds.delta_pct is None else f"{ds.delta_pct:.10g}"
                w.writerow([ds.community, f"{ds.baseline:.10g}", f"{ds.top:.10g}", f"{ds.delta:.10g}", pct])

        auto_trends, susp_trends = [], []
        if corpus.signals:
            automation = {u: s.automation_score for u, s in corpus.signals.items()}
            suspended = {u: float(s.suspended) for u, s in corpus.signals.items()}
            for c, assign in [(c, named) for c in labels] + [(OVERALL, everyone)]:
                for sig, bucket in ((automation, auto_trends), (suspended, susp_trends)):
                    try:
                        bucket.append(stats.signal_trend(sig, coord, assign, c, cfg.k_grid))
                    except ValueError as exc:
                        logger.info("no signal trend for %s: %s", c, exc)
            meas.write_trends(auto_trends, d / "automation_trends.csv")
            meas.write_trends(susp_trends, d / "suspension_trends.csv")

        rows = stats.correlation_report(trends + [overall], auto_trends, susp_trends, deltas)
        stats.write_report_csv(rows, d / "correlation_report.csv")
        (d / "correlation_report.txt").write_text(stats.format_report(rows), encoding="utf-8")

        svg.write_plot(d / f"trends_{spec.id}.svg", trends, f"Propaganda vs coordination ({spec.id})", "propaganda score")
        if auto_trends:
            svg.write_plot(d / "automation.svg", [t for t in auto_trends if t.community != OVERALL], "Automation vs coordination", "mean automation score")
            svg.write_plot(d / "suspensions.svg", [t for t in susp_trends if t.community != OVERALL], "Suspensions vs coordination", "suspended fraction")

        frames = sorted({a.frame for a in corpus.articles.values() if a.frame is not None})
        frame_of = {url: a.frame for url, a in corpus.articles.items()}
        frame_rows = []
        for frame in frames:
            series = [
                meas.frame_conditioned_trend(article_scores, frame_of, shares, coord, named, c, frame, cfg.k_grid)
                for c in labels
            ]
            frame_rows.append((frame, series))
            svg.write_plot(d / f"frames_{frame}.svg", series, f"Propaganda in frame: {frame}", "flagged fraction")
        if frames:
            with open(d / "frame_trends.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["frame", "community", "k", "value", "users", "items"])
                for frame, series in frame_rows:
                    for t in series:
                        for k, v, nu, ni in zip(t.ks, t.values, t.users, t.items):
                            w.writerow([frame, t.community, f"{k:.10g}", "" if v is None else f"{v:.10g}", nu, ni])


def run(cfg: PipelineConfig, stop_after: str | None = None) -> list[str]:
    """Run stages in order (optionally stopping after ``stop_after``); returns the stages run."""
    if stop_after is not None and stop_after not in STAGES:
        raise ValueError(f"unknown stage {stop_after!r}; choose from {', '.join(STAGES)}")
    corpus = stage_ingest(cfg)
    done = ["ingest"]
    steps = [
        ("network", lambda: stage_network(cfg, corpus)),
        ("communities", lambda: stage_communities(cfg, corpus)),
        ("propaganda", lambda: stage_propaganda(cfg, corpus)),
        ("trends", lambda: stage_trends(cfg)),
        ("report", lambda: stage_report(cfg, corpus)),
    ]
    if stop_after == "ingest":
        return done
    for name, fn in steps:
        fn()
        done.append(name)
        if name == stop_after:
            break
    return done
