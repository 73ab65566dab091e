"""End-to-end runs: config validation, stage caching, and the run manifest.

A run is described by one JSON config (dataset, snapshot plan, training
hyperparameters, methods, aggregations, retrains, seed). Stages execute in
dependency order; every expensive artifact (embedding matrices, score maps,
post-hoc alignments) is stored in a content-addressed cache keyed by the
exact inputs that produced it, including the cache key of its anchor, so
chains invalidate transitively. Embeddings always cross stage boundaries
through their binary files: cached and freshly computed runs therefore see
bit-identical values, and re-running a config reproduces every output byte.

The last snapshot is never embedded by the main pipeline; it is the held-out
link-prediction target. The transfer study extends each chain by that final
snapshot since it scores embeddings against neighboring structure instead.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import AggregationSpec, aggregate
from .alignment import AlignmentRegularizer
from .embeddings import EmbeddingMatrix
from .errors import ConfigurationError, PipelineStageError
from .procrustes import align_posthoc
from .evaluation import (
    EvalReport,
    evaluate_method,
    prev_next_study,
    write_method_by_dataset_csv,
    write_report_json,
    write_study_csv,
    write_summary_csv,
)
from .graph import SnapshotPlan, common_nodes, parse_temporal_edgelist, split_snapshots
from .linkpred import build_dataset
from .scoring import (
    ScoreMap,
    edge_jaccard_scores,
    select_top_percent,
    temporal_betweenness_scores,
)
from .sgns import TrainConfig, train

_TRAIN_FIELDS = (
    "dim", "walk_length", "walks_per_node", "window", "negatives", "epochs",
    "batch_size", "learning_rate", "p", "q", "use_weights",
)
_RAFEN_TOKENS = {
    "rafen_all": ("all", None),
    "rafen_weighted_ej": ("weighted", "ej"),
    "rafen_weighted_tb": ("weighted", "tb"),
    "rafen_ref_ej": ("ref", "ej"),
    "rafen_ref_tb": ("ref", "tb"),
}
_POSTHOC_TOKENS = {"posthoc_pa": None, "posthoc_ej": "ej", "posthoc_tb": "tb"}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_key(material: dict) -> str:
    return hashlib.sha256(canonical_json(material).encode("utf-8")).hexdigest()


def derive_seed(*parts) -> int:
    digest = hashlib.sha256(canonical_json(list(parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class MethodSpec:
    name: str                 # label used in reports and output paths
    kind: str                 # vanilla | rafen | posthoc
    variant: str | None = None  # rafen: all|weighted|ref ; posthoc: pa|ej|tb
    scoring: str | None = None  # ej | tb
    alpha: float | None = None
    p_select: float | None = None


@dataclass
class RunConfig:
    dataset_name: str
    dataset_path: Path
    delimiter: str | None
    directed: bool
    has_weight: bool
    plan: SnapshotPlan
    train_params: dict
    methods: list[MethodSpec]
    aggregations: list[AggregationSpec]
    retrains: int
    seed: int
    threads: int
    scoring_node_budget: int
    scoring_sample_sources: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        return content_key(self.raw)


def _expand_method(token: str, alphas: list, p_select) -> list[MethodSpec]:
    if token == "vanilla":
        return [MethodSpec(name="vanilla", kind="vanilla")]
    if token in _RAFEN_TOKENS:
        variant, scoring = _RAFEN_TOKENS[token]
        if variant == "ref" and p_select is None:
            raise ConfigurationError(f"{token} requires p_select")
        out = []
        for a in alphas:
            name = token if len(alphas) == 1 else f"{token}@alpha={a:g}"
            out.append(
                MethodSpec(
                    name=name, kind="rafen", variant=variant, scoring=scoring,
                    alpha=a, p_select=p_select if variant == "ref" else None,
                )
            )
        return out
    if token in _POSTHOC_TOKENS:
        scoring = _POSTHOC_TOKENS[token]
        if scoring is not None and p_select is None:
            raise ConfigurationError(f"{token} requires p_select")
        return [
            MethodSpec(
                name=token, kind="posthoc",
                variant="pa" if scoring is None else scoring,
                scoring=scoring,
                p_select=p_select if scoring is not None else None,
            )
        ]
    if token in ("rafen_weighted", "rafen_ref"):
        raise ConfigurationError(f"{token} needs a scoring suffix (_ej or _tb)")
    raise ConfigurationError(f"unknown method token {token!r}")


def validate_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Check a raw config dict and resolve it into a RunConfig.

    Every structural problem (missing keys, unknown tokens, invalid
    combinations, absent dataset file) raises ConfigurationError here,
    before any computation starts.
    """
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    try:
        ds = raw["dataset"]
        path = base_dir / ds["path"]
        name = ds.get("name", Path(ds["path"]).stem)
        directed = bool(ds.get("directed", False))
        has_weight = bool(ds.get("has_weight", False))
        delimiter = ds.get("delimiter")
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad dataset section: {exc}") from None
    if not path.is_file():
        raise ConfigurationError(f"dataset file not found: {path}")

    snap = raw.get("snapshots")
    if not isinstance(snap, dict) or "frequency" not in snap:
        raise ConfigurationError("snapshots section with a frequency is required")
    plan = SnapshotPlan(
        frequency=snap["frequency"],
        drop_leading=int(snap.get("drop_leading", 0)),
        merge_trailing=int(snap.get("merge_trailing", 0)),
    )

    train_raw = raw.get("training", {})
    unknown = set(train_raw) - set(_TRAIN_FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown training options: {sorted(unknown)}")
    train_params = {k: train_raw[k] for k in _TRAIN_FIELDS if k in train_raw}
    TrainConfig(**train_params)  # validates ranges

    alpha = raw.get("alpha")
    if alpha is None:
        alphas = [None]
    elif isinstance(alpha, (int, float)) and not isinstance(alpha, bool):
        alphas = [float(alpha)]
    elif isinstance(alpha, list) and alpha:
        alphas = []
        for a in alpha:
            if not isinstance(a, (int, float)) or isinstance(a, bool):
                raise ConfigurationError("alpha sweep entries must be numbers")
            alphas.append(float(a))
    else:
        raise ConfigurationError("alpha must be null, a number, or a non-empty list")
    for a in alphas:
        if a is not None and not (0.0 <= a <= 1.0):
            raise ConfigurationError(f"alpha {a} outside [0, 1]")

    p_select = raw.get("p_select")
    if p_select is not None:
        p_select = float(p_select)
        if not (0.0 < p_select <= 1.0):
            raise ConfigurationError(f"p_select must be in (0, 1], got {p_select}")

    tokens = raw.get("methods")
    if not isinstance(tokens, list) or not tokens:
        raise ConfigurationError("methods must be a non-empty list")
    methods: list[MethodSpec] = []
    for tok in tokens:
        methods.extend(_expand_method(tok, alphas, p_select))
    names = [m.name for m in methods]
    if len(names) != len(set(names)):
        raise ConfigurationError(f"duplicate method entries: {names}")

    aggs_raw = raw.get("aggregations")
    if not isinstance(aggs_raw, list) or not aggs_raw:
        raise ConfigurationError("aggregations must be a non-empty list")
    aggregations = []
    for entry in aggs_raw:
        if isinstance(entry, str):
            aggregations.append(AggregationSpec(method=entry))
        elif isinstance(entry, dict):
            unknown = set(entry) - {"method", "fildne_alpha"}
            if unknown:
                raise ConfigurationError(
                    f"unknown aggregation options: {sorted(unknown)}"
                )
            aggregations.append(
                AggregationSpec(
                    method=entry.get("method", ""),
                    fildne_alpha=float(entry.get("fildne_alpha", 0.5)),
                )
            )
        else:
            raise ConfigurationError(f"bad aggregation entry {entry!r}")
    if len({a.method for a in aggregations}) != len(aggregations):
        raise ConfigurationError("duplicate aggregation methods")

    retrains = int(raw.get("retrains", 1))
    if retrains < 1:
        raise ConfigurationError("retrains must be >= 1")
    threads = int(raw.get("threads", 1))
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    scoring = raw.get("scoring", {})

    return RunConfig(
        dataset_name=name,
        dataset_path=path,
        delimiter=delimiter,
        directed=directed,
        has_weight=has_weight,
        plan=plan,
        train_params=train_params,
        methods=methods,
        aggregations=aggregations,
        retrains=retrains,
        seed=int(raw.get("seed", 0)),
        threads=threads,
        scoring_node_budget=int(scoring.get("node_budget", 20000)),
        scoring_sample_sources=int(scoring.get("sample_sources", 256)),
        raw=raw,
    )


def load_config(path, *, seed_override=None, threads_override=None) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if seed_override is not None:
        raw["seed"] = int(seed_override)
    if threads_override is not None:
        raw["threads"] = int(threads_override)
    return validate_config(raw, base_dir=path.parent)


class Pipeline:
    """Executes run stages against one output directory and one cache.

    The cache location is RAFEN_CACHE_DIR when set, otherwise a hidden
    .cache directory under the output dir. Stage methods are idempotent;
    each records timing and cache traffic for the manifest. Failures are
    re-raised as PipelineStageError tagged with the stage name.
    """

    def __init__(self, config: RunConfig, out_dir, cache_dir=None):
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if cache_dir is None:
            cache_dir = os.environ.get("RAFEN_CACHE_DIR") or (self.out_dir / ".cache")
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.stages: list[dict] = []
        self.graph = None
        self.snapshots = None
        self.dataset_hash = None
        self._embed_keys: dict[tuple[str, int, int], str] = {}
        self._score_cache: dict[tuple[str, int], tuple[ScoreMap, str]] = {}
        self._linkpred = None
        self._hits = 0
        self._misses = 0

    # ---- bookkeeping -----------------------------------------------------

    def _run_stage(self, name: str, fn):
        start = time.perf_counter()
        h0, m0 = self._hits, self._misses
        try:
            result = fn()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc
        self.stages.append(
            {
                "name": name,
                "seconds": time.perf_counter() - start,
                "cache_hits": self._hits - h0,
                "cache_misses": self._misses - m0,
            }
        )
        return result

    def _cache_path(self, key: str, suffix: str) -> Path:
        return self.cache_dir / f"{key}{suffix}"

    def _out(self, *parts) -> Path:
        path = self.out_dir.joinpath(*parts)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    # ---- ingest / snapshot ----------------------------------------------

    def ensure_graph(self):
        if self.graph is not None:
            return
        self._run_stage("ingest", self._ingest)

    def _ingest(self):
        cfg = self.config
        data = cfg.dataset_path.read_bytes()
        self.dataset_hash = hashlib.sha256(data).hexdigest()
        with open(cfg.dataset_path, "r", encoding="utf-8") as fh:
            self.graph = parse_temporal_edgelist(
                fh, delimiter=cfg.delimiter, directed=cfg.directed, has_weight=cfg.has_weight
            )
        lo, hi = self.graph.time_span
        summary = {
            "dataset": cfg.dataset_name,
            "sha256": self.dataset_hash,
            "nodes": self.graph.num_nodes,
            "edges": self.graph.num_edges,
            "directed": cfg.directed,
            "time_span": [lo, hi],
        }
        with open(self._out("graph_summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def ensure_snapshots(self):
        self.ensure_graph()
        if self.snapshots is not None:
            return
        self._run_stage("snapshot", self._snapshot)

    def _snapshot(self):
        self.snapshots = split_snapshots(self.graph, self.config.plan)
        summary = {
            "count": len(self.snapshots),
            "snapshots": [
                {
                    "index": s.index,
                    "start": s.time_range[0],
                    "end": s.time_range[1],
                    "nodes": len(s.nodes),
                    "edges": s.num_edges,
                }
                for s in self.snapshots
            ],
        }
        with open(self._out("snapshots.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @property
    def n_train_snapshots(self) -> int:
        # the final snapshot is the held-out link-prediction target
        return len(self.snapshots) - 1

    # ---- scores ----------------------------------------------------------

    def _scores(self, kind: str, t: int) -> tuple[ScoreMap, str]:
        """Activity scores for the transition snapshot t-1 -> t, cached."""
        cached = self._score_cache.get((kind, t))
        if cached is not None:
            return cached
        cfg = self.config
        material = {
            "stage": "scores",
            "kind": kind,
            "dataset": self.dataset_hash,
            "plan": [str(cfg.plan.frequency), cfg.plan.drop_leading, cfg.plan.merge_trailing],
            "transition": t,
            "node_budget": cfg.scoring_node_budget,
            "sample_sources": cfg.scoring_sample_sources,
            "seed": derive_seed(cfg.seed, "tb-pivots", t) if kind == "tb" else 0,
        }
        key = content_key(material)
        path = self._cache_path(key, ".csv")
        if path.is_file():
            self._hits += 1
            scoremap = ScoreMap.from_csv(path, method=kind)
        else:
            self._misses += 1
            prev, cur = self.snapshots[t - 1], self.snapshots[t]
            common = common_nodes(prev, cur)
            if kind == "ej":
                scoremap = edge_jaccard_scores(prev, cur, common)
            else:
                scoremap = temporal_betweenness_scores(
                    prev, cur, common,
                    node_budget=cfg.scoring_node_budget,
                    sample_sources=cfg.scoring_sample_sources,
                    seed=material["seed"],
                )
            scoremap.to_csv(path)
        shutil.copyfile(path, self._out("scores", f"{kind}_t{t}.csv"))
        self._score_cache[(kind, t)] = (scoremap, key)
        return scoremap, key

    # ---- embedding chains -------------------------------------------------

    def _train_material(self, r: int, t: int) -> dict:
        cfg = self.config
        return {
            "dataset": self.dataset_hash,
            "plan": [str(cfg.plan.frequency), cfg.plan.drop_leading, cfg.plan.merge_trailing],
            "train": dict(sorted(cfg.train_params.items())),
            "snapshot": t,
            "retrain": r,
            "seed": derive_seed(cfg.seed, "embed", r, t),
        }

    def _ensure_vanilla(self, r: int, t: int) -> str:
        key = self._embed_keys.get(("vanilla", r, t))
        if key is not None:
            return key
        material = {"stage": "embed", "kind": "vanilla", **self._train_material(r, t)}
        key = content_key(material)
        path = self._cache_path(key, ".bin")
        if path.is_file():
            self._hits += 1
        else:
            self._misses += 1
            cfg = TrainConfig(**self.config.train_params, seed=material["seed"])
            emb, trace = train(self.snapshots[t], cfg)
            emb.to_binary(path)
            trace.write_csv(self._cache_path(key, ".trace.csv"))
        self._embed_keys[("vanilla", r, t)] = key
        return key

    def _ensure_rafen(self, spec: MethodSpec, r: int, t: int) -> str:
        if t == 0:
            # no previous snapshot to anchor on: identical to vanilla training
            key = self._ensure_vanilla(r, 0)
            self._embed_keys[(spec.name, r, 0)] = key
            return key
        key = self._embed_keys.get((spec.name, r, t))
        if key is not None:
            return key
        anchor_key = self._ensure_rafen(spec, r, t - 1)
        score_key = None
        scoremap = None
        if spec.scoring is not None:
            scoremap, score_key = self._scores(spec.scoring, t)
        material = {
            "stage": "embed",
            "kind": "rafen",
            "variant": spec.variant,
            "scoring": score_key,
            "alpha": spec.alpha,
            "p_select": spec.p_select,
            "anchor": anchor_key,
            **self._train_material(r, t),
        }
        key = content_key(material)
        path = self._cache_path(key, ".bin")
        if path.is_file():
            self._hits += 1
        else:
            self._misses += 1
            anchor = EmbeddingMatrix.from_binary(self._cache_path(anchor_key, ".bin"))
            prev, cur = self.snapshots[t - 1], self.snapshots[t]
            common = common_nodes(prev, cur)
            if spec.variant == "all":
                reg = AlignmentRegularizer.all_nodes(anchor, common)
            elif spec.variant == "weighted":
                reg = AlignmentRegularizer.weighted(anchor, common, scoremap)
            else:
                ref = select_top_percent(scoremap, spec.p_select)
                reg = AlignmentRegularizer.restricted(anchor, common, ref)
            cfg = TrainConfig(
                **self.config.train_params,
                seed=material["seed"],
                alpha=spec.alpha,
                regularizer=reg,
            )
            emb, trace = train(self.snapshots[t], cfg)
            emb.to_binary(path)
            trace.write_csv(self._cache_path(key, ".trace.csv"))
        self._embed_keys[(spec.name, r, t)] = key
        return key

    def _ensure_posthoc(self, spec: MethodSpec, r: int, t: int) -> str:
        if t == 0:
            key = self._ensure_vanilla(r, 0)
            self._embed_keys[(spec.name, r, 0)] = key
            return key
        key = self._embed_keys.get((spec.name, r, t))
        if key is not None:
            return key
        cur_key = self._ensure_vanilla(r, t)
        anchor_key = self._ensure_posthoc(spec, r, t - 1)
        score_key = None
        scoremap = None
        if spec.scoring is not None:
            scoremap, score_key = self._scores(spec.scoring, t)
        material = {
            "stage": "posthoc",
            "variant": spec.variant,
            "scoring": score_key,
            "p_select": spec.p_select,
            "source": cur_key,
            "anchor": anchor_key,
        }
        key = content_key(material)
        path = self._cache_path(key, ".bin")
        if path.is_file():
            self._hits += 1
        else:
            self._misses += 1
            cur = EmbeddingMatrix.from_binary(self._cache_path(cur_key, ".bin"))
            anchor = EmbeddingMatrix.from_binary(self._cache_path(anchor_key, ".bin"))
            common = common_nodes(self.snapshots[t - 1], self.snapshots[t])
            if spec.scoring is None:
                subset = common
            else:
                subset = list(select_top_percent(scoremap, spec.p_select).nodes)
            aligned, qmap = align_posthoc(cur, anchor, subset)
            aligned.to_binary(path)
            qmap.to_csv(self._cache_path(key, ".map.csv"))
        self._embed_keys[(spec.name, r, t)] = key
        return key

    def _ensure_method_chain(self, spec: MethodSpec, r: int, upto: int) -> list[str]:
        ensure = {
            "vanilla": self._ensure_vanilla,
            "rafen": lambda rr, tt: self._ensure_rafen(spec, rr, tt),
            "posthoc": lambda rr, tt: self._ensure_posthoc(spec, rr, tt),
        }[spec.kind]
        if spec.kind == "vanilla":
            return [self._ensure_vanilla(r, t) for t in range(upto)]
        return [ensure(r, t) for t in range(upto)]

    def ensure_embeddings(self, *, include_last: bool = False):
        """Train/align every method chain for every retrain (cached)."""
        self.ensure_snapshots()
        upto = len(self.snapshots) if include_last else self.n_train_snapshots
        done_key = ("__embed_done__", upto)
        if getattr(self, "_embed_done", None) == done_key:
            return
        stage = "embed" if not include_last else "embed-full"

        def body():
            if self.n_train_snapshots < 1:
                raise ConfigurationError("need at least two snapshots (last is eval-only)")
            for r in range(self.config.retrains):
                for spec in self.config.methods:
                    keys = self._ensure_method_chain(spec, r, upto)
                    for t, key in enumerate(keys):
                        shutil.copyfile(
                            self._cache_path(key, ".bin"),
                            self._out("embeddings", spec.name, f"r{r}", f"snapshot_{t}.bin"),
                        )
                        if r == 0 and spec.kind != "posthoc":
                            trace = self._cache_path(key, ".trace.csv")
                            if trace.is_file():
                                shutil.copyfile(
                                    trace,
                                    self._out("losses", spec.name, f"snapshot_{t}.csv"),
                                )
                        if r == 0 and spec.kind == "posthoc" and t > 0:
                            shutil.copyfile(
                                self._cache_path(key, ".map.csv"),
                                self._out("maps", spec.name, f"snapshot_{t}.csv"),
                            )

        self._run_stage(stage, body)
        self._embed_done = done_key

    # ---- evaluation -------------------------------------------------------

    def _eval_dataset(self):
        if self._linkpred is None:
            target = self.snapshots[-1]
            seen = set()
            for snap in self.snapshots[:-1]:
                seen |= snap.nodes
            self._linkpred = build_dataset(
                target, seen, derive_seed(self.config.seed, "dataset")
            )
        return self._linkpred

    def _provider(self, name: str):
        T = self.n_train_snapshots

        def load(r: int):
            return [
                EmbeddingMatrix.from_binary(
                    self._cache_path(self._embed_keys[(name, r, t)], ".bin")
                )
                for t in range(T)
            ]

        return load

    def stage_aggregate(self):
        """Write retrain-0 aggregated matrices per method and aggregation."""
        self.ensure_embeddings()

        def body():
            dataset = self._eval_dataset()
            val_edges = (
                dataset.pairs_for(dataset.val_idx),
                dataset.labels_for(dataset.val_idx),
            )
            for spec in self.config.methods:
                embs = self._provider(spec.name)(0)
                for agg in self.config.aggregations:
                    combined = aggregate(embs, agg, val_edges=val_edges)
                    combined.to_binary(
                        self._out("aggregated", spec.name, f"{agg.method}.bin")
                    )

        self._run_stage("aggregate", body)

    def stage_evaluate(self) -> list[EvalReport]:
        self.ensure_embeddings()

        def body():
            dataset = self._eval_dataset()
            reports = []
            for agg in self.config.aggregations:
                for spec in self.config.methods:
                    reports.append(
                        evaluate_method(
                            self._provider(spec.name),
                            agg,
                            dataset,
                            retrains=self.config.retrains,
                            method=spec.name,
                            dataset_name=self.config.dataset_name,
                        )
                    )
            write_report_json(reports, self._out("eval_report.json"))
            write_summary_csv(reports, self._out("eval_summary.csv"))
            write_method_by_dataset_csv(reports, self._out("method_by_dataset.csv"))
            # figures import stays local: matplotlib only loads on report paths
            from .figures import plot_auc_report

            plot_auc_report(reports, self._out("figures", "auc_by_method.png"))
            return reports

        return self._run_stage("evaluate", body)

    def stage_study(self):
        """Prev/next transfer study over all snapshots, retrain 0."""
        names = {m.name for m in self.config.methods}
        if "vanilla" not in names:
            raise ConfigurationError("the study needs 'vanilla' among the methods")
        self.ensure_embeddings(include_last=True)

        def body():
            L = len(self.snapshots)
            embs = {
                spec.name: self._provider_full(spec.name, L) for spec in self.config.methods
            }
            rows = prev_next_study(
                embs, self.snapshots, seed=derive_seed(self.config.seed, "study")
            )
            write_study_csv(rows, self._out("prevnext.csv"))
            from .figures import plot_prev_next_ratios

            plot_prev_next_ratios(rows, self._out("figures", "prevnext_ratio.png"))
            return rows

        return self._run_stage("study-prevnext", body)

    def _provider_full(self, name: str, L: int):
        return [
            EmbeddingMatrix.from_binary(self._cache_path(self._embed_keys[(name, 0, t)], ".bin"))
            for t in range(L)
        ]

    # ---- manifest ----------------------------------------------------------

    def write_manifest(self) -> Path:
        artifacts = {}
        for path in sorted(self.out_dir.rglob("*")):
            if path.is_dir():
                continue
            rel = path.relative_to(self.out_dir)
            if rel.parts and rel.parts[0].startswith("."):
                continue  # cache lives under a hidden dir when colocated
            if rel.name == "run_manifest.json":
                continue
            artifacts[str(rel)] = hashlib.sha256(path.read_bytes()).hexdigest()
        manifest = {
            "config_hash": self.config.config_hash,
            "dataset_hash": self.dataset_hash,
            "seed": self.config.seed,
            "threads": self.config.threads,
            "stages": self.stages,
            "artifacts": artifacts,
        }
        path = self._out("run_manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def run_pipeline(config: RunConfig, out_dir, cache_dir=None) -> Pipeline:
    """Full run: ingest, snapshot, embed, align, aggregate, evaluate."""
    pipe = Pipeline(config, out_dir, cache_dir)
    pipe.stage_aggregate()
    pipe.stage_evaluate()
    pipe.write_manifest()
    return pipe
