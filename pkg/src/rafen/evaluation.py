"""Evaluation protocols: repeated-retrain link prediction and the
previous/next-snapshot transfer study.

evaluate_method fits the classifier on the merged train+val split and scores
the held-out test split once per retrain; all run-to-run variance comes from
the embeddings handed in by the provider. The transfer study scores each
snapshot's embedding against the previous and the next snapshot's structure
and reports AUC ratios to the vanilla baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .aggregation import AggregationSpec, aggregate
from .embeddings import EmbeddingMatrix
from .errors import ContractViolationError
from .graph import Snapshot
from .linkpred import (
    LinkPredDataset,
    LogisticConfig,
    auc,
    hadamard_features,
    sample_negative_pairs,
    train_logistic,
    _canonical,
)


@dataclass(frozen=True)
class EvalReport:
    """AUC scores of one (method, aggregation) cell over all retrains."""

    dataset: str
    method: str
    aggregation: str
    aucs: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def std(self) -> float:
        # population std: a single retrain reports exactly 0 spread
        return float(np.std(self.aucs))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "aggregation": self.aggregation,
            "aucs": list(self.aucs),
            "auc_mean": self.mean,
            "auc_std": self.std,
        }


def evaluate_method(
    embeddings,
    spec: AggregationSpec,
    dataset: LinkPredDataset,
    *,
    retrains: int = 25,
    method: str = "",
    dataset_name: str = "",
    classifier: LogisticConfig | None = None,
) -> EvalReport:
    """Score one method/aggregation cell.

    ``embeddings`` is either a fixed list of snapshot matrices (then every
    retrain sees the same embeddings and std is 0) or a callable
    ``retrain_index -> list of matrices`` supplying independently retrained
    embeddings. The classifier always fits on train+val merged and is scored
    on the test split; kfildne sees only the validation edges.
    """
    if retrains < 1:
        raise ContractViolationError("retrains must be >= 1")
    fit_idx = np.sort(np.concatenate([dataset.train_idx, dataset.val_idx]))
    pairs_fit = dataset.pairs_for(fit_idx)
    labels_fit = dataset.labels_for(fit_idx)
    pairs_test = dataset.pairs_for(dataset.test_idx)
    labels_test = dataset.labels_for(dataset.test_idx)
    val_edges = (dataset.pairs_for(dataset.val_idx), dataset.labels_for(dataset.val_idx))

    aucs = []
    for r in range(retrains):
        embs = embeddings(r) if callable(embeddings) else embeddings
        combined = aggregate(list(embs), spec, val_edges=val_edges)
        model = train_logistic(
            hadamard_features(combined, pairs_fit), labels_fit, classifier
        )
        scores = model.decision(hadamard_features(combined, pairs_test))
        aucs.append(auc(scores, labels_test))
    return EvalReport(
        dataset=dataset_name, method=method, aggregation=spec.method, aucs=tuple(aucs)
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, best (largest) value gets rank 1; ties share the mean."""
    neg = -values
    order = np.argsort(neg, kind="mergesort")
    s = neg[order]
    _, starts, counts = np.unique(s, return_index=True, return_counts=True)
    group_rank = starts + (counts + 1) / 2.0
    ranks_sorted = np.repeat(group_rank, counts)
    ranks = np.empty(len(values))
    ranks[order] = ranks_sorted
    return ranks


def mean_ranks(reports: list[EvalReport]) -> dict[str, dict[str, float]]:
    """Per-aggregation mean rank of each method across retrain runs.

    Methods are ranked (1 = best AUC, ties averaged) within every retrain
    index, then ranks are averaged over retrains.
    """
    by_agg: dict[str, list[EvalReport]] = {}
    for rep in reports:
        by_agg.setdefault(rep.aggregation, []).append(rep)
    out: dict[str, dict[str, float]] = {}
    for agg, reps in sorted(by_agg.items()):
        lengths = {len(r.aucs) for r in reps}
        if len(lengths) != 1:
            raise ContractViolationError("mean_ranks needs equal retrain counts")
        n_runs = lengths.pop()
        table = np.array([r.aucs for r in reps])  # methods x runs
        ranks = np.stack([_average_ranks(table[:, j]) for j in range(n_runs)], axis=1)
        out[agg] = {rep.method: float(ranks[i].mean()) for i, rep in enumerate(reps)}
    return out


def write_report_json(reports: list[EvalReport], path) -> None:
    payload = {
        "reports": [r.to_dict() for r in reports],
        "mean_ranks": mean_ranks(reports),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_summary_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset,method,aggregation,auc_mean,auc_std,n_runs\n")
        for r in reports:
            fh.write(
                f"{r.dataset},{r.method},{r.aggregation},"
                f"{format(r.mean, '.17g')},{format(r.std, '.17g')},{len(r.aucs)}\n"
            )


def write_method_by_dataset_csv(reports: list[EvalReport], path) -> None:
    """Pivot: one row per (method, aggregation), one column per dataset,
    cells formatted as percent 'mean+-std' over retrains."""
    datasets = sorted({r.dataset for r in reports})
    cells: dict[tuple[str, str], dict[str, str]] = {}
    for r in reports:
        key = (r.method, r.aggregation)
        cells.setdefault(key, {})[r.dataset] = (
            f"{100.0 * r.mean:.2f}+-{100.0 * r.std:.2f}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("method,aggregation," + ",".join(datasets) + "\n")
        for (method, agg) in sorted(cells):
            row = cells[(method, agg)]
            fh.write(
                f"{method},{agg},"
                + ",".join(row.get(ds, "") for ds in datasets)
                + "\n"
            )


@dataclass(frozen=True)
class StudyRow:
    snapshot: int
    method: str
    scenario: str  # "prev" | "next"
    auc: float
    ratio: float


def _study_dataset(target: Snapshot, eligible: set[int], rng, directed: bool):
    positives = sorted(
        {
            _canonical(u, v, directed)
            for u, v, _, _ in target.edges
            if u in eligible and v in eligible
        }
    )
    if not positives:
        raise ContractViolationError(
            "no target edge connects two embedded nodes; study undefined"
        )
    forbidden = {_canonical(u, v, directed) for u, v, _, _ in target.edges}
    negatives = sample_negative_pairs(
        np.array(sorted(eligible), dtype=np.int64),
        forbidden,
        len(positives),
        rng,
        directed=directed,
    )
    pairs = np.array(positives + negatives, dtype=np.int64)
    labels = np.concatenate(
        [np.ones(len(positives), dtype=np.int64), np.zeros(len(negatives), dtype=np.int64)]
    )
    # 60/40 per class
    tr, te = [], []
    for offset, count in ((0, len(positives)), (len(positives), len(negatives))):
        perm = rng.permutation(count) + offset
        n_tr = 6 * count // 10
        tr.append(perm[:n_tr])
        te.append(perm[n_tr:])
    return pairs, labels, np.sort(np.concatenate(tr)), np.sort(np.concatenate(te))


def prev_next_study(
    embeddings_by_method: dict[str, list[EmbeddingMatrix]],
    snapshots: list[Snapshot],
    *,
    seed: int = 0,
    baseline: str = "vanilla",
    classifier: LogisticConfig | None = None,
) -> list[StudyRow]:
    """Score each snapshot's embeddings on adjacent snapshots' structure.

    For snapshot t, "prev" predicts snapshot t-1's edges (t >= 1) and "next"
    predicts snapshot t+1's edges (t <= T-2), always restricted to nodes that
    have an embedding row at t. Ratios divide by the baseline method's AUC on
    the identical split, so rows count (T-1) * len(methods) * 2 in total.
    """
    if baseline not in embeddings_by_method:
        raise ContractViolationError(f"baseline method {baseline!r} missing")
    L = len(snapshots)
    if L < 2:
        raise ContractViolationError("study needs at least two snapshots")
    for name, embs in embeddings_by_method.items():
        if len(embs) != L:
            raise ContractViolationError(
                f"method {name!r} has {len(embs)} matrices for {L} snapshots"
            )
    methods = sorted(embeddings_by_method)
    directed = snapshots[0].directed

    rows: list[StudyRow] = []
    for scenario, pairs_ts in (
        ("prev", [(t, t - 1) for t in range(1, L)]),
        ("next", [(t, t + 1) for t in range(L - 1)]),
    ):
        for t, target_idx in pairs_ts:
            ref = embeddings_by_method[baseline][t]
            eligible = set(int(v) for v in ref.ids)
            for name in methods:
                ids = embeddings_by_method[name][t].ids
                if not np.array_equal(ids, ref.ids):
                    raise ContractViolationError(
                        f"method {name!r} covers different nodes at snapshot {t}"
                    )
            rng = np.random.default_rng([seed, 0 if scenario == "prev" else 1, t])
            pairs, labels, tr_idx, te_idx = _study_dataset(
                snapshots[target_idx], eligible, rng, directed
            )
            aucs = {}
            for name in methods:
                emb = embeddings_by_method[name][t]
                model = train_logistic(
                    hadamard_features(emb, pairs[tr_idx]), labels[tr_idx], classifier
                )
                scores = model.decision(hadamard_features(emb, pairs[te_idx]))
                aucs[name] = auc(scores, labels[te_idx])
            base = aucs[baseline]
            if base <= 0.0:
                raise ContractViolationError("baseline AUC is zero; ratios undefined")
            for name in methods:
                rows.append(
                    StudyRow(
                        snapshot=t,
                        method=name,
                        scenario=scenario,
                        auc=aucs[name],
                        ratio=aucs[name] / base,
                    )
                )
    return rows


def write_study_csv(rows: list[StudyRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("snapshot,method,scenario,ratio\n")
        for r in rows:
            fh.write(f"{r.snapshot},{r.method},{r.scenario},{format(r.ratio, '.17g')}\n")
