from pathlib import Path
from typing import Any, Optional

from loguru import logger
from pydantic import ValidationError
from result import Ok, Result, is_err

from src.clustering import cluster_members, kmeans, write_cluster_outputs
from src.completion import (
    CompletionModel,
    TrainReport,
    load_completion_model,
    save_completion_model,
    train_completion,
)
from src.contrastive import PretrainReport, build_samples, pretrain
from src.encoders import (
    TextEncoder,
    TokenVocab,
    load_precomputed,
    save_text_encoder,
    write_embeddings,
)
from src.errors import ConfigurationError, CpncError
from src.evaluation import (
    evaluate_with_ranks,
    write_metrics,
    write_rank_dump,
    write_top_candidates,
)
from src.kg import (
    Graph,
    Vocabulary,
    build_graph,
    densify_by_similarity,
    parse_file,
    sparsify,
    write_snapshot,
)
from src.models import (
    ClusterAssignment,
    EmbeddingMatrix,
    KGTuple,
    Metrics,
    RankingResult,
    Split,
    StageName,
    StageRecord,
)
from src.search import NodeSearchCache
from src.settings import ExperimentConfig
from src.utils import (
    FailureKind,
    StageFailure,
    derive_seed,
    return_error_and_log,
    torch_dtype,
)

from .context import MODEL_FILE, SEMANTIC_FILE, RunContext


def stage_error(stage: str, exc: Exception) -> Result[Any, StageFailure]:
    if isinstance(exc, (ConfigurationError, ValidationError)):
        return return_error_and_log(f"{stage}: {exc}", kind=FailureKind.config)
    if not isinstance(exc, CpncError):
        logger.exception(f"{stage} failed unexpectedly")
    return return_error_and_log(f"{stage}: {exc}")


def _check_paths(config: ExperimentConfig, *required: str) -> Result[None, StageFailure]:
    checked = config.validate_paths(*required)
    if is_err(checked):
        return return_error_and_log(
            "; ".join(checked.err_value), kind=FailureKind.config
        )
    return Ok(None)


def require_k(config: ExperimentConfig, k: Optional[int]) -> int:
    k = k if k is not None else config.clustering.k
    if k is None:
        raise ConfigurationError("the cluster count is required (--k or clustering.k)")
    return k


def compute_semantics(
    config: ExperimentConfig, graph: Graph
) -> tuple[EmbeddingMatrix, Optional[TextEncoder], Optional[PretrainReport]]:
    """E_sem from a precomputed file, or from a freshly pretrained text encoder."""
    if config.encoder.precomputed_path:
        e_sem = load_precomputed(
            config.encoder.precomputed_path, graph.nodes, case_fold=config.kg.case_fold
        )
        return e_sem, None, None

    cfg = config.pretrain
    # valid/test-only tokens stay unknown
    seen = {node for edge in graph.edges(Split.train) for node in (edge.head, edge.tail)}
    encoder = TextEncoder(
        TokenVocab.build(graph.node_text(node) for node in sorted(seen)),
        d_sem=config.encoder.d_sem,
        use_projection_head=config.encoder.use_projection_head,
        seed=derive_seed(cfg.seed, "init"),
        dtype=torch_dtype(config.dtype),
    )
    samples = build_samples(graph, cfg.seed, cfg.max_rejection_attempts)
    encoder, report = pretrain(encoder, samples, cfg, graph.nodes, graph)
    return encoder.encode_all(graph.nodes), encoder, report


def cluster_semantics(
    config: ExperimentConfig, e_sem: EmbeddingMatrix, k: int
) -> ClusterAssignment:
    cfg = config.clustering
    return kmeans(
        e_sem,
        k,
        cfg.seed,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        n_init=cfg.n_init,
        normalize=cfg.normalize_before_clustering,
    )


def fit_model(
    config: ExperimentConfig,
    graph: Graph,
    e_sem: Optional[EmbeddingMatrix],
    assignment: Optional[ClusterAssignment],
    log_path: Optional[Path] = None,
) -> tuple[CompletionModel, TrainReport]:
    return train_completion(
        graph,
        e_sem,
        assignment,
        config.train,
        config.gcn,
        d_sem=config.encoder.d_sem,
        dtype=torch_dtype(config.dtype),
        log_path=log_path,
    )


def evaluation_tuples(graph: Graph) -> list[KGTuple]:
    tuples = graph.edges(Split.test, include_inverse=False)
    if not tuples:
        tuples = graph.edges(Split.valid, include_inverse=False)
    if not tuples:
        raise ConfigurationError("the graph has neither test nor valid tuples to evaluate")
    return tuples


def score_model(
    config: ExperimentConfig, model: CompletionModel, graph: Graph
) -> tuple[Metrics, list[RankingResult]]:
    return evaluate_with_ranks(
        model,
        evaluation_tuples(graph),
        graph,
        setting=config.eval.setting,
        tie_policy=config.eval.tie_policy,
        hits_at=config.eval.hits_at,
    )


def run_ingest(ctx: RunContext) -> Result[StageRecord, StageFailure]:
    checked = _check_paths(ctx.config, "train")
    if is_err(checked):
        return checked

    try:
        paths, kg = ctx.config.paths, ctx.config.kg
        vocab = Vocabulary(case_fold=kg.case_fold)
        train, vocab = parse_file(paths.train, vocab, kg.case_fold)
        valid, test = [], []
        if paths.valid:
            valid, vocab = parse_file(paths.valid, vocab, kg.case_fold)
        if paths.test:
            test, vocab = parse_file(paths.test, vocab, kg.case_fold)

        graph = build_graph(train, vocab, kg.add_inverse, valid=valid, test=test)
        files = write_snapshot(graph, ctx.stage_dir(StageName.ingest), ctx.config.echo())
        return Ok(ctx.record(StageName.ingest, files, graph_source=True))
    except Exception as exc:
        return stage_error("ingest", exc)


def run_pretrain(ctx: RunContext) -> Result[StageRecord, StageFailure]:
    checked = _check_paths(ctx.config)
    if is_err(checked):
        return checked

    try:
        graph = ctx.graph()
        directory = ctx.stage_dir(StageName.pretrain)
        e_sem, encoder, report = compute_semantics(ctx.config, graph)

        files = {"semantic": str(directory / SEMANTIC_FILE)}
        write_embeddings(e_sem, [node.text for node in graph.nodes], files["semantic"])
        if encoder is not None:
            files["encoder"] = str(directory / "encoder.ckpt")
            save_text_encoder(encoder, files["encoder"])
        files["metrics"] = ctx.write_json(
            StageName.pretrain,
            "pretrain_metrics.json",
            {
                "report": report.model_dump() if report else None,
                "precomputed": ctx.config.encoder.precomputed_path,
                "config": ctx.config.echo(),
            },
        )
        return Ok(ctx.record(StageName.pretrain, files))
    except Exception as exc:
        return stage_error("pretrain", exc)


def run_densify(
    ctx: RunContext, top_k: Optional[int] = None, min_sim: Optional[float] = None
) -> Result[StageRecord, StageFailure]:
    try:
        kg = ctx.config.kg
        top_k = top_k if top_k is not None else kg.densify_top_k
        min_sim = min_sim if min_sim is not None else kg.densify_min_sim

        graph = ctx.graph()
        densified = densify_by_similarity(graph, ctx.semantic(graph), top_k, min_sim)
        files = write_snapshot(
            densified, ctx.stage_dir(StageName.densify), ctx.config.echo()
        )
        return Ok(ctx.record(StageName.densify, files, graph_source=True))
    except Exception as exc:
        return stage_error("densify", exc)


def run_sparsify(ctx: RunContext, fraction: float) -> Result[StageRecord, StageFailure]:
    try:
        graph = ctx.graph()
        sparse = sparsify(graph, fraction, derive_seed(ctx.config.seed, "sparsify"))
        files = write_snapshot(
            sparse,
            ctx.stage_dir(StageName.sparsify),
            {**ctx.config.echo(), "sparsify_fraction": fraction},
        )
        return Ok(ctx.record(StageName.sparsify, files, graph_source=True))
    except Exception as exc:
        return stage_error("sparsify", exc)


def run_cluster(ctx: RunContext, k: Optional[int] = None) -> Result[StageRecord, StageFailure]:
    try:
        k = require_k(ctx.config, k)
        graph = ctx.graph()
        assignment = cluster_semantics(ctx.config, ctx.semantic(graph), k)
        files = write_cluster_outputs(
            assignment, graph.nodes, ctx.stage_dir(StageName.cluster)
        )
        return Ok(ctx.record(StageName.cluster, files))
    except Exception as exc:
        return stage_error("cluster", exc)


def run_train(ctx: RunContext) -> Result[StageRecord, StageFailure]:
    try:
        cfg = ctx.config.train
        graph = ctx.graph()
        e_sem = ctx.semantic(graph) if cfg.use_cp else None
        assignment = ctx.assignment(graph) if cfg.use_nc else None
        directory = ctx.stage_dir(StageName.train)

        model, report = fit_model(
            ctx.config, graph, e_sem, assignment, log_path=directory / "train_log.jsonl"
        )
        files = {
            "model": str(directory / MODEL_FILE),
            "log": str(directory / "train_log.jsonl"),
        }
        save_completion_model(model, files["model"], {"config": ctx.config.echo()})
        files["report"] = ctx.write_json(
            StageName.train,
            "train_report.json",
            {
                "best_epoch": report.best_epoch,
                "best_dev_mrr": report.best_dev_mrr,
                "epochs_run": report.epochs_run,
                "stopped_early": report.stopped_early,
                "dev_mrr_trace": report.dev_mrr_trace,
                "config": ctx.config.echo(),
            },
        )
        return Ok(ctx.record(StageName.train, files))
    except Exception as exc:
        return stage_error("train", exc)


def run_eval(ctx: RunContext) -> Result[StageRecord, StageFailure]:
    try:
        cfg = ctx.config.eval
        graph = ctx.graph()
        checkpoint = ctx.require(StageName.train).files["model"]
        model = load_completion_model(checkpoint, graph, torch_dtype(ctx.config.dtype))
        metrics, results = score_model(ctx.config, model, graph)

        directory = ctx.stage_dir(StageName.eval)
        files = {"metrics": str(directory / "eval_metrics.json")}
        write_metrics(
            metrics,
            files["metrics"],
            setting=str(cfg.setting),
            tie_policy=str(cfg.tie_policy),
            checkpoint=Path(checkpoint).name,
            config=ctx.config.echo(),
        )
        if cfg.dump_ranks:
            files["ranks"] = str(directory / "ranks.tsv")
            write_rank_dump(results, graph, files["ranks"])
        if cfg.top_n_export > 0:
            files["top_candidates"] = str(directory / "top_candidates.tsv")
            write_top_candidates(
                model,
                evaluation_tuples(graph),
                graph,
                files["top_candidates"],
                cfg.top_n_export,
            )
        return Ok(ctx.record(StageName.eval, files))
    except Exception as exc:
        return stage_error("eval", exc)


def run_inspect(
    ctx: RunContext, query: str, limit: int = 5
) -> Result[list[dict[str, Any]], StageFailure]:
    """Fuzzy node lookup, with cluster mates once clustering has run."""
    try:
        graph = ctx.graph()
        assignment = (
            ctx.assignment(graph) if StageName.cluster in ctx.manifest.stages else None
        )
        matches = NodeSearchCache(graph.nodes).search(query, limit=limit)
        if not matches:
            return return_error_and_log(f"inspect: no node resembles {query!r}")

        rows = []
        for match in matches:
            row: dict[str, Any] = {
                "node": match.text,
                "score": round(match.score, 2),
                "degree": graph.degree(match.node_id),
            }
            if assignment is not None:
                cluster = int(assignment.assignment[match.node_id])
                row["cluster"] = cluster
                row["cluster_mates"] = [
                    graph.node_text(int(member))
                    for member in cluster_members(assignment, cluster)
                    if member != match.node_id
                ]
            rows.append(row)
        return Ok(rows)
    except Exception as exc:
        return stage_error("inspect", exc)
