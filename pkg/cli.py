"""
Command-line surface.

Every command writes its result files atomically and prints a JSON summary
(always carrying the seed) on stdout. Logs go to stderr. Exit codes:
0 success, 1 internal error, 2 input error, 3 check failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

import core
from core.config import settings
from core.exceptions import DataValidationError, HyperHopException, exit_code_for
from core.hlayer import make_two_branch_dataset
from core.kg import EXCLUSION_MODES, branching_share
from core.models import RunConfig
from data import OutputContext, dumps, iter_jsonl, read_lines, write_json
from data.embedding_repository import FileEmbeddingRepository
from data.graph_repository import FileGraphRepository
from data.question_repository import FileQuestionRepository
from service import set_log_level, set_run_id
from service.analysis_service import AnalysisService
from service.delta_service import DeltaService
from service.graph_service import GraphService
from service.layer_service import LayerService

logger = logging.getLogger(__name__)

RUN_CONFIG_FIELDS = set(RunConfig.model_fields) - {"command", "options"}

graph_repository = FileGraphRepository()
question_repository = FileQuestionRepository()
embedding_repository = FileEmbeddingRepository()
graph_service = GraphService(graph_repository, question_repository)
delta_service = DeltaService()
analysis_service = AnalysisService()
layer_service = LayerService(embedding_repository)


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be at least 1")
    return value


def non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"{value} must be finite and non-negative")
    return value


def float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of numbers")


def _require(config: RunConfig, name: str):
    value = getattr(config, name, None) if name in RunConfig.model_fields else config.options.get(name)
    if value is None:
        raise DataValidationError(f"{config.command} needs --{name.replace('_', '-')}.")
    return value


def _summary(config: RunConfig, **fields) -> dict:
    return {"command": config.command, "seed": config.seed, **fields}


def _layer_curvature(config: RunConfig) -> float:
    if config.options.get("curvature_from"):
        estimate = delta_service.load_estimate(config.options["curvature_from"])
        return analysis_service.initial_curvature(estimate)
    return config.curvature if config.curvature is not None else 1.0


def cmd_delta(config: RunConfig) -> dict:
    path = _require(config, "input")
    if config.metric == "graph":
        graph, _ = graph_service.load_graph(path, config.format, config.strict)
        source = delta_service.graph_source(graph)
    else:
        table = embedding_repository.load_table(path, config.format)
        source = delta_service.embedding_source(table, config.options["embedding_metric"],
                                                config.curvature if config.curvature is not None else 1.0)
    result = delta_service.estimate(source, config.sample_size, config.repeats, config.seed,
                                    config.options["workers"], config.output)
    return _summary(config, sample_size=result.sample_size, repeats=result.repeats, mean=result.mean,
                    std=result.std, curvature=result.curvature, curvature_error=result.curvature_error)


def cmd_walks(config: RunConfig) -> dict:
    graph, _ = graph_service.load_graph(_require(config, "input"), config.format, config.strict)
    heldout = graph_repository.load_walks(config.heldout) if config.heldout else []
    walks, batch = graph_service.hopping_examples(
        graph, config.options["start"], config.hops, config.options["walks_per_start"], config.seed,
        heldout, config.options["exclusion"], config.output, config.options["walks_output"],
        config.options["workers"], config.options["include_short"])
    return _summary(config, walks=len(walks), examples=len(batch.examples), excluded=batch.excluded,
                    short=batch.short_skipped, exclusion=config.options["exclusion"])


def cmd_degree(config: RunConfig) -> dict:
    graph, _ = graph_service.load_graph(_require(config, "input"), config.format, config.strict)
    histogram = graph_service.degree_histogram(graph, config.output)
    return _summary(config, nodes=graph.num_entities, branching_share=branching_share(histogram),
                    histogram={str(k): v for k, v in histogram.items()})


def cmd_evidence(config: RunConfig) -> dict:
    graph, _ = graph_service.load_graph(_require(config, "input"), config.format, config.strict,
                                        add_inverse_relations=True)
    records = question_repository.load_metaqa(_require(config, "questions"))
    mapping = question_repository.load_pair_mapping(config.options["mapping"])
    errors = config.options["errors"] or (config.output + ".errors.jsonl" if config.output else None)
    report = graph_service.metaqa_evidence(graph, records, mapping, config.hops, config.output, errors)
    return _summary(config, records=len(records), chains=len(report.records), failures=len(report.failures),
                    errors=errors)


def cmd_distances(config: RunConfig) -> dict:
    hyperbolic = embedding_repository.load_table(_require(config, "hyperbolic"))
    euclidean = embedding_repository.load_table(_require(config, "euclidean"))
    pairs = question_repository.load_pairs(_require(config, "pairs"))
    c = _require(config, "curvature")
    result = analysis_service.distance_comparison(hyperbolic, euclidean, pairs, c, config.options["in_ball"],
                                                  config.output, config.options["csv"])
    return _summary(config, curvature=c, **result.summary())


def cmd_layer(config: RunConfig) -> dict:
    table = embedding_repository.load_table(_require(config, "input"), config.format)
    if config.options["params"]:
        params = embedding_repository.load_params(config.options["params"])
    else:
        params = layer_service.init_params(config.options["out_dim"], table.dim, _layer_curvature(config),
                                           config.seed)
    report = layer_service.transform(table, params, config.paper_literal_denominator, config.gradcheck,
                                     config.seed, config.output, config.options["save_params"])
    summary = _summary(config, positions=len(table.names), **report["metadata"])
    if "gradcheck" in report:
        summary["gradcheck"] = report["gradcheck"]
    return summary


def cmd_em(config: RunConfig) -> dict:
    records = question_repository.load_predictions(_require(config, "input"))
    return _summary(config, **analysis_service.exact_match(records, config.output))


def cmd_stats(config: RunConfig) -> dict:
    graph, batch = graph_service.load_graph(_require(config, "input"), config.format, config.strict)
    stats = graph_service.graph_stats(graph).model_dump()
    stats.update(duplicates=batch.duplicate_count, skipped=len(batch.skipped))
    if config.output:
        with OutputContext():
            write_json(config.output, stats)
    return _summary(config, **stats)


def cmd_curvature(config: RunConfig) -> dict:
    delta_rel = _require(config, "delta_rel")
    return _summary(config, delta_rel=delta_rel, curvature=delta_service.curvature(delta_rel))


def cmd_train(config: RunConfig) -> dict:
    dataset = make_two_branch_dataset(config.options["samples"], config.options["dim"], config.seed)
    curvatures = config.options["curvatures"] or [_layer_curvature(config)]
    points = layer_service.train(dataset, curvatures, config.options["steps"], config.options["learning_rate"],
                                 config.seed, config.output, config.options["learn_curvature"])
    return _summary(config, points=[p.model_dump() for p in points])


def cmd_split(config: RunConfig) -> dict:
    path = _require(config, "input")
    records = [row for _, row in iter_jsonl(read_lines(path), path)]
    ratios = tuple(config.options["ratios"])
    if len(ratios) != 3:
        raise DataValidationError("--ratios takes three comma-separated numbers.")
    outputs = None
    if config.output:
        outputs = tuple(str(Path(config.output) / f"{name}.jsonl") for name in ("train", "dev", "test"))
    parts = graph_service.split_questions(records, ratios, config.seed, outputs)
    return _summary(config, train=len(parts[0]), dev=len(parts[1]), test=len(parts[2]))


def cmd_subgraph(config: RunConfig) -> dict:
    graph, _ = graph_service.load_graph(_require(config, "input"), config.format, config.strict)
    questions = question_repository.load_questions(_require(config, "questions"))
    errors = config.options["errors"] or (config.output + ".errors.jsonl" if config.output else None)
    result = graph_service.extract_subgraph(graph, questions, config.output, errors)
    stats = graph_service.graph_stats(result.graph)
    return _summary(config, questions=len(questions), nodes=stats.nodes, edges=stats.edges,
                    failures=len(result.failures), errors=errors)


def cmd_parsing(config: RunConfig) -> dict:
    questions = question_repository.load_questions(_require(config, "input"))
    examples = graph_service.parsing_examples(questions, config.hops, config.options["separator"], config.output)
    return _summary(config, examples=len(examples), separator=config.options["separator"])

COMMANDS: Dict[str, Callable[[RunConfig], dict]] = {
    "delta": cmd_delta,
    "walks": cmd_walks,
    "degree": cmd_degree,
    "evidence": cmd_evidence,
    "distances": cmd_distances,
    "layer": cmd_layer,
    "em": cmd_em,
    "stats": cmd_stats,
    "curvature": cmd_curvature,
    "train": cmd_train,
    "split": cmd_split,
    "subgraph": cmd_subgraph,
    "parsing": cmd_parsing,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input file (triples, embeddings, predictions or questions)")
    common.add_argument("--output", help="result file (directory for split)")
    common.add_argument("--seed", type=int, default=settings.seed)
    common.add_argument("--strict", action="store_true", default=settings.strict,
                        help="abort on the first malformed input line")
    common.add_argument("--format", default="auto", choices=["auto", "tsv", "pipe", "jsonl", "text"],
                        help="input format; auto picks by file extension")
    common.add_argument("--workers", type=int, default=settings.workers, help="0 uses every CPU")
    common.add_argument("--log-level", default=settings.log_level)

    parser = argparse.ArgumentParser(prog="hyperhop", description="Hyperbolic multi-hop toolkit.")
    commands = parser.add_subparsers(dest="command", required=True)

    delta = commands.add_parser("delta", parents=[common], help="relative delta-hyperbolicity and curvature")
    delta.add_argument("--metric", choices=["graph", "embedding"], default=settings.metric)
    delta.add_argument("--embedding-metric", choices=["euclidean", "poincare"], default="euclidean")
    delta.add_argument("--sample-size", type=positive_int, default=settings.sample_size)
    delta.add_argument("--repeats", type=positive_int, default=settings.repeats)
    delta.add_argument("--curvature", type=non_negative_float, default=settings.curvature)

    walks = commands.add_parser("walks", parents=[common], help="random walks and hopping examples")
    walks.add_argument("--start", action="append", help="start entity (repeatable; default every entity)")
    walks.add_argument("--hops", type=positive_int, default=settings.hops)
    walks.add_argument("--walks-per-start", type=positive_int, default=1)
    walks.add_argument("--heldout", help="JSON-lines walks to exclude")
    walks.add_argument("--exclusion", choices=EXCLUSION_MODES, default="exact")
    walks.add_argument("--walks-output", help="also write the raw walks here")
    walks.add_argument("--include-short", action="store_true", help="keep walks that hit a dead end")

    commands.add_parser("degree", parents=[common], help="out-degree distribution CSV")
    commands.add_parser("stats", parents=[common], help="node, edge and relation counts")

    evidence = commands.add_parser("evidence", parents=[common], help="MetaQA evidence chains")
    evidence.add_argument("--questions", required=True)
    evidence.add_argument("--mapping", help="pair-to-relation table (default: the packaged one)")
    evidence.add_argument("--errors", help="sidecar file for failed records")
    evidence.add_argument("--hops", type=positive_int, default=settings.hops)

    distances = commands.add_parser("distances", parents=[common], help="ball vs Euclidean distance comparison")
    distances.add_argument("--hyperbolic", required=True)
    distances.add_argument("--euclidean", required=True)
    distances.add_argument("--pairs", required=True)
    distances.add_argument("--curvature", type=non_negative_float, default=settings.curvature)
    distances.add_argument("--in-ball", action="store_true", help="hyperbolic vectors are already ball points")
    distances.add_argument("--csv", help="per-pair rows")

    layer = commands.add_parser("layer", parents=[common], help="Poincaré linear layer over an embedding file")
    layer.add_argument("--params")
    layer.add_argument("--save-params")
    layer.add_argument("--out-dim", type=positive_int, default=2)
    layer.add_argument("--curvature", type=non_negative_float, default=settings.curvature)
    layer.add_argument("--curvature-from", help="delta record whose mean sets the initial curvature")
    layer.add_argument("--gradcheck", action="store_true")
    layer.add_argument("--paper-literal-denominator", action="store_true")

    commands.add_parser("em", parents=[common], help="exact-match score of JSON-lines predictions")

    curvature = commands.add_parser("curvature", parents=[common], help="curvature from a relative delta")
    curvature.add_argument("--delta-rel", type=float, required=True)

    train = commands.add_parser("train", parents=[common], help="toy training and curvature sweep")
    train.add_argument("--curvatures", type=float_list)
    train.add_argument("--curvature", type=non_negative_float, default=settings.curvature)
    train.add_argument("--curvature-from", help="delta record whose mean sets the initial curvature")
    train.add_argument("--learn-curvature", action="store_true", help="train c along with the weights")
    train.add_argument("--steps", type=int, default=500)
    train.add_argument("--learning-rate", type=float, default=0.5)
    train.add_argument("--samples", type=positive_int, default=200)
    train.add_argument("--dim", type=positive_int, default=2)

    split = commands.add_parser("split", parents=[common], help="seeded train/dev/test question split")
    split.add_argument("--ratios", type=float_list, default=[0.8, 0.1, 0.1])

    subgraph = commands.add_parser("subgraph", parents=[common], help="triples on question evidence paths")
    subgraph.add_argument("--questions", required=True)
    subgraph.add_argument("--errors", help="sidecar file for questions without a usable path")

    parsing = commands.add_parser("parsing", parents=[common], help="question to relation-path examples")
    parsing.add_argument("--hops", type=positive_int, default=settings.hops)
    parsing.add_argument("--separator", default=settings.separator, help="joins the target sequence")

    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    known = {k: v for k, v in values.items() if k in RUN_CONFIG_FIELDS and v is not None}
    options = {k: v for k, v in values.items() if k not in RUN_CONFIG_FIELDS and k not in ("command", "log_level")}
    known.setdefault("sample_size", settings.sample_size)
    known.setdefault("repeats", settings.repeats)
    known.setdefault("hops", settings.hops)
    try:
        return RunConfig(command=args.command, options=options, **known)
    except ValidationError as e:
        raise DataValidationError(f"Invalid run configuration: {e.errors()[0]['msg']}") from None


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    set_log_level(args.log_level)
    set_run_id(core.make_run_id())
    try:
        config = run_config(args)
        logger.debug("run config: %s", config.model_dump())
        summary = COMMANDS[config.command](config)
    except HyperHopException as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": e.message}) + "\n")
        return exit_code_for(e)
    except Exception:
        logger.exception("Unhandled error")
        return 1
    sys.stdout.write(dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
