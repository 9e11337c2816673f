import argparse
import json
import sys
from typing import Any, Callable, Optional, Sequence

from loguru import logger
from pydantic import ValidationError
from result import Result, is_err

from src.errors import CpncError
from src.gradcheck import Component, run_gradcheck
from src.settings import EvalSetting, GcnInitMode, TiePolicy, load_config
from src.utils import (
    FailureKind,
    StageFailure,
    configure_logging,
    configure_torch,
    seed_everything,
)

from .context import RunContext
from .stages import (
    run_cluster,
    run_densify,
    run_eval,
    run_ingest,
    run_inspect,
    run_pretrain,
    run_sparsify,
    run_train,
)
from .sweeps import sweep_k, sweep_sparsity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class CpncArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration error code instead of argparse's 2."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_CONFIG)


def _int_list(value: str) -> list[int]:
    return [int(item) for item in value.split(",") if item.strip()]


def _float_list(value: str) -> list[float]:
    return [float(item) for item in value.split(",") if item.strip()]


def _name_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def build_parser() -> CpncArgumentParser:
    common = CpncArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML experiment config")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--threads", type=int, help="bound on intra-op threads")
    common.add_argument("--out-dir", help="artifact directory")
    common.add_argument("--log-level", help="loguru level, e.g. DEBUG")

    ablation = CpncArgumentParser(add_help=False)
    ablation.add_argument("--no-cp", action="store_true", help="random frozen E_sem")
    ablation.add_argument("--no-nc", action="store_true", help="zero latent concepts")
    ablation.add_argument("--gcn-init", choices=[m.value for m in GcnInitMode])
    ablation.add_argument("--k", type=int, help="cluster count")
    ablation.add_argument("--raw", action="store_true", help="raw instead of filtered ranking")

    parser = CpncArgumentParser(
        prog="cpnc", description="Commonsense knowledge graph completion"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CpncArgumentParser)

    sub.add_parser("ingest", parents=[common], help="parse TSV splits into a graph snapshot")
    sub.add_parser("pretrain", parents=[common], help="contrastive node-text pretraining")
    sub.add_parser("cluster", parents=[common, ablation], help="k-means latent concepts")
    sub.add_parser("train", parents=[common, ablation], help="train the completion model")
    sub.add_parser("eval", parents=[common, ablation], help="rank test tuples")

    sparsify = sub.add_parser("sparsify", parents=[common], help="drop a fraction of train edges")
    sparsify.add_argument("--fraction", type=float, required=True)

    densify = sub.add_parser("densify", parents=[common], help="add SIM edges between similar nodes")
    densify.add_argument("--top-k", type=int)
    densify.add_argument("--min-sim", type=float)

    inspect = sub.add_parser("inspect", parents=[common], help="fuzzy node lookup")
    inspect.add_argument("query")
    inspect.add_argument("--limit", type=int, default=5)

    sweep_ks = sub.add_parser("sweep-k", parents=[common, ablation], help="MRR per cluster count")
    sweep_ks.add_argument("--ks", type=_int_list, help="comma-separated cluster counts")

    sweep_fr = sub.add_parser(
        "sweep-sparsity", parents=[common, ablation], help="MRR per removed-edge fraction"
    )
    sweep_fr.add_argument("--fractions", type=_float_list, help="comma-separated fractions")

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient suite")
    gradcheck.add_argument(
        "--components",
        type=_name_list,
        default=[c.value for c in Component],
        help="comma-separated subset of " + ",".join(c.value for c in Component),
    )
    return parser


def config_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    sections: dict[str, dict[str, Any]] = {}

    def put(section: Optional[str], key: str, value: Any) -> None:
        if value is None:
            return
        if section is None:
            overrides[key] = value
        else:
            sections.setdefault(section, {})[key] = value

    put(None, "seed", args.seed)
    put(None, "threads", args.threads)
    put(None, "log_level", args.log_level)
    if getattr(args, "out_dir", None):
        put("paths", "artifact_dir", args.out_dir)
    if getattr(args, "no_cp", False):
        put("train", "use_cp", False)
    if getattr(args, "no_nc", False):
        put("train", "use_nc", False)
    put("gcn", "init_mode", getattr(args, "gcn_init", None))
    put("clustering", "k", getattr(args, "k", None))
    if getattr(args, "raw", False):
        put("eval", "setting", EvalSetting.raw.value)
    put("sweep", "ks", getattr(args, "ks", None))
    put("sweep", "fractions", getattr(args, "fractions", None))

    overrides.update(sections)
    return overrides


def _report(result: Result[Any, StageFailure]) -> int:
    if is_err(result):
        failure: StageFailure = result.err_value
        sys.stderr.write(f"{failure}\n")
        return EXIT_CONFIG if failure.kind == FailureKind.config else EXIT_RUNTIME
    return EXIT_OK


def _gradcheck(args: argparse.Namespace, seed: int) -> int:
    unknown = [name for name in args.components if name not in Component.__members__]
    if unknown:
        sys.stderr.write(f"unknown gradcheck components: {', '.join(unknown)}\n")
        return EXIT_CONFIG

    report = run_gradcheck(args.components, seed=seed)
    for component in report.components:
        status = "PASS" if component.passed else "FAIL"
        line = f"{component.component}\t{status}\tmax_rel_error={component.max_rel_error:.3e}"
        if component.error:
            line += f"\terror={component.error}"
        print(line)
        for check in component.tensors:
            print(f"  {check.name}\t{check.max_rel_error:.3e}")
    return EXIT_OK if report.passed else EXIT_RUNTIME


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point: returns 0 on success, 1 on config errors, 2 on runtime errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = load_config(args.config, config_overrides(args))
    except (ValidationError, OSError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG

    configure_logging(config.log_level, config.log_path)
    seed_everything(config.seed)
    configure_torch(config.threads)

    if args.command == "gradcheck":
        return _gradcheck(args, config.seed)

    try:
        ctx = RunContext.open(config)
    except CpncError as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return EXIT_RUNTIME

    handlers: dict[str, Callable[[], Result[Any, StageFailure]]] = {
        "ingest": lambda: run_ingest(ctx),
        "pretrain": lambda: run_pretrain(ctx),
        "cluster": lambda: run_cluster(ctx),
        "train": lambda: run_train(ctx),
        "eval": lambda: run_eval(ctx),
        "sparsify": lambda: run_sparsify(ctx, args.fraction),
        "densify": lambda: run_densify(ctx, args.top_k, args.min_sim),
        "inspect": lambda: run_inspect(ctx, args.query, args.limit),
        "sweep-k": lambda: sweep_k(ctx, config.sweep.ks),
        "sweep-sparsity": lambda: sweep_sparsity(ctx, config.sweep.fractions),
    }
    result = handlers[args.command]()
    if args.command == "inspect" and not is_err(result):
        print(json.dumps(result.ok_value, indent=2))
    elif not is_err(result):
        logger.info(f"{args.command} done")
    return _report(result)


def main() -> None:
    sys.exit(run(sys.argv[1:]))
