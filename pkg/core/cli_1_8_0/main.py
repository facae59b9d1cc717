"""
Command-line entry point: ``i2mv <command>`` or ``python -m core.cli_1_8_0``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
3 data or file-format error.
"""

import argparse
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from core.cli_1_8_0.gradcheck import TINY_MODEL, check_model_gradients
from core.cli_1_8_0.run_config import RunConfig, add_config_flags, build_run_config, flag_overrides, read_config_file
from core.data_1_2_0.embeddings import load_embeddings
from core.data_1_2_0.features import PatchFeatureRecord, load_features
from core.data_1_2_0.reports import save_report
from core.data_1_2_0.synth import SynthSpec, synth_gen, write_synth_bundle
from core.data_1_2_0.views import load_views, save_views
from core.evaluation_1_6_0.evaluator import calibrate_and_eval_gzsl, eval_zsl
from core.evaluation_1_6_0.metrics import format_table
from core.prompting_1_7_0.client import LlmSettings
from core.prompting_1_7_0.generator import generate_views, load_class_list, load_example_pool, merge_views
from core.prompting_1_7_0.planner import plan_prompts
from core.training_1_5_0.sweeps import AXES, SweepData, parse_axis_value, run_sweep
from core.training_1_5_0.trainer import fit, fit_grid, load_model
from core.utils.config import SYNTH_FILES, config
from core.utils.errors import ConfigError, MVFormerError
from core.utils.helpers import atomic_write_bytes, dump_json, format_error_message
from core.utils.logging import configure_logging, get_logger

logger = get_logger(__name__)


def _bundle_path(args: argparse.Namespace, attr: str, key: str) -> Path:
    """An explicit path flag, else the matching file of the --data bundle."""
    value = getattr(args, attr, None)
    if value:
        return Path(value)
    if getattr(args, "data", None):
        return Path(args.data) / SYNTH_FILES[key]
    raise ConfigError(f"--{attr.replace('_', '-')} is required when --data is not given")


def _load_records(paths: Sequence[str]) -> List[PatchFeatureRecord]:
    records: List[PatchFeatureRecord] = []
    for path in paths:
        records += load_features(path)
    return records


def _options_header(args: argparse.Namespace, **resolved) -> str:
    """Every parsed option plus whatever the command resolved from files or the environment."""
    options = {key: value for key, value in sorted(vars(args).items()) if key != "handler"}
    return "# effective config\n" + dump_json({"options": options, **resolved}).decode("utf-8")


def _calibration_records(args: argparse.Namespace) -> List[PatchFeatureRecord]:
    """Explicit --heldout-features, else the checkpoint's held-back seen slice plus the val images."""
    if args.heldout_features:
        return _load_records(args.heldout_features)
    held = Path(args.ckpt).parent / config["files"]["heldout"]
    if not held.is_file():
        raise ConfigError(f"--mode gzsl needs --heldout-features or the held-back seen slice {held} written by train")
    return load_features(held) + load_features(_bundle_path(args, "val_features", "VAL"))


def _run_config(args: argparse.Namespace, base: Optional[Dict] = None) -> RunConfig:
    run_config = build_run_config(args.config, flag_overrides(args), base=base)
    print(run_config.header())
    return run_config


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    run_config = _run_config(args)
    table = load_embeddings(_bundle_path(args, "embeddings", "EMBEDDINGS"))
    corpus = load_views(_bundle_path(args, "views", "VIEWS"), allow_ragged_views=run_config.model.allow_ragged_views)
    train = load_features(_bundle_path(args, "features", "TRAIN"))
    val = load_features(_bundle_path(args, "val_features", "VAL"))
    if args.grid:
        weight, state, _ = fit_grid(train, val, corpus, table, run_config.model, run_config.train, args.out)
        print(f"best lambda_local={weight:g} {run_config.train.selection_metric}={state.best_score:.4f} "
              f"(epoch {state.best_epoch})")
    else:
        state = fit(train, val, corpus, table, run_config.model, run_config.train, args.out)
        print(f"best {run_config.train.selection_metric}={state.best_score:.4f} (epoch {state.best_epoch})")
    print(f"checkpoint: {Path(args.out) / config['files']['checkpoint']}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    heldout = _calibration_records(args) if args.mode == "gzsl" else None
    model, echo = load_model(args.ckpt)
    print(_options_header(args, checkpoint=echo))
    table = load_embeddings(_bundle_path(args, "embeddings", "EMBEDDINGS"))
    corpus = load_views(_bundle_path(args, "views", "VIEWS"), allow_ragged_views=model.config.allow_ragged_views)
    test = _load_records(args.features)
    if args.mode == "zsl":
        report = eval_zsl(model, test, corpus, table)
    else:
        report, sweep = calibrate_and_eval_gzsl(model, heldout, test, corpus, table)
        print(f"gamma*={sweep.gamma_star:.4f} (best calibration H={max(sweep.H):.4f})")
    print(format_table({Path(args.ckpt).parent.name or "model": report}))
    if args.out:
        save_report(report, args.out)
        print(f"report: {args.out}")
    return 0


def cmd_promptgen(args: argparse.Namespace) -> int:
    pool = load_example_pool(args.examples, f=args.views, k=args.shots)
    splits = load_class_list(args.classes)
    plan = plan_prompts(pool, list(splits), args.type, schedule=args.schedule)
    settings = LlmSettings()
    print(_options_header(args, llm=settings.model_dump(exclude={"api_key"})))
    print(f"# {len(plan)} prompts for {len(splits)} classes (f={plan.f}, k={plan.k}, schedule={plan.schedule}, "
          f"temperature={args.temperature})")
    if args.plan:
        atomic_write_bytes(args.plan, dump_json({
            "type_word": plan.type_word, "f": plan.f, "k": plan.k, "schedule": plan.schedule,
            "prompts": [asdict(p) for p in plan],
        }))
    corpus = generate_views(plan, splits, args.cache, settings=settings, mock_dir=args.mock,
                            temperature=args.temperature)
    if args.merge:
        corpus = merge_views(corpus, load_views(args.merge, allow_ragged_views=True))
    save_views(corpus, args.out)
    print(f"views: {args.out}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    low, high = config["numerics"]["grad_check_epsilon_range"]
    if not low <= args.epsilon <= high:
        logger.warning(f"epsilon={args.epsilon:g} is outside [{low:g}, {high:g}]; the check may be unreliable")
    run_config = _run_config(args, base={"model": TINY_MODEL})
    broken = args.break_grad if args.break_grad is not None else []
    if args.break_grad is not None and not broken:
        broken = ["matmul"]
    error = check_model_gradients(run_config.model, epsilon=args.epsilon, broken_ops=broken)
    tolerance = config["numerics"]["grad_check_tolerance"]
    passed = error <= tolerance
    print(f"max relative error {error:.3e} ({'ok' if passed else 'FAILED'}, tolerance {tolerance:g})")
    return 0 if passed else 1


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec()
    if args.spec:
        payload = read_config_file(args.spec)
        # a synth_spec.json written by an earlier run nests the settings under "spec"
        spec = SynthSpec.model_validate(payload.get("spec", payload) if "seed" in payload else payload)
    print("# synth spec\n" + dump_json({"seed": args.seed, "spec": spec.model_dump()}).decode("utf-8"))
    paths = write_synth_bundle(synth_gen(args.seed, spec), args.out)
    for path in paths.values():
        print(path)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    run_config = _run_config(args)
    table = load_embeddings(_bundle_path(args, "embeddings", "EMBEDDINGS"))
    corpus = load_views(_bundle_path(args, "views", "VIEWS"), allow_ragged_views=run_config.model.allow_ragged_views)
    data = SweepData(
        train=load_features(_bundle_path(args, "features", "TRAIN")),
        val=load_features(_bundle_path(args, "val_features", "VAL")),
        test=load_features(_bundle_path(args, "test_features", "TEST_UNSEEN")),
        corpus=corpus,
        table=table,
    )
    values = [parse_axis_value(args.axis, raw) for raw in args.values]
    result = run_sweep(args.axis, values, args.seeds, run_config.model, run_config.train, data, args.out)
    print(result.format())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_data_flags(parser: argparse.ArgumentParser, test: bool = False) -> None:
    parser.add_argument("--data", help="Directory written by `synth`; supplies any path flag left out")
    parser.add_argument("--views", help="View corpus (JSON)")
    parser.add_argument("--embeddings", help="Word-embedding text file")
    parser.add_argument("--features", help="Training image features (seen classes)")
    parser.add_argument("--val-features", dest="val_features", help="Validation image features (val classes)")
    if test:
        parser.add_argument("--test-features", dest="test_features", help="Test image features (unseen classes)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="i2mv", description="Multi-view zero-shot image classification")
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    parser.add_argument("--log-file", default=config["files"]["log_file"], help="Also write logs to this file")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train on seen classes and keep the best checkpoint")
    _add_data_flags(train)
    train.add_argument("--config", help="JSON file with `model` and `train` sections")
    train.add_argument("--out", required=True, help="Output directory")
    train.add_argument("--grid", action="store_true", help="Select lambda_local over train.lambda_grid")
    add_config_flags(train)
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", help="ZSL or GZSL evaluation of a checkpoint")
    evaluate.add_argument("--ckpt", required=True, help="Checkpoint written by `train`")
    evaluate.add_argument("--features", nargs="+", required=True, help="Test feature file(s)")
    evaluate.add_argument("--data", help="Directory written by `synth`; supplies --views, --embeddings and --val-features")
    evaluate.add_argument("--views", help="View corpus (JSON)")
    evaluate.add_argument("--embeddings", help="Word-embedding text file")
    evaluate.add_argument("--val-features", dest="val_features",
                          help="Validation image features joined to the held-back seen slice (gzsl)")
    evaluate.add_argument("--mode", choices=("zsl", "gzsl"), default="zsl")
    evaluate.add_argument("--heldout-features", dest="heldout_features", nargs="+",
                          help="Calibration feature files replacing the checkpoint's held-back slice plus val (gzsl)")
    evaluate.add_argument("--out", help="Write the metric report here")
    evaluate.set_defaults(handler=cmd_eval)

    promptgen = commands.add_parser("promptgen", help="Generate class views with a language model")
    promptgen.add_argument("--classes", required=True, help="JSON {\"classes\": [{\"name\", \"split\"}]}")
    promptgen.add_argument("--examples", required=True, help="JSON {\"examples\": [{\"class_name\", \"description\"}]}")
    promptgen.add_argument("--type", required=True, help="Type word used in the prompt, e.g. \"animals\"")
    promptgen.add_argument("--shots", type=int, default=2, help="Examples per prompt (k)")
    promptgen.add_argument("--views", type=int, default=3, help="Views per class (f)")
    promptgen.add_argument("--temperature", type=float, default=config["llm"]["temperature"])
    promptgen.add_argument("--schedule", choices=("unique", "repeated"), default="unique")
    promptgen.add_argument("--cache", required=True, help="Cache directory")
    promptgen.add_argument("--mock", help="Serve fixtures from this directory instead of calling LLM_ENDPOINT")
    promptgen.add_argument("--merge", help="View corpus whose views are appended after the generated ones")
    promptgen.add_argument("--plan", help="Also write the prompt plan here")
    promptgen.add_argument("--out", required=True, help="Output view corpus (JSON)")
    promptgen.set_defaults(handler=cmd_promptgen)

    gradcheck = commands.add_parser("gradcheck", help="Finite-difference check of the model gradients")
    gradcheck.add_argument("--config", help="JSON file whose `model` section overrides the tiny model")
    gradcheck.add_argument("--epsilon", type=float, default=config["numerics"]["grad_check_epsilon"])
    gradcheck.add_argument("--break-grad", dest="break_grad", nargs="*", metavar="OP",
                           help="Double the gradient of these operations (default: matmul)")
    add_config_flags(gradcheck)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    synth = commands.add_parser("synth", help="Write a synthetic dataset bundle")
    synth.add_argument("--out", required=True, help="Output directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--spec", help="JSON file of generator settings")
    synth.set_defaults(handler=cmd_synth)

    sweep = commands.add_parser("sweep", help="Retrain over one configuration axis and several seeds")
    _add_data_flags(sweep, test=True)
    sweep.add_argument("--axis", required=True, choices=AXES)
    sweep.add_argument("--values", nargs="+", required=True)
    sweep.add_argument("--seeds", nargs="+", type=int, default=[0])
    sweep.add_argument("--config", help="JSON file with `model` and `train` sections")
    sweep.add_argument("--out", required=True, help="Output directory")
    add_config_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level.upper(), args.log_file)
    try:
        return args.handler(args)
    except MVFormerError as e:
        logger.error(format_error_message(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(format_error_message(f"invalid configuration: {e}"))
        return 2
    except Exception as e:
        logger.exception(format_error_message(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
