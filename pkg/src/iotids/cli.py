"""Command-line entry point: ``iotids <command> [options]``.

Every command reads the shipped defaults, then ``--config``, then ``--set``
overrides and ``--seed``.  Failures print one ``error: <kind>: <message>``
line on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import nn
from .config import PipelineConfig, config_to_text, load_config
from .dataset import load_dataset, save_dataset
from .errors import ConfigError, IotIdsError, InvalidInputError
from .features import N_FEATURES, extract_windows
from .gradcheck import run_suite
from .pipeline import evaluate_model, prepare, run_pipeline, train_model, write_report
from .simulator import read_trace, simulate, write_trace

EXIT_ERROR = 1
EXIT_CONFIG = 2


def _common_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="flat key=value config file")
    parser.add_argument("--seed", type=int, metavar="N", default=default,
                        help="override the scenario, split and training seeds")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", dest="overrides",
                        default=default, help="override one config key (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def _parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(item, "expected KEY=VALUE")
        out[key.strip()] = value.strip()
    return out


def _config(args, **path_overrides) -> PipelineConfig:
    overrides = _parse_overrides(args.overrides)
    for key, value in path_overrides.items():
        if value is not None:
            overrides[f"paths.{key}"] = str(value)
    return load_config(args.config, overrides, args.seed)


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(str(p))
    return p


def _mkparent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def cmd_simulate(args) -> int:
    cfg = _config(args, trace=args.out)
    trace = simulate(cfg.scenario)
    _mkparent(cfg.paths.trace)
    write_trace(trace, cfg.paths.trace)
    print(f"packets={len(trace)} path={cfg.paths.trace}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args, trace=args.trace, dataset=args.out)
    trace = read_trace(_require_file(cfg.paths.trace))
    samples = extract_windows(trace, cfg.window)
    _mkparent(cfg.paths.dataset)
    save_dataset(samples, cfg.paths.dataset, cfg.window)
    n_attack = sum(s.label for s in samples)
    print(f"samples={len(samples)} attack={n_attack} normal={len(samples) - n_attack} path={cfg.paths.dataset}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args, dataset=args.dataset, model=args.model_out, history=args.history_out)
    samples = load_dataset(_require_file(cfg.paths.dataset))
    data = prepare(samples, cfg.split)
    result = train_model(data, cfg.layer_sizes, cfg.train)
    for p in (cfg.paths.model, cfg.paths.history):
        _mkparent(p)
    nn.save_model(result.model, cfg.paths.model)
    nn.write_history(result.history, cfg.paths.history)
    last = result.history[-1]
    print(f"epochs={len(result.history)} best_epoch={result.best_epoch} "
          f"train_mse={last.train_mse:.6g} val_mse={last.val_mse:.6g} path={cfg.paths.model}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args, dataset=args.dataset, model=args.model,
                  report_text=args.report_text, report_csv=args.report_csv)
    samples = load_dataset(_require_file(cfg.paths.dataset))
    model = nn.load_model(_require_file(cfg.paths.model))
    if model.layer_sizes[0] != N_FEATURES:
        raise InvalidInputError(f"model input width {model.layer_sizes[0]} != {N_FEATURES} features")
    report = evaluate_model(model, prepare(samples, cfg.split), cfg.train.threshold)
    for p in (cfg.paths.report_text, cfg.paths.report_csv):
        _mkparent(p)
    write_report(report, cfg.paths.report_text, cfg.paths.report_csv)
    print(f"overall_accuracy={report.overall_accuracy:.6f}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    if args.dump_config:
        print(config_to_text(cfg), end="")
    report = run_pipeline(cfg)
    for name, cm in report.rows():
        print(f"{name}: tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}")
    print(f"overall_accuracy={report.overall_accuracy:.6f}")
    return 0


def cmd_check_gradients(args) -> int:
    seed = 0 if args.seed is None else args.seed
    results = run_suite(seed, args.cases)
    failed = [r for r in results if not r.passed]
    worst = max(r.max_rel_err for r in results)
    for r in failed:
        print(f"FAIL case={r.case} layers={list(r.layer_sizes)} max_rel_err={r.max_rel_err:.3g}")
    status = "pass" if not failed else "fail"
    print(f"check-gradients {status}: {len(results) - len(failed)}/{len(results)} cases, max_rel_err={worst:.3g}")
    return 0 if not failed else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iotids", description=__doc__.split("\n")[0])
    _common_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = argparse.ArgumentParser(add_help=False)
    _common_options(common, suppress=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a packet trace CSV")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", parents=[common], help="window a trace into a dataset CSV")
    p.add_argument("--trace", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", parents=[common], help="train the MLP on a dataset")
    p.add_argument("--dataset", metavar="PATH")
    p.add_argument("--model-out", metavar="PATH")
    p.add_argument("--history-out", metavar="PATH")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="confusion matrices for a trained model")
    p.add_argument("--dataset", metavar="PATH")
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--report-text", metavar="PATH")
    p.add_argument("--report-csv", metavar="PATH")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="run every stage end to end")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config first")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("check-gradients", parents=[common], help="finite-difference gradient check")
    p.add_argument("--cases", type=int, default=100)
    p.set_defaults(func=cmd_check_gradients)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc.kind, str(exc), EXIT_CONFIG)
    except IotIdsError as exc:
        return _fail(exc.kind, str(exc), EXIT_ERROR)
    except FileNotFoundError as exc:
        return _fail("missing-file", exc.filename or str(exc), EXIT_ERROR)
    except OSError as exc:
        return _fail("io", f"{exc.filename}: {exc.strerror}", EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
