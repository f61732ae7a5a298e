#!/usr/bin/env python

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, TextIO

import numpy as np
import yaml

import common.config_provider as config_provider
from arena.arena_config import ArenaConfig, CONFIG_KEYS as ARENA_CONFIG_KEYS
from common.config_provider import CastFn, ConfigError
from common.framing import FramingError
from evaluation.harness import SENSOR_MASKS, EvalSuite, evaluate, summarize, write_reports, write_summary
from evaluation.policy import CheckpointPolicy, Policy, RandomPolicy
from fusion.architecture import ARCHITECTURE_DIMS, ArchitectureDims, ArchitectureId, Merge, audit
from fusion.architecture_registrar import ArchitectureMismatchError, build, load_network, registrar
from replay.experience_pool import CONFIG_KEYS as POOL_CONFIG_KEYS, PoolConfig
from replay.pool_file import PoolFileWriter, pool_files
from train.refine import RefineSession, generate_refine_corpus
from train.session import TrainingSession
from train.train_config import REFINE_CONFIG_KEYS, TRAIN_CONFIG_KEYS, RefineConfig, TrainConfig

# YAML config keys
LOGGING_LEVEL_KEY = "logging_level"
SEED_KEY = "seed"
ARCHITECTURE_KEY = "architecture"
EVAL_ROOT_PATH = ("eval",)
EVAL_CONFIG_KEYS = ("suite", "workers")

CONFIG_SCHEMA = {
    LOGGING_LEVEL_KEY: None,
    SEED_KEY: None,
    ARCHITECTURE_KEY: None,
    "arena": ARENA_CONFIG_KEYS,
    "pool": POOL_CONFIG_KEYS,
    "train": TRAIN_CONFIG_KEYS,
    "refine": REFINE_CONFIG_KEYS,
    "eval": EVAL_CONFIG_KEYS,
}

# Global defaults
DEFAULT_CONFIG_PATH = "resources/desk.yml"
DEFAULT_SUITE_PATH = "resources/eval_suite.yml"
DEFAULT_OUTPUT_ROOT = "runs"
OUTPUT_ROOT_ENV = "FUSION_RL_OUTPUT_ROOT"
MANIFEST_FILE = "manifest.yml"
CORPUS_DIR = "corpus"
TRAJECTORY_DIR = "trajectories"

# Exit codes
EXIT_OK = 0
EXIT_AUDIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

_log = logging.getLogger("fusion_rl")


class RunManifest(NamedTuple):
    command: str
    config_path: Optional[str]
    output_dir: str
    seed: int
    architecture: Optional[str]
    arguments: Dict[str, Any]
    config: Dict[str, Any]

    def to_yaml(self) -> str:
        return yaml.safe_dump(self._asdict(), sort_keys=False)


def create_run_dir(root: Path, name: str, manifest: RunManifest) -> Path:
    """
    Creates `root/name` (or `root/name-<n>` when taken) by renaming a temporary directory that already holds the
    manifest, so a run directory is never observed without one.
    """
    root.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{name}.", dir=root))
    suffix = 0
    while True:
        final = root / (name if suffix == 0 else f"{name}-{suffix}")
        if not final.exists():
            break
        suffix += 1
    manifest = manifest._replace(output_dir=str(final))
    (tmp / MANIFEST_FILE).write_text(manifest.to_yaml())
    tmp.rename(final)
    _log.info(f"Created run directory {final}")
    return final


def _output_root(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)


def _seed() -> int:
    return config_provider.get_value([SEED_KEY], 0, CastFn.to_int)


def _architecture() -> ArchitectureId:
    name = config_provider.get_value([ARCHITECTURE_KEY], ArchitectureId.SINGLE.value)
    try:
        return ArchitectureId.parse(name)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _start_run(args: argparse.Namespace, architecture: Optional[ArchitectureId]) -> Path:
    seed = _seed()
    arguments = {k: v for k, v in vars(args).items() if k not in ("handler",) and v is not None}
    manifest = RunManifest(command=args.command, config_path=str(config_provider.config_path()), output_dir="",
                           seed=seed, architecture=architecture.value if architecture else None,
                           arguments=arguments, config=config_provider.snapshot())
    name = f"{args.command}-{architecture.value if architecture else 'none'}-seed{seed}"
    return create_run_dir(_output_root(args), name, manifest)


def _require_checkpoint(args: argparse.Namespace) -> Path:
    if not args.checkpoint:
        raise ConfigError(f"{args.command} requires --checkpoint.")
    path = Path(args.checkpoint)
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    return path


def cmd_train(args: argparse.Namespace) -> int:
    arch = _architecture()
    train_config = TrainConfig.from_config()
    if args.deterministic and train_config.actor_count != 1:
        raise ConfigError("--deterministic requires a single actor (--actors 1).")
    if train_config.droppath_rate > 0 and ARCHITECTURE_DIMS[arch].merge is not Merge.ACCUMULATE:
        raise ConfigError(f"train.droppath_rate needs {ArchitectureId.LATE_ACC.value}, not {arch.value}.")
    pool_config = PoolConfig.from_config(train_config.batch_size)
    arena = ArenaConfig.from_config()
    seed = _seed()
    run_dir = _start_run(args, arch)
    net = build(arch, rng_seed=seed)
    session = TrainingSession(net, arena, train_config, pool_config, run_dir, seed, deterministic=args.deterministic)
    result = session.run()
    print(f"Trained {result.batches} batches. Checkpoint: {result.checkpoint} Metrics: {result.metrics}")
    return EXIT_OK


def _generate_corpus(teacher, run_dir: Path, refine_config: RefineConfig, arena: ArenaConfig, seed: int) -> List[Path]:
    with PoolFileWriter(run_dir / CORPUS_DIR, refine_config.corpus_file_size, arena.lidar_rays) as writer:
        generate_refine_corpus(teacher, arena, refine_config.corpus_size, refine_config.corpus_epsilon, writer, seed)
    return writer.paths


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    teacher = load_network(_require_checkpoint(args), expected=ArchitectureId.LATE_ACC)
    refine_config = RefineConfig.from_config()
    arena = ArenaConfig.from_config()
    run_dir = _start_run(args, teacher.architecture)
    paths = _generate_corpus(teacher, run_dir, refine_config, arena, _seed())
    print(f"Wrote {refine_config.corpus_size} transitions to {len(paths)} file(s) in {run_dir / CORPUS_DIR}")
    return EXIT_OK


def cmd_refine(args: argparse.Namespace) -> int:
    teacher = load_network(_require_checkpoint(args), expected=ArchitectureId.LATE_ACC)
    refine_config = RefineConfig.from_config()
    pool_config = PoolConfig.from_config(refine_config.batch_size)
    arena = ArenaConfig.from_config()
    corpus = None
    if args.corpus:
        corpus = pool_files(args.corpus)
        if not corpus:
            raise ConfigError(f"No corpus files found in {args.corpus}.")
    seed = _seed()
    run_dir = _start_run(args, teacher.architecture)
    if corpus is None:
        corpus = _generate_corpus(teacher, run_dir, refine_config, arena, seed)
    result = RefineSession(teacher, refine_config, pool_config, run_dir, seed).run(corpus)
    print(f"Refined {result.batches} batches. Checkpoint: {result.checkpoint} Metrics: {result.metrics}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    policy: Policy
    if args.policy == "random":
        policy = RandomPolicy()
        arch = None
    else:
        net = load_network(_require_checkpoint(args))
        policy = CheckpointPolicy(net)
        arch = net.architecture
    suite_path = args.suite or config_provider.get_value([*EVAL_ROOT_PATH, "suite"], DEFAULT_SUITE_PATH)
    try:
        suite = EvalSuite.from_file(suite_path).with_sensors(SENSOR_MASKS[args.sensors])
    except (OSError, ValueError) as e:
        raise ConfigError(f"Unable to read evaluation suite {suite_path}: {e}") from e
    workers = config_provider.get_value([*EVAL_ROOT_PATH, "workers"], 1, CastFn.to_int)
    arena = ArenaConfig.from_config()
    run_dir = _start_run(args, arch)
    trajectory_dir = run_dir / TRAJECTORY_DIR if args.trajectories else None
    reports = evaluate(policy, suite, arena, workers=workers, trajectory_dir=trajectory_dir)
    summary = summarize(reports)
    write_reports(run_dir / "reports.csv", reports)
    write_summary(run_dir / "summary.csv", summary)
    print(f"{policy} sensors={args.sensors} n={summary.count} median={summary.median:.4f} "
          f"IQR=[{summary.q1:.4f}, {summary.q3:.4f}] within 10 cm={summary.fraction_within_10cm:.2f}")
    return EXIT_OK


def audit_params(dims: Optional[Mapping[ArchitectureId, ArchitectureDims]] = None, out: TextIO = sys.stdout) -> int:
    """
    Prints the closed-form and the built parameter count of every architecture next to the published count.
    :param dims: layer dims to audit, defaults to the shipped ones
    :return: exit code, `EXIT_AUDIT_MISMATCH` if any count differs
    """
    dims = dims or ARCHITECTURE_DIMS
    ok = True
    out.write(f"{'architecture':<14}{'computed':>10}{'built':>10}{'expected':>10}  status\n")
    for row in audit(dims):
        net = registrar.builder(row.architecture)(dims[row.architecture], np.random.default_rng(0), np.dtype(np.float32))
        row_ok = row.matches and net.param_count == row.expected
        ok &= row_ok
        out.write(f"{row.architecture.value:<14}{row.computed:>10}{net.param_count:>10}{row.expected:>10}  "
                  f"{'ok' if row_ok else 'MISMATCH'}\n")
    return EXIT_OK if ok else EXIT_AUDIT_MISMATCH


def cmd_audit_params(args: argparse.Namespace) -> int:
    return audit_params()


def _architecture_arg(value: str) -> str:
    try:
        return ArchitectureId.parse(value).value
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusion_rl",
        description="Multi-lidar fusion Q-networks with DropPath: train, refine, evaluate"
    )
    parser.add_argument('-c', '--config', type=str, help="path to config file", default=DEFAULT_CONFIG_PATH)
    parser.add_argument('--seed', type=int, help="run seed, overrides the config")
    parser.add_argument('--out', type=str, help=f"output root, defaults to ${OUTPUT_ROOT_ENV} or ./{DEFAULT_OUTPUT_ROOT}")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train a Q-network with DQN")
    train.add_argument('--arch', type=_architecture_arg, help="architecture id")
    train.add_argument('--actors', type=int, help="number of actor threads")
    train.add_argument('--deterministic', action="store_true",
                       help="interleave one actor and the trainer on a single thread")
    train.set_defaults(handler=cmd_train)

    refine = commands.add_parser("refine", help="DropPath-refine a trained late_acc checkpoint")
    refine.add_argument('--checkpoint', type=str, help="teacher checkpoint")
    refine.add_argument('--corpus', type=str, help="directory of pool files to reuse instead of generating")
    refine.set_defaults(handler=cmd_refine)

    corpus = commands.add_parser("gen-corpus", help="generate a refinement corpus from a late_acc checkpoint")
    corpus.add_argument('--checkpoint', type=str, help="teacher checkpoint")
    corpus.set_defaults(handler=cmd_gen_corpus)

    ev = commands.add_parser("eval", help="evaluate a checkpoint or the random baseline")
    ev.add_argument('--checkpoint', type=str, help="checkpoint to evaluate")
    ev.add_argument('--policy', choices=("checkpoint", "random"), default="checkpoint")
    ev.add_argument('--sensors', choices=tuple(SENSOR_MASKS), default="all", help="available sensors")
    ev.add_argument('--suite', type=str, help="evaluation suite file, overrides the config")
    ev.add_argument('--trajectories', action="store_true", help="dump every rollout as a trajectory CSV")
    ev.set_defaults(handler=cmd_eval)

    params = commands.add_parser("audit-params", help="compare parameter counts with the published ones")
    params.set_defaults(handler=cmd_audit_params)
    return parser


def _apply_overrides(args: argparse.Namespace) -> None:
    if args.seed is not None:
        config_provider.set_value([SEED_KEY], args.seed)
    if getattr(args, "arch", None) is not None:
        config_provider.set_value([ARCHITECTURE_KEY], args.arch)
    if getattr(args, "actors", None) is not None:
        config_provider.set_value(["train", "actor_count"], args.actors)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        config_provider.load_file(args.config)
        logging.basicConfig(level=config_provider.get_value([LOGGING_LEVEL_KEY], "INFO"))
        config_provider.validate_keys(CONFIG_SCHEMA)
        _apply_overrides(args)
        return args.handler(args)
    except (ConfigError, ArchitectureMismatchError, FileNotFoundError) as e:
        _log.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except (FramingError, RuntimeError, ValueError, OSError) as e:
        _log.error(f"{args.command} failed.", exc_info=e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
