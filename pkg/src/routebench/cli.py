"""Command-line front end.

    routebench run --id EXP --alg-conf config1 --task-conf config1 --net saint_arnoult
    routebench baseline --id EXP --task-conf config1 --net saint_arnoult --model aon
    routebench batch manifest.json --jobs 4
    routebench summarize results/exp1 results/exp2

Config ids name JSON files (without extension) under ``<root>/config/{algo,env,task}_config``
and networks name directories under ``<root>/networks``. The default root is
the data bundled with the package.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .baselines import BaselineKind
from .demand import load_agents
from .errors import (
    ConfigError,
    RouteBenchError,
    SchemaError,
    SimulationError,
    UnknownConfigId,
    UnknownNetwork,
    ValidationError,
)
from .experiment import EnvConfig, TaskConfig, run_experiment
from .marl import AlgConfig
from .metrics import read_kpis, win_rate
from .network import load_network

log = logging.getLogger("routebench")

DATA_ROOT = Path(__file__).resolve().parent / "data"
DEFAULT_ENV_CONF = "config1"
DEFAULT_SEED = 42

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION = 0, 2, 3

_NUM = (int, float)
_SCHEMAS = {
    "algo": {
        "algorithm": str,
        "learning_rate": _NUM,
        "epsilon_start": _NUM,
        "epsilon_end": _NUM,
        "epsilon_decay_fraction": _NUM,
        "obs_bins": int,
    },
    "env": {
        "number_of_paths": int,
        "logit_beta": _NUM,
        "max_samples": (int, type(None)),
        "horizon_s": _NUM,
        "departure_window_s": _NUM,
        "dump_routes": bool,
        "dump_events": bool,
        "traffic_backend": (str, type(None)),
    },
    "task": {
        "human_days": int,
        "training_episodes": int,
        "test_episodes": int,
        "cav_share": _NUM,
        "behavior": (str, dict),
        "human_params": dict,
        "humans_adapt_after_mutation": bool,
        "t_pre_window": int,
        "mutation_selection": str,
    },
}
_DIRS = {"algo": "algo_config", "env": "env_config", "task": "task_config"}


@dataclass(frozen=True)
class CliInvocation:
    script: str  # "rl" or "baseline"
    id: str
    task_conf: str
    net: str
    alg_conf: str | None = None
    env_conf: str | None = None
    env_seed: int = DEFAULT_SEED
    train_seed: int = DEFAULT_SEED
    model: str | None = None

    def __post_init__(self):
        if not self.id or "/" in self.id or self.id in (".", ".."):
            raise ConfigError(f"invalid experiment id {self.id!r}")
        if self.script not in ("rl", "baseline"):
            raise ConfigError(f"script must be 'rl' or 'baseline', got {self.script!r}")
        if self.script == "rl" and not self.alg_conf:
            raise ConfigError("rl mode needs --alg-conf")
        if self.script == "baseline":
            if self.model is None:
                raise ConfigError("baseline mode needs --model")
            try:
                BaselineKind(self.model)
            except ValueError:
                raise ConfigError(f"unknown baseline model {self.model!r}") from None

    @classmethod
    def from_dict(cls, d: Mapping) -> "CliInvocation":
        d = dict(d)
        if "torch_seed" in d:
            d.setdefault("train_seed", d.pop("torch_seed"))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown invocation keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class ExperimentConfig:
    invocation: CliInvocation
    network_dir: Path
    task: TaskConfig
    env: EnvConfig
    alg: AlgConfig | None
    n_agents: int = 0
    sources: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        inv = self.invocation
        return {
            "id": inv.id,
            "script": inv.script,
            "net": inv.net,
            "alg_conf": inv.alg_conf,
            "env_conf": inv.env_conf or DEFAULT_ENV_CONF,
            "task_conf": inv.task_conf,
            "baseline": inv.model,
            "env_seed": inv.env_seed,
            "train_seed": inv.train_seed,
            "task": self.task.to_dict(),
            "env": self.env.to_dict(),
            "algorithm": self.alg.to_dict() if self.alg is not None else None,
        }


def _load_config(config_root: Path, kind: str, config_id: str) -> tuple[Path, dict]:
    path = config_root / "config" / _DIRS[kind] / f"{config_id}.json"
    if not config_id or Path(config_id).name != config_id or not path.is_file():
        raise UnknownConfigId(kind, config_id)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise SchemaError(path, "<document>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError(path, "<document>", "top level must be an object")
    data.pop("description", None)
    schema = _SCHEMAS[kind]
    for key, value in data.items():
        if key not in schema:
            raise SchemaError(path, key, "unknown field")
        expected = schema[key]
        # bool is an int subclass; only accept it where a bool is asked for
        if isinstance(value, bool) and expected is not bool:
            raise SchemaError(path, key, f"expected {_type_name(expected)}, got bool")
        if not isinstance(value, expected):
            raise SchemaError(path, key, f"expected {_type_name(expected)}, got {type(value).__name__}")
    return path, data


def _type_name(t) -> str:
    if isinstance(t, tuple):
        return " or ".join(x.__name__ for x in t)
    return t.__name__


def _build(path: Path, data: dict, factory):
    try:
        return factory(data)
    except SchemaError:
        raise
    except (ValidationError, TypeError, ValueError) as exc:
        msg = str(exc)
        # the field named first in the message is the one at fault
        named = [k for k in data if k in msg]
        guess = min(named, key=msg.index) if named else "<document>"
        raise SchemaError(path, guess, msg) from None


def resolve_configs(invocation: CliInvocation, config_root=DATA_ROOT) -> ExperimentConfig:
    """Look up, validate and default-fill the three configs named by *invocation*."""
    root = Path(config_root)
    net_dir = root / "networks" / invocation.net
    if not invocation.net or Path(invocation.net).name != invocation.net or not net_dir.is_dir():
        raise UnknownNetwork(invocation.net)

    sources = {}
    task_path, task_data = _load_config(root, "task", invocation.task_conf)
    sources["task"] = str(task_path)
    task = _build(task_path, task_data, TaskConfig.from_dict)

    env_path, env_data = _load_config(root, "env", invocation.env_conf or DEFAULT_ENV_CONF)
    sources["env"] = str(env_path)
    env = _build(env_path, env_data, EnvConfig.from_dict)

    alg = None
    if invocation.script == "rl":
        alg_path, alg_data = _load_config(root, "algo", invocation.alg_conf)
        sources["algo"] = str(alg_path)
        alg = _build(alg_path, alg_data, lambda d: AlgConfig(**d))

    agents_path = net_dir / "agents.csv"
    n_agents = len(load_agents(agents_path)) if agents_path.is_file() else 0
    return ExperimentConfig(invocation, net_dir, task, env, alg, n_agents, sources)


def execute(invocation: CliInvocation, config_root=DATA_ROOT, results_dir="results"):
    """Resolve and run one invocation; returns the run result."""
    cfg = resolve_configs(invocation, config_root)
    net = load_network(cfg.network_dir)
    agents = load_agents(cfg.network_dir / "agents.csv")
    out_dir = Path(results_dir) / invocation.id
    return run_experiment(
        net,
        agents,
        cfg.task,
        cfg.env,
        cfg.alg,
        invocation.env_seed,
        invocation.train_seed,
        baseline=invocation.model if invocation.script == "baseline" else None,
        out_dir=out_dir,
        resolved_config=cfg.to_dict(),
    )


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, SimulationError):
        return EXIT_SIMULATION
    if isinstance(exc, ValidationError):
        return EXIT_CONFIG
    return 1


def _run_one(payload) -> tuple[str, int, str]:
    inv_dict, config_root, results_dir = payload
    try:
        inv = CliInvocation.from_dict(inv_dict)
        execute(inv, config_root, results_dir)
    except RouteBenchError as exc:
        return inv_dict.get("id", "?"), exit_code(exc), str(exc)
    return inv_dict["id"], EXIT_OK, ""


def run_batch(manifest, config_root=DATA_ROOT, results_dir="results", jobs: int | None = None) -> int:
    """Run every invocation of a JSON manifest (a list of objects) in parallel.

    Each entry uses the same keys as :class:`CliInvocation`. Returns the worst
    exit code. Ids must be unique so output directories never collide.
    """
    with open(manifest, encoding="utf-8") as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise ConfigError(f"{manifest}: manifest must be a JSON list")
    invocations = [CliInvocation.from_dict(e) for e in entries]
    ids = [inv.id for inv in invocations]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{manifest}: duplicate experiment ids")
    for inv in invocations:
        resolve_configs(inv, config_root)

    payloads = [(e, str(config_root), str(results_dir)) for e in entries]
    worst = EXIT_OK
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for exp_id, code, msg in pool.map(_run_one, payloads):
            status = "ok" if code == EXIT_OK else f"failed ({code}): {msg}"
            print(f"{exp_id}: {status}")
            worst = max(worst, code)
    return worst


def summarize(run_dirs: Sequence) -> tuple[list, float]:
    reports = [read_kpis(d) for d in run_dirs]
    return reports, win_rate(reports)


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--id", required=True, help="experiment id; results go to <results-dir>/<id>")
    p.add_argument("--env-conf", default=None, help=f"env config id (default {DEFAULT_ENV_CONF})")
    p.add_argument("--task-conf", required=True)
    p.add_argument("--net", required=True, help="network directory name")
    p.add_argument("--env-seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="routebench", description=__doc__.split("\n")[0])
    parser.add_argument("--root", default=str(DATA_ROOT), help="directory holding config/ and networks/")
    parser.add_argument("--results-dir", default="results")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train and test a CAV fleet")
    _add_common(run)
    run.add_argument("--alg-conf", required=True)
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--train-seed", type=int, default=None)
    seeds.add_argument("--torch-seed", type=int, default=None, help=argparse.SUPPRESS)

    base = sub.add_parser("baseline", help="run a non-learning CAV baseline")
    _add_common(base)
    base.add_argument("--model", required=True, choices=[k.value for k in BaselineKind])

    batch = sub.add_parser("batch", help="run a manifest of invocations in parallel")
    batch.add_argument("manifest")
    batch.add_argument("--jobs", type=int, default=None)

    summ = sub.add_parser("summarize", help="print KPIs and the win rate of finished runs")
    summ.add_argument("runs", nargs="+")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    # --batch <manifest> is accepted as shorthand for the batch subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--batch" in argv:
        i = argv.index("--batch")
        argv[i] = "batch"
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    try:
        if args.command == "batch":
            return run_batch(args.manifest, args.root, args.results_dir, args.jobs)
        if args.command == "summarize":
            reports, wr = summarize(args.runs)
            print("run\tt_pre\tt_test\tt_cav\tt_hdv\tc_all\twin")
            for path, r in zip(args.runs, reports):
                print(f"{path}\t{_fmt(r.t_pre)}\t{_fmt(r.t_test)}\t{_fmt(r.t_cav)}\t{_fmt(r.t_hdv)}"
                      f"\t{_fmt(r.c_all)}\t{r.cav_wins}")
            print(f"win rate {wr:.3f} over {len(reports)} runs")
            return EXIT_OK

        if args.command == "run":
            train_seed = args.train_seed
            if args.torch_seed is not None:
                print("warning: --torch-seed is deprecated, use --train-seed", file=sys.stderr)
                train_seed = args.torch_seed
            inv = CliInvocation(
                "rl", args.id, args.task_conf, args.net, alg_conf=args.alg_conf,
                env_conf=args.env_conf, env_seed=args.env_seed,
                train_seed=DEFAULT_SEED if train_seed is None else train_seed,
            )
        else:
            inv = CliInvocation(
                "baseline", args.id, args.task_conf, args.net, env_conf=args.env_conf,
                env_seed=args.env_seed, model=args.model,
            )
        result = execute(inv, args.root, args.results_dir)
    except RouteBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    k = result.kpis
    out = Path(args.results_dir) / inv.id
    if k is not None:
        print(f"{out}: t_pre {_fmt(k.t_pre)} min, t_test {_fmt(k.t_test)} min, "
              f"t_cav {_fmt(k.t_cav)} min, t_hdv {_fmt(k.t_hdv)} min")
    else:
        print(f"{out}: done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
