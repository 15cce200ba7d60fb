"""Command-line front end.

Subcommands: bounds, tangle, monogamy, channel, sample, dump. Every
subcommand accepts ``--config FILE`` (a JSON object mirroring RunConfig);
flags given on the command line override values from the file.

Exit codes: 0 success, 2 input or config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import AssistanceBounds, OptimizerConfig, reduce_pair
from .channel import ChannelError, extract_channel, final_chain_check, i_measure, i_measure_direct, normalize_filter
from .io import dump_state, parse_state_file
from .monogamy import csv_header, monogamy_check, run_campaign
from .oracle import OracleConfig, eoa_oracle, povm_tangle_oracle, tangle_oracle
from .qstate import (
    QState,
    StateError,
    basis_state,
    bell,
    ghz,
    haar_random_pure,
    mixed,
    random_mixed,
    w_state,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    inputs: list = field(default_factory=list)
    sample: str | None = None
    rank: int | None = None
    seed: int = 0
    format: str = "table"
    output: str | None = None
    dump: str | None = None
    jobs: int = 1
    keep: str = "0,1"
    cut: int = 0
    head: int = 0
    objective: str = "tangle"
    measured: int | None = None
    ghz: int | None = None
    theta: float | None = None
    product: int | None = None
    random: int | None = None
    n: int = 3
    named: str | None = None
    no_filter: bool = False
    optimizer: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig.from_dict({**self.optimizer, "seed": self.seed})

    def oracle_config(self) -> OracleConfig:
        return OracleConfig.from_dict({**self.oracle, "seed": self.seed})


_NESTED = {
    "restarts": ("optimizer", "oracle"),
    "tol": ("optimizer",),
    "max_iter": ("optimizer",),
    "k": ("oracle",),
    "max_evals": ("oracle",),
}


def build_config(ns: argparse.Namespace) -> RunConfig:
    """RunConfig from defaults, then the --config file, then explicit flags."""
    values: dict = {}
    if getattr(ns, "config", None):
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except OSError as exc:
            raise ConfigError(f"{ns.config}: cannot read ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{ns.config}: malformed JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{ns.config}: config must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise ConfigError(f"{ns.config}: unknown config keys {unknown}")
        values.update(loaded)
    flags = {k: v for k, v in vars(ns).items() if k not in ("config", "func")}
    for key, targets in _NESTED.items():
        if key in flags:
            val = flags.pop(key)
            for t in targets:
                values[t] = {**values.get(t, {}), key: val}
    values.update(flags)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from None
    if cfg.format not in ("table", "json", "csv"):
        raise ConfigError(f"format must be table, json or csv, got {cfg.format!r}")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return cfg


# ---------------------------------------------------------------------------
# Inputs


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated integers, got {text!r}") from None


def sampled_state(spec: str, seed: int, rank: int | None = None) -> QState:
    dims = _int_list(spec, "sample spec")
    if not dims or any(d < 2 for d in dims):
        raise ConfigError(f"sample dims must be integers >= 2, got {spec!r}")
    if rank is None:
        return haar_random_pure(dims, seed)
    if not 1 <= rank <= math.prod(dims):
        raise ConfigError(f"rank {rank} out of range for dims {dims}")
    return random_mixed(dims, rank, seed)


def named_state(name: str, n: int = 3, theta: float | None = None) -> QState:
    if name == "bell":
        return bell()
    if name == "ghz":
        return ghz(n, np.pi / 4 if theta is None else theta)
    if name == "w":
        return w_state(n)
    if name == "product":
        return basis_state([0] * n)
    if name == "maximally-mixed":
        return mixed(np.eye(4) / 4, (2, 2))
    if name == "classical":
        return mixed(np.diag([0.5, 0, 0, 0.5]), (2, 2))
    raise ConfigError(f"unknown named state {name!r}")


def load_input(cfg: RunConfig) -> QState:
    if cfg.inputs and cfg.sample:
        raise ConfigError("give either an input file or --sample, not both")
    if cfg.inputs:
        if len(cfg.inputs) != 1:
            raise ConfigError("this subcommand takes exactly one input file")
        state = parse_state_file(cfg.inputs[0])
    elif cfg.sample:
        state = sampled_state(cfg.sample, cfg.seed, cfg.rank)
    elif cfg.named:
        state = named_state(cfg.named, cfg.n, cfg.theta)
    else:
        raise ConfigError("no input: give a state file, --sample DIMS or --named NAME")
    if cfg.dump:
        dump_state(state, cfg.dump)
    return state


# ---------------------------------------------------------------------------
# Output


def _finite(obj) -> None:
    if isinstance(obj, dict):
        for v in obj.values():
            _finite(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _finite(v)
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise NumericalFailure("computation produced a non-finite value")


def _scalar_items(d: dict, prefix: str = ""):
    for k, v in d.items():
        if isinstance(v, dict):
            yield from _scalar_items(v, f"{prefix}{k}.")
        elif isinstance(v, (list, tuple)):
            yield f"{prefix}{k}", " ".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in v)
        else:
            yield f"{prefix}{k}", f"{v:.12g}" if isinstance(v, float) else str(v)


def render(result: dict, cfg: RunConfig) -> str:
    _finite(result)
    if cfg.format == "json":
        return json.dumps(result, indent=2)
    items = list(_scalar_items(result))
    if cfg.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([k for k, _ in items])
        w.writerow([v for _, v in items])
        return f"# seed={cfg.seed}\n" + buf.getvalue().rstrip("\n")
    width = max(len(k) for k, _ in items)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in items)


def emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text + "\n")
    else:
        print(text)


def _header(cfg: RunConfig) -> dict:
    return {"command": cfg.command, "seed": cfg.seed}


# ---------------------------------------------------------------------------
# Subcommands


def cmd_bounds(cfg: RunConfig) -> int:
    state = load_input(cfg)
    keep = _int_list(cfg.keep, "--keep")
    est = AssistanceBounds(**{k: v for k, v in cfg.optimizer_config().to_dict().items()})
    est.fit(state, keep=keep, cut=cfg.cut)
    rep = est.report_
    out = {
        **_header(cfg),
        "dims": list(state.dims),
        "keep": keep,
        "lower": rep.lower,
        "upper": rep.upper,
        "tangle_upper": rep.tangle_upper,
        "converged": rep.converged,
        "restarts": len(rep.restart_values),
        "best_restart_values": [float(v) for v in np.sort(rep.restart_values)[::-1][:4]],
    }
    emit(render(out, cfg), cfg)
    return EXIT_OK


def cmd_tangle(cfg: RunConfig) -> int:
    state = load_input(cfg)
    ocfg = cfg.oracle_config()
    if cfg.measured is not None:
        res = povm_tangle_oracle(state, cfg.measured, cfg=ocfg)
        route = f"povm on subsystem {cfg.measured}"
    else:
        rho = reduce_pair(state, _int_list(cfg.keep, "--keep"))
        if cfg.objective not in ("tangle", "eoa"):
            raise ConfigError(f"objective must be tangle or eoa, got {cfg.objective!r}")
        res = (tangle_oracle if cfg.objective == "tangle" else eoa_oracle)(rho, ocfg)
        route = f"decomposition ({cfg.objective})"
    out = {**_header(cfg), "dims": list(state.dims), "route": route, **res.to_dict()}
    emit(render(out, cfg), cfg)
    return EXIT_OK


def _campaign_reports(cfg: RunConfig):
    ocfg = cfg.oracle_config()
    sources = [x is not None for x in (cfg.ghz, cfg.product, cfg.random)] + [bool(cfg.inputs)]
    if sum(sources) != 1:
        raise ConfigError("monogamy needs exactly one of: state files, --ghz N, --product N, --random COUNT")
    if cfg.inputs:
        return [monogamy_check(parse_state_file(p), cfg.head, ocfg, state_id=Path(p).stem) for p in cfg.inputs]
    if cfg.ghz is not None:
        return run_campaign("ghz", cfg.ghz, 1, cfg.seed, head=cfg.head, cfg=ocfg, theta=cfg.theta)
    if cfg.product is not None:
        return run_campaign("product", cfg.product, 1, cfg.seed, head=cfg.head, cfg=ocfg)
    if cfg.random < 1:
        raise ConfigError("--random needs a positive count")
    kind = "pure" if cfg.rank is None else "mixed"
    return run_campaign(kind, cfg.n, cfg.random, cfg.seed, rank=cfg.rank or 2, head=cfg.head, cfg=ocfg, jobs=cfg.jobs)


def cmd_monogamy(cfg: RunConfig) -> int:
    try:
        reports = _campaign_reports(cfg)
    except StateError as exc:
        raise ConfigError(str(exc)) from None
    for r in reports:
        _finite([r.margin, r.bipartite, *r.pairwise])
    worst = min(r.margin for r in reports)
    flagged = sum(r.violation for r in reports)
    summary = f"states {len(reports)}  min margin {worst:.12g}  violation candidates {flagged}  seed {cfg.seed}"
    twin = {**_header(cfg), "reports": [r.to_dict() for r in reports], "min_margin": worst, "violation_candidates": flagged}
    if cfg.format == "json":
        emit(json.dumps(twin, indent=2), cfg)
        print(summary, file=sys.stderr)
    elif cfg.format == "csv":
        n_max = max(r.n for r in reports)
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_header(n_max))
        for r in reports:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in r.row(n_max)])
        emit(f"# seed={cfg.seed}\n" + buf.getvalue().rstrip("\n"), cfg)
        if cfg.output:
            Path(cfg.output).with_suffix(".json").write_text(json.dumps(twin, indent=2) + "\n")
        print(summary, file=sys.stderr)
    else:
        lines = [f"# seed={cfg.seed}", f"{'state_id':<24} {'margin':>14} {'bipartite':>12}  pairwise"]
        for r in reports:
            pw = " ".join(f"{x:.6f}" for x in r.pairwise)
            mark = "  VIOLATION?" if r.violation else ""
            lines.append(f"{r.state_id:<24} {r.margin:>14.9f} {r.bipartite:>12.9f}  {pw}{mark}")
        lines.append(summary)
        emit("\n".join(lines), cfg)
    return EXIT_OK


def cmd_channel(cfg: RunConfig) -> int:
    state = load_input(cfg)
    if state.dims != (2, 2):
        raise ConfigError(f"channel analysis needs a two-qubit state, got dims {state.dims}")
    ocfg = cfg.oracle_config()
    try:
        extract_channel(state)
    except ChannelError as exc:
        raise ChannelError(
            f"{exc}. Hint: rho_AB = rho_A (x) |b><b| here, so the quantity is 0 and no invertible "
            "filter (normalize_filter) can reach rho_B = I/2; use the bounds or tangle subcommands instead"
        ) from None
    out = {**_header(cfg), "i_measure": i_measure(state), "i_measure_direct": i_measure_direct(state, ocfg)}
    work = state
    rho_b = np.trace(state.dm().reshape(2, 2, 2, 2), axis1=0, axis2=2)
    if np.max(np.abs(rho_b - np.eye(2) / 2)) > 1e-8:
        if cfg.no_filter:
            raise ConfigError("rho_B != I/2; rerun without --no-filter to apply normalize_filter")
        f, work = normalize_filter(state)
        out["filtered"] = True
        out["filter_scale"] = f.scale(state)
    else:
        out["filtered"] = False
    out.update(final_chain_check(work, ocfg).to_dict())
    emit(render(out, cfg), cfg)
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    if not cfg.sample:
        raise ConfigError("sample needs --sample DIMS")
    state = sampled_state(cfg.sample, cfg.seed, cfg.rank)
    emit(dump_state(state), cfg)
    return EXIT_OK


def cmd_dump(cfg: RunConfig) -> int:
    if cfg.inputs:
        state = parse_state_file(cfg.inputs[0])
    elif cfg.named:
        state = named_state(cfg.named, cfg.n, cfg.theta)
    else:
        raise ConfigError("dump needs a state file or --named NAME")
    emit(dump_state(state), cfg)
    return EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "tangle": cmd_tangle,
    "monogamy": cmd_monogamy,
    "channel": cmd_channel,
    "sample": cmd_sample,
    "dump": cmd_dump,
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--format", choices=["table", "json", "csv"])
    common.add_argument("--output", "-o", help="write the report here instead of stdout")

    state_in = argparse.ArgumentParser(add_help=False, argument_default=S)
    state_in.add_argument("inputs", nargs="*", help="state JSON file(s)")
    state_in.add_argument("--sample", help="Haar-random pure state over these dims, e.g. 2,2,3")
    state_in.add_argument("--rank", type=int, help="with --sample: random mixed state of this rank")
    state_in.add_argument("--named", choices=["bell", "ghz", "w", "product", "maximally-mixed", "classical"])
    state_in.add_argument("--n", type=int, help="qubit count for --named ghz/w/product and --random")
    state_in.add_argument("--theta", type=float, help="GHZ angle: cos t|0..0> + sin t|1..1>")
    state_in.add_argument("--dump", help="also write the input state to this JSON file")

    oracle = argparse.ArgumentParser(add_help=False, argument_default=S)
    oracle.add_argument("--restarts", type=int)
    oracle.add_argument("--k", help="ensemble size, or 'auto'")
    oracle.add_argument("--max-evals", dest="max_evals", type=int)

    p = argparse.ArgumentParser(prog="assistance", description="Entanglement of assistance bounds and monogamy checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common, state_in], help="lower/upper bounds on E_a of a two-party state")
    b.add_argument("--keep", default=S, help="the two parties, e.g. 0,1")
    b.add_argument("--cut", type=int, default=S, help="which kept party is A for the upper bound (0 or 1)")
    b.add_argument("--restarts", type=int, default=S)
    b.add_argument("--tol", type=float, default=S)
    b.add_argument("--max-iter", dest="max_iter", type=int, default=S)

    t = sub.add_parser("tangle", parents=[common, state_in, oracle], help="oracle values of tau_a or E_a")
    t.add_argument("--keep", default=S)
    t.add_argument("--objective", choices=["tangle", "eoa"], default=S)
    t.add_argument("--measured", type=int, default=S, help="POVM route: measured subsystem of a pure state")

    m = sub.add_parser("monogamy", parents=[common, state_in, oracle], help="monogamy margins for n-qubit states")
    m.add_argument("--ghz", type=int, default=S, metavar="N")
    m.add_argument("--product", type=int, default=S, metavar="N")
    m.add_argument("--random", type=int, default=S, metavar="COUNT")
    m.add_argument("--head", type=int, default=S)
    m.add_argument("--jobs", type=int, default=S)

    c = sub.add_parser("channel", parents=[common, state_in, oracle], help="channel picture of a two-qubit state")
    c.add_argument("--no-filter", dest="no_filter", action="store_true", default=S)

    sub.add_parser("sample", parents=[common, state_in], help="print a random state as JSON")
    sub.add_parser("dump", parents=[common, state_in], help="print a state file or named state as JSON")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = build_config(ns)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
