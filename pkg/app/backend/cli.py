"""
wordperc command line

    wordperc estimate --config run.conf --K=7
    wordperc sweep --config run.conf --sweep_key=K --sweep_values=0,5,10
    wordperc oracle --widths=3,3 --height=6 --K=3 --L=4
    wordperc explore --N=5 --M=5 --max_diag=6 --word=110100101101
    wordperc oriented --gamma=0.95 --m=3 --trials=10000
    wordperc bounds chernoff --beta=0.1 --t=1 --m=2
    wordperc serve

Exit codes: 0 success, 2 configuration or domain error, 3 resource
refusal, 4 I/O error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from . import settings
from .config import RunConfig, parse_config, parse_sources
from .emit import emit, render_oriented_csv
from .errors import IO_EXIT_CODE, ConfigError, WordPercError
from .logs import configure_logging, get_logger, log_event
from .schemas import ExperimentSpec, MSCount, OrientedEvent
from .services import bounds as bound_fns
from .services.engine import coupling_box, derive_seed, run, sweep
from .services.environment import Environment, SiteField
from .services.exploration import explore
from .services.oracle import SeenQuery, seen_words
from .services.words import Word

logger = get_logger("cli")

BOUNDS: Dict[str, Callable] = {
    "chernoff": bound_fns.chernoff,
    "exact_binom_tail": bound_fns.exact_binom_tail,
    "q_of_gamma": bound_fns.q_of_gamma,
    "contour_bound_shape": bound_fns.contour_bound_shape,
    "union_budget": bound_fns.union_budget,
    "e2_bound": bound_fns.e2_bound,
    "lemma_decay_bound": bound_fns.lemma_decay_bound,
    "word_entropy": bound_fns.word_entropy,
}
INT_ARGS = {"m", "n", "k", "s"}


def _load(args) -> RunConfig:
    text = ""
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
    return parse_config(text, args.flags)


def _write(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _echo(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json", exclude_none=True)


def cmd_estimate(cfg: RunConfig) -> None:
    record = run(cfg.to_spec(), cfg.trials, cfg.seed, cfg.workers, cfg.level)
    record.config = _echo(cfg)
    text = emit([record], cfg.format, cfg.output)
    if cfg.output is None:
        sys.stdout.write(text)


def cmd_sweep(cfg: RunConfig) -> None:
    key, values = cfg.sweep_points()
    records = sweep(cfg.to_spec(), key, values, cfg.trials, cfg.seed, cfg.workers, cfg.level)
    for r in records:
        r.config = _echo(cfg)
    fmt = cfg.format if "format" in cfg.model_fields_set else "csv"
    text = emit(records, fmt, cfg.output, sweep_key=key)
    if cfg.output is None:
        sys.stdout.write(text)


def _trial_zero_fields(cfg: RunConfig):
    params = cfg.model_params()
    box = cfg.box()
    bond = cfg.quenched if cfg.quenched is not None else derive_seed(cfg.seed, 0, "bond")
    site = derive_seed(cfg.seed, 0, "site")
    return params, box, bond, site


def cmd_oracle(cfg: RunConfig) -> None:
    params, box, bond, site = _trial_zero_fields(cfg)
    if box is None or cfg.L is None:
        raise ConfigError("oracle needs widths and L", key="widths" if box is None else "L")
    env = Environment(params, bond, box)
    seen = seen_words(SeenQuery(env, SiteField(params.p, site, box), cfg.L))
    out = {"L": seen.length, "cardinality": len(seen), "complete": seen.is_full(),
           "bitmap_hex": seen.to_hex(), "config": _echo(cfg)}
    _write(json.dumps(out) + "\n", cfg.output)


def cmd_explore(cfg: RunConfig) -> None:
    params, box, bond, site = _trial_zero_fields(cfg)
    cp = cfg.coupling()
    if cp is None or cfg.word is None:
        raise ConfigError("explore needs N, M, max_diag and word", key="word" if cp else "N")
    spec_box = coupling_box(box, cp)
    env = Environment(params, bond, spec_box)
    res = explore(env, SiteField(params.p, site, spec_box), Word.parse(cfg.word), cp)
    _write(res.steps_jsonl(), cfg.output)


def cmd_oriented(cfg: RunConfig) -> None:
    """
    One CSV row per m = 1..cfg.m: the `which` event, or M_S < 4m for
    experiment = ms_count. Explicit sources lie on L_{4m,2} of one m, so
    with `sources` set only the row m = cfg.m is produced.
    """
    if cfg.gamma is None or cfg.m is None:
        raise ConfigError("oriented needs gamma and m", key="gamma" if cfg.gamma is None else "m")
    ms_count = cfg.experiment == "ms_count"
    if ms_count and cfg.w_left is not None:
        raise ConfigError("M_S is counted on [0, 16m - 1]^2 and takes no w_left", key="w_left")
    sources = parse_sources(cfg.sources) if cfg.sources else None
    rows = []
    points = []
    for m in ([cfg.m] if sources else range(1, cfg.m + 1)):
        if ms_count:
            experiment, event = MSCount(m=m, sources=sources), "M_S<4m"
        else:
            experiment = OrientedEvent(m=m, which=cfg.which, sources=sources, w_left=cfg.w_left)
            event = cfg.which
        spec = ExperimentSpec(experiment=experiment, gamma=cfg.gamma)
        r = run(spec, cfg.trials, cfg.seed, cfg.workers, cfg.level)
        rows.append({"m": m, "gamma": cfg.gamma, "event": event, "trials": r.trials, "successes": r.successes,
                     "p_hat": r.p_hat, "ci_lo": r.ci_lo, "ci_hi": r.ci_hi})
        points.append((m, r.p_hat))
    if ms_count and sum(1 for _, p in points if p > 0) >= 2:
        fit = bound_fns.fit_decay(points)
        log_event(logger, logging.INFO, "decay.fit", f"a_hat = {fit.a_hat:.4g}", a_hat=fit.a_hat, r2=fit.r2,
                  dropped=fit.dropped)
    _write(render_oriented_csv(rows), cfg.output)


def cmd_bounds(name: str, flags: Sequence[str], output: Optional[str]) -> None:
    fn = BOUNDS.get(name)
    if fn is None:
        raise ConfigError(f"unknown bound {name!r}; choose from {', '.join(sorted(BOUNDS))}", key="bound")
    kwargs = {}
    for flag in flags:
        if not flag.startswith("--") or "=" not in flag:
            raise ConfigError(f"expected --key=value, got {flag!r}")
        key, value = flag[2:].split("=", 1)
        try:
            kwargs[key] = int(value) if key in INT_ARGS else float(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}", key=key)
    try:
        value = fn(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e), key="bound")
    names = sorted(kwargs)
    header = ",".join(["bound", *names, "value"])
    row = ",".join([name, *(str(kwargs[k]) for k in names), repr(value) if isinstance(value, float) else str(value)])
    _write(header + "\n" + row + "\n", output)


def cmd_serve(host: str, port: Optional[int]) -> None:
    import uvicorn
    uvicorn.run("app.backend.main:app", host=host, port=port or settings.service_port())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wordperc", allow_abbrev=False, description="Percolation of words: estimates, oracles, bounds")
    parser.add_argument("--log-level", default=None, help="Overrides WORDPERC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("estimate", "sweep", "oracle", "explore", "oriented"):
        p = sub.add_parser(name, allow_abbrev=False)
        p.add_argument("--config", default=None, help="key = value file")
    b = sub.add_parser("bounds")
    b.add_argument("name", help="Bound to evaluate")
    b.add_argument("--output", default=None)
    s = sub.add_parser("serve")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=None)
    return parser


COMMANDS = {
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "explore": cmd_explore,
    "oriented": cmd_oriented,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "serve":
            cmd_serve(args.host, args.port)
        elif args.command == "bounds":
            cmd_bounds(args.name, rest, args.output)
        else:
            args.flags = rest
            COMMANDS[args.command](_load(args))
    except WordPercError as e:
        log_event(logger, logging.ERROR, "cli.error", str(e), error_class=type(e).__name__)
        print(f"wordperc: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"wordperc: {e}", file=sys.stderr)
        return IO_EXIT_CODE
    return 0


if __name__ == "__main__":
    sys.exit(main())
