"""
Monte Carlo engine

Trial k of a run is a pure function of (spec, master_seed, k): its bond,
site and oriented seeds are derived from the master seed and k alone, so
counts do not depend on the worker count and a sweep over one parameter
reuses the same uniforms at every point.
"""
import hashlib
import json
import logging
import time
import uuid
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from ..errors import DomainError, ResourceRefusal
from ..logs import get_logger, log_event
from ..schemas import Box, CouplingParams, EstimateRecord, ExperimentSpec
from .. import settings
from .bounds import q_of_gamma
from .environment import Environment, SiteField, mix_words
from .exploration import b_event, d_event, explore, first_step_black
from .intervals import wilson_ci
from .oracle import SeenQuery, sees_word, seen_words
from .oriented import (
    ChainState,
    Region,
    all_events,
    bond_event_e1,
    event_indicator,
    geometry_counterexample,
    m_s,
    proof_region,
    run_chain,
    sample_bonds,
    sample_region,
)
from .words import Word

logger = get_logger("engine")

Stream = Literal["bond", "site", "oriented"]
STREAM_CODES = {"bond": 1, "site": 2, "oriented": 3}

SWEEP_ALIASES = {
    "K": "params.K",
    "eps": "params.eps",
    "p": "params.p",
    "d": "params.d",
    "N": "cp.N",
    "M": "cp.M",
    "max_diag": "cp.max_diag",
    "m": "experiment.m",
    "L": "experiment.L",
    "rho": "experiment.rho",
    "t": "experiment.t",
    "w": "experiment.w",
    "height": "box.height",
}


def derive_seed(master: int, trial: int, stream: Stream) -> int:
    return mix_words(master, (STREAM_CODES[stream], trial))


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    refused: bool = False
    reason: Optional[str] = None


def _seeds(spec: ExperimentSpec, master: int, k: int) -> Tuple[int, int, int]:
    bond = spec.quenched if spec.quenched is not None else derive_seed(master, k, "bond")
    return bond, derive_seed(master, k, "site"), derive_seed(master, k, "oriented")


def coupling_box(box: Optional[Box], cp: CouplingParams) -> Box:
    """Explicit box, or a lazy-height box wide enough for cp.max_diag"""
    if box is not None:
        return box
    return Box(widths=(cp.max_diag, cp.max_diag), height=None)


def _words_seen(spec, bond, site, _):
    e = spec.experiment
    env = Environment(spec.params, bond, spec.box)
    sites = SiteField(spec.params.p, site, spec.box)
    if e.kind == "words_seen":
        return TrialOutcome(seen_words(SeenQuery(env, sites, e.L)).is_full())
    xi = Word.parse(e.word)
    return TrialOutcome(sees_word(SeenQuery(env, sites, len(xi)), xi))


def _coupling(spec, bond, site, _):
    e = spec.experiment
    cp = spec.cp
    if e.kind == "b_event":
        cp = cp.model_copy(update={"max_diag": max(cp.max_diag, 4 * e.m)})
    elif e.kind in ("b_prop_pair", "d_event"):
        need = 16 * e.m if e.kind == "b_prop_pair" else 4 * e.m
        cp = cp.model_copy(update={"max_diag": max(cp.max_diag, need)})
    box = coupling_box(spec.box, cp)
    env = Environment(spec.params, bond, box)
    sites = SiteField(spec.params.p, site, box)
    if e.kind == "black_step":
        black, truncated = first_step_black(env, sites, Word(tuple(e.letters)), cp, e.direction)
        if truncated:
            return TrialOutcome(False, True, "height-truncated")
        return TrialOutcome(black)
    if e.kind == "d_event":
        try:
            return TrialOutcome(d_event(env, sites, e.m, cp))
        except ResourceRefusal as err:
            if err.limit == "height":
                return TrialOutcome(False, True, "height-truncated")
            raise
    res = explore(env, sites, Word.parse(e.eta).pad(2 * cp.max_diag), cp)
    if res.truncated:
        return TrialOutcome(False, True, "height-truncated")
    if e.kind == "b_event":
        return TrialOutcome(b_event(res, e.m))
    # B_m(sigma_{4m}(eta)) holds while B_{4m}(eta) fails
    return TrialOutcome(b_event(res, e.m) and not b_event(res, 4 * e.m))


def _oriented(spec, _bond, _site, seed):
    e = spec.experiment
    gamma = spec.gamma
    if e.kind == "domination_window":
        start = ChainState.full(0, -e.t - 1, e.w + 1)
        end = run_chain(start, gamma, seed, e.t)
        return TrialOutcome(all(x in end.active for x in range(e.w)))
    if e.kind == "bond_e1":
        region = Region(0, 16 * e.m - 1, 0, 16 * e.m - 1)
        return TrialOutcome(bond_event_e1(sample_bonds(q_of_gamma(gamma), region, seed), e.m))
    if e.kind == "ms_count":
        region = Region(0, 16 * e.m - 1, 0, 16 * e.m - 1)
        return TrialOutcome(m_s(sample_region(gamma, region, seed), e.m, e.sources) < 4 * e.m)
    config = sample_region(gamma, proof_region(e.m, e.w_left), seed)
    if e.kind == "proof_geometry":
        return TrialOutcome(geometry_counterexample(config, e.m, e.sources, e.w_left))
    if e.which == "ALL":
        return TrialOutcome(all_events(config, e.m, e.sources, e.w_left))
    return TrialOutcome(event_indicator(config, e.m, e.sources, e.which, e.w_left))


_DISPATCH = {
    "words_seen": _words_seen,
    "single_word": _words_seen,
    "black_step": _coupling,
    "b_event": _coupling,
    "b_prop_pair": _coupling,
    "d_event": _coupling,
    "oriented_event": _oriented,
    "ms_count": _oriented,
    "domination_window": _oriented,
    "proof_geometry": _oriented,
    "bond_e1": _oriented,
}


def trial_outcome(spec: ExperimentSpec, master_seed: int, k: int) -> TrialOutcome:
    """Run trial k; guard refusals come back as refused outcomes"""
    try:
        return _DISPATCH[spec.experiment.kind](spec, *_seeds(spec, master_seed, k))
    except ResourceRefusal as e:
        return TrialOutcome(False, True, str(e))


def _run_chunk(spec: ExperimentSpec, master_seed: int, bounds: Tuple[int, int]) -> Tuple[int, int, List[str]]:
    successes = refused = 0
    reasons = []
    for k in range(*bounds):
        out = trial_outcome(spec, master_seed, k)
        if out.refused:
            refused += 1
            reasons.append(out.reason or "refused")
        elif out.success:
            successes += 1
    return successes, refused, reasons


def _chunks(trials: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, -(-trials // (workers * 4)))
    return [(a, min(trials, a + size)) for a in range(0, trials, size)]


def spec_digest(spec: ExperimentSpec) -> str:
    canonical = json.dumps(spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def run(spec: ExperimentSpec, trials: int, master_seed: int, workers: Optional[int] = None,
        level: float = 0.95) -> EstimateRecord:
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    workers = workers or settings.default_workers()
    run_id = uuid.uuid4().hex[:12]
    kind = spec.experiment.kind
    log_event(logger, logging.INFO, "run.start", f"{kind}: {trials} trials",
              run_id=run_id, kind=kind, trials=trials, workers=workers, master_seed=master_seed)
    started = time.perf_counter()
    job = partial(_run_chunk, spec, master_seed)
    chunks = _chunks(trials, workers)
    if workers == 1:
        parts = [job(c) for c in chunks]
    else:
        with Pool(processes=workers) as pool:
            parts = pool.map(job, chunks)
    successes = sum(p[0] for p in parts)
    refused = sum(p[1] for p in parts)
    reasons = [r for p in parts for r in p[2]]
    for reason in reasons[:10]:
        log_event(logger, logging.WARNING, "trial.refused", reason, run_id=run_id)
    counted = trials - refused
    if counted:
        p_hat = successes / counted
        lo, hi = wilson_ci(successes, counted, level)
    else:
        p_hat, lo, hi = 0.0, 0.0, 1.0
    wall = time.perf_counter() - started
    log_event(logger, logging.INFO, "run.finish", f"{kind}: {successes}/{counted} successes",
              run_id=run_id, successes=successes, refused=refused, wall_time=round(wall, 3))
    box = coupling_box(spec.box, spec.cp) if spec.cp is not None else spec.box
    return EstimateRecord(
        experiment=kind,
        spec_digest=spec_digest(spec),
        spec=spec.model_dump(mode="json"),
        trials=trials,
        successes=successes,
        refused=refused,
        p_hat=p_hat,
        ci_lo=lo,
        ci_hi=hi,
        level=level,
        master_seed=master_seed,
        box=box.describe() if box is not None else None,
        wall_time=wall,
    )


def with_value(spec: ExperimentSpec, key: str, value: Any) -> ExperimentSpec:
    """Copy of spec with one dotted key (or a short alias such as K, eps, m) replaced"""
    path = SWEEP_ALIASES.get(key, key).split(".")
    data: Dict[str, Any] = spec.model_dump(mode="python")
    node = data
    for part in path[:-1]:
        if not isinstance(node.get(part), dict):
            raise DomainError(f"sweep key {key!r} does not name a field of this spec")
        node = node[part]
    if path[-1] not in node:
        raise DomainError(f"sweep key {key!r} does not name a field of this spec")
    node[path[-1]] = value
    return ExperimentSpec.model_validate(data)


def sweep(spec: ExperimentSpec, key: str, values: Sequence[Any], trials: int, master_seed: int,
          workers: Optional[int] = None, level: float = 0.95) -> List[EstimateRecord]:
    """One record per value; every point reuses trial seeds (coupled)"""
    return [run(with_value(spec, key, v), trials, master_seed, workers, level) for v in values]
