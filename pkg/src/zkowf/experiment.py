"""Experiment orchestration: protocol -> candidates -> inverters -> reduction arms.

Bounds are evaluated from the error profile measured on the configured
instances, never from the requested dial values. Trials draw from
``SeededRng(derive_seed(master, "trial", arm, t))``, so results do not
depend on the number of workers or the order trials run in.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable

from .candidates import (CandidateFunction, OracleStack, ReductionParams, cr_candidate, lift_candidate,
                         nizk_candidate, pc_candidate, rv_candidate)
from .config import ExperimentConfig, parse_config, to_text
from .dist import BitString, encode, hoeffding_radius, hoeffding_tail
from .errors import BudgetError, ZkowfError
from .inverters import (DeviationReport, Inverter, canonical_inverter, conditional_inverter,
                        distributional_inverter, measure_deviation, noisy_inverter)
from .protocol import ErrorProfile, PublicCoinSpec, measure_error_profile
from .reductions import (B_value, cr_reduce, cr_run, lift_inverter, nizk_reduce, one_sided_decider, pc_run,
                         restrict_inverter, rv_reduce)
from .rng import SeededRng, derive_seed, enumerate_outcomes
from .zoo import (DialProfile, data_path, find_isomorphism, load_graph_pair, make_dial_nizk, make_dial_pc,
                  make_graph_iso)

HOLDS, VIOLATED, INCONCLUSIVE = "bound-holds", "bound-violated", "inconclusive"
DELTA = 1e-3


@dataclass
class Check:
    """One inequality: estimate (relation) bound, judged with a radius."""

    name: str
    relation: str                 # ">=" or "<="
    estimate: float | None
    radius: float
    exact: str | None
    bound: float
    verdict: str
    terms: dict[str, float] = field(default_factory=dict)
    note: str = ""


@dataclass
class ArmResult:
    arm: str
    instance: str
    trials: int
    accepts: int
    estimate: float | None
    radius: float
    hoeffding_radius: float | None
    exact: str | None
    branches: dict[str, int] = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: str
    seed: int
    profile: dict[str, str]
    deviations: dict[str, dict]
    arms: list[ArmResult]
    checks: list[Check]
    verdict: str
    records: list[list] = field(default_factory=list)
    wall_time: float = field(default=0.0, compare=False)


def resolve_path(spec: str):
    if spec.startswith("pkg:"):
        return data_path(spec[4:])
    return spec


@dataclass
class Instances:
    spec: PublicCoinSpec
    yes: Any
    witness: Any
    no: Any


def build_protocol(cfg: ExperimentConfig) -> Instances:
    if cfg.protocol == "graph-iso":
        yes = load_graph_pair(resolve_path(cfg.yes_instance))
        no = load_graph_pair(resolve_path(cfg.no_instance))
        spec = make_graph_iso(*yes)
        w = find_isomorphism(*yes)
        if w is None:
            raise ZkowfError("instances.yes is not an isomorphic pair")
        if find_isomorphism(*no) is not None:
            raise ZkowfError("instances.no is an isomorphic pair")
        if no[0].n != yes[0].n:
            raise ZkowfError("yes and no pairs must have the same vertex count")
        return Instances(spec, yes, w, no)
    profile = DialProfile(cfg.eps_c, cfg.eps_s, cfg.eps_z, cfg.m, cfg.ell_z, cfg.tag_seed, cfg.proof_bits)
    yes, no = BitString.from_str(cfg.yes_instance), BitString.from_str(cfg.no_instance)
    if yes.length != cfg.instance_bits or no.length != cfg.instance_bits:
        raise ZkowfError(f"instances must have protocol.instance_bits = {cfg.instance_bits} bits")
    if cfg.protocol == "dial-nizk":
        spec = make_dial_nizk(profile, cfg.verifier_noise, cfg.verifier_coin_bits, n=cfg.instance_bits)
    else:
        spec = make_dial_pc(profile, cfg.rounds, cfg.m_list or None, n=cfg.instance_bits)
    if not spec.membership(yes) or spec.membership(no):
        raise ZkowfError("instances.yes must start with 1 and instances.no with 0")
    return Instances(spec, yes, yes, no)


def reduction_params(cfg: ExperimentConfig, spec: PublicCoinSpec) -> ReductionParams:
    if cfg.preset == "coupled":
        return ReductionParams.coupled_preset(spec.n, cfg.p)
    return ReductionParams(cfg.p, cfg.q, cfg.tau)


def make_inverter(kind: str, f: CandidateFunction, cfg: ExperimentConfig) -> Inverter:
    if kind == "canonical":
        return canonical_inverter(f, cfg.budget)
    if kind == "distributional":
        return distributional_inverter(f, cfg.budget)
    if kind == "noisy":
        base = canonical_inverter(f, cfg.budget) if cfg.inverter_base == "canonical" \
            else distributional_inverter(f, cfg.budget)
        return noisy_inverter(base, cfg.inverter_delta)
    if kind == "conditional":
        return conditional_inverter(f, cfg.retry_cap, cfg.budget)
    raise ValueError(kind)


@dataclass
class Arm:
    """Everything needed to run one instance: a trial fn and the inverters it uses."""

    x: Any
    trial: Callable[[Any], tuple[int, str]]
    levels: list[tuple[CandidateFunction, Inverter]]
    b_value: Callable[..., Any] | None = None


@dataclass
class Pipeline:
    cfg: ExperimentConfig
    inst: Instances
    params: ReductionParams
    arms: dict[str, Arm]


def _cr_stack(spec, x, cfg, params) -> tuple[OracleStack, list]:
    """Inverters A_1..A_k for the level functions of x, built top-down."""
    k = spec.k
    fk = cr_candidate(spec, x, k)
    ak = make_inverter(cfg.level_k_inverter, fk, cfg)
    stack = OracleStack([ak])
    levels = [(fk, ak)]
    for i in range(k - 1, 0, -1):
        fi = cr_candidate(spec, x, i, stack, params)
        ai = make_inverter(cfg.inverter, fi, cfg)
        stack = OracleStack((ai,) + stack.inverters, stack.memo)
        levels.insert(0, (fi, ai))
    return stack, levels


def _arm(cfg: ExperimentConfig, inst: Instances, params: ReductionParams, x) -> Arm:
    spec = inst.spec
    kind = cfg.construction
    if kind == "nizk":
        f = nizk_candidate(spec, x)
        A = make_inverter(cfg.inverter, f, cfg)
        return Arm(x, lambda rng: (nizk_reduce(spec, x, A, rng), "reduction"), [(f, A)])
    if kind == "pc":
        f = pc_candidate(spec, x)
        A = make_inverter(cfg.inverter, f, cfg)

        def trial(rng):
            run, fallbacks = pc_run(spec, x, A, rng)
            return int(run.accept), ("fallback" if fallbacks else "inverted")
        return Arm(x, trial, [(f, A)])
    if kind == "cr":
        stack, levels = _cr_stack(spec, x, cfg, params)

        def trial(rng):
            run, results = cr_run(spec, x, stack, params, rng)
            return int(run.accept), ("aborted" if run.transcript[-1] is None else "played")
        return Arm(x, trial, levels,
                   b_value=lambda mode, n, rng: B_value(spec, x, stack, params, mode, n, rng, cfg.budget))
    if kind == "rv":
        f = rv_candidate(spec, x, params.q)
        A = make_inverter(cfg.inverter, f, cfg)
        return Arm(x, lambda rng: (rv_reduce(spec, x, A, params, rng), "reduction"), [(f, A)])
    raise ValueError(kind)


def _decider_arms(cfg: ExperimentConfig, inst: Instances, params: ReductionParams) -> dict[str, Arm]:
    spec = inst.spec
    xs = [inst.yes, inst.no]
    red = cfg.decider_reduce
    if red in ("nizk", "pc"):
        build = nizk_candidate if red == "nizk" else pc_candidate
        lifted = lift_candidate([(x, build(spec, x)) for x in xs])
        lifted_inv = make_inverter(cfg.inverter, lifted, cfg)
        fams, invs = [lifted], [lifted_inv]

        def reduce_fn(x, restricted, rng):
            if red == "nizk":
                return nizk_reduce(spec, x, restricted[0], rng)
            return int(pc_run(spec, x, restricted[0], rng)[0].accept)
    else:
        k = spec.k
        fk = lift_candidate([(x, cr_candidate(spec, x, k)) for x in xs])
        ak = make_inverter(cfg.level_k_inverter, fk, cfg)
        fams, invs = [fk], [ak]
        stacks = {i: OracleStack([restrict_inverter(ak, x)]) for i, x in enumerate(xs)}
        for level in range(k - 1, 0, -1):
            per = {}
            members = []
            for i, x in enumerate(xs):
                fi = cr_candidate(spec, x, level, stacks[i], params)
                members.append((x, fi))
                per[x] = make_inverter(cfg.inverter, fi, cfg)
            lifted = lift_candidate(members)
            linv = lift_inverter(lifted, per)
            fams.insert(0, lifted)
            invs.insert(0, linv)
            for i, x in enumerate(xs):
                stacks[i] = OracleStack((restrict_inverter(linv, x),) + stacks[i].inverters, stacks[i].memo)
        memos = {}

        def reduce_fn(x, restricted, rng):
            memo = memos.setdefault(encode(x), {})
            return cr_reduce(spec, x, OracleStack(restricted, memo), params, rng)

    arms = {}
    for name, x in (("yes", inst.yes), ("no", inst.no)):
        def trial(rng, x=x):
            return one_sided_decider(fams, reduce_fn, invs, x, rng, with_branch=True)
        arms[name] = Arm(x, trial, list(zip(fams, invs)))
    return arms


def build_pipeline(cfg: ExperimentConfig) -> Pipeline:
    inst = build_protocol(cfg)
    params = reduction_params(cfg, inst.spec)
    if cfg.construction == "cr":
        params.grid(inst.spec.k - 1)
    if cfg.construction == "decider":
        arms = _decider_arms(cfg, inst, params)
    else:
        arms = {"yes": _arm(cfg, inst, params, inst.yes), "no": _arm(cfg, inst, params, inst.no)}
    return Pipeline(cfg, inst, params, arms)


@lru_cache(maxsize=4)
def _cached_pipeline(config_text: str) -> Pipeline:
    return build_pipeline(parse_config(config_text))


def trial_seed(master: int, arm: str, t: int) -> int:
    return derive_seed(master, "trial", arm, t)


def _run_chunk(config_text: str, arm: str, start: int, stop: int) -> list[list]:
    pipe = _cached_pipeline(config_text)
    a = pipe.arms[arm]
    out = []
    for t in range(start, stop):
        seed = trial_seed(pipe.cfg.seed, arm, t)
        bit, branch = a.trial(SeededRng(seed))
        out.append([arm, t, seed, branch, int(bit)])
    return out


def run_trials(cfg: ExperimentConfig, arm: str, n: int) -> list[list]:
    text = to_text(cfg)
    if n == 0:
        return []
    if cfg.workers == 1:
        return _run_chunk(text, arm, 0, n)
    step = max(1, math.ceil(n / (cfg.workers * 4)))
    bounds = [(s, min(n, s + step)) for s in range(0, n, step)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        chunks = pool.map(_run_chunk, [text] * len(bounds), [arm] * len(bounds),
                          [b[0] for b in bounds], [b[1] for b in bounds])
        return [row for chunk in chunks for row in chunk]


def _three_sigma(p_hat: float, n: int) -> float:
    return 3.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n) if n else 0.0


def judge(relation: str, estimate: float | None, radius: float, exact: Fraction | None, bound: float) -> str:
    """Violated only when the exact value, or the estimate net of its radius, breaks the bound."""
    if exact is not None:
        bad = exact < bound if relation == ">=" else exact > bound
        return VIOLATED if bad else HOLDS
    if estimate is None:
        return INCONCLUSIVE
    bad = estimate + radius < bound if relation == ">=" else estimate - radius > bound
    return VIOLATED if bad else HOLDS


def _measure_levels(pipe: Pipeline, arm: str) -> dict[str, DeviationReport]:
    cfg = pipe.cfg
    out = {}
    for idx, (f, A) in enumerate(pipe.arms[arm].levels, start=1):
        try:
            rep = measure_deviation(f, A, "exact", budget=cfg.budget) if f.size <= cfg.budget else None
        except BudgetError:
            rep = None
        if rep is None:
            rng = SeededRng(derive_seed(cfg.seed, "deviation", arm, idx))
            rep = measure_deviation(f, A, "mc", trials=cfg.deviation_trials, rng=rng, delta=DELTA)
        out[f"{arm}/level-{idx}"] = rep
    return out


def _dev_upper(rep: DeviationReport) -> float:
    return float(rep.distributional_deviation) + (rep.radius or 0.0)


def _f(v) -> float:
    return float(v)


def evaluate_bounds(pipe: Pipeline, prof: ErrorProfile, devs: dict[str, DeviationReport],
                    arms: dict[str, ArmResult], exacts: dict[str, Fraction | None],
                    bval: dict | None) -> list[Check]:
    cfg, spec, params = pipe.cfg, pipe.inst.spec, pipe.params
    k, t, p = spec.k, spec.t, params.p
    ec, es, ez = _f(prof.eps_c), _f(prof.eps_s), _f(prof.eps_z)
    tau, q = _f(params.tau), params.q
    yes_devs = [rep for key, rep in devs.items() if key.startswith("yes/")]
    worst_dev = max((_dev_upper(r) for r in yes_devs), default=0.0)
    checks: list[Check] = []
    kind = cfg.construction if cfg.construction != "decider" else cfg.decider_reduce
    precondition = True
    terms: dict[str, float] = {"eps_c": ec, "eps_z": ez}

    if kind == "nizk":
        fail = 1.0 - min(_f(r.success_rate) for r in yes_devs)
        terms["inversion_failure"] = fail
        lower = 1 - ec - ez - fail
        if cfg.construction == "decider":
            terms["1/p"] = 1 / p
            lower = 1 - ec - ez - 1 / p
            precondition = fail <= 1 / p
    elif kind == "pc":
        terms.update({"(t-1)*eps_z": (t - 1) * ez, "k/p": k / p, "t/p": t / p})
        lower = 1 - ec - (t - 1) * ez - k / p
        precondition = worst_dev <= 1 / p
    elif kind == "cr":
        slack_prot = 2 * (k - 1) * tau + (k - 1) * hoeffding_tail(tau, q)
        slack_bd = (k - 1) * 2 * hoeffding_tail(tau / 2, q)
        terms.update({"k*eps_z": k * ez, "k/p": k / p, "estimation": slack_prot, "tail": slack_bd})
        lower = 1 - ec - k * ez - k / p - slack_prot - slack_bd
        precondition = worst_dev <= 1 / p
    else:
        tail = hoeffding_tail(tau, q)
        terms.update({"1/p": 1 / p, "2*tau": 2 * tau, "hoeffding_tail": tail})
        lower = 1 - ec - ez - 1 / p - 2 * tau - tail
        precondition = worst_dev <= 1 / p
    terms["max_deviation"] = worst_dev

    note = "" if precondition else f"inverter deviation {worst_dev:.4g} exceeds 1/p"
    upper_terms = {"eps_s": es}
    upper = es
    if cfg.construction == "decider":
        levels = len(pipe.arms["no"].levels)
        upper = levels * 2 / p + es
        upper_terms["levels*2/p"] = levels * 2 / p

    for name, rel, bound, tm in (("yes", ">=", lower, terms), ("no", "<=", upper, upper_terms)):
        a = arms[name]
        ex = exacts.get(name)
        verdict = judge(rel, a.estimate, a.radius, ex, bound)
        if name == "yes" and not precondition and verdict != HOLDS:
            verdict = INCONCLUSIVE
        checks.append(Check(f"{name}-arm acceptance", rel, a.estimate, a.radius,
                            str(ex) if ex is not None else None, bound, verdict, dict(tm),
                            note if name == "yes" else ""))
    if cfg.construction == "decider":
        ya, na = arms["yes"], arms["no"]
        if ya.estimate is not None and na.estimate is not None:
            gap = ya.estimate - na.estimate
            rad = ya.radius + na.radius
        else:
            gap, rad = None, 0.0
        ex = (exacts["yes"] - exacts["no"]) if exacts.get("yes") is not None and exacts.get("no") is not None else None
        checks.append(Check("decider gap", ">=", gap, rad, str(ex) if ex is not None else None,
                            lower - upper, judge(">=", gap, rad, ex, lower - upper), {}, note))
    if bval is not None:
        bv, brad = bval["value"], bval["radius"]
        acc = arms["yes"]
        exact_b = bval.get("exact")
        slack = 2 * (k - 1) * tau + (k - 1) * hoeffding_tail(tau, q)
        if acc.estimate is not None:
            diff = abs(_f(bv) - acc.estimate)
            checks.append(Check("|B - acceptance| (yes)", "<=", diff, brad + acc.radius, None, slack,
                                judge("<=", diff, brad + acc.radius, None, slack),
                                {"2(k-1)tau": 2 * (k - 1) * tau, "(k-1)*hoeffding_tail": slack - 2 * (k - 1) * tau}))
        yes_dev = max((float(r.distributional_deviation) for r in yes_devs), default=0.0)
        tail = (k - 1) * 2 * hoeffding_tail(tau / 2, q)
        bd = 1 - ec - k * ez - k * (1 / p + yes_dev) - tail
        checks.append(Check("B lower bound (yes)", ">=", _f(bv), brad, exact_b, bd,
                            judge(">=", _f(bv), brad, Fraction(exact_b) if exact_b else None, bd),
                            {"eps_c": ec, "k*eps_z": k * ez, "k*(1/p+deviation)": k * (1 / p + yes_dev),
                             "hoeffding_slack": tail}))
    return checks


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    start = time.perf_counter()
    text = to_text(cfg)
    pipe = _cached_pipeline(text)
    spec = pipe.inst.spec
    prof = measure_error_profile(spec, pipe.inst.yes, pipe.inst.witness, pipe.inst.no, cfg.budget)
    devs: dict[str, DeviationReport] = {}
    for arm in ("yes", "no"):
        devs.update(_measure_levels(pipe, arm))

    arms: dict[str, ArmResult] = {}
    exacts: dict[str, Fraction | None] = {}
    records: list[list] = []
    for name, a in pipe.arms.items():
        n = cfg.arm_trials[name]
        exact = None
        if cfg.mode == "exact":
            exact = enumerate_outcomes(lambda rng: a.trial(rng)[0], cfg.budget).prob(1)
        rows = run_trials(cfg, name, n)
        for r in rows:
            r.insert(3, str(a.x) if not isinstance(a.x, tuple) else f"{a.x[0]}|{a.x[1]}")
        records.extend(rows)
        accepts = sum(r[-1] for r in rows)
        est = accepts / n if n else None
        branches: dict[str, int] = {}
        for r in rows:
            branches[r[4]] = branches.get(r[4], 0) + 1
        arms[name] = ArmResult(name, rows[0][3] if rows else str(a.x), n, accepts, est,
                               _three_sigma(est, n) if n else 0.0,
                               hoeffding_radius(n, DELTA) if n else None,
                               str(exact) if exact is not None else None, dict(sorted(branches.items())))
        exacts[name] = exact

    bval = None
    if cfg.construction == "cr":
        a = pipe.arms["yes"]
        if cfg.mode == "exact":
            b = a.b_value("exact", 0, None)
            bval = {"value": b.value, "radius": 0.0, "exact": str(b.value)}
        elif cfg.trials:
            b = a.b_value("monte-carlo", cfg.trials, SeededRng(derive_seed(cfg.seed, "B")))
            bval = {"value": b.value, "radius": b.radius, "exact": None}

    checks = evaluate_bounds(pipe, prof, devs, arms, exacts, bval)
    verdicts = {c.verdict for c in checks}
    verdict = VIOLATED if VIOLATED in verdicts else INCONCLUSIVE if INCONCLUSIVE in verdicts else HOLDS
    return ExperimentResult(
        config=text, seed=cfg.seed,
        profile={"eps_c": str(prof.eps_c), "eps_s": str(prof.eps_s), "eps_z": str(prof.eps_z)},
        deviations={k: v.to_dict() for k, v in devs.items()},
        arms=list(arms.values()), checks=checks, verdict=verdict, records=records,
        wall_time=time.perf_counter() - start,
    )
