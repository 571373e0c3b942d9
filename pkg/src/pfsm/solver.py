"""Population search over encoded schemes: IJS and four baselines.

The genome is a continuous D-vector (D = runs + 2 * buses) decoded by
rounding into the integer operating scheme: run-to-bus duties, one
type per bus, one capacity share per bus.  Decoding is total: duty-time
conflicts are repaired deterministically, so one-bus-per-run and
one-type-per-bus always hold by construction.

Algorithms: ``ijs`` (jellyfish search + tent-map init + Levy kicks +
differential-evolution refinement), ``js`` (plain jellyfish search), and
``ga`` / ``pso`` / ``gwo`` textbook baselines.  All five share the
encoding, the decoder, the entropy-weight fitness and the evaluation
budget accounting, and are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from ._stats import mantegna_sigma
from .economics import FareMode
from .evaluation import Evaluation, evaluate
from .model import Instance
from .scalarize import EwmWeights, NormBounds, auto_penalty_coefficient, ewm_weights, fitness
from .solution import Solution

ALGORITHMS = ("ijs", "js", "ga", "pso", "gwo")


@dataclass
class SolverConfig:
    algorithm: str = "ijs"
    n_pop: int = 100
    max_iter: int = 150
    seed: int = 0
    include_freight: bool = True
    fare_mode: FareMode = FareMode.DESCRIBED
    death_penalty: bool = False
    penalty_coefficient: float | None = None   # None: auto from the initial sample
    # jellyfish family
    beta_d: float = 3.0            # current-drift coefficient
    gamma_motion: float = 0.1      # passive step scale
    c0: float = 0.5                # current/swarm switching threshold
    beta_levy: float = 1.5
    levy_span_frac: float = 0.05   # Levy kick scale as a fraction of each dimension's span
    cr: float = 0.5                # DE crossover probability
    mu_tent: float = 2.0
    js_logistic_init: bool = False  # plain JS may use its original logistic map
    # GA
    ga_crossover_rate: float = 0.9
    ga_mutation_sigma: float = 0.1  # fraction of the per-dimension span
    # PSO
    pso_inertia: float = 0.729
    pso_c1: float = 1.49445
    pso_c2: float = 1.49445
    pso_vmax_frac: float = 0.2

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.n_pop < 3:
            raise ValueError("population size must be at least 3")
        if self.max_iter < 1:
            raise ValueError("need at least one iteration")
        if not 1.0 < self.mu_tent <= 2.0:
            raise ValueError("mu_tent must be in (1, 2]")


@dataclass
class SolverTrace:
    algorithm: str
    seed: int
    iteration: list[int] = field(default_factory=list)
    best_f: list[float] = field(default_factory=list)
    best_z: list[float] = field(default_factory=list)
    best_t: list[float] = field(default_factory=list)
    feasible_count: list[int] = field(default_factory=list)
    evals: list[int] = field(default_factory=list)
    wall_time_s: float = 0.0

    def first_hit_iteration(self, tol: float = 1e-12) -> int:
        """Earliest iteration whose best fitness matches the final one."""
        return self.first_hit_of(self.best_f[-1], tol)

    def first_hit_of(self, level: float, tol: float = 1e-9) -> int:
        """Earliest iteration reaching ``level``; one past the end if never."""
        for it, f in zip(self.iteration, self.best_f):
            if f >= level - tol:
                return it
        return self.iteration[-1] + 1


@dataclass
class OptimizeResult:
    best_solution: Solution
    best_evaluation: Evaluation
    best_fitness: float
    trace: SolverTrace
    weights: EwmWeights
    norm_bounds: NormBounds
    penalty_coefficient: float
    total_evaluations: int

    @property
    def feasible(self) -> bool:
        return self.best_evaluation.feasible


# ---------------------------------------------------------------------------
# encoding


def search_bounds(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Continuous box around the integer genome.

    The box extends 0.49 beyond the first and last integer of every
    dimension so that boundary values get a (nearly) full-width rounding
    bin; decode clips after rounding.
    """
    r, k = inst.n_runs, inst.fleet_size
    pad = 0.49
    lb = np.concatenate([np.full(r, 1.0 - pad), np.full(k, -pad),
                         np.full(k, 100.0 * inst.lambda_min - pad)])
    ub = np.concatenate([np.full(r, k + pad), np.full(k, inst.n_types - 1 + pad),
                         np.full(k, 100.0 + pad)])
    return lb, ub


def _decode_tables(inst: Instance):
    """Per-instance repair tables: scan order and run-overlap matrix."""
    key = ("decode",)
    cached = inst._array_cache.get(key)
    if cached is None:
        n = inst.n_runs
        order = sorted(range(n), key=lambda i: (inst.runs[i].departure_min, inst.runs[i].id))
        overlap = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for j in range(n):
                a, b = inst.runs[i], inst.runs[j]
                overlap[i, j] = (a.departure_min < b.arrival_min
                                 and b.departure_min < a.arrival_min and i != j)
        cached = (np.array(order, dtype=np.int64), overlap)
        inst._array_cache[key] = cached
    return cached


def decode(position: np.ndarray, inst: Instance) -> Solution:
    """Round a continuous position into a valid scheme and repair duties.

    Conflicting duties (one bus, overlapping runs) are repaired by moving
    the later run to the lowest-numbered bus that is free for its whole
    scheduled span; the scan order (runs by departure time) makes the
    repair deterministic.
    """
    r, k = inst.n_runs, inst.fleet_size
    x = np.clip(np.rint(position[:r]), 1, k).astype(np.int64)
    y = np.clip(np.rint(position[r:r + k]), 0, inst.n_types - 1).astype(np.int64)
    lam_lo = round(100.0 * inst.lambda_min)
    lam = np.clip(np.rint(position[r + k:]), lam_lo, 100).astype(np.int64)

    order, overlap = _decode_tables(inst)
    assigned: list[list[int]] = [[] for _ in range(k + 1)]
    for i in order:
        bus = x[i]
        row = overlap[i]
        if any(row[j] for j in assigned[bus]):
            for cand in range(1, k + 1):
                if not any(row[j] for j in assigned[cand]):
                    bus = cand
                    break
            x[i] = bus
        assigned[bus].append(i)

    return Solution.from_parts(x, y, lam)


def encode(sol: Solution) -> np.ndarray:
    return sol.to_vector()


# ---------------------------------------------------------------------------
# operators


def init_population_tent(n_pop: int, dim: int, lb: np.ndarray, ub: np.ndarray,
                         rng: np.random.Generator, mu_tent: float = 2.0) -> np.ndarray:
    """Tent-map chaotic initialization mapped onto the search box.

    Each dimension iterates its own tent sequence down the population axis.
    The seeds avoid the map's fixed and periodic points, and a vanishing
    jitter (order 1e-9) is folded in each step: the full-height tent map is
    dyadic, so exact float iteration would otherwise collapse onto short
    cycles after a few dozen steps without measurably moving any sample.
    """
    bad = (0.0, 0.25, 0.5, 0.75, 1.0)
    chain = rng.uniform(0.02, 0.98, size=dim)
    for d in range(dim):
        while min(abs(chain[d] - b) for b in bad) < 1e-3:
            chain[d] = rng.uniform(0.02, 0.98)
    raw = np.empty((n_pop, dim))
    for i in range(n_pop):
        raw[i] = chain
        nxt = np.where(chain < 0.5, mu_tent * chain, mu_tent * (1.0 - chain))
        nxt = (nxt + rng.uniform(0.0, 1e-9, size=dim)) % 1.0
        chain = nxt
    return lb + raw * (ub - lb)


def init_population_logistic(n_pop: int, dim: int, lb: np.ndarray, ub: np.ndarray,
                             rng: np.random.Generator, mu: float = 4.0) -> np.ndarray:
    chain = rng.uniform(0.05, 0.95, size=dim)
    raw = np.empty((n_pop, dim))
    for i in range(n_pop):
        raw[i] = chain
        chain = mu * chain * (1.0 - chain)
        chain = np.clip(chain, 1e-12, 1.0 - 1e-12)
    return lb + raw * (ub - lb)


def time_control(t: int, max_iter: int, rng: np.random.Generator) -> float:
    """Switching signal in [0, 1]; large values select the ocean current."""
    return abs((1.0 - t / max_iter) * (2.0 * rng.random() - 1.0))


def ocean_current_move(x: np.ndarray, x_best: np.ndarray, pop_mean: np.ndarray,
                       beta_d: float, rng: np.random.Generator) -> np.ndarray:
    return x + rng.random(x.shape[0]) * (x_best - beta_d * rng.random(x.shape[0]) * pop_mean)


def swarm_move_passive(x: np.ndarray, lb: np.ndarray, ub: np.ndarray,
                       gamma_motion: float, rng: np.random.Generator) -> np.ndarray:
    return x + gamma_motion * rng.random(x.shape[0]) * (ub - lb)


def swarm_move_active(x: np.ndarray, x_other: np.ndarray, f_x: float, f_other: float,
                      rng: np.random.Generator) -> np.ndarray:
    # ties follow the other jellyfish
    direction = x_other - x if f_other >= f_x else x - x_other
    return x + rng.random(x.shape[0]) * direction


def levy_step(dim: int, beta_levy: float, rng: np.random.Generator) -> np.ndarray:
    sigma = mantegna_sigma(beta_levy)
    u = rng.normal(0.0, sigma, size=dim)
    v = rng.normal(0.0, 1.0, size=dim)
    return u / np.abs(v) ** (1.0 / beta_levy)


def de_trial(pop: np.ndarray, i: int, cr: float, rng: np.random.Generator) -> np.ndarray:
    """Differential-evolution trial vector for individual i.

    Mutation adds a randomly scaled difference of two other members to the
    current position; binomial crossover then mixes mutant and current
    coordinates.  The caller evaluates the trial and keeps it only when it
    is at least as fit (elitist selection).
    """
    n, dim = pop.shape
    if n < 3:
        raise ValueError("differential evolution needs a population of at least 3")
    j = int(rng.integers(n))
    while j == i:
        j = int(rng.integers(n))
    k = int(rng.integers(n))
    while k == i or k == j:
        k = int(rng.integers(n))
    alpha_star = rng.random()
    mutant = pop[i] + alpha_star * (pop[j] - pop[k])
    cross = rng.random(dim) < cr
    return np.where(cross, mutant, pop[i])


def wrap_bounds(x: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Fold an out-of-box point back in from the opposite bound.

    One extra pass covers points that overshoot by more than a full span;
    anything still outside afterwards is clipped.
    """
    out = x.copy()
    for _ in range(2):
        over = out > ub
        out[over] = (out[over] - ub[over]) + lb[over]
        under = out < lb
        out[under] = (out[under] - lb[under]) + ub[under]
        if not (np.any(out > ub) or np.any(out < lb)):
            break
    return np.clip(out, lb, ub)


# ---------------------------------------------------------------------------
# shared fitness machinery


class _FitnessContext:
    """Frozen scalarization context shared by all algorithms of one run."""

    def __init__(self, inst: Instance, config: SolverConfig):
        self.inst = inst
        self.config = config
        self.evals = 0
        self.weights: EwmWeights | None = None
        self.bounds: NormBounds | None = None
        self.penalty_coefficient: float = 0.0

    def evaluate_position(self, position: np.ndarray) -> tuple[Solution, Evaluation]:
        self.evals += 1
        sol = decode(position, self.inst)
        ev = evaluate(self.inst, sol, include_freight=self.config.include_freight,
                      fare_mode=self.config.fare_mode)
        return sol, ev

    def fit_weights(self, evaluations: list[Evaluation]) -> None:
        samples = [(ev.t, ev.z) for ev in evaluations]
        self.weights = ewm_weights(samples)
        self.bounds = NormBounds.from_samples(samples)
        if self.config.penalty_coefficient is not None:
            self.penalty_coefficient = self.config.penalty_coefficient
        else:
            self.penalty_coefficient = auto_penalty_coefficient(
                samples, self.bounds, self.weights)

    def fitness_of(self, ev: Evaluation) -> float:
        return fitness(ev.z, ev.t, self.weights, self.bounds, ev.violation,
                       self.penalty_coefficient,
                       death_penalty=self.config.death_penalty).value


class _Best:
    def __init__(self):
        self.f = -np.inf
        self.position: np.ndarray | None = None
        self.solution: Solution | None = None
        self.evaluation: Evaluation | None = None

    def offer(self, f: float, position: np.ndarray, sol: Solution, ev: Evaluation) -> None:
        if f > self.f:
            self.f = f
            self.position = position.copy()
            self.solution = sol
            self.evaluation = ev


def _init_shared(inst: Instance, config: SolverConfig, rng: np.random.Generator):
    lb, ub = search_bounds(inst)
    dim = lb.shape[0]
    ctx = _FitnessContext(inst, config)
    if config.algorithm == "js" and config.js_logistic_init:
        pop = init_population_logistic(config.n_pop, dim, lb, ub, rng)
    else:
        pop = init_population_tent(config.n_pop, dim, lb, ub, rng, config.mu_tent)
    sols, evs = [], []
    for i in range(config.n_pop):
        s, e = ctx.evaluate_position(pop[i])
        sols.append(s)
        evs.append(e)
    ctx.fit_weights(evs)
    fits = np.array([ctx.fitness_of(e) for e in evs])
    best = _Best()
    for i in range(config.n_pop):
        best.offer(fits[i], pop[i], sols[i], evs[i])
    return lb, ub, dim, ctx, pop, fits, evs, best


def _record(trace: SolverTrace, t: int, best: _Best, evs, ctx: _FitnessContext) -> None:
    trace.iteration.append(t)
    trace.best_f.append(best.f)
    trace.best_z.append(best.evaluation.z)
    trace.best_t.append(best.evaluation.t)
    trace.feasible_count.append(sum(1 for e in evs if e.feasible))
    trace.evals.append(ctx.evals)


# ---------------------------------------------------------------------------
# algorithms


def _run_jellyfish(inst: Instance, config: SolverConfig, improved: bool) -> OptimizeResult:
    rng = np.random.default_rng(config.seed)
    lb, ub, dim, ctx, pop, fits, evs, best = _init_shared(inst, config, rng)
    trace = SolverTrace(algorithm=config.algorithm, seed=config.seed)
    n = config.n_pop

    for t in range(1, config.max_iter + 1):
        for i in range(n):
            c = time_control(t, config.max_iter, rng)
            if c >= config.c0:
                mean = pop.mean(axis=0)
                new = ocean_current_move(pop[i], best.position, mean, config.beta_d, rng)
            else:
                if rng.random() > (1.0 - c):
                    new = swarm_move_passive(pop[i], lb, ub, config.gamma_motion, rng)
                else:
                    j = int(rng.integers(n))
                    while j == i:
                        j = int(rng.integers(n))
                    new = swarm_move_active(pop[i], pop[j], fits[i], fits[j], rng)
            if improved:
                alpha = rng.random()
                kick = levy_step(dim, config.beta_levy, rng)
                new = new + alpha * config.levy_span_frac * (ub - lb) * kick
            new = wrap_bounds(new, lb, ub)
            sol, ev = ctx.evaluate_position(new)
            f_new = ctx.fitness_of(ev)
            # greedy move acceptance, as in the original jellyfish search
            if f_new >= fits[i]:
                pop[i] = new
                fits[i] = f_new
                evs[i] = ev
            best.offer(f_new, new, sol, ev)

            if improved:
                trial = wrap_bounds(de_trial(pop, i, config.cr, rng), lb, ub)
                sol_u, ev_u = ctx.evaluate_position(trial)
                f_u = ctx.fitness_of(ev_u)
                if f_u >= fits[i]:
                    pop[i] = trial
                    fits[i] = f_u
                    evs[i] = ev_u
                    best.offer(f_u, trial, sol_u, ev_u)
        _record(trace, t, best, evs, ctx)

    return OptimizeResult(best.solution, best.evaluation, best.f, trace,
                          ctx.weights, ctx.bounds, ctx.penalty_coefficient, ctx.evals)


def clip_bounds(x: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    return np.clip(x, lb, ub)


def _run_ga(inst: Instance, config: SolverConfig) -> OptimizeResult:
    rng = np.random.default_rng(config.seed)
    lb, ub, dim, ctx, pop, fits, evs, best = _init_shared(inst, config, rng)
    trace = SolverTrace(algorithm="ga", seed=config.seed)
    n = config.n_pop
    span = ub - lb

    for t in range(1, config.max_iter + 1):
        def pick() -> int:
            a, b = int(rng.integers(n)), int(rng.integers(n))
            return a if fits[a] >= fits[b] else b

        children = np.empty_like(pop)
        for i in range(0, n, 2):
            p1, p2 = pop[pick()], pop[pick()]
            if rng.random() < config.ga_crossover_rate:
                # blend crossover, +-0.5 beyond the parent interval
                gamma = (1.0 + 2 * 0.5) * rng.random(dim) - 0.5
                c1 = p1 + gamma * (p2 - p1)
                c2 = p2 + gamma * (p1 - p2)
            else:
                c1, c2 = p1.copy(), p2.copy()
            children[i] = c1
            if i + 1 < n:
                children[i + 1] = c2
        mutate = rng.random(children.shape) < (1.0 / dim)
        children = children + mutate * rng.normal(0.0, config.ga_mutation_sigma, children.shape) * span
        elite = int(np.argmax(fits))
        children[0] = pop[elite]

        for i in range(n):
            children[i] = clip_bounds(children[i], lb, ub)
            sol, ev = ctx.evaluate_position(children[i])
            f = ctx.fitness_of(ev)
            pop[i] = children[i]
            fits[i] = f
            evs[i] = ev
            best.offer(f, children[i], sol, ev)
        _record(trace, t, best, evs, ctx)

    return OptimizeResult(best.solution, best.evaluation, best.f, trace,
                          ctx.weights, ctx.bounds, ctx.penalty_coefficient, ctx.evals)


def _run_pso(inst: Instance, config: SolverConfig) -> OptimizeResult:
    rng = np.random.default_rng(config.seed)
    lb, ub, dim, ctx, pop, fits, evs, best = _init_shared(inst, config, rng)
    trace = SolverTrace(algorithm="pso", seed=config.seed)
    n = config.n_pop
    span = ub - lb
    vmax = config.pso_vmax_frac * span
    vel = rng.uniform(-1.0, 1.0, size=pop.shape) * vmax
    pbest = pop.copy()
    pbest_f = fits.copy()

    for t in range(1, config.max_iter + 1):
        for i in range(n):
            r1, r2 = rng.random(dim), rng.random(dim)
            vel[i] = (config.pso_inertia * vel[i]
                      + config.pso_c1 * r1 * (pbest[i] - pop[i])
                      + config.pso_c2 * r2 * (best.position - pop[i]))
            vel[i] = np.clip(vel[i], -vmax, vmax)
            pop[i] = clip_bounds(pop[i] + vel[i], lb, ub)
            sol, ev = ctx.evaluate_position(pop[i])
            fits[i] = ctx.fitness_of(ev)
            evs[i] = ev
            if fits[i] > pbest_f[i]:
                pbest_f[i] = fits[i]
                pbest[i] = pop[i].copy()
            best.offer(fits[i], pop[i], sol, ev)
        _record(trace, t, best, evs, ctx)

    return OptimizeResult(best.solution, best.evaluation, best.f, trace,
                          ctx.weights, ctx.bounds, ctx.penalty_coefficient, ctx.evals)


def _run_gwo(inst: Instance, config: SolverConfig) -> OptimizeResult:
    rng = np.random.default_rng(config.seed)
    lb, ub, dim, ctx, pop, fits, evs, best = _init_shared(inst, config, rng)
    trace = SolverTrace(algorithm="gwo", seed=config.seed)
    n = config.n_pop

    for t in range(1, config.max_iter + 1):
        a = 2.0 - 2.0 * t / config.max_iter
        order = np.argsort(fits)[::-1]
        alpha, beta, delta = pop[order[0]].copy(), pop[order[min(1, n - 1)]].copy(), \
            pop[order[min(2, n - 1)]].copy()
        for i in range(n):
            cand = np.zeros(dim)
            for leader in (alpha, beta, delta):
                aa = 2.0 * a * rng.random(dim) - a
                cc = 2.0 * rng.random(dim)
                cand += leader - aa * np.abs(cc * leader - pop[i])
            pop[i] = clip_bounds(cand / 3.0, lb, ub)
            sol, ev = ctx.evaluate_position(pop[i])
            fits[i] = ctx.fitness_of(ev)
            evs[i] = ev
            best.offer(fits[i], pop[i], sol, ev)
        _record(trace, t, best, evs, ctx)

    return OptimizeResult(best.solution, best.evaluation, best.f, trace,
                          ctx.weights, ctx.bounds, ctx.penalty_coefficient, ctx.evals)


def optimize(inst: Instance, config: SolverConfig) -> OptimizeResult:
    """Run the configured algorithm; identical seeds give identical traces."""
    started = _time.perf_counter()
    if config.algorithm == "ijs":
        result = _run_jellyfish(inst, config, improved=True)
    elif config.algorithm == "js":
        result = _run_jellyfish(inst, config, improved=False)
    elif config.algorithm == "ga":
        result = _run_ga(inst, config)
    elif config.algorithm == "pso":
        result = _run_pso(inst, config)
    else:
        result = _run_gwo(inst, config)
    result.trace.wall_time_s = _time.perf_counter() - started

    sol = result.best_solution
    assert all(1 <= b <= inst.fleet_size for b in sol.x), "every run must map to one bus"
    assert all(0 <= ty < inst.n_types for ty in sol.y), "every bus must carry one type"
    return result
