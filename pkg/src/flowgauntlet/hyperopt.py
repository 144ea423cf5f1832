"""Random search, genetic algorithm and particle swarm over discrete grids.

A fitness function maps a :class:`Candidate` to an ``(f1, accuracy)``
tuple. RS and GA rank candidates lexicographically on that tuple; PSO uses
the equal-weight sum ``0.5 * f1 + 0.5 * accuracy``. Every optimizer returns
a :class:`SearchResult` carrying the best candidate and a per-evaluation
trace.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import DtParams, MlpParams, RfParams, metrics, predict, train_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperparamSpace:
    """Ordered ``(name, values)`` pairs; each domain is a finite sequence."""

    domains: tuple

    def __post_init__(self):
        doms = tuple((str(n), tuple(v)) for n, v in self.domains)
        for name, values in doms:
            if not values:
                raise ValueError(f"empty domain for {name}")
        object.__setattr__(self, "domains", doms)

    @property
    def names(self):
        return tuple(n for n, _ in self.domains)

    @property
    def sizes(self):
        return np.array([len(v) for _, v in self.domains], dtype=np.int64)

    def __len__(self):
        return len(self.domains)

    def candidate(self, indices):
        indices = tuple(int(i) for i in indices)
        return Candidate(indices, tuple(v[i] for (_, v), i in zip(self.domains, indices)))

    def random_indices(self, rng):
        return tuple(int(rng.integers(0, s)) for s in self.sizes)

    def contains(self, cand):
        return all(0 <= i < s and v[i] == val
                   for i, s, (_, v), val in zip(cand.indices, self.sizes, self.domains, cand.values))


@dataclass(frozen=True)
class Candidate:
    indices: tuple
    values: tuple
    fitness: tuple = None

    def as_dict(self, space):
        return dict(zip(space.names, self.values))

    def with_fitness(self, fitness):
        return Candidate(self.indices, self.values, tuple(float(f) for f in fitness))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    candidate_id: int
    f1: float
    accuracy: float
    is_best: bool


@dataclass
class SearchResult:
    best: Candidate
    trace: list = field(default_factory=list)
    best_per_step: list = field(default_factory=list)
    population: list = field(default_factory=list)


def lexicographic(fitness):
    return tuple(fitness)


def weighted(fitness):
    f1, acc = fitness
    return 0.5 * f1 + 0.5 * acc


class _Evaluator:
    """Caches fitness by index tuple and records the trace."""

    def __init__(self, space, fitness_fn, key):
        self.space = space
        self.fitness_fn = fitness_fn
        self.key = key
        self.cache = {}
        self.trace = []
        self.best = None
        self.next_id = 0

    def __call__(self, indices, iteration):
        cand = self.space.candidate(indices)
        if cand.indices not in self.cache:
            fit = self.fitness_fn(cand)
            self.cache[cand.indices] = tuple(float(f) for f in fit)
        cand = cand.with_fitness(self.cache[cand.indices])
        improved = self.best is None or self.key(cand.fitness) > self.key(self.best.fitness)
        if improved:
            self.best = cand
        self.trace.append(TraceRow(iteration, self.next_id, cand.fitness[0], cand.fitness[1],
                                   improved))
        self.next_id += 1
        return cand


def random_search(space, budget, fitness_fn, seed=0, key=lexicographic):
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    ev = _Evaluator(space, fitness_fn, key)
    steps = []
    for it in range(budget):
        ev(space.random_indices(rng), it)
        steps.append(ev.best.fitness)
    return SearchResult(ev.best, ev.trace, steps)


def tournament_select(population, size, rng, key=lexicographic):
    """Best of ``size`` distinct individuals drawn uniformly."""
    size = min(size, len(population))
    picks = rng.choice(len(population), size=size, replace=False)
    best = picks[0]
    for i in picks[1:]:
        if key(population[i].fitness) > key(population[best].fitness):
            best = i
    return population[best]


def uniform_crossover(a, b, rng):
    take_a = rng.random(len(a)) < 0.5
    return tuple(x if t else y for x, y, t in zip(a, b, take_a))


def mutate(indices, space, prob, rng):
    """With probability ``prob`` replace one uniformly chosen gene."""
    if rng.random() >= prob:
        return tuple(indices)
    out = list(indices)
    j = int(rng.integers(0, len(out)))
    out[j] = int(rng.integers(0, space.sizes[j]))
    return tuple(out)


def ga_optimize(space, population=100, generations=100, tournament=5, mutation_prob=0.2,
                fitness_fn=None, seed=0, key=lexicographic, initial_population=None):
    """Generational GA with one elite.

    Each of ``generations`` rounds evaluates the current population; all
    rounds but the last then breed the next population from tournament
    winners via uniform crossover and single-gene mutation.
    """
    if population < 2:
        raise ValueError("population must be >= 2")
    rng = np.random.default_rng(seed)
    ev = _Evaluator(space, fitness_fn, key)
    if initial_population is None:
        pop_idx = [space.random_indices(rng) for _ in range(population)]
    else:
        pop_idx = [tuple(p) for p in initial_population]
    steps = []
    pop = []
    for gen in range(generations):
        pop = [ev(ind, gen) for ind in pop_idx]
        steps.append(ev.best.fitness)
        if gen == generations - 1:
            break
        elite = max(pop, key=lambda c: key(c.fitness))
        nxt = [elite.indices]
        while len(nxt) < len(pop):
            pa = tournament_select(pop, tournament, rng, key)
            pb = tournament_select(pop, tournament, rng, key)
            child = uniform_crossover(pa.indices, pb.indices, rng)
            nxt.append(mutate(child, space, mutation_prob, rng))
        pop_idx = nxt
    return SearchResult(ev.best, ev.trace, steps, pop)


@dataclass(frozen=True)
class GaConfig:
    """GA settings bundled for callers that re-tune models; ``space`` defaults per kind."""

    population: int = 10
    generations: int = 5
    tournament: int = 3
    mutation_prob: float = 0.2
    seed: int = 0
    space: object = None

    def run(self, space, fitness_fn):
        return ga_optimize(space, self.population, self.generations, self.tournament,
                           self.mutation_prob, fitness_fn, self.seed)


def pso_velocity(v, x, p_best, g_best, w, c1, c2, r1, r2):
    return w * v + c1 * r1 * (p_best - x) + c2 * r2 * (g_best - x)


def pso_optimize(space, particles=100, iterations=50, w=0.9, c1=1.5, c2=2.0,
                 fitness_fn=None, seed=0, key=weighted):
    """Swarm over real-valued index positions.

    Positions are clamped to ``[0, size - 1]`` after each move and rounded
    to the nearest index when evaluated.
    """
    if particles < 1:
        raise ValueError("particles must be >= 1")
    rng = np.random.default_rng(seed)
    hi = (space.sizes - 1).astype(np.float64)
    d = len(space)
    ev = _Evaluator(space, fitness_fn, key)

    def evaluate(pos, it):
        return ev(np.rint(pos).astype(np.int64), it)

    x = rng.uniform(0.0, 1.0, size=(particles, d)) * hi
    v = rng.uniform(-1.0, 1.0, size=(particles, d)) * hi * 0.1
    p_pos = x.copy()
    p_fit = [evaluate(x[i], 0).fitness for i in range(particles)]
    steps = [ev.best.fitness]
    g_pos = p_pos[int(np.argmax([key(f) for f in p_fit]))].copy()
    for it in range(1, iterations + 1):
        for i in range(particles):
            r1 = rng.random(d)
            r2 = rng.random(d)
            v[i] = pso_velocity(v[i], x[i], p_pos[i], g_pos, w, c1, c2, r1, r2)
            x[i] = np.clip(x[i] + v[i], 0.0, hi)
            cand = evaluate(x[i], it)
            if key(cand.fitness) > key(p_fit[i]):
                p_fit[i] = cand.fitness
                p_pos[i] = x[i].copy()
                if ev.best is cand or key(cand.fitness) >= key(ev.best.fitness):
                    g_pos = x[i].copy()
        steps.append(ev.best.fitness)
    return SearchResult(ev.best, ev.trace, steps)


# ---------------------------------------------------------------------------
# classifier fitness
# ---------------------------------------------------------------------------

def _grid(start, stop, step):
    return [round(v, 10) for v in np.arange(start, stop + step / 2, step)]


DT_SPACE = HyperparamSpace((
    ("criterion", ("gini", "entropy")),
    ("splitter", ("best", "random")),
    ("max_depth", (None, *range(3, 51, 3))),
    ("min_samples_split", tuple(range(2, 21))),
    ("min_samples_leaf", tuple(range(1, 21))),
    ("min_weight_fraction_leaf", tuple(_grid(0.0, 0.5, 0.05))),
    ("max_features", ("sqrt", "log2", "all")),
    ("max_leaf_nodes", (None, *range(10, 101, 10))),
    ("min_impurity_decrease", tuple(_grid(0.0, 0.5, 0.05))),
    ("ccp_alpha", tuple(_grid(0.0, 0.05, 0.01))),
))

RF_SPACE = HyperparamSpace((
    ("n_estimators", tuple(range(1, 192, 10))),
    ("criterion", ("gini", "entropy")),
    ("max_depth", (None, *range(3, 51, 3))),
    ("min_samples_split", tuple(range(2, 21))),
    ("min_samples_leaf", tuple(range(1, 21))),
    ("min_weight_fraction_leaf", tuple(_grid(0.0, 0.5, 0.05))),
    ("max_features", ("sqrt", "log2", "all", *range(2, 10))),
    ("max_leaf_nodes", (None, *range(10, 101, 10))),
    ("min_impurity_decrease", tuple(_grid(0.0, 1.0, 0.1))),
    ("bootstrap", (True, False)),
    ("ccp_alpha", tuple(_grid(0.0, 0.05, 0.01))),
))

MLP_SPACE = HyperparamSpace((
    ("hidden_layers", (1, 2, 3, 4, 5)),
    ("nodes_per_layer", tuple(range(1, 51))),
    ("activation", ("relu", "sigmoid", "tanh")),
    ("optimizer", ("adam", "sgd", "rmsprop")),
    ("loss", ("binary_crossentropy", "hinge")),
))

DEFAULT_SPACES = {"decision_tree": DT_SPACE, "random_forest": RF_SPACE, "mlp": MLP_SPACE}
KIND_ALIASES = {"dt": "decision_tree", "rf": "random_forest", "nn": "mlp"}
PARAM_TYPES = {"decision_tree": DtParams, "random_forest": RfParams, "mlp": MlpParams}


def canonical_kind(kind):
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in PARAM_TYPES:
        raise ValueError(f"unknown model kind {kind!r}")
    return kind


def params_for(kind, values, base=None):
    """Build a params object for ``kind`` from a name->value mapping.

    ``base`` supplies the fields the search does not touch (epochs, seed...).
    """
    kind = canonical_kind(kind)
    merged = dict(base or {})
    merged.update(values)
    return PARAM_TYPES[kind](**merged)


def fitness_classifier(config, train, validation, kind, space=None, base=None, seed=0):
    """Train on ``train`` with ``config`` and score ``(f1, accuracy)`` on ``validation``.

    Any failure while building or training is logged and scored ``(0, 0)``.
    """
    kind = canonical_kind(kind)
    values = config.as_dict(space) if isinstance(config, Candidate) else dict(config)
    try:
        params = params_for(kind, values, base)
        model = train_model(kind, train, params, seed)
        m = metrics(predict(model, validation), validation.y)
    except Exception as exc:  # noqa: BLE001 - any failure scores zero
        log.warning("fitness evaluation failed for %s: %s", values, exc)
        return 0.0, 0.0
    return m.f1, m.accuracy


def classifier_fitness_fn(train, validation, kind, space, base=None, seed=0):
    def fn(cand):
        return fitness_classifier(cand, train, validation, kind, space, base, seed)
    return fn


def write_trace_csv(trace, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "candidate_id", "f1", "accuracy", "is_best"])
        for r in trace:
            w.writerow([r.iteration, r.candidate_id, repr(r.f1), repr(r.accuracy),
                        int(r.is_best)])
    return path


def write_best_json(best, space, path, extra=None):
    doc = {"values": best.as_dict(space), "fitness": list(best.fitness)}
    doc.update(extra or {})
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
