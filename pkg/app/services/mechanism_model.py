"""Database neighbors, the Game i transform and the concrete mechanism generators."""
import math
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.errors import InputError
from app.core.logging import logger
from app.models.database import Database, DatabaseSpace
from app.models.mechanism import Mechanism
from app.models.noise import NoiseGrid
from app.schemas.mechanism_file import QUERY_NAMES, GeneratorSpec, NoiseSpec

Query = Union[Callable[[Database], float], Mapping[Database, float]]


def neighbors(space: DatabaseSpace, x: Sequence) -> List[Database]:
    """All databases at Hamming distance exactly 1 from x."""
    return space.neighbors(x)


def suppress(space: DatabaseSpace, x: Sequence, i: int) -> Database:
    """x with coordinate i (1-based) replaced by the default symbol."""
    return space.suppress(x, i)


def game_mechanism(m: Mechanism, i: int) -> Mechanism:
    """Game i: the mechanism run on x with coordinate i suppressed."""
    space = m.space
    space.check_index(i)

    def row_fn(x):
        return m.row_array(space.suppress(x, i))

    def log_row_fn(x):
        return m.log_row_array(space.suppress(x, i))

    return Mechanism.from_generator(space, m.transcripts, row_fn=row_fn, log_row_fn=log_row_fn,
                                    name=f"{m.name}[game {i}]", grid=m.grid)


def constant_mechanism(space: DatabaseSpace, dist_probs: Sequence[float],
                       transcripts: Sequence[str]) -> Mechanism:
    probs = np.asarray(dist_probs, dtype=float)
    return Mechanism.from_generator(space, transcripts, row_fn=lambda x: probs, name="constant")


def _require_binary(space: DatabaseSpace, what: str):
    if len(space.domain) != 2:
        raise InputError(f"{what} needs a two-symbol domain, got {list(space.domain)}")


def _symbol_codes(space: DatabaseSpace, x: Database) -> np.ndarray:
    return np.array([space.domain.index(entry) for entry in x])


def _randomized_response_table(space: DatabaseSpace, flip_prob: float):
    space.require_enumerable()
    databases = list(space.databases())
    codes = np.array([_symbol_codes(space, x) for x in databases])
    # mismatches[j, k]: coordinates where database j and transcript k differ
    mismatches = (codes[:, None, :] != codes[None, :, :]).sum(axis=2)
    table = np.power(flip_prob, mismatches) * np.power(1 - flip_prob, space.n - mismatches)
    labels = [space.encode(x) for x in databases]
    return databases, labels, table


def make_randomized_response(space: DatabaseSpace, flip_prob: float) -> Mechanism:
    """Flip each coordinate independently with probability flip_prob.

    Transcripts are the databases themselves, encoded as strings.
    """
    _require_binary(space, "Randomized response")
    if not 0 < flip_prob < 0.5:
        raise InputError(f"flip_prob must lie in (0, 1/2), got {flip_prob!r}")
    databases, labels, table = _randomized_response_table(space, flip_prob)
    descriptor = GeneratorSpec(type="randomized_response", flip_prob=flip_prob)
    return Mechanism.from_table(space, labels, dict(zip(databases, table)), descriptor=descriptor,
                                name="randomized_response")


def make_leaky_randomized_response(space: DatabaseSpace, flip_prob: float, leak_prob: float) -> Mechanism:
    """Randomized response that publishes the database verbatim with probability leak_prob.

    The leak lands on a dedicated transcript ``leak:<database>``, so the
    mechanism is (ln((1-p)/p), leak_prob)-DP and not pure DP.
    """
    _require_binary(space, "Leaky randomized response")
    if not 0 < flip_prob < 0.5:
        raise InputError(f"flip_prob must lie in (0, 1/2), got {flip_prob!r}")
    if not 0 < leak_prob < 1:
        raise InputError(f"leak_prob must lie in (0, 1), got {leak_prob!r}")
    databases, labels, table = _randomized_response_table(space, flip_prob)
    leaks = np.eye(len(databases)) * leak_prob
    full = np.hstack([(1 - leak_prob) * table, leaks])
    transcripts = labels + [f"leak:{label}" for label in labels]
    descriptor = GeneratorSpec(type="leaky_randomized_response", flip_prob=flip_prob, leak_prob=leak_prob)
    return Mechanism.from_table(space, transcripts, dict(zip(databases, full)), descriptor=descriptor,
                                name="leaky_randomized_response")


def _numeric(space: DatabaseSpace, what: str) -> Dict:
    values = {}
    for symbol in space.domain:
        try:
            values[symbol] = float(symbol)
        except (TypeError, ValueError):
            raise InputError(f"{what} needs numeric domain symbols, got {symbol!r}")
    return values


def named_query(space: DatabaseSpace, name: str) -> Callable[[Database], float]:
    if name not in QUERY_NAMES:
        raise InputError(f"Unknown query {name!r}; expected one of {', '.join(QUERY_NAMES)}")
    values = _numeric(space, f"The {name} query")
    reducer = {"sum": np.sum, "median": np.median, "max": np.max}[name]

    def query(x):
        return float(reducer([values[entry] for entry in x]))

    query.__name__ = name
    return query


def as_query(f: Query) -> Callable[[Database], float]:
    if callable(f):
        return f
    table = dict(f)

    def lookup(x):
        try:
            return float(table[tuple(x)])
        except KeyError:
            raise InputError(f"Query table has no value for database {x!r}")

    return lookup


def _query_range(space: DatabaseSpace, f: Callable[[Database], float]) -> tuple:
    values = [f(x) for x in space.databases()]
    return min(values), max(values)


def _noise_mechanism(space: DatabaseSpace, f: Callable[[Database], float], noise: NoiseSpec,
                     centers_range: tuple, descriptor: GeneratorSpec, name: str) -> Mechanism:
    grid = NoiseGrid(noise, centers_range)

    def log_row_fn(x):
        return grid.log_masses(float(f(x)))

    mechanism = Mechanism.from_generator(space, grid.labels, log_row_fn=log_row_fn,
                                         descriptor=descriptor.model_copy(update={"noise": grid.spec}),
                                         name=name, grid=grid)
    logger.debug("Built %s over %d grid cells (step %.6g, half-width %.6g)", name, len(grid), grid.step, grid.width)
    return mechanism


def make_noisy_sum(space: DatabaseSpace, noise: NoiseSpec, descriptor: Optional[GeneratorSpec] = None) -> Mechanism:
    """Sum of a binary database plus discretized Laplace or Gaussian noise.

    Rows are generated on demand; no table over all databases is built.
    """
    _require_binary(space, "The noisy sum")
    f = named_query(space, "sum")
    values = _numeric(space, "The noisy sum")
    lowest = space.n * min(values.values())
    highest = space.n * max(values.values())
    kind = "laplace_sum" if noise.kind == "laplace" else "gaussian_sum"
    descriptor = descriptor or GeneratorSpec(type=kind, noise=noise)
    return _noise_mechanism(space, f, noise, (lowest, highest), descriptor, kind)


def gaussian_sigma(epsilon: float, delta: float, log_base: float = math.e) -> float:
    """sigma with sigma^2 = log_base(1/delta) / epsilon^2."""
    if not epsilon > 0:
        raise InputError("Gaussian calibration needs epsilon > 0")
    if not 0 < delta < 1:
        raise InputError("Gaussian calibration needs 0 < delta < 1")
    if not log_base > 1:
        raise InputError("log base must exceed 1")
    return math.sqrt(math.log(1.0 / delta, log_base)) / epsilon


def make_gaussian_sum(space: DatabaseSpace, epsilon: float, delta: float, log_base: float = math.e,
                      grid_step: Optional[float] = None, tail_mass: Optional[float] = None) -> Mechanism:
    sigma = gaussian_sigma(epsilon, delta, log_base)
    noise = NoiseSpec(kind="gaussian", scale=sigma, grid_step=grid_step,
                      tail_mass=settings.TAIL_MASS if tail_mass is None else tail_mass)
    descriptor = GeneratorSpec(type="gaussian_sum", noise=noise, epsilon=epsilon, delta=delta, log_base=log_base)
    return make_noisy_sum(space, noise, descriptor=descriptor)


def make_laplace_sum(space: DatabaseSpace, scale: float, grid_step: Optional[float] = None,
                     tail_mass: Optional[float] = None) -> Mechanism:
    noise = NoiseSpec(kind="laplace", scale=scale, grid_step=grid_step,
                      tail_mass=settings.TAIL_MASS if tail_mass is None else tail_mass)
    return make_noisy_sum(space, noise)


def local_sensitivity(f: Query, space: DatabaseSpace, x: Sequence) -> float:
    """max over neighbors y of |f(x) - f(y)|."""
    space.require_enumerable()
    f = as_query(f)
    fx = f(space.validate(x))
    return max((abs(fx - f(y)) for y in space.neighbors(x)), default=0.0)


def make_local_sensitivity_laplace(f: Query, space: DatabaseSpace, s: float, epsilon: float,
                                   noise_grid: Optional[NoiseSpec] = None, query: Optional[str] = None) -> Mechanism:
    """f(x) plus discretized Laplace(s / epsilon) noise on one grid shared by all rows."""
    if not s > 0:
        raise InputError(f"Sensitivity bound s must be positive, got {s!r}")
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon!r}")
    space.require_enumerable()
    table = None
    if isinstance(f, Mapping):
        table = {space.encode(x): float(value) for x, value in f.items()}
    f = as_query(f)
    scale = s / epsilon
    noise = NoiseSpec(kind="laplace", scale=scale,
                      grid_step=noise_grid.grid_step if noise_grid else None,
                      tail_mass=noise_grid.tail_mass if noise_grid else settings.TAIL_MASS,
                      bounds=noise_grid.bounds if noise_grid else None)
    if noise_grid is not None and not math.isclose(noise_grid.scale, scale):
        logger.warning("Noise scale %.6g overridden by s / epsilon = %.6g", noise_grid.scale, scale)
    descriptor = GeneratorSpec(type="ls_laplace", noise=noise, query=query, table=table,
                               sensitivity=s, epsilon=epsilon)
    return _noise_mechanism(space, f, noise, _query_range(space, f), descriptor, "ls_laplace")


def build_from_spec(space: DatabaseSpace, spec: GeneratorSpec) -> Mechanism:
    """Rebuild a mechanism from its generator descriptor."""
    if spec.type == "randomized_response":
        return make_randomized_response(space, spec.flip_prob)
    if spec.type == "leaky_randomized_response":
        return make_leaky_randomized_response(space, spec.flip_prob, spec.leak_prob)
    if spec.type in ("laplace_sum", "gaussian_sum"):
        return make_noisy_sum(space, spec.noise, descriptor=spec)
    if spec.query is not None:
        f = named_query(space, spec.query)
    else:
        f = {space.decode(key): value for key, value in spec.table.items()}
    epsilon = spec.epsilon if spec.epsilon is not None else 1.0
    s = spec.sensitivity if spec.sensitivity is not None else spec.noise.scale * epsilon
    return make_local_sensitivity_laplace(f, space, s, epsilon, noise_grid=spec.noise, query=spec.query)
