"""Direct-product query graphs and sampler diagnostics.

The reduction's query structure, abstracted: a base instance x is embedded
at a uniform slot of a k-tuple whose other slots are i.i.d. uniform. That
defines a bipartite graph between base instances and tuples whose sampler
quality controls how well per-tuple success transfers back to per-instance
success. check_sampler measures, for a dense tuple set U, the fraction of
base instances whose conditional hit rate falls below (1 - c) times the
global density; a (delta, c)-sampler keeps that fraction at most delta.

Tuples over the base domain F_p^dim are encoded as integers in mixed radix
|X| = p^dim (slot 0 least significant), which keeps membership predicates
vectorizable over raw index arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .field import PrimeField

# Tuple domains must stay indexable by int64 (with headroom for the mixed
# radix arithmetic); exhaustive sweeps cut off far earlier.
MAX_TUPLE_DOMAIN = 2**62
MAX_EXHAUSTIVE_TUPLES = 2**26

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 arrays (wrapping arithmetic)."""
    z = (x + _GOLDEN).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class BaseDomain:
    """The base instance space F_p^dim, addressed by integer index."""

    field: PrimeField
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")

    @property
    def size(self) -> int:
        return self.field.modulus**self.dim


class QueryGraph:
    """The k-fold direct-product embedding graph over a base domain."""

    def __init__(self, base: BaseDomain, k: int):
        if k < 1:
            raise ValueError(f"copy count must be positive, got {k}")
        self.base = base
        self.k = k
        self.y_size = base.size**k
        if self.y_size > MAX_TUPLE_DOMAIN:
            raise ValueError(f"tuple domain of size {self.y_size} exceeds {MAX_TUPLE_DOMAIN}")

    @property
    def x_size(self) -> int:
        return self.base.size

    def tuple_index(self, components: Sequence[int]) -> int:
        if len(components) != self.k:
            raise ValueError(f"expected {self.k} components, got {len(components)}")
        s = self.base.size
        idx = 0
        for t, x in enumerate(components):
            if not 0 <= x < s:
                raise ValueError(f"component {x} out of range for base size {s}")
            idx += x * s**t
        return idx

    def components(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.y_size:
            raise IndexError(f"tuple index {index} out of range")
        s = self.base.size
        out = []
        for _ in range(self.k):
            out.append(index % s)
            index //= s
        return tuple(out)

    def embed_indices(self, x: int, slot: int, co_indices: np.ndarray) -> np.ndarray:
        """Tuple indices that place x at `slot` with the given co-tuples.

        co_indices enumerates the k-1 remaining slots packed in the same
        mixed radix (slots below `slot` in the low digits).
        """
        s = self.base.size
        lo_mod = s**slot
        low = co_indices % lo_mod
        high = co_indices // lo_mod
        return low + x * lo_mod + high * (lo_mod * s)


def direct_product_reduce(
    graph: QueryGraph,
    x: int,
    rng: np.random.Generator,
    slot: Optional[int] = None,
) -> tuple[int, ...]:
    """Embed a base instance into a k-tuple with i.i.d. uniform co-slots.

    The slot is uniform unless pinned. Returns the tuple componentwise.
    """
    if not 0 <= x < graph.x_size:
        raise ValueError(f"instance {x} out of range for base size {graph.x_size}")
    if slot is None:
        slot = int(rng.integers(graph.k))
    elif not 0 <= slot < graph.k:
        raise IndexError(f"slot {slot} out of range for {graph.k} copies")
    components = [int(v) for v in rng.integers(0, graph.x_size, size=graph.k)]
    components[slot] = x
    return tuple(components)


class DenseSet:
    """A subset of the tuple domain with positive density.

    The membership indicator is vectorized over int64 tuple-index arrays.
    `density` is the nominal measure used for reporting; measured density
    comes from density_exact / the Monte Carlo estimate in check_sampler.
    """

    def __init__(self, indicator: Callable[[np.ndarray], np.ndarray], density: float, label: str = ""):
        if not 0.0 < density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {density}")
        self.indicator = indicator
        self.density = float(density)
        self.label = label

    def contains_index(self, index: int) -> bool:
        return bool(self.indicator(np.array([index], dtype=np.int64))[0])

    @classmethod
    def pseudorandom(cls, density: float, seed: int) -> "DenseSet":
        """Membership by keyed hash threshold: a stable pseudorandom set."""
        if not 0.0 < density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {density}")
        if density >= 1.0:
            return cls(lambda idx: np.ones(len(idx), dtype=bool), 1.0, f"random(all,{seed})")
        threshold = np.uint64(int(density * 2.0**64))
        seed_u = np.uint64(seed & (2**64 - 1))

        def indicator(idx: np.ndarray) -> np.ndarray:
            h = _splitmix64(idx.astype(np.uint64) * _GOLDEN + seed_u)
            return h < threshold

        return cls(indicator, density, f"random({density},{seed})")

    @classmethod
    def from_indices(cls, graph: QueryGraph, indices) -> "DenseSet":
        members = np.unique(np.asarray(list(indices), dtype=np.int64))
        if members.size == 0:
            raise ValueError("dense set cannot be empty")
        density = members.size / graph.y_size

        def indicator(idx: np.ndarray) -> np.ndarray:
            return np.isin(idx, members)

        return cls(indicator, density, f"explicit({members.size})")


def density_exact(graph: QueryGraph, dense: DenseSet) -> float:
    """Exact measure of the set under the uniform tuple distribution."""
    if graph.y_size > MAX_EXHAUSTIVE_TUPLES:
        raise ValueError(f"tuple domain of size {graph.y_size} too large for enumeration")
    idx = np.arange(graph.y_size, dtype=np.int64)
    return float(np.mean(dense.indicator(idx)))


def conditional_hit_rate_exact(graph: QueryGraph, dense: DenseSet, x: int) -> float:
    """Exact Pr[tuple in U | instance x], averaging over slots and co-tuples."""
    if not 0 <= x < graph.x_size:
        raise ValueError(f"instance {x} out of range")
    co_count = graph.x_size ** (graph.k - 1)
    if co_count * graph.k > MAX_EXHAUSTIVE_TUPLES:
        raise ValueError("co-tuple domain too large for enumeration")
    co = np.arange(co_count, dtype=np.int64)
    total = 0.0
    for slot in range(graph.k):
        members = dense.indicator(graph.embed_indices(x, slot, co))
        total += float(np.mean(members))
    return total / graph.k


def violation_fraction_exact(graph: QueryGraph, dense: DenseSet, c: float) -> tuple[float, float]:
    """Exact sampler check over every base instance.

    Returns (violation fraction, exact density): the fraction of x whose
    conditional hit rate falls strictly below (1 - c) times the density.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    density = density_exact(graph, dense)
    threshold = (1.0 - c) * density
    violations = 0
    for x in range(graph.x_size):
        if conditional_hit_rate_exact(graph, dense, x) < threshold:
            violations += 1
    return violations / graph.x_size, density


@dataclass(frozen=True)
class SamplerCheck:
    violation_fraction: float
    density: float
    threshold: float
    x_count: int
    violations: int
    delta: float
    c: float

    @property
    def holds(self) -> bool:
        """Whether the measured graph met the (delta, c)-sampler bound."""
        return self.violation_fraction <= self.delta


def check_sampler(
    graph: QueryGraph,
    dense: DenseSet,
    c: float,
    delta: float,
    x_samples: int,
    y_samples_per_x: int,
    rng: np.random.Generator,
) -> SamplerCheck:
    """Monte Carlo sampler diagnostic for a dense tuple set.

    Estimates the global density (exactly when the tuple domain is small),
    then for x_samples uniform base instances estimates the conditional
    hit rate from y_samples_per_x random embeddings each. An instance
    violates when its conditional rate falls below (1 - c) * density.
    """
    if not 0.0 < c < delta < 1.0:
        raise ValueError(f"parameters must satisfy 0 < c < delta < 1, got c={c}, delta={delta}")
    if x_samples < 1 or y_samples_per_x < 1:
        raise ValueError("sample counts must be positive")

    if graph.y_size <= MAX_EXHAUSTIVE_TUPLES:
        density = density_exact(graph, dense)
    else:
        draws = max(x_samples * y_samples_per_x, 10000)
        idx = _sample_tuple_indices(graph, draws, rng)
        density = float(np.mean(dense.indicator(idx)))
    threshold = (1.0 - c) * density

    violations = 0
    for _ in range(x_samples):
        x = int(rng.integers(graph.x_size))
        slots = rng.integers(0, graph.k, size=y_samples_per_x)
        co = _sample_co_indices(graph, y_samples_per_x, rng)
        hits = 0
        # group draws by slot so each group embeds with one radix split
        for slot in range(graph.k):
            mask = slots == slot
            if not mask.any():
                continue
            y = graph.embed_indices(x, slot, co[mask])
            hits += int(np.count_nonzero(dense.indicator(y)))
        rate = hits / y_samples_per_x
        if rate < threshold:
            violations += 1

    return SamplerCheck(
        violation_fraction=violations / x_samples,
        density=density,
        threshold=threshold,
        x_count=x_samples,
        violations=violations,
        delta=delta,
        c=c,
    )


def _sample_tuple_indices(graph: QueryGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    if graph.y_size < 2**63:
        return rng.integers(0, graph.y_size, size=count, dtype=np.int64)
    raise ValueError("tuple domain too large to index")


def _sample_co_indices(graph: QueryGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    co_size = graph.x_size ** (graph.k - 1)
    return rng.integers(0, co_size, size=count, dtype=np.int64)


# ---------------------------------------------------------------------------
# parameter conditions
# ---------------------------------------------------------------------------


def lemma_condition(k: int, c: float, delta: float, eps: float) -> bool:
    """Sampler adequacy for density eps: 2*exp(-k*c^2*delta/8) <= c*eps."""
    if k < 1:
        raise ValueError(f"copy count must be positive, got {k}")
    return 2.0 * math.exp(-k * c * c * delta / 8.0) <= c * eps


def theorem_condition(k: int, delta: float, eps: float) -> bool:
    """Density reachable at k copies: eps >= 4*exp(-delta*k/32)."""
    if k < 1:
        raise ValueError(f"copy count must be positive, got {k}")
    return eps >= 4.0 * math.exp(-delta * k / 32.0)
