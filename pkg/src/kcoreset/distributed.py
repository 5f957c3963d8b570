"""Distributed coreset construction over partitioned data.

Each node summarizes its shard by cluster centers; a coordinating server
splits a global size budget N between per-node center counts and a pool of
t random samples, allocating both by the nodes' reported clustering costs.
Sampled points carry inverse-probability weights and each center carries
the residual weight of its own cell, so the total weight of the combined
coreset equals the total weight of the data exactly, and weighted sum-cost
estimates are unbiased over the sampling randomness.

Communication is deliberately tiny: each node uploads its K-entry cost
ladder (K*n scalars in total), the server answers with three scalars per
node (center count, sample count, weight normalizer), and only then do the
coreset points themselves travel.  A ProtocolTrace records every message so
the overhead can be audited.

``cdcc`` is the fixed-allocation variant: every node keeps exactly k
centers and the sample pool is split by cost alone.  It runs the very same
pipeline with the allocator pinned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusteringResult, assign_to_centers, k_clustering, lloyd_from
from .coreset import Coreset
from .data import WeightedPointSet
from .errors import ValidationError


@dataclass
class LocalLadder:
    """A node's clustering runs for every candidate center count 1..K."""

    node_id: int
    runs: list
    clamped: bool = False

    @property
    def costs(self) -> np.ndarray:
        return np.array([run.cost for run in self.runs])


@dataclass(frozen=True)
class NodeReport:
    """The scalars a node actually uploads: its clustering cost ladder."""

    node_id: int
    local_costs: np.ndarray


@dataclass(frozen=True)
class ServerConfig:
    """The server's reply: per-node center counts, sample counts, and C/t."""

    k_alloc: tuple
    t_alloc: tuple
    c_over_t: float
    t: int
    total_cost: float


@dataclass
class LocalCoreset:
    """A node's contribution: weighted samples plus residual-weighted centers."""

    node_id: int
    sample_points: np.ndarray
    sample_weights: np.ndarray
    center_points: np.ndarray
    center_weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(self.sample_weights.sum() + self.center_weights.sum())


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: str
    scalars: int
    payload: bool = False


@dataclass
class ProtocolTrace:
    messages: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def record(self, sender, receiver, kind, scalars, payload=False):
        self.messages.append(Message(sender, receiver, kind, int(scalars), payload))

    @property
    def overhead_scalars(self) -> int:
        return sum(m.scalars for m in self.messages if not m.payload)

    @property
    def payload_scalars(self) -> int:
        return sum(m.scalars for m in self.messages if m.payload)

    def to_dict(self) -> dict:
        return {
            "messages": [
                {
                    "sender": m.sender,
                    "receiver": m.receiver,
                    "kind": m.kind,
                    "scalars": m.scalars,
                    "payload": m.payload,
                }
                for m in self.messages
            ],
            "overhead_scalars": self.overhead_scalars,
            "payload_scalars": self.payload_scalars,
            "notes": list(self.notes),
        }


def node_local_centers(
    shard: WeightedPointSet, K: int, z: int = 1, seed: int = 0
) -> LocalLadder:
    """Cluster a shard for every center count k = 1..K.

    K is clamped to the shard size when necessary.  The reported costs are
    non-increasing in k: whenever the recursive initialization alone would
    regress, the previous run's centers plus the currently most expensive
    point are used as an alternative start and the better result wins.
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    clamped = K > shard.size
    rng = np.random.default_rng(seed)
    runs = []
    for k in range(1, min(K, shard.size) + 1):
        run_seed = int(rng.integers(2**63))
        cand = k_clustering(shard, k, z=z, seed=run_seed)
        if runs and cand.cost > runs[-1].cost:
            prev = runs[-1]
            d = np.linalg.norm(
                shard.points - prev.centers[prev.assignment], axis=1
            )
            extra = shard.points[int(np.argmax(shard.weights * d**z))]
            alt = lloyd_from(shard, np.vstack([prev.centers, extra]), z=z)
            if alt.cost < cand.cost:
                cand = alt
        runs.append(cand)
    return LocalLadder(node_id=-1, runs=runs, clamped=clamped)


def server_allocate(
    reports: list,
    N: int,
    seed: int = 0,
    k_fixed: int | None = None,
) -> ServerConfig:
    """Split the size budget into per-node center counts and sample counts.

    Starts every node at one center and greedily applies the single
    increment that most reduces (sum of chosen local costs) / sqrt(N - sum
    of center counts), keeping at least one sample slot free; ties go to
    the lowest node id.  The remaining t slots are assigned to nodes by one
    multinomial draw proportional to the chosen local costs.  With
    ``k_fixed`` the greedy phase is skipped and every node keeps exactly
    k_fixed centers.
    """
    n = len(reports)
    if n < 1:
        raise ValidationError("need at least one node report")
    costs = [np.asarray(r.local_costs, dtype=float) for r in reports]
    caps = [c.size for c in costs]
    if k_fixed is not None:
        if k_fixed < 1 or any(k_fixed > cap for cap in caps):
            raise ValidationError(f"fixed center count {k_fixed} exceeds a node's ladder")
        if n * k_fixed > N - 1:
            raise ValidationError(
                f"budget N={N} cannot host {k_fixed} centers per node plus samples"
            )
        k_alloc = [k_fixed] * n
    else:
        if N - 1 < n:
            raise ValidationError(f"budget N={N} too small for {n} nodes plus samples")
        k_alloc = [1] * n

        def objective(chosen):
            total_k = sum(chosen)
            return sum(c[j - 1] for c, j in zip(costs, chosen)) / np.sqrt(N - total_k)

        current = objective(k_alloc)
        while sum(k_alloc) < N - 1:
            best_j, best_val = None, current
            for j in range(n):
                if k_alloc[j] >= caps[j]:
                    continue
                k_alloc[j] += 1
                val = objective(k_alloc)
                k_alloc[j] -= 1
                if val < best_val:
                    best_j, best_val = j, val
            if best_j is None:
                break
            k_alloc[best_j] += 1
            current = best_val

    chosen_costs = np.array([c[j - 1] for c, j in zip(costs, k_alloc)])
    C = float(chosen_costs.sum())
    t = N - sum(k_alloc)
    rng = np.random.default_rng(seed)
    if C > 0:
        t_alloc = rng.multinomial(t, chosen_costs / C)
    else:
        t_alloc = np.zeros(n, dtype=int)
    c_over_t = C / t if t > 0 else 0.0
    return ServerConfig(
        k_alloc=tuple(int(v) for v in k_alloc),
        t_alloc=tuple(int(v) for v in t_alloc),
        c_over_t=c_over_t,
        t=int(t),
        total_cost=C,
    )


def node_sample(
    shard: WeightedPointSet,
    centers: np.ndarray,
    t_j: int,
    c_over_t: float,
    z: int = 1,
    seed: int = 0,
) -> LocalCoreset:
    """Draw a node's sample points and compute residual center weights.

    Each of the t_j draws picks point p with probability proportional to
    m_p = w_p * dist(p, nearest center)^z and carries weight
    (C/t) * w_p / m_p; duplicate draws are collapsed by weight summation.
    Every center then carries its cell's total weight minus the weight of
    the samples drawn from that cell, which makes the node's contribution
    conserve its shard's weight exactly (residuals can be negative).
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    assign = assign_to_centers(shard.points, centers)
    d = np.linalg.norm(shard.points - centers[assign], axis=1)
    m_p = shard.weights * d**z
    local_cost = float(m_p.sum())
    cell_weight = np.bincount(assign, weights=shard.weights, minlength=centers.shape[0])

    if t_j > 0 and local_cost > 0:
        rng = np.random.default_rng(seed)
        draws = rng.choice(shard.size, size=t_j, p=m_p / local_cost)
        unique, inverse = np.unique(draws, return_inverse=True)
        per_draw = c_over_t * shard.weights[draws] / m_p[draws]
        u = np.zeros(unique.size)
        np.add.at(u, inverse, per_draw)
        sample_points = shard.points[unique]
        sample_weights = u
        drained = np.zeros(centers.shape[0])
        np.add.at(drained, assign[unique], u)
    else:
        sample_points = np.empty((0, shard.dim))
        sample_weights = np.empty(0)
        drained = np.zeros(centers.shape[0])

    center_weights = cell_weight - drained
    return LocalCoreset(
        node_id=-1,
        sample_points=sample_points,
        sample_weights=sample_weights,
        center_points=centers.copy(),
        center_weights=center_weights,
    )


def drcc(
    shards: list,
    N: int,
    K: int,
    z: int = 1,
    seed: int = 0,
    k_fixed: int | None = None,
) -> tuple[Coreset, ProtocolTrace]:
    """Run the full distributed construction and return coreset plus trace.

    Args:
        shards: per-node WeightedPointSet list.
        N: global coreset size budget (centers plus samples).
        K: largest per-node center count offered to the allocator.
        z: clustering cost exponent used node-side.
        seed: master seed; node clustering, server sampling and node
            sampling each consume independent streams derived from it.
        k_fixed: pin every node's center count (the fixed-allocation
            variant) instead of running the greedy allocator.
    """
    n = len(shards)
    if n < 1:
        raise ValidationError("need at least one shard")
    if N < 1:
        raise ValidationError("coreset budget N must be >= 1")
    root = np.random.SeedSequence(seed)
    children = root.spawn(2 * n + 1)
    ladder_seeds = children[:n]
    server_seed = children[n]
    sample_seeds = children[n + 1:]

    trace = ProtocolTrace()
    ladders, reports = [], []
    for j, shard in enumerate(shards):
        ladder = node_local_centers(
            shard, K, z=z, seed=int(ladder_seeds[j].generate_state(1)[0])
        )
        ladder.node_id = j
        if ladder.clamped:
            trace.notes.append(f"node {j}: ladder clamped to shard size {shard.size}")
        ladders.append(ladder)
        reports.append(NodeReport(node_id=j, local_costs=ladder.costs))
        trace.record(f"node{j}", "server", "cost_ladder", scalars=len(ladder.costs))

    config = server_allocate(
        reports, N, seed=int(server_seed.generate_state(1)[0]), k_fixed=k_fixed
    )
    if config.total_cost == 0:
        trace.notes.append("all reported costs are zero; no samples drawn")
    for j in range(n):
        trace.record("server", f"node{j}", "allocation", scalars=3)

    parts, points, weights = [], [], []
    for j, shard in enumerate(shards):
        run = ladders[j].runs[config.k_alloc[j] - 1]
        local = node_sample(
            shard,
            run.centers,
            config.t_alloc[j],
            config.c_over_t,
            z=z,
            seed=int(sample_seeds[j].generate_state(1)[0]),
        )
        local.node_id = j
        parts.append(local)
        # only exact-zero residuals drop out (e.g. a center whose cell is empty)
        keep = local.center_weights != 0
        pts = np.vstack([local.sample_points, local.center_points[keep]])
        wts = np.concatenate([local.sample_weights, local.center_weights[keep]])
        points.append(pts)
        weights.append(wts)
        trace.record(
            f"node{j}", "server", "coreset",
            scalars=pts.shape[0] * (shard.dim + 1), payload=True,
        )

    coreset = Coreset(
        np.vstack(points),
        np.concatenate(weights),
        provenance={
            "algorithm": "cdcc" if k_fixed is not None else "drcc",
            "N": int(N),
            "K": int(K),
            "z": int(z),
            "seed": int(seed),
            "k_alloc": list(config.k_alloc),
            "t_alloc": list(config.t_alloc),
            "t": config.t,
        },
    )
    return coreset, trace


def cdcc(shards: list, N: int, k: int, z: int = 2, seed: int = 0) -> Coreset:
    """Fixed-allocation distributed coreset: every node keeps k centers.

    Runs the same pipeline as :func:`drcc` with the allocator pinned to k
    and the ladder capped at k, so for matching arguments the two produce
    identical coresets.
    """
    coreset, _ = drcc(shards, N, K=k, z=z, seed=seed, k_fixed=k)
    return coreset
