"""Coresets built from k-clustering centers, with certified error bounds.

A coreset is a small weighted point set D standing in for a large one P:
for every query model x, cost(D, x) should stay within a factor (1 +/- eps)
of cost(P, x).  Using cluster centers weighted by their cluster's total
weight achieves this for every cost function that is rho-Lipschitz in the
point argument, and the achieved eps can be certified from the clustering
run itself in two ways:

  * from the cost gap between the k-center and 2k-center runs:
    eps = rho * (gap / w_min)^(1/z), valid for any data the same run could
    have produced;
  * from the realized partition: eps = rho * max distance between a point
    and its assigned center, which is usually much smaller.

The adaptive construction grows k until the gap certificate meets a target.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .clustering import (
    ClusteringResult,
    DoubledRun,
    extend_to_doubled,
    k_clustering_doubled,
)
from .data import WeightedPointSet
from .errors import ThresholdNotReachedError, ValidationError


@dataclass(frozen=True)
class EpsCertificate:
    """Certified coreset error for a rho-Lipschitz cost function.

    eps_gap derives from the k-vs-2k cost gap; eps_maxdist from the realized
    maximum point-to-center distance.  Both certify the same guarantee;
    eps_maxdist is typically the tighter of the two.
    """

    eps_gap: float
    eps_maxdist: float
    rho: float
    z: int
    k: int
    gap: float
    max_center_dist: float
    w_min: float

    def absolute(self, total_weight: float, aggregation: str = "sum") -> float:
        """Additive error bound for cost functions without the >=1 floor."""
        if aggregation == "sum":
            return self.eps_maxdist * total_weight
        if aggregation == "max":
            return self.eps_maxdist
        raise ValidationError(f"unknown aggregation {aggregation!r}")

    def to_dict(self) -> dict:
        return {
            "eps_gap": self.eps_gap,
            "eps_maxdist": self.eps_maxdist,
            "rho": self.rho,
            "z": self.z,
            "k": self.k,
            "gap": self.gap,
            "max_center_dist": self.max_center_dist,
            "w_min": self.w_min,
        }


@dataclass
class Coreset:
    """Weighted summary of a dataset.

    Weights are allowed to be negative (the distributed construction assigns
    residual weights to local centers, which can dip below zero); use
    ``to_pointset`` / ``nonnegative_pointset`` before handing the coreset to
    a solver that needs proper weights.
    """

    points: np.ndarray
    weights: np.ndarray
    provenance: dict
    eps_bound: float | None = None
    certificate: EpsCertificate | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.points.shape[0],):
            raise ValidationError("coreset weights do not match points")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def to_pointset(self) -> WeightedPointSet:
        return WeightedPointSet(self.points, self.weights)

    def nonnegative_pointset(self) -> tuple[WeightedPointSet, bool]:
        """Clamp negative weights to zero, rescaling to preserve total weight.

        Returns the usable point set and a flag saying whether clamping
        actually changed anything.
        """
        if np.all(self.weights > 0):
            return WeightedPointSet(self.points, self.weights), False
        keep = self.weights > 0
        if not keep.any():
            raise ValidationError("coreset has no positive-weight points")
        kept = self.weights[keep]
        scale = self.total_weight / kept.sum() if kept.sum() > 0 else 1.0
        if scale <= 0:
            scale = 1.0
        return WeightedPointSet(self.points[keep], kept * scale), True

    def save(self, prefix: str) -> tuple[str, str]:
        """Write ``<prefix>.csv`` (points + weights) and ``<prefix>.json`` (metadata)."""
        csv_path, json_path = prefix + ".csv", prefix + ".json"
        header = ",".join([f"x{j}" for j in range(self.dim)] + ["weight"])
        rows = [
            ",".join([repr(float(v)) for v in p] + [repr(float(w))])
            for p, w in zip(self.points, self.weights)
        ]
        with open(csv_path, "w") as fh:
            fh.write(header + "\n" + "\n".join(rows) + "\n")
        meta = {
            "provenance": self.provenance,
            "eps_bound": self.eps_bound,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "size": self.size,
            "total_weight": self.total_weight,
        }
        with open(json_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def load_coreset(path: str) -> Coreset:
    """Load a coreset saved by :meth:`Coreset.save` (pass the prefix or the .csv)."""
    prefix = path[:-4] if path.endswith(".csv") else path
    csv_path, json_path = prefix + ".csv", prefix + ".json"
    if not os.path.exists(csv_path):
        raise ValidationError(f"coreset file {csv_path!r} does not exist")
    raw = np.genfromtxt(csv_path, delimiter=",", skip_header=1, dtype=float)
    raw = np.atleast_2d(raw)
    points, weights = raw[:, :-1], raw[:, -1]
    provenance, eps_bound, certificate = {}, None, None
    if os.path.exists(json_path):
        with open(json_path) as fh:
            meta = json.load(fh)
        provenance = meta.get("provenance", {})
        eps_bound = meta.get("eps_bound")
        if meta.get("certificate"):
            certificate = EpsCertificate(**meta["certificate"])
    return Coreset(points, weights, provenance, eps_bound, certificate)


def _max_center_dist(pointset: WeightedPointSet, result: ClusteringResult) -> float:
    gaps = pointset.points - result.centers[result.assignment]
    return float(np.linalg.norm(gaps, axis=1).max())


def certify_eps(
    pointset: WeightedPointSet,
    result: ClusteringResult | DoubledRun,
    rho: float = 1.0,
    max_iter: int = 300,
) -> EpsCertificate:
    """Certify the coreset error of a clustering run's centers.

    Accepts either a finished run (the 2k-center continuation is computed
    here) or a DoubledRun that already carries it.

    Both bounds scale linearly in rho, so a certificate computed at rho=1
    can be rescaled to any cost function's Lipschitz constant.
    """
    if rho <= 0 or not math.isfinite(rho):
        raise ValidationError("rho must be positive and finite")
    if isinstance(result, DoubledRun):
        run = result
    else:
        run = extend_to_doubled(pointset, result, max_iter=max_iter)
    base = run.base
    gap = max(run.gap, 0.0)
    w_min = pointset.w_min
    maxdist = _max_center_dist(pointset, base)
    return EpsCertificate(
        eps_gap=rho * (gap / w_min) ** (1.0 / base.z),
        eps_maxdist=rho * maxdist,
        rho=rho,
        z=base.z,
        k=base.k,
        gap=gap,
        max_center_dist=maxdist,
        w_min=w_min,
    )


def coreset_from_run(
    pointset: WeightedPointSet,
    result: ClusteringResult,
    provenance: dict | None = None,
) -> Coreset:
    """Cluster centers weighted by their cluster's total weight.

    Centers of empty clusters are dropped; the total weight of the coreset
    equals the total weight of the input exactly.
    """
    weights = np.bincount(
        result.assignment, weights=pointset.weights, minlength=result.k
    )
    keep = np.flatnonzero(weights > 0)
    info = {"algorithm": "centers", "k": int(result.k), "z": int(result.z)}
    info.update(provenance or {})
    return Coreset(result.centers[keep], weights[keep], info)


def rcc_fixed_size(
    pointset: WeightedPointSet,
    k: int,
    z: int = 2,
    seed: int = 0,
    rho: float = 1.0,
    certify: bool = True,
) -> Coreset:
    """Robust coreset of exactly k cluster centers.

    When ``certify`` is set, the 2k-center continuation is run to compute
    the error certificate, and the coreset's eps_bound is the realized
    max-distance bound (the tighter of the two certified values).
    """
    if not 1 <= k <= pointset.size:
        raise ValidationError(f"k must be in [1, {pointset.size}], got {k}")
    run = k_clustering_doubled(pointset, k, z=z, seed=seed)
    coreset = coreset_from_run(
        pointset, run.base,
        provenance={"algorithm": "rcc_fixed", "seed": seed, "rho": rho},
    )
    if certify:
        cert = certify_eps(pointset, run, rho=rho)
        coreset.certificate = cert
        coreset.eps_bound = cert.eps_maxdist
    return coreset


def rcc(
    pointset: WeightedPointSet,
    eps: float,
    rho: float = 1.0,
    z: int = 2,
    seed: int = 0,
    k_max: int | None = None,
) -> Coreset:
    """Adaptively sized robust coreset meeting a target error bound.

    Grows the number of centers k until the k-vs-2k cost gap drops below
    w_min * (eps/rho)^z, which certifies that every rho-Lipschitz cost
    function (with per-point cost >= 1) sees at most a (1 +/- eps) relative
    error.  The search doubles k and then binary-refines to the smallest
    passing size on that lattice.

    Raises ThresholdNotReachedError when no k up to k_max passes; the error
    carries the best gap seen.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if rho <= 0 or not math.isfinite(rho):
        raise ValidationError("rho must be positive and finite for the adaptive search")
    if k_max is None:
        k_max = max(1, pointset.size // 2)
    k_max = min(k_max, pointset.size)
    threshold = pointset.w_min * (eps / rho) ** z
    rng = np.random.default_rng(seed)

    runs: dict[int, DoubledRun] = {}

    def gap_at(k: int) -> float:
        if k not in runs:
            runs[k] = k_clustering_doubled(
                pointset, k, z=z, seed=int(rng.integers(2**63))
            )
        return max(runs[k].gap, 0.0)

    # double until the gap certificate passes, then binary-refine downwards
    tried = []
    lo, passing = 0, None
    k = 1
    while k <= k_max:
        tried.append(k)
        if gap_at(k) <= threshold:
            passing = k
            break
        lo = k
        k *= 2
    if passing is None and (not tried or tried[-1] != k_max):
        tried.append(k_max)
        if gap_at(k_max) <= threshold:
            passing = k_max
    if passing is None:
        best_k = min(tried, key=gap_at)
        raise ThresholdNotReachedError(
            f"no size up to {k_max} meets the eps={eps} target "
            f"(best gap {gap_at(best_k):.6g} at k={best_k}, need <= {threshold:.6g})",
            best_gap=gap_at(best_k),
            best_k=best_k,
        )
    while passing - lo > 1:
        mid = (lo + passing) // 2
        tried.append(mid)
        if gap_at(mid) <= threshold:
            passing = mid
        else:
            lo = mid

    chosen = runs[passing]
    coreset = coreset_from_run(
        pointset, chosen.base,
        provenance={
            "algorithm": "rcc",
            "eps": eps,
            "rho": rho,
            "seed": seed,
            "sizes_tried": sorted(set(tried)),
        },
    )
    coreset.certificate = certify_eps(pointset, chosen, rho=rho)
    coreset.eps_bound = eps
    return coreset
