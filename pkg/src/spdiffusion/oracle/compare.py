"""Pointwise comparison of two fields and convergence-order estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class ErrorReport:
    """Per-probe errors of ``candidate`` against ``reference``.

    ``probes`` holds only the points that were compared; ``skipped`` lists
    ``(index, reason)`` for the rest.
    """

    probes: np.ndarray
    reference: np.ndarray
    candidate: np.ndarray
    abs_error: np.ndarray
    rel_error: np.ndarray
    skipped: list = field(default_factory=list)

    @property
    def max_abs(self) -> float:
        return float(self.abs_error.max()) if self.abs_error.size else 0.0

    @property
    def mean_abs(self) -> float:
        return float(self.abs_error.mean()) if self.abs_error.size else 0.0

    @property
    def max_rel(self) -> float:
        return float(self.rel_error.max()) if self.rel_error.size else 0.0

    @property
    def mean_rel(self) -> float:
        return float(self.rel_error.mean()) if self.rel_error.size else 0.0

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs, "mean_abs": self.mean_abs,
            "max_rel": self.max_rel, "mean_rel": self.mean_rel,
            "probes": self.probes.tolist(),
            "reference": self.reference.tolist(),
            "candidate": self.candidate.tolist(),
            "abs_error": self.abs_error.tolist(),
            "rel_error": self.rel_error.tolist(),
            "skipped": [{"index": i, "reason": r} for i, r in self.skipped],
        }


def compare(candidate, reference, probes, centers=(), radii=(), halo=2.0) -> ErrorReport:
    """Evaluate two fields at ``probes`` and tabulate their differences.

    Parameters
    ----------
    candidate, reference : callable
        ``f(points) -> values`` for an ``(n, d)`` array.
    probes : array_like
        Probe points.
    centers, radii : array_like, optional
        Compartments; probes within ``halo * radius`` of a centre are skipped.
    halo : float
        Exclusion radius in units of the compartment radius.

    Relative errors divide by ``|reference|`` (absolute error where it vanishes).
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    keep = np.ones(len(probes), dtype=bool)
    skipped = []
    centers = np.asarray(centers, dtype=float).reshape(-1, probes.shape[1]) if len(centers) else np.empty((0, probes.shape[1]))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
    for j, (c, a) in enumerate(zip(centers, radii)):
        near = np.linalg.norm(probes - c, axis=-1) < halo * a
        for i in np.flatnonzero(near & keep):
            skipped.append((int(i), f"within {halo:g} radii of compartment {j}"))
        keep &= ~near
    pts = probes[keep]
    if len(pts) == 0:
        empty = np.empty(0)
        return ErrorReport(pts, empty, empty, empty, empty, skipped)
    ref = np.asarray(reference(pts), dtype=float).reshape(len(pts))
    cand = np.asarray(candidate(pts), dtype=float).reshape(len(pts))
    bad = ~(np.isfinite(ref) & np.isfinite(cand))
    if bad.any():
        for i in np.flatnonzero(keep)[bad]:
            skipped.append((int(i), "field not evaluable"))
        pts, ref, cand = pts[~bad], ref[~bad], cand[~bad]
    err = np.abs(cand - ref)
    scale = np.abs(ref)
    rel = np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), err)
    return ErrorReport(pts, ref, cand, err, rel, sorted(skipped))


def convergence_order(steps, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)``."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size < 2 or steps.size != errors.size:
        raise DomainError("need at least two (step, error) pairs")
    if np.any(errors <= 0) or np.any(steps <= 0):
        raise DomainError("steps and errors must be positive")
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
