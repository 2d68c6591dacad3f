"""Clipped-and-renormalized targets and their optimality floor.

Capping the density ratio at M and renormalizing gives the closest
bounded-ratio approximation of the target: the truncated target Q_M with
ratio ``min(r, M) / E_P[min(r, M)]``.  Its ratio supremum is the effective
cap ``m_tilde = M / E_P[min(r, M)]`` and its total-variation distance to
the target is exactly ``survival(m_tilde)``.  No distribution within TV
``eps`` of the target can have a smaller ratio supremum than
``survival_inverse(eps)``; ``pareto_check`` spot-checks that floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (PairedDistribution, cap_from_effective_sup, level_stats,
                       survival_inverse)


@dataclass(frozen=True)
class TruncatedTarget:
    """A ratio-capped, renormalized copy of the target of a pair.

    For finite pairs ``masses`` holds the truncated target law and
    ``tv_to_target`` its exact distance to the original target.  For
    continuous pairs the truncated ratio is kept unnormalized (the clipped
    ratio ``min(r, M)``), ``masses`` and ``tv_to_target`` are None, and
    ``effective_sup`` is quadrature-based.
    """

    base: PairedDistribution
    cap: float
    effective_sup: float
    clipped_mean: float               # E_P[min(r, cap)]
    masses: np.ndarray | None = None
    tv_to_target: float | None = None

    @property
    def ratio_values(self) -> np.ndarray:
        self.base._require_finite()
        return self.masses / self.base.p

    @property
    def sup_ratio(self) -> float:
        """Supremum of the ratio actually handed to samplers."""
        if self.base.kind == "finite":
            return self.effective_sup
        return self.cap  # unnormalized clipped ratio

    def log_ratio(self, x):
        """Log of the truncated ratio; unnormalized for continuous pairs."""
        if self.base.kind == "finite":
            with np.errstate(divide="ignore"):
                out = np.log(self.ratio_values[np.asarray(x, dtype=int)])
            return out if out.ndim else float(out)
        lr = self.base.log_ratio(x)
        return np.minimum(lr, math.log(self.cap))

    def draw_proposals(self, gen, size):
        return self.base.draw_proposals(gen, size)


def truncate(pd: PairedDistribution, cap: float) -> TruncatedTarget:
    """Cap the ratio at ``cap`` and renormalize.

    Caps above the ratio supremum are clamped down to it, so the stored
    cap always satisfies ``sup r_M = effective_sup`` and caps beyond the
    supremum reproduce the target exactly.
    """
    pd._require_normalized()
    if not cap > 0:
        raise ValueError(f"cap must be positive, got {cap!r}")
    sup = pd.sup_ratio
    if math.isfinite(sup):
        cap = min(float(cap), sup)
    if pd.kind == "finite":
        r = pd.ratio_values
        clipped = np.minimum(r, cap)
        mean = float(np.dot(pd.p, clipped))
        masses = pd.p * clipped / mean
        m_tilde = cap / mean
        tv = level_stats(pd, m_tilde).survival
        masses = np.array(masses)
        masses.setflags(write=False)
        return TruncatedTarget(base=pd, cap=float(cap), effective_sup=float(m_tilde),
                               clipped_mean=mean, masses=masses,
                               tv_to_target=float(tv))
    mean = level_stats(pd, cap).clipped_mean
    return TruncatedTarget(base=pd, cap=float(cap), effective_sup=float(cap / mean),
                           clipped_mean=float(mean))


def optimal_truncation(pd: PairedDistribution, eps: float) -> TruncatedTarget:
    """The smallest-supremum truncation within TV ``eps`` of the target.

    Picks the effective cap ``survival_inverse(eps)`` and inverts it to an
    actual cap.  ``eps = 0`` returns the exact target (cap at the ratio
    supremum); tolerances so loose that the floor drops below the
    attainable minimum (for example ``eps = 1``) degenerate to the
    smallest positive cap, i.e. the proposal restricted to positive-ratio
    atoms.
    """
    pd._require_normalized()
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps!r}")
    if eps == 0.0:
        sup = pd.sup_ratio
        if not math.isfinite(sup):
            raise ValueError("eps = 0 requires a bounded ratio")
        return truncate(pd, sup)
    m_tilde = survival_inverse(pd, eps)
    if pd.kind == "finite":
        r = pd.ratio_values
        phi_min = 1.0 / float(pd.p[r > 0].sum())
    else:
        phi_min = 1.0
    if m_tilde <= phi_min:
        return truncate(pd, float(np.finfo(float).tiny))
    return truncate(pd, cap_from_effective_sup(pd, m_tilde))


@dataclass(frozen=True)
class ParetoReport:
    """Result of a randomized check of the ratio-supremum floor."""

    eps: float
    floor: float              # survival_inverse(eps)
    trials: int
    min_sup_found: float      # smallest ratio supremum over all perturbations
    violations: int           # perturbations with sup below floor - tol
    truncation_sup: float     # effective cap of the optimal truncation
    attains_floor: bool


def pareto_check(pd: PairedDistribution, eps: float, trials: int = 10_000,
                 seed: int = 0, tol: float = 1e-9) -> ParetoReport:
    """Spot-check that no law within TV ``eps`` of the target beats the floor.

    Draws symmetric-Dirichlet directions mixed into the target and scaled
    into the TV ball, plus adversarial perturbations that move mass off
    the highest-ratio atom, and records the smallest ratio supremum seen.
    A statistical check, not a proof.
    """
    pd._require_finite()
    pd._require_normalized()
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps!r}")
    rng = np.random.default_rng(seed)
    floor = survival_inverse(pd, eps)
    p, q = pd.p, pd.q
    m = p.size

    sups = []
    n_dir = trials // 2
    if n_dir:
        directions = rng.dirichlet(np.ones(m), size=n_dir)
        tv_dir = 0.5 * np.abs(directions - q).sum(axis=1)
        scale = np.where(tv_dir > 0, np.minimum(1.0, eps * rng.random(n_dir) / np.maximum(tv_dir, 1e-300)), 0.0)
        perturbed = q + scale[:, None] * (directions - q)
        sups.append((perturbed / p).max(axis=1))
    n_adv = trials - n_dir
    if n_adv:
        r = pd.ratio_values
        spike = int(np.argmax(r))
        low = int(np.argmin(r))
        move = np.minimum(eps * rng.random(n_adv), q[spike])
        perturbed = np.tile(q, (n_adv, 1))
        perturbed[:, spike] -= move
        perturbed[:, low] += move
        sups.append((perturbed / p).max(axis=1))
    all_sups = np.concatenate(sups) if sups else np.array([])
    min_sup = float(all_sups.min()) if all_sups.size else math.inf
    violations = int((all_sups < floor - tol).sum())

    tt = optimal_truncation(pd, eps)
    attains = abs(tt.effective_sup - floor) <= max(tol, 1e-9) or tt.effective_sup <= floor
    return ParetoReport(eps=float(eps), floor=float(floor), trials=trials,
                        min_sup_found=min_sup, violations=violations,
                        truncation_sup=float(tt.effective_sup), attains_floor=bool(attains))
