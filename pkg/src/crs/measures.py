"""Target/proposal pairs, divergences, and the ratio level-set calculus.

A :class:`PairedDistribution` bundles a target law Q with a proposal law P
such that Q is absolutely continuous w.r.t. P, and exposes the density
ratio r = dQ/dP.  Everything downstream (truncation, samplers, bounds) is
driven by three scalar functions of a level ``h >= 0``:

* ``tail_p(h)   = P[r >= h]``        proposal tail of the ratio
* ``tail_q(h)   = Q[r >= h]``        target tail of the ratio
* ``clipped_mean(h) = E_P[min(r, h)]``

The survival mass ``survival(h) = 1 - clipped_mean(h) = E_P[(r - h)+]``
measures how much target mass sits above level h; with inclusive tails the
identity ``survival(h) = tail_q(h) - h * tail_p(h)`` is exact, including at
atoms of r.  Finite alphabets are computed exactly; Gaussian pairs fall
back to closed-form normal tails plus quadrature and are flagged
approximate.

All divergences are reported in bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

LOG2E = math.log2(math.e)

_SUM_TOL = 1e-12
_MEAN_RATIO_TOL = 1e-9


class SpecError(ValueError):
    """Raised when a distribution spec violates the schema; names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma: float


@dataclass(frozen=True)
class PairedDistribution:
    """A target/proposal pair with an explicit density ratio.

    Construct through :meth:`finite` or :meth:`gaussian`.  ``ratio_scale``
    multiplies the ratio by a constant; any value != 1 marks the pair as
    carrying an unnormalized ratio with unknown normalizer (useful for
    exercising samplers that tolerate unnormalized targets).
    """

    kind: str
    q: np.ndarray | None = None
    p: np.ndarray | None = None
    q_params: GaussianParams | None = None
    p_params: GaussianParams | None = None
    ratio_scale: float = 1.0

    # -- constructors ---------------------------------------------------

    @staticmethod
    def finite(p, q, ratio_scale: float = 1.0) -> "PairedDistribution":
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.ndim != 1 or q.ndim != 1:
            raise SpecError("p", "p and q must be one-dimensional")
        if p.shape != q.shape:
            raise SpecError("q", f"length {q.size} does not match p (length {p.size})")
        if p.size == 0:
            raise SpecError("p", "alphabet is empty")
        if np.any(p < 0):
            raise SpecError("p", "negative mass")
        if np.any(q < 0):
            raise SpecError("q", "negative mass")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise SpecError("p", f"sums to {p.sum()!r}, not 1 within {_SUM_TOL}")
        if abs(q.sum() - 1.0) > _SUM_TOL:
            raise SpecError("q", f"sums to {q.sum()!r}, not 1 within {_SUM_TOL}")
        if np.any((p == 0) & (q > 0)):
            i = int(np.argmax((p == 0) & (q > 0)))
            raise SpecError("q", f"mass at atom {i} where the proposal has none "
                                 "(target must be absolutely continuous w.r.t. proposal)")
        keep = (p > 0) | (q > 0)  # strip degenerate atoms
        if not keep.all():
            p, q = p[keep], q[keep]
        if ratio_scale <= 0:
            raise SpecError("ratio_scale", "must be positive")
        return PairedDistribution(kind="finite", q=_frozen(q), p=_frozen(p),
                                  ratio_scale=float(ratio_scale))

    @staticmethod
    def gaussian(q, p, ratio_scale: float = 1.0) -> "PairedDistribution":
        def params(name, spec):
            if isinstance(spec, GaussianParams):
                mu, sigma = spec.mu, spec.sigma
            elif isinstance(spec, dict):
                try:
                    mu, sigma = spec["mu"], spec["sigma"]
                except KeyError as exc:
                    raise SpecError(name, f"missing key {exc.args[0]!r}") from None
            else:
                mu, sigma = spec
            mu, sigma = float(mu), float(sigma)
            if not math.isfinite(mu) or not math.isfinite(sigma):
                raise SpecError(name, "mu and sigma must be finite")
            if sigma <= 0:
                raise SpecError(name, f"sigma must be positive, got {sigma!r}")
            return GaussianParams(mu, sigma)

        if ratio_scale <= 0:
            raise SpecError("ratio_scale", "must be positive")
        pd = PairedDistribution(kind="gaussian", q_params=params("q", q),
                                p_params=params("p", p), ratio_scale=float(ratio_scale))
        if ratio_scale == 1.0:
            mean = pd._mean_ratio_quadrature()
            if abs(mean - 1.0) > _MEAN_RATIO_TOL:
                raise SpecError("q", f"E_P[dQ/dP] = {mean!r}, not 1 within {_MEAN_RATIO_TOL}")
        return pd

    # -- basic properties -----------------------------------------------

    @property
    def unnormalized(self) -> bool:
        return self.ratio_scale != 1.0

    @property
    def alphabet_size(self) -> int:
        if self.kind != "finite":
            raise ValueError("alphabet_size is only defined for finite pairs")
        return self.p.size

    @property
    def ratio_values(self) -> np.ndarray:
        """Per-atom ratio values (finite kind), including any scale."""
        self._require_finite()
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.p > 0, self.q / np.where(self.p > 0, self.p, 1.0), np.inf)
        return self.ratio_scale * r

    @property
    def sup_ratio(self) -> float:
        """Essential supremum of the (scaled) ratio; inf when unbounded."""
        if self.kind == "finite":
            return float(np.max(self.ratio_values))
        gq, gp = self.q_params, self.p_params
        if gq == gp:
            return self.ratio_scale
        if gq.sigma >= gp.sigma:
            return math.inf
        # argmax of log r is the stationary point of the quadratic exponent
        a = 1.0 / (2 * gp.sigma**2) - 1.0 / (2 * gq.sigma**2)
        b = gq.mu / gq.sigma**2 - gp.mu / gp.sigma**2
        x_star = -b / (2 * a)
        return float(np.exp(self.log_ratio(x_star)))

    def log_ratio(self, x):
        """Natural-log density ratio ln r(x) (includes any scale).

        Finite kind takes atom indices; Gaussian kind takes real values.
        Atoms with zero target mass give -inf.
        """
        if self.kind == "finite":
            idx = np.asarray(x, dtype=int)
            with np.errstate(divide="ignore"):
                out = np.log(self.ratio_values[idx])
            return out if out.ndim else float(out)
        x = np.asarray(x, dtype=float)
        gq, gp = self.q_params, self.p_params
        out = (math.log(gp.sigma / gq.sigma)
               - (x - gq.mu) ** 2 / (2 * gq.sigma**2)
               + (x - gp.mu) ** 2 / (2 * gp.sigma**2)
               + math.log(self.ratio_scale))
        return out if out.ndim else float(out)

    def draw_proposals(self, gen: np.random.Generator, size: int):
        """Draw `size` i.i.d. proposals from P using `gen` (one call per step)."""
        if self.kind == "finite":
            u = gen.random(size)
            idx = np.searchsorted(np.cumsum(self.p), u, side="right")
            return np.minimum(idx, self.p.size - 1)
        return gen.normal(self.p_params.mu, self.p_params.sigma, size)

    def _require_finite(self):
        if self.kind != "finite":
            raise ValueError("operation requires a finite-alphabet pair")

    def _require_normalized(self):
        if self.unnormalized:
            raise ValueError("normalizer unknown (pair carries an unnormalized ratio)")

    def _mean_ratio_quadrature(self) -> float:
        gp, gq = self.p_params, self.q_params
        # r * p equals q when normalized, so the window must cover both densities
        lo = min(gp.mu - 12 * gp.sigma, gq.mu - 12 * gq.sigma)
        hi = max(gp.mu + 12 * gp.sigma, gq.mu + 12 * gq.sigma)
        val, _ = integrate.quad(
            lambda x: math.exp(self.log_ratio(x)) * _normal_pdf(x, gp), lo, hi, limit=200)
        return val


def _normal_pdf(x, g: GaussianParams):
    z = (x - g.mu) / g.sigma
    return np.exp(-0.5 * z * z) / (g.sigma * math.sqrt(2 * math.pi))


def _normal_cdf(x, g: GaussianParams) -> float:
    return 0.5 * math.erfc(-(x - g.mu) / (g.sigma * math.sqrt(2)))


# ---------------------------------------------------------------------------
# level-set calculus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelStats:
    """Ratio level-set statistics at a single level h."""

    level: float
    tail_p: float        # P[r >= h]
    tail_q: float        # Q[r >= h]
    clipped_mean: float  # E_P[min(r, h)]
    survival: float      # 1 - clipped_mean = E_P[(r - h)+]
    approximate: bool = False


def level_stats(pd: PairedDistribution, h: float) -> LevelStats:
    """Compute the level-set statistics of the ratio at level ``h``.

    Exact for finite alphabets.  Gaussian pairs use closed-form normal
    tails for tail_p/tail_q and quadrature for the clipped mean, and are
    flagged ``approximate``.
    """
    pd._require_normalized()
    h = float(h)
    if h < 0:
        raise ValueError(f"level must be nonnegative, got {h!r}")
    if pd.kind == "finite":
        r = pd.ratio_values
        above = r >= h
        clipped = float(np.dot(pd.p, np.minimum(r, h)))
        tail_q = float(pd.q[above].sum())
        # 0 <= survival <= tail_q holds in exact arithmetic; clamp the
        # cancellation noise of 1 - clipped so it holds bit-for-bit too
        return LevelStats(level=h,
                          tail_p=float(pd.p[above].sum()),
                          tail_q=tail_q,
                          clipped_mean=clipped,
                          survival=min(max(0.0, 1.0 - clipped), tail_q))
    return _gaussian_level_stats(pd, h)


def _gaussian_ratio_region(pd: PairedDistribution, h: float):
    """The set {x : r(x) >= h} as a list of intervals (possibly empty)."""
    gq, gp = pd.q_params, pd.p_params
    if h == 0.0:
        return [(-math.inf, math.inf)]
    a = 1.0 / (2 * gp.sigma**2) - 1.0 / (2 * gq.sigma**2)
    b = gq.mu / gq.sigma**2 - gp.mu / gp.sigma**2
    c = (math.log(gp.sigma / gq.sigma) - gq.mu**2 / (2 * gq.sigma**2)
         + gp.mu**2 / (2 * gp.sigma**2) - math.log(h))
    # solve a x^2 + b x + c >= 0
    if a == 0.0:
        if b == 0.0:
            return [(-math.inf, math.inf)] if c >= 0 else []
        x0 = -c / b
        return [(x0, math.inf)] if b > 0 else [(-math.inf, x0)]
    disc = b * b - 4 * a * c
    if disc <= 0:
        return [] if a < 0 else [(-math.inf, math.inf)]
    root = math.sqrt(disc)
    x1, x2 = (-b - root) / (2 * a), (-b + root) / (2 * a)
    lo, hi = min(x1, x2), max(x1, x2)
    if a < 0:
        return [(lo, hi)]
    return [(-math.inf, lo), (hi, math.inf)]


def _gaussian_level_stats(pd: PairedDistribution, h: float) -> LevelStats:
    gq, gp = pd.q_params, pd.p_params
    region = _gaussian_ratio_region(pd, h)
    tail_p = sum(_normal_cdf(b, gp) - _normal_cdf(a, gp) for a, b in region)
    tail_q = sum(_normal_cdf(b, gq) - _normal_cdf(a, gq) for a, b in region)

    # E_P[min(r, h)] by piecewise quadrature; split at the region edges.
    edges = sorted(x for ab in region for x in ab if math.isfinite(x))
    span = (gp.mu - 12 * gp.sigma, gp.mu + 12 * gp.sigma)
    points = [span[0]] + [x for x in edges if span[0] < x < span[1]] + [span[1]]

    def integrand(x):
        return min(math.exp(pd.log_ratio(x)), h) * _normal_pdf(x, gp)

    clipped = 0.0
    for a, b in zip(points[:-1], points[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=200)
        clipped += val
    return LevelStats(level=h, tail_p=float(min(max(tail_p, 0.0), 1.0)),
                      tail_q=float(min(max(tail_q, 0.0), 1.0)),
                      clipped_mean=float(clipped), survival=float(1.0 - clipped),
                      approximate=True)


def survival_inverse(pd: PairedDistribution, eps: float) -> float:
    """Smallest level h with survival(h) <= eps.

    Exact on finite alphabets, where the survival mass is piecewise linear
    in h; bisection to 1e-10 otherwise.  ``eps`` must lie in [0, 1];
    eps = 1 gives 0 and eps = 0 gives the ratio supremum.
    """
    pd._require_normalized()
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps!r}")
    if pd.kind == "finite":
        if eps >= 1.0:
            return 0.0
        r = pd.ratio_values
        levels = np.unique(r[r > 0])
        s_prev, h_prev = 1.0, 0.0
        for lev in levels:
            tail = float(pd.p[r > h_prev].sum())  # slope of survival on (h_prev, lev]
            s_here = s_prev - (lev - h_prev) * tail
            if s_here <= eps:
                return float(h_prev + (s_prev - eps) / tail)
            s_prev, h_prev = s_here, float(lev)
        return float(levels[-1]) if levels.size else 0.0
    # continuous: survival is continuous and strictly decreasing to 0
    lo, hi = 0.0, 1.0
    while level_stats(pd, hi).survival > eps:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("survival bisection bracket failed")
    for _ in range(200):
        if hi - lo <= 1e-10 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if level_stats(pd, mid).survival <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def effective_sup(pd: PairedDistribution, cap: float) -> float:
    """The supremum cap / E_P[min(r, cap)] of the renormalized clipped ratio."""
    pd._require_normalized()
    if cap <= 0:
        raise ValueError(f"cap must be positive, got {cap!r}")
    return float(cap / level_stats(pd, cap).clipped_mean)


def cap_from_effective_sup(pd: PairedDistribution, m_tilde: float) -> float:
    """Invert ``effective_sup``: the largest cap M with M / E_P[min(r, M)] <= m_tilde.

    ``effective_sup`` is nondecreasing in the cap (its derivative carries
    the target mass strictly below the cap), constant at its minimum below
    the smallest positive ratio value, and strictly increasing above it, so
    the returned cap satisfies effective_sup(cap) = m_tilde to ~1e-10
    whenever m_tilde is attainable.  Out-of-range requests are rejected
    with the attainable range.
    """
    pd._require_normalized()
    sup = pd.sup_ratio
    if pd.kind == "finite":
        r = pd.ratio_values
        phi_min = 1.0 / float(pd.p[r > 0].sum())
    else:
        phi_min = 1.0
    hi_attainable = sup if math.isfinite(sup) else math.inf
    if not phi_min - 1e-12 <= m_tilde <= hi_attainable + 1e-12:
        raise ValueError(f"m_tilde {m_tilde!r} outside the attainable range "
                         f"[{phi_min!r}, {hi_attainable!r}]")
    if math.isfinite(sup) and m_tilde >= effective_sup(pd, sup):
        return float(sup)
    lo = np.finfo(float).tiny
    hi = sup if math.isfinite(sup) else 1.0
    if not math.isfinite(sup):
        while effective_sup(pd, hi) <= m_tilde:
            hi *= 2.0
    for _ in range(200):
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if effective_sup(pd, mid) <= m_tilde:
            lo = mid
        else:
            hi = mid
    return float(lo)


# ---------------------------------------------------------------------------
# divergences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FGenerator:
    """A convex generator f with f(1) = 0 and f'(1) = 0, plus (f')^{-1}.

    The slope normalization f'(1) = 0 keeps the induced divergence
    invariant under adding multiples of (u - 1) and makes (f')^{-1}
    well-defined on [0, inf) for the complexity bounds.
    """

    name: str
    f: Callable
    f_prime: Callable
    f_prime_inv: Callable

    def divergence_finite(self, pd: PairedDistribution) -> float:
        r = pd.ratio_values
        return float(np.dot(pd.p, self.f(r)))


def _kl_f(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(u > 0, u * np.log2(np.maximum(u, 1e-320)), 0.0)
    return term - (u - 1.0) * LOG2E


kl_generator = FGenerator(
    name="kl",
    f=_kl_f,
    f_prime=lambda u: np.log2(u),
    f_prime_inv=lambda y: np.exp2(y),
)

chi2_generator = FGenerator(
    name="chi2",
    f=lambda u: (np.asarray(u, dtype=float) - 1.0) ** 2,
    f_prime=lambda u: 2.0 * (np.asarray(u, dtype=float) - 1.0),
    f_prime_inv=lambda y: 1.0 + np.asarray(y, dtype=float) / 2.0,
)


def _hellinger_f_prime_inv(y):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(y < 1.0, (1.0 - np.minimum(y, 1.0)) ** -2.0, np.inf)
    return out if out.ndim else float(out)


hellinger_generator = FGenerator(
    name="hellinger",
    f=lambda u: (np.sqrt(np.asarray(u, dtype=float)) - 1.0) ** 2,
    f_prime=lambda u: 1.0 - 1.0 / np.sqrt(np.asarray(u, dtype=float)),
    f_prime_inv=_hellinger_f_prime_inv,
)

GENERATORS = {g.name: g for g in (kl_generator, chi2_generator, hellinger_generator)}


def validate_generator(gen: FGenerator, grid=None, tol: float = 1e-9) -> None:
    """Check the generator invariants on a grid; raises ValueError on failure."""
    if grid is None:
        grid = np.geomspace(1e-3, 1e3, 200)
    grid = np.asarray(grid, dtype=float)
    if abs(float(gen.f(1.0))) > 1e-12:
        raise ValueError(f"{gen.name}: f(1) = {float(gen.f(1.0))!r} != 0")
    if abs(float(gen.f_prime(1.0))) > tol:
        raise ValueError(f"{gen.name}: f'(1) = {float(gen.f_prime(1.0))!r} != 0")
    fp = np.asarray(gen.f_prime(grid), dtype=float)
    if not np.all(np.diff(fp) > 0):
        raise ValueError(f"{gen.name}: f' is not strictly increasing on the grid")
    mid = 0.5 * (grid[:-1] + grid[1:])
    chord = 0.5 * (np.asarray(gen.f(grid[:-1])) + np.asarray(gen.f(grid[1:])))
    if np.any(np.asarray(gen.f(mid)) > chord + 1e-12):
        raise ValueError(f"{gen.name}: f fails midpoint convexity on the grid")
    finite = np.isfinite(fp)
    back = np.asarray(gen.f_prime_inv(fp[finite]), dtype=float)
    if np.any(np.abs(back - grid[finite]) > tol * np.maximum(1.0, grid[finite])):
        raise ValueError(f"{gen.name}: (f')^-1 does not invert f' within {tol}")


@dataclass(frozen=True)
class DivergenceReport:
    kl_bits: float
    max_bits: float       # log2 of the ratio supremum; inf when unbounded
    f_divergence: float
    f_name: str


def divergence_report(pd: PairedDistribution,
                      gen: FGenerator = kl_generator) -> DivergenceReport:
    """Relative entropy, max-divergence, and an f-divergence, all in bits.

    Rejects pairs carrying an unnormalized ratio ("normalizer unknown").
    """
    pd._require_normalized()
    if pd.kind == "finite":
        r = pd.ratio_values
        pos = pd.q > 0
        kl = float(np.dot(pd.q[pos], np.log2(r[pos])))
        dmax = math.log2(pd.sup_ratio)
        df = gen.divergence_finite(pd)
        return DivergenceReport(kl_bits=kl, max_bits=dmax, f_divergence=df,
                                f_name=gen.name)
    gq, gp = pd.q_params, pd.p_params
    kl_nats = (math.log(gp.sigma / gq.sigma)
               + (gq.sigma**2 + (gq.mu - gp.mu) ** 2) / (2 * gp.sigma**2) - 0.5)
    sup = pd.sup_ratio
    dmax = math.log2(sup) if math.isfinite(sup) else math.inf

    def integrand(x):
        return float(gen.f(math.exp(pd.log_ratio(x)))) * _normal_pdf(x, gp)

    lo, hi = gp.mu - 12 * gp.sigma, gp.mu + 12 * gp.sigma
    df, _ = integrate.quad(integrand, lo, hi, limit=200)
    return DivergenceReport(kl_bits=kl_nats * LOG2E, max_bits=dmax,
                            f_divergence=float(df), f_name=gen.name)


# ---------------------------------------------------------------------------
# distribution-spec files
# ---------------------------------------------------------------------------

def pair_from_dict(spec: dict) -> PairedDistribution:
    """Build a pair from the documented JSON schema.

    ``{"kind": "finite", "p": [...], "q": [...]}`` or
    ``{"kind": "gaussian", "q": {"mu": .., "sigma": ..}, "p": {...}}``.
    """
    if not isinstance(spec, dict):
        raise SpecError("spec", "top level must be a JSON object")
    kind = spec.get("kind")
    if kind == "finite":
        for key in ("p", "q"):
            if key not in spec:
                raise SpecError(key, "missing")
            if not isinstance(spec[key], (list, tuple)):
                raise SpecError(key, "must be a list of masses")
        return PairedDistribution.finite(spec["p"], spec["q"])
    if kind == "gaussian":
        for key in ("p", "q"):
            if key not in spec:
                raise SpecError(key, "missing")
            if not isinstance(spec[key], dict):
                raise SpecError(key, 'must be an object {"mu": .., "sigma": ..}')
        return PairedDistribution.gaussian(q=spec["q"], p=spec["p"])
    raise SpecError("kind", f'must be "finite" or "gaussian", got {kind!r}')


def pair_to_dict(pd: PairedDistribution) -> dict:
    if pd.kind == "finite":
        return {"kind": "finite", "p": pd.p.tolist(), "q": pd.q.tolist()}
    return {"kind": "gaussian",
            "q": {"mu": pd.q_params.mu, "sigma": pd.q_params.sigma},
            "p": {"mu": pd.p_params.mu, "sigma": pd.p_params.sigma}}


def load_pair(path) -> PairedDistribution:
    """Load a pair from a JSON spec file (see :func:`pair_from_dict`)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError("spec", f"invalid JSON ({exc})") from None
    return pair_from_dict(spec)
