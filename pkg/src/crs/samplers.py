"""Shared-randomness samplers: rejection and Gumbel-race index search.

All samplers read from counter-based Philox streams keyed as
``[seed, stream_id]`` with stream 0 carrying proposal draws, stream 1 the
Gumbel-chain uniforms, and stream 2 rejection's acceptance uniforms.  A
batch of ``n_runs`` lanes draws one length-``n_runs`` column per stream
per step, so lane ``j`` always sees element ``j`` of successive columns.
Because the global-bound and depth-limited searches consume the proposal
and Gumbel streams in identical step order, runs with the same
``(seed, n_runs)`` are coupled sample-by-sample across methods; a scalar
run is the ``n_runs = 1`` case of the same engine.

The Gumbel chain is iterated in the exponential-race domain: the running
time ``T_k = T_{k-1} + Exp(1)`` is accumulated and ``G_k = -ln T_k``,
which never re-exponentiates the previous value and so stays stable for
long chains.  A single step reproduces the truncated-Gumbel inverse CDF
``G = -ln(exp(-b) - ln u)`` given the previous value ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STREAM_PROPOSALS = 0
STREAM_GUMBELS = 1
STREAM_ACCEPTS = 2

_TINY = np.finfo(float).tiny


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Philox generator for one logical stream of one experiment seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit nonnegative integer, got {seed!r}")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# truncated Gumbel chain
# ---------------------------------------------------------------------------

@dataclass
class GumbelChainState:
    """Running state of a decreasing truncated-Gumbel chain.

    ``value`` is the last chain value G_k (+inf before the first step);
    ``steps`` counts the draws so far.  Internally the chain lives in the
    race domain: ``race_time`` is exp(-value).
    """

    value: float = math.inf
    steps: int = 0
    race_time: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.race_time is None:
            self.race_time = 0.0 if math.isinf(self.value) else math.exp(-self.value)


def next_truncated_gumbel(state: GumbelChainState, u: float) -> float:
    """Advance the chain by one uniform; returns the next value.

    Equals ``-ln(exp(-b) - ln u)`` for previous value ``b``: a standard
    Gumbel conditioned to lie below ``b`` (a plain Gumbel on the first
    step).  Strictly decreasing in successive calls.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform draw must lie strictly inside (0, 1), got {u!r}")
    state.race_time += -math.log(u)
    state.value = -math.log(state.race_time)
    state.steps += 1
    return state.value


def truncated_gumbel(bound: float, u: float) -> float:
    """One-shot closed form ``-ln(exp(-bound) - ln u)`` (no race state).

    Kept separate so the chain recursion can be cross-checked against the
    textbook inverse CDF; the two agree in distribution.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform draw must lie strictly inside (0, 1), got {u!r}")
    return -math.log(math.exp(-bound) - math.log(u))


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    step: int
    value: float
    log_ratio: float
    gumbel: float
    best_objective: float
    best_index: int


@dataclass(frozen=True)
class SampleRecord:
    """One emitted sample: selected index, value, and proposals examined."""

    index: int
    value: float
    examined: int
    method: str
    budget: int | None = None
    trace: tuple[TraceStep, ...] | None = None


@dataclass(frozen=True)
class BatchResult:
    """Vectorized replications: per-lane index, value, and examined count."""

    indices: np.ndarray
    values: np.ndarray
    examined: np.ndarray
    method: str
    budget: int | None = None

    @property
    def n_runs(self) -> int:
        return self.indices.size


def _require_target(target):
    for attr in ("log_ratio", "sup_ratio", "draw_proposals"):
        if not hasattr(target, attr):
            raise TypeError(f"target must expose {attr!r}")


# ---------------------------------------------------------------------------
# Gumbel-race index search
# ---------------------------------------------------------------------------

def _astar_batch(target, n_runs: int, seed: int, budget: int | None,
                 want_trace: bool = False):
    """Core engine for both search variants; ``budget=None`` is global-bound."""
    _require_target(target)
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if budget is None:
        sup = target.sup_ratio
        if not math.isfinite(sup):
            raise ValueError("global-bound search requires a bounded ratio "
                             "(use the depth-limited variant)")
        log_sup = math.log(sup)
    elif budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget!r}")

    prop_gen = stream_generator(seed, STREAM_PROPOSALS)
    gum_gen = stream_generator(seed, STREAM_GUMBELS)
    R = n_runs
    finite_kind = getattr(target, "base", target).kind == "finite"
    race = np.zeros(R)
    best = np.full(R, -math.inf)
    indices = np.zeros(R, dtype=np.int64)
    values = np.zeros(R, dtype=np.int64 if finite_kind else float)
    examined = np.zeros(R, dtype=np.int64)
    active = np.ones(R, dtype=bool)
    first_x = None
    trace: list[TraceStep] = []

    step = 0
    while active.any():
        step += 1
        if budget is not None and step > budget:
            break
        u = gum_gen.random(R)
        x = target.draw_proposals(prop_gen, R)
        race += -np.log(np.maximum(u, _TINY))
        g = -np.log(race)
        if budget is None and step >= 2:
            certified = active & (g + log_sup < best)
            if certified.any():
                examined[certified] = step - 1
                active &= ~certified
            if not active.any():
                break
        lr = np.asarray(target.log_ratio(x), dtype=float)
        obj = lr + g
        improved = active & (obj > best)
        best[improved] = obj[improved]
        indices[improved] = step
        values[improved] = x[improved] if hasattr(x, "__len__") else x
        if step == 1:
            first_x = np.array(x)
        if want_trace and R == 1 and active[0]:
            trace.append(TraceStep(step=step, value=float(x[0]),
                                   log_ratio=float(lr[0]), gumbel=float(g[0]),
                                   best_objective=float(best[0]),
                                   best_index=int(indices[0])))

    if budget is not None:
        examined[:] = budget
        none_found = indices == 0  # every examined ratio was zero
        if none_found.any():
            indices[none_found] = 1
            values[none_found] = first_x[none_found]
    method = "astar" if budget is None else "astar-depth"
    return indices, values, examined, method, trace


def astar_global_batch(target, n_runs: int, *, seed: int) -> BatchResult:
    """Global-bound index search over ``n_runs`` independent lanes.

    Each lane maximizes ``log ratio(X_k) + G_k`` over the shared proposal
    sequence and stops at the first chain value that certifies no later
    step can win (``G_{k+1} + ln sup ratio`` below the incumbent).  The
    certifying draw consumes one extra Gumbel but no proposal and is not
    counted in ``examined``; the examined count is geometric with mean
    ``sup ratio`` for a normalized target ratio.  Works with unnormalized
    ratios (the bound check is scale-invariant) but requires a finite
    supremum.
    """
    idx, vals, exam, method, _ = _astar_batch(target, n_runs, seed, budget=None)
    return BatchResult(indices=idx, values=vals, examined=exam, method=method)


def astar_global(target, *, seed: int, trace: bool = False) -> SampleRecord:
    """Single global-bound search run; see :func:`astar_global_batch`."""
    idx, vals, exam, method, tr = _astar_batch(target, 1, seed, budget=None,
                                               want_trace=trace)
    return SampleRecord(index=int(idx[0]), value=vals[0].item(),
                        examined=int(exam[0]), method=method,
                        trace=tuple(tr) if trace else None)


def astar_depth_limited_batch(target, budget: int, n_runs: int, *,
                              seed: int) -> BatchResult:
    """Depth-limited index search: maximize over the first ``budget`` proposals.

    Examines every proposal up to the budget (``examined == budget``) and
    returns the argmax; with the same seed the selected index equals the
    global-bound one whenever the global run's examined count is within
    the budget.  Tolerates unbounded and unnormalized ratios.  Ties (all
    examined ratios zero) resolve to the first index.
    """
    idx, vals, exam, method, _ = _astar_batch(target, n_runs, seed, budget=budget)
    return BatchResult(indices=idx, values=vals, examined=exam, method=method,
                       budget=budget)


def astar_depth_limited(target, budget: int, *, seed: int,
                        trace: bool = False) -> SampleRecord:
    """Single depth-limited run; see :func:`astar_depth_limited_batch`."""
    idx, vals, exam, method, tr = _astar_batch(target, 1, seed, budget=budget,
                                               want_trace=trace)
    return SampleRecord(index=int(idx[0]), value=vals[0].item(),
                        examined=int(exam[0]), method=method, budget=budget,
                        trace=tuple(tr) if trace else None)


# ---------------------------------------------------------------------------
# rejection
# ---------------------------------------------------------------------------

def _rejection_batch(target, n_runs: int, seed: int, budget: int | None,
                     fail_policy: str):
    _require_target(target)
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if budget is not None and budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget!r}")
    if fail_policy not in ("fresh-proposal", "first-index"):
        raise ValueError(f"unknown fail_policy {fail_policy!r}")
    sup = target.sup_ratio
    if not math.isfinite(sup):
        raise ValueError("rejection requires a bounded ratio")
    log_sup = math.log(sup)

    prop_gen = stream_generator(seed, STREAM_PROPOSALS)
    acc_gen = stream_generator(seed, STREAM_ACCEPTS)
    R = n_runs
    finite_kind = getattr(target, "base", target).kind == "finite"
    indices = np.zeros(R, dtype=np.int64)
    values = np.zeros(R, dtype=np.int64 if finite_kind else float)
    examined = np.zeros(R, dtype=np.int64)
    active = np.ones(R, dtype=bool)
    first_x = None

    step = 0
    while active.any() and (budget is None or step < budget):
        step += 1
        x = target.draw_proposals(prop_gen, R)
        u = acc_gen.random(R)
        lr = np.asarray(target.log_ratio(x), dtype=float)
        with np.errstate(divide="ignore"):
            accept = active & (np.log(np.maximum(u, _TINY)) < lr - log_sup)
        indices[accept] = step
        examined[accept] = step
        values[accept] = x[accept] if hasattr(x, "__len__") else x
        if step == 1:
            first_x = np.array(x)
        active &= ~accept

    if active.any():  # budget exhausted
        if fail_policy == "fresh-proposal":
            x = target.draw_proposals(prop_gen, R)
            indices[active] = budget + 1
            examined[active] = budget + 1
            values[active] = x[active]
        else:
            indices[active] = 1
            examined[active] = budget
            values[active] = first_x[active]
    method = "rejection" if budget is None else "rejection-budgeted"
    return indices, values, examined, method


def rejection_sample_batch(target, n_runs: int, *, seed: int,
                           budget: int | None = None,
                           fail_policy: str = "fresh-proposal") -> BatchResult:
    """Vectorized rejection sampling against the shared proposal stream.

    Unbudgeted runs emit the first accepted proposal, so the examined
    count is geometric with mean ``sup ratio``.  With a budget, runs that
    never accept fall back per ``fail_policy``: ``"fresh-proposal"`` emits
    proposal ``budget + 1`` (making the output law an exact mixture of the
    target and the proposal), ``"first-index"`` re-emits proposal 1 (the
    low-entropy choice).  Requires a bounded ratio.
    """
    idx, vals, exam, method = _rejection_batch(target, n_runs, seed, budget,
                                               fail_policy)
    return BatchResult(indices=idx, values=vals, examined=exam, method=method,
                       budget=budget)


def rejection_sample(target, *, seed: int, budget: int | None = None,
                     fail_policy: str = "fresh-proposal") -> SampleRecord:
    """Single rejection run; see :func:`rejection_sample_batch`."""
    idx, vals, exam, method = _rejection_batch(target, 1, seed, budget,
                                               fail_policy)
    return SampleRecord(index=int(idx[0]), value=vals[0].item(),
                        examined=int(exam[0]), method=method, budget=budget)
