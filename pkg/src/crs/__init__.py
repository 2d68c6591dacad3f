"""Channel-simulation toolkit: samplers that select an index into a shared
proposal stream, the truncation calculus controlling their accuracy, integer
codes for the selected index, and closed-form complexity/accuracy bounds,
plus a seeded verification suite tying them together."""

from .bounds import (INDEX_OVERHEAD_BITS, AccuracyReport, BoundReport,
                     ClampedIndexEntropy, classic_rejection_complexity,
                     depth_limited_complexity, importance_epsilon,
                     importance_estimate, importance_mean_error_bound,
                     improved_rejection_complexity, index_tail_bound,
                     truncated_index_entropy, two_level_ratio_pair,
                     two_level_required_t)
from .coding import (CodewordError, RateReport, ZetaCoder, codeword_length,
                     decode_index, decode_stream, encode_index,
                     pack_bitstring, rate_report, unpack_bitstring,
                     zeta_exponent, zeta_normalizer)
from .measures import (GENERATORS, DivergenceReport, FGenerator,
                       GaussianParams, LevelStats, PairedDistribution,
                       SpecError, cap_from_effective_sup, chi2_generator,
                       divergence_report, effective_sup, hellinger_generator,
                       kl_generator, level_stats, load_pair, pair_from_dict,
                       pair_to_dict, survival_inverse, validate_generator)
from .samplers import (BatchResult, GumbelChainState, SampleRecord,
                       astar_depth_limited, astar_depth_limited_batch,
                       astar_global, astar_global_batch, next_truncated_gumbel,
                       rejection_sample, rejection_sample_batch,
                       stream_generator, truncated_gumbel)
from .truncation import (ParetoReport, TruncatedTarget, optimal_truncation,
                         pareto_check, truncate)
from .verify import (BudgetedRejectionOracle, CoupledReport, EmpiricalLaw,
                     SuiteRow, budgeted_rejection_oracle, coupled_comparison,
                     empirical_law, random_finite_pair, rows_to_csv,
                     run_acceptance, tv_distance)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
