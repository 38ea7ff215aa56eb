"""Hybrid precoding with dynamic subarrays for mmWave MIMO under finite-alphabet inputs."""
from .capacity import (BoundKind, BoundValue, HybridPrecoder, MiEstimate, average_mi,
                       gradient_LA, instantaneous_mi, jensen_gap, lower_bound,
                       lower_bound_approx, mixed_csi_objective, pairwise_det_term,
                       pairwise_exponent_oracle)
from .channel import (ArrayGeometry, ChannelRealization, PathAngles, StatisticalCsi,
                      build_statistical_csi, effective_channel, fixture_angles,
                      sample_channel, sample_path_angles, steering_vector)
from .constellation import Modulation, SignalSet, build_signal_set, difference_iter
from .errors import (BudgetExceeded, ConfigError, DimensionMismatch, FixtureMissing,
                     HybridPrecodingError, InvalidNoise, NotDivisible, SearchStalled,
                     TooLarge, ZeroMatrix)
from .optimizer import (AscentReport, Termination, algorithm2, block_coordinate_ascent,
                        digital_only_solve, line_search, no_precoding_baseline,
                        project_sphere, riemannian_gradient)
from .rng import make_rng
from .subarray import (Partition, algorithm1, effective_gain, exhaustive_oracle,
                       fixed_partition, procrustes_rotation, round_to_feasible,
                       stirling_count, unconstrained_seed)

__version__ = "0.1.0"
