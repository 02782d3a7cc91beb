"""Geometric statistics on unordered samples in path-metric spaces.

Quotient metrics on sample spaces via exact assignment, Wasserstein distances
between atomic measures, sample geodesics, orbit-type stratification,
Fréchet means and polymeans, and seeded Monte-Carlo experiments.
"""
from .errors import (ConfigError, CutLocusError, DimensionError, ExperimentAbort, MassError, NonUniqueGeodesic,
                     SampleSpaceError, SpaceMismatchError, UnsupportedOperation)
from .spaces import (Circle, Euclidean, Space, Sphere, Spider, TangentVector, distance, exp_map, geodesic_point,
                     log_map, space_from_json)
from .transport import TransportPlan, solve_assignment, solve_capacitated_assignment, solve_transport
from .samples import (Configuration, Partition, Sample, SampleGeodesic, config_distance, enumerate_partitions,
                      isotropy_interior_check, orbit_type, sample_distance, sample_geodesic, skeleton_index,
                      subpartition_leq)
from .wasserstein import (AtomicMeasure, MeasureStratum, WeightPartition, empirical_measure, measure_geodesic,
                          measure_stratum, optimal_plan, wasserstein_distance)
from .means import (BruteForceResult, MeanResult, SolverOptions, brute_force_q_mean, cluster_decomposition,
                    frechet_mean, kbar_mean, q_mean, unweighted_q_mean, wbar_mean)
from .asymptotics import (ExperimentConfig, ExperimentResult, TrialRecord, clt_experiment, consistency_experiment,
                          error_bound_check, exchangeable_clt_experiment, rate_experiment, run_experiment,
                          stickiness_experiment)

__version__ = "0.1.0"
