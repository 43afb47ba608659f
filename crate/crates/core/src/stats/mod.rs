//! Replica orchestration and the statistical experiments.

pub mod barrier;
pub mod clt;
pub mod free_energy;
pub mod ks;
pub mod martingale;
pub mod replicas;
pub mod smoothing;
pub mod summary;

pub use barrier::{barrier_experiment, BarrierConfig, BarrierReport};
pub use clt::{clt_from_table, conditional_clt_experiment, CltConfig, CltReport};
pub use free_energy::{boundary_distance, free_energy_from_table, free_energy_map, square_grid, FreeEnergyConfig, FreeEnergyRow};
pub use ks::{ks_critical_one_sample, ks_critical_two_sample, ks_statistic, ks_two_sample, standard_normal_cdf};
pub use martingale::{martingale_experiment, martingale_from_table, MartingaleConfig, MartingaleReport};
pub use replicas::{run_replicas, simulate_replica, with_threads, ReplicaPlan, ReplicaRow, ReplicaTable};
pub use smoothing::{smoothing_recursion_check, SmoothingConfig, SmoothingReport};
pub use summary::{correlation, median, Estimate, LinearFit};
