//! Dyadic frequency cubes, the close-pair decomposition, the dyadic sum
//! estimates and a concentration detector over the symmetry group.

mod dyadic;
mod search;
mod sums;
mod whitney;

pub use dyadic::{close, whitney_pair_for, DyadicCube, MAX_SCALE, MIN_SCALE};
pub use search::{
    concentration_search, linear_strichartz, Atom, SearchOptions, SearchReport,
    StrichartzOptions, StrichartzReport, STRICHARTZ_TAIL_TOLERANCE,
};
pub use sums::{
    elementary_sum, elementary_sum_check, restricted_sum_check, OmegaSet, RestrictedSum,
    ELEMENTARY_SCALES,
};
pub use whitney::{
    freq_restrict, lattice_point, whitney_bilinear_table, BilinearEntry, BilinearOptions,
    BilinearTable, MODE_FLOOR,
};
