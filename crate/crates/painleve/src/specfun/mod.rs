//! Complex gamma and parabolic cylinder functions.

mod gamma;
mod pcf;

pub use gamma::{arg_gamma, gamma, log_gamma, rgamma};
pub use pcf::{pcf_d, pcf_d_asymptotic, pcf_d_asymptotic_series, sector, AsymptoticSector};
