//! Generalized metaplectic convolution computed directly and through the
//! product theorem.

use std::f64::consts::PI;

use mtfa::bench::ExampleConfig;
use mtfa::field::{field_rel_l2, TfDistribution};
use mtfa::gmconv::{convolve_direct, convolve_spectral};
use mtfa::{UniformGrid, C64};

fn main() -> mtfa::Result<()> {
    let g = UniformGrid::symmetric(64, 0.5)?;
    let f = TfDistribution::from_fn(g, g, |x, u| C64::new((-PI * (x * x + u * u) / 4.0).exp(), 0.0));
    let h = TfDistribution::from_fn(g, g, |x, u| C64::from_polar((-PI * ((x - 0.5).powi(2) + u * u)).exp(), 0.3 * x));
    for id in 1..=3 {
        let m = ExampleConfig::new(id)?.matrices.gmc;
        let a = convolve_direct(&f, &h, &m)?;
        let b = convolve_spectral(&f, &h, &m)?;
        println!("example {id} ({:?}): direct vs spectral {:.2e}", m.family(), field_rel_l2(&b, &a));
    }
    Ok(())
}
