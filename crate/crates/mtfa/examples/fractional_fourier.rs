//! Fractional Fourier transform of a chirped Gaussian, then back.

use mtfa::metaplectic::{mt, mt_inverse, TransformPlan};
use mtfa::signals::{generate, rel_l2, SignalKind};
use mtfa::{SymplecticMatrix, UniformGrid};

fn main() -> mtfa::Result<()> {
    let grid = UniformGrid::symmetric(256, 0.05)?;
    let f = generate(SignalKind::GaussLfm, grid);
    for deg in [15.0f64, 45.0, 90.0] {
        let (s, c) = deg.to_radians().sin_cos();
        let plan = TransformPlan::chirp_fft(SymplecticMatrix::from_2x2(c, s, -s, c)?, grid)?;
        let out = mt(&f, &plan)?;
        let back = mt_inverse(&out, &plan)?;
        println!(
            "angle {deg:>4}: energy ratio {:.6}, round trip error {:.2e}",
            out.energy() / f.energy(),
            rel_l2(&back.values, &f.values)
        );
    }
    Ok(())
}
