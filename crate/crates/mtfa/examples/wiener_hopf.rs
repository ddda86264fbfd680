//! Numeric Wiener–Hopf solve against the closed-form design on an ensemble
//! whose filter is known.

use mtfa::field::{field_rel_l2, TfDistribution};
use mtfa::gmconv::{convolve_direct, GmcMatrices};
use mtfa::lsfilter::{design_lsaf_ensemble, wiener_hopf_numeric};
use mtfa::signals::{complex_noise, rng_stream};
use mtfa::wigner::lag_grids;
use mtfa::{UniformGrid, C64};

fn main() -> mtfa::Result<()> {
    let n = 10;
    let x = UniformGrid::symmetric(n, 0.5)?;
    let u = UniformGrid::symmetric(n, 0.2)?;
    let (lx, lu) = lag_grids(&x, &u)?;
    let mut rng = rng_stream(5, 0);
    let mut h = TfDistribution::zeros(lx, lu);
    for (di, dj) in [(0, 0), (1, 0), (0, -1)] {
        let k = (n as i64 - 1 + di) as usize * lu.count + (n as i64 - 1 + dj) as usize;
        h.values[k] = complex_noise(1, 1.0, &mut rng)[0];
    }
    let gmc = GmcMatrices::classical();
    let mut pairs = Vec::new();
    for t in 0..4 {
        let mut y = TfDistribution::new(x, u, complex_noise(n * n, 1.0, &mut rng_stream(t, 1)))?;
        for i in 0..n {
            for j in 0..n {
                if !(2..n - 2).contains(&i) || !(2..n - 2).contains(&j) {
                    y.values[i * n + j] = C64::new(0.0, 0.0);
                }
            }
        }
        pairs.push((convolve_direct(&y, &h, &gmc)?, y));
    }
    let (tgt, obs): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
    let num = wiener_hopf_numeric(&tgt, &obs, &gmc)?;
    let closed = design_lsaf_ensemble(&pairs, &gmc, 1e-12)?;
    println!("normal-equation residual {:.2e}", num.residual);
    println!("numeric vs true filter   {:.2e}", field_rel_l2(&num.h, &h));
    println!("numeric vs closed form   {:.2e}", field_rel_l2(&num.h, &closed.h));
    Ok(())
}
