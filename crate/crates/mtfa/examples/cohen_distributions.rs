//! Classical Cohen distributions next to the metaplectic Wigner distribution
//! of the first benchmark example.

use mtfa::bench::ExampleConfig;
use mtfa::cohen::{cmcd, CmcdConfig, KernelSpec};
use mtfa::wigner::mwd;

fn main() -> mtfa::Result<()> {
    let ex = ExampleConfig::new(1)?;
    let f = ex.clean()?;
    for spec in [KernelSpec::Wigner, KernelSpec::ChoiWilliams { sigma: 1.0 }, KernelSpec::BornJordan, KernelSpec::MargenauHill] {
        let cfg = CmcdConfig::classical(&f.grid, &spec)?;
        let w = cmcd(&f, &cfg)?;
        println!("{:<18} {}x{} peak {:.3}", spec.name(), w.xgrid.count, w.ugrid.count, w.max_abs());
    }
    let cfg = CmcdConfig::new(ex.matrices.mwd.clone(), ex.matrices.gmc.clone(), &f.grid, &KernelSpec::Delta)?;
    let w = mwd(&f, &cfg.mwd, &cfg.grids)?;
    println!("{:<18} {}x{} peak {:.3}", "mwd (example 1)", w.xgrid.count, w.ugrid.count, w.max_abs());
    Ok(())
}
