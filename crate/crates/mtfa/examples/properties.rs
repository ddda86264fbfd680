//! Residuals of the distribution properties on two seeds.

use mtfa::properties::{run_properties, PropertyId};

fn main() -> mtfa::Result<()> {
    let rows = run_properties(&PropertyId::ALL, 2)?;
    for id in PropertyId::ALL {
        let worst = rows.iter().filter(|r| r.property == id.name()).map(|r| r.residual).fold(0.0, f64::max);
        println!("{:<24} {worst:.2e}", id.name());
    }
    Ok(())
}
