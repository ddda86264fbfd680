//! A short SNR sweep of all nine methods on one example.
//!
//! `cargo run --release --example benchmark -- 2` picks example 2.

use mtfa::bench::{run_example, Method};

fn main() -> mtfa::Result<()> {
    let id = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let out = run_example(id, &[-4.0, 6.0], 2, 1, &Method::ALL)?;
    for r in &out.records {
        println!("{:<18} {:>5.1} dB  log10 mse {:>8.3}  psnr {:>6.2}", r.method, r.snr_db, r.log10_mse, r.psnr_db);
    }
    Ok(())
}
