//! Oracle least-squares adaptive filtering of a noisy chirp.

use mtfa::bench::ExampleConfig;
use mtfa::lsfilter::{denoise, DEFAULT_EPSILON};
use mtfa::signals::add_awgn;

fn main() -> mtfa::Result<()> {
    let ex = ExampleConfig::new(1)?;
    let clean = ex.clean()?;
    for snr in [-4.0, 0.0, 6.0] {
        let g = add_awgn(&clean, snr, 7)?;
        let d = denoise(&g, &clean, &ex.matrices, DEFAULT_EPSILON)?;
        println!(
            "snr {snr:>4} dB: signal mse {:.3e}, psnr {:.2} dB, wigner mse {:.3e}",
            d.diagnostics.signal_mse, d.diagnostics.psnr_db, d.diagnostics.wigner_mse
        );
    }
    Ok(())
}
