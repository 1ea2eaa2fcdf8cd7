//! The operating point `G = γm`: the composite `β` channel carries the force
//! with gain `sqrt(G+/γm)` while its optical noise vanishes as Ω → 0.
//!
//!     cargo run --example amplification

use sideband_bae::combine::{beta_coefficient, force_referred_psd, scaled_signal_gain};
use sideband_bae::{amplification_gain, beta_combination, derive_couplings, output_transfer, SystemParams};

fn main() -> sideband_bae::Result<()> {
    println!("{:>6} {:>8} {:>10} {:>12} {:>12} {:>12}", "G+", "k", "gain", "sqrt(G+/γm)", "S(Ω=1e-3)", "S(Ω=0.3)");
    for g_total in [1.0, 5.0, 25.0, 100.0] {
        // g+ − g− = γm = 1
        let params = SystemParams::lossless_from_rates((g_total + 1.0) / 2.0, (g_total - 1.0) / 2.0, 1e4, 1e4, 1.0);
        let c = derive_couplings(&params)?;
        let beta = beta_combination(&params, &c)?;
        let low = output_transfer(&params, 1e-6)?;
        let gain = scaled_signal_gain(&low, &beta, params.gamma_m);
        let noise = |omega: f64| -> sideband_bae::Result<f64> {
            Ok(force_referred_psd(&output_transfer(&params, omega)?, &beta, 0.0, params.gamma_m)?.s_total)
        };
        println!(
            "{g_total:>6} {:>8.4} {gain:>10.5} {:>12.5} {:>12.3e} {:>12.3e}",
            beta_coefficient(params.gamma_m, &c)?,
            amplification_gain(&params, &c)?,
            noise(1e-3)?,
            noise(0.3)?
        );
    }
    Ok(())
}
