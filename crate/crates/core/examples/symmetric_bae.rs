//! Back-action evasion with equal sideband couplings: the optimal two-output
//! channel against the closed form `(γm² + Ω²)/𝒦(Ω)` and the SQL.
//!
//!     cargo run --example symmetric_bae

use sideband_bae::combine::{analytic_reference, optimal_weights, sql, ReferenceCase};
use sideband_bae::{derive_couplings, output_transfer, SystemParams};

fn main() -> sideband_bae::Result<()> {
    // γ± = 100 γm, η = 5, C0 = 1, so 𝒦(0) = 1
    let params = SystemParams::symmetric_lossless(100.0, 5.0, 1.0, 1.0);
    let couplings = derive_couplings(&params)?;
    println!("g+ = g− = {:.3}, G = {:.1e}", couplings.g_plus, couplings.optical_damping);
    println!("{:>6} {:>12} {:>12} {:>10} {:>8} {:>22}", "Ω", "optimal", "closed form", "SQL", "S/SQL", "weights (w+, w−)");
    for i in 0..=10 {
        let omega = i as f64;
        let t = output_transfer(&params, omega)?;
        let (w, s) = optimal_weights(&t)?;
        let reference = analytic_reference(&params, &couplings, omega, ReferenceCase::SymmetricLossless)?.density();
        let limit = sql(omega, params.gamma_m);
        println!(
            "{omega:>6.1} {s:>12.5} {reference:>12.5} {limit:>10.5} {:>8.4}   ({:.3}, {:.3})",
            s / limit,
            w.w_plus,
            w.w_minus
        );
    }
    // with more pump power the optimal channel sits far below the SQL
    let strong = params.clone().with_power_scaled(100.0);
    let (_, s) = optimal_weights(&output_transfer(&strong, 1.0)?)?;
    println!("×100 pump power at Ω = γm: S/SQL = {:.4}", s / sql(1.0, 1.0));
    Ok(())
}
