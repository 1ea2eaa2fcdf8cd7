//! Per-input noise budget with optical loss: how much of the optimal channel's
//! noise comes through each input port, and how it scales with pump power.
//!
//!     cargo run --example lossy_budget

use sideband_bae::combine::{evaluate_channel, ChannelSpec};
use sideband_bae::model::validate_regime;
use sideband_bae::{derive_couplings, output_transfer, SystemParams};

fn main() -> sideband_bae::Result<()> {
    let base = SystemParams::lossless_from_rates(30.0, 10.0, 1e4, 1e4, 1.0);
    println!("{:>6} {:>6} {:>6} {:>11} {:>11} {:>11} {:>11} {:>11} {:>8}", "loss", "power", "Ω", "a+", "a−", "e+", "e−", "total", "S/SQL");
    for loss in [0.0, 0.01, 0.1] {
        for power in [1.0, 10.0] {
            let p = base.clone().with_loss_ratio(loss).with_power_scaled(power);
            for finding in validate_regime(&p)? {
                eprintln!("note (loss {loss}, power {power}): {} ({})", finding.inequality, finding.detail);
            }
            let c = derive_couplings(&p)?;
            for omega in [100.0, 300.0, 1000.0] {
                let row = evaluate_channel(&p, &c, &output_transfer(&p, omega)?, &ChannelSpec::Optimal, "optimal")?;
                println!(
                    "{loss:>6} {power:>6} {omega:>6} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>8.4}",
                    row.s_aplus, row.s_aminus, row.s_eplus, row.s_eminus, row.s_total, row.ratio_r
                );
            }
        }
    }
    Ok(())
}
