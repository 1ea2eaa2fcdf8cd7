//! Unequal Stokes and anti-Stokes couplings: fixed and optimal channels
//! compared with the adiabatic closed form `((γm − G)² + Ω²)/(2G+)`.
//!
//!     cargo run --example asymmetric_channels

use sideband_bae::combine::{evaluate_channel, ChannelSpec, ReferenceCase};
use sideband_bae::{analytic_reference, derive_couplings, output_transfer, CombinationWeights, SystemParams};

fn main() -> sideband_bae::Result<()> {
    // g+ = 3, g− = 2: G = γm with G+ = 5
    let params = SystemParams::lossless_from_rates(3.0, 2.0, 1e3, 1e3, 1.0);
    let c = derive_couplings(&params)?;
    println!("G = {:.3}, G+ = {:.3}", c.optical_damping, c.photonic_gain);

    let channels = [
        ("optimal", ChannelSpec::Optimal),
        ("optimal-real", ChannelSpec::OptimalReal),
        ("beta", ChannelSpec::Beta),
        ("difference", ChannelSpec::Fixed(CombinationWeights::difference())),
        ("sum", ChannelSpec::Fixed(CombinationWeights::sum())),
    ];
    print!("{:>6} {:>12}", "Ω", "closed form");
    for (label, _) in &channels {
        print!(" {label:>12}");
    }
    println!();
    for omega in [0.01, 0.1, 0.3, 1.0, 3.0, 10.0] {
        let t = output_transfer(&params, omega)?;
        let reference = analytic_reference(&params, &c, omega, ReferenceCase::AsymmetricLossless)?.density();
        print!("{omega:>6.2} {reference:>12.4e}");
        for (label, spec) in &channels {
            let row = evaluate_channel(&params, &c, &t, spec, label)?;
            print!(" {:>12.4e}", row.s_total);
        }
        println!();
    }
    Ok(())
}
