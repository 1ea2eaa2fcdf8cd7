//! Transverse-mode overlaps `∫Ψa Ψb Ψm` for Hermite–Gauss profiles, the
//! parity selection rule, and the resulting coupling ratio η+/η−.
//!
//!     cargo run --example mode_overlap

use sideband_bae::overlap::{eta_ratio, overlap_eta, ModeProfile, Parity};

fn main() -> sideband_bae::Result<()> {
    let hg = |n| ModeProfile::hermite_gauss(n, 1.0);
    println!("overlap ∫ HG1 · HGb · HGm:");
    print!("{:>4}", "b\\m");
    for m in 0..5 {
        print!(" {m:>10}");
    }
    println!();
    for b in 0..5 {
        print!("{b:>4}");
        for m in 0..5 {
            let (p1, pb, pm) = (hg(1)?, hg(b)?, hg(m)?);
            let value = overlap_eta(&p1, &pb, &pm)?;
            let forbidden = Parity::product(&[p1.parity(), pb.parity(), pm.parity()]) == Parity::Odd;
            print!(" {:>10}", if forbidden { "odd".to_string() } else { format!("{value:.5}") });
        }
        println!();
    }

    // Ψ1 = HG1 pumped, sidebands in HG0 and HG2, mechanics in HG1
    let ratio = eta_ratio(&hg(0)?, &hg(1)?, &hg(2)?, &hg(1)?)?;
    println!("η+/η− with Ψ0 = HG0, Ψ1 = HG1, Ψ2 = HG2, Ψm = HG1: {ratio:.12}");
    // a wider mechanical mode changes the ratio; scaling every waist together does not
    let wide = eta_ratio(&hg(0)?, &hg(1)?, &hg(2)?, &ModeProfile::hermite_gauss(1, 1.5)?)?;
    let scaled = eta_ratio(
        &ModeProfile::hermite_gauss(0, 3.0)?,
        &ModeProfile::hermite_gauss(1, 3.0)?,
        &ModeProfile::hermite_gauss(2, 3.0)?,
        &ModeProfile::hermite_gauss(1, 3.0)?,
    )?;
    println!("mechanical waist ×1.5: {wide:.12}; every waist ×3: {scaled:.12}");
    match eta_ratio(&hg(0)?, &hg(1)?, &hg(2)?, &hg(0)?) {
        Ok(r) => println!("Ψm = HG0: {r}"),
        Err(e) => println!("Ψm = HG0: {e}"),
    }
    Ok(())
}
