//! Prints the masked combiner, its spectrum, and the correlations an attacker
//! can use for one K'.
use bsea2::classifier::spectrum_report;
use bsea2::{InstanceSpec, PlaintextModel};

fn main() -> bsea2::Result<()> {
    let kprime = std::env::args()
        .nth(1)
        .map(|s| bsea2::classifier::parse_kprime(&s))
        .transpose()?
        .unwrap_or(0x9E);
    let spec = InstanceSpec::bsea2();
    let report = spectrum_report(&spec, kprime, &PlaintextModel::ascii_conservative());
    println!("K' = {}  f = {}  g = {}", report.kprime, report.f.to_hex(), report.g.to_hex());
    println!("W_f = {:?}", report.spectrum_f.values());
    println!("W_g = {:?}", report.spectrum_g.values());
    println!("bent: {}  biased keystream: {}", report.bent, report.distinguisher);
    for m in &report.usable_masks {
        println!("  mask {} registers {:?}  W = {:>3}  p = {:.3}  p' = {:.4}", m.mask, m.registers, m.walsh, m.p, m.p_prime);
    }
    match &report.plan {
        Some(plan) => println!("cheapest plan: 2^{} ({} stages)", plan.max_exponent, plan.stages.len()),
        None => println!("no plan; registers {:?} never appear in a usable mask", report.uncovered),
    }
    Ok(())
}
