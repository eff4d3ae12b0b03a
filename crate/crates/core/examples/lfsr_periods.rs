//! Checks the period of the desk-scale registers and prints a few output bits
//! of each full-size register.
use bsea2::lfsr::{self, DEFAULT_PERIOD_CHECK_BOUND};
use bsea2::LfsrState;

fn main() -> bsea2::Result<()> {
    for poly in lfsr::mini::all() {
        let period = poly.check_period(DEFAULT_PERIOD_CHECK_BOUND)?;
        println!("degree {:>2}  taps {:?}  period {period}", poly.degree(), poly.exponents());
    }
    for (j, poly) in lfsr::standard::all().into_iter().enumerate() {
        let bits = LfsrState::new(poly, 1)?.generate_sequence(48);
        let s: String = bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
        println!("R{j} (L = {}) from fill 1: {s}", poly.degree());
    }
    Ok(())
}
