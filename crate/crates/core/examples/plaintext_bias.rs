//! Estimates the zero-bit bias of English text and the ciphertext length an
//! attack stage needs at that bias.
use bsea2::plaintext::{combine_bias, estimate_p0, required_sample_length, SAMPLE_CORPUS};

fn main() -> bsea2::Result<()> {
    let model = estimate_p0(SAMPLE_CORPUS, "bundled corpus")?;
    println!("p0 = {:.4} over {} bits", model.p0, model.sample_size);
    for (p, bits) in [(0.75, 23), (0.75, 37), (0.625, 52), (0.25, 60)] {
        let pp = combine_bias(p, model.p0);
        let n = required_sample_length(pp, bits, 0.99)?;
        println!("p = {p:<5}  p' = {pp:.4}  2^{bits} fills  N >= {n} bits");
    }
    Ok(())
}
