//! Draws reproducible keys of each class for the desk-scale instance.
use bsea2::{partition_keys, InstanceSpec, KeyClassReport, SecretKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = InstanceSpec::mini();
    let report = partition_keys(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for row in &report.rows {
        let ks = KeyClassReport::kprimes_of(row);
        let kprime = ks[rng.random_range(0..ks.len())];
        let key = SecretKey::random(&spec, &mut rng, Some(kprime));
        println!("{:<3} K' = {:#04X}  key {}", row.class, key.kprime(&spec), key.to_hex());
    }
}
