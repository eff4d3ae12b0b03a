//! Ciphertext-only key recovery on the desk-scale instance, trying every K'
//! cheapest first.
use bsea2::attack::{AttackOptions, InstanceStatus};
use bsea2::{encrypt, partition_keys, run_parallel_instances, CiphertextSample, InstanceSpec, PlaintextModel, SecretKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bsea2::Result<()> {
    let spec = InstanceSpec::mini();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let report = partition_keys(&spec);
    let c0 = bsea2::KeyClassReport::kprimes_of(report.row_by_class("C0").expect("C0 row"));
    let kprime = c0[rng.random_range(0..c0.len())];
    let key = SecretKey::random(&spec, &mut rng, Some(kprime));
    println!("planted key {}", key.to_hex());

    let p0 = 0.9;
    let n = 4096;
    let plain: bsea2::Bits = (0..n).map(|_| rng.random_bool(1.0 - p0)).collect();
    let cipher = encrypt(&spec, &key, &plain)?;
    let sample = CiphertextSample::new(cipher, PlaintextModel::new(p0, "synthetic")?, spec)?;

    let result = run_parallel_instances(&sample, &AttackOptions::default(), true);
    let tried = result.instances.iter().filter(|r| !matches!(r.status, InstanceStatus::NotAttempted)).count();
    match &result.best {
        Some(best) => println!("recovered {} (K' = {}, z = {:.2}) after {tried} instances", best.key, best.kprime, best.validation_score),
        None => println!("no key validated after {tried} instances"),
    }
    Ok(())
}
