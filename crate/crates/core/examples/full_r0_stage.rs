//! Scores all 2^23 fills of R0 at full size for a K' whose plan has an R0-only
//! stage, and reports where the true fill lands.
use bsea2::attack::AttackOptions;
use bsea2::{encrypt, plan_attack, score_stage, CiphertextSample, InstanceSpec, PlaintextModel, SecretKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bsea2::Result<()> {
    let spec = InstanceSpec::bsea2();
    let (kprime, stage) = (0..=255u8)
        .find_map(|k| {
            let plan = plan_attack(&spec, k).ok()?;
            plan.stages.into_iter().find(|s| s.targets == [0] && s.known.is_empty()).map(|s| (k, s))
        })
        .expect("a K' with an R0-only stage");
    let stage = &stage;
    println!("K' = {kprime:#04X}, stage mask {:#06b}, W = {}", stage.mask, stage.walsh);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let key = SecretKey::random(&spec, &mut rng, Some(kprime));
    let p0 = 0.85;
    let plain: bsea2::Bits = (0..8192).map(|_| rng.random_bool(1.0 - p0)).collect();
    let sample = CiphertextSample::new(encrypt(&spec, &key, &plain)?, PlaintextModel::new(p0, "synthetic")?, spec.clone())?;

    let board = score_stage(&sample, stage, &[None; 4], kprime, &AttackOptions::default())?;
    let truth = key.fills(&spec)[0];
    let rank = board.retained.iter().position(|c| c.fills[0].1 == truth);
    println!("{} fills in {:.2}s ({:.3e} fills/s)", board.candidates, board.elapsed_secs, board.states_per_sec());
    for c in board.retained.iter().take(3) {
        println!("  fill {:#08x} score {} / {}", c.joint, c.score, board.n);
    }
    match rank {
        Some(r) => println!("true fill {truth:#08x} ranked {}", r + 1),
        None => println!("true fill {truth:#08x} not retained"),
    }
    Ok(())
}
