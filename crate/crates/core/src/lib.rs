//! BSEA-2: a four-register LFSR combination generator whose combiner truth
//! table is masked by eight key bits, together with the tooling to break it.
//!
//! * [`lfsr`], [`boolfn`] and [`cipher`] implement the generator.
//! * [`classifier`] derives, for every 8-bit mask `K'`, the cheapest
//!   divide-and-conquer plan from the Walsh spectrum of the effective combiner.
//! * [`attack`] runs those plans against ciphertext, [`plaintext`] models the
//!   plaintext bias they rely on, and [`randomness`] holds the FIPS 140-2 battery.

pub mod attack;
pub mod bits;
pub mod boolfn;
pub mod cipher;
pub mod classifier;
pub mod cli;
pub mod error;
pub mod lfsr;
pub mod plaintext;
pub mod randomness;

pub use attack::{
    run_parallel_instances, run_plan, score_stage, validate_key, AttackOptions, CiphertextSample, RecoveredKey,
    ScoreBoard,
};
pub use bits::Bits;
pub use boolfn::{walsh_transform, TruthTable, WalshSpectrum};
pub use cipher::{decrypt, encrypt, key_setup, keystream, CipherInstance, InstanceSpec, SecretKey};
pub use classifier::{partition_keys, plan_attack, AttackPlan, AttackStage, KeyClassReport};
pub use error::{Error, Result};
pub use lfsr::{FeedbackPolynomial, LfsrState};
pub use plaintext::PlaintextModel;
pub use randomness::{batch_pass_rates, fips_battery, FipsResult};
