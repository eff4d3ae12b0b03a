mod common;

use bsea2::bits::{from_bytes, to_bytes, to_hex};
use bsea2::{decrypt, encrypt, keystream, Bits, Error, InstanceSpec, SecretKey};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXED_KEY: &str = "0123456789ABCDEF0123456789ABCDEF";

#[test]
fn golden_keystream_for_the_documented_key() {
    let spec = InstanceSpec::bsea2();
    let key = SecretKey::parse_hex(&spec, FIXED_KEY).unwrap();
    let ks = keystream(&spec, &key, 64).unwrap();
    assert_eq!(to_hex(&ks), "DCDB3A3C883AAD7A");
    let oracle = common::scalar_keystream(&spec, FIXED_KEY, 64);
    assert_eq!(common::to_bool_vec(&ks), oracle);
}

#[test]
fn keystream_matches_scalar_oracle_on_random_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB5EA);
    for spec in [InstanceSpec::bsea2(), InstanceSpec::mini(), InstanceSpec::bsea2_with_f0(bsea2::TruthTable::from_word(0x953F))] {
        for _ in 0..10 {
            let key = SecretKey::random(&spec, &mut rng, None);
            let n = rng.random_range(1..700);
            let ks = keystream(&spec, &key, n).unwrap();
            assert_eq!(common::to_bool_vec(&ks), common::scalar_keystream(&spec, &key.to_hex(), n));
        }
    }
}

#[test]
fn round_trip_on_random_pairs() {
    let spec = InstanceSpec::bsea2();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let key = SecretKey::random(&spec, &mut rng, None);
        let mut bytes = vec![0u8; rng.random_range(0..=65536)];
        rng.fill_bytes(&mut bytes);
        let plain = from_bytes(&bytes, None).unwrap();
        let c = encrypt(&spec, &key, &plain).unwrap();
        let back = decrypt(&spec, &key, &c).unwrap();
        assert_eq!(to_bytes(&back), bytes);
    }
}

#[test]
fn key_errors() {
    let spec = InstanceSpec::bsea2();
    let zero_r0 = format!("{:0>32}", "1FF");
    assert_eq!(SecretKey::parse_hex(&spec, &zero_r0).unwrap_err(), Error::DegenerateKey { register: 0 });
    let raw = SecretKey::from_bits(bsea2::bits::from_hex(&zero_r0).unwrap());
    assert_eq!(keystream(&spec, &raw, 8).unwrap_err(), Error::DegenerateKey { register: 0 });
    assert!(matches!(
        SecretKey::parse_hex(&spec, "0123"),
        Err(Error::WrongKeyLength { expected: 128, got: 16 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decrypt_inverts_encrypt(seed in any::<u64>(), bits in proptest::collection::vec(any::<bool>(), 0..3000)) {
        let spec = InstanceSpec::mini();
        let key = SecretKey::random(&spec, &mut ChaCha8Rng::seed_from_u64(seed), None);
        let plain: Bits = bits.iter().copied().collect();
        let c = encrypt(&spec, &key, &plain).unwrap();
        prop_assert_eq!(decrypt(&spec, &key, &c).unwrap(), plain);
    }
}
