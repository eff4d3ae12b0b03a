//! Encrypts a message under the full-size cipher and decrypts it again.
use bitvec::prelude::*;
use bsea2::{decrypt, encrypt, keystream, InstanceSpec, SecretKey};

fn to_bytes(bits: &BitSlice<u64, Lsb0>) -> Vec<u8> {
    bits.chunks(8).map(|c| c.iter().fold(0u8, |a, b| a << 1 | *b as u8)).collect()
}

fn main() -> bsea2::Result<()> {
    let spec = InstanceSpec::bsea2();
    let key = SecretKey::parse_hex(&spec, "0123456789ABCDEF0123456789ABCDEF")?;
    let ks = keystream(&spec, &key, 64)?;
    println!("first 64 keystream bits: {}", hex::encode(to_bytes(&ks)));

    let message = b"attack at dawn, bring the polynomials";
    let plain: BitVec<u64, Lsb0> = message.iter().flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1)).collect();
    let cipher = encrypt(&spec, &key, &plain)?;
    let back = decrypt(&spec, &key, &cipher)?;
    let bytes = to_bytes(&back);
    println!("ciphertext bits differ from plaintext in {} of {} places", (cipher.clone() ^ plain.clone()).count_ones(), plain.len());
    println!("decrypted: {}", String::from_utf8_lossy(&bytes));
    assert_eq!(bytes, message);
    Ok(())
}
