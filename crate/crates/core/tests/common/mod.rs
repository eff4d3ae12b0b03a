//! Scalar reference implementations used as test oracles. Nothing here calls
//! into the crate's generator or kernel code; only plain data (degrees, tap
//! exponents, the initial table) is read from an `InstanceSpec`.
#![allow(dead_code)]

use bsea2::InstanceSpec;

/// Feedback exponents below the degree, plus the degree, for register `j`.
pub fn taps(spec: &InstanceSpec, j: usize) -> (usize, Vec<usize>) {
    let e: Vec<usize> = spec.polynomials[j].exponents().iter().map(|&x| x as usize).collect();
    let degree = e[0];
    (degree, e[1..].to_vec())
}

/// Bit-at-a-time Fibonacci register: output stage 0, shift down, feed the
/// XOR of the tapped stages into the top.
pub fn scalar_register(degree: usize, taps: &[usize], stages: &[bool], n: usize) -> Vec<bool> {
    assert_eq!(stages.len(), degree);
    let mut s = stages.to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(s[0]);
        let fb = taps.iter().fold(false, |acc, &i| acc ^ s[i]);
        s.remove(0);
        s.push(fb);
    }
    out
}

pub fn fill_to_stages(fill: u64, degree: usize) -> Vec<bool> {
    (0..degree).map(|i| fill >> i & 1 == 1).collect()
}

pub fn hex_to_bits(hex: &str) -> Vec<bool> {
    hex.chars()
        .flat_map(|c| {
            let v = c.to_digit(16).expect("hex digit");
            (0..4).rev().map(move |i| v >> i & 1 == 1)
        })
        .collect()
}

/// Key bits split into register stages and the 8-bit mask, key bit 0 first.
pub fn split_key(spec: &InstanceSpec, key_bits: &[bool]) -> (Vec<Vec<bool>>, u8) {
    let mut pos = 0;
    let mut regs = Vec::new();
    for j in 0..4 {
        let (d, _) = taps(spec, j);
        regs.push(key_bits[pos..pos + d].to_vec());
        pos += d;
    }
    let kprime = key_bits[pos..pos + 8].iter().fold(0u8, |acc, &b| acc << 1 | b as u8);
    (regs, kprime)
}

pub fn masked_word(spec: &InstanceSpec, kprime: u8) -> u16 {
    let f0 = spec.f0.word().expect("4-input table");
    f0 ^ ((kprime as u16) << 8 | kprime as u16)
}

/// sigma_t = f(x0, x1, x2, x3) ^ x0 with index x3 + 2 x2 + 4 x1 + 8 x0.
pub fn scalar_keystream(spec: &InstanceSpec, key_hex: &str, n: usize) -> Vec<bool> {
    let (regs, kprime) = split_key(spec, &hex_to_bits(key_hex));
    let f = masked_word(spec, kprime);
    let seqs: Vec<Vec<bool>> = (0..4)
        .map(|j| {
            let (d, t) = taps(spec, j);
            scalar_register(d, &t, &regs[j], n)
        })
        .collect();
    (0..n)
        .map(|t| {
            let idx = (seqs[0][t] as usize) << 3 | (seqs[1][t] as usize) << 2 | (seqs[2][t] as usize) << 1 | seqs[3][t] as usize;
            (f >> idx & 1 == 1) ^ seqs[0][t]
        })
        .collect()
}

/// Definitional Walsh coefficient of the 4-input word at mask `u`.
pub fn walsh_at(word: u16, u: usize) -> i32 {
    (0..16)
        .map(|x| {
            let bit = (word >> x & 1) as u32 ^ ((u & x).count_ones() & 1);
            if bit == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Re-encryption oracle for one stage: for each joint fill of `targets`
/// (first target in the low bits) clock every masked register bit by bit
/// and count agreements of the predicted bit with the ciphertext.
pub fn scalar_stage_scores(
    spec: &InstanceSpec,
    cipher: &[bool],
    kprime: u8,
    mask: u8,
    targets: &[usize],
    known: &[(usize, u64)],
    p0: f64,
) -> Vec<u32> {
    let n = cipher.len();
    let g = masked_word(spec, kprime) ^ 0xFF00;
    let s = (walsh_at(g, mask as usize) < 0) ^ (p0 < 0.5);
    let known_seqs: Vec<Vec<bool>> = known
        .iter()
        .map(|&(j, fill)| {
            let (d, t) = taps(spec, j);
            scalar_register(d, &t, &fill_to_stages(fill, d), n)
        })
        .collect();
    let total: usize = targets.iter().map(|&j| taps(spec, j).0).sum();
    (0..1u64 << total)
        .map(|joint| {
            let mut shift = 0;
            let seqs: Vec<Vec<bool>> = targets
                .iter()
                .map(|&j| {
                    let (d, t) = taps(spec, j);
                    let fill = joint >> shift & ((1 << d) - 1);
                    shift += d;
                    scalar_register(d, &t, &fill_to_stages(fill, d), n)
                })
                .collect();
            (0..n)
                .filter(|&t| {
                    let b = seqs.iter().chain(&known_seqs).fold(false, |acc, q| acc ^ q[t]);
                    b ^ s == cipher[t]
                })
                .count() as u32
        })
        .collect()
}

pub fn to_bool_vec(bits: &bsea2::Bits) -> Vec<bool> {
    bits.iter().by_vals().collect()
}
