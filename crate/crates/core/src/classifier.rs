//! Attack planning and key-class partitions.
//!
//! The attacker sees `sigma = g(x)` with `g = f ^ x0`. A nonzero Walsh
//! coefficient `W_g(u)` at a mask `u != 0` means the keystream agrees with
//! the XOR of the registers selected by `u` with probability
//! `(1 + W_g(u)/16) / 2`. Mask bit 3 selects R0, bit 2 R1, bit 1 R2 and bit 0
//! R3. A stage brute-forces the registers of its mask that are still unknown
//! and reuses the fills recovered by earlier stages for the rest.
//!
//! Plans are found by exhaustive search over mask sequences. Each stage adds
//! at least one register, so a plan has at most four stages and the search
//! visits at most `15^4` sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{apply_key_mask, effective_spectrum, walsh_transform, TruthTable, WalshSpectrum};
use crate::cipher::{InstanceSpec, REGISTERS};
use crate::error::{Error, Result};
use crate::plaintext::{combine_bias, PlaintextModel};

/// Registers selected by a 4-bit mask, ascending.
pub fn mask_registers(mask: u8) -> Vec<usize> {
    (0..REGISTERS).filter(|&j| mask >> (3 - j) & 1 == 1).collect()
}

fn register_set(mask: u8) -> u8 {
    // Bit j of the result is register j.
    (0..REGISTERS).fold(0u8, |acc, j| acc | ((mask >> (3 - j) & 1) << j))
}

fn set_members(set: u8) -> Vec<usize> {
    (0..REGISTERS).filter(|&j| set >> j & 1 == 1).collect()
}

pub fn format_mask(mask: u8) -> String {
    format!("{mask:04b}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackStage {
    pub mask: u8,
    /// Registers brute-forced jointly in this stage.
    pub targets: Vec<usize>,
    /// Registers of the mask recovered by earlier stages.
    pub known: Vec<usize>,
    /// Sum of target degrees: the stage enumerates `2^exponent` joint fills.
    pub exponent: u32,
    /// `W_g(mask)`; its sign decides whether predictions are complemented.
    pub walsh: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub stages: Vec<AttackStage>,
    pub max_exponent: u32,
    /// `log2 sum 2^exponent` over the stages.
    pub sum_cost: f64,
    /// `W_g(0) != 0`: the keystream itself is biased.
    pub distinguisher: bool,
}

impl AttackPlan {
    pub fn masks(&self) -> Vec<u8> {
        self.stages.iter().map(|s| s.mask).collect()
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone)]
struct PlanKey {
    max_exponent: u32,
    sum_cost: u128,
    stages: usize,
    masks: Vec<u8>,
}

/// Cheapest plan for given register degrees and effective spectrum.
///
/// Ordering: smallest maximal stage exponent, then smallest total cost, then
/// fewest stages, then the lexicographically smallest mask sequence.
pub fn plan_from_spectrum(degrees: [u32; REGISTERS], g: &WalshSpectrum) -> Result<AttackPlan> {
    assert_eq!(g.inputs(), 4, "planner works on 4-input combiners");
    let usable: Vec<u8> = (1..16u8).filter(|&u| g.get(u as usize) != 0).collect();
    let reachable = usable.iter().fold(0u8, |acc, &u| acc | register_set(u));
    if reachable != 0b1111 {
        return Err(Error::Unattackable {
            uncovered: set_members(!reachable & 0b1111),
        });
    }

    let mut best: Option<PlanKey> = None;
    let mut path = Vec::with_capacity(REGISTERS);
    search(&degrees, &usable, 0, 0, 0, &mut path, &mut best);
    let best = best.expect("every register is reachable");

    let mut recovered = 0u8;
    let stages = best
        .masks
        .iter()
        .map(|&mask| {
            let regs = register_set(mask);
            let new = regs & !recovered;
            let stage = AttackStage {
                mask,
                targets: set_members(new),
                known: set_members(regs & recovered),
                exponent: set_members(new).iter().map(|&j| degrees[j]).sum(),
                walsh: g.get(mask as usize),
            };
            recovered |= new;
            stage
        })
        .collect();
    Ok(AttackPlan {
        stages,
        max_exponent: best.max_exponent,
        sum_cost: (best.sum_cost as f64).log2(),
        distinguisher: g.get(0) != 0,
    })
}

fn search(
    degrees: &[u32; REGISTERS],
    usable: &[u8],
    recovered: u8,
    max_exponent: u32,
    sum_cost: u128,
    path: &mut Vec<u8>,
    best: &mut Option<PlanKey>,
) {
    if recovered == 0b1111 {
        let key = PlanKey {
            max_exponent,
            sum_cost,
            stages: path.len(),
            masks: path.clone(),
        };
        if best.as_ref().is_none_or(|b| key < *b) {
            *best = Some(key);
        }
        return;
    }
    if let Some(b) = best {
        if max_exponent > b.max_exponent {
            return;
        }
    }
    for &u in usable {
        let new = register_set(u) & !recovered;
        if new == 0 {
            continue;
        }
        let exponent: u32 = set_members(new).iter().map(|&j| degrees[j]).sum();
        path.push(u);
        search(
            degrees,
            usable,
            recovered | new,
            max_exponent.max(exponent),
            sum_cost + (1u128 << exponent),
            path,
            best,
        );
        path.pop();
    }
}

pub fn masked_table(spec: &InstanceSpec, kprime: u8) -> TruthTable {
    apply_key_mask(&spec.f0, kprime).expect("spec combiner has 4 inputs")
}

pub fn plan_attack(spec: &InstanceSpec, kprime: u8) -> Result<AttackPlan> {
    let f = masked_table(spec, kprime);
    plan_from_spectrum(spec.degrees(), &effective_spectrum(&f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumExample {
    pub kprime: String,
    /// Spectrum of the masked table `f` (not of `g`).
    pub spectrum: WalshSpectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    /// `None` for the unattackable row.
    pub exponent: Option<u32>,
    pub count: usize,
    pub fraction: f64,
    pub kprimes: Vec<String>,
    pub example: SpectrumExample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KprimePlan {
    pub kprime: String,
    pub plan: Option<AttackPlan>,
    pub uncovered: Vec<usize>,
}

/// One line of the comparison against a published partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountDiff {
    pub exponent: Option<u32>,
    pub published_class: Option<String>,
    pub published_count: Option<usize>,
    pub ours: usize,
    pub delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleDiff {
    pub kprime: String,
    pub published_exponent: u32,
    pub ours: Option<u32>,
    pub published_spectrum: Vec<i32>,
    pub spectrum_matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedDiff {
    pub table: String,
    pub published_count_sum: usize,
    pub counts: Vec<CountDiff>,
    pub examples: Vec<ExampleDiff>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyClassReport {
    pub spec_fingerprint: String,
    pub f0: TruthTable,
    pub rows: Vec<ClassRow>,
    pub plans: Vec<KprimePlan>,
    #[serde(rename = "diff_vs_paper")]
    pub published_diff: Vec<PublishedDiff>,
}

impl KeyClassReport {
    pub fn row_for(&self, kprime: u8) -> Option<&ClassRow> {
        let hex = format_kprime(kprime);
        self.rows.iter().find(|r| r.kprimes.contains(&hex))
    }

    pub fn row_by_class(&self, class: &str) -> Option<&ClassRow> {
        self.rows.iter().find(|r| r.class == class)
    }

    pub fn kprimes_of(row: &ClassRow) -> Vec<u8> {
        row.kprimes.iter().filter_map(|h| parse_kprime(h).ok()).collect()
    }

    /// Table-style CSV: class, complexity, example spectrum, count, fraction.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["class", "complexity", "example", "count", "fraction"])
            .map_err(io)?;
        for row in &self.rows {
            let complexity = row
                .exponent
                .map_or_else(|| "unattackable".to_string(), |e| format!("2^{e}"));
            let spectrum: Vec<String> = row
                .example
                .spectrum
                .values()
                .iter()
                .map(|v| format!("{v:+}"))
                .collect();
            let example = format!("K' = {} - S = ({})", row.example.kprime, spectrum.join(", "));
            w.write_record([
                row.class.clone(),
                complexity,
                example,
                row.count.to_string(),
                format!("{:.4}", row.fraction),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn format_kprime(k: u8) -> String {
    format!("0x{k:02X}")
}

pub fn parse_kprime(s: &str) -> Result<u8> {
    let t = s.trim();
    let digits = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    u8::from_str_radix(digits, 16).map_err(|_| Error::Config(format!("'{s}' is not an 8-bit hex value")))
}

/// Plans all 256 `K'` values and groups them by maximal stage exponent.
pub fn partition_keys(spec: &InstanceSpec) -> KeyClassReport {
    let outcomes: Vec<Result<AttackPlan>> = (0..=255u8)
        .into_par_iter()
        .map(|k| plan_attack(spec, k))
        .collect();

    let mut exponents: Vec<u32> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok().map(|p| p.max_exponent))
        .collect();
    exponents.sort_unstable();
    exponents.dedup();

    let make_row = |class: String, exponent: Option<u32>, members: Vec<u8>| {
        let example_k = members[0];
        ClassRow {
            class,
            exponent,
            count: members.len(),
            fraction: members.len() as f64 / 256.0,
            kprimes: members.iter().map(|&k| format_kprime(k)).collect(),
            example: SpectrumExample {
                kprime: format_kprime(example_k),
                spectrum: walsh_transform(&masked_table(spec, example_k)),
            },
        }
    };

    let mut rows: Vec<ClassRow> = exponents
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let members: Vec<u8> = (0..=255u8)
                .filter(|&k| matches!(&outcomes[k as usize], Ok(p) if p.max_exponent == e))
                .collect();
            make_row(format!("C{i}"), Some(e), members)
        })
        .collect();
    let unattackable: Vec<u8> = (0..=255u8)
        .filter(|&k| outcomes[k as usize].is_err())
        .collect();
    if !unattackable.is_empty() {
        rows.push(make_row("U".into(), None, unattackable));
    }

    let plans = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| match o {
            Ok(p) => KprimePlan {
                kprime: format_kprime(k as u8),
                plan: Some(p.clone()),
                uncovered: vec![],
            },
            Err(Error::Unattackable { uncovered }) => KprimePlan {
                kprime: format_kprime(k as u8),
                plan: None,
                uncovered: uncovered.clone(),
            },
            Err(e) => unreachable!("planner only fails with Unattackable, got {e}"),
        })
        .collect();

    let mut report = KeyClassReport {
        spec_fingerprint: spec.fingerprint(),
        f0: spec.f0.clone(),
        rows,
        plans,
        published_diff: vec![],
    };
    report.published_diff = published_diff(spec, &report).into_iter().collect();
    report
}

/// Published partition rows: class label, exponent, count, example `K'`
/// and the example's spectrum.
pub struct PublishedRow {
    pub class: &'static str,
    pub exponent: u32,
    pub count: usize,
    pub kprime: u8,
    pub spectrum: [i32; 16],
}

pub struct PublishedTable {
    pub name: &'static str,
    pub f0: u16,
    pub rows: &'static [PublishedRow],
}

pub const PUBLISHED_TABLES: [PublishedTable; 2] = [
    PublishedTable {
        name: "Table 1",
        f0: 0x953F,
        rows: &[
            PublishedRow { class: "C0", exponent: 37, count: 144, kprime: 0x9E, spectrum: [4, 4, -4, -4, -4, -4, -4, -4, 0, 0, 0, 0, 8, -8, 0, 0] },
            PublishedRow { class: "C1", exponent: 52, count: 32, kprime: 0xF1, spectrum: [0, 0, 8, 8, 0, 0, 0, 0, -4, 4, 4, -4, -4, 4, -4, 4] },
            PublishedRow { class: "C1", exponent: 54, count: 24, kprime: 0x67, spectrum: [0, 0, 0, 0, 8, 8, 0, 0, 4, -4, 4, -4, -4, 4, 4, -4] },
            PublishedRow { class: "C2", exponent: 60, count: 24, kprime: 0xAB, spectrum: [0, 0, 0, 0, 0, 0, 8, 8, 4, -4, 4, -4, 4, -4, -4, 4] },
            PublishedRow { class: "C3", exponent: 66, count: 4, kprime: 0x1D, spectrum: [8, 8, 0, 0, 0, 0, 0, 0, 0, 0, -8, 8, 0, 0, 0, 0] },
            PublishedRow { class: "C3", exponent: 68, count: 12, kprime: 0x71, spectrum: [0, 0, 8, 8, 0, 0, 0, 0, 0, 0, 0, 0, -8, 8, 0, 0] },
            PublishedRow { class: "C3", exponent: 70, count: 12, kprime: 0xDE, spectrum: [0, 0, 0, 0, 0, 0, -8, -8, 0, 0, 0, 0, 8, -8, 0, 0] },
            PublishedRow { class: "C4", exponent: 97, count: 32, kprime: 0xBD, spectrum: [8, 8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -8, 8] },
        ],
    },
    PublishedTable {
        name: "Table 2",
        f0: 0x93A0,
        rows: &[
            PublishedRow { class: "C0", exponent: 37, count: 152, kprime: 0x2E, spectrum: [-4, 4, 4, -4, -4, -4, 4, 4, 4, 4, 4, 4, -4, 4, -4, 4] },
            PublishedRow { class: "C1", exponent: 52, count: 24, kprime: 0x4F, spectrum: [-8, 0, 8, 0, 0, 0, 0, 0, -4, 4, -4, 4, -4, -4, -4, -4] },
            PublishedRow { class: "C1", exponent: 54, count: 64, kprime: 0xEA, spectrum: [0, 0, 0, 0, 0, 8, 0, -8, 4, 4, 4, 4, -4, 4, -4, 4] },
            PublishedRow { class: "C2", exponent: 68, count: 16, kprime: 0xC5, spectrum: [0, -8, 0, 8, 0, 0, 0, 0, 0, 0, 0, 0, 0, -8, 0, -8] },
        ],
    },
];

/// Structured comparison with the published partition for the same `f0`,
/// when the instance uses the full-size register degrees.
pub fn published_diff(spec: &InstanceSpec, report: &KeyClassReport) -> Option<PublishedDiff> {
    if spec.degrees() != [23, 29, 31, 37] {
        return None;
    }
    let word = spec.f0.word()?;
    let table = PUBLISHED_TABLES.iter().find(|t| t.f0 == word)?;

    let mut exps: Vec<Option<u32>> = table.rows.iter().map(|r| Some(r.exponent)).collect();
    exps.extend(report.rows.iter().map(|r| r.exponent));
    exps.sort();
    exps.dedup();
    let counts = exps
        .into_iter()
        .map(|e| {
            let published = e.and_then(|e| table.rows.iter().find(|r| r.exponent == e));
            let ours = report
                .rows
                .iter()
                .find(|r| r.exponent == e)
                .map_or(0, |r| r.count);
            let published_count = published.map(|r| r.count);
            CountDiff {
                exponent: e,
                published_class: published.map(|r| r.class.to_string()),
                published_count,
                ours,
                delta: ours as i64 - published_count.unwrap_or(0) as i64,
            }
        })
        .collect();

    let examples = table
        .rows
        .iter()
        .map(|r| {
            let ours = report.plans[r.kprime as usize].plan.as_ref().map(|p| p.max_exponent);
            let spectrum = walsh_transform(&masked_table(spec, r.kprime));
            ExampleDiff {
                kprime: format_kprime(r.kprime),
                published_exponent: r.exponent,
                ours,
                published_spectrum: r.spectrum.to_vec(),
                spectrum_matches: spectrum.values() == r.spectrum,
            }
        })
        .collect();

    let published_count_sum: usize = table.rows.iter().map(|r| r.count).sum();
    let mut notes = Vec::new();
    if published_count_sum != 256 {
        notes.push(format!(
            "published counts sum to {published_count_sum}, not 256; reproduced partition is reported as computed"
        ));
    }
    let subset_sums: Vec<u32> = (1..16u32)
        .map(|s| (0..4).filter(|j| s >> j & 1 == 1).map(|j| spec.degrees()[j]).sum())
        .collect();
    for r in table.rows {
        if !subset_sums.contains(&r.exponent) {
            notes.push(format!(
                "published exponent {} is not a sum of register degrees",
                r.exponent
            ));
        }
    }
    Some(PublishedDiff {
        table: table.name.to_string(),
        published_count_sum,
        counts,
        examples,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskCorrelation {
    pub mask: String,
    pub registers: Vec<usize>,
    pub walsh: i32,
    pub p: f64,
    pub p_prime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub spec_fingerprint: String,
    pub kprime: String,
    pub f0: TruthTable,
    pub f: TruthTable,
    pub g: TruthTable,
    pub spectrum_f: WalshSpectrum,
    pub spectrum_g: WalshSpectrum,
    pub bent: bool,
    pub distinguisher: bool,
    pub p0: f64,
    pub usable_masks: Vec<MaskCorrelation>,
    pub plan: Option<AttackPlan>,
    pub uncovered: Vec<usize>,
}

pub fn spectrum_report(spec: &InstanceSpec, kprime: u8, model: &PlaintextModel) -> SpectrumReport {
    let f = masked_table(spec, kprime);
    let g = crate::boolfn::effective_function(&f);
    let spectrum_g = walsh_transform(&g);
    let usable_masks = (1..16u8)
        .filter(|&u| spectrum_g.get(u as usize) != 0)
        .map(|u| {
            let p = spectrum_g.correlation_probability(u as usize);
            MaskCorrelation {
                mask: format_mask(u),
                registers: mask_registers(u),
                walsh: spectrum_g.get(u as usize),
                p,
                p_prime: combine_bias(p, model.p0),
            }
        })
        .collect();
    let (plan, uncovered) = match plan_from_spectrum(spec.degrees(), &spectrum_g) {
        Ok(p) => (Some(p), vec![]),
        Err(Error::Unattackable { uncovered }) => (None, uncovered),
        Err(e) => unreachable!("planner only fails with Unattackable, got {e}"),
    };
    SpectrumReport {
        spec_fingerprint: spec.fingerprint(),
        kprime: format_kprime(kprime),
        f0: spec.f0.clone(),
        spectrum_f: walsh_transform(&f),
        bent: crate::boolfn::is_bent(&f),
        distinguisher: spectrum_g.get(0) != 0,
        f,
        g,
        spectrum_g,
        p0: model.p0,
        usable_masks,
        plan,
        uncovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FULL: [u32; 4] = [23, 29, 31, 37];

    /// Independent check: enumerate ordered set partitions of the registers
    /// and keep those where every block is exactly the unknown part of some
    /// usable mask.
    fn brute_force_max_exponent(degrees: [u32; 4], g: &WalshSpectrum) -> Option<u32> {
        let usable: Vec<u8> = (1..16u8).filter(|&u| g.get(u as usize) != 0).collect();
        fn go(
            degrees: &[u32; 4],
            usable: &[u8],
            done: u8,
            cost: u32,
        ) -> Option<u32> {
            if done == 0b1111 {
                return Some(cost);
            }
            let remaining = !done & 0b1111;
            let mut best = None;
            // Every nonempty subset of the remaining registers as next block.
            let mut block = remaining;
            while block != 0 {
                let feasible = usable.iter().any(|&u| {
                    let regs: u8 = (0..4).fold(0, |a, j| a | ((u >> (3 - j) & 1) << j));
                    regs & !done == block
                });
                if feasible {
                    let e: u32 = (0..4).filter(|j| block >> j & 1 == 1).map(|j| degrees[j]).sum();
                    if let Some(c) = go(degrees, usable, done | block, cost.max(e)) {
                        best = Some(best.map_or(c, |b: u32| b.min(c)));
                    }
                }
                block = (block - 1) & remaining;
            }
            best
        }
        go(&degrees, &usable, 0, 0)
    }

    fn full_spec(f0: u16) -> InstanceSpec {
        InstanceSpec::bsea2_with_f0(TruthTable::from_word(f0))
    }

    #[test]
    fn mask_register_mapping() {
        assert_eq!(mask_registers(0b1000), vec![0]);
        assert_eq!(mask_registers(0b0001), vec![3]);
        assert_eq!(mask_registers(0b0111), vec![1, 2, 3]);
    }

    #[test]
    fn every_mask_usable_gives_largest_register() {
        let mut v = vec![4; 16];
        v[0] = 0;
        let g = WalshSpectrum::from_values(v).unwrap();
        let plan = plan_from_spectrum(FULL, &g).unwrap();
        assert_eq!(plan.max_exponent, 37);
        assert_eq!(plan.stages.len(), 4);
        assert!(plan.stages.iter().all(|s| s.targets.len() == 1));
    }

    #[test]
    fn planner_reuses_recovered_registers() {
        // R0 alone through 1000, R1 through 1100 once R0 is known,
        // R2 and R3 only jointly through 0011.
        let mut v = vec![0; 16];
        v[0b1000] = 8;
        v[0b1100] = -8;
        v[0b0011] = 8;
        v[0] = 8;
        let g = WalshSpectrum::from_values(v).unwrap();
        let plan = plan_from_spectrum(FULL, &g).unwrap();
        // Equal-cost orders tie-break on the smaller mask sequence.
        assert_eq!(plan.masks(), vec![0b0011, 0b1000, 0b1100]);
        assert_eq!(plan.stages[2].known, vec![0]);
        assert_eq!(plan.stages[2].targets, vec![1]);
        assert_eq!(plan.stages[2].walsh, -8);
        assert_eq!(plan.max_exponent, 68);
        assert!(plan.distinguisher);
    }

    #[test]
    fn zero_function_is_unattackable() {
        let err = plan_attack(&full_spec(0x0000), 0).unwrap_err();
        assert_eq!(err, Error::Unattackable { uncovered: vec![1, 2, 3] });
    }

    #[test]
    fn published_examples_under_the_mask_model() {
        // Values derived with the brute-force enumerator above; the published
        // exponents for these rows are 52 and 97.
        let f1 = full_spec(0x953F);
        let p = plan_attack(&f1, 0xF1).unwrap();
        assert_eq!(p.max_exponent, 37);
        let p = plan_attack(&f1, 0xBD).unwrap();
        assert_eq!(p.max_exponent, 60);
        for k in [0xF1u8, 0xBD] {
            let g = effective_spectrum(&masked_table(&f1, k));
            assert_eq!(Some(plan_attack(&f1, k).unwrap().max_exponent), brute_force_max_exponent(FULL, &g));
        }
    }

    #[test]
    fn planner_matches_partition_enumerator_on_all_kprimes() {
        for f0 in [0x93A0u16, 0x953F] {
            let spec = full_spec(f0);
            for k in 0..=255u8 {
                let g = effective_spectrum(&masked_table(&spec, k));
                let ours = plan_attack(&spec, k).ok().map(|p| p.max_exponent);
                assert_eq!(ours, brute_force_max_exponent(FULL, &g), "f0={f0:#x} k={k:#x}");
            }
        }
    }

    #[test]
    fn plan_masks_are_valid() {
        let spec = full_spec(0x93A0);
        for k in 0..=255u8 {
            let g = effective_spectrum(&masked_table(&spec, k));
            let Ok(plan) = plan_attack(&spec, k) else { continue };
            let mut recovered = vec![];
            for s in &plan.stages {
                assert_ne!(g.get(s.mask as usize), 0);
                assert_ne!(s.mask, 0);
                let regs = mask_registers(s.mask);
                for t in &s.targets {
                    assert!(regs.contains(t) && !recovered.contains(t));
                }
                for kn in &s.known {
                    assert!(regs.contains(kn) && recovered.contains(kn));
                }
                recovered.extend(&s.targets);
            }
            recovered.sort();
            assert_eq!(recovered, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn partition_of_the_default_table() {
        let report = partition_keys(&InstanceSpec::bsea2());
        let total: usize = report.rows.iter().map(|r| r.count).sum();
        assert_eq!(total, 256);
        let frac: f64 = report.rows.iter().map(|r| r.fraction).sum();
        assert!((frac - 1.0).abs() < 1e-12);
        let mut seen: Vec<String> = report.rows.iter().flat_map(|r| r.kprimes.clone()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 256);
        // Derived counts under the mask model.
        let counts: Vec<(Option<u32>, usize)> =
            report.rows.iter().map(|r| (r.exponent, r.count)).collect();
        assert_eq!(
            counts,
            vec![(Some(37), 192), (Some(52), 12), (Some(60), 12), (Some(66), 8), (Some(89), 4), (None, 28)]
        );
        let diff = &report.published_diff[0];
        assert_eq!(diff.table, "Table 2");
        assert_eq!(diff.published_count_sum, 256);
        assert!(diff.examples.iter().all(|e| e.spectrum_matches));
    }

    #[test]
    fn table1_diff_flags_inconsistencies() {
        let report = partition_keys(&full_spec(0x953F));
        let diff = &report.published_diff[0];
        assert_eq!(diff.published_count_sum, 284);
        assert!(diff.notes.iter().any(|n| n.contains("284")));
        assert!(diff.notes.iter().any(|n| n.contains("exponent 70")));
        assert!(diff.examples.iter().all(|e| e.spectrum_matches));
    }

    #[test]
    fn mini_instance_has_no_published_diff() {
        assert!(partition_keys(&InstanceSpec::mini()).published_diff.is_empty());
    }

    #[test]
    fn spectrum_report_for_table2_example() {
        let model = PlaintextModel::ascii_conservative();
        let r = spectrum_report(&InstanceSpec::bsea2(), 0x2C, &model);
        assert_eq!(
            r.spectrum_f.values(),
            &[-4, 4, 4, -4, -4, -4, 4, 4, 8, 0, 8, 0, 0, 0, 0, 0]
        );
        let r0 = spectrum_report(&InstanceSpec::bsea2(), 0x00, &model);
        assert_eq!(r0.f, r0.f0);
        assert!(r0.bent);
        for m in &r.usable_masks {
            assert!((m.p_prime - combine_bias(m.p, 0.55)).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_columns() {
        let report = partition_keys(&InstanceSpec::bsea2());
        let csv = report.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "class,complexity,example,count,fraction");
        assert!(lines.next().unwrap().starts_with("C0,2^37,"));
    }

    fn permute_mask(u: usize, perm: &[usize; 4]) -> usize {
        // Register j moves to position perm[j].
        (0..4).fold(0, |acc, j| acc | ((u >> (3 - j) & 1) << (3 - perm[j])))
    }

    proptest! {
        #[test]
        fn random_spectra_match_enumerator(
            values in proptest::collection::vec(prop_oneof![Just(0i32), Just(4), Just(-4), Just(8)], 16),
            degrees in proptest::sample::subsequence((3u32..20).collect::<Vec<_>>(), 4),
        ) {
            let degrees: [u32; 4] = degrees.try_into().unwrap();
            let g = WalshSpectrum::from_values(values).unwrap();
            let ours = plan_from_spectrum(degrees, &g).ok().map(|p| p.max_exponent);
            prop_assert_eq!(ours, brute_force_max_exponent(degrees, &g));
        }

        #[test]
        fn relabeling_is_equivariant(
            word in any::<u16>(),
            perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let perm: [usize; 4] = perm;
            let g = effective_spectrum(&TruthTable::from_word(word));
            let mut permuted = vec![0; 16];
            for u in 0..16 {
                permuted[permute_mask(u, &perm)] = g.get(u);
            }
            let mut degrees = [0u32; 4];
            for j in 0..4 {
                degrees[perm[j]] = FULL[j];
            }
            let a = plan_from_spectrum(FULL, &g);
            let b = plan_from_spectrum(degrees, &WalshSpectrum::from_values(permuted).unwrap());
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.max_exponent, b.max_exponent);
                    prop_assert!((a.sum_cost - b.sum_cost).abs() < 1e-9);
                }
                (Err(Error::Unattackable { uncovered: ua }), Err(Error::Unattackable { uncovered: ub })) => {
                    let mut mapped: Vec<usize> = ua.iter().map(|&j| perm[j]).collect();
                    mapped.sort();
                    prop_assert_eq!(mapped, ub);
                }
                _ => prop_assert!(false, "attackability changed under relabeling"),
            }
        }
    }
}
