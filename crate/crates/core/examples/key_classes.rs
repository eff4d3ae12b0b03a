//! Partitions all 256 values of K' by the cost of their cheapest attack.
use bsea2::boolfn::TruthTable;
use bsea2::{partition_keys, InstanceSpec};

fn main() -> bsea2::Result<()> {
    let f0 = match std::env::args().nth(1) {
        Some(s) => TruthTable::parse_hex(&s)?,
        None => TruthTable::from_word(bsea2::cipher::DEFAULT_F0),
    };
    let report = partition_keys(&InstanceSpec::bsea2_with_f0(f0));
    println!("f0 = {}", report.f0.to_hex());
    for row in &report.rows {
        let cost = row.exponent.map_or("-".to_string(), |e| format!("2^{e}"));
        println!("{:<3} {:>5} {:>4} keys ({:5.1}%)  e.g. K' = {}", row.class, cost, row.count, 100.0 * row.fraction, row.example.kprime);
    }
    for d in &report.published_diff {
        for c in d.counts.iter().filter(|c| c.delta != 0) {
            let cost = c.exponent.map_or("unattackable".to_string(), |e| format!("2^{e}"));
            let published = c.published_count.map_or("-".to_string(), |n| n.to_string());
            println!("  {cost:>12}: published {published:>3}, computed {:>3} ({:+})", c.ours, c.delta);
        }
        for note in &d.notes {
            println!("  note: {note}");
        }
    }
    Ok(())
}
