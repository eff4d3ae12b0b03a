//! Runs the FIPS 140-2 power-up battery on keystreams and estimates pass
//! rates by key class.
use bsea2::{batch_pass_rates, fips_battery, keystream, InstanceSpec, SecretKey};

fn main() -> bsea2::Result<()> {
    let spec = InstanceSpec::bsea2();
    let key = SecretKey::parse_hex(&spec, "0123456789ABCDEF0123456789ABCDEF")?;
    let r = fips_battery(&keystream(&spec, &key, 20_000)?)?;
    println!(
        "monobit {} ({})  poker {:.2} ({})  runs ({})  long run {} ({})  => {}",
        r.monobit.ones, r.monobit.pass, r.poker.statistic, r.poker.pass, r.runs.pass, r.long_run.max_run, r.long_run.pass,
        if r.all_pass { "pass" } else { "fail" }
    );

    let keys = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let report = batch_pass_rates(&spec, keys, 42)?;
    print!("{}", report.to_csv()?);
    println!("{}", report.comparison.note);
    Ok(())
}
