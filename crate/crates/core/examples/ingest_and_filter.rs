//! Parse CDRs leniently, inspect the drop counters and apply the monthly
//! activity filter.

use riskmap::ingest::{load_antennas, parse_cdr_bytes, ActivityFilterConfig, ParseOptions};
use riskmap::filter_users_by_activity;

const ANTENNAS: &str = "A1,-34.60,-58.38\nA2,-31.42,-64.18\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cdr = String::new();
    // u1 and u2 talk every day of November; u3 only twice
    for day in 1..=30 {
        cdr += &format!("u1,u2,2011-11-{day:02}T21:15:00-03:00,out,A1\n");
        cdr += &format!("u1,u2,2011-11-{day:02}T21:15:00-03:00,in,A2\n");
    }
    cdr += "u3,u1,2011-11-07T10:00:00-03:00,out,A2\n";
    cdr += "u3,u1,2011-11-08T10:00:00-03:00,out,A2\n";
    cdr += "u4,u4,2011-11-07T10:00:00-03:00,out,A1\n"; // self-call
    cdr += "u5,u1,2011-11-07T10:00:00-03:00,out,A9\n"; // unknown antenna
    cdr += "u5,u1,yesterday,out,A1\n"; // malformed

    let registry = load_antennas(ANTENNAS.as_bytes())?;
    let mut log = parse_cdr_bytes(cdr.as_bytes(), &registry, &ParseOptions::default())?;
    let clients = filter_users_by_activity(&log, &ActivityFilterConfig::default());
    log.report.users_kept = clients.len() as u64;
    print!("{}", log.report.to_key_value());

    let names: Vec<&str> = clients.iter().map(|&u| log.users.name(u)).collect();
    println!("clients with 5..=400 calls every active month: {names:?}");

    // strict mode turns the same input into an error naming the line
    match parse_cdr_bytes(cdr.as_bytes(), &registry, &ParseOptions::strict()) {
        Ok(_) => println!("strict parse unexpectedly succeeded"),
        Err(e) => println!("strict: {e}"),
    }
    Ok(())
}
