//! Generate a seeded synthetic dataset and write it to disk with a
//! ready-to-run pipeline config.
//!
//! ```text
//! cargo run --example synth_fixture -- <out-dir> [seed] [users]
//! ```

use std::path::PathBuf;

use riskmap::pipeline::config_for_synthetic_dir;
use riskmap::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synth-out".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let n_users = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);

    let cfg = SynthConfig { seed, n_users, ..SynthConfig::default() };
    let data = generate(&cfg)?;
    for path in data.write_to_dir(&out)? {
        println!("wrote {}", path.display());
    }
    let run = config_for_synthetic_dir(".".as_ref(), "out".as_ref());
    std::fs::write(out.join("riskmap.toml"), run.to_toml())?;

    let m = &data.manifest;
    let endemic = m.users.iter().filter(|u| u.endemic).count();
    println!("{} records, {} users ({endemic} endemic), {} edges", m.records, m.users.len(), m.edges.len());
    println!("run it with: riskmap run --config {}", out.join("riskmap.toml").display());
    Ok(())
}
