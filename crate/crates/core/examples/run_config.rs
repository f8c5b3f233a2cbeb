//! Driving the harness from a JSON config, as `santalo-lab run config.json` does.

use santalo_lab::cli::{run, ExperimentConfig};

fn main() -> santalo_lab::Result<()> {
    let config = ExperimentConfig::from_json(
        r#"{
            "command": "talagrand",
            "params": { "measures": [ { "normal": { "var": 2.0 } }, { "normal": { "var": 0.5 } } ] },
            "seed": 7
        }"#,
    )?;
    let out = run(&config);
    print!("{}", out.stdout);
    println!("exit code {}", out.code);
    Ok(())
}
