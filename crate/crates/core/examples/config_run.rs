//! Driving a run from a TOML document, as the command-line tool does, and
//! reading back the tables it writes.

use cavspin::io::{parse_config_str, read_table, run, ExperimentKind, Overrides};

const CONFIG: &str = r#"
g_coll_hz = 150e3
kappa_hz = 660e3
delta_hz = 22e6
lineshape = "gaussian"
fwhm_hz = 100.0
n_groups = 1000
theta = 0.7853981633974483
tau_s = [50e-6, 100e-6, 150e-6, 200e-6]
"#;

fn main() -> cavspin::Result<()> {
    let out = std::env::temp_dir().join("cavspin_config_run");
    let outcome = run(ExperimentKind::Oat, parse_config_str(CONFIG), &out, &Overrides::default());
    println!("exit code {}", outcome.exit_code);
    for name in &outcome.manifest.tables {
        let table = read_table(&out.join(name))?;
        let cols: Vec<String> = table.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
        println!("{name}: {} rows, {}", table.n_rows(), cols.join(", "));
    }
    println!("report: {}", out.join("report.json").display());
    Ok(())
}
