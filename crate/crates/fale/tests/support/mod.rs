#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fale_core::synth::{generate, SynthConfig};
use fale_core::Dataset;

pub const FALE: &str = env!("CARGO_BIN_EXE_fale");
pub const FIXTURE: &str = env!("CARGO_BIN_EXE_fale-fixture-oracle");

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn fale(args: &[&str], cwd: &Path) -> Output {
    Command::new(FALE)
        .args(args)
        .current_dir(cwd)
        .env_remove("FALE_LOG")
        .output()
        .expect("run fale")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn fixture_command(mode: &[&str]) -> Vec<String> {
    std::iter::once(FIXTURE.to_owned())
        .chain(mode.iter().map(|s| s.to_string()))
        .collect()
}

pub fn exec_model(mode: &[&str]) -> String {
    format!(
        "exec:{}",
        shlex::try_join(fixture_command(mode).iter().map(String::as_str)).unwrap()
    )
}

/// Small synthetic dataset plus its schema, written into `dir`.
pub fn write_synth(dir: &Path, rows: usize) -> (PathBuf, PathBuf, Dataset) {
    let cfg = SynthConfig {
        n_rows: rows,
        ..Default::default()
    };
    let (ds, _) = generate(&cfg).unwrap();
    let data = dir.join("synth.csv");
    let schema = dir.join("synth_schema.json");
    fale::io::save_csv(&data, &ds).unwrap();
    fale::io::save_schema(&schema, ds.schema()).unwrap();
    (data, schema, ds)
}
