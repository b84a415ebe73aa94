#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn aesthete(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aesthete")).current_dir(dir).args(args).output().expect("binary runs")
}

/// Runs and fails the test on a nonzero exit.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = aesthete(dir, args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

/// Micro-model training on in-memory synthetic data.
pub fn micro_config(n: usize, stages: &str) -> String {
    format!(
        r#"seed = 7

[data]
source = "synthetic"

[synth]
n = {n}
size = 32

[model]
input_size = 8
input_channels = 3
conv_blocks = [{{ filters = 4, kernel = 3, pool = true }}]
dense_widths = [8]
{stages}"#
    )
}

pub const SMOKE_STAGES: &str = r#"
[[train.stages]]
optimizer = "sgd"
lr_conv = 0.02
lr_dense = 0.02
batch_size = 25
epochs = 15

[[train.stages]]
optimizer = "adam"
lr_conv = 0.003
lr_dense = 0.003
batch_size = 25
epochs = 15
"#;

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn records_csv(rows: &[(&str, f64, f64)]) -> String {
    let mut s = String::from("id,gt_mean,gt_std,pred_mean,pred_std,emd2\n");
    for (id, gt, emd2) in rows {
        s.push_str(&format!("{id},{gt},1.2,{},1.1,{emd2}\n", gt + emd2));
    }
    s
}
