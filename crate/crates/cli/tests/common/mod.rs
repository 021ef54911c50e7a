#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regdialog::{RegistryKey, RegistryPath, RegistrySnapshot, RegistryValue, Timestamp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_regdialog"));
    c.env_remove("REGDIALOG_KB");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn regdialog")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn series() -> [PathBuf; 3] {
    [1, 2, 3].map(|i| fixture(&format!("acrobat_hive{i}.regsnap")))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn path(p: &str) -> RegistryPath {
    RegistryPath::parse(p).unwrap()
}

pub fn ts(secs: i64) -> Timestamp {
    Timestamp::from_unix(secs).unwrap()
}

const NAMES: &[&str] = &[
    "Software",
    "Adobe",
    "Run",
    "RecentDocs",
    ".doc",
    "Shell",
    "Bags",
    "0",
    "1",
    "Ünï",
];

/// A random snapshot of up to `max_keys` keys.
pub fn snapshot(r: &mut impl Rng, max_keys: usize) -> RegistrySnapshot {
    let mut s = RegistrySnapshot::new("NTUSER.DAT");
    let n = r.gen_range(0..=max_keys);
    for _ in 0..n {
        let depth = r.gen_range(1..5);
        let segs: Vec<&str> = (0..depth).map(|_| *NAMES.choose(r).unwrap()).collect();
        let p = path(&segs.join("\\"));
        let k = s.upsert_key(&p, ts(r.gen_range(1_200_000_000..1_300_000_000)));
        for _ in 0..r.gen_range(0..3) {
            let name = ["", "MRUList", "a", "b"].choose(r).unwrap();
            if k.value(name).is_none() {
                k.values.push(RegistryValue::dword(*name, r.gen_range(0..4)));
            }
        }
    }
    s
}

/// A copy of `s` with some keys removed, added or changed.
pub fn mutate(r: &mut impl Rng, s: &RegistrySnapshot) -> RegistrySnapshot {
    let mut out = s.clone();
    fn walk(r: &mut impl Rng, k: &mut RegistryKey) {
        k.subkeys.retain(|_| r.gen_bool(0.9));
        if r.gen_bool(0.05) {
            k.name = k.name.to_uppercase();
        }
        if r.gen_bool(0.2) {
            k.values.clear();
            k.values.push(RegistryValue::dword("changed", r.gen_range(0..4)));
        }
        for c in &mut k.subkeys {
            walk(r, c);
        }
    }
    for c in &mut out.root.subkeys {
        walk(r, c);
    }
    let extra = snapshot(r, 5);
    for (p, k) in extra.keys() {
        out.upsert_key(&p, k.last_modified);
    }
    out
}
