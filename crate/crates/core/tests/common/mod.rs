#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regdialog::snapshot::fold_case;
use regdialog::{RegistryKey, RegistryPath, RegistrySnapshot, RegistryValue, Timestamp, ValueType};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ts(secs: i64) -> Timestamp {
    Timestamp::from_unix(secs).unwrap()
}

const FIRST: &[char] = &['a', 'b', 'c', 'A', 'B', 'C', 'é', 'É', '0', '.'];
const REST: &[char] = &[
    'a', 'b', 'c', 'A', 'B', 'C', 'é', 'É', '0', '.', ' ', '-', '_', '{', '}',
];

/// Short names from a small alphabet so that case-variant collisions are
/// common.
pub fn name(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(1..=4);
    let mut s = String::new();
    s.push(*FIRST.choose(rng).unwrap());
    for _ in 1..len {
        s.push(*REST.choose(rng).unwrap());
    }
    s
}

pub fn value(rng: &mut impl Rng, name: String) -> RegistryValue {
    let ty = *ValueType::ALL.choose(rng).unwrap();
    let len = rng.gen_range(0..6);
    let data: Vec<u8> = (0..len).map(|_| rng.gen_range(0..4u8)).collect();
    RegistryValue::new(name, ty, data)
}

fn fresh_name(rng: &mut impl Rng, taken: &[String]) -> Option<String> {
    for _ in 0..20 {
        let n = name(rng);
        if !taken.iter().any(|t| fold_case(t) == fold_case(&n)) {
            return Some(n);
        }
    }
    None
}

pub fn values(rng: &mut impl Rng, max: usize) -> Vec<RegistryValue> {
    let mut out: Vec<RegistryValue> = Vec::new();
    for _ in 0..rng.gen_range(0..=max) {
        let taken: Vec<String> = out.iter().map(|v| v.name.clone()).collect();
        let n = if rng.gen_bool(0.15) && !taken.iter().any(String::is_empty) {
            String::new()
        } else if let Some(n) = fresh_name(rng, &taken) {
            n
        } else {
            continue;
        };
        out.push(value(rng, n));
    }
    out
}

/// Every key path of `s` with a mutable handle picked by index.
fn key_mut<'a>(root: &'a mut RegistryKey, path: &[usize]) -> &'a mut RegistryKey {
    let mut node = root;
    for &i in path {
        node = &mut node.subkeys[i];
    }
    node
}

fn index_paths(key: &RegistryKey, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(prefix.clone());
    for (i, k) in key.subkeys.iter().enumerate() {
        prefix.push(i);
        index_paths(k, prefix, out);
        prefix.pop();
    }
}

pub fn all_indices(s: &RegistrySnapshot) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    index_paths(&s.root, &mut Vec::new(), &mut out);
    out
}

fn add_key(rng: &mut impl Rng, s: &mut RegistrySnapshot) {
    let spots = all_indices(s);
    let at = spots.choose(rng).unwrap().clone();
    let parent = key_mut(&mut s.root, &at);
    let taken: Vec<String> = parent.subkeys.iter().map(|k| k.name.clone()).collect();
    if let Some(n) = fresh_name(rng, &taken) {
        let mut k = RegistryKey::new(n, ts(rng.gen_range(1_000_000_000..1_300_000_000)));
        k.values = values(rng, 3);
        parent.subkeys.push(k);
    }
}

/// A valid snapshot with up to `max_keys` keys below the root.
pub fn snapshot(rng: &mut impl Rng, max_keys: usize) -> RegistrySnapshot {
    let mut s = RegistrySnapshot::new("NTUSER.DAT");
    if rng.gen_bool(0.5) {
        s.captured_at = Some(ts(rng.gen_range(1_000_000_000..1_100_000_000)));
    }
    let n = rng.gen_range(0..=max_keys);
    for _ in 0..n {
        add_key(rng, &mut s);
    }
    s
}

/// A later version of `s`: some subtrees removed, keys added, values and
/// timestamps changed.
pub fn mutate(rng: &mut impl Rng, s: &RegistrySnapshot, max_keys: usize) -> RegistrySnapshot {
    let mut t = s.clone();
    t.captured_at = s.captured_at.map(|c| ts(c.unix() + 3600));
    let edits = rng.gen_range(0..8);
    for _ in 0..edits {
        let spots = all_indices(&t);
        match rng.gen_range(0..5) {
            0 if spots.len() > 1 => {
                let at = spots[1..].choose(rng).unwrap().clone();
                let (last, parent) = at.split_last().unwrap();
                key_mut(&mut t.root, parent).subkeys.remove(*last);
            }
            1 => {
                if t.root.key_count() <= max_keys {
                    add_key(rng, &mut t);
                }
            }
            2 if spots.len() > 1 => {
                let at = spots[1..].choose(rng).unwrap().clone();
                let k = key_mut(&mut t.root, &at);
                k.values = values(rng, 3);
            }
            3 if spots.len() > 1 => {
                let at = spots[1..].choose(rng).unwrap().clone();
                let k = key_mut(&mut t.root, &at);
                k.last_modified = ts(k.last_modified.unix() + 60);
            }
            _ if spots.len() > 1 => {
                // Rename by case only: must not count as a change of key.
                let at = spots[1..].choose(rng).unwrap().clone();
                let k = key_mut(&mut t.root, &at);
                k.name = if rng.gen_bool(0.5) {
                    k.name.to_uppercase()
                } else {
                    k.name.to_lowercase()
                };
            }
            _ => {}
        }
    }
    t
}

/// Shuffles siblings and values throughout the tree.
pub fn shuffle_tree(rng: &mut impl Rng, k: &mut RegistryKey) {
    k.values.shuffle(rng);
    k.subkeys.shuffle(rng);
    for c in &mut k.subkeys {
        shuffle_tree(rng, c);
    }
}

pub fn path(p: &str) -> RegistryPath {
    RegistryPath::parse(p).unwrap()
}
