//! Brute-force reference interpreter for the 3-bit opcode machine, written
//! over plain '0'/'1' strings and sharing no code with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Runs `program` and returns `(bits consumed, output)` if HALT executes.
pub fn oracle_run(
    program: &str,
    aux: &str,
    max_steps: u64,
    max_out: usize,
) -> Option<(usize, String)> {
    let prog = program.as_bytes();
    let aux = aux.as_bytes();
    let mut pc = 0usize;
    let mut ap = 0usize;
    let mut out: Vec<u8> = Vec::new();
    let mut steps = 0u64;
    loop {
        if pc + 3 > prog.len() || steps == max_steps {
            return None;
        }
        let op = &prog[pc..pc + 3];
        pc += 3;
        steps += 1;
        match op {
            b"000" => return Some((pc, String::from_utf8(out).unwrap())),
            b"001" => out.push(b'0'),
            b"010" => out.push(b'1'),
            b"011" => {
                let c = *aux.get(ap)?;
                ap += 1;
                out.push(c);
            }
            b"100" => {
                let copy = out.clone();
                out.extend(copy);
            }
            b"101" => {
                out.extend_from_slice(&aux[ap..]);
                ap = aux.len();
            }
            _ => return None,
        }
        if out.len() > max_out {
            return None;
        }
    }
}

pub fn all_strings(max_len: usize) -> Vec<String> {
    let mut v = vec![String::new()];
    for len in 1..=max_len {
        for i in 0..(1u64 << len) {
            v.push(format!("{i:0len$b}"));
        }
    }
    v
}

/// Every program of length ≤ `l` whose run consumes exactly its own bits.
pub fn oracle_halting(
    aux: &str,
    l: usize,
    max_steps: u64,
    max_out: usize,
) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = all_strings(l)
        .into_iter()
        .filter_map(|p| match oracle_run(&p, aux, max_steps, max_out) {
            Some((used, out)) if used == p.len() => Some((p, out)),
            _ => None,
        })
        .collect();
    v.sort();
    v
}

/// output -> (shortest program length, Σ 2^{l - |p|}) over the halting set.
pub fn oracle_table(
    aux: &str,
    l: usize,
    max_steps: u64,
    max_out: usize,
) -> BTreeMap<String, (usize, u128)> {
    let mut t: BTreeMap<String, (usize, u128)> = BTreeMap::new();
    for (p, out) in oracle_halting(aux, l, max_steps, max_out) {
        let e = t.entry(out).or_insert((usize::MAX, 0));
        e.0 = e.0.min(p.len());
        e.1 += 1u128 << (l - p.len());
    }
    t
}
