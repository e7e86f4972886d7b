//! Readers for the high-precision Student-t tables in `tests/data`, plus the
//! splitmix64 vector generator that `scripts/t_reference.py` mirrors.

use std::path::Path;

pub struct LatticePoint {
    pub df: u64,
    pub t: f64,
    pub p: f64,
}

pub struct PairedCase {
    pub seed: u64,
    pub n: usize,
    pub p: f64,
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

pub fn lattice(dir: &Path) -> Vec<LatticePoint> {
    rows(&dir.join("student_t_lattice.tsv"))
        .into_iter()
        .map(|r| LatticePoint {
            df: r[0].parse().unwrap(),
            t: r[1].parse().unwrap(),
            p: r[2].parse().unwrap(),
        })
        .collect()
}

pub fn paired_cases(dir: &Path) -> Vec<PairedCase> {
    rows(&dir.join("paired_t_reference.tsv"))
        .into_iter()
        .map(|r| PairedCase {
            seed: r[0].parse().unwrap(),
            n: r[1].parse().unwrap(),
            p: r[2].parse().unwrap(),
        })
        .collect()
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// The paired sample for `seed`; must stay in lockstep with the script.
pub fn paired_vector(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut g = SplitMix64(seed);
    let n = 5 + (g.next() % 196) as usize;
    let shift = (g.unit() - 0.5) * 0.1;
    let spread = 0.05 + g.unit();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = g.unit();
        let b = a + shift + (g.unit() - 0.5) * spread;
        x.push(a);
        y.push(b);
    }
    (x, y)
}
