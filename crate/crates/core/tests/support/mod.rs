//! Reference implementations used as test oracles. They are deliberately
//! naive: plain maps and loops, no shared code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

pub struct OracleStat {
    pub delta: f64,
    pub var_marked: f64,
    pub var_unmarked: f64,
    pub z: f64,
}

/// Weighted log-odds with an informative Dirichlet prior built from the
/// pooled counts (alpha_w = pooled count / pooled total, alpha0 = 1).
/// Returns `None` for a word whose smoothed remainder is not positive.
pub fn log_odds(
    marked: &BTreeMap<String, u64>,
    unmarked: &BTreeMap<String, u64>,
    laplace: f64,
) -> BTreeMap<String, Option<OracleStat>> {
    let total_m: u64 = marked.values().sum();
    let total_u: u64 = unmarked.values().sum();
    let pooled_total = (total_m + total_u) as f64;
    let words: BTreeSet<&String> = marked.keys().chain(unmarked.keys()).collect();
    let mut out = BTreeMap::new();
    for w in words {
        let cm = *marked.get(w).unwrap_or(&0) as f64;
        let cu = *unmarked.get(w).unwrap_or(&0) as f64;
        let alpha = (cm + cu) / pooled_total;
        out.insert(
            w.clone(),
            single(cm, total_m as f64, cu, total_u as f64, alpha, 1.0, laplace),
        );
    }
    out
}

/// The same arithmetic for one word from explicit inputs.
pub fn single(
    cm: f64,
    total_m: f64,
    cu: f64,
    total_u: f64,
    alpha: f64,
    alpha0: f64,
    laplace: f64,
) -> Option<OracleStat> {
    let num_m = cm + laplace + alpha;
    let den_m = total_m + alpha0 - cm - laplace - alpha;
    let num_u = cu + laplace + alpha;
    let den_u = total_u + alpha0 - cu - laplace - alpha;
    if den_m <= 0.0 || den_u <= 0.0 {
        return None;
    }
    let delta = (num_m / den_m).ln() - (num_u / den_u).ln();
    let var_marked = 1.0 / num_m + 1.0 / den_m;
    let var_unmarked = 1.0 / num_u + 1.0 / den_u;
    Some(OracleStat {
        delta,
        var_marked,
        var_unmarked,
        z: delta / (var_marked + var_unmarked).sqrt(),
    })
}

/// Jensen-Shannon divergence in bits via two explicit KL sums.
pub fn jsd_bits(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let words: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let mut kl_pm = 0.0;
    let mut kl_qm = 0.0;
    for w in words {
        let pw = p.get(w).copied().unwrap_or(0.0);
        let qw = q.get(w).copied().unwrap_or(0.0);
        let m = 0.5 * (pw + qw);
        if pw > 0.0 {
            kl_pm += pw * (pw / m).log2();
        }
        if qw > 0.0 {
            kl_qm += qw * (qw / m).log2();
        }
    }
    0.5 * kl_pm + 0.5 * kl_qm
}

/// `|a - b| <= rel * max(|a|, |b|)`, with a 1e-15 absolute floor for
/// values that are zero up to rounding.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-15
}
