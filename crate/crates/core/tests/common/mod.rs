//! Independent reference implementations used as test oracles. They share
//! no code with the library beyond the public data types.

#![allow(dead_code)]

use clinbias::VectorStore;

/// Term tokenization written out by hand: split on whitespace, `-` and `/`,
/// then strip brackets and punctuation from both ends.
pub fn tokens(term: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in term.chars().chain(std::iter::once(' ')) {
        if c.is_whitespace() || c == '-' || c == '/' {
            let strip: &[char] = &['(', ')', '[', ']', ',', ';', ':', '.', '"'];
            let t = cur.trim_matches(strip);
            if !t.is_empty() {
                out.push(t.to_string());
            }
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    out
}

/// Exact match, then lowercase match, by linear scan.
pub fn find(store: &VectorStore, token: &str) -> Option<Vec<f64>> {
    let exact = store.iter().find(|(t, _)| *t == token);
    let lower = token.to_lowercase();
    exact
        .or_else(|| store.iter().find(|(t, _)| *t == lower))
        .map(|(_, v)| v.to_vec())
}

/// Signed cosine of the pooled term vector with `g`, or `None` when the
/// term cannot be scored.
pub fn term_score(store: &VectorStore, term: &str, g: &[f64], contextual: bool) -> Option<f64> {
    let found: Vec<Vec<f64>> = if contextual {
        find(store, term).into_iter().collect()
    } else {
        tokens(term).iter().filter_map(|t| find(store, t)).collect()
    };
    if found.is_empty() {
        return None;
    }
    let mut pooled = vec![0.0; g.len()];
    for v in &found {
        for (p, x) in pooled.iter_mut().zip(v) {
            *p += x;
        }
    }
    for p in &mut pooled {
        *p /= found.len() as f64;
    }
    let mut dot = 0.0;
    let mut nv = 0.0;
    let mut ng = 0.0;
    for i in 0..g.len() {
        dot += pooled[i] * g[i];
        nv += pooled[i] * pooled[i];
        ng += g[i] * g[i];
    }
    if nv == 0.0 || ng == 0.0 {
        return None;
    }
    Some(dot / (nv.sqrt() * ng.sqrt()))
}

pub fn direct_bias(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    Some(scores.iter().map(|s| s.abs()).sum::<f64>() / scores.len() as f64)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major).
/// Returns eigenvalues and eigenvectors (as columns of the second value,
/// stored row-major), unsorted.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Top eigenpair of `MᵀM` for an `r × c` row-major `m`, plus the second
/// eigenvalue.
pub fn top_component(m: &[f64], r: usize, c: usize) -> (Vec<f64>, f64, f64) {
    let mut gram = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            gram[i * c + j] = (0..r).map(|k| m[k * c + i] * m[k * c + j]).sum();
        }
    }
    let (vals, vecs) = jacobi_eigen(&gram, c);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let top = order[0];
    let vector = (0..c).map(|k| vecs[k * c + top]).collect();
    let second = order.get(1).map_or(0.0, |&i| vals[i]);
    (vector, vals[top], second)
}

pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}
