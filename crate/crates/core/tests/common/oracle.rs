use std::fs;
use std::path::Path;

use rand::Rng;
use styloforge::seeding::rng;

pub const DISJOINT_AUTHORS: [(&str, &str); 3] = [("ann", "abcdefgh"), ("bob", "ijklmnop"), ("cyd", "qrstuvwx")];

/// Three authors whose letters never overlap, `docs` files each.
pub fn write_disjoint_corpus(root: &Path, docs: usize, sentences: usize, seed: u64) {
    let mut r = rng(seed);
    for (author, letters) in DISJOINT_AUTHORS {
        let letters: Vec<char> = letters.chars().collect();
        let dir = root.join(author);
        fs::create_dir_all(&dir).unwrap();
        for d in 0..docs {
            let mut text = String::new();
            for _ in 0..sentences {
                let words: Vec<String> = (0..r.random_range(6..14))
                    .map(|_| (0..r.random_range(2..7)).map(|_| letters[r.random_range(0..letters.len())]).collect())
                    .collect();
                text.push_str(&words.join(" "));
                text.push_str(". ");
            }
            fs::write(dir.join(format!("{d:02}.txt")), text).unwrap();
        }
    }
}

/// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues descending
/// with eigenvectors as columns.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Centered rows projected on the top `k` oracle eigenvectors.
pub fn oracle_projection(rows: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| centered.iter().map(|r| r[i] * r[j]).sum::<f64>() / (n - 1) as f64).collect())
        .collect();
    let (values, vectors) = jacobi_eigen(&cov);
    let coords = centered
        .iter()
        .map(|r| vectors[..k].iter().map(|v| r.iter().zip(v).map(|(x, w)| x * w).sum()).collect())
        .collect();
    (values, coords)
}

/// Macro precision, recall and F1 recounted label by label.
pub fn brute_force_macro(truth: &[usize], predicted: &[usize], classes: usize) -> (f64, f64, f64) {
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for c in 0..classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&t, &y) in truth.iter().zip(predicted) {
            match (t == c, y == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        p += precision;
        r += recall;
        f += f1;
    }
    let k = classes as f64;
    (p / k, r / k, f / k)
}
