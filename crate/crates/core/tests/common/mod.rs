#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random m x p matrix with orthonormal columns (Gram-Schmidt of a Gaussian draw).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, m: usize, p: usize) -> DMatrix<f64> {
    loop {
        let mut q = normal_matrix(rng, m, p);
        let mut ok = true;
        for k in 0..p {
            let mut col = q.column(k).into_owned();
            for j in 0..k {
                let prev = q.column(j).into_owned();
                col -= &prev * prev.dot(&col);
            }
            let norm = col.norm();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            q.set_column(k, &(col / norm));
        }
        if ok {
            return q;
        }
    }
}

/// Cyclic Jacobi eigensolver; eigenvalues descending with matching columns.
pub fn jacobi_eigen(b: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = b.nrows();
    let mut a = b.clone();
    let mut v = DMatrix::<f64>::identity(m, m);
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values = DVector::from_iterator(m, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(m, m, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Entrywise L1 reconstruction error computed straight from the definition.
pub fn l1_error(a: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        let row = a.row(i);
        for j in 0..a.ncols() {
            let mut rec = 0.0;
            for k in 0..x.ncols() {
                let score: f64 = (0..a.ncols()).map(|l| row[l] * x[(l, k)]).sum();
                rec += score * x[(j, k)];
            }
            total += (row[j] - rec).abs();
        }
    }
    total
}

/// Rows of the p=1 golden file: `(instance, data, fmin)`.
pub fn p1_oracle() -> Vec<(usize, DMatrix<f64>, f64)> {
    let text = include_str!("../golden/p1_oracle.csv");
    let mut fmins = Vec::new();
    let mut rows: Vec<Vec<(f64, f64)>> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# fmin ") {
            let mut it = rest.split_whitespace();
            let k: usize = it.next().unwrap().parse().unwrap();
            let f: f64 = it.next().unwrap().parse().unwrap();
            assert_eq!(k, fmins.len());
            fmins.push(f);
        } else if !line.starts_with('#') && !line.trim().is_empty() {
            let f: Vec<&str> = line.split(',').collect();
            let k: usize = f[0].parse().unwrap();
            if rows.len() <= k {
                rows.resize(k + 1, Vec::new());
            }
            rows[k].push((f[2].parse().unwrap(), f[3].parse().unwrap()));
        }
    }
    rows.into_iter()
        .zip(fmins)
        .enumerate()
        .map(|(k, (r, f))| {
            let m = DMatrix::from_fn(r.len(), 2, |i, j| if j == 0 { r[i].0 } else { r[i].1 });
            (k, m, f)
        })
        .collect()
}
