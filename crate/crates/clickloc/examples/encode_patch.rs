//! Encode one patch with each of the four encoders and compare sparsity,
//! reconstruction error, and the lasso KKT conditions.
//!
//! ```bash
//! cargo run --release -p clickloc --example encode_patch
//! ```

use clickloc::coding::{
    encode_lasso, encode_ols, encode_omp, encode_ridge, Dictionary, SparseCode,
};
use clickloc::linalg::{axpy, dot, norm2, Mat};
use clickloc::seed::stream_rng;
use rand::Rng;

fn residual_norm(z: &[f64], dict: &Dictionary, code: &SparseCode) -> f64 {
    let mut r = z.to_vec();
    for (j, &a) in code.values.iter().enumerate() {
        if a != 0.0 {
            axpy(-a, dict.atoms().col(j), &mut r);
        }
    }
    norm2(&r)
}

fn main() -> clickloc::Result<()> {
    let p = 32;
    let k = 48;
    let mut rng = stream_rng(11, "encode-example", 0);
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut c: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
            clickloc::linalg::normalize(&mut c);
            c
        })
        .collect();
    let dict = Dictionary::new(Mat::from_columns(&cols)?)?;

    // Signal: sparse combination of three atoms plus a little noise.
    let mut z = vec![0.0; p];
    axpy(0.9, dict.atoms().col(5), &mut z);
    axpy(-0.6, dict.atoms().col(17), &mut z);
    axpy(0.4, dict.atoms().col(33), &mut z);
    for v in z.iter_mut() {
        *v += 0.01 * (rng.random::<f64>() - 0.5);
    }

    let lambda = 0.1;
    let ols = encode_ols(&z, &dict)?;
    let ridge = encode_ridge(&z, &dict, 1.0)?;
    let lasso = encode_lasso(&z, &dict, lambda, 400)?;
    let omp = encode_omp(&z, &dict, 3)?;

    println!(
        "{:>8} {:>6} {:>12} {:>12}",
        "encoder", "nnz", "|z-Da|", "|a|_1"
    );
    for (name, code) in [
        ("ols", &ols),
        ("ridge", &ridge),
        ("lasso", &lasso),
        ("omp", &omp),
    ] {
        let l1: f64 = code.values.iter().map(|v| v.abs()).sum();
        println!(
            "{:>8} {:>6} {:>12.5} {:>12.4}",
            name,
            code.nnz(),
            residual_norm(&z, &dict, code),
            l1
        );
    }

    // The lasso optimum satisfies the KKT system: every residual correlation
    // is bounded by lambda, with equality (signed) on the active set.
    let mut r = z.clone();
    for (j, &a) in lasso.values.iter().enumerate() {
        if a != 0.0 {
            axpy(-a, dict.atoms().col(j), &mut r);
        }
    }
    println!("\nlasso KKT at lambda={} (active atoms):", lambda);
    for (j, &a) in lasso.values.iter().enumerate() {
        if a != 0.0 {
            let corr = dot(dict.atoms().col(j), &r);
            println!("  atom {:>2}: alpha {:+.4}  d^T r = {:+.10}", j, a, corr);
        }
    }
    let worst_inactive = (0..k)
        .filter(|&j| lasso.values[j] == 0.0)
        .map(|j| dot(dict.atoms().col(j), &r).abs())
        .fold(0.0f64, f64::max);
    println!(
        "  max |d^T r| over inactive atoms: {:.10} (<= lambda)",
        worst_inactive
    );
    Ok(())
}
