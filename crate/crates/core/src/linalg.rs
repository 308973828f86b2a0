use num_complex::Complex64;

/// `log2 det(A)` for a Hermitian positive-definite `k x k` matrix stored
/// row-major. Only the lower triangle is read; `a` is overwritten with the
/// Cholesky factor. `None` if a pivot is not positive.
pub(crate) fn log2_det_hpd(a: &mut [Complex64], k: usize) -> Option<f64> {
    debug_assert_eq!(a.len(), k * k);
    let mut log_det = 0.0;
    for j in 0..k {
        let row_j = &mut a[j * k..(j + 1) * k];
        let mut d = row_j[j].re;
        for v in &row_j[..j] {
            d -= v.norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let l_jj = libm::sqrt(d);
        row_j[j] = Complex64::new(l_jj, 0.0);
        log_det += libm::log(d);
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= a[i * k + m] * a[j * k + m].conj();
            }
            a[i * k + j] = s / l_jj;
        }
    }
    Some(log_det / core::f64::consts::LN_2)
}
