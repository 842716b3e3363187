//! Matrix-vector routines.

use super::{ArgError, Check, DiagKind, Transpose, Triangle};

/// Scale the first `len` logical elements of `y` by `beta`; `beta = 0`
/// assigns zero without reading.
fn scale_vector(y: &mut super::StridedVectorMut<'_>, len: usize, beta: f64) {
    if beta == 1.0 {
        return;
    }
    for i in 0..len {
        let v = if beta == 0.0 { 0.0 } else { beta * y.get(i) };
        y.set(i, v);
    }
}

/// `y := alpha*op(A)*x + beta*y` with `A` an `m × n` matrix.
#[allow(clippy::too_many_arguments)]
pub fn dgemv(
    trans: Transpose,
    m: i64,
    n: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    x: &[f64],
    incx: i64,
    beta: f64,
    y: &mut [f64],
    incy: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DGEMV" };
    let m = ck.dim(2, m)?;
    let n = ck.dim(3, n)?;
    let lda = ck.ld(6, lda, m)?;
    let incx = ck.inc(8, incx)?;
    let incy = ck.inc(11, incy)?;
    let (lenx, leny) = match trans {
        Transpose::NoTrans => (n, m),
        Transpose::Trans => (m, n),
    };
    let a = ck.matrix(5, a, m, n, lda)?;
    let x = ck.vector(7, x, lenx, incx)?;
    let mut y = ck.vector_mut(10, y, leny, incy)?;

    if m == 0 || n == 0 || (alpha == 0.0 && beta == 1.0) {
        return Ok(());
    }
    scale_vector(&mut y, leny, beta);
    if alpha == 0.0 {
        return Ok(());
    }
    match trans {
        Transpose::NoTrans => {
            for j in 0..n {
                let temp = alpha * x.get(j);
                for i in 0..m {
                    y.set(i, y.get(i) + temp * a.get(i, j));
                }
            }
        }
        Transpose::Trans => {
            for j in 0..n {
                let mut temp = 0.0;
                for i in 0..m {
                    temp += a.get(i, j) * x.get(i);
                }
                y.set(j, y.get(j) + alpha * temp);
            }
        }
    }
    Ok(())
}

/// Rank-1 update `A := alpha*x*yᵀ + A`.
#[allow(clippy::too_many_arguments)]
pub fn dger(
    m: i64,
    n: i64,
    alpha: f64,
    x: &[f64],
    incx: i64,
    y: &[f64],
    incy: i64,
    a: &mut [f64],
    lda: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DGER" };
    let m = ck.dim(1, m)?;
    let n = ck.dim(2, n)?;
    let incx = ck.inc(5, incx)?;
    let incy = ck.inc(7, incy)?;
    let lda = ck.ld(9, lda, m)?;
    let x = ck.vector(4, x, m, incx)?;
    let y = ck.vector(6, y, n, incy)?;
    let mut a = ck.matrix_mut(8, a, m, n, lda)?;
    if m == 0 || n == 0 || alpha == 0.0 {
        return Ok(());
    }
    for j in 0..n {
        let yj = y.get(j);
        if yj != 0.0 {
            let temp = alpha * yj;
            for i in 0..m {
                a.set(i, j, a.get(i, j) + x.get(i) * temp);
            }
        }
    }
    Ok(())
}

/// `y := alpha*A*x + beta*y` with `A` symmetric, stored in the `uplo` triangle.
#[allow(clippy::too_many_arguments)]
pub fn dsymv(
    uplo: Triangle,
    n: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    x: &[f64],
    incx: i64,
    beta: f64,
    y: &mut [f64],
    incy: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYMV" };
    let n = ck.dim(2, n)?;
    let lda = ck.ld(5, lda, n)?;
    let incx = ck.inc(7, incx)?;
    let incy = ck.inc(10, incy)?;
    let a = ck.matrix(4, a, n, n, lda)?;
    let x = ck.vector(6, x, n, incx)?;
    let mut y = ck.vector_mut(9, y, n, incy)?;
    if n == 0 || (alpha == 0.0 && beta == 1.0) {
        return Ok(());
    }
    scale_vector(&mut y, n, beta);
    if alpha == 0.0 {
        return Ok(());
    }
    match uplo {
        Triangle::Upper => {
            for j in 0..n {
                let temp1 = alpha * x.get(j);
                let mut temp2 = 0.0;
                for i in 0..j {
                    y.set(i, y.get(i) + temp1 * a.get(i, j));
                    temp2 += a.get(i, j) * x.get(i);
                }
                y.set(j, y.get(j) + temp1 * a.get(j, j) + alpha * temp2);
            }
        }
        Triangle::Lower => {
            for j in 0..n {
                let temp1 = alpha * x.get(j);
                let mut temp2 = 0.0;
                y.set(j, y.get(j) + temp1 * a.get(j, j));
                for i in j + 1..n {
                    y.set(i, y.get(i) + temp1 * a.get(i, j));
                    temp2 += a.get(i, j) * x.get(i);
                }
                y.set(j, y.get(j) + alpha * temp2);
            }
        }
    }
    Ok(())
}

/// Symmetric rank-1 update of the `uplo` triangle: `A := alpha*x*xᵀ + A`.
pub fn dsyr(
    uplo: Triangle,
    n: i64,
    alpha: f64,
    x: &[f64],
    incx: i64,
    a: &mut [f64],
    lda: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYR" };
    let n = ck.dim(2, n)?;
    let incx = ck.inc(5, incx)?;
    let lda = ck.ld(7, lda, n)?;
    let x = ck.vector(4, x, n, incx)?;
    let mut a = ck.matrix_mut(6, a, n, n, lda)?;
    if n == 0 || alpha == 0.0 {
        return Ok(());
    }
    for j in 0..n {
        let xj = x.get(j);
        if xj != 0.0 {
            let temp = alpha * xj;
            let rows = match uplo {
                Triangle::Upper => 0..j + 1,
                Triangle::Lower => j..n,
            };
            for i in rows {
                a.set(i, j, a.get(i, j) + x.get(i) * temp);
            }
        }
    }
    Ok(())
}

/// Symmetric rank-2 update of the `uplo` triangle: `A := alpha*x*yᵀ + alpha*y*xᵀ + A`.
#[allow(clippy::too_many_arguments)]
pub fn dsyr2(
    uplo: Triangle,
    n: i64,
    alpha: f64,
    x: &[f64],
    incx: i64,
    y: &[f64],
    incy: i64,
    a: &mut [f64],
    lda: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYR2" };
    let n = ck.dim(2, n)?;
    let incx = ck.inc(5, incx)?;
    let incy = ck.inc(7, incy)?;
    let lda = ck.ld(9, lda, n)?;
    let x = ck.vector(4, x, n, incx)?;
    let y = ck.vector(6, y, n, incy)?;
    let mut a = ck.matrix_mut(8, a, n, n, lda)?;
    if n == 0 || alpha == 0.0 {
        return Ok(());
    }
    for j in 0..n {
        let (xj, yj) = (x.get(j), y.get(j));
        if xj != 0.0 || yj != 0.0 {
            let temp1 = alpha * yj;
            let temp2 = alpha * xj;
            let rows = match uplo {
                Triangle::Upper => 0..j + 1,
                Triangle::Lower => j..n,
            };
            for i in rows {
                a.set(i, j, a.get(i, j) + x.get(i) * temp1 + y.get(i) * temp2);
            }
        }
    }
    Ok(())
}

/// Triangular multiply `x := op(A)*x`.
#[allow(clippy::too_many_arguments)]
pub fn dtrmv(
    uplo: Triangle,
    trans: Transpose,
    diag: DiagKind,
    n: i64,
    a: &[f64],
    lda: i64,
    x: &mut [f64],
    incx: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DTRMV" };
    let n = ck.dim(4, n)?;
    let lda = ck.ld(6, lda, n)?;
    let incx = ck.inc(8, incx)?;
    let a = ck.matrix(5, a, n, n, lda)?;
    let mut x = ck.vector_mut(7, x, n, incx)?;
    if n == 0 {
        return Ok(());
    }
    let nounit = diag == DiagKind::NonUnit;
    match (trans, uplo) {
        (Transpose::NoTrans, Triangle::Upper) => {
            for j in 0..n {
                let temp = x.get(j);
                if temp != 0.0 {
                    for i in 0..j {
                        x.set(i, x.get(i) + temp * a.get(i, j));
                    }
                    if nounit {
                        x.set(j, x.get(j) * a.get(j, j));
                    }
                }
            }
        }
        (Transpose::NoTrans, Triangle::Lower) => {
            for j in (0..n).rev() {
                let temp = x.get(j);
                if temp != 0.0 {
                    for i in (j + 1..n).rev() {
                        x.set(i, x.get(i) + temp * a.get(i, j));
                    }
                    if nounit {
                        x.set(j, x.get(j) * a.get(j, j));
                    }
                }
            }
        }
        (Transpose::Trans, Triangle::Upper) => {
            for j in (0..n).rev() {
                let mut temp = x.get(j);
                if nounit {
                    temp *= a.get(j, j);
                }
                for i in (0..j).rev() {
                    temp += a.get(i, j) * x.get(i);
                }
                x.set(j, temp);
            }
        }
        (Transpose::Trans, Triangle::Lower) => {
            for j in 0..n {
                let mut temp = x.get(j);
                if nounit {
                    temp *= a.get(j, j);
                }
                for i in j + 1..n {
                    temp += a.get(i, j) * x.get(i);
                }
                x.set(j, temp);
            }
        }
    }
    Ok(())
}

/// Triangular solve `op(A)*x_new = x`.
#[allow(clippy::too_many_arguments)]
pub fn dtrsv(
    uplo: Triangle,
    trans: Transpose,
    diag: DiagKind,
    n: i64,
    a: &[f64],
    lda: i64,
    x: &mut [f64],
    incx: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DTRSV" };
    let n = ck.dim(4, n)?;
    let lda = ck.ld(6, lda, n)?;
    let incx = ck.inc(8, incx)?;
    let a = ck.matrix(5, a, n, n, lda)?;
    let mut x = ck.vector_mut(7, x, n, incx)?;
    if n == 0 {
        return Ok(());
    }
    let nounit = diag == DiagKind::NonUnit;
    match (trans, uplo) {
        (Transpose::NoTrans, Triangle::Upper) => {
            for j in (0..n).rev() {
                if x.get(j) != 0.0 {
                    if nounit {
                        x.set(j, x.get(j) / a.get(j, j));
                    }
                    let temp = x.get(j);
                    for i in (0..j).rev() {
                        x.set(i, x.get(i) - temp * a.get(i, j));
                    }
                }
            }
        }
        (Transpose::NoTrans, Triangle::Lower) => {
            for j in 0..n {
                if x.get(j) != 0.0 {
                    if nounit {
                        x.set(j, x.get(j) / a.get(j, j));
                    }
                    let temp = x.get(j);
                    for i in j + 1..n {
                        x.set(i, x.get(i) - temp * a.get(i, j));
                    }
                }
            }
        }
        (Transpose::Trans, Triangle::Upper) => {
            for j in 0..n {
                let mut temp = x.get(j);
                for i in 0..j {
                    temp -= a.get(i, j) * x.get(i);
                }
                if nounit {
                    temp /= a.get(j, j);
                }
                x.set(j, temp);
            }
        }
        (Transpose::Trans, Triangle::Lower) => {
            for j in (0..n).rev() {
                let mut temp = x.get(j);
                for i in (j + 1..n).rev() {
                    temp -= a.get(i, j) * x.get(i);
                }
                if nounit {
                    temp /= a.get(j, j);
                }
                x.set(j, temp);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i + i * n] = 1.0;
        }
        a
    }

    #[test]
    fn dgemv_identity() {
        let mut y = [9.0; 3];
        dgemv(Transpose::NoTrans, 3, 3, 1.0, &eye(3), 3, &[1.0, 2.0, 3.0], 1, 0.0, &mut y, 1)
            .unwrap();
        assert_eq!(y, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn dgemv_alpha_zero_scales_y() {
        let mut y = [1.0, 1.0];
        let a = [f64::NAN; 4];
        dgemv(Transpose::NoTrans, 2, 2, 0.0, &a, 2, &[f64::NAN; 2], 1, 2.0, &mut y, 1).unwrap();
        assert_eq!(y, [2.0, 2.0]);
    }

    #[test]
    fn dgemv_beta_zero_does_not_read_y() {
        let mut y = [f64::NAN, f64::INFINITY];
        dgemv(Transpose::Trans, 2, 2, 1.0, &eye(2), 2, &[4.0, 5.0], 1, 0.0, &mut y, 1).unwrap();
        assert_eq!(y, [4.0, 5.0]);
    }

    #[test]
    fn dger_unit_vectors() {
        let mut a = [0.0; 4];
        dger(2, 2, 1.0, &[1.0, 0.0], 1, &[0.0, 1.0], 1, &mut a, 2).unwrap();
        // (1,2) in 1-based column-major is offset 0 + 1*2
        assert_eq!(a, [0.0, 0.0, 1.0, 0.0]);
        let before = a;
        dger(2, 2, 0.0, &[5.0, 5.0], 1, &[5.0, 5.0], 1, &mut a, 2).unwrap();
        assert_eq!(a, before);
    }

    #[test]
    fn dsymv_identity() {
        let mut y = [0.0; 3];
        dsymv(Triangle::Lower, 3, 1.0, &eye(3), 3, &[1.0, 2.0, 3.0], 1, 0.0, &mut y, 1).unwrap();
        assert_eq!(y, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn dsyr_touches_only_a11() {
        let mut a = [0.0; 9];
        dsyr(Triangle::Upper, 3, 1.0, &[1.0, 0.0, 0.0], 1, &mut a, 3).unwrap();
        let mut expect = [0.0; 9];
        expect[0] = 1.0;
        assert_eq!(a, expect);
    }

    #[test]
    fn dsyr2_doubles_a11() {
        let mut a = [0.0; 4];
        dsyr2(Triangle::Lower, 2, 1.0, &[1.0, 0.0], 1, &[1.0, 0.0], 1, &mut a, 2).unwrap();
        assert_eq!(a, [2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dtrmv_and_dtrsv_identity() {
        let mut x = [1.0, -2.0, 3.0];
        dtrmv(Triangle::Upper, Transpose::NoTrans, DiagKind::NonUnit, 3, &eye(3), 3, &mut x, 1)
            .unwrap();
        assert_eq!(x, [1.0, -2.0, 3.0]);
        dtrsv(Triangle::Lower, Transpose::Trans, DiagKind::NonUnit, 3, &eye(3), 3, &mut x, 1)
            .unwrap();
        assert_eq!(x, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn argument_positions_match_reference() {
        let mut y = [0.0; 4];
        let a = [0.0; 16];
        let x = [0.0; 4];
        let e = |r: Result<(), ArgError>| r.unwrap_err().position();
        assert_eq!(e(dgemv(Transpose::NoTrans, -1, 2, 1.0, &a, 4, &x, 1, 0.0, &mut y, 1)), 2);
        assert_eq!(e(dgemv(Transpose::NoTrans, 2, -1, 1.0, &a, 4, &x, 1, 0.0, &mut y, 1)), 3);
        assert_eq!(e(dgemv(Transpose::NoTrans, 4, 2, 1.0, &a, 3, &x, 1, 0.0, &mut y, 1)), 6);
        assert_eq!(e(dgemv(Transpose::NoTrans, 2, 2, 1.0, &a, 2, &x, 0, 0.0, &mut y, 1)), 8);
        assert_eq!(e(dgemv(Transpose::NoTrans, 2, 2, 1.0, &a, 2, &x, 1, 0.0, &mut y, 0)), 11);
        let mut am = [0.0; 16];
        assert_eq!(e(dger(2, 2, 1.0, &x, 1, &x, 1, &mut am, 1)), 9);
        assert_eq!(e(dsyr(Triangle::Upper, -2, 1.0, &x, 1, &mut am, 1)), 2);
        let mut xm = [0.0; 4];
        assert_eq!(
            e(dtrsv(Triangle::Upper, Transpose::NoTrans, DiagKind::Unit, 2, &a, 1, &mut xm, 1)),
            6
        );
    }
}
