//! Matrix-matrix routines.

use super::{ArgError, Check, ColMajorMatrixMut, DiagKind, Side, Transpose, Triangle};

/// `C(rows, j) := beta*C(rows, j)`; `beta = 0` assigns without reading.
fn scale_column(c: &mut ColMajorMatrixMut<'_>, j: usize, rows: std::ops::Range<usize>, beta: f64) {
    if beta == 0.0 {
        for i in rows {
            c.set(i, j, 0.0);
        }
    } else if beta != 1.0 {
        for i in rows {
            c.set(i, j, beta * c.get(i, j));
        }
    }
}

fn triangle_rows(uplo: Triangle, j: usize, n: usize) -> std::ops::Range<usize> {
    match uplo {
        Triangle::Upper => 0..j + 1,
        Triangle::Lower => j..n,
    }
}

/// `C := alpha*op(A)*op(B) + beta*C`.
#[allow(clippy::too_many_arguments)]
pub fn dgemm(
    transa: Transpose,
    transb: Transpose,
    m: i64,
    n: i64,
    k: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    b: &[f64],
    ldb: i64,
    beta: f64,
    c: &mut [f64],
    ldc: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DGEMM" };
    let m = ck.dim(3, m)?;
    let n = ck.dim(4, n)?;
    let k = ck.dim(5, k)?;
    let (nrowa, ncola) = match transa {
        Transpose::NoTrans => (m, k),
        Transpose::Trans => (k, m),
    };
    let (nrowb, ncolb) = match transb {
        Transpose::NoTrans => (k, n),
        Transpose::Trans => (n, k),
    };
    let lda = ck.ld(8, lda, nrowa)?;
    let ldb = ck.ld(10, ldb, nrowb)?;
    let ldc = ck.ld(13, ldc, m)?;
    let a = ck.matrix(7, a, nrowa, ncola, lda)?;
    let b = ck.matrix(9, b, nrowb, ncolb, ldb)?;
    let mut c = ck.matrix_mut(12, c, m, n, ldc)?;

    if m == 0 || n == 0 || ((alpha == 0.0 || k == 0) && beta == 1.0) {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut c, j, 0..m, beta);
        }
        return Ok(());
    }
    match (transa, transb) {
        (Transpose::NoTrans, _) => {
            for j in 0..n {
                scale_column(&mut c, j, 0..m, beta);
                for l in 0..k {
                    let blj = match transb {
                        Transpose::NoTrans => b.get(l, j),
                        Transpose::Trans => b.get(j, l),
                    };
                    let temp = alpha * blj;
                    for i in 0..m {
                        c.set(i, j, c.get(i, j) + temp * a.get(i, l));
                    }
                }
            }
        }
        (Transpose::Trans, _) => {
            for j in 0..n {
                for i in 0..m {
                    let mut temp = 0.0;
                    for l in 0..k {
                        let blj = match transb {
                            Transpose::NoTrans => b.get(l, j),
                            Transpose::Trans => b.get(j, l),
                        };
                        temp += a.get(l, i) * blj;
                    }
                    let v = if beta == 0.0 {
                        alpha * temp
                    } else {
                        alpha * temp + beta * c.get(i, j)
                    };
                    c.set(i, j, v);
                }
            }
        }
    }
    Ok(())
}

/// `C := alpha*A*B + beta*C` (side = L) or `C := alpha*B*A + beta*C`
/// (side = R) with `A` symmetric, stored in the `uplo` triangle.
#[allow(clippy::too_many_arguments)]
pub fn dsymm(
    side: Side,
    uplo: Triangle,
    m: i64,
    n: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    b: &[f64],
    ldb: i64,
    beta: f64,
    c: &mut [f64],
    ldc: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYMM" };
    let m = ck.dim(3, m)?;
    let n = ck.dim(4, n)?;
    let ka = match side {
        Side::Left => m,
        Side::Right => n,
    };
    let lda = ck.ld(7, lda, ka)?;
    let ldb = ck.ld(9, ldb, m)?;
    let ldc = ck.ld(12, ldc, m)?;
    let a = ck.matrix(6, a, ka, ka, lda)?;
    let b = ck.matrix(8, b, m, n, ldb)?;
    let mut c = ck.matrix_mut(11, c, m, n, ldc)?;

    if m == 0 || n == 0 || (alpha == 0.0 && beta == 1.0) {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut c, j, 0..m, beta);
        }
        return Ok(());
    }
    let with_beta = |c: &ColMajorMatrixMut<'_>, i: usize, j: usize, v: f64| {
        if beta == 0.0 {
            v
        } else {
            beta * c.get(i, j) + v
        }
    };
    match (side, uplo) {
        (Side::Left, Triangle::Upper) => {
            for j in 0..n {
                for i in 0..m {
                    let temp1 = alpha * b.get(i, j);
                    let mut temp2 = 0.0;
                    for kk in 0..i {
                        c.set(kk, j, c.get(kk, j) + temp1 * a.get(kk, i));
                        temp2 += b.get(kk, j) * a.get(kk, i);
                    }
                    let v = if beta == 0.0 {
                        temp1 * a.get(i, i) + alpha * temp2
                    } else {
                        beta * c.get(i, j) + temp1 * a.get(i, i) + alpha * temp2
                    };
                    c.set(i, j, v);
                }
            }
        }
        (Side::Left, Triangle::Lower) => {
            for j in 0..n {
                for i in (0..m).rev() {
                    let temp1 = alpha * b.get(i, j);
                    let mut temp2 = 0.0;
                    for kk in i + 1..m {
                        c.set(kk, j, c.get(kk, j) + temp1 * a.get(kk, i));
                        temp2 += b.get(kk, j) * a.get(kk, i);
                    }
                    let v = if beta == 0.0 {
                        temp1 * a.get(i, i) + alpha * temp2
                    } else {
                        beta * c.get(i, j) + temp1 * a.get(i, i) + alpha * temp2
                    };
                    c.set(i, j, v);
                }
            }
        }
        (Side::Right, _) => {
            let sym = |p: usize, q: usize| match uplo {
                // element (p, q) of the symmetric A read from the stored triangle
                Triangle::Upper if p <= q => a.get(p, q),
                Triangle::Upper => a.get(q, p),
                Triangle::Lower if p >= q => a.get(p, q),
                Triangle::Lower => a.get(q, p),
            };
            for j in 0..n {
                let temp1 = alpha * a.get(j, j);
                for i in 0..m {
                    let v = with_beta(&c, i, j, temp1 * b.get(i, j));
                    c.set(i, j, v);
                }
                for kk in (0..j).chain(j + 1..n) {
                    let temp1 = alpha * sym(kk, j);
                    for i in 0..m {
                        c.set(i, j, c.get(i, j) + temp1 * b.get(i, kk));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Symmetric rank-k update of the `uplo` triangle of `C`:
/// `C := alpha*A*Aᵀ + beta*C` (trans = N) or `C := alpha*Aᵀ*A + beta*C`.
#[allow(clippy::too_many_arguments)]
pub fn dsyrk(
    uplo: Triangle,
    trans: Transpose,
    n: i64,
    k: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    beta: f64,
    c: &mut [f64],
    ldc: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYRK" };
    let n = ck.dim(3, n)?;
    let k = ck.dim(4, k)?;
    let (nrowa, ncola) = match trans {
        Transpose::NoTrans => (n, k),
        Transpose::Trans => (k, n),
    };
    let lda = ck.ld(7, lda, nrowa)?;
    let ldc = ck.ld(10, ldc, n)?;
    let a = ck.matrix(6, a, nrowa, ncola, lda)?;
    let mut c = ck.matrix_mut(9, c, n, n, ldc)?;

    if n == 0 || ((alpha == 0.0 || k == 0) && beta == 1.0) {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut c, j, triangle_rows(uplo, j, n), beta);
        }
        return Ok(());
    }
    match trans {
        Transpose::NoTrans => {
            for j in 0..n {
                scale_column(&mut c, j, triangle_rows(uplo, j, n), beta);
                for l in 0..k {
                    let ajl = a.get(j, l);
                    if ajl != 0.0 {
                        let temp = alpha * ajl;
                        for i in triangle_rows(uplo, j, n) {
                            c.set(i, j, c.get(i, j) + temp * a.get(i, l));
                        }
                    }
                }
            }
        }
        Transpose::Trans => {
            for j in 0..n {
                for i in triangle_rows(uplo, j, n) {
                    let mut temp = 0.0;
                    for l in 0..k {
                        temp += a.get(l, i) * a.get(l, j);
                    }
                    let v = if beta == 0.0 {
                        alpha * temp
                    } else {
                        alpha * temp + beta * c.get(i, j)
                    };
                    c.set(i, j, v);
                }
            }
        }
    }
    Ok(())
}

/// Symmetric rank-2k update of the `uplo` triangle of `C`:
/// `C := alpha*A*Bᵀ + alpha*B*Aᵀ + beta*C` (trans = N) or the transposed form.
#[allow(clippy::too_many_arguments)]
pub fn dsyr2k(
    uplo: Triangle,
    trans: Transpose,
    n: i64,
    k: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    b: &[f64],
    ldb: i64,
    beta: f64,
    c: &mut [f64],
    ldc: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DSYR2K" };
    let n = ck.dim(3, n)?;
    let k = ck.dim(4, k)?;
    let (nrow, ncol) = match trans {
        Transpose::NoTrans => (n, k),
        Transpose::Trans => (k, n),
    };
    let lda = ck.ld(7, lda, nrow)?;
    let ldb = ck.ld(9, ldb, nrow)?;
    let ldc = ck.ld(12, ldc, n)?;
    let a = ck.matrix(6, a, nrow, ncol, lda)?;
    let b = ck.matrix(8, b, nrow, ncol, ldb)?;
    let mut c = ck.matrix_mut(11, c, n, n, ldc)?;

    if n == 0 || ((alpha == 0.0 || k == 0) && beta == 1.0) {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut c, j, triangle_rows(uplo, j, n), beta);
        }
        return Ok(());
    }
    match trans {
        Transpose::NoTrans => {
            for j in 0..n {
                scale_column(&mut c, j, triangle_rows(uplo, j, n), beta);
                for l in 0..k {
                    let (ajl, bjl) = (a.get(j, l), b.get(j, l));
                    if ajl != 0.0 || bjl != 0.0 {
                        let temp1 = alpha * bjl;
                        let temp2 = alpha * ajl;
                        for i in triangle_rows(uplo, j, n) {
                            c.set(i, j, c.get(i, j) + a.get(i, l) * temp1 + b.get(i, l) * temp2);
                        }
                    }
                }
            }
        }
        Transpose::Trans => {
            for j in 0..n {
                for i in triangle_rows(uplo, j, n) {
                    let mut temp1 = 0.0;
                    let mut temp2 = 0.0;
                    for l in 0..k {
                        temp1 += a.get(l, i) * b.get(l, j);
                        temp2 += b.get(l, i) * a.get(l, j);
                    }
                    let v = if beta == 0.0 {
                        alpha * temp1 + alpha * temp2
                    } else {
                        beta * c.get(i, j) + alpha * temp1 + alpha * temp2
                    };
                    c.set(i, j, v);
                }
            }
        }
    }
    Ok(())
}

struct TriArgs {
    m: usize,
    n: usize,
    lda: usize,
    ldb: usize,
}

fn check_triangular(
    ck: &Check,
    side: Side,
    m: i64,
    n: i64,
    lda: i64,
    ldb: i64,
) -> Result<TriArgs, ArgError> {
    let m = ck.dim(5, m)?;
    let n = ck.dim(6, n)?;
    let nrowa = match side {
        Side::Left => m,
        Side::Right => n,
    };
    let lda = ck.ld(9, lda, nrowa)?;
    let ldb = ck.ld(11, ldb, m)?;
    Ok(TriArgs { m, n, lda, ldb })
}

/// Triangular multiply `B := alpha*op(A)*B` (side = L) or `B := alpha*B*op(A)`.
#[allow(clippy::too_many_arguments)]
pub fn dtrmm(
    side: Side,
    uplo: Triangle,
    transa: Transpose,
    diag: DiagKind,
    m: i64,
    n: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    b: &mut [f64],
    ldb: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DTRMM" };
    let TriArgs { m, n, lda, ldb } = check_triangular(&ck, side, m, n, lda, ldb)?;
    let ka = if side == Side::Left { m } else { n };
    let a = ck.matrix(8, a, ka, ka, lda)?;
    let mut b = ck.matrix_mut(10, b, m, n, ldb)?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut b, j, 0..m, 0.0);
        }
        return Ok(());
    }
    let nounit = diag == DiagKind::NonUnit;
    // B(:, dst) += temp * B(:, src)
    let axpy_col = |b: &mut ColMajorMatrixMut<'_>, dst: usize, src: usize, temp: f64| {
        for i in 0..m {
            b.set(i, dst, b.get(i, dst) + temp * b.get(i, src));
        }
    };
    let scale_col = |b: &mut ColMajorMatrixMut<'_>, j: usize, temp: f64| {
        for i in 0..m {
            b.set(i, j, temp * b.get(i, j));
        }
    };
    match (side, transa, uplo) {
        (Side::Left, Transpose::NoTrans, Triangle::Upper) => {
            for j in 0..n {
                for kk in 0..m {
                    if b.get(kk, j) != 0.0 {
                        let mut temp = alpha * b.get(kk, j);
                        for i in 0..kk {
                            b.set(i, j, b.get(i, j) + temp * a.get(i, kk));
                        }
                        if nounit {
                            temp *= a.get(kk, kk);
                        }
                        b.set(kk, j, temp);
                    }
                }
            }
        }
        (Side::Left, Transpose::NoTrans, Triangle::Lower) => {
            for j in 0..n {
                for kk in (0..m).rev() {
                    if b.get(kk, j) != 0.0 {
                        let temp = alpha * b.get(kk, j);
                        b.set(kk, j, temp);
                        if nounit {
                            b.set(kk, j, b.get(kk, j) * a.get(kk, kk));
                        }
                        for i in kk + 1..m {
                            b.set(i, j, b.get(i, j) + temp * a.get(i, kk));
                        }
                    }
                }
            }
        }
        (Side::Left, Transpose::Trans, Triangle::Upper) => {
            for j in 0..n {
                for i in (0..m).rev() {
                    let mut temp = b.get(i, j);
                    if nounit {
                        temp *= a.get(i, i);
                    }
                    for kk in 0..i {
                        temp += a.get(kk, i) * b.get(kk, j);
                    }
                    b.set(i, j, alpha * temp);
                }
            }
        }
        (Side::Left, Transpose::Trans, Triangle::Lower) => {
            for j in 0..n {
                for i in 0..m {
                    let mut temp = b.get(i, j);
                    if nounit {
                        temp *= a.get(i, i);
                    }
                    for kk in i + 1..m {
                        temp += a.get(kk, i) * b.get(kk, j);
                    }
                    b.set(i, j, alpha * temp);
                }
            }
        }
        (Side::Right, Transpose::NoTrans, Triangle::Upper) => {
            for j in (0..n).rev() {
                let mut temp = alpha;
                if nounit {
                    temp *= a.get(j, j);
                }
                scale_col(&mut b, j, temp);
                for kk in 0..j {
                    if a.get(kk, j) != 0.0 {
                        axpy_col(&mut b, j, kk, alpha * a.get(kk, j));
                    }
                }
            }
        }
        (Side::Right, Transpose::NoTrans, Triangle::Lower) => {
            for j in 0..n {
                let mut temp = alpha;
                if nounit {
                    temp *= a.get(j, j);
                }
                scale_col(&mut b, j, temp);
                for kk in j + 1..n {
                    if a.get(kk, j) != 0.0 {
                        axpy_col(&mut b, j, kk, alpha * a.get(kk, j));
                    }
                }
            }
        }
        (Side::Right, Transpose::Trans, Triangle::Upper) => {
            for kk in 0..n {
                for j in 0..kk {
                    if a.get(j, kk) != 0.0 {
                        axpy_col(&mut b, j, kk, alpha * a.get(j, kk));
                    }
                }
                let mut temp = alpha;
                if nounit {
                    temp *= a.get(kk, kk);
                }
                if temp != 1.0 {
                    scale_col(&mut b, kk, temp);
                }
            }
        }
        (Side::Right, Transpose::Trans, Triangle::Lower) => {
            for kk in (0..n).rev() {
                for j in kk + 1..n {
                    if a.get(j, kk) != 0.0 {
                        axpy_col(&mut b, j, kk, alpha * a.get(j, kk));
                    }
                }
                let mut temp = alpha;
                if nounit {
                    temp *= a.get(kk, kk);
                }
                if temp != 1.0 {
                    scale_col(&mut b, kk, temp);
                }
            }
        }
    }
    Ok(())
}

/// Triangular solve `op(A)*X = alpha*B` (side = L) or `X*op(A) = alpha*B`;
/// `X` overwrites `B`.
#[allow(clippy::too_many_arguments)]
pub fn dtrsm(
    side: Side,
    uplo: Triangle,
    transa: Transpose,
    diag: DiagKind,
    m: i64,
    n: i64,
    alpha: f64,
    a: &[f64],
    lda: i64,
    b: &mut [f64],
    ldb: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DTRSM" };
    let TriArgs { m, n, lda, ldb } = check_triangular(&ck, side, m, n, lda, ldb)?;
    let ka = if side == Side::Left { m } else { n };
    let a = ck.matrix(8, a, ka, ka, lda)?;
    let mut b = ck.matrix_mut(10, b, m, n, ldb)?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    if alpha == 0.0 {
        for j in 0..n {
            scale_column(&mut b, j, 0..m, 0.0);
        }
        return Ok(());
    }
    let nounit = diag == DiagKind::NonUnit;
    let scale_col = |b: &mut ColMajorMatrixMut<'_>, j: usize, temp: f64| {
        for i in 0..m {
            b.set(i, j, temp * b.get(i, j));
        }
    };
    // B(:, dst) -= temp * B(:, src)
    let sub_col = |b: &mut ColMajorMatrixMut<'_>, dst: usize, src: usize, temp: f64| {
        for i in 0..m {
            b.set(i, dst, b.get(i, dst) - temp * b.get(i, src));
        }
    };
    match (side, transa, uplo) {
        (Side::Left, Transpose::NoTrans, Triangle::Upper) => {
            for j in 0..n {
                if alpha != 1.0 {
                    scale_col(&mut b, j, alpha);
                }
                for kk in (0..m).rev() {
                    if b.get(kk, j) != 0.0 {
                        if nounit {
                            b.set(kk, j, b.get(kk, j) / a.get(kk, kk));
                        }
                        let bkj = b.get(kk, j);
                        for i in 0..kk {
                            b.set(i, j, b.get(i, j) - bkj * a.get(i, kk));
                        }
                    }
                }
            }
        }
        (Side::Left, Transpose::NoTrans, Triangle::Lower) => {
            for j in 0..n {
                if alpha != 1.0 {
                    scale_col(&mut b, j, alpha);
                }
                for kk in 0..m {
                    if b.get(kk, j) != 0.0 {
                        if nounit {
                            b.set(kk, j, b.get(kk, j) / a.get(kk, kk));
                        }
                        let bkj = b.get(kk, j);
                        for i in kk + 1..m {
                            b.set(i, j, b.get(i, j) - bkj * a.get(i, kk));
                        }
                    }
                }
            }
        }
        (Side::Left, Transpose::Trans, Triangle::Upper) => {
            for j in 0..n {
                for i in 0..m {
                    let mut temp = alpha * b.get(i, j);
                    for kk in 0..i {
                        temp -= a.get(kk, i) * b.get(kk, j);
                    }
                    if nounit {
                        temp /= a.get(i, i);
                    }
                    b.set(i, j, temp);
                }
            }
        }
        (Side::Left, Transpose::Trans, Triangle::Lower) => {
            for j in 0..n {
                for i in (0..m).rev() {
                    let mut temp = alpha * b.get(i, j);
                    for kk in i + 1..m {
                        temp -= a.get(kk, i) * b.get(kk, j);
                    }
                    if nounit {
                        temp /= a.get(i, i);
                    }
                    b.set(i, j, temp);
                }
            }
        }
        (Side::Right, Transpose::NoTrans, Triangle::Upper) => {
            for j in 0..n {
                if alpha != 1.0 {
                    scale_col(&mut b, j, alpha);
                }
                for kk in 0..j {
                    if a.get(kk, j) != 0.0 {
                        sub_col(&mut b, j, kk, a.get(kk, j));
                    }
                }
                if nounit {
                    scale_col(&mut b, j, 1.0 / a.get(j, j));
                }
            }
        }
        (Side::Right, Transpose::NoTrans, Triangle::Lower) => {
            for j in (0..n).rev() {
                if alpha != 1.0 {
                    scale_col(&mut b, j, alpha);
                }
                for kk in j + 1..n {
                    if a.get(kk, j) != 0.0 {
                        sub_col(&mut b, j, kk, a.get(kk, j));
                    }
                }
                if nounit {
                    scale_col(&mut b, j, 1.0 / a.get(j, j));
                }
            }
        }
        (Side::Right, Transpose::Trans, Triangle::Upper) => {
            for kk in (0..n).rev() {
                if nounit {
                    scale_col(&mut b, kk, 1.0 / a.get(kk, kk));
                }
                for j in 0..kk {
                    if a.get(j, kk) != 0.0 {
                        sub_col(&mut b, j, kk, a.get(j, kk));
                    }
                }
                if alpha != 1.0 {
                    scale_col(&mut b, kk, alpha);
                }
            }
        }
        (Side::Right, Transpose::Trans, Triangle::Lower) => {
            for kk in 0..n {
                if nounit {
                    scale_col(&mut b, kk, 1.0 / a.get(kk, kk));
                }
                for j in kk + 1..n {
                    if a.get(j, kk) != 0.0 {
                        sub_col(&mut b, j, kk, a.get(j, kk));
                    }
                }
                if alpha != 1.0 {
                    scale_col(&mut b, kk, alpha);
                }
            }
        }
    }
    Ok(())
}
