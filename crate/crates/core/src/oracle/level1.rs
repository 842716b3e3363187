//! Vector-vector routines.

use super::{ArgError, Check, RotParams, RotmParams};

/// Sum of magnitudes `|x_1| + ... + |x_n|`.
pub fn dasum(n: i64, x: &[f64], incx: i64) -> Result<f64, ArgError> {
    let ck = Check { routine: "DASUM" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(3, incx)?;
    let x = ck.vector(2, x, n, incx)?;
    let mut sum = 0.0;
    for i in 0..n {
        sum += x.get(i).abs();
    }
    Ok(sum)
}

/// `y := alpha*x + y`.
pub fn daxpy(
    n: i64,
    alpha: f64,
    x: &[f64],
    incx: i64,
    y: &mut [f64],
    incy: i64,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DAXPY" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(4, incx)?;
    let incy = ck.inc(6, incy)?;
    let x = ck.vector(3, x, n, incx)?;
    let mut y = ck.vector_mut(5, y, n, incy)?;
    if alpha == 0.0 {
        return Ok(());
    }
    for i in 0..n {
        y.set(i, y.get(i) + alpha * x.get(i));
    }
    Ok(())
}

/// Dot product `xᵀy`.
pub fn ddot(n: i64, x: &[f64], incx: i64, y: &[f64], incy: i64) -> Result<f64, ArgError> {
    let ck = Check { routine: "DDOT" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(3, incx)?;
    let incy = ck.inc(5, incy)?;
    let x = ck.vector(2, x, n, incx)?;
    let y = ck.vector(4, y, n, incy)?;
    let mut acc = 0.0;
    for i in 0..n {
        acc += x.get(i) * y.get(i);
    }
    Ok(acc)
}

/// 1-based index of the first element of maximal magnitude; 0 when `n < 1`.
///
/// NaN magnitudes never compare greater, so a NaN is only reported when it
/// sits in the first position.
pub fn idamax(n: i64, x: &[f64], incx: i64) -> Result<i64, ArgError> {
    let ck = Check { routine: "IDAMAX" };
    if n < 1 {
        return Ok(0);
    }
    let n = n as usize;
    let incx = ck.inc(3, incx)?;
    let x = ck.vector(2, x, n, incx)?;
    let mut best = 0;
    let mut max = x.get(0).abs();
    for i in 1..n {
        let v = x.get(i).abs();
        if v > max {
            best = i;
            max = v;
        }
    }
    Ok(best as i64 + 1)
}

/// Euclidean norm, accumulated as `scale² · ssq` so that neither overflow
/// nor destructive underflow occurs for representable results.
pub fn dnrm2(n: i64, x: &[f64], incx: i64) -> Result<f64, ArgError> {
    let ck = Check { routine: "DNRM2" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(3, incx)?;
    let x = ck.vector(2, x, n, incx)?;
    if n == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(x.get(0).abs());
    }
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for i in 0..n {
        let v = x.get(i);
        if v != 0.0 {
            let a = v.abs();
            if scale < a {
                let r = scale / a;
                ssq = 1.0 + ssq * r * r;
                scale = a;
            } else {
                let r = a / scale;
                ssq += r * r;
            }
        }
    }
    Ok(scale * ssq.sqrt())
}

/// Plane rotation: `x_i := c x_i + s y_i`, `y_i := c y_i − s x_i`.
pub fn drot(
    n: i64,
    x: &mut [f64],
    incx: i64,
    y: &mut [f64],
    incy: i64,
    rot: RotParams,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DROT" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(3, incx)?;
    let incy = ck.inc(5, incy)?;
    let mut x = ck.vector_mut(2, x, n, incx)?;
    let mut y = ck.vector_mut(4, y, n, incy)?;
    let RotParams { c, s } = rot;
    for i in 0..n {
        let xi = x.get(i);
        let yi = y.get(i);
        x.set(i, c * xi + s * yi);
        y.set(i, c * yi - s * xi);
    }
    Ok(())
}

/// Modified Givens rotation `[x_i; y_i] := H [x_i; y_i]`.
pub fn drotm(
    n: i64,
    x: &mut [f64],
    incx: i64,
    y: &mut [f64],
    incy: i64,
    param: &RotmParams,
) -> Result<(), ArgError> {
    let ck = Check { routine: "DROTM" };
    let n = ck.dim(1, n)?;
    let incx = ck.inc(3, incx)?;
    let incy = ck.inc(5, incy)?;
    let mut x = ck.vector_mut(2, x, n, incx)?;
    let mut y = ck.vector_mut(4, y, n, incy)?;
    let flag = param.flag;
    if n == 0 || flag + 2.0 == 0.0 {
        return Ok(());
    }
    for i in 0..n {
        let w = x.get(i);
        let z = y.get(i);
        let (nx, ny) = if flag < 0.0 {
            (w * param.h11 + z * param.h12, w * param.h21 + z * param.h22)
        } else if flag == 0.0 {
            (w + z * param.h12, w * param.h21 + z)
        } else {
            (w * param.h11 + z, -w + param.h22 * z)
        };
        x.set(i, nx);
        y.set(i, ny);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dasum_examples() {
        assert_eq!(dasum(3, &[1.0, -2.0, 3.0], 1).unwrap(), 6.0);
        assert_eq!(dasum(2, &[1.0, 2.0, 3.0, 4.0], 2).unwrap(), 4.0);
        assert_eq!(dasum(0, &[], 1).unwrap(), 0.0);
    }

    #[test]
    fn daxpy_examples() {
        let mut y = [3.0, 4.0];
        daxpy(2, 2.0, &[1.0, 2.0], 1, &mut y, 1).unwrap();
        assert_eq!(y, [5.0, 8.0]);

        let mut y = [3.0, f64::NAN];
        daxpy(2, 0.0, &[f64::INFINITY, 2.0], 1, &mut y, 1).unwrap();
        assert_eq!(y[0], 3.0);
        assert!(y[1].is_nan());
    }

    #[test]
    fn ddot_examples() {
        assert_eq!(ddot(3, &[1.0, 2.0, 3.0], 1, &[1.0, 2.0, 3.0], 1).unwrap(), 14.0);
        assert_eq!(ddot(2, &[1.0, 0.0], 1, &[0.0, 1.0], 1).unwrap(), 0.0);
        assert_eq!(ddot(0, &[], 1, &[], 1).unwrap(), 0.0);
    }

    #[test]
    fn idamax_examples() {
        assert_eq!(idamax(3, &[2.0, -5.0, 5.0], 1).unwrap(), 2);
        assert_eq!(idamax(1, &[-7.0], 1).unwrap(), 1);
        // reference convention: n < 1 returns 0 without inspecting x
        assert_eq!(idamax(0, &[], 1).unwrap(), 0);
        assert_eq!(idamax(-3, &[], 0).unwrap(), 0);
    }

    #[test]
    fn idamax_ignores_nan_after_first() {
        assert_eq!(idamax(3, &[1.0, f64::NAN, 2.0], 1).unwrap(), 3);
    }

    #[test]
    fn dnrm2_examples() {
        assert_eq!(dnrm2(2, &[3.0, 4.0], 1).unwrap(), 5.0);
        assert_eq!(dnrm2(3, &[0.0; 3], 1).unwrap(), 0.0);
    }

    #[test]
    fn dnrm2_does_not_overflow() {
        let v = dnrm2(2, &[3e200, 4e200], 1).unwrap();
        // exact route: scale by a power of two, naive norm, scale back
        let k = 2f64.powi(-700);
        let exact = ((3e200 * k).powi(2) + (4e200 * k).powi(2)).sqrt() / k;
        assert!(v.is_finite());
        assert!((v - exact).abs() <= 4.0 * f64::EPSILON * exact, "{v} vs {exact}");
        assert!((v - 5e200).abs() <= 4.0 * f64::EPSILON * 5e200);
    }

    #[test]
    fn dnrm2_does_not_underflow() {
        let v = dnrm2(2, &[3e-200, 4e-200], 1).unwrap();
        assert!((v - 5e-200).abs() <= 4.0 * f64::EPSILON * 5e-200);
    }

    #[test]
    fn drot_examples() {
        let (mut x, mut y) = ([1.0, 2.0], [3.0, 4.0]);
        drot(2, &mut x, 1, &mut y, 1, RotParams { c: 1.0, s: 0.0 }).unwrap();
        assert_eq!((x, y), ([1.0, 2.0], [3.0, 4.0]));

        let (mut x, mut y) = ([1.0], [2.0]);
        drot(1, &mut x, 1, &mut y, 1, RotParams { c: 0.0, s: 1.0 }).unwrap();
        assert_eq!((x, y), ([2.0], [-1.0]));
    }

    #[test]
    fn drotm_examples() {
        let p = RotmParams { flag: -2.0, h11: 5.0, h21: 5.0, h12: 5.0, h22: 5.0 };
        let (mut x, mut y) = ([1.0, 2.0], [3.0, 4.0]);
        drotm(2, &mut x, 1, &mut y, 1, &p).unwrap();
        assert_eq!((x, y), ([1.0, 2.0], [3.0, 4.0]));

        let p = RotmParams { flag: -1.0, h11: 2.0, h21: 0.0, h12: 0.0, h22: 3.0 };
        let (mut x, mut y) = ([1.0], [1.0]);
        drotm(1, &mut x, 1, &mut y, 1, &p).unwrap();
        assert_eq!((x, y), ([2.0], [3.0]));
    }

    #[test]
    fn negative_increment_reverses() {
        // logical x = [3, 2, 1] when stored [1, 2, 3] with incx = -1
        let mut y = [0.0; 3];
        daxpy(3, 1.0, &[1.0, 2.0, 3.0], -1, &mut y, 1).unwrap();
        assert_eq!(y, [3.0, 2.0, 1.0]);
        assert_eq!(idamax(3, &[9.0, 2.0, 3.0], -1).unwrap(), 3);
    }

    #[test]
    fn argument_errors_carry_positions() {
        assert_eq!(dasum(-1, &[], 1).unwrap_err().position(), 1);
        assert_eq!(dasum(1, &[1.0], 0).unwrap_err().position(), 3);
        let mut y = [0.0];
        assert_eq!(daxpy(1, 1.0, &[1.0], 1, &mut y, 0).unwrap_err().position(), 6);
        assert_eq!(ddot(2, &[1.0], 1, &[1.0, 1.0], 1).unwrap_err().position(), 2);
    }
}
