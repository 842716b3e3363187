//! Second, independent evaluator used to cross-check the oracle.
//!
//! Every operand is materialised into a contiguous dense matrix (symmetric
//! and triangular operands are expanded explicitly), the operation is
//! computed with textbook formulas, and the result is scattered back into
//! a copy of the original storage. Nothing here shares code with
//! [`crate::oracle`] beyond the problem description.

use crate::oracle::{DiagKind, Side, Transpose, Triangle};
use crate::problem::{Outputs, Problem};
use crate::routine::{ArraySlot, Routine};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub v: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, v: vec![0.0; rows * cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.cols + j]
    }

    pub fn put(&mut self, i: usize, j: usize, x: f64) {
        self.v[i * self.cols + j] = x;
    }

    pub fn transpose(&self) -> Dense {
        let mut t = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.put(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn op(&self, trans: Transpose) -> Dense {
        match trans {
            Transpose::NoTrans => self.clone(),
            Transpose::Trans => self.transpose(),
        }
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        assert_eq!(self.cols, o.rows);
        let mut r = Dense::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut s = 0.0;
                for p in 0..self.cols {
                    s += self.at(i, p) * o.at(p, j);
                }
                r.put(i, j, s);
            }
        }
        r
    }

    fn column(v: &[f64]) -> Dense {
        Dense { rows: v.len(), cols: 1, v: v.to_vec() }
    }

    fn map2(&self, o: &Dense, f: impl Fn(f64, f64) -> f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            v: self.v.iter().zip(&o.v).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    fn scaled(&self, a: f64) -> Dense {
        Dense { rows: self.rows, cols: self.cols, v: self.v.iter().map(|x| a * x).collect() }
    }
}

fn idx(i: usize, n: usize, inc: i64) -> usize {
    let s = inc.unsigned_abs() as usize;
    if inc > 0 {
        i * s
    } else {
        (n - 1 - i) * s
    }
}

fn gather(data: &[f64], n: usize, inc: i64) -> Vec<f64> {
    (0..n).map(|i| data[idx(i, n, inc)]).collect()
}

fn scatter(data: &mut [f64], v: &[f64], inc: i64) {
    let n = v.len();
    for (i, x) in v.iter().enumerate() {
        data[idx(i, n, inc)] = *x;
    }
}

fn load(data: &[f64], rows: usize, cols: usize, ld: usize) -> Dense {
    let mut d = Dense::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            d.put(i, j, data[i + j * ld]);
        }
    }
    d
}

fn in_triangle(uplo: Triangle, i: usize, j: usize) -> bool {
    match uplo {
        Triangle::Upper => i <= j,
        Triangle::Lower => i >= j,
    }
}

/// Writes `d` into column-major storage, restricted to entries `keep` accepts.
fn store(data: &mut [f64], d: &Dense, ld: usize, keep: impl Fn(usize, usize) -> bool) {
    for j in 0..d.cols {
        for i in 0..d.rows {
            if keep(i, j) {
                data[i + j * ld] = d.at(i, j);
            }
        }
    }
}

/// Full symmetric matrix from the stored triangle.
pub fn symmetrize(a: &Dense, uplo: Triangle) -> Dense {
    let mut s = Dense::zeros(a.rows, a.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let v = if in_triangle(uplo, i, j) { a.at(i, j) } else { a.at(j, i) };
            s.put(i, j, v);
        }
    }
    s
}

/// Explicit triangular matrix: zeros outside the triangle, ones on the
/// diagonal for unit-diagonal matrices.
pub fn triangularize(a: &Dense, uplo: Triangle, diag: DiagKind) -> Dense {
    let mut t = Dense::zeros(a.rows, a.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let v = if i == j && diag == DiagKind::Unit {
                1.0
            } else if in_triangle(uplo, i, j) {
                a.at(i, j)
            } else {
                0.0
            };
            t.put(i, j, v);
        }
    }
    t
}

/// Solves `t · X = rhs` for a triangular (lower or upper, detected from
/// the zero pattern) square `t` by plain substitution.
pub fn solve_left(t: &Dense, rhs: &Dense) -> Dense {
    let n = t.rows;
    let upper = (0..n).all(|i| (0..i).all(|j| t.at(i, j) == 0.0));
    let mut x = rhs.clone();
    for c in 0..rhs.cols {
        let order: Vec<usize> = if upper { (0..n).rev().collect() } else { (0..n).collect() };
        for &i in &order {
            let mut s = rhs.at(i, c);
            for j in 0..n {
                if j != i && ((upper && j > i) || (!upper && j < i)) {
                    s -= t.at(i, j) * x.at(j, c);
                }
            }
            x.put(i, c, s / t.at(i, i));
        }
    }
    x
}

fn combine(alpha: f64, prod: &Dense, beta: f64, prior: &Dense) -> Dense {
    if beta == 0.0 {
        prod.scaled(alpha)
    } else {
        prod.map2(prior, |p, c| alpha * p + beta * c)
    }
}

/// Evaluates `p` with the dense formulas.
pub fn evaluate(p: &Problem) -> Outputs {
    let mut q = p.clone();
    let ret = run(&mut q);
    q.outputs(ret)
}

fn run(p: &mut Problem) -> Option<f64> {
    use Routine::*;
    let o = p.opts;
    let n = p.n.max(0) as usize;
    let (alpha, beta) = (p.alpha, p.beta);
    let mat = |p: &Problem, slot: ArraySlot| {
        let (r, c) = p.matrix_dims(slot);
        load(p.array(slot), r, c, p.ld(slot))
    };
    let vec_of = |p: &Problem, slot: ArraySlot| {
        let inc = if slot == ArraySlot::X { p.incx } else { p.incy };
        gather(p.array(slot), p.vector_len(slot), inc)
    };
    match p.routine {
        Dasum => Some(gather(&p.x, n, p.incx).iter().map(|v| v.abs()).sum()),
        Ddot => {
            let (x, y) = (gather(&p.x, n, p.incx), gather(&p.y, n, p.incy));
            Some(x.iter().zip(&y).map(|(a, b)| a * b).sum())
        }
        Idamax => {
            if n == 0 {
                return Some(0.0);
            }
            let x = gather(&p.x, n, p.incx);
            let mut best = 0;
            for (i, v) in x.iter().enumerate() {
                if v.abs() > x[best].abs() {
                    best = i;
                }
            }
            Some((best + 1) as f64)
        }
        Dnrm2 => Some(gather(&p.x, n, p.incx).iter().map(|v| v * v).sum::<f64>().sqrt()),
        Daxpy => {
            let x = gather(&p.x, n, p.incx);
            let y: Vec<f64> =
                gather(&p.y, n, p.incy).iter().zip(&x).map(|(y, x)| alpha * x + y).collect();
            if alpha != 0.0 {
                scatter(&mut p.y, &y, p.incy);
            }
            None
        }
        Drot | Drotm => {
            let h = if p.routine == Drot {
                [[p.rot_c, p.rot_s], [-p.rot_s, p.rot_c]]
            } else {
                let f = p.param[0];
                let [h11, h21, h12, h22] = [p.param[1], p.param[2], p.param[3], p.param[4]];
                match f {
                    f if f == -2.0 => return None,
                    f if f == 0.0 => [[1.0, h12], [h21, 1.0]],
                    f if f == 1.0 => [[h11, 1.0], [-1.0, h22]],
                    _ => [[h11, h12], [h21, h22]],
                }
            };
            let (x, y) = (gather(&p.x, n, p.incx), gather(&p.y, n, p.incy));
            let nx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| h[0][0] * a + h[0][1] * b).collect();
            let ny: Vec<f64> = x.iter().zip(&y).map(|(a, b)| h[1][0] * a + h[1][1] * b).collect();
            scatter(&mut p.x, &nx, p.incx);
            scatter(&mut p.y, &ny, p.incy);
            None
        }
        Dgemv => {
            let a = mat(p, ArraySlot::A).op(o.trans);
            let x = Dense::column(&vec_of(p, ArraySlot::X));
            let y = Dense::column(&vec_of(p, ArraySlot::Y));
            let r = combine(alpha, &a.mul(&x), beta, &y);
            if !(p.m <= 0 || n == 0 || (alpha == 0.0 && beta == 1.0)) {
                scatter(&mut p.y, &r.v, p.incy);
            }
            None
        }
        Dger => {
            let a = mat(p, ArraySlot::A);
            let x = Dense::column(&vec_of(p, ArraySlot::X));
            let y = Dense::column(&vec_of(p, ArraySlot::Y));
            let r = x.mul(&y.transpose()).map2(&a, |xy, a| alpha * xy + a);
            if alpha != 0.0 {
                let ld = p.ld(ArraySlot::A);
                store(&mut p.a, &r, ld, |_, _| true);
            }
            None
        }
        Dsymv => {
            let a = symmetrize(&mat(p, ArraySlot::A), o.uplo);
            let x = Dense::column(&vec_of(p, ArraySlot::X));
            let y = Dense::column(&vec_of(p, ArraySlot::Y));
            let r = combine(alpha, &a.mul(&x), beta, &y);
            if !(n == 0 || (alpha == 0.0 && beta == 1.0)) {
                scatter(&mut p.y, &r.v, p.incy);
            }
            None
        }
        Dsyr | Dsyr2 => {
            let a = mat(p, ArraySlot::A);
            let x = Dense::column(&vec_of(p, ArraySlot::X));
            let upd = if p.routine == Dsyr {
                x.mul(&x.transpose())
            } else {
                let y = Dense::column(&vec_of(p, ArraySlot::Y));
                x.mul(&y.transpose()).map2(&y.mul(&x.transpose()), |a, b| a + b)
            };
            let r = upd.map2(&a, |u, a| alpha * u + a);
            if alpha != 0.0 {
                let ld = p.ld(ArraySlot::A);
                store(&mut p.a, &r, ld, |i, j| in_triangle(o.uplo, i, j));
            }
            None
        }
        Dtrmv | Dtrsv => {
            let t = triangularize(&mat(p, ArraySlot::A), o.uplo, o.diag).op(o.trans);
            let x = Dense::column(&vec_of(p, ArraySlot::X));
            let r = if p.routine == Dtrmv { t.mul(&x) } else { solve_left(&t, &x) };
            scatter(&mut p.x, &r.v, p.incx);
            None
        }
        Dgemm => {
            let a = mat(p, ArraySlot::A).op(o.trans);
            let b = mat(p, ArraySlot::B).op(o.transb);
            let c = mat(p, ArraySlot::C);
            let r = combine(alpha, &a.mul(&b), beta, &c);
            let (m, k) = (p.m.max(0), p.k.max(0));
            if !(m == 0 || n == 0 || ((alpha == 0.0 || k == 0) && beta == 1.0)) {
                let ld = p.ld(ArraySlot::C);
                store(&mut p.c, &r, ld, |_, _| true);
            }
            None
        }
        Dsymm => {
            let a = symmetrize(&mat(p, ArraySlot::A), o.uplo);
            let b = mat(p, ArraySlot::B);
            let c = mat(p, ArraySlot::C);
            let prod = match o.side {
                Side::Left => a.mul(&b),
                Side::Right => b.mul(&a),
            };
            let r = combine(alpha, &prod, beta, &c);
            if !(p.m <= 0 || n == 0 || (alpha == 0.0 && beta == 1.0)) {
                let ld = p.ld(ArraySlot::C);
                store(&mut p.c, &r, ld, |_, _| true);
            }
            None
        }
        Dsyrk | Dsyr2k => {
            let a = mat(p, ArraySlot::A);
            let c = mat(p, ArraySlot::C);
            // normalise to the NoTrans shape n×k
            let a = if o.trans == Transpose::Trans { a.transpose() } else { a };
            let prod = if p.routine == Dsyrk {
                a.mul(&a.transpose())
            } else {
                let b = mat(p, ArraySlot::B);
                let b = if o.trans == Transpose::Trans { b.transpose() } else { b };
                a.mul(&b.transpose()).map2(&b.mul(&a.transpose()), |x, y| x + y)
            };
            let r = combine(alpha, &prod, beta, &c);
            let k = p.k.max(0);
            if !(n == 0 || ((alpha == 0.0 || k == 0) && beta == 1.0)) {
                let ld = p.ld(ArraySlot::C);
                store(&mut p.c, &r, ld, |i, j| in_triangle(o.uplo, i, j));
            }
            None
        }
        Dtrmm | Dtrsm => {
            let t = triangularize(&mat(p, ArraySlot::A), o.uplo, o.diag).op(o.trans);
            let b = mat(p, ArraySlot::B).scaled(alpha);
            let r = match (p.routine, o.side) {
                (Dtrmm, Side::Left) => t.mul(&b),
                (Dtrmm, Side::Right) => b.mul(&t),
                (_, Side::Left) => solve_left(&t, &b),
                // X·T = B  ⇔  Tᵀ·Xᵀ = Bᵀ
                (_, Side::Right) => solve_left(&t.transpose(), &b.transpose()).transpose(),
            };
            let r = if alpha == 0.0 { Dense::zeros(r.rows, r.cols) } else { r };
            if p.m > 0 && n > 0 {
                let ld = p.ld(ArraySlot::B);
                store(&mut p.b, &r, ld, |_, _| true);
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Options;

    #[test]
    fn gemv_trans_matches_explicit_transpose() {
        let mut o = Options::default();
        o.trans = Transpose::Trans;
        let mut p = Problem::zeroed(Routine::Dgemv, o, 2, 3, 0, 1, 1);
        p.a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        p.x = vec![1.0, 1.0];
        p.alpha = 1.0;
        let out = evaluate(&p);
        assert_eq!(out.array(ArraySlot::Y).unwrap(), &[3.0, 7.0, 11.0]);
    }

    #[test]
    fn triangular_solve_inverts_product() {
        let a = Dense { rows: 2, cols: 2, v: vec![2.0, 0.0, 1.0, 4.0] };
        let x = Dense::column(&[1.0, 2.0]);
        let b = a.mul(&x);
        assert_eq!(solve_left(&a, &b), x);
    }
}
