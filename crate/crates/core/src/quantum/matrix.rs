use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, RealField, SymmetricEigen};
use num_traits::{FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Real scalar type underlying every complex amplitude: `f32` or `f64`.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    <T as FromPrimitive>::from_f64(x).expect("f64 literal representable")
}

#[inline]
pub fn cplx<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    <T as ToPrimitive>::to_f64(&x).unwrap_or(f64::NAN)
}

/// A set of registers, stored as a bitmask over the universe indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct RegSet(pub u64);

impl RegSet {
    pub const EMPTY: RegSet = RegSet(0);

    pub fn all(n: usize) -> RegSet {
        if n >= 64 {
            RegSet(u64::MAX)
        } else {
            RegSet((1u64 << n) - 1)
        }
    }
    pub fn single(i: usize) -> RegSet {
        RegSet(1u64 << i)
    }
    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> RegSet {
        it.into_iter().fold(RegSet::EMPTY, |s, i| s.with(i))
    }
    pub fn with(self, i: usize) -> RegSet {
        RegSet(self.0 | (1u64 << i))
    }
    pub fn contains(self, i: usize) -> bool {
        self.0 & (1u64 << i) != 0
    }
    pub fn union(self, o: RegSet) -> RegSet {
        RegSet(self.0 | o.0)
    }
    pub fn intersect(self, o: RegSet) -> RegSet {
        RegSet(self.0 & o.0)
    }
    pub fn minus(self, o: RegSet) -> RegSet {
        RegSet(self.0 & !o.0)
    }
    pub fn complement(self, n: usize) -> RegSet {
        RegSet::all(n).minus(self)
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn is_subset(self, o: RegSet) -> bool {
        self.minus(o).is_empty()
    }
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for RegSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Bit of register `r` inside a basis index over `n` registers.
/// Register 0 is the most significant tensor factor.
#[inline]
fn bit(n: usize, r: usize) -> usize {
    n - 1 - r
}

/// Embeds `local`, acting on `regs` (in order), into the `n`-register space
/// as `local ⊗ I` with the identity on every other register.
pub fn embed<T: Scalar>(local: &CMat<T>, regs: &[usize], n: usize) -> CMat<T> {
    let k = regs.len();
    debug_assert_eq!(local.nrows(), 1 << k);
    let d = 1usize << n;
    let mask: usize = regs.iter().map(|&r| 1usize << bit(n, r)).sum();
    let sub = |idx: usize| -> usize {
        regs.iter()
            .enumerate()
            .fold(0usize, |acc, (p, &r)| acc | (((idx >> bit(n, r)) & 1) << (k - 1 - p)))
    };
    let mut out = CMat::<T>::zeros(d, d);
    for col in 0..d {
        let rest = col & !mask;
        let sc = sub(col);
        for sr in 0..(1usize << k) {
            let v = local[(sr, sc)];
            if v == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            let mut row = rest;
            for (p, &r) in regs.iter().enumerate() {
                if (sr >> (k - 1 - p)) & 1 == 1 {
                    row |= 1 << bit(n, r);
                }
            }
            out[(row, col)] = v;
        }
    }
    out
}

/// Traces out the registers in `out` from an operator over `n` registers.
/// The remaining registers keep their relative order.
pub fn partial_trace<T: Scalar>(m: &CMat<T>, n: usize, out: RegSet) -> CMat<T> {
    let out = out.intersect(RegSet::all(n));
    if out.is_empty() {
        return m.clone();
    }
    let keep: Vec<usize> = (0..n).filter(|&r| !out.contains(r)).collect();
    let gone: Vec<usize> = out.iter().collect();
    let dk = 1usize << keep.len();
    let dg = 1usize << gone.len();
    let compose = |ki: usize, gi: usize| -> usize {
        let mut idx = 0usize;
        for (p, &r) in keep.iter().enumerate() {
            if (ki >> (keep.len() - 1 - p)) & 1 == 1 {
                idx |= 1 << bit(n, r);
            }
        }
        for (p, &r) in gone.iter().enumerate() {
            if (gi >> (gone.len() - 1 - p)) & 1 == 1 {
                idx |= 1 << bit(n, r);
            }
        }
        idx
    };
    let mut res = CMat::<T>::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = Complex::new(T::zero(), T::zero());
            for g in 0..dg {
                acc += m[(compose(i, g), compose(j, g))];
            }
            res[(i, j)] = acc;
        }
    }
    res
}

pub fn kron<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

pub fn trace<T: Scalar>(m: &CMat<T>) -> Complex<T> {
    m.trace()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> T {
    if a.shape() != b.shape() {
        return T::max_value().unwrap_or_else(|| real(f64::MAX));
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| cabs(*x - *y))
        .fold(T::zero(), |m, v| if v > m { v } else { m })
}

fn hermitian_part<T: Scalar>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * Complex::new(real::<T>(0.5), T::zero())
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(m: &CMat<T>) -> Vec<T> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut v: Vec<T> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

pub fn min_eigenvalue<T: Scalar>(m: &CMat<T>) -> T {
    hermitian_eigenvalues(m).first().copied().unwrap_or_else(T::zero)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm<T: Scalar>(m: &CMat<T>) -> T {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(T::zero(), |acc, l| acc + l.abs())
}

/// Hermitian eigendecomposition as `(eigenvalue, eigenvector)` pairs.
pub fn hermitian_eigen<T: Scalar>(m: &CMat<T>) -> Vec<(T, CVec<T>)> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    (0..eig.eigenvalues.len())
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect()
}

pub fn outer<T: Scalar>(a: &CVec<T>, b: &CVec<T>) -> CMat<T> {
    a * b.adjoint()
}

/// Computational basis vector `|idx⟩` of dimension `d`.
pub fn basis<T: Scalar>(d: usize, idx: usize) -> CVec<T> {
    let mut v = CVec::<T>::zeros(d);
    v[idx] = Complex::new(T::one(), T::zero());
    v
}

/// Row-major `[re, im]` dump used by the JSON debug output.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

pub fn dump<T: Scalar>(m: &CMat<T>) -> MatrixDump {
    let mut entries = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            entries.push([to_f64(z.re), to_f64(z.im)]);
        }
    }
    MatrixDump { rows: m.nrows(), cols: m.ncols(), entries }
}

/// A normalised density operator over the first `n` registers of a universe.
#[derive(Clone, Debug)]
pub struct DensityMatrixT<T: Scalar> {
    n: usize,
    m: CMat<T>,
}

impl<T: Scalar> DensityMatrixT<T> {
    /// Validates Hermiticity, positivity and unit trace within `tol`.
    pub fn new(n: usize, m: CMat<T>, tol: T) -> Result<Self, String> {
        let d = 1usize << n;
        if m.shape() != (d, d) {
            return Err(format!("expected {d}x{d} matrix, got {:?}", m.shape()));
        }
        if max_abs_diff(&m, &m.adjoint()) > tol {
            return Err("matrix is not Hermitian".into());
        }
        if min_eigenvalue(&m) < -tol {
            return Err("matrix is not positive semidefinite".into());
        }
        if (m.trace().re - T::one()).abs() > tol || m.trace().im.abs() > tol {
            return Err("trace differs from one".into());
        }
        Ok(DensityMatrixT { n, m })
    }

    /// Wraps a matrix that is a density operator by construction.
    pub fn from_matrix_unchecked(n: usize, m: CMat<T>) -> Self {
        DensityMatrixT { n, m }
    }

    pub fn pure(n: usize, psi: &CVec<T>) -> Self {
        let norm = psi.norm();
        let v = psi.map(|z| z / Complex::new(norm, T::zero()));
        DensityMatrixT { n, m: outer(&v, &v) }
    }

    pub fn basis_state(n: usize, idx: usize) -> Self {
        Self::pure(n, &basis(1 << n, idx))
    }

    pub fn registers(&self) -> usize {
        self.n
    }
    pub fn matrix(&self) -> &CMat<T> {
        &self.m
    }
    pub fn into_matrix(self) -> CMat<T> {
        self.m
    }
    pub fn reduced(&self, out: RegSet) -> CMat<T> {
        partial_trace(&self.m, self.n, out)
    }
}
