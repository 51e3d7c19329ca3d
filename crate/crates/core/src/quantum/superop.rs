use std::sync::OnceLock;

use nalgebra::Complex;

use super::matrix::*;

/// Kraus lists longer than this are re-extracted from the Choi matrix.
pub const DEFAULT_KRAUS_CAP: usize = 64;

/// A completely positive map on the full register universe, given in Kraus
/// form. The Choi matrix is the canonical identity of the map and is cached
/// on first use.
#[derive(Debug)]
pub struct SuperOpT<T: Scalar> {
    n: usize,
    kraus: Vec<CMat<T>>,
    support: RegSet,
    choi: OnceLock<CMat<T>>,
}

impl<T: Scalar> Clone for SuperOpT<T> {
    fn clone(&self) -> Self {
        let choi = OnceLock::new();
        if let Some(j) = self.choi.get() {
            let _ = choi.set(j.clone());
        }
        SuperOpT { n: self.n, kraus: self.kraus.clone(), support: self.support, choi }
    }
}

impl<T: Scalar> SuperOpT<T> {
    pub fn from_kraus(n: usize, kraus: Vec<CMat<T>>, support: RegSet) -> Self {
        let d = 1usize << n;
        debug_assert!(kraus.iter().all(|k| k.shape() == (d, d)));
        SuperOpT { n, kraus, support: support.intersect(RegSet::all(n)), choi: OnceLock::new() }
    }

    /// Lifts a map given by local Kraus operators on `regs` to the universe.
    pub fn local(n: usize, regs: &[usize], kraus: &[CMat<T>]) -> Self {
        let ks = kraus.iter().map(|k| embed(k, regs, n)).collect();
        Self::from_kraus(n, ks, RegSet::from_indices(regs.iter().copied()))
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        Self::from_kraus(n, vec![CMat::<T>::identity(d, d)], RegSet::EMPTY)
    }

    pub fn zero(n: usize) -> Self {
        Self::from_kraus(n, Vec::new(), RegSet::EMPTY)
    }

    pub fn registers(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        1 << self.n
    }
    pub fn kraus(&self) -> &[CMat<T>] {
        &self.kraus
    }
    /// Registers the map was built to act on; it is the identity elsewhere.
    pub fn support(&self) -> RegSet {
        self.support
    }

    /// Embeds this map into a larger universe: the first `self.registers()`
    /// registers are shared, the extra ones are left untouched.
    pub fn tensor_lift(&self, n: usize) -> Result<Self, String> {
        if n < self.n {
            return Err(format!("universe of {n} registers is smaller than map support ({})", self.n));
        }
        let regs: Vec<usize> = (0..self.n).collect();
        let ks: Vec<CMat<T>> = self.kraus.iter().map(|k| embed(k, &regs, n)).collect();
        Ok(Self::from_kraus(n, ks, self.support))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        self.compose_capped(other, DEFAULT_KRAUS_CAP)
    }

    pub fn compose_capped(&self, other: &Self, cap: usize) -> Self {
        assert_eq!(self.n, other.n, "compose: universe mismatch");
        let mut ks = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        let eps: T = T::default_epsilon() * real(16.0);
        for a in &self.kraus {
            for b in &other.kraus {
                let p = a * b;
                if p.iter().any(|z| cabs(*z) > eps) {
                    ks.push(p);
                }
            }
        }
        let op = Self::from_kraus(self.n, ks, self.support.union(other.support));
        if op.kraus.len() > cap {
            op.reextract()
        } else {
            op
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "add: universe mismatch");
        let mut ks = self.kraus.clone();
        ks.extend(other.kraus.iter().cloned());
        let op = Self::from_kraus(self.n, ks, self.support.union(other.support));
        if let (Some(a), Some(b)) = (self.choi.get(), other.choi.get()) {
            let _ = op.choi.set(a + b);
        }
        if op.kraus.len() > DEFAULT_KRAUS_CAP {
            op.reextract()
        } else {
            op
        }
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Self>>(n: usize, ops: I) -> Self
    where
        T: 'a,
    {
        ops.into_iter().fold(Self::zero(n), |acc, o| acc.add(o))
    }

    /// Multiplies the map by a non-negative real factor.
    pub fn scale(&self, s: T) -> Self {
        let r = Complex::new(s.sqrt(), T::zero());
        let ks = self.kraus.iter().map(|k| k * r).collect();
        Self::from_kraus(self.n, ks, self.support)
    }

    pub fn apply_matrix(&self, rho: &CMat<T>) -> CMat<T> {
        let d = self.dim();
        let mut out = CMat::<T>::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrixT<T>) -> Result<CMat<T>, String> {
        if rho.registers() != self.n {
            return Err(format!(
                "state over {} registers, map over {}",
                rho.registers(),
                self.n
            ));
        }
        Ok(self.apply_matrix(rho.matrix()))
    }

    /// `Σ K† K`, the operator that determines the trace functional.
    pub fn kraus_sum(&self) -> CMat<T> {
        let d = self.dim();
        let mut s = CMat::<T>::zeros(d, d);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        s
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factor first.
    pub fn choi(&self) -> &CMat<T> {
        self.choi.get_or_init(|| {
            let d = self.dim();
            let mut j = CMat::<T>::zeros(d * d, d * d);
            for k in &self.kraus {
                let v = CVec::<T>::from_fn(d * d, |idx, _| k[(idx % d, idx / d)]);
                j += &v * v.adjoint();
            }
            j
        })
    }

    /// Rebuilds a minimal Kraus list from the eigendecomposition of the Choi matrix.
    pub fn reextract(&self) -> Self {
        let d = self.dim();
        let j = self.choi().clone();
        let scale = j.iter().fold(T::zero(), |m, z| if cabs(*z) > m { cabs(*z) } else { m });
        let cut = (T::default_epsilon() * real(1e3)) * (T::one() + scale);
        let mut ks = Vec::new();
        for (lambda, v) in hermitian_eigen(&j) {
            if lambda <= cut {
                continue;
            }
            let s = Complex::new(lambda.sqrt(), T::zero());
            ks.push(CMat::<T>::from_fn(d, d, |a, i| v[i * d + a] * s));
        }
        let op = Self::from_kraus(self.n, ks, self.support);
        let _ = op.choi.set(j);
        op
    }

    pub fn is_trace_preserving(&self, tol: T) -> bool {
        let d = self.dim();
        max_abs_diff(&self.kraus_sum(), &CMat::<T>::identity(d, d)) <= tol
    }

    pub fn is_trace_nonincreasing(&self, tol: T) -> bool {
        let d = self.dim();
        min_eigenvalue(&(CMat::<T>::identity(d, d) - self.kraus_sum())) >= -tol
    }

    pub fn is_zero(&self, tol: T) -> bool {
        self.kraus.iter().all(|k| k.iter().all(|z| cabs(*z) <= tol))
    }

    pub fn choi_distance(&self, other: &Self) -> T {
        max_abs_diff(self.choi(), other.choi())
    }

    /// Equality as linear maps.
    pub fn choi_eq(&self, other: &Self, tol: T) -> bool {
        self.n == other.n && self.choi_distance(other) <= tol
    }

    /// Choi matrix of `tr_{U−V} ∘ self`.
    pub fn reduced_choi(&self, v: RegSet) -> CMat<T> {
        let gone = v.complement(self.n);
        let out = RegSet::from_indices(gone.iter().map(|r| r + self.n));
        partial_trace(self.choi(), 2 * self.n, out)
    }

    /// `self ≂_V other`: equal after tracing out every register outside `v`.
    pub fn eqsim_v(&self, other: &Self, v: RegSet, tol: T) -> bool {
        if self.n != other.n {
            return false;
        }
        if v.intersect(RegSet::all(self.n)).is_empty() {
            return max_abs_diff(&self.kraus_sum(), &other.kraus_sum()) <= tol;
        }
        max_abs_diff(&self.reduced_choi(v), &other.reduced_choi(v)) <= tol
    }

    /// `self ≲ other` in the trace order: `Σ A†A ⊑ Σ B†B`.
    pub fn lesssim_trace(&self, other: &Self, tol: T) -> bool {
        self.n == other.n && min_eigenvalue(&(other.kraus_sum() - self.kraus_sum())) >= -tol
    }
}

pub fn tensor_lift<T: Scalar>(op: &SuperOpT<T>, n: usize) -> Result<SuperOpT<T>, String> {
    op.tensor_lift(n)
}
