use num_bigint::BigInt;
use num_rational::BigRational;

use super::matrix::*;
use super::superop::SuperOpT;

/// A map on `arity` local qubits, given by local Kraus operators.
#[derive(Clone, Debug)]
pub struct LocalOp<T: Scalar> {
    pub arity: usize,
    pub kraus: Vec<CMat<T>>,
}

impl<T: Scalar> LocalOp<T> {
    pub fn lift(&self, n: usize, regs: &[usize]) -> SuperOpT<T> {
        assert_eq!(regs.len(), self.arity, "arity mismatch");
        SuperOpT::local(n, regs, &self.kraus)
    }
}

/// The map of one outcome of a measurement, as used by the measurement rule.
#[derive(Clone, Debug)]
pub struct Branch<T: Scalar> {
    pub lambda: BigRational,
    /// `ρ ↦ |φ⟩⟨φ|ρ|φ⟩⟨φ|`
    pub project: SuperOpT<T>,
    /// `ρ ↦ Σ_j |φ⟩⟨φ_j|ρ|φ_j⟩⟨φ|`
    pub set: SuperOpT<T>,
}

/// A non-degenerate projective measurement `Σ λ_i |φ_i⟩⟨φ_i|`.
#[derive(Clone, Debug)]
pub struct MeasurementT<T: Scalar> {
    pub arity: usize,
    pub eigenvalues: Vec<BigRational>,
    pub basis: Vec<CVec<T>>,
}

impl<T: Scalar> MeasurementT<T> {
    /// Checks orthonormality, completeness and distinct eigenvalues.
    pub fn new(arity: usize, eigenvalues: Vec<BigRational>, basis: Vec<CVec<T>>, tol: T) -> Result<Self, String> {
        let d = 1usize << arity;
        if basis.len() != d || eigenvalues.len() != d {
            return Err(format!("a measurement on {arity} qubits needs {d} outcomes"));
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip = (a.adjoint() * b)[(0, 0)];
                let want = if i == j { T::one() } else { T::zero() };
                if (ip.re - want).abs() > tol || ip.im.abs() > tol {
                    return Err("measurement basis is not orthonormal".into());
                }
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if eigenvalues[i] == eigenvalues[j] {
                    return Err("measurement eigenvalues are not distinct".into());
                }
            }
        }
        Ok(MeasurementT { arity, eigenvalues, basis })
    }

    pub fn projector(&self, i: usize) -> CMat<T> {
        outer(&self.basis[i], &self.basis[i])
    }

    pub fn branches(&self, n: usize, regs: &[usize]) -> Vec<Branch<T>> {
        assert_eq!(regs.len(), self.arity, "arity mismatch");
        (0..self.basis.len())
            .map(|i| {
                let p = self.projector(i);
                let set_k: Vec<CMat<T>> = self.basis.iter().map(|pj| outer(&self.basis[i], pj)).collect();
                Branch {
                    lambda: self.eigenvalues[i].clone(),
                    project: SuperOpT::local(n, regs, &[p]),
                    set: SuperOpT::local(n, regs, &set_k),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Builtin<T: Scalar> {
    Op(LocalOp<T>),
    Meas(MeasurementT<T>),
}

impl<T: Scalar> Builtin<T> {
    pub fn arity(&self) -> usize {
        match self {
            Builtin::Op(o) => o.arity,
            Builtin::Meas(m) => m.arity,
        }
    }
}

fn mat<T: Scalar>(d: usize, entries: &[(f64, f64)]) -> CMat<T> {
    CMat::<T>::from_fn(d, d, |i, j| {
        let (re, im) = entries[i * d + j];
        cplx(re, im)
    })
}

fn vector<T: Scalar>(entries: &[(f64, f64)]) -> CVec<T> {
    CVec::<T>::from_fn(entries.len(), |i, _| cplx(entries[i].0, entries[i].1))
}

pub fn pauli_i<T: Scalar>() -> CMat<T> {
    mat(2, &[(1., 0.), (0., 0.), (0., 0.), (1., 0.)])
}
pub fn pauli_x<T: Scalar>() -> CMat<T> {
    mat(2, &[(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
}
pub fn pauli_y<T: Scalar>() -> CMat<T> {
    mat(2, &[(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
}
pub fn pauli_z<T: Scalar>() -> CMat<T> {
    mat(2, &[(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
}
pub fn hadamard<T: Scalar>() -> CMat<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    mat(2, &[(h, 0.), (h, 0.), (h, 0.), (-h, 0.)])
}
pub fn cnot<T: Scalar>() -> CMat<T> {
    let mut e = [(0., 0.); 16];
    e[0] = (1., 0.);
    e[5] = (1., 0.);
    e[11] = (1., 0.);
    e[14] = (1., 0.);
    mat(4, &e)
}

/// `|ψ⟩ = (|00⟩ + |11⟩)/√2`
pub fn bell_psi<T: Scalar>() -> CVec<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vector(&[(h, 0.), (0., 0.), (0., 0.), (h, 0.)])
}

fn bell_basis<T: Scalar>() -> Vec<CVec<T>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        vector(&[(h, 0.), (0., 0.), (0., 0.), (h, 0.)]),
        vector(&[(h, 0.), (0., 0.), (0., 0.), (-h, 0.)]),
        vector(&[(0., 0.), (h, 0.), (h, 0.), (0., 0.)]),
        vector(&[(0., 0.), (h, 0.), (-h, 0.), (0., 0.)]),
    ]
}

fn plus_minus<T: Scalar>() -> Vec<CVec<T>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![vector(&[(h, 0.), (h, 0.)]), vector(&[(h, 0.), (-h, 0.)])]
}

fn computational<T: Scalar>(arity: usize) -> Vec<CVec<T>> {
    let d = 1usize << arity;
    (0..d).map(|i| basis(d, i)).collect()
}

/// `Set^φ`: Kraus `{|φ⟩⟨j| : j}`, resets the registers to `|φ⟩`.
pub fn set_to<T: Scalar>(phi: &CVec<T>) -> LocalOp<T> {
    let d = phi.len();
    let arity = d.trailing_zeros() as usize;
    let kraus = (0..d).map(|j| outer(phi, &basis(d, j))).collect();
    LocalOp { arity, kraus }
}

/// `A^φ`: the single Kraus operator `|φ⟩⟨φ|`.
pub fn project_on<T: Scalar>(phi: &CVec<T>) -> LocalOp<T> {
    let d = phi.len();
    LocalOp { arity: d.trailing_zeros() as usize, kraus: vec![outer(phi, phi)] }
}

fn unitary<T: Scalar>(arity: usize, u: CMat<T>) -> LocalOp<T> {
    LocalOp { arity, kraus: vec![u] }
}

fn outcomes(d: usize) -> Vec<BigRational> {
    (0..d).map(|i| BigRational::from_integer(BigInt::from(i))).collect()
}

/// Names of every builtin, for diagnostics and documentation.
pub const BUILTIN_NAMES: &[&str] = &[
    "I", "X", "Y", "Z", "H", "CN", "Sigma0", "Sigma1", "Sigma2", "Sigma3", "Set0", "Set1", "SetPlus",
    "SetMinus", "Set00", "Set01", "Set10", "Set11", "SetPsi", "A0", "A1", "A00", "A01", "A10", "A11",
    "M01", "Mpm", "M0123", "MBell",
];

/// Looks up a builtin super-operator or measurement by name.
pub fn builtin<T: Scalar>(name: &str) -> Option<Builtin<T>> {
    let comp1 = computational::<T>(1);
    let comp2 = computational::<T>(2);
    let b = match name {
        "I" | "Sigma0" => Builtin::Op(unitary(1, pauli_i())),
        "X" | "Sigma1" => Builtin::Op(unitary(1, pauli_x())),
        "Z" | "Sigma2" => Builtin::Op(unitary(1, pauli_z())),
        "Y" | "Sigma3" => Builtin::Op(unitary(1, pauli_y())),
        "H" => Builtin::Op(unitary(1, hadamard())),
        "CN" => Builtin::Op(unitary(2, cnot())),
        "Set0" => Builtin::Op(set_to(&comp1[0])),
        "Set1" => Builtin::Op(set_to(&comp1[1])),
        "SetPlus" => Builtin::Op(set_to(&plus_minus()[0])),
        "SetMinus" => Builtin::Op(set_to(&plus_minus()[1])),
        "Set00" => Builtin::Op(set_to(&comp2[0])),
        "Set01" => Builtin::Op(set_to(&comp2[1])),
        "Set10" => Builtin::Op(set_to(&comp2[2])),
        "Set11" => Builtin::Op(set_to(&comp2[3])),
        "SetPsi" => Builtin::Op(set_to(&bell_psi())),
        "A0" => Builtin::Op(project_on(&comp1[0])),
        "A1" => Builtin::Op(project_on(&comp1[1])),
        "A00" => Builtin::Op(project_on(&comp2[0])),
        "A01" => Builtin::Op(project_on(&comp2[1])),
        "A10" => Builtin::Op(project_on(&comp2[2])),
        "A11" => Builtin::Op(project_on(&comp2[3])),
        "M01" => Builtin::Meas(MeasurementT { arity: 1, eigenvalues: outcomes(2), basis: comp1 }),
        "Mpm" => Builtin::Meas(MeasurementT { arity: 1, eigenvalues: outcomes(2), basis: plus_minus() }),
        "M0123" => Builtin::Meas(MeasurementT { arity: 2, eigenvalues: outcomes(4), basis: comp2 }),
        "MBell" => Builtin::Meas(MeasurementT { arity: 2, eigenvalues: outcomes(4), basis: bell_basis() }),
        _ => return None,
    };
    Some(b)
}
