use rand::Rng;
use rand_distr::StandardNormal;

use nalgebra::Complex;

use crate::quantum::{basis, bell_psi, kron, outer, CMat, CVec};

/// Families of random states used to probe concrete behaviour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoKind {
    Basis,
    HaarPure,
    BellProduct,
    Ginibre,
}

impl RhoKind {
    pub const ALL: [RhoKind; 4] = [RhoKind::Basis, RhoKind::HaarPure, RhoKind::BellProduct, RhoKind::Ginibre];
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> CVec<f64> {
    CVec::<f64>::from_fn(d, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn haar_pure<R: Rng>(rng: &mut R, d: usize) -> CVec<f64> {
    let v = gaussian_vec(rng, d);
    let norm = v.norm();
    v.map(|z| z / norm)
}

/// A random density matrix on `n` qubits from the given family.
pub fn random_rho<R: Rng>(rng: &mut R, kind: RhoKind, n: usize) -> CMat<f64> {
    let d = 1usize << n;
    match kind {
        RhoKind::Basis => {
            let v = basis(d, rng.random_range(0..d));
            outer(&v, &v)
        }
        RhoKind::HaarPure => {
            let v = haar_pure(rng, d);
            outer(&v, &v)
        }
        RhoKind::BellProduct if n >= 2 => {
            let bell = bell_psi::<f64>();
            let head = outer(&bell, &bell);
            if n == 2 {
                return head;
            }
            let v = haar_pure(rng, 1 << (n - 2));
            kron(&head, &outer(&v, &v))
        }
        RhoKind::BellProduct => random_rho(rng, RhoKind::HaarPure, n),
        RhoKind::Ginibre => {
            let g = CMat::<f64>::from_fn(d, d, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            m.map(|z| z / tr)
        }
    }
}
