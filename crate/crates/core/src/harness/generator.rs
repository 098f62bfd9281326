//! Generated problem instances and their JSON file format.
//!
//! Files hold `dim`, `subspace_dim`, `subspace_basis` and `M` as arrays of rows,
//! `b`, the certified `eta` and `L`, the `seed`, and the generator parameters.
//! Every float is written with 17 significant digits so a write/read cycle
//! reproduces the instance bit for bit.

use std::path::Path;

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, spectral_moduli, DenseMatrix, OrthoSubspace, RealVector};
use crate::operators::{AffineOperator, Operator};
use crate::problem::{InclusionProblem, Solution};
use crate::sampling;

use super::oracle::solve_kkt_oracle;

/// Relative agreement required between stored moduli and the spectrum of `M`.
pub const SPEC_MODULI_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub dim: usize,
    pub subspace_dim: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub eta: f64,
    #[serde(rename = "L", serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub lipschitz: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub skew_fraction: f64,
}

impl GeneratorParams {
    pub fn new(dim: usize, subspace_dim: usize, eta: f64, lipschitz: f64) -> Result<Self> {
        let p = Self {
            dim,
            subspace_dim,
            eta,
            lipschitz,
            skew_fraction: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_skew(mut self, skew_fraction: f64) -> Result<Self> {
        self.skew_fraction = skew_fraction;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgs(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.subspace_dim > self.dim {
            return bad(format!(
                "subspace_dim {} exceeds dim {}",
                self.subspace_dim, self.dim
            ));
        }
        if !(self.eta > 0.0) || !(self.lipschitz >= self.eta) || !self.lipschitz.is_finite() {
            return bad(format!(
                "need 0 < eta <= L, got ({}, {})",
                self.eta, self.lipschitz
            ));
        }
        if self.dim == 1 && self.eta != self.lipschitz {
            return bad("a one-dimensional problem cannot have eta < L".into());
        }
        if !(0.0..1.0).contains(&self.skew_fraction) {
            return bad(format!(
                "skew_fraction must lie in [0, 1), got {}",
                self.skew_fraction
            ));
        }
        Ok(())
    }
}

/// A concrete affine instance `T(z) = M z + b` on `V = span(basis)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub subspace_basis: DenseMatrix,
    pub matrix: DenseMatrix,
    pub offset: RealVector,
    pub eta: f64,
    pub lipschitz: f64,
    pub seed: u64,
    pub params: GeneratorParams,
}

/// Samples an instance with spectrum log-spaced on `[η, L]` (both endpoints
/// included) and an optional skew-symmetric perturbation.
///
/// With `skew_fraction = s > 0` a skew matrix of norm `s·L` is added and the
/// result rescaled back to Lipschitz constant `L`; the monotonicity modulus
/// then drops to at least `η/(1 + s)` and is read from the spectrum.
pub fn generate_problem(params: &GeneratorParams, seed: u64) -> Result<ProblemSpec> {
    params.validate()?;
    let n = params.dim;
    let d = params.subspace_dim;
    let (eta, lip) = (params.eta, params.lipschitz);
    let mut rng = sampling::rng(seed);

    let subspace = orthonormalize(&sampling::gaussian_matrix(&mut rng, n, d))?;
    let rotation = orthonormalize(&sampling::gaussian_matrix(&mut rng, n, n))?;
    let offset = sampling::gaussian_vector(&mut rng, n);

    let mut matrix = if eta == lip {
        DenseMatrix::identity(n, n) * eta
    } else {
        let ratio = lip / eta;
        let spectrum = RealVector::from_fn(n, |i, _| match i {
            0 => eta,
            i if i == n - 1 => lip,
            i => eta * ratio.powf(i as f64 / (n - 1) as f64),
        });
        let q = rotation.basis();
        let m = q * DenseMatrix::from_diagonal(&spectrum) * q.transpose();
        (&m + m.transpose()) * 0.5
    };

    let (eta, lip) = if params.skew_fraction > 0.0 {
        let g = sampling::gaussian_matrix(&mut rng, n, n);
        let k = &g - g.transpose();
        let k_norm = k.clone().singular_values().max();
        if k_norm > 0.0 {
            matrix += k * (params.skew_fraction * lip / k_norm);
            let (_, perturbed_l) = spectral_moduli(&matrix)?;
            matrix *= lip / perturbed_l;
        }
        spectral_moduli(&matrix)?
    } else {
        let (se, sl) = spectral_moduli(&matrix)?;
        // keep the certified pair conservative against rounding
        (eta.min(se), lip.max(sl))
    };

    let spec = ProblemSpec {
        subspace_basis: subspace.basis().clone(),
        matrix,
        offset,
        eta,
        lipschitz: lip,
        seed,
        params: params.clone(),
    };
    spec.validate()?;
    Ok(spec)
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_basis.ncols()
    }

    /// Checks shapes, orthonormality, and that `(eta, L)` match the spectrum of `M`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !self.matrix.is_square() || n == 0 {
            return Err(Error::InvalidArgs("M must be square and nonempty".into()));
        }
        if self.subspace_basis.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.subspace_basis.nrows(),
            });
        }
        if self.offset.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.offset.len(),
            });
        }
        OrthoSubspace::from_basis(self.subspace_basis.clone())?;
        let (se, sl) = spectral_moduli(&self.matrix)?;
        let close = |a: f64, b: f64| (a - b).abs() <= SPEC_MODULI_TOLERANCE * a.abs().max(b.abs());
        if !(self.eta > 0.0) || !close(self.eta, se) || !close(self.lipschitz, sl) {
            return Err(Error::InvalidArgs(format!(
                "stored moduli ({}, {}) disagree with spectrum ({se}, {sl})",
                self.eta, self.lipschitz
            )));
        }
        Ok(())
    }

    pub fn subspace(&self) -> Result<OrthoSubspace> {
        OrthoSubspace::from_basis(self.subspace_basis.clone())
    }

    pub fn operator(&self) -> Result<Operator> {
        Ok(AffineOperator::with_moduli(
            self.matrix.clone(),
            self.offset.clone(),
            self.eta,
            self.lipschitz,
        )?
        .into())
    }

    pub fn problem(&self) -> Result<InclusionProblem> {
        InclusionProblem::new(self.operator()?, self.subspace()?)
    }

    pub fn oracle(&self) -> Result<Solution> {
        let op = self.operator()?;
        solve_kkt_oracle(
            op.as_affine().expect("generated operators are affine"),
            &self.subspace()?,
        )
    }

    /// The inclusion problem together with its oracle solution.
    pub fn problem_with_solution(&self) -> Result<InclusionProblem> {
        let solution = self.oracle()?;
        self.problem()?.with_solution(solution)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        let spec = file.into_spec()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    dim: usize,
    subspace_dim: usize,
    #[serde(serialize_with = "ser_rows", deserialize_with = "de_rows")]
    subspace_basis: Vec<Vec<f64>>,
    #[serde(
        rename = "M",
        serialize_with = "ser_rows",
        deserialize_with = "de_rows"
    )]
    matrix: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_vec", deserialize_with = "de_vec")]
    b: Vec<f64>,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    eta: f64,
    #[serde(rename = "L", serialize_with = "ser_f64", deserialize_with = "de_f64")]
    lipschitz: f64,
    seed: u64,
    generator: GeneratorParams,
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl From<&ProblemSpec> for ProblemFile {
    fn from(s: &ProblemSpec) -> Self {
        Self {
            dim: s.dim(),
            subspace_dim: s.subspace_dim(),
            subspace_basis: rows_of(&s.subspace_basis),
            matrix: rows_of(&s.matrix),
            b: s.offset.iter().copied().collect(),
            eta: s.eta,
            lipschitz: s.lipschitz,
            seed: s.seed,
            generator: s.params.clone(),
        }
    }
}

fn matrix_from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DenseMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DenseMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ProblemFile {
    fn into_spec(self) -> Result<ProblemSpec> {
        let n = self.dim;
        if self.b.len() != n {
            return Err(Error::Parse(format!("b must have length {n}")));
        }
        Ok(ProblemSpec {
            subspace_basis: matrix_from_rows(
                &self.subspace_basis,
                n,
                self.subspace_dim,
                "subspace_basis",
            )?,
            matrix: matrix_from_rows(&self.matrix, n, n, "M")?,
            offset: RealVector::from_vec(self.b),
            eta: self.eta,
            lipschitz: self.lipschitz,
            seed: self.seed,
            params: self.generator,
        })
    }
}

fn sig17(x: f64) -> std::result::Result<Box<RawValue>, String> {
    if !x.is_finite() {
        return Err(format!("cannot serialize non-finite value {x}"));
    }
    RawValue::from_string(format!("{x:.16e}")).map_err(|e| e.to_string())
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    sig17(*x).map_err(S::Error::custom)?.serialize(s)
}

fn ser_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = xs
        .iter()
        .map(|&x| sig17(x))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(S::Error::custom)?;
    raw.serialize(s)
}

fn ser_rows<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| sig17(x))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(S::Error::custom)?;
    raw.serialize(s)
}

fn finite<E: serde::de::Error>(x: f64) -> std::result::Result<f64, E> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(E::custom("non-finite number"))
    }
}

fn de_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    finite(f64::deserialize(d)?)
}

fn de_vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v = Vec::<f64>::deserialize(d)?;
    v.into_iter().map(finite).collect()
}

fn de_rows<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(D::Error::custom("non-finite number"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_bounds;

    #[test]
    fn equal_moduli_give_scaled_identity() {
        for seed in [0, 1, 99] {
            let spec =
                generate_problem(&GeneratorParams::new(2, 1, 2.0, 2.0).unwrap(), seed).unwrap();
            assert_eq!(spec.matrix, DenseMatrix::identity(2, 2) * 2.0);
            assert_eq!((spec.eta, spec.lipschitz), (2.0, 2.0));
        }
    }

    #[test]
    fn spectrum_hits_requested_endpoints() {
        let spec = generate_problem(&GeneratorParams::new(50, 20, 9.0, 57.0).unwrap(), 42).unwrap();
        let (eta, l) = spectral_bounds(&spec.matrix).unwrap();
        assert!((eta - 9.0).abs() <= 1e-6 * 9.0);
        assert!((l - 57.0).abs() <= 1e-6 * 57.0);
        assert_eq!(spec.subspace_dim(), 20);
    }

    #[test]
    fn zero_subspace() {
        let spec = generate_problem(&GeneratorParams::new(4, 0, 1.0, 3.0).unwrap(), 3).unwrap();
        let sol = spec.oracle().unwrap();
        assert_eq!(sol.x, RealVector::zeros(4));
        // u = T(0) = b
        assert!((sol.u - &spec.offset).norm() < 1e-12);
    }

    #[test]
    fn skew_perturbation_keeps_lipschitz() {
        let params = GeneratorParams::new(12, 5, 1.0, 10.0)
            .unwrap()
            .with_skew(0.5)
            .unwrap();
        let spec = generate_problem(&params, 8).unwrap();
        let (eta, l) = spectral_bounds(&spec.matrix).unwrap();
        assert!((l - 10.0).abs() < 1e-9);
        assert!(eta >= 1.0 / 1.5 * (1.0 - 1e-12));
        assert!((spec.matrix.clone() - spec.matrix.transpose()).amax() > 1e-3);
        spec.problem().unwrap();
    }

    #[test]
    fn invalid_params() {
        assert!(GeneratorParams::new(3, 4, 1.0, 2.0).is_err());
        assert!(GeneratorParams::new(3, 1, 2.0, 1.0).is_err());
        assert!(GeneratorParams::new(3, 1, 0.0, 1.0).is_err());
        assert!(GeneratorParams::new(1, 1, 1.0, 2.0).is_err());
        assert!(GeneratorParams::new(3, 1, 1.0, 2.0)
            .unwrap()
            .with_skew(1.0)
            .is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let p = GeneratorParams::new(6, 2, 1.0, 5.0).unwrap();
        assert_eq!(
            generate_problem(&p, 5).unwrap(),
            generate_problem(&p, 5).unwrap()
        );
        assert_ne!(
            generate_problem(&p, 5).unwrap(),
            generate_problem(&p, 6).unwrap()
        );
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let spec = generate_problem(&GeneratorParams::new(2, 1, 2.0, 2.0).unwrap(), 0).unwrap();
        let text = spec.to_json().unwrap();
        assert!(text.contains("\"eta\": 2.0000000000000000e0"), "{text}");
        assert!(text.contains("\"L\": 2.0000000000000000e0"));
    }

    #[test]
    fn json_rejects_inconsistent_moduli() {
        let mut spec = generate_problem(&GeneratorParams::new(3, 1, 1.0, 4.0).unwrap(), 0).unwrap();
        spec.eta = 1.5;
        assert!(ProblemSpec::from_json(&spec.to_json().unwrap()).is_err());
    }
}
