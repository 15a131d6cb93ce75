//! Matrix representations of the circuit operators.
//!
//! The transmon lives in the Cooper-pair charge basis `|n⟩`, `n = −N_c..N_c`
//! (dimension `2·N_c + 1`), where the island charge `N` is diagonal and the
//! junction phase enters through the pair-transfer operator
//! `e^{iθ}|n⟩ = |n+1⟩`:
//!
//! ```text
//! cos θ = (e^{iθ} + e^{−iθ})/2,    sin θ = (e^{iθ} − e^{−iθ})/2i.
//! ```
//!
//! The resonator lives in a truncated Fock basis with the standard lowering
//! operator. Joint operators are Kronecker products, transmon factor first.
//!
//! All Hamiltonian builders return angular-frequency matrices (rad/ns,
//! ħ = 1); the parameter struct [`CircuitParams`] holds ordinary GHz values
//! and converts at the boundary.

use ndarray::{s, Array1, Array2};
use crate::linalg::eigh_hermitian;

use crate::error::{Error, Result};
use crate::units::angular;
use crate::C64;

/// Relative Frobenius tolerance below which a Hamiltonian must be Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Which basis a matrix is expressed in. Tensor products nest tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisTag {
    /// Charge basis with cutoff `N_c` (dimension `2·N_c + 1`).
    Charge { n_c: usize },
    /// Fock basis truncated to `n_fock` levels.
    Fock { n_fock: usize },
    /// Lowest `n_levels` eigenstates of the bare transmon.
    TransmonEigen { n_levels: usize },
    /// Kronecker product of two factor bases, left factor major.
    Joint {
        left: Box<BasisTag>,
        right: Box<BasisTag>,
    },
}

impl BasisTag {
    /// Hilbert-space dimension implied by the tag.
    pub fn dim(&self) -> usize {
        match self {
            BasisTag::Charge { n_c } => 2 * n_c + 1,
            BasisTag::Fock { n_fock } => *n_fock,
            BasisTag::TransmonEigen { n_levels } => *n_levels,
            BasisTag::Joint { left, right } => left.dim() * right.dim(),
        }
    }
}

/// A dense complex operator annotated with the basis it is written in.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    /// Matrix elements, row-major square.
    pub data: Array2<C64>,
    /// Dimension (equals both matrix axes and the basis-tag dimension).
    pub dim: usize,
    /// Basis bookkeeping for tensor-product sanity checks.
    pub basis_tag: BasisTag,
}

impl OperatorMatrix {
    /// Wrap a square matrix, checking its shape against the basis tag.
    pub fn new(data: Array2<C64>, basis_tag: BasisTag) -> Result<Self> {
        let dim = basis_tag.dim();
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::InvalidParams(format!(
                "operator shape {:?} does not match basis dimension {dim}",
                data.shape()
            )));
        }
        Ok(Self {
            data,
            dim,
            basis_tag,
        })
    }

    /// Relative Frobenius deviation from Hermiticity, ‖A − A†‖ / ‖A‖.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.data[(i, j)];
                let b = self.data[(j, i)].conj();
                num += (a - b).norm_sqr();
                den += a.norm_sqr();
            }
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// Error unless Hermitian within [`HERMITICITY_TOL`].
    pub fn assert_hermitian(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: HERMITICITY_TOL,
            });
        }
        Ok(())
    }
}

/// Physical constants and truncations of the circuit.
///
/// Energies are ordinary frequencies: `e_c`, `e_j` are `E_C/h` and `E_J/h`
/// in GHz; `g` and `omega_a` are `g/2π` and `ω_a/2π` in GHz.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircuitParams {
    /// Charging energy `E_C/h` (GHz).
    pub e_c: f64,
    /// Josephson energy `E_J/h` (GHz).
    pub e_j: f64,
    /// Transmon–resonator coupling `g/2π` (GHz).
    pub g: f64,
    /// Bare resonator frequency `ω_a/2π` (GHz).
    pub omega_a: f64,
    /// Charge offset on the island (dimensionless, in units of 2e).
    pub n_g: f64,
    /// Charge-basis cutoff `N_c`; the basis holds `2·N_c + 1` states.
    pub n_c: usize,
    /// Transmon eigenstates retained after projection.
    pub n_transmon: usize,
    /// Fock states retained for the resonator.
    pub n_fock: usize,
}

impl CircuitParams {
    /// Default charge cutoff: converged for 45 retained eigenstates
    /// (the lowest 45 eigenvalues move by < 1e-9 relative when raised to 60).
    pub const DEFAULT_N_C: usize = 40;
    /// Default retained transmon eigenstates.
    pub const DEFAULT_N_TRANSMON: usize = 45;
    /// Default resonator Fock cutoff.
    pub const DEFAULT_N_FOCK: usize = 10;

    /// Parameters with default truncations (`N_c = 40`, 45 ⊗ 10 retained)
    /// and zero charge offset.
    pub fn new(e_c: f64, e_j: f64, g: f64, omega_a: f64) -> Self {
        Self {
            e_c,
            e_j,
            g,
            omega_a,
            n_g: 0.0,
            n_c: Self::DEFAULT_N_C,
            n_transmon: Self::DEFAULT_N_TRANSMON,
            n_fock: Self::DEFAULT_N_FOCK,
        }
    }

    /// Validate positivity and truncation consistency.
    ///
    /// `E_J = 0` is allowed (free-rotor limit, useful in tests and for the
    /// confinement count); negative Josephson energies are not.
    pub fn validate(&self) -> Result<()> {
        if !(self.e_c > 0.0) || !(self.e_j >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "E_C must be positive and E_J nonnegative (got E_C = {}, E_J = {})",
                self.e_c, self.e_j
            )));
        }
        if self.n_c < 1 {
            return Err(Error::InvalidParams("charge cutoff N_c must be ≥ 1".into()));
        }
        if self.n_transmon > 2 * self.n_c + 1 {
            return Err(Error::InvalidParams(format!(
                "cannot retain {} transmon eigenstates from a {}-state charge basis",
                self.n_transmon,
                2 * self.n_c + 1
            )));
        }
        if self.n_fock < 2 {
            return Err(Error::InvalidParams("n_fock must be ≥ 2".into()));
        }
        if !self.g.is_finite() || !self.omega_a.is_finite() || !self.n_g.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Joint dimension after projection, `n_transmon · n_fock`.
    pub fn joint_dim(&self) -> usize {
        self.n_transmon * self.n_fock
    }
}

/// Charge `N`, `cos θ`, and `sin θ` in the charge basis.
pub struct ChargeOperators {
    /// `N − N_g`, diagonal.
    pub n: OperatorMatrix,
    /// `cos θ`: 1/2 on both first off-diagonals.
    pub cos_theta: OperatorMatrix,
    /// `sin θ`: `+i/2` above, `−i/2` below the diagonal
    /// (with `e^{iθ}|n⟩ = |n+1⟩`).
    pub sin_theta: OperatorMatrix,
}

/// Build the charge-basis operators for cutoff `N_c` and offset `N_g`.
pub fn build_charge_operators(n_c: usize, n_g: f64) -> Result<ChargeOperators> {
    if n_c < 1 {
        return Err(Error::InvalidParams("charge cutoff N_c must be ≥ 1".into()));
    }
    let d = 2 * n_c + 1;
    let mut n = Array2::<C64>::zeros((d, d));
    let mut cos = Array2::<C64>::zeros((d, d));
    let mut sin = Array2::<C64>::zeros((d, d));
    for i in 0..d {
        let charge = i as f64 - n_c as f64;
        n[(i, i)] = C64::new(charge - n_g, 0.0);
    }
    // e^{iθ} has ones on (i+1, i); cos and sin follow from its definition.
    for i in 0..d - 1 {
        cos[(i + 1, i)] = C64::new(0.5, 0.0);
        cos[(i, i + 1)] = C64::new(0.5, 0.0);
        sin[(i + 1, i)] = C64::new(0.0, -0.5);
        sin[(i, i + 1)] = C64::new(0.0, 0.5);
    }
    let tag = BasisTag::Charge { n_c };
    Ok(ChargeOperators {
        n: OperatorMatrix::new(n, tag.clone())?,
        cos_theta: OperatorMatrix::new(cos, tag.clone())?,
        sin_theta: OperatorMatrix::new(sin, tag)?,
    })
}

/// Lowering operator and photon-number operator in a truncated Fock basis.
pub struct FockOperators {
    /// Lowering operator `a` with `a|k⟩ = √k |k−1⟩`.
    pub a: OperatorMatrix,
    /// Number operator `a†a = diag(0..n_fock−1)`.
    pub number: OperatorMatrix,
}

/// Build the Fock-basis operators for a cutoff of `n_fock` levels.
pub fn build_fock_operators(n_fock: usize) -> Result<FockOperators> {
    if n_fock < 2 {
        return Err(Error::InvalidParams("n_fock must be ≥ 2".into()));
    }
    let mut a = Array2::<C64>::zeros((n_fock, n_fock));
    let mut num = Array2::<C64>::zeros((n_fock, n_fock));
    for k in 1..n_fock {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        num[(k, k)] = C64::new(k as f64, 0.0);
    }
    let tag = BasisTag::Fock { n_fock };
    Ok(FockOperators {
        a: OperatorMatrix::new(a, tag.clone())?,
        number: OperatorMatrix::new(num, tag)?,
    })
}

/// Kronecker product on raw matrices, left factor major.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::<C64>::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb]);
            block.zip_mut_with(b, |o, &bkl| *o = aij * bkl);
        }
    }
    out
}

/// Tensor product of two tagged operators; the result carries a
/// [`BasisTag::Joint`] tag.
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .ok_or_else(|| Error::InvalidParams("tensor-product dimension overflow".into()))?;
    let data = kron(&a.data, &b.data);
    debug_assert_eq!(data.nrows(), dim);
    OperatorMatrix::new(
        data,
        BasisTag::Joint {
            left: Box::new(a.basis_tag.clone()),
            right: Box::new(b.basis_tag.clone()),
        },
    )
}

/// Bare transmon Hamiltonian `4E_C(N − N_g)² − E_J cos θ` in the charge
/// basis, angular units.
pub fn transmon_hamiltonian(params: &CircuitParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let ops = build_charge_operators(params.n_c, params.n_g)?;
    let ec = angular(params.e_c);
    let ej = angular(params.e_j);
    let n2 = ops.n.data.dot(&ops.n.data);
    let data = n2.mapv(|x| 4.0 * ec * x) - ops.cos_theta.data.mapv(|x| ej * x);
    let h = OperatorMatrix::new(data, BasisTag::Charge { n_c: params.n_c })?;
    h.assert_hermitian()?;
    Ok(h)
}

/// Full static Hamiltonian in the charge ⊗ Fock basis, angular units:
/// `H_T ⊗ I + ω_a I ⊗ a†a + g (N − N_g) ⊗ (a + a†)`.
pub fn joint_static_hamiltonian(params: &CircuitParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let ht = transmon_hamiltonian(params)?;
    let charge = build_charge_operators(params.n_c, params.n_g)?;
    let fock = build_fock_operators(params.n_fock)?;
    let d_t = ht.dim;
    let d_f = params.n_fock;

    let eye_t = Array2::<C64>::eye(d_t);
    let eye_f = Array2::<C64>::eye(d_f);
    let x = &fock.a.data + &fock.a.data.t().mapv(|v| v.conj());

    let mut data = kron(&ht.data, &eye_f);
    data += &kron(&eye_t, &fock.number.data).mapv(|v| angular(params.omega_a) * v);
    data += &kron(&charge.n.data, &x).mapv(|v| angular(params.g) * v);

    let h = OperatorMatrix::new(
        data,
        BasisTag::Joint {
            left: Box::new(BasisTag::Charge { n_c: params.n_c }),
            right: Box::new(BasisTag::Fock {
                n_fock: params.n_fock,
            }),
        },
    )?;
    h.assert_hermitian()?;
    Ok(h)
}

/// The bare-transmon eigenbasis truncated to its lowest levels, together
/// with the charge operators projected into it.
///
/// Working in this basis instead of the raw charge basis keeps the exact
/// low-lying spectrum (the retained eigenvalues are untruncated) while
/// shrinking every joint matrix from `(2N_c+1)·n_fock` to
/// `n_levels·n_fock` rows.
pub struct ProjectedTransmon {
    /// Transmon eigenvalues, ascending, angular units (rad/ns).
    pub energies: Array1<f64>,
    /// `N − N_g` in the eigenbasis.
    pub n: OperatorMatrix,
    /// `cos θ` in the eigenbasis.
    pub cos_theta: OperatorMatrix,
    /// `sin θ` in the eigenbasis.
    pub sin_theta: OperatorMatrix,
    /// Charge-basis eigenvectors, one column per retained level.
    pub charge_states: Array2<C64>,
}

/// Diagonalize the bare transmon and project the charge operators onto the
/// lowest `n_levels` eigenstates.
pub fn projected_transmon(params: &CircuitParams, n_levels: usize) -> Result<ProjectedTransmon> {
    params.validate()?;
    let d = 2 * params.n_c + 1;
    if n_levels == 0 || n_levels > d {
        return Err(Error::InvalidParams(format!(
            "projection onto {n_levels} levels needs 1 ≤ n_levels ≤ {d}"
        )));
    }
    let ht = transmon_hamiltonian(params)?;
    let (vals, vecs) = eigh_hermitian(&ht.data)?;
    let v = vecs.slice(s![.., ..n_levels]).to_owned();
    let vh = v.t().mapv(|x| x.conj());
    let ops = build_charge_operators(params.n_c, params.n_g)?;
    let tag = BasisTag::TransmonEigen { n_levels };
    let project = |m: &Array2<C64>| vh.dot(&m.dot(&v));
    Ok(ProjectedTransmon {
        energies: vals.slice(s![..n_levels]).to_owned(),
        n: OperatorMatrix::new(project(&ops.n.data), tag.clone())?,
        cos_theta: OperatorMatrix::new(project(&ops.cos_theta.data), tag.clone())?,
        sin_theta: OperatorMatrix::new(project(&ops.sin_theta.data), tag)?,
        charge_states: v,
    })
}

/// Static joint Hamiltonian in the transmon-eigen ⊗ Fock basis, angular
/// units:
///
/// ```text
/// H₀ = diag(E_t) ⊗ I + ω_a I ⊗ a†a + g Ñ ⊗ (a + a†)
/// ```
///
/// where `E_t` and `Ñ` come from [`projected_transmon`] with `n_levels`
/// retained levels. The transmon block is diagonal with the *exact*
/// low-lying eigenvalues; only the coupling is truncated by the projection.
pub fn projected_joint_static_hamiltonian(
    params: &CircuitParams,
    n_levels: usize,
) -> Result<(OperatorMatrix, ProjectedTransmon)> {
    let proj = projected_transmon(params, n_levels)?;
    let fock = build_fock_operators(params.n_fock)?;
    let eye_t = Array2::<C64>::eye(n_levels);
    let x = &fock.a.data + &fock.a.data.t().mapv(|v| v.conj());

    let mut ht = Array2::<C64>::zeros((n_levels, n_levels));
    for (i, &e) in proj.energies.iter().enumerate() {
        ht[(i, i)] = C64::new(e, 0.0);
    }
    let mut data = kron(&ht, &Array2::eye(params.n_fock));
    data += &kron(&eye_t, &fock.number.data).mapv(|v| angular(params.omega_a) * v);
    data += &kron(&proj.n.data, &x).mapv(|v| angular(params.g) * v);

    let h = OperatorMatrix::new(
        data,
        BasisTag::Joint {
            left: Box::new(BasisTag::TransmonEigen { n_levels }),
            right: Box::new(BasisTag::Fock {
                n_fock: params.n_fock,
            }),
        },
    )?;
    h.assert_hermitian()?;
    Ok((h, proj))
}

/// Paper-style reference parameters used across tests and docs:
/// `E_C/h = 166 MHz`, `E_J/h = 23.3 GHz`, `g/2π = 179 MHz`,
/// `ω_a/2π = 7.739 GHz`.
pub fn reference_params() -> CircuitParams {
    CircuitParams::new(0.166, 23.3, 0.179, 7.739)
}
