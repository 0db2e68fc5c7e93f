//! Circuit description and reduction of the four-node rhombus to three
//! branch modes.
//!
//! Node fluxes Φ1..Φ4 are mapped to branch fluxes Θ = T·Φ, where the first
//! three rows of `T` are the junction branches Φ_{i+1} − Φ_i and the last row
//! is the capacitance-weighted total mode. Junction 4 closes the loop between
//! node 4 and node 1, so its phase is −(θ1 + θ2 + θ3) up to the external flux.

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::EC_GHZ_PER_INVERSE_FF;

/// Ratio between the total-mode cross block and the branch block of the
/// inverse capacitance matrix above which the reduction is rejected.
pub const DECOUPLING_THRESHOLD: f64 = 1e-9;

/// Josephson energies of the four junctions, in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSet {
    e_j: [f64; 4],
}

impl JunctionSet {
    pub fn new(e_j: [f64; 4]) -> Result<Self> {
        if e_j.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::invalid(format!(
                "junction energies must be finite and positive, got {e_j:?}"
            )));
        }
        Ok(Self { e_j })
    }

    /// Three equal-ish junctions plus a fourth scaled by `alpha` relative to
    /// their mean.
    pub fn with_alpha(base: [f64; 3], alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        let mean = base.iter().sum::<f64>() / 3.0;
        Self::new([base[0], base[1], base[2], alpha * mean])
    }

    /// Like [`JunctionSet::with_alpha`] but allows α = 0, which removes the
    /// fourth junction (and with it the loop). Only meaningful for spectra.
    #[cfg(test)]
    pub(crate) fn with_alpha_unchecked(base: [f64; 3], alpha: f64) -> Self {
        let mean = base.iter().sum::<f64>() / 3.0;
        Self {
            e_j: [base[0], base[1], base[2], alpha * mean],
        }
    }

    pub fn energies(&self) -> [f64; 4] {
        self.e_j
    }

    pub fn get(&self, junction: usize) -> f64 {
        self.e_j[junction]
    }

    /// E_J^(4) / mean(E_J^(1..3)).
    pub fn alpha(&self) -> f64 {
        self.e_j[3] / (self.e_j[..3].iter().sum::<f64>() / 3.0)
    }
}

/// Every capacitance of the four-node circuit, in fF.
///
/// `pair[i][j]` is the capacitance between nodes i and j; only the upper
/// triangle is read, the lower triangle must either mirror it or be zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceNetwork {
    pub pair: [[f64; 4]; 4],
    pub ground: [f64; 4],
    pub res: [f64; 4],
    pub drive: [f64; 4],
}

impl CapacitanceNetwork {
    /// Nodes coupled only to ground.
    pub fn grounded(ground: [f64; 4]) -> Self {
        Self {
            pair: [[0.0; 4]; 4],
            ground,
            res: [0.0; 4],
            drive: [0.0; 4],
        }
    }

    /// Capacitance between nodes `i` and `j` (0-based, i ≠ j).
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pair[a][b]
    }

    pub fn set_pair(&mut self, i: usize, j: usize, c: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pair[a][b] = c;
        self.pair[b][a] = c;
    }

    /// Environment capacitance C_G + C_R + C_D of node `i`.
    pub fn environment(&self, i: usize) -> f64 {
        self.ground[i] + self.res[i] + self.drive[i]
    }

    /// Every capacitance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.pair.iter_mut() {
            row.iter_mut().for_each(|c| *c *= s);
        }
        for v in [&mut out.ground, &mut out.res, &mut out.drive] {
            v.iter_mut().for_each(|c| *c *= s);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let all = self
            .pair
            .iter()
            .flatten()
            .chain(self.ground.iter())
            .chain(self.res.iter())
            .chain(self.drive.iter());
        for &c in all {
            if !c.is_finite() {
                return Err(Error::invalid("non-finite capacitance"));
            }
            if c < 0.0 {
                return Err(Error::invalid(format!("negative capacitance {c} fF")));
            }
        }
        for i in 0..4 {
            if self.pair[i][i] != 0.0 {
                return Err(Error::invalid(format!("self-capacitance entry pair[{i}][{i}] must be 0")));
            }
            for j in 0..i {
                let (lo, up) = (self.pair[i][j], self.pair[j][i]);
                if lo != 0.0 && lo != up {
                    return Err(Error::invalid(format!(
                        "pair capacitance ({j},{i}) = {up} fF disagrees with ({i},{j}) = {lo} fF"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The node capacitance matrix C^Φ (fF): off-diagonals −C_ij, diagonals
/// C_G + C_R + C_D + Σ_j C_ij.
pub fn assemble_capacitance_matrix(net: &CapacitanceNetwork) -> Result<Matrix4<f64>> {
    net.validate()?;
    let mut c = Matrix4::zeros();
    for i in 0..4 {
        let mut diag = net.environment(i);
        for j in 0..4 {
            if i != j {
                let cij = net.pair(i, j);
                c[(i, j)] = -cij;
                diag += cij;
            }
        }
        if diag <= 0.0 {
            return Err(Error::invalid(format!("node {} has no capacitance", i + 1)));
        }
        c[(i, i)] = diag;
    }
    Ok(c)
}

/// Node-to-branch change of variables and the transformed capacitance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTransform {
    /// Θ = T·Φ.
    pub t: Matrix4<f64>,
    pub t_inv: Matrix4<f64>,
    /// Weights ς_i of the total mode (sum to one).
    pub weights: [f64; 4],
    /// C^Θ = (T⁻¹)ᵀ C^Φ T⁻¹.
    pub c_theta: Matrix4<f64>,
    /// Node capacitance matrix C^Φ.
    pub c_phi: Matrix4<f64>,
}

pub fn branch_transform(net: &CapacitanceNetwork) -> Result<BranchTransform> {
    let c_phi = assemble_capacitance_matrix(net)?;
    let env_total: f64 = (0..4).map(|i| net.environment(i)).sum();
    if env_total <= 0.0 {
        return Err(Error::Transformation(
            "no capacitance to ground, resonator or drive; total mode undefined".into(),
        ));
    }
    let weights: [f64; 4] = std::array::from_fn(|i| net.environment(i) / env_total);
    #[rustfmt::skip]
    let t = Matrix4::new(
        -1.0, 1.0, 0.0, 0.0,
        0.0, -1.0, 1.0, 0.0,
        0.0, 0.0, -1.0, 1.0,
        weights[0], weights[1], weights[2], weights[3],
    );
    let t_inv = t
        .try_inverse()
        .ok_or_else(|| Error::Transformation("branch transformation is singular".into()))?;
    let c_theta = t_inv.transpose() * c_phi * t_inv;
    Ok(BranchTransform {
        t,
        t_inv,
        weights,
        c_theta,
        c_phi,
    })
}

/// Parameters of the three-mode rhombus Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCircuit {
    /// Charging energies E_C^(ij) in GHz; kinetic term Σ 4·ec[i][j](n_i−n_gi)(n_j−n_gj).
    pub ec: [[f64; 3]; 3],
    pub junctions: JunctionSet,
    /// Offset charges in Cooper pairs.
    pub n_g: [f64; 3],
    /// External flux in units of Φ0.
    pub phi_ext: f64,
    pub beta_res: Option<[f64; 3]>,
    pub beta_drive: Option<[f64; 3]>,
}

impl ReducedCircuit {
    /// Build directly from charging energies, validating symmetry and
    /// positive-definiteness.
    pub fn new(ec: [[f64; 3]; 3], junctions: JunctionSet, n_g: [f64; 3], phi_ext: f64) -> Result<Self> {
        let circuit = Self {
            ec,
            junctions,
            n_g,
            phi_ext,
            beta_res: None,
            beta_drive: None,
        };
        circuit.validate()?;
        Ok(circuit)
    }

    /// The fitted device: ec, junction energies and resonator couplings as
    /// obtained from spectroscopy, biased at `phi_ext` with zero offsets.
    ///
    /// The cross charging energies carry the negative sign that the branch
    /// reduction produces for any ring of junction and ground capacitances.
    pub fn fitted_device(phi_ext: f64) -> Self {
        let (d, a, b) = (0.2758, -0.1154, -0.0465);
        Self {
            ec: [[d, a, b], [a, d, a], [b, a, d]],
            junctions: JunctionSet {
                e_j: [13.04, 13.12, 12.92, 8.20],
            },
            n_g: [0.0; 3],
            phi_ext,
            beta_res: Some([-0.0813, -0.0197, 0.0193]),
            beta_drive: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.ec_matrix();
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite charging energy"));
        }
        if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max() {
            return Err(Error::invalid("charging-energy matrix is not symmetric"));
        }
        if m.cholesky().is_none() {
            return Err(Error::invalid("charging-energy matrix is not positive definite"));
        }
        if !self.phi_ext.is_finite() || self.n_g.iter().any(|n| !n.is_finite()) {
            return Err(Error::invalid("non-finite flux or offset charge"));
        }
        Ok(())
    }

    pub fn ec_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.ec[i][j])
    }

    pub fn with_flux(&self, phi_ext: f64) -> Self {
        Self { phi_ext, ..*self }
    }

    pub fn with_offsets(&self, n_g: [f64; 3]) -> Self {
        Self { n_g, ..*self }
    }

    pub fn with_offset(&self, mode: usize, n_g: f64) -> Self {
        let mut out = *self;
        out.n_g[mode] = n_g;
        out
    }

    pub fn with_junctions(&self, junctions: JunctionSet) -> Self {
        Self { junctions, ..*self }
    }

    /// Replace E_J^(4) by α times the mean of the other three.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let e = self.junctions.energies();
        Ok(self.with_junctions(JunctionSet::with_alpha([e[0], e[1], e[2]], alpha)?))
    }
}

fn inverse(c: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let svd = c.svd(false, false);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if smin <= 1e-13 * smax {
        return Err(Error::Conditioning(format!(
            "condition number {:.3e} too large",
            smax / smin
        )));
    }
    c.try_inverse()
        .ok_or_else(|| Error::Conditioning("capacitance matrix is singular".into()))
}

/// Inverse of C^Θ after checking that the total-charge mode decouples.
fn reduced_inverse(bt: &BranchTransform) -> Result<Matrix4<f64>> {
    let inv = inverse(&bt.c_theta)?;
    let block = inv.fixed_view::<3, 3>(0, 0).abs().max();
    let cross = inv
        .fixed_view::<3, 1>(0, 3)
        .abs()
        .max()
        .max(inv.fixed_view::<1, 3>(3, 0).abs().max());
    let ratio = cross / block;
    if ratio >= DECOUPLING_THRESHOLD {
        return Err(Error::DecouplingViolation { ratio });
    }
    Ok(inv)
}

/// Reduce a capacitance network plus junctions to the three-mode circuit.
/// Coupling coefficients are filled in as well.
pub fn reduce_to_three_modes(
    net: &CapacitanceNetwork,
    junctions: JunctionSet,
    n_g: [f64; 3],
    phi_ext: f64,
) -> Result<ReducedCircuit> {
    let bt = branch_transform(net)?;
    let inv = reduced_inverse(&bt)?;
    // (e²/2)(C⁻¹)_ij with C in fF, expressed as a frequency.
    let ec: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| EC_GHZ_PER_INVERSE_FF * inv[(i, j)]));
    let (beta_res, beta_drive) = betas_from(&bt, &inv, net);
    let mut circuit = ReducedCircuit::new(symmetrize(ec), junctions, n_g, phi_ext)?;
    circuit.beta_res = Some(beta_res);
    circuit.beta_drive = Some(beta_drive);
    Ok(circuit)
}

fn symmetrize(ec: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (ec[i][j] + ec[j][i])))
}

fn betas_from(bt: &BranchTransform, inv: &Matrix4<f64>, net: &CapacitanceNetwork) -> ([f64; 3], [f64; 3]) {
    let ones = Vector4::repeat(1.0);
    let v_theta = bt.t * ones;
    let beta = |diag: &[f64; 4]| -> [f64; 3] {
        let c_theta = bt.t_inv.transpose() * Matrix4::from_diagonal(&Vector4::from_column_slice(diag)) * bt.t_inv;
        let b = inv * c_theta * v_theta;
        [b[0], b[1], b[2]]
    };
    (beta(&net.res), beta(&net.drive))
}

/// β_R and β_D: charge of each branch mode induced per volt on the resonator
/// and drive line, from (C^Θ)⁻¹ C_X^Θ V_X^Θ.
pub fn coupling_coefficients(net: &CapacitanceNetwork) -> Result<([f64; 3], [f64; 3])> {
    let bt = branch_transform(net)?;
    let inv = reduced_inverse(&bt)?;
    Ok(betas_from(&bt, &inv, net))
}
