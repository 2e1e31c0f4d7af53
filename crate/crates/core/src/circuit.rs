//! Ancilla-controlled measurement circuit on `a ⊗ A ⊗ B ⊗ b`.
//!
//! The ancilla `a` selects which unitary `U^(a)` acts on register `A` before a
//! standard-basis measurement, and likewise `b` selects `V^(b)` on `B`. Ancilla
//! labels run `1..=dim` in the public API; register outcomes are indexed from 0
//! with values given by [`outcome_value`] (index 0 is `+1`, the last is `−1`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{basis_projector, DecompositionOfIdentity, Projector};
use crate::random::{random_ket, random_unitary};
use crate::tensor::{eig_hermitian, kron, kron_all, CMatrix, Ket, SpaceLayout};

pub const UNITARY_TOL: f64 = 1e-10;

pub const ANCILLA_A: &str = "a";
pub const REGISTER_A: &str = "A";
pub const REGISTER_B: &str = "B";
pub const ANCILLA_B: &str = "b";

/// Value attached to outcome index `k` of a `dim`-level register: evenly
/// spaced from `+1` down to `−1`, so qubits read `+1, −1`.
pub fn outcome_value(k: usize, dim: usize) -> f64 {
    if dim == 1 {
        return 1.0;
    }
    1.0 - 2.0 * k as f64 / (dim - 1) as f64
}

pub fn outcome_values(dim: usize) -> Vec<f64> {
    (0..dim).map(|k| outcome_value(k, dim)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct CircuitSpec {
    layout: SpaceLayout,
    phi: Ket,
    phi_a: Ket,
    phi_b: Ket,
    u_family: Vec<CMatrix>,
    v_family: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    phi: Ket,
    phi_a: Ket,
    phi_b: Ket,
    u_family: Vec<CMatrix>,
    v_family: Vec<CMatrix>,
}

impl TryFrom<RawSpec> for CircuitSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        CircuitSpec::new(r.phi, r.phi_a, r.phi_b, r.u_family, r.v_family)
    }
}

impl From<CircuitSpec> for RawSpec {
    fn from(s: CircuitSpec) -> Self {
        RawSpec {
            phi: s.phi,
            phi_a: s.phi_a,
            phi_b: s.phi_b,
            u_family: s.u_family,
            v_family: s.v_family,
        }
    }
}

impl CircuitSpec {
    pub fn new(
        phi: Ket,
        phi_a: Ket,
        phi_b: Ket,
        u_family: Vec<CMatrix>,
        v_family: Vec<CMatrix>,
    ) -> Result<Self> {
        let n_a = phi_a.dim();
        let n_b = phi_b.dim();
        if u_family.len() != n_a || v_family.len() != n_b {
            return Err(Error::Dimension(format!(
                "{} U's for ancilla dim {n_a}, {} V's for ancilla dim {n_b}",
                u_family.len(),
                v_family.len()
            )));
        }
        let d_a = u_family[0].rows();
        let d_b = v_family[0].rows();
        for (fam, d) in [(&u_family, d_a), (&v_family, d_b)] {
            for u in fam {
                if !u.is_square() || u.rows() != d {
                    return Err(Error::Dimension("family members must share one square shape".into()));
                }
                u.ensure_unitary(UNITARY_TOL)?;
            }
        }
        if phi.dim() != d_a * d_b {
            return Err(Error::Dimension(format!(
                "Φ has dim {}, registers span {}",
                phi.dim(),
                d_a * d_b
            )));
        }
        for k in [&phi, &phi_a, &phi_b] {
            k.ensure_normalized()?;
        }
        let layout = SpaceLayout::new([
            (ANCILLA_A, n_a),
            (REGISTER_A, d_a),
            (REGISTER_B, d_b),
            (ANCILLA_B, n_b),
        ])?;
        Ok(Self {
            layout,
            phi,
            phi_a,
            phi_b,
            u_family,
            v_family,
        })
    }

    /// Qubit registers measured along Bloch axes; ancillas in uniform superposition.
    pub fn qubit_axes(phi: Ket, axes_a: &[[f64; 3]], axes_b: &[[f64; 3]]) -> Result<Self> {
        let us = axes_a
            .iter()
            .map(|&n| measurement_unitary(&crate::quantum::pauli::along(n)))
            .collect::<Result<_>>()?;
        let vs = axes_b
            .iter()
            .map(|&n| measurement_unitary(&crate::quantum::pauli::along(n)))
            .collect::<Result<_>>()?;
        Self::new(
            phi,
            uniform_superposition(axes_a.len()),
            uniform_superposition(axes_b.len()),
            us,
            vs,
        )
    }

    /// Random Φ, ancilla states and unitary families.
    pub fn random(
        rng: &mut impl Rng,
        d_reg: (usize, usize),
        n_settings: (usize, usize),
    ) -> Result<Self> {
        let phi = random_ket(rng, d_reg.0 * d_reg.1);
        let phi_a = random_ket(rng, n_settings.0);
        let phi_b = random_ket(rng, n_settings.1);
        let us = (0..n_settings.0).map(|_| random_unitary(rng, d_reg.0)).collect();
        let vs = (0..n_settings.1).map(|_| random_unitary(rng, d_reg.1)).collect();
        Self::new(phi, phi_a, phi_b, us, vs)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn phi(&self) -> &Ket {
        &self.phi
    }

    pub fn phi_a(&self) -> &Ket {
        &self.phi_a
    }

    pub fn phi_b(&self) -> &Ket {
        &self.phi_b
    }

    pub fn u_family(&self) -> &[CMatrix] {
        &self.u_family
    }

    pub fn v_family(&self) -> &[CMatrix] {
        &self.v_family
    }

    pub fn n_settings_a(&self) -> usize {
        self.u_family.len()
    }

    pub fn n_settings_b(&self) -> usize {
        self.v_family.len()
    }

    pub fn dim_a(&self) -> usize {
        self.u_family[0].rows()
    }

    pub fn dim_b(&self) -> usize {
        self.v_family[0].rows()
    }

    /// Bipartite `A ⊗ B` layout on which Φ lives.
    pub fn register_layout(&self) -> SpaceLayout {
        self.layout
            .sub_layout(&[REGISTER_A, REGISTER_B])
            .expect("registers are in the layout")
    }

    /// Same spec with different `U`/`V` families.
    pub fn with_families(&self, u_family: Vec<CMatrix>, v_family: Vec<CMatrix>) -> Result<Self> {
        Self::new(
            self.phi.clone(),
            self.phi_a.clone(),
            self.phi_b.clone(),
            u_family,
            v_family,
        )
    }

    pub fn with_phi(&self, phi: Ket) -> Result<Self> {
        Self::new(
            phi,
            self.phi_a.clone(),
            self.phi_b.clone(),
            self.u_family.clone(),
            self.v_family.clone(),
        )
    }

    /// `Pr(a) = |⟨a|φ_a⟩|²` for label `a` in `1..=dim`.
    pub fn pr_a(&self, a: usize) -> Result<f64> {
        let k = label_index(a, self.n_settings_a())?;
        Ok(self.phi_a.amps()[k].norm_sqr())
    }

    pub fn pr_b(&self, b: usize) -> Result<f64> {
        let k = label_index(b, self.n_settings_b())?;
        Ok(self.phi_b.amps()[k].norm_sqr())
    }
}

pub(crate) fn label_index(label: usize, n: usize) -> Result<usize> {
    if label == 0 || label > n {
        return Err(Error::UnknownLabel(format!("ancilla label {label} outside 1..={n}")));
    }
    Ok(label - 1)
}

fn outcome_index(k: usize, dim: usize) -> Result<usize> {
    if k >= dim {
        return Err(Error::UnknownLabel(format!("outcome index {k} outside 0..{dim}")));
    }
    Ok(k)
}

pub fn uniform_superposition(n: usize) -> Ket {
    let amp = 1.0 / (n as f64).sqrt();
    Ket::from_real(&vec![amp; n]).expect("finite")
}

/// Unitary whose back-propagated standard-basis projectors are the
/// eigenprojectors of `observable`, largest eigenvalue first. Assumes a
/// nondegenerate spectrum.
pub fn measurement_unitary(observable: &CMatrix) -> Result<CMatrix> {
    let e = eig_hermitian(observable)?;
    let n = observable.rows();
    // row k of U is ⟨v_k| with v_k the k-th eigenvector in descending order
    Ok(CMatrix::from_fn(n, n, |k, j| e.vectors[(j, n - 1 - k)].conj()))
}

/// `Σ_c |c⟩⟨c| ⊗ U^(c)`.
pub fn build_controlled(family: &[CMatrix], control_dim: usize) -> Result<CMatrix> {
    if family.len() != control_dim {
        return Err(Error::Dimension(format!(
            "{} family members for control dimension {control_dim}",
            family.len()
        )));
    }
    let mut total: Option<CMatrix> = None;
    for (k, u) in family.iter().enumerate() {
        u.ensure_unitary(UNITARY_TOL)?;
        let term = kron(basis_projector(control_dim, k).matrix(), u)?;
        total = Some(match total {
            Some(t) => &t + &term,
            None => term,
        });
    }
    total.ok_or_else(|| Error::Dimension("empty family".into()))
}

/// `Σ_c U^(c) ⊗ |c⟩⟨c|`, the controlled gate with the control on the right.
fn build_controlled_right(family: &[CMatrix], control_dim: usize) -> Result<CMatrix> {
    let mut total: Option<CMatrix> = None;
    for (k, u) in family.iter().enumerate() {
        let term = kron(u, basis_projector(control_dim, k).matrix())?;
        total = Some(match total {
            Some(t) => &t + &term,
            None => term,
        });
    }
    total.ok_or_else(|| Error::Dimension("empty family".into()))
}

/// `|Ψ₀⟩ = |φ_a⟩ ⊗ |Φ⟩ ⊗ |φ_b⟩` in layout order.
pub fn initial_state(spec: &CircuitSpec) -> Ket {
    spec.phi_a
        .kron(&spec.phi)
        .and_then(|k| k.kron(&spec.phi_b))
        .expect("layout validated")
}

/// `T(t₃,t₂) = 𝒰 ⊗ 𝒱` in layout order; the earlier intervals are the identity.
pub fn t3_evolution(spec: &CircuitSpec) -> Result<CMatrix> {
    let u = build_controlled(&spec.u_family, spec.n_settings_a())?;
    let v = build_controlled_right(&spec.v_family, spec.n_settings_b())?;
    kron(&u, &v)
}

/// `|Ψ₃⟩ = (𝒰 ⊗ 𝒱)|Ψ₀⟩`.
pub fn evolve_t0_t3(spec: &CircuitSpec) -> Result<Ket> {
    Ok(t3_evolution(spec)?.apply(&initial_state(spec)))
}

/// `P^(a)_A = U^(a)† [A] U^(a)`.
pub fn back_projector(spec: &CircuitSpec, a: usize, outcome: usize) -> Result<Projector> {
    let u = &spec.u_family[label_index(a, spec.n_settings_a())?];
    let d = spec.dim_a();
    basis_projector(d, outcome_index(outcome, d)?).conjugate_by(u)
}

/// `Q^(b)_B = V^(b)† [B] V^(b)`.
pub fn back_projector_b(spec: &CircuitSpec, b: usize, outcome: usize) -> Result<Projector> {
    let v = &spec.v_family[label_index(b, spec.n_settings_b())?];
    let d = spec.dim_b();
    basis_projector(d, outcome_index(outcome, d)?).conjugate_by(v)
}

/// `{P^(a)_A}_A` for a fixed `a`, on the single-factor `A` layout.
pub fn measurement_decomposition_a(spec: &CircuitSpec, a: usize) -> Result<DecompositionOfIdentity> {
    let ps = (0..spec.dim_a())
        .map(|k| back_projector(spec, a, k))
        .collect::<Result<_>>()?;
    DecompositionOfIdentity::new(ps, SpaceLayout::new([(REGISTER_A, spec.dim_a())])?)
}

pub fn measurement_decomposition_b(spec: &CircuitSpec, b: usize) -> Result<DecompositionOfIdentity> {
    let ps = (0..spec.dim_b())
        .map(|k| back_projector_b(spec, b, k))
        .collect::<Result<_>>()?;
    DecompositionOfIdentity::new(ps, SpaceLayout::new([(REGISTER_B, spec.dim_b())])?)
}

/// `Â_a = Σ_A A · P^(a)_A`.
pub fn observable_a(spec: &CircuitSpec, a: usize) -> Result<CMatrix> {
    let d = spec.dim_a();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m = &m + &back_projector(spec, a, k)?.matrix().scale_re(outcome_value(k, d));
    }
    Ok(m)
}

pub fn observable_b(spec: &CircuitSpec, b: usize) -> Result<CMatrix> {
    let d = spec.dim_b();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m = &m + &back_projector_b(spec, b, k)?.matrix().scale_re(outcome_value(k, d));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Born rule on `|Ψ₃⟩` with standard-basis projectors on all four factors.
    T3,
    /// `Pr(a) Pr(b) ⟨Φ| P^(a)_A ⊗ Q^(b)_B |Φ⟩`.
    Reduced,
}

/// `Pr(A, B, a, b)` over register outcome indices and ancilla labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    dim_a: usize,
    dim_b: usize,
    n_a: usize,
    n_b: usize,
    /// Row-major over `(A, B, a, b)` with ancillas 0-based.
    probs: Vec<f64>,
}

impl JointDistribution {
    fn offset(&self, oa: usize, ob: usize, a: usize, b: usize) -> usize {
        ((oa * self.dim_b + ob) * self.n_a + a) * self.n_b + b
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.dim_a, self.dim_b, self.n_a, self.n_b)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Pr(A, B, a, b)` with `a`, `b` as 1-based labels.
    pub fn prob(&self, oa: usize, ob: usize, a: usize, b: usize) -> Result<f64> {
        let ia = label_index(a, self.n_a)?;
        let ib = label_index(b, self.n_b)?;
        outcome_index(oa, self.dim_a)?;
        outcome_index(ob, self.dim_b)?;
        Ok(self.probs[self.offset(oa, ob, ia, ib)])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Pr(a, b)`.
    pub fn ancilla_marginal(&self, a: usize, b: usize) -> Result<f64> {
        let ia = label_index(a, self.n_a)?;
        let ib = label_index(b, self.n_b)?;
        let mut acc = 0.0;
        for oa in 0..self.dim_a {
            for ob in 0..self.dim_b {
                acc += self.probs[self.offset(oa, ob, ia, ib)];
            }
        }
        Ok(acc)
    }

    pub fn pr_a(&self, a: usize) -> Result<f64> {
        (1..=self.n_b).map(|b| self.ancilla_marginal(a, b)).sum()
    }

    pub fn pr_b(&self, b: usize) -> Result<f64> {
        (1..=self.n_a).map(|a| self.ancilla_marginal(a, b)).sum()
    }

    /// `Pr(A, B) = Σ_{a,b} Pr(A, B, a, b)`.
    pub fn outcome_marginal(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim_b]; self.dim_a];
        for (oa, row) in out.iter_mut().enumerate() {
            for (ob, cell) in row.iter_mut().enumerate() {
                for a in 0..self.n_a {
                    for b in 0..self.n_b {
                        *cell += self.probs[self.offset(oa, ob, a, b)];
                    }
                }
            }
        }
        out
    }

    /// `Pr(A, B | a, b)`.
    pub fn conditional(&self, a: usize, b: usize) -> Result<Vec<Vec<f64>>> {
        let norm = self.ancilla_marginal(a, b)?;
        if norm <= crate::quantum::MIN_CONDITIONING_PROB {
            return Err(Error::UndefinedConditional { prob: norm });
        }
        let (ia, ib) = (a - 1, b - 1);
        Ok((0..self.dim_a)
            .map(|oa| {
                (0..self.dim_b)
                    .map(|ob| self.probs[self.offset(oa, ob, ia, ib)] / norm)
                    .collect()
            })
            .collect())
    }

    /// `C(a,b) = Σ_{A,B} A·B·Pr(A,B|a,b)`.
    pub fn correlation(&self, a: usize, b: usize) -> Result<f64> {
        let cond = self.conditional(a, b)?;
        let mut acc = 0.0;
        for (oa, row) in cond.iter().enumerate() {
            for (ob, p) in row.iter().enumerate() {
                acc += outcome_value(oa, self.dim_a) * outcome_value(ob, self.dim_b) * p;
            }
        }
        Ok(acc)
    }

    /// `corr[a−1][b−1] = C(a, b)`.
    pub fn correlation_table(&self) -> Result<Vec<Vec<f64>>> {
        (1..=self.n_a)
            .map(|a| (1..=self.n_b).map(|b| self.correlation(a, b)).collect())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

pub fn joint_distribution(spec: &CircuitSpec, route: Route) -> Result<JointDistribution> {
    let (d_a, d_b) = (spec.dim_a(), spec.dim_b());
    let (n_a, n_b) = (spec.n_settings_a(), spec.n_settings_b());
    let mut probs = vec![0.0; d_a * d_b * n_a * n_b];
    match route {
        Route::T3 => {
            // ⟨Ψ₃|[a]⊗[A]⊗[B]⊗[b]|Ψ₃⟩ is |amplitude|² at the layout index (a, A, B, b)
            let psi3 = evolve_t0_t3(spec)?;
            for a in 0..n_a {
                for oa in 0..d_a {
                    for ob in 0..d_b {
                        for b in 0..n_b {
                            let flat = ((a * d_a + oa) * d_b + ob) * n_b + b;
                            probs[((oa * d_b + ob) * n_a + a) * n_b + b] =
                                psi3.amps()[flat].norm_sqr();
                        }
                    }
                }
            }
        }
        Route::Reduced => {
            for a in 1..=n_a {
                let pa = spec.pr_a(a)?;
                for b in 1..=n_b {
                    let pb = spec.pr_b(b)?;
                    for oa in 0..d_a {
                        let p = back_projector(spec, a, oa)?;
                        for ob in 0..d_b {
                            let q = back_projector_b(spec, b, ob)?;
                            let pq = kron(p.matrix(), q.matrix())?;
                            let v = spec.phi.expectation(&pq).re;
                            probs[((oa * d_b + ob) * n_a + (a - 1)) * n_b + (b - 1)] = pa * pb * v;
                        }
                    }
                }
            }
        }
    }
    for p in probs.iter_mut() {
        *p = p.max(0.0);
    }
    Ok(JointDistribution {
        dim_a: d_a,
        dim_b: d_b,
        n_a,
        n_b,
        probs,
    })
}

/// Runs the circuit with the ancillas measured at `t₁` and the unitaries
/// applied under classical control, enumerating every branch exactly. Returns
/// the largest entrywise deviation from the fully quantum circuit's
/// `Pr(A, B, a, b)`; the deferred-measurement principle makes it vanish.
pub fn deferred_equivalence(spec: &CircuitSpec) -> Result<f64> {
    let coherent = joint_distribution(spec, Route::T3)?;
    let classical = classically_controlled_distribution(spec)?;
    Ok(coherent.max_abs_diff(&classical))
}

/// Circuit (b): measure `a`, `b` on `|Ψ₀⟩`, collapse, apply `U^(a)`, `V^(b)`,
/// then measure `A`, `B`.
pub fn classically_controlled_distribution(spec: &CircuitSpec) -> Result<JointDistribution> {
    let layout = &spec.layout;
    let (d_a, d_b) = (spec.dim_a(), spec.dim_b());
    let (n_a, n_b) = (spec.n_settings_a(), spec.n_settings_b());
    let psi0 = initial_state(spec);
    let mut probs = vec![0.0; d_a * d_b * n_a * n_b];
    for a in 0..n_a {
        for b in 0..n_b {
            let ancilla_proj = kron_all([
                basis_projector(n_a, a).matrix(),
                &CMatrix::identity(d_a * d_b),
                basis_projector(n_b, b).matrix(),
            ])?;
            let branch = ancilla_proj.apply(&psi0);
            let p_branch = branch.norm_sqr();
            if p_branch <= 0.0 {
                continue;
            }
            let gates = layout.embed(
                &kron(&spec.u_family[a], &spec.v_family[b])?,
                &[REGISTER_A, REGISTER_B],
            )?;
            // Pr(a,b) · Pr(A,B | collapsed branch) = |amplitude of the unnormalized branch|²
            let after = gates.apply(&branch);
            for oa in 0..d_a {
                for ob in 0..d_b {
                    let flat = ((a * d_a + oa) * d_b + ob) * n_b + b;
                    probs[((oa * d_b + ob) * n_a + a) * n_b + b] = after.amps()[flat].norm_sqr();
                }
            }
        }
    }
    Ok(JointDistribution {
        dim_a: d_a,
        dim_b: d_b,
        n_a,
        n_b,
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{quantum_correlation, ChshSetting, Choice};
    use crate::quantum::{pauli, singlet};
    use crate::random::rng;

    const Z: [f64; 3] = [0.0, 0.0, 1.0];
    const X: [f64; 3] = [1.0, 0.0, 0.0];

    fn identity_spec(phi: Ket, phi_a: Ket, phi_b: Ket) -> CircuitSpec {
        let i2 = CMatrix::identity(2);
        CircuitSpec::new(phi, phi_a, phi_b, vec![i2.clone(); 2], vec![i2; 2]).unwrap()
    }

    #[test]
    fn controlled_gate_cases() {
        let i2 = CMatrix::identity(2);
        assert_eq!(build_controlled(&[i2.clone(), i2.clone()], 2).unwrap(), CMatrix::identity(4));
        let cnot = build_controlled(&[i2.clone(), pauli::x()], 2).unwrap();
        let expected = CMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]);
        let mut expected = expected;
        expected[(2, 3)] = crate::tensor::ONE;
        expected[(3, 2)] = crate::tensor::ONE;
        assert_eq!(cnot, expected);
        let mut r = rng(4);
        let fam = vec![random_unitary(&mut r, 2), random_unitary(&mut r, 2)];
        let cu = build_controlled(&fam, 2).unwrap();
        assert!((&cu.adjoint() * &cu).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        assert!(build_controlled(&fam, 3).is_err());
        assert!(matches!(
            build_controlled(&[i2, pauli::x().scale_re(2.0)], 2),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn identity_families_leave_state_alone() {
        let mut r = rng(9);
        let spec = identity_spec(random_ket(&mut r, 4), random_ket(&mut r, 2), random_ket(&mut r, 2));
        let psi3 = evolve_t0_t3(&spec).unwrap();
        assert!(psi3.max_abs_diff(&initial_state(&spec)) < 1e-15);
        assert_eq!(deferred_equivalence(&spec).unwrap(), 0.0);
    }

    #[test]
    fn evolution_preserves_norm() {
        let mut r = rng(10);
        let spec = CircuitSpec::random(&mut r, (2, 2), (2, 2)).unwrap();
        assert!((evolve_t0_t3(&spec).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_control_selects_one_unitary() {
        let mut r = rng(12);
        let phi = random_ket(&mut r, 4);
        let us = vec![random_unitary(&mut r, 2), random_unitary(&mut r, 2)];
        let vs = vec![CMatrix::identity(2); 2];
        let spec = CircuitSpec::new(phi.clone(), Ket::basis(2, 1), Ket::basis(2, 0), us.clone(), vs).unwrap();
        let psi3 = evolve_t0_t3(&spec).unwrap();
        let expected_reg = kron(&us[1], &CMatrix::identity(2)).unwrap().apply(&phi);
        let expected = Ket::basis(2, 1)
            .kron(&expected_reg)
            .unwrap()
            .kron(&Ket::basis(2, 0))
            .unwrap();
        assert!(psi3.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn back_projector_cases() {
        let phi = singlet();
        let i2 = CMatrix::identity(2);
        let spec = CircuitSpec::new(
            phi,
            uniform_superposition(2),
            uniform_superposition(2),
            vec![i2.clone(), pauli::hadamard()],
            vec![i2.clone(), i2],
        )
        .unwrap();
        assert_eq!(back_projector(&spec, 1, 0).unwrap(), basis_projector(2, 0));
        // H†[0]H projects onto (|0⟩+|1⟩)/√2
        let h = back_projector(&spec, 2, 0).unwrap();
        let expected = CMatrix::from_fn(2, 2, |_, _| crate::tensor::c(0.5, 0.0));
        assert!(h.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(back_projector(&spec, 3, 0).is_err());
        assert!(back_projector(&spec, 0, 0).is_err());
        assert!(back_projector(&spec, 1, 2).is_err());

        let mut r = rng(13);
        let spec = CircuitSpec::random(&mut r, (3, 2), (3, 2)).unwrap();
        for a in 1..=3 {
            let d = measurement_decomposition_a(&spec, a).unwrap();
            assert_eq!(d.len(), 3);
        }
    }

    #[test]
    fn singlet_reproduces_sample_space_probabilities() {
        let spec = CircuitSpec::new(
            singlet(),
            Ket::basis(2, 0),
            Ket::basis(2, 0),
            vec![measurement_unitary(&pauli::x()).unwrap(); 2],
            vec![measurement_unitary(&pauli::x()).unwrap(); 2],
        )
        .unwrap();
        for route in [Route::T3, Route::Reduced] {
            let m = joint_distribution(&spec, route).unwrap().outcome_marginal();
            let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
            for (x, y) in flat.iter().zip([0.0, 0.5, 0.5, 0.0]) {
                assert!((x - y).abs() < 1e-12, "{route:?}: {flat:?}");
            }
        }
    }

    #[test]
    fn routes_agree_and_ancillas_independent() {
        let mut r = rng(14);
        for dims in [((2, 2), (2, 2)), ((3, 2), (2, 3))] {
            let spec = CircuitSpec::random(&mut r, dims.0, dims.1).unwrap();
            let t3 = joint_distribution(&spec, Route::T3).unwrap();
            let red = joint_distribution(&spec, Route::Reduced).unwrap();
            assert!(t3.max_abs_diff(&red) < 1e-12);
            assert!((t3.total() - 1.0).abs() < 1e-10);
            for a in 1..=spec.n_settings_a() {
                for b in 1..=spec.n_settings_b() {
                    let joint = t3.ancilla_marginal(a, b).unwrap();
                    let prod = spec.pr_a(a).unwrap() * spec.pr_b(b).unwrap();
                    assert!((joint - prod).abs() < 1e-12);
                }
            }
            assert!(deferred_equivalence(&spec).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn uniform_ancillas_give_uniform_settings() {
        let mut r = rng(15);
        let spec = CircuitSpec::random(&mut r, (2, 2), (3, 3)).unwrap();
        let spec = CircuitSpec::new(
            spec.phi().clone(),
            uniform_superposition(3),
            uniform_superposition(3),
            spec.u_family().to_vec(),
            spec.v_family().to_vec(),
        )
        .unwrap();
        let jd = joint_distribution(&spec, Route::T3).unwrap();
        for a in 1..=3 {
            assert!((jd.pr_a(a).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circuit_correlations_match_operator_correlations() {
        let mut r = rng(16);
        let spec = CircuitSpec::random(&mut r, (2, 2), (2, 2)).unwrap();
        let jd = joint_distribution(&spec, Route::Reduced).unwrap();
        let setting = ChshSetting::new(
            [observable_a(&spec, 1).unwrap(), observable_a(&spec, 2).unwrap()],
            [observable_b(&spec, 1).unwrap(), observable_b(&spec, 2).unwrap()],
        )
        .unwrap();
        let choices = [Choice::Unprimed, Choice::Primed];
        for (a, ca) in choices.iter().enumerate() {
            for (b, cb) in choices.iter().enumerate() {
                let q = quantum_correlation(spec.phi(), &setting, *ca, *cb).unwrap();
                assert!((jd.correlation(a + 1, b + 1).unwrap() - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_state_factorizes() {
        let mut r = rng(17);
        let phi = random_ket(&mut r, 2).kron(&random_ket(&mut r, 2)).unwrap();
        let spec = CircuitSpec::random(&mut r, (2, 2), (2, 2)).unwrap().with_phi(phi).unwrap();
        let jd = joint_distribution(&spec, Route::T3).unwrap();
        for a in 1..=2 {
            for b in 1..=2 {
                let cond = jd.conditional(a, b).unwrap();
                for oa in 0..2 {
                    for ob in 0..2 {
                        let pa: f64 = cond[oa].iter().sum();
                        let pb: f64 = cond.iter().map(|row| row[ob]).sum();
                        assert!((cond[oa][ob] - pa * pb).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_axes_measure_the_right_observable() {
        let spec = CircuitSpec::qubit_axes(singlet(), &[Z, X], &[Z, X]).unwrap();
        assert!(observable_a(&spec, 1).unwrap().max_abs_diff(&pauli::z()) < 1e-12);
        assert!(observable_a(&spec, 2).unwrap().max_abs_diff(&pauli::x()) < 1e-12);
        let jd = joint_distribution(&spec, Route::T3).unwrap();
        let corr = jd.correlation_table().unwrap();
        assert!((corr[0][0] + 1.0).abs() < 1e-12);
        assert!(corr[0][1].abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let i2 = CMatrix::identity(2);
        let bad_len = CircuitSpec::new(singlet(), Ket::basis(2, 0), Ket::basis(2, 0), vec![i2.clone()], vec![i2.clone(); 2]);
        assert!(bad_len.is_err());
        let unnorm = CircuitSpec::new(
            singlet().scale(crate::tensor::c(2.0, 0.0)),
            Ket::basis(2, 0),
            Ket::basis(2, 0),
            vec![i2.clone(); 2],
            vec![i2; 2],
        );
        assert!(matches!(unnorm, Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn outcome_values_span_unit_interval() {
        assert_eq!(outcome_values(2), vec![1.0, -1.0]);
        assert_eq!(outcome_values(3), vec![1.0, 0.0, -1.0]);
    }
}
