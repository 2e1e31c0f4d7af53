//! A-histories in a tripartite world `A ⊗ B ⊗ C` whose dynamics never couple
//! `A` to `BC`. Whatever `C` starts in and however `B` and `C` interact, the
//! decoherence functional of `A` alone is unchanged.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{
    consistency_of, decoherence_matrix, full_decoherence, HistoryFamily, InitialState,
    DEFAULT_CONSISTENCY_TOL,
};
use crate::quantum::{DecompositionOfIdentity, Projector};
use crate::random::{random_ket, random_unitary};
use crate::tensor::{kron, partial_trace, CMatrix, Ket, SpaceLayout, C64};

pub const SYSTEM_A: &str = "A";
pub const SYSTEM_B: &str = "B";
pub const SYSTEM_C: &str = "C";
/// Agreement required between the full-state and reduced forms.
pub const DUAL_FORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const FACTOR_TOL: f64 = 1e-10;

/// What `C` starts in and how `B` and `C` evolve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub phi_c: Ket,
    pub t_bc: Vec<CMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteScenario {
    layout: SpaceLayout,
    t_a: Vec<CMatrix>,
    t_bc: Vec<CMatrix>,
    phi_ab: Ket,
    phi_c: Ket,
    a_events: Vec<DecompositionOfIdentity>,
}

impl TripartiteScenario {
    /// One `T_A`, one `T_BC` and one A-only decomposition per interval.
    pub fn new(
        dims: (usize, usize, usize),
        t_a: Vec<CMatrix>,
        t_bc: Vec<CMatrix>,
        phi_ab: Ket,
        phi_c: Ket,
        a_events: Vec<DecompositionOfIdentity>,
    ) -> Result<Self> {
        let (d_a, d_b, d_c) = dims;
        let layout = SpaceLayout::new([(SYSTEM_A, d_a), (SYSTEM_B, d_b), (SYSTEM_C, d_c)])?;
        let n = a_events.len();
        if t_a.len() != n || t_bc.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} event times need {n} A and {n} BC evolutions, got {} and {}",
                t_a.len(),
                t_bc.len()
            )));
        }
        for t in &t_a {
            check_unitary(t, d_a)?;
        }
        for t in &t_bc {
            check_unitary(t, d_b * d_c)?;
        }
        for d in &a_events {
            if d.dim() != d_a {
                return Err(Error::Dimension(format!(
                    "A-events must act on A alone (dim {d_a}), got dim {}",
                    d.dim()
                )));
            }
        }
        if phi_ab.dim() != d_a * d_b || phi_c.dim() != d_c {
            return Err(Error::Dimension("initial states do not match the layout".into()));
        }
        phi_ab.ensure_normalized()?;
        phi_c.ensure_normalized()?;
        Ok(Self {
            layout,
            t_a,
            t_bc,
            phi_ab,
            phi_c,
            a_events,
        })
    }

    /// Accepts whole-space evolutions and splits each as `T_A ⊗ T_BC`;
    /// anything coupling `A` to `BC` is rejected.
    pub fn from_full_evolutions(
        dims: (usize, usize, usize),
        evolutions: &[CMatrix],
        phi_ab: Ket,
        phi_c: Ket,
        a_events: Vec<DecompositionOfIdentity>,
    ) -> Result<Self> {
        let (d_a, d_b, d_c) = dims;
        let (t_a, t_bc) = evolutions
            .iter()
            .map(|t| split_product(t, d_a, d_b * d_c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Self::new(dims, t_a, t_bc, phi_ab, phi_c, a_events)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let d = self.layout.dims();
        (d[0], d[1], d[2])
    }

    pub fn n_times(&self) -> usize {
        self.a_events.len()
    }

    pub fn phi_ab(&self) -> &Ket {
        &self.phi_ab
    }

    pub fn phi_c(&self) -> &Ket {
        &self.phi_c
    }

    pub fn t_a(&self) -> &[CMatrix] {
        &self.t_a
    }

    pub fn t_bc(&self) -> &[CMatrix] {
        &self.t_bc
    }

    pub fn a_events(&self) -> &[DecompositionOfIdentity] {
        &self.a_events
    }

    pub fn variation(&self) -> Variation {
        Variation {
            phi_c: self.phi_c.clone(),
            t_bc: self.t_bc.clone(),
        }
    }

    pub fn with_variation(&self, v: &Variation) -> Result<Self> {
        Self::new(
            self.dims(),
            self.t_a.clone(),
            v.t_bc.clone(),
            self.phi_ab.clone(),
            v.phi_c.clone(),
            self.a_events.clone(),
        )
    }

    /// `|Φ⟩_AB ⊗ |φ⟩_C`.
    pub fn initial_state(&self) -> Result<Ket> {
        self.phi_ab.kron(&self.phi_c)
    }

    /// `T_A ⊗ T_BC` per interval.
    pub fn full_evolutions(&self) -> Result<Vec<CMatrix>> {
        self.t_a
            .iter()
            .zip(&self.t_bc)
            .map(|(a, bc)| kron(a, bc))
            .collect()
    }

    /// A-events lifted to `P ⊗ I_BC` on the whole space.
    pub fn full_family(&self) -> Result<HistoryFamily> {
        let (_, d_b, d_c) = self.dims();
        let events = self
            .a_events
            .iter()
            .map(|d| {
                let ps = d
                    .projectors()
                    .iter()
                    .map(|p| p.kron(&Projector::identity(d_b * d_c)))
                    .collect::<Result<_>>()?;
                DecompositionOfIdentity::new(ps, self.layout.clone())
            })
            .collect::<Result<_>>()?;
        HistoryFamily::new(
            self.layout.clone(),
            InitialState::Pure(self.initial_state()?),
            times(self.n_times()),
            events,
            self.full_evolutions()?,
        )
    }

    /// The same histories on `A` alone, started from `ρ_A`.
    pub fn reduced_family(&self) -> Result<HistoryFamily> {
        let a_layout = self.layout.sub_layout(&[SYSTEM_A])?;
        let events = self
            .a_events
            .iter()
            .map(|d| DecompositionOfIdentity::new(d.projectors().to_vec(), a_layout.clone()))
            .collect::<Result<_>>()?;
        HistoryFamily::new(
            a_layout,
            InitialState::Mixed(reduced_rho_a(self)?),
            times(self.n_times()),
            events,
            self.t_a.clone(),
        )
    }
}

fn times(n: usize) -> Vec<f64> {
    (0..=n).map(|t| t as f64).collect()
}

fn check_unitary(t: &CMatrix, dim: usize) -> Result<()> {
    if !t.is_square() || t.rows() != dim {
        return Err(Error::Dimension(format!(
            "evolution is {}×{}, expected {dim}×{dim}",
            t.rows(),
            t.cols()
        )));
    }
    t.ensure_unitary(UNITARY_TOL)
}

/// Splits `t = x ⊗ y` with `x` unitary on the left factor, via the rank-one
/// test on the realigned matrix `R[(i,k),(j,l)] = t[(i,j),(k,l)]`.
pub fn split_product(t: &CMatrix, d_left: usize, d_right: usize) -> Result<(CMatrix, CMatrix)> {
    let n = d_left * d_right;
    if !t.is_square() || t.rows() != n {
        return Err(Error::Dimension(format!("expected a {n}×{n} evolution")));
    }
    let realigned = |i: usize, k: usize, j: usize, l: usize| t[(i * d_right + j, k * d_right + l)];
    // pivot on the largest entry
    let mut best = (0, 0, 0, 0);
    let mut best_abs = -1.0;
    for i in 0..d_left {
        for k in 0..d_left {
            for j in 0..d_right {
                for l in 0..d_right {
                    let v = realigned(i, k, j, l).norm();
                    if v > best_abs {
                        best_abs = v;
                        best = (i, k, j, l);
                    }
                }
            }
        }
    }
    let (bi, bk, bj, bl) = best;
    let pivot = realigned(bi, bk, bj, bl);
    let mut x = CMatrix::from_fn(d_left, d_left, |i, k| realigned(i, k, bj, bl));
    let mut y = CMatrix::from_fn(d_right, d_right, |j, l| realigned(bi, bk, j, l) / pivot);
    let residual = kron(&x, &y)?.max_abs_diff(t);
    if residual > FACTOR_TOL {
        return Err(Error::NonFactorizingDynamics { residual });
    }
    let s = ((&x.adjoint() * &x).trace().re / d_left as f64).sqrt();
    x = x.scale_re(1.0 / s);
    y = y.scale_re(s);
    Ok((x, y))
}

/// `ρ_A = Tr_B |Φ⟩⟨Φ|`.
pub fn reduced_rho_a(scn: &TripartiteScenario) -> Result<CMatrix> {
    let ab = scn.layout.sub_layout(&[SYSTEM_A, SYSTEM_B])?;
    partial_trace(&scn.phi_ab.density(), &ab, &[SYSTEM_A])
}

/// `ρ_A = Tr_BC |Ψ₀⟩⟨Ψ₀|`, through the whole tripartite state.
pub fn reduced_rho_a_tripartite(scn: &TripartiteScenario) -> Result<CMatrix> {
    partial_trace(&scn.initial_state()?.density(), &scn.layout, &[SYSTEM_A])
}

/// `𝒥(α, α′)` for A-histories, computed on the whole space and again from
/// `ρ_A`; the two must agree to [`DUAL_FORM_TOL`].
pub fn a_history_functional(scn: &TripartiteScenario, alpha: &[usize], alpha_prime: &[usize]) -> Result<C64> {
    let full = crate::histories::decoherence_functional(&scn.full_family()?, alpha, alpha_prime)?;
    let reduced = crate::histories::decoherence_functional(&scn.reduced_family()?, alpha, alpha_prime)?;
    let deviation = (full - reduced).norm();
    if deviation > DUAL_FORM_TOL {
        return Err(Error::DualFormMismatch { deviation });
    }
    Ok(full)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ADecoherence {
    /// Every `𝒥(α, α′)` in history order, from the whole-space form.
    pub matrix: CMatrix,
    pub dual_form_deviation: f64,
    pub consistent: bool,
}

/// The full A-history decoherence matrix, cross-checked against the reduced form.
pub fn a_decoherence(scn: &TripartiteScenario) -> Result<ADecoherence> {
    let family = scn.full_family()?;
    let full = full_decoherence(&family)?;
    let reduced = full_decoherence(&scn.reduced_family()?)?;
    let deviation = full.max_abs_diff(&reduced);
    if deviation > DUAL_FORM_TOL {
        return Err(Error::DualFormMismatch { deviation });
    }
    let consistent = consistency_of(&decoherence_matrix(&family)?, DEFAULT_CONSISTENCY_TOL).consistent;
    Ok(ADecoherence {
        matrix: full,
        dual_form_deviation: deviation,
        consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    /// Largest entrywise change of the A-history matrix across variations.
    pub max_deviation: f64,
    pub max_dual_form_deviation: f64,
    /// Consistency of the A-family under each variation.
    pub consistent: Vec<bool>,
    pub variations: usize,
}

impl LocalityReport {
    pub fn consistency_invariant(&self) -> bool {
        self.consistent.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn locality_invariance(scn: &TripartiteScenario, variations: &[Variation]) -> Result<LocalityReport> {
    if variations.len() < 2 {
        return Err(Error::InvalidArgument("need at least two variations".into()));
    }
    let mut reference: Option<CMatrix> = None;
    let mut max_deviation: f64 = 0.0;
    let mut max_dual: f64 = 0.0;
    let mut consistent = Vec::with_capacity(variations.len());
    for v in variations {
        let d = a_decoherence(&scn.with_variation(v)?)?;
        max_dual = max_dual.max(d.dual_form_deviation);
        consistent.push(d.consistent);
        match &reference {
            None => reference = Some(d.matrix),
            Some(r) => max_deviation = max_deviation.max(r.max_abs_diff(&d.matrix)),
        }
    }
    Ok(LocalityReport {
        max_deviation,
        max_dual_form_deviation: max_dual,
        consistent,
        variations: variations.len(),
    })
}

/// Haar-random `φ_C` and `T_BC` for every interval.
pub fn random_variation(rng: &mut impl Rng, scn: &TripartiteScenario) -> Variation {
    let (_, d_b, d_c) = scn.dims();
    Variation {
        phi_c: random_ket(rng, d_c),
        t_bc: (0..scn.n_times()).map(|_| random_unitary(rng, d_b * d_c)).collect(),
    }
}

/// Seeded scenario with random `Φ_AB`, `T_A` and A-event bases.
pub fn random_scenario(rng: &mut impl Rng, dims: (usize, usize, usize), n_times: usize) -> Result<TripartiteScenario> {
    let (d_a, d_b, d_c) = dims;
    let a_layout = SpaceLayout::new([(SYSTEM_A, d_a)])?;
    let a_events = (0..n_times)
        .map(|_| {
            let u = random_unitary(rng, d_a);
            let basis: Vec<Ket> = (0..d_a).map(|k| u.column(k)).collect();
            DecompositionOfIdentity::from_basis(&basis, a_layout.clone())
        })
        .collect::<Result<_>>()?;
    let t_a = (0..n_times).map(|_| random_unitary(rng, d_a)).collect();
    let t_bc = (0..n_times).map(|_| random_unitary(rng, d_b * d_c)).collect();
    TripartiteScenario::new(
        dims,
        t_a,
        t_bc,
        random_ket(rng, d_a * d_b),
        random_ket(rng, d_c),
        a_events,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_controlled;
    use crate::quantum::{pauli, singlet};
    use crate::random::rng;
    use crate::tensor::c;

    fn a_layout() -> SpaceLayout {
        SpaceLayout::new([(SYSTEM_A, 2)]).unwrap()
    }

    #[test]
    fn singlet_gives_maximally_mixed_a() {
        let mut r = rng(50);
        let mut scn = random_scenario(&mut r, (2, 2, 2), 2).unwrap();
        scn = TripartiteScenario::new((2, 2, 2), scn.t_a.clone(), scn.t_bc.clone(), singlet(), scn.phi_c.clone(), scn.a_events.clone()).unwrap();
        // basis-sum oracle: ρ_A[i][k] = Σ_j Φ[i,j] conj(Φ[k,j])
        let phi = singlet();
        let oracle = CMatrix::from_fn(2, 2, |i, k| {
            (0..2).map(|j| phi.amps()[i * 2 + j] * phi.amps()[k * 2 + j].conj()).sum()
        });
        let rho = reduced_rho_a(&scn).unwrap();
        assert!(rho.max_abs_diff(&oracle) < 1e-15);
        assert!(rho.max_abs_diff(&CMatrix::identity(2).scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn product_state_gives_pure_a() {
        let mut r = rng(51);
        let u = random_ket(&mut r, 2);
        let v = random_ket(&mut r, 2);
        let base = random_scenario(&mut r, (2, 2, 2), 1).unwrap();
        let scn = TripartiteScenario::new((2, 2, 2), base.t_a.clone(), base.t_bc.clone(), u.kron(&v).unwrap(), base.phi_c.clone(), base.a_events.clone()).unwrap();
        assert!(reduced_rho_a(&scn).unwrap().max_abs_diff(&u.density()) < 1e-15);
    }

    #[test]
    fn both_rho_routes_agree() {
        let mut r = rng(52);
        for dims in [(2, 2, 2), (2, 3, 2), (3, 2, 3)] {
            let scn = random_scenario(&mut r, dims, 2).unwrap();
            let x = reduced_rho_a(&scn).unwrap();
            let y = reduced_rho_a_tripartite(&scn).unwrap();
            assert!(x.max_abs_diff(&y) < 1e-14);
            assert!((x.trace().re - 1.0).abs() < 1e-14);
            let eig = crate::tensor::eig_hermitian(&x).unwrap();
            assert!(eig.values[0] >= -1e-10);
        }
    }

    #[test]
    fn trivial_events_give_unit_functional() {
        let mut r = rng(53);
        let base = random_scenario(&mut r, (2, 2, 2), 3).unwrap();
        let trivial = vec![DecompositionOfIdentity::trivial(a_layout()); 3];
        let scn = TripartiteScenario::new((2, 2, 2), base.t_a.clone(), base.t_bc.clone(), base.phi_ab.clone(), base.phi_c.clone(), trivial).unwrap();
        let j = a_history_functional(&scn, &[0, 0, 0], &[0, 0, 0]).unwrap();
        assert!((j - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dual_forms_agree_on_three_times() {
        let mut r = rng(54);
        let scn = random_scenario(&mut r, (2, 2, 2), 3).unwrap();
        let d = a_decoherence(&scn).unwrap();
        assert!(d.dual_form_deviation < 1e-13);
        let diag_sum: f64 = (0..d.matrix.rows()).map(|i| d.matrix[(i, i)].re).sum();
        assert!((diag_sum - 1.0).abs() < 1e-12);
        for i in 0..d.matrix.rows() {
            assert!(d.matrix[(i, i)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn phi_c_alone_does_not_matter() {
        let mut r = rng(55);
        let scn = random_scenario(&mut r, (2, 2, 2), 2).unwrap();
        let vs = vec![
            scn.variation(),
            Variation {
                phi_c: random_ket(&mut r, 2),
                t_bc: scn.t_bc.clone(),
            },
        ];
        let rep = locality_invariance(&scn, &vs).unwrap();
        assert!(rep.max_deviation <= 1e-12);
    }

    #[test]
    fn entangling_bc_gates_do_not_matter() {
        let mut r = rng(56);
        for n in [2, 3] {
            let scn = random_scenario(&mut r, (2, 2, 2), n).unwrap();
            let cnot = build_controlled(&[CMatrix::identity(2), pauli::x()], 2).unwrap();
            let mut vs = vec![
                Variation {
                    phi_c: Ket::basis(2, 0),
                    t_bc: vec![cnot.clone(); n],
                },
                Variation {
                    phi_c: Ket::basis(2, 1),
                    t_bc: vec![CMatrix::identity(4); n],
                },
            ];
            vs.extend((0..10).map(|_| random_variation(&mut r, &scn)));
            let rep = locality_invariance(&scn, &vs).unwrap();
            assert!(rep.max_deviation <= 1e-12, "{rep:?}");
            assert!(rep.max_dual_form_deviation <= 1e-12);
            assert!(rep.consistency_invariant());
        }
    }

    #[test]
    fn coupling_a_to_c_is_rejected() {
        let mut r = rng(57);
        let base = random_scenario(&mut r, (2, 2, 2), 1).unwrap();
        // CNOT from A onto C with B idle
        let mut coupling = CMatrix::zeros(8, 8);
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    let out = a * 4 + b * 2 + (cc ^ a);
                    coupling[(out, a * 4 + b * 2 + cc)] = c(1.0, 0.0);
                }
            }
        }
        let err = TripartiteScenario::from_full_evolutions((2, 2, 2), &[coupling], base.phi_ab.clone(), base.phi_c.clone(), base.a_events.clone());
        assert!(matches!(err, Err(Error::NonFactorizingDynamics { .. })));
        // a genuine product splits back
        let full = kron(&base.t_a[0], &base.t_bc[0]).unwrap();
        let ok = TripartiteScenario::from_full_evolutions((2, 2, 2), &[full.clone()], base.phi_ab.clone(), base.phi_c.clone(), base.a_events.clone()).unwrap();
        assert!(ok.full_evolutions().unwrap()[0].max_abs_diff(&full) < 1e-13);
        assert!(ok.t_a()[0].is_unitary(1e-12));
    }

    #[test]
    fn scenario_validation() {
        let mut r = rng(58);
        let base = random_scenario(&mut r, (2, 2, 2), 1).unwrap();
        // an AB event is not an A-event
        let ab = DecompositionOfIdentity::standard_basis(SpaceLayout::new([("A", 2), ("B", 2)]).unwrap());
        assert!(TripartiteScenario::new((2, 2, 2), base.t_a.clone(), base.t_bc.clone(), base.phi_ab.clone(), base.phi_c.clone(), vec![ab]).is_err());
        assert!(locality_invariance(&base, &[base.variation()]).is_err());
        let bad = TripartiteScenario::new((2, 2, 2), vec![pauli::x().scale_re(2.0)], base.t_bc.clone(), base.phi_ab.clone(), base.phi_c.clone(), base.a_events.clone());
        assert!(matches!(bad, Err(Error::NotUnitary { .. })));
    }
}
