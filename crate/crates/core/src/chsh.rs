//! Bell-CHSH analysis: local hidden-variable models and the operator form.
//!
//! The CHSH combination is always `C(a,b) + C(a,b′) + C(a′,b) − C(a′,b′)`;
//! callers that want another sign placement relabel the settings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{sign_operator, spin_operators};
use crate::random::random_simplex;
use crate::tensor::{commutator_norm, eig_hermitian, kron, spectral_norm, CMatrix, Ket, SpaceLayout};

const MODEL_TOL: f64 = 1e-12;

/// One value of the hidden variable with its weight and local response tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub weight: f64,
    /// `a_response[setting][k] = Pr(A = a_outcomes[k] | a, λ)`.
    pub a_response: Vec<Vec<f64>>,
    pub b_response: Vec<Vec<f64>>,
}

/// Factorizable stochastic model `Pr(A,B|a,b) = Σ_λ Pr(A|a,λ) Pr(B|b,λ) Pr(λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhvModel {
    a_settings: Vec<String>,
    b_settings: Vec<String>,
    a_outcomes: Vec<f64>,
    b_outcomes: Vec<f64>,
    lambdas: Vec<HiddenState>,
}

impl LhvModel {
    pub fn new(
        a_settings: Vec<String>,
        b_settings: Vec<String>,
        a_outcomes: Vec<f64>,
        b_outcomes: Vec<f64>,
        lambdas: Vec<HiddenState>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if lambdas.is_empty() || a_settings.is_empty() || b_settings.is_empty() {
            return bad("model needs at least one λ and one setting per side".into());
        }
        for outcomes in [&a_outcomes, &b_outcomes] {
            if outcomes.is_empty() || outcomes.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return bad(format!("outcome values {outcomes:?} must lie in [-1, 1]"));
            }
        }
        let total: f64 = lambdas.iter().map(|l| l.weight).sum();
        if lambdas.iter().any(|l| !(l.weight >= 0.0)) || (total - 1.0).abs() > MODEL_TOL {
            return bad(format!("λ weights must be nonnegative and sum to 1 (sum {total})"));
        }
        for (k, l) in lambdas.iter().enumerate() {
            let sides = [
                (&l.a_response, a_settings.len(), a_outcomes.len()),
                (&l.b_response, b_settings.len(), b_outcomes.len()),
            ];
            for (table, n_settings, n_outcomes) in sides {
                if table.len() != n_settings {
                    return bad(format!("λ{k}: response table has {} rows", table.len()));
                }
                for row in table {
                    let s: f64 = row.iter().sum();
                    if row.len() != n_outcomes
                        || row.iter().any(|p| !(*p >= 0.0))
                        || (s - 1.0).abs() > MODEL_TOL
                    {
                        return bad(format!("λ{k}: response row {row:?} is not a distribution"));
                    }
                }
            }
        }
        Ok(Self {
            a_settings,
            b_settings,
            a_outcomes,
            b_outcomes,
            lambdas,
        })
    }

    /// Random model with `n_lambda` hidden states and two settings per side.
    pub fn random(rng: &mut impl Rng, n_lambda: usize, outcomes: &[f64]) -> Self {
        let weights = random_simplex(rng, n_lambda);
        let table = |rng: &mut _| -> Vec<Vec<f64>> {
            (0..2).map(|_| random_simplex(rng, outcomes.len())).collect()
        };
        let lambdas = weights
            .into_iter()
            .map(|weight| HiddenState {
                weight,
                a_response: table(rng),
                b_response: table(rng),
            })
            .collect();
        Self::new(
            vec!["a".into(), "a'".into()],
            vec!["b".into(), "b'".into()],
            outcomes.to_vec(),
            outcomes.to_vec(),
            lambdas,
        )
        .expect("random simplex rows are distributions")
    }

    pub fn lambdas(&self) -> &[HiddenState] {
        &self.lambdas
    }

    pub fn a_settings(&self) -> &[String] {
        &self.a_settings
    }

    pub fn b_settings(&self) -> &[String] {
        &self.b_settings
    }

    pub fn a_outcomes(&self) -> &[f64] {
        &self.a_outcomes
    }

    pub fn b_outcomes(&self) -> &[f64] {
        &self.b_outcomes
    }

    fn setting(list: &[String], label: &str) -> Result<usize> {
        list.iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn a_index(&self, label: &str) -> Result<usize> {
        Self::setting(&self.a_settings, label)
    }

    pub fn b_index(&self, label: &str) -> Result<usize> {
        Self::setting(&self.b_settings, label)
    }

    /// `A_a(λ) = Σ_A A Pr(A|a,λ)`.
    pub fn mean_a(&self, lambda: usize, a: usize) -> f64 {
        dot(&self.a_outcomes, &self.lambdas[lambda].a_response[a])
    }

    pub fn mean_b(&self, lambda: usize, b: usize) -> f64 {
        dot(&self.b_outcomes, &self.lambdas[lambda].b_response[b])
    }

    pub fn correlation_by_index(&self, a: usize, b: usize) -> f64 {
        (0..self.lambdas.len())
            .map(|l| self.lambdas[l].weight * self.mean_a(l, a) * self.mean_b(l, b))
            .sum()
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `C(a,b) = Σ_λ A_a(λ) B_b(λ) Pr(λ)`.
pub fn lhv_correlation(model: &LhvModel, a: &str, b: &str) -> Result<f64> {
    Ok(model.correlation_by_index(model.a_index(a)?, model.b_index(b)?))
}

pub fn lhv_chsh(model: &LhvModel, a: &str, a2: &str, b: &str, b2: &str) -> Result<f64> {
    let (ia, ia2) = (model.a_index(a)?, model.a_index(a2)?);
    let (ib, ib2) = (model.b_index(b)?, model.b_index(b2)?);
    let corr = |i, j| model.correlation_by_index(i, j);
    Ok(corr(ia, ib) + corr(ia, ib2) + corr(ia2, ib) - corr(ia2, ib2))
}

/// One evaluated CHSH combination over a correlation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAssignment {
    pub a: usize,
    pub a_prime: usize,
    pub b: usize,
    pub b_prime: usize,
    pub value: f64,
}

/// Every CHSH combination with `a ≠ a′`, `b ≠ b′` drawn from `corr[a][b]`.
pub fn chsh_assignments(corr: &[Vec<f64>]) -> Vec<ChshAssignment> {
    let n_a = corr.len();
    let n_b = corr.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for a in 0..n_a {
        for a_prime in (0..n_a).filter(|&x| x != a) {
            for b in 0..n_b {
                for b_prime in (0..n_b).filter(|&x| x != b) {
                    let value = corr[a][b] + corr[a][b_prime] + corr[a_prime][b]
                        - corr[a_prime][b_prime];
                    out.push(ChshAssignment {
                        a,
                        a_prime,
                        b,
                        b_prime,
                        value,
                    });
                }
            }
        }
    }
    out
}

/// Largest `|CHSH|` among [`chsh_assignments`], or `None` with fewer than two
/// settings on a side.
pub fn max_abs_chsh(corr: &[Vec<f64>]) -> Option<ChshAssignment> {
    chsh_assignments(corr)
        .into_iter()
        .max_by(|x, y| x.value.abs().total_cmp(&y.value.abs()))
}

/// Which of the two settings on a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Unprimed,
    Primed,
}

impl Choice {
    fn index(self) -> usize {
        match self {
            Choice::Unprimed => 0,
            Choice::Primed => 1,
        }
    }
}

const SPECTRUM_TOL: f64 = 1e-10;

/// Local observables `Â_a, Â_a′` on A and `B̂_b, B̂_b′` on B.
#[derive(Clone, Debug)]
pub struct ChshSetting {
    a_ops: [CMatrix; 2],
    b_ops: [CMatrix; 2],
    layout: SpaceLayout,
}

impl ChshSetting {
    pub fn new(a_ops: [CMatrix; 2], b_ops: [CMatrix; 2]) -> Result<Self> {
        let da = a_ops[0].rows();
        let db = b_ops[0].rows();
        let sided = a_ops.iter().map(|op| (op, da)).chain(b_ops.iter().map(|op| (op, db)));
        for (op, want) in sided {
            if !op.is_square() || op.rows() != want {
                return Err(Error::Dimension("setting operators must be square and share a side dimension".into()));
            }
            let eig = eig_hermitian(op)?;
            let lo = eig.values[0];
            let hi = *eig.values.last().expect("nonempty");
            if lo < -1.0 - SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "observable spectrum [{lo}, {hi}] leaves [-1, 1]"
                )));
            }
        }
        let layout = SpaceLayout::new([("A", da), ("B", db)])?;
        Ok(Self { a_ops, b_ops, layout })
    }

    /// Sign operators of two spin components per side.
    pub fn from_sign_operators(a: [&CMatrix; 2], b: [&CMatrix; 2]) -> Result<Self> {
        let s = |m: &CMatrix| sign_operator(m).map(|s| s.a_hat);
        Self::new([s(a[0])?, s(a[1])?], [s(b[0])?, s(b[1])?])
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn a_op(&self, i: Choice) -> &CMatrix {
        &self.a_ops[i.index()]
    }

    pub fn b_op(&self, j: Choice) -> &CMatrix {
        &self.b_ops[j.index()]
    }

    /// True when `[Â_a, Â_a′]` and `[B̂_b, B̂_b′]` both vanish within `tol`.
    pub fn local_pairs_commute(&self, tol: f64) -> bool {
        let ca = commutator_norm(&self.a_ops[0], &self.a_ops[1]).unwrap_or(f64::INFINITY);
        let cb = commutator_norm(&self.b_ops[0], &self.b_ops[1]).unwrap_or(f64::INFINITY);
        ca <= tol && cb <= tol
    }

    /// `Ŵ = Â_a⊗B̂_b + Â_a⊗B̂_b′ + Â_a′⊗B̂_b − Â_a′⊗B̂_b′`.
    pub fn w_hat(&self) -> CMatrix {
        let k = |i: usize, j: usize| kron(&self.a_ops[i], &self.b_ops[j]).expect("layout validated");
        &(&(&k(0, 0) + &k(0, 1)) + &k(1, 0)) - &k(1, 1)
    }
}

/// `⟨ψ| Â_i ⊗ B̂_j |ψ⟩`.
pub fn quantum_correlation(state: &Ket, setting: &ChshSetting, i: Choice, j: Choice) -> Result<f64> {
    if state.dim() != setting.layout.total_dim() {
        return Err(Error::Dimension(format!(
            "state of dim {} for a setting of dim {}",
            state.dim(),
            setting.layout.total_dim()
        )));
    }
    state.ensure_normalized()?;
    let op = kron(setting.a_op(i), setting.b_op(j))?;
    let v = state.expectation(&op);
    if v.im.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "correlation has imaginary part {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}

#[derive(Clone, Debug)]
pub struct ChshSpectrum {
    pub w_hat: CMatrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
}

pub fn chsh_operator_spectrum(setting: &ChshSetting) -> Result<ChshSpectrum> {
    let w_hat = setting.w_hat();
    let eig = eig_hermitian(&w_hat)?;
    let min_eig = eig.values[0];
    let max_eig = *eig.values.last().expect("nonempty");
    Ok(ChshSpectrum {
        w_hat,
        eigenvalues: eig.values,
        min_eig,
        max_eig,
    })
}

/// `‖[Lx, Ly]‖ · J / ‖Lz‖` for normalized spin operators `L = J/J`; identically 1.
pub fn normalized_commutator_ratio(dim: usize) -> Result<f64> {
    let s = spin_operators(dim)?;
    let j = s.spin();
    let lx = s.jx.scale_re(1.0 / j);
    let ly = s.jy.scale_re(1.0 / j);
    let lz = s.jz.scale_re(1.0 / j);
    Ok(commutator_norm(&lx, &ly)? * j / spectral_norm(&lz))
}
