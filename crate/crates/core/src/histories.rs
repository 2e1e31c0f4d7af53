//! Consistent histories: chain operators, decoherence functionals, consistency
//! checks and the probability tables they induce.
//!
//! A [`HistoryFamily`] is an initial state followed by a decomposition of the
//! identity at each later time, with unitary evolution in between. A history
//! `α` picks one projector per time and its chain operator is
//! `K(α) = P_n^(α_n) T(t_n,t_{n−1}) ⋯ P_1^(α_1) T(t_1,t_0)`.

use serde::{Deserialize, Serialize};

use crate::chsh::{HiddenState, LhvModel};
use crate::circuit::{
    back_projector, back_projector_b, initial_state, outcome_values, CircuitSpec, ANCILLA_A,
    ANCILLA_B, REGISTER_A, REGISTER_B,
};
use crate::error::{Error, Result};
use crate::quantum::{basis_projector, DecompositionOfIdentity, Projector, MIN_CONDITIONING_PROB};
use crate::tensor::{c, kron, kron_all, CMatrix, Ket, SpaceLayout, C64};

/// At most this many event times after `t₀`.
pub const MAX_EVENT_TIMES: usize = 4;
/// Default relative consistency tolerance.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-10;
const EVOLUTION_TOL: f64 = 1e-10;

/// Initial condition of a family: a ket, or a density operator when only a
/// subsystem's reduced state is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Pure(Ket),
    Mixed(CMatrix),
}

impl InitialState {
    fn dim(&self) -> usize {
        match self {
            InitialState::Pure(k) => k.dim(),
            InitialState::Mixed(m) => m.rows(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryFamily {
    layout: SpaceLayout,
    initial: InitialState,
    times: Vec<f64>,
    events: Vec<DecompositionOfIdentity>,
    evolutions: Vec<CMatrix>,
}

impl HistoryFamily {
    /// `times` holds `t₀ < t₁ < … < t_n`; `events[j]` sits at `t_{j+1}` and
    /// `evolutions[j]` is `T(t_{j+1}, t_j)`.
    pub fn new(
        layout: SpaceLayout,
        initial: InitialState,
        times: Vec<f64>,
        events: Vec<DecompositionOfIdentity>,
        evolutions: Vec<CMatrix>,
    ) -> Result<Self> {
        let dim = layout.total_dim();
        let n = events.len();
        if n == 0 || n > MAX_EVENT_TIMES {
            return Err(Error::InvalidArgument(format!(
                "families need 1..={MAX_EVENT_TIMES} event times, got {n}"
            )));
        }
        if times.len() != n + 1 || evolutions.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} event times need {} times and {n} evolutions",
                n + 1
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("times must increase strictly".into()));
        }
        if initial.dim() != dim {
            return Err(Error::Dimension(format!(
                "initial state of dim {} on a layout of dim {dim}",
                initial.dim()
            )));
        }
        match &initial {
            InitialState::Pure(k) => k.ensure_normalized()?,
            InitialState::Mixed(rho) => {
                if !rho.is_hermitian(1e-10) {
                    return Err(Error::NotHermitian {
                        residual: rho.hermitian_residual(),
                    });
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!("density operator has trace {tr}")));
                }
            }
        }
        for d in &events {
            if d.dim() != dim {
                return Err(Error::Dimension(format!(
                    "decomposition of dim {} on a layout of dim {dim}",
                    d.dim()
                )));
            }
        }
        for t in &evolutions {
            if !t.is_square() || t.rows() != dim {
                return Err(Error::Dimension("evolution has the wrong shape".into()));
            }
            t.ensure_unitary(EVOLUTION_TOL)?;
        }
        Ok(Self {
            layout,
            initial,
            times,
            events,
            evolutions,
        })
    }

    /// Events at `t = 1, 2, …` with trivial dynamics.
    pub fn with_trivial_dynamics(
        layout: SpaceLayout,
        initial: InitialState,
        events: Vec<DecompositionOfIdentity>,
    ) -> Result<Self> {
        let dim = layout.total_dim();
        let n = events.len();
        Self::new(
            layout,
            initial,
            (0..=n).map(|t| t as f64).collect(),
            events,
            vec![CMatrix::identity(dim); n],
        )
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[DecompositionOfIdentity] {
        &self.events
    }

    pub fn evolutions(&self) -> &[CMatrix] {
        &self.evolutions
    }

    pub fn n_times(&self) -> usize {
        self.events.len()
    }

    /// Outcome count per event time.
    pub fn shape(&self) -> Vec<usize> {
        self.events.iter().map(|d| d.len()).collect()
    }

    /// Every history, last time varying fastest.
    pub fn histories(&self) -> Vec<Vec<usize>> {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        (0..total).map(|flat| unflatten(flat, &shape)).collect()
    }

    fn check_history(&self, alpha: &[usize]) -> Result<()> {
        if alpha.len() != self.events.len() {
            return Err(Error::InvalidArgument(format!(
                "history of length {} for a {}-time family",
                alpha.len(),
                self.events.len()
            )));
        }
        for (j, (&k, d)) in alpha.iter().zip(&self.events).enumerate() {
            if k >= d.len() {
                return Err(Error::UnknownLabel(format!(
                    "outcome {k} at time {} (only {} projectors)",
                    j + 1,
                    d.len()
                )));
            }
        }
        Ok(())
    }

    /// `K(α)|Ψ₀⟩` for a pure initial state.
    fn chain_ket(&self, psi: &Ket, alpha: &[usize]) -> Ket {
        let mut v = psi.clone();
        for (j, &k) in alpha.iter().enumerate() {
            v = self.evolutions[j].apply(&v);
            v = self.events[j].projectors()[k].matrix().apply(&v);
        }
        v
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (slot, &n) in out.iter_mut().zip(shape).rev() {
        *slot = flat % n;
        flat /= n;
    }
    out
}

fn flatten(index: &[usize], shape: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// `K(α)`.
pub fn chain_operator(family: &HistoryFamily, alpha: &[usize]) -> Result<CMatrix> {
    family.check_history(alpha)?;
    let mut k = CMatrix::identity(family.layout.total_dim());
    for (j, &a) in alpha.iter().enumerate() {
        k = &family.evolutions[j] * &k;
        k = family.events[j].projectors()[a].matrix() * &k;
    }
    Ok(k)
}

/// `𝒥(α, α′) = ⟨Ψ₀|K(α)†K(α′)|Ψ₀⟩`, or `Tr[ρ K(α)†K(α′)]` for a mixed start.
pub fn decoherence_functional(family: &HistoryFamily, alpha: &[usize], alpha_prime: &[usize]) -> Result<C64> {
    family.check_history(alpha)?;
    family.check_history(alpha_prime)?;
    Ok(match &family.initial {
        InitialState::Pure(psi) => {
            family.chain_ket(psi, alpha).inner(&family.chain_ket(psi, alpha_prime))
        }
        InitialState::Mixed(rho) => {
            let k = chain_operator(family, alpha)?;
            let kp = chain_operator(family, alpha_prime)?;
            (&(&kp * rho) * &k.adjoint()).trace()
        }
    })
}

/// Every entry `𝒥(α, α′)`, rows and columns in [`HistoryFamily::histories`] order.
pub fn full_decoherence(family: &HistoryFamily) -> Result<CMatrix> {
    let hist = family.histories();
    let n = hist.len();
    let mut out = CMatrix::zeros(n, n);
    match &family.initial {
        InitialState::Pure(psi) => {
            let kets: Vec<Ket> = hist.iter().map(|a| family.chain_ket(psi, a)).collect();
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] = kets[i].inner(&kets[j]);
                }
            }
        }
        InitialState::Mixed(rho) => {
            let ks: Vec<CMatrix> = hist
                .iter()
                .map(|a| chain_operator(family, a))
                .collect::<Result<_>>()?;
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] = (&(&ks[j] * rho) * &ks[i].adjoint()).trace();
                }
            }
        }
    }
    Ok(out)
}

/// Decoherence functional grouped by the outcome at the last time. Entries
/// with different final outcomes vanish identically (orthogonal final
/// projectors), so each block is indexed by the earlier outcomes only.
#[derive(Clone, Debug)]
pub struct DecoherenceMatrix {
    /// Shape of the earlier times indexing each block.
    pub inner_shape: Vec<usize>,
    /// One block per final outcome, in decomposition order.
    pub blocks: Vec<CMatrix>,
    pub tolerance_used: f64,
}

impl DecoherenceMatrix {
    /// Largest diagonal weight over all blocks.
    pub fn max_diagonal(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.rows()).map(move |i| b[(i, i)].re))
            .fold(0.0, f64::max)
    }

    pub fn max_offdiag(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    if i != j {
                        worst = worst.max(b[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }

    pub fn diagonal_sum(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn hermitian_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_abs_diff(&b.adjoint()))
            .fold(0.0, f64::max)
    }

    /// Diagonal weights `[final][inner]`.
    pub fn diagonal(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| (0..b.rows()).map(|i| b[(i, i)].re).collect())
            .collect()
    }
}

pub fn decoherence_matrix(family: &HistoryFamily) -> Result<DecoherenceMatrix> {
    let shape = family.shape();
    let (inner_shape, last) = shape.split_at(shape.len() - 1);
    let inner_count: usize = inner_shape.iter().product();
    let n_final = last[0];
    let full = full_decoherence(family)?;
    let blocks = (0..n_final)
        .map(|f| {
            CMatrix::from_fn(inner_count, inner_count, |i, j| {
                full[(i * n_final + f, j * n_final + f)]
            })
        })
        .collect();
    Ok(DecoherenceMatrix {
        inner_shape: inner_shape.to_vec(),
        blocks,
        tolerance_used: DEFAULT_CONSISTENCY_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub max_offdiag: f64,
    /// Largest diagonal weight; off-diagonals are compared against `tol · scale`.
    pub scale: f64,
}

pub fn consistency_of(matrix: &DecoherenceMatrix, tol: f64) -> ConsistencyReport {
    let max_offdiag = matrix.max_offdiag();
    let scale = matrix.max_diagonal();
    ConsistencyReport {
        consistent: max_offdiag <= tol * scale,
        max_offdiag,
        scale,
    }
}

pub fn consistency_check(family: &HistoryFamily, tol: f64) -> Result<ConsistencyReport> {
    Ok(consistency_of(&decoherence_matrix(family)?, tol))
}

/// Discrete joint distribution over named variables, row-major with the first
/// variable slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterDistribution {
    names: Vec<String>,
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

const MASS_TOL: f64 = 1e-10;

impl MasterDistribution {
    pub fn new(names: Vec<String>, sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if names.len() != sizes.len() {
            return Err(Error::InvalidArgument("one size per variable".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate variable {n}")));
            }
        }
        if sizes.iter().product::<usize>() != probs.len() {
            return Err(Error::Dimension("table size does not match variable sizes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= -1e-12)) {
            return Err(Error::InvalidArgument(format!("negative probability {p}")));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("distribution has total mass {total}")));
        }
        Ok(Self { names, sizes, probs })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn var(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.sizes[self.var(name)?])
    }

    /// Probability of a full assignment given in variable order.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.probs[flatten(index, &self.sizes)]
    }

    /// Marginal probability of a partial assignment.
    pub fn prob_of(&self, event: &[(&str, usize)]) -> Result<f64> {
        let vars: Vec<(usize, usize)> = event
            .iter()
            .map(|(n, v)| self.var(n).map(|i| (i, *v)))
            .collect::<Result<_>>()?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(flat, _)| {
                let idx = unflatten(*flat, &self.sizes);
                vars.iter().all(|&(i, v)| idx[i] == v)
            })
            .map(|(_, p)| p)
            .sum())
    }

    /// Replaces `var` by sub-variables whose sizes multiply to its size.
    pub fn split(&self, var: &str, parts: &[(&str, usize)]) -> Result<Self> {
        let i = self.var(var)?;
        if parts.iter().map(|(_, s)| s).product::<usize>() != self.sizes[i] {
            return Err(Error::Dimension(format!("parts do not tile variable {var}")));
        }
        let mut names = self.names[..i].to_vec();
        let mut sizes = self.sizes[..i].to_vec();
        for (n, s) in parts {
            names.push(n.to_string());
            sizes.push(*s);
        }
        names.extend(self.names[i + 1..].iter().cloned());
        sizes.extend(self.sizes[i + 1..].iter().copied());
        Self::new(names, sizes, self.probs.clone())
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let i = self.var(from)?;
        let mut names = self.names.clone();
        names[i] = to.to_string();
        Self::new(names, self.sizes.clone(), self.probs.clone())
    }
}

/// Sums out everything not in `keep`, after conditioning on `given`. Kept
/// variables appear in the order listed.
pub fn marginal_conditional(
    dist: &MasterDistribution,
    keep: &[&str],
    given: &[(&str, usize)],
) -> Result<MasterDistribution> {
    let keep_idx: Vec<usize> = keep.iter().map(|n| dist.var(n)).collect::<Result<_>>()?;
    let given_idx: Vec<(usize, usize)> = given
        .iter()
        .map(|(n, v)| {
            let i = dist.var(n)?;
            if *v >= dist.sizes[i] {
                return Err(Error::UnknownLabel(format!("{n} = {v}")));
            }
            Ok((i, *v))
        })
        .collect::<Result<_>>()?;
    let out_sizes: Vec<usize> = keep_idx.iter().map(|&i| dist.sizes[i]).collect();
    let mut out = vec![0.0; out_sizes.iter().product()];
    let mut norm = 0.0;
    for (flat, &p) in dist.probs.iter().enumerate() {
        let idx = unflatten(flat, &dist.sizes);
        if given_idx.iter().all(|&(i, v)| idx[i] == v) {
            norm += p;
            let sub: Vec<usize> = keep_idx.iter().map(|&i| idx[i]).collect();
            out[flatten(&sub, &out_sizes)] += p;
        }
    }
    if norm <= MIN_CONDITIONING_PROB {
        return Err(Error::UndefinedConditional { prob: norm });
    }
    for p in out.iter_mut() {
        *p /= norm;
    }
    MasterDistribution::new(keep.iter().map(|s| s.to_string()).collect(), out_sizes, out)
}

/// Diagonal of the decoherence functional as a distribution over `t1, t2, …`.
/// Refuses inconsistent families.
pub fn master_distribution(family: &HistoryFamily, tol: f64) -> Result<MasterDistribution> {
    let matrix = decoherence_matrix(family)?;
    let report = consistency_of(&matrix, tol);
    if !report.consistent {
        return Err(Error::Inconsistent {
            max_offdiag: report.max_offdiag,
            threshold: tol * report.scale,
        });
    }
    let shape = family.shape();
    let n_final = *shape.last().expect("at least one time");
    let diag = matrix.diagonal();
    let total: usize = shape.iter().product();
    let probs = (0..total)
        .map(|flat| diag[flat % n_final][flat / n_final])
        .collect();
    let names = (1..=shape.len()).map(|j| format!("t{j}")).collect();
    MasterDistribution::new(names, shape, probs)
}

pub const VAR_LAMBDA: &str = "lambda";

/// `max |Pr(λ|a,b) − Pr(λ)|` over `(a, b)` with `Pr(a,b) > 1e-14`. The
/// distribution must carry variables `a`, `b` and `lambda`.
pub fn independence_residual(dist: &MasterDistribution) -> Result<f64> {
    let n_a = dist.size_of(ANCILLA_A)?;
    let n_b = dist.size_of(ANCILLA_B)?;
    let n_l = dist.size_of(VAR_LAMBDA)?;
    let pr_lambda = marginal_conditional(dist, &[VAR_LAMBDA], &[])?;
    let mut worst: f64 = 0.0;
    for a in 0..n_a {
        for b in 0..n_b {
            if dist.prob_of(&[(ANCILLA_A, a), (ANCILLA_B, b)])? <= MIN_CONDITIONING_PROB {
                continue;
            }
            let cond = marginal_conditional(dist, &[VAR_LAMBDA], &[(ANCILLA_A, a), (ANCILLA_B, b)])?;
            for l in 0..n_l {
                worst = worst.max((cond.probs[l] - pr_lambda.probs[l]).abs());
            }
        }
    }
    Ok(worst)
}

pub fn independence_check(dist: &MasterDistribution, tol: f64) -> Result<bool> {
    Ok(independence_residual(dist)? <= tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaFactorization {
    pub lambda: usize,
    /// `⟨Φ_λ|Φ_λ⟩`.
    pub weight: f64,
    /// `None` when the branch has zero weight and is skipped.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub holds: bool,
    pub worst_residual: f64,
    pub per_lambda: Vec<LambdaFactorization>,
}

/// Checks `⟨P Q⟩_λ = ⟨P⟩_λ ⟨Q⟩_λ` for every projector pair drawn from the
/// local families, with `⟨R⟩_λ = ⟨Φ_λ|R|Φ_λ⟩/⟨Φ_λ|Φ_λ⟩` and `|Φ_λ⟩ = Λ_λ|Φ⟩`.
pub fn factorization_check(
    phi: &Ket,
    lambda: &DecompositionOfIdentity,
    p_families: &[DecompositionOfIdentity],
    q_families: &[DecompositionOfIdentity],
    tol: f64,
) -> Result<FactorizationReport> {
    let (Some(p0), Some(q0)) = (p_families.first(), q_families.first()) else {
        return Err(Error::InvalidArgument("need at least one family per side".into()));
    };
    let (d_a, d_b) = (p0.dim(), q0.dim());
    if phi.dim() != d_a * d_b || lambda.dim() != phi.dim() {
        return Err(Error::Dimension("Φ, Λ and the local families disagree on dimensions".into()));
    }
    if p_families.iter().any(|f| f.dim() != d_a) || q_families.iter().any(|f| f.dim() != d_b) {
        return Err(Error::Dimension("local families must share a dimension per side".into()));
    }
    let ia = CMatrix::identity(d_a);
    let ib = CMatrix::identity(d_b);
    let lift_p: Vec<Vec<CMatrix>> = p_families
        .iter()
        .map(|f| f.projectors().iter().map(|p| kron(p.matrix(), &ib)).collect())
        .collect::<Result<_>>()?;
    let lift_q: Vec<Vec<CMatrix>> = q_families
        .iter()
        .map(|f| f.projectors().iter().map(|q| kron(&ia, q.matrix())).collect())
        .collect::<Result<_>>()?;

    let mut per_lambda = Vec::with_capacity(lambda.len());
    let mut worst: f64 = 0.0;
    for (l, proj) in lambda.projectors().iter().enumerate() {
        let branch = proj.matrix().apply(phi);
        let weight = branch.norm_sqr();
        if weight <= MIN_CONDITIONING_PROB {
            per_lambda.push(LambdaFactorization {
                lambda: l,
                weight,
                residual: None,
            });
            continue;
        }
        let avg = |r: &CMatrix| branch.expectation(r).re / weight;
        let mut res: f64 = 0.0;
        for ps in &lift_p {
            for p in ps {
                let pv = p.apply(&branch);
                let mean_p = branch.inner(&pv).re / weight;
                for qs in &lift_q {
                    for q in qs {
                        // ⟨PQ⟩ with P, Q commuting lifts: ⟨Φ_λ|Q P|Φ_λ⟩
                        let joint = branch.inner(&q.apply(&pv)).re / weight;
                        res = res.max((joint - mean_p * avg(q)).abs());
                    }
                }
            }
        }
        worst = worst.max(res);
        per_lambda.push(LambdaFactorization {
            lambda: l,
            weight,
            residual: Some(res),
        });
    }
    Ok(FactorizationReport {
        holds: worst <= tol,
        worst_residual: worst,
        per_lambda,
    })
}

/// History family `[Ψ₀] ⊙ {Λ_λ} ⊙ {[a] ⊗ P^(a)_A ⊗ Q^(b)_B ⊗ [b]}` on the
/// circuit layout with trivial dynamics up to `t₂`. The final-time outcomes
/// are ordered `(A, B, a, b)` row-major.
pub fn bell_history_family(spec: &CircuitSpec, lambda: &DecompositionOfIdentity) -> Result<HistoryFamily> {
    let layout = spec.layout().clone();
    let (n_a, n_b) = (spec.n_settings_a(), spec.n_settings_b());
    let (d_a, d_b) = (spec.dim_a(), spec.dim_b());
    if lambda.dim() != d_a * d_b {
        return Err(Error::Dimension("Λ must act on A ⊗ B".into()));
    }
    let t1: Vec<Projector> = lambda
        .projectors()
        .iter()
        .map(|p| {
            let m = layout.embed(p.matrix(), &[REGISTER_A, REGISTER_B])?;
            Projector::new(m)
        })
        .collect::<Result<_>>()?;
    let mut t2 = Vec::with_capacity(d_a * d_b * n_a * n_b);
    for oa in 0..d_a {
        for ob in 0..d_b {
            for a in 0..n_a {
                for b in 0..n_b {
                    let m = kron_all([
                        basis_projector(n_a, a).matrix(),
                        back_projector(spec, a + 1, oa)?.matrix(),
                        back_projector_b(spec, b + 1, ob)?.matrix(),
                        basis_projector(n_b, b).matrix(),
                    ])?;
                    t2.push(Projector::new(m)?);
                }
            }
        }
    }
    HistoryFamily::with_trivial_dynamics(
        layout.clone(),
        InitialState::Pure(initial_state(spec)),
        vec![
            DecompositionOfIdentity::new(t1, layout.clone())?,
            DecompositionOfIdentity::new(t2, layout)?,
        ],
    )
}

/// `Pr(lambda, A, B, a, b)` for the Bell family; refuses inconsistent `Λ`.
pub fn bell_master_distribution(
    spec: &CircuitSpec,
    lambda: &DecompositionOfIdentity,
    tol: f64,
) -> Result<MasterDistribution> {
    let family = bell_history_family(spec, lambda)?;
    master_distribution(&family, tol)?
        .rename("t1", VAR_LAMBDA)?
        .split(
            "t2",
            &[
                (REGISTER_A, spec.dim_a()),
                (REGISTER_B, spec.dim_b()),
                (ANCILLA_A, spec.n_settings_a()),
                (ANCILLA_B, spec.n_settings_b()),
            ],
        )
}

/// The Bell-family decoherence functional computed on `A ⊗ B` alone:
/// `Pr(a)Pr(b)⟨Φ_λ|P^(a)_A Q^(b)_B|Φ_λ′⟩`, one block per `(A, B, a, b)`.
pub fn bipartite_decoherence(spec: &CircuitSpec, lambda: &DecompositionOfIdentity) -> Result<DecoherenceMatrix> {
    let phi = spec.phi();
    if lambda.dim() != phi.dim() {
        return Err(Error::Dimension("Λ must act on A ⊗ B".into()));
    }
    let branches: Vec<Ket> = lambda
        .projectors()
        .iter()
        .map(|p| p.matrix().apply(phi))
        .collect();
    let m = branches.len();
    let (n_a, n_b) = (spec.n_settings_a(), spec.n_settings_b());
    let mut blocks = Vec::with_capacity(spec.dim_a() * spec.dim_b() * n_a * n_b);
    for oa in 0..spec.dim_a() {
        for ob in 0..spec.dim_b() {
            for a in 1..=n_a {
                for b in 1..=n_b {
                    let weight = spec.pr_a(a)? * spec.pr_b(b)?;
                    let pq = kron(
                        back_projector(spec, a, oa)?.matrix(),
                        back_projector_b(spec, b, ob)?.matrix(),
                    )?;
                    let images: Vec<Ket> = branches.iter().map(|v| pq.apply(v)).collect();
                    let mut block = CMatrix::zeros(m, m);
                    for i in 0..m {
                        for j in 0..m {
                            block[(i, j)] = branches[i].inner(&images[j]) * c(weight, 0.0);
                        }
                    }
                    blocks.push(block);
                }
            }
        }
    }
    Ok(DecoherenceMatrix {
        inner_shape: vec![m],
        blocks,
        tolerance_used: DEFAULT_CONSISTENCY_TOL,
    })
}

/// `Pr(A, B, a, b, lambda)` from the bipartite form; refuses inconsistent `Λ`.
pub fn bipartite_master_distribution(
    spec: &CircuitSpec,
    lambda: &DecompositionOfIdentity,
    tol: f64,
) -> Result<MasterDistribution> {
    let matrix = bipartite_decoherence(spec, lambda)?;
    let report = consistency_of(&matrix, tol);
    if !report.consistent {
        return Err(Error::Inconsistent {
            max_offdiag: report.max_offdiag,
            threshold: tol * report.scale,
        });
    }
    let probs = matrix.diagonal().into_iter().flatten().collect();
    MasterDistribution::new(
        [REGISTER_A, REGISTER_B, ANCILLA_A, ANCILLA_B, VAR_LAMBDA]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        vec![
            spec.dim_a(),
            spec.dim_b(),
            spec.n_settings_a(),
            spec.n_settings_b(),
            lambda.len(),
        ],
        probs,
    )
}

/// Local hidden-variable model read off a consistent Bell family:
/// `Pr(λ)` weights with responses `Pr(A|a,λ)` and `Pr(B|b,λ)`. Zero-weight
/// `λ` are dropped.
pub fn induced_lhv_model(dist: &MasterDistribution, dim_a: usize, dim_b: usize) -> Result<LhvModel> {
    let n_a = dist.size_of(ANCILLA_A)?;
    let n_b = dist.size_of(ANCILLA_B)?;
    let n_l = dist.size_of(VAR_LAMBDA)?;
    let mut lambdas = Vec::new();
    for l in 0..n_l {
        let weight = dist.prob_of(&[(VAR_LAMBDA, l)])?;
        if weight <= MIN_CONDITIONING_PROB {
            continue;
        }
        let response = |register: &str, ancilla: &str, n_set: usize, d: usize| -> Result<Vec<Vec<f64>>> {
            (0..n_set)
                .map(|s| {
                    if dist.prob_of(&[(VAR_LAMBDA, l), (ancilla, s)])? <= MIN_CONDITIONING_PROB {
                        return Ok(vec![1.0 / d as f64; d]);
                    }
                    Ok(marginal_conditional(dist, &[register], &[(VAR_LAMBDA, l), (ancilla, s)])?
                        .probs)
                })
                .collect()
        };
        lambdas.push(HiddenState {
            weight,
            a_response: response(REGISTER_A, ANCILLA_A, n_a, dim_a)?,
            b_response: response(REGISTER_B, ANCILLA_B, n_b, dim_b)?,
        });
    }
    let kept: f64 = lambdas.iter().map(|l| l.weight).sum();
    for l in lambdas.iter_mut() {
        l.weight /= kept;
    }
    LhvModel::new(
        (1..=n_a).map(|a| a.to_string()).collect(),
        (1..=n_b).map(|b| b.to_string()).collect(),
        outcome_values(dim_a),
        outcome_values(dim_b),
        lambdas,
    )
}
