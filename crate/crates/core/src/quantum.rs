//! Projectors, sample spaces, spin operators and Born-rule probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{c, eig_hermitian, partial_trace, CMatrix, Ket, SpaceLayout, ONE, ZERO};

/// Tolerance for projector and decomposition invariants.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Eigenvalues with `|λ| ≤` this are treated as zero by [`sign_operator`].
pub const SIGN_THRESHOLD: f64 = 1e-10;
/// Conditioning on an event with probability at or below this is refused.
pub const MIN_CONDITIONING_PROB: f64 = 1e-14;

pub mod pauli {
    use crate::tensor::{c, CMatrix, ONE, ZERO};

    pub fn x() -> CMatrix {
        CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_rows(&[&[ZERO, c(0.0, -1.0)], &[c(0.0, 1.0), ZERO]])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_diag(&[1.0, -1.0])
    }

    pub fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]])
    }

    /// `n·σ` for a unit axis `n = (nx, ny, nz)`.
    pub fn along(n: [f64; 3]) -> CMatrix {
        &(&x().scale_re(n[0]) + &y().scale_re(n[1])) + &z().scale_re(n[2])
    }
}

/// `(|0⟩|1⟩ − |1⟩|0⟩)/√2` in the computational basis. The singlet is the same
/// ray in every product basis, so this is also the `S_x` form.
pub fn singlet() -> Ket {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ket::from_real(&[0.0, h, -h, 0.0]).expect("finite")
}

/// Eigenket of `n·σ` with eigenvalue `+1` (`sign = 1`) or `−1` (`sign = -1`).
pub fn spin_half_ket(axis: [f64; 3], sign: i32) -> Ket {
    let e = eig_hermitian(&pauli::along(axis)).expect("Pauli combination is Hermitian");
    // ascending eigenvalues: index 0 is −1, index 1 is +1
    if sign >= 0 {
        e.vector(1)
    } else {
        e.vector(0)
    }
}

/// Hermitian idempotent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct Projector {
    matrix: CMatrix,
    rank: usize,
}

impl TryFrom<CMatrix> for Projector {
    type Error = Error;
    fn try_from(m: CMatrix) -> Result<Self> {
        Projector::new(m)
    }
}

impl From<Projector> for CMatrix {
    fn from(p: Projector) -> Self {
        p.matrix
    }
}

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotProjector("matrix is not square".into()));
        }
        let herm = matrix.max_abs_diff(&matrix.adjoint());
        if herm > PROJECTOR_TOL {
            return Err(Error::NotProjector(format!("P ≠ P† (deviation {herm:.3e})")));
        }
        let idem = (&matrix * &matrix).max_abs_diff(&matrix);
        if idem > PROJECTOR_TOL {
            return Err(Error::NotProjector(format!("P² ≠ P (deviation {idem:.3e})")));
        }
        let tr = matrix.trace().re;
        let rank = tr.round().max(0.0) as usize;
        if (tr - rank as f64).abs() > 1e-8 {
            return Err(Error::NotProjector(format!("trace {tr} is not an integer")));
        }
        Ok(Self { matrix, rank })
    }

    /// `[ψ] = |ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn onto(ket: &Ket) -> Result<Self> {
        Self::new(ket.normalized()?.density())
    }

    /// Projector onto the span of orthonormal kets.
    pub fn onto_span(kets: &[Ket], dim: usize) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, dim);
        for k in kets {
            if k.dim() != dim {
                return Err(Error::Dimension(format!("ket of dim {} in span of dim {dim}", k.dim())));
            }
            m = &m + &k.density();
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim),
            rank: dim,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
            rank: 0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `I − P`.
    pub fn complement(&self) -> Self {
        Self {
            matrix: &CMatrix::identity(self.dim()) - &self.matrix,
            rank: self.dim() - self.rank,
        }
    }

    pub fn kron(&self, other: &Projector) -> Result<Self> {
        Ok(Self {
            matrix: crate::tensor::kron(&self.matrix, &other.matrix)?,
            rank: self.rank * other.rank,
        })
    }

    /// `U† P U`, still a projector when `U` is unitary.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Self::new(&(&u.adjoint() * &self.matrix) * u)
    }
}

/// Mutually orthogonal projectors summing to the identity: a quantum sample space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDecomposition", into = "RawDecomposition")]
pub struct DecompositionOfIdentity {
    projectors: Vec<Projector>,
    layout: SpaceLayout,
}

#[derive(Serialize, Deserialize)]
struct RawDecomposition {
    projectors: Vec<Projector>,
    layout: SpaceLayout,
}

impl TryFrom<RawDecomposition> for DecompositionOfIdentity {
    type Error = Error;
    fn try_from(raw: RawDecomposition) -> Result<Self> {
        DecompositionOfIdentity::new(raw.projectors, raw.layout)
    }
}

impl From<DecompositionOfIdentity> for RawDecomposition {
    fn from(d: DecompositionOfIdentity) -> Self {
        RawDecomposition {
            projectors: d.projectors,
            layout: d.layout,
        }
    }
}

impl DecompositionOfIdentity {
    pub fn new(projectors: Vec<Projector>, layout: SpaceLayout) -> Result<Self> {
        let dim = layout.total_dim();
        if projectors.is_empty() {
            return Err(Error::NotDecomposition("empty family".into()));
        }
        if let Some(p) = projectors.iter().find(|p| p.dim() != dim) {
            return Err(Error::Dimension(format!(
                "projector of dim {} on a layout of dim {dim}",
                p.dim()
            )));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for p in &projectors {
            sum = &sum + p.matrix();
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(dim));
        if dev > PROJECTOR_TOL {
            return Err(Error::NotDecomposition(format!(
                "projectors sum to I only within {dev:.3e}"
            )));
        }
        for (i, p) in projectors.iter().enumerate() {
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if p.rank() == 0 || q.rank() == 0 {
                    continue;
                }
                let overlap = (p.matrix() * q.matrix())
                    .data()
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if overlap > PROJECTOR_TOL {
                    return Err(Error::NotDecomposition(format!(
                        "projectors {i} and {j} overlap ({overlap:.3e})"
                    )));
                }
            }
        }
        Ok(Self { projectors, layout })
    }

    /// `{I}`.
    pub fn trivial(layout: SpaceLayout) -> Self {
        Self {
            projectors: vec![Projector::identity(layout.total_dim())],
            layout,
        }
    }

    /// Rank-one projectors onto an orthonormal basis.
    pub fn from_basis(basis: &[Ket], layout: SpaceLayout) -> Result<Self> {
        let projectors = basis.iter().map(Projector::onto).collect::<Result<_>>()?;
        Self::new(projectors, layout)
    }

    /// Projectors onto the computational basis states.
    pub fn standard_basis(layout: SpaceLayout) -> Self {
        let dim = layout.total_dim();
        let basis: Vec<Ket> = (0..dim).map(|k| Ket::basis(dim, k)).collect();
        Self::from_basis(&basis, layout).expect("standard basis is orthonormal")
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// `{P ⊗ Q}` over both families, first index slow.
    pub fn product(&self, other: &DecompositionOfIdentity) -> Result<Self> {
        let mut factors = self.layout.factors().to_vec();
        factors.extend(other.layout.factors().iter().cloned());
        let layout = SpaceLayout::new(factors)?;
        let mut projectors = Vec::with_capacity(self.len() * other.len());
        for p in &self.projectors {
            for q in &other.projectors {
                projectors.push(p.kron(q)?);
            }
        }
        Ok(Self { projectors, layout })
    }
}

/// Spin matrices `(Jx, Jy, Jz)` for spin `J = (dim − 1)/2`, basis ordered
/// `m = J, J−1, …, −J`.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

impl SpinOperators {
    pub fn spin(&self) -> f64 {
        (self.jz.rows() as f64 - 1.0) / 2.0
    }
}

pub fn spin_operators(dim: usize) -> Result<SpinOperators> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "spin operators need dim ≥ 2, got {dim}"
        )));
    }
    let j = (dim as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    let mut raise = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        // J+ |m_k⟩ = sqrt(J(J+1) − m_k(m_k+1)) |m_k + 1⟩ and m_{k−1} = m_k + 1
        raise[(k - 1, k)] = c((j * (j + 1.0) - m(k) * (m(k) + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower).scale_re(0.5);
    let jy = (&raise - &lower).scale(c(0.0, -0.5));
    let jz = CMatrix::from_real_diag(&(0..dim).map(m).collect::<Vec<_>>());
    Ok(SpinOperators { jx, jy, jz })
}

/// Spectral split of a Hermitian operator by eigenvalue sign.
#[derive(Clone, Debug)]
pub struct SignSplit {
    /// `P_plus − P_minus`; annihilates the kernel.
    pub a_hat: CMatrix,
    pub plus: Projector,
    pub minus: Projector,
    pub zero: Projector,
}

pub fn sign_operator(op: &CMatrix) -> Result<SignSplit> {
    let e = eig_hermitian(op)?;
    let n = op.rows();
    let mut groups = [Vec::new(), Vec::new(), Vec::new()];
    for (k, &v) in e.values.iter().enumerate() {
        let slot = if v > SIGN_THRESHOLD {
            0
        } else if v < -SIGN_THRESHOLD {
            1
        } else {
            2
        };
        groups[slot].push(e.vector(k));
    }
    let [plus, minus, zero] = groups.map(|kets| Projector::onto_span(&kets, n));
    let (plus, minus, zero) = (plus?, minus?, zero?);
    let a_hat = plus.matrix() - minus.matrix();
    Ok(SignSplit {
        a_hat,
        plus,
        minus,
        zero,
    })
}

/// `⟨ψ|P|ψ⟩` for a normalized state.
pub fn born_probability(state: &Ket, p: &Projector) -> Result<f64> {
    if state.dim() != p.dim() {
        return Err(Error::Dimension(format!(
            "state of dim {} with projector of dim {}",
            state.dim(),
            p.dim()
        )));
    }
    state.ensure_normalized()?;
    let v = state.expectation(p.matrix());
    if v.im.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "Born expectation has imaginary part {:.3e}",
            v.im
        )));
    }
    Ok(v.re.clamp(0.0, 1.0))
}

#[derive(Clone, Debug)]
pub struct Conditioned {
    pub prob: f64,
    /// Unit-trace operator on the factors other than the conditioned one.
    pub rho: CMatrix,
}

/// Projects `state` with `p_local` on `factor`, then traces that factor out.
pub fn condition_on_outcome(
    state: &Ket,
    p_local: &Projector,
    layout: &SpaceLayout,
    factor: &str,
) -> Result<Conditioned> {
    if state.dim() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "state of dim {} on a layout of dim {}",
            state.dim(),
            layout.total_dim()
        )));
    }
    state.ensure_normalized()?;
    let lifted = layout.embed(p_local.matrix(), &[factor])?;
    let projected = lifted.apply(state);
    let prob = projected.norm_sqr();
    if prob <= MIN_CONDITIONING_PROB {
        return Err(Error::UndefinedConditional { prob });
    }
    let keep: Vec<&str> = layout.labels().filter(|l| *l != factor).collect();
    let rho = partial_trace(&projected.density(), layout, &keep)?.scale_re(1.0 / prob);
    Ok(Conditioned { prob, rho })
}

/// `⟨u|_factor |ψ⟩`, normalized, together with its squared norm.
pub fn conditional_ket(
    state: &Ket,
    bra: &Ket,
    layout: &SpaceLayout,
    factor: &str,
) -> Result<(f64, Ket)> {
    let pos = layout.position(factor)?;
    let dims = layout.dims();
    if bra.dim() != dims[pos] || state.dim() != layout.total_dim() {
        return Err(Error::Dimension("conditional ket dimensions".into()));
    }
    let right: usize = dims[pos + 1..].iter().product();
    let d = dims[pos];
    let out_dim = layout.total_dim() / d;
    let mut out = vec![ZERO; out_dim];
    for (i, amp) in state.amps().iter().enumerate() {
        let r = i % right;
        let x = (i / right) % d;
        let l = i / (right * d);
        out[l * right + r] += bra.amps()[x].conj() * amp;
    }
    let ket = Ket::new(out)?;
    let prob = ket.norm_sqr();
    if prob <= MIN_CONDITIONING_PROB {
        return Err(Error::UndefinedConditional { prob });
    }
    Ok((prob, ket.normalized()?))
}

/// Evenly spaced sample points on `[x_min, x_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLine {
    n_points: usize,
    x_min: f64,
    x_max: f64,
}

impl GridLine {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 2 || !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid needs n ≥ 2 and x_min < x_max (got {n_points}, {x_min}, {x_max})"
            )));
        }
        if n_points > crate::tensor::MAX_DIM {
            return Err(Error::DimensionCap {
                dim: n_points,
                cap: crate::tensor::MAX_DIM,
            });
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * k as f64 / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.point(k))
    }

    /// Pointwise samples of `f`, ℓ²-normalized on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<Ket> {
        Ket::from_real(&self.points().map(f).collect::<Vec<_>>())?.normalized()
    }
}

/// Projector onto the grid points inside `[x_lo, x_hi]`.
pub fn interval_projector(grid: &GridLine, x_lo: f64, x_hi: f64) -> Projector {
    let diag: Vec<f64> = grid
        .points()
        .map(|x| if x_lo <= x && x <= x_hi { 1.0 } else { 0.0 })
        .collect();
    let rank = diag.iter().filter(|&&d| d == 1.0).count();
    Projector {
        matrix: CMatrix::from_real_diag(&diag),
        rank,
    }
}

/// Triangle pulse supported on `[x1, x2]`, peaked at the midpoint.
pub fn triangle_pulse(x1: f64, x2: f64) -> impl Fn(f64) -> f64 {
    let mid = 0.5 * (x1 + x2);
    let half = 0.5 * (x2 - x1);
    move |x| (1.0 - (x - mid).abs() / half).max(0.0)
}

/// Standard-basis projector `|k⟩⟨k|`.
pub fn basis_projector(dim: usize, k: usize) -> Projector {
    let mut m = CMatrix::zeros(dim, dim);
    m[(k, k)] = ONE;
    Projector { matrix: m, rank: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{commutator_norm, kron};

    fn ab() -> SpaceLayout {
        SpaceLayout::new([("A", 2), ("B", 2)]).unwrap()
    }

    #[test]
    fn spin_half_matches_pauli() {
        let s = spin_operators(2).unwrap();
        assert!(s.jx.max_abs_diff(&pauli::x().scale_re(0.5)) < 1e-15);
        assert!(s.jy.max_abs_diff(&pauli::y().scale_re(0.5)) < 1e-15);
        assert!(s.jz.max_abs_diff(&pauli::z().scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn spin_one_jz_and_commutators() {
        let s = spin_operators(3).unwrap();
        assert_eq!(s.jz, CMatrix::from_real_diag(&[1.0, 0.0, -1.0]));
        for dim in [2, 3, 4, 7, 12] {
            let s = spin_operators(dim).unwrap();
            let comm = &(&s.jx * &s.jy) - &(&s.jy * &s.jx);
            let target = s.jz.scale(c(0.0, 1.0));
            let res = (&comm - &target).frobenius_norm();
            assert!(res <= 1e-12 * s.jz.frobenius_norm(), "dim {dim}: {res}");
        }
        assert!(spin_operators(1).is_err());
    }

    #[test]
    fn sign_operator_cases() {
        let s = sign_operator(&pauli::z().scale_re(0.5)).unwrap();
        assert!(s.a_hat.max_abs_diff(&pauli::z()) < 1e-14);
        assert_eq!(s.zero.rank(), 0);

        let s = sign_operator(&spin_operators(3).unwrap().jz).unwrap();
        assert!(s.a_hat.max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0, -1.0])) < 1e-14);
        assert_eq!(s.zero.rank(), 1);

        let jx = spin_operators(5).unwrap().jx;
        let s = sign_operator(&jx).unwrap();
        let sq = &s.a_hat * &s.a_hat;
        assert!(sq.max_abs_diff(&(s.plus.matrix() + s.minus.matrix())) < 1e-12);
        let total = &(s.plus.matrix() + s.minus.matrix()) + s.zero.matrix();
        assert!(total.max_abs_diff(&CMatrix::identity(5)) < 1e-10);
        assert!((s.plus.matrix() * s.minus.matrix()).frobenius_norm() < 1e-10);
        assert!((s.plus.matrix() * s.zero.matrix()).frobenius_norm() < 1e-10);
    }

    #[test]
    fn sign_operator_rejects_non_hermitian() {
        let m = CMatrix::from_rows(&[&[ZERO, ONE], &[ZERO, ZERO]]);
        assert!(sign_operator(&m).is_err());
    }

    #[test]
    fn singlet_born_probabilities() {
        let psi = singlet();
        let xp = Projector::onto(&spin_half_ket([1.0, 0.0, 0.0], 1)).unwrap();
        let xm = xp.complement();
        let pm = born_probability(&psi, &xp.kron(&xm).unwrap()).unwrap();
        let pp = born_probability(&psi, &xp.kron(&xp).unwrap()).unwrap();
        assert!((pm - 0.5).abs() < 1e-12);
        assert!(pp.abs() < 1e-12);
        assert!((born_probability(&psi, &Projector::identity(4)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn born_rule_errors() {
        let psi = singlet();
        assert!(matches!(
            born_probability(&psi, &Projector::identity(2)),
            Err(Error::Dimension(_))
        ));
        let unnorm = psi.scale(c(2.0, 0.0));
        assert!(matches!(
            born_probability(&unnorm, &Projector::identity(4)),
            Err(Error::Unnormalized { .. })
        ));
    }

    #[test]
    fn born_additive_over_decomposition() {
        let mut r = crate::random::rng(2);
        let psi = crate::random::random_ket(&mut r, 4);
        let u = crate::random::random_unitary(&mut r, 4);
        let basis: Vec<Ket> = (0..4).map(|k| u.column(k)).collect();
        let d = DecompositionOfIdentity::from_basis(&basis, ab()).unwrap();
        let total: f64 = d
            .projectors()
            .iter()
            .map(|p| born_probability(&psi, p).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn conditioning_on_plus_x() {
        let psi = singlet();
        let plus = spin_half_ket([1.0, 0.0, 0.0], 1);
        let minus = spin_half_ket([1.0, 0.0, 0.0], -1);
        let p = Projector::onto(&plus).unwrap();
        let cond = condition_on_outcome(&psi, &p, &ab(), "A").unwrap();
        assert!((cond.prob - 0.5).abs() < 1e-12);
        assert!(cond.rho.max_abs_diff(&minus.density()) < 1e-12);

        let (prob, ket) = conditional_ket(&psi, &plus, &ab(), "A").unwrap();
        assert!((prob - 0.5).abs() < 1e-12);
        // √2⟨+|ψ⟩ is a unit ket whose density matches the partial-trace route
        assert!(ket.density().max_abs_diff(&cond.rho) < 1e-12);

        let whole = condition_on_outcome(&psi, &Projector::identity(2), &ab(), "A").unwrap();
        assert!((whole.prob - 1.0).abs() < 1e-14);
        let reduced = partial_trace(&psi.density(), &ab(), &["B"]).unwrap();
        assert!(whole.rho.max_abs_diff(&reduced) < 1e-14);
    }

    #[test]
    fn zero_probability_conditioning_is_refused() {
        let psi = Ket::basis(4, 0);
        let p = basis_projector(2, 1);
        assert!(matches!(
            condition_on_outcome(&psi, &p, &ab(), "A"),
            Err(Error::UndefinedConditional { .. })
        ));
    }

    #[test]
    fn decomposition_validation() {
        let p0 = basis_projector(2, 0);
        let layout = SpaceLayout::new([("A", 2)]).unwrap();
        assert!(DecompositionOfIdentity::new(vec![p0.clone()], layout.clone()).is_err());
        assert!(DecompositionOfIdentity::new(vec![p0.clone(), p0.complement()], layout.clone()).is_ok());
        let plus = Projector::onto(&spin_half_ket([1.0, 0.0, 0.0], 1)).unwrap();
        assert!(DecompositionOfIdentity::new(vec![p0, plus], layout).is_err());
    }

    #[test]
    fn projector_validation() {
        assert!(Projector::new(pauli::x()).is_err());
        assert!(Projector::new(CMatrix::identity(2).scale_re(0.5)).is_err());
        let p = Projector::new(kron(&basis_projector(2, 0).matrix().clone(), &CMatrix::identity(3)).unwrap()).unwrap();
        assert_eq!(p.rank(), 3);
    }

    #[test]
    fn interval_projector_cases() {
        let grid = GridLine::new(64, 0.0, 1.0).unwrap();
        assert_eq!(interval_projector(&grid, -1.0, 2.0).matrix(), &CMatrix::identity(64));
        assert_eq!(interval_projector(&grid, 1.5, 2.0).rank(), 0);

        let psi = grid.sample(triangle_pulse(0.25, 0.75)).unwrap();
        let p_psi = Projector::onto(&psi).unwrap();
        let cut = interval_projector(&grid, 0.0, 0.5);
        assert!(commutator_norm(p_psi.matrix(), cut.matrix()).unwrap() > 0.1);
        let covering = interval_projector(&grid, 0.2, 0.8);
        assert!(commutator_norm(p_psi.matrix(), covering.matrix()).unwrap() <= 1e-12);
        let disjoint = interval_projector(&grid, 0.8, 1.0);
        assert!(commutator_norm(p_psi.matrix(), disjoint.matrix()).unwrap() <= 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(GridLine::new(1, 0.0, 1.0).is_err());
        assert!(GridLine::new(8, 1.0, 1.0).is_err());
    }
}
