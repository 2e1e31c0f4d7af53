//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use bellhist::chsh::{
    chsh_operator_spectrum, lhv_chsh, max_abs_chsh, normalized_commutator_ratio, ChshSetting,
    LhvModel,
};
use bellhist::circuit::{deferred_equivalence, joint_distribution, CircuitSpec, Route};
use bellhist::hidden::{
    evaluate_candidate, generate_candidates, search, setups, CandidateClass, SearchOutcome,
};
use bellhist::histories::{
    bell_master_distribution, induced_lhv_model, marginal_conditional, master_distribution,
    HistoryFamily, InitialState, DEFAULT_CONSISTENCY_TOL,
};
use bellhist::locality::{locality_invariance, random_scenario, random_variation};
use bellhist::quantum::{
    born_probability, condition_on_outcome, conditional_ket, interval_projector, pauli, singlet,
    spin_half_ket, triangle_pulse, DecompositionOfIdentity, GridLine, Projector,
};
use bellhist::random::{random_unitary, rng};
use bellhist::tensor::{commutator_norm, kron, CMatrix, SpaceLayout};
use bellhist_cli::{run_scenario, Kind, RunOptions, ScenarioFile};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const X: [f64; 3] = [1.0, 0.0, 0.0];

/// Born, circuit-T3 and reduced-route tables over (++, +−, −+, −−).
fn singlet_outcomes() -> Outcome {
    let psi = singlet();
    let kets = [spin_half_ket(X, 1), spin_half_ket(X, -1)];
    let spec = CircuitSpec::qubit_axes(psi.clone(), &[X], &[X]).map_err(fail)?;
    let t3 = joint_distribution(&spec, Route::T3).map_err(fail)?;
    let red = joint_distribution(&spec, Route::Reduced).map_err(fail)?;
    let expected = [0.0, 0.5, 0.5, 0.0];
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let (i, j) = (k / 2, k % 2);
        let p = Projector::onto(&kets[i].kron(&kets[j]).map_err(fail)?).map_err(fail)?;
        let born = born_probability(&psi, &p).map_err(fail)?;
        for v in [born, t3.prob(i, j, 1, 1).map_err(fail)?, red.prob(i, j, 1, 1).map_err(fail)?] {
            worst = worst.max((v - expected[k]).abs());
        }
    }
    check(worst <= 1e-12, format!("max deviation from (0, 1/2, 1/2, 0) over three routes: {worst:.2e}"))
}

fn conditioning() -> Outcome {
    let layout = SpaceLayout::new([("A", 2), ("B", 2)]).map_err(fail)?;
    let x_basis = [spin_half_ket(X, 1), spin_half_ket(X, -1)];
    let one = |l: &str| {
        DecompositionOfIdentity::from_basis(&x_basis, SpaceLayout::new([(l, 2)]).unwrap()).unwrap()
    };
    let fam = HistoryFamily::with_trivial_dynamics(
        layout.clone(),
        InitialState::Pure(singlet()),
        vec![one("A").product(&one("B")).map_err(fail)?],
    )
    .map_err(fail)?;
    let dist = master_distribution(&fam, DEFAULT_CONSISTENCY_TOL)
        .and_then(|d| d.split("t1", &[("SAx", 2), ("SBx", 2)]))
        .map_err(fail)?;
    let cond = marginal_conditional(&dist, &["SBx"], &[("SAx", 0)]).map_err(fail)?;
    let table_dev = (cond.probs()[1] - 1.0).abs();

    let plus = Projector::onto(&x_basis[0]).map_err(fail)?;
    let c = condition_on_outcome(&singlet(), &plus, &layout, "A").map_err(fail)?;
    let (prob, ket) = conditional_ket(&singlet(), &x_basis[0], &layout, "A").map_err(fail)?;
    let route_dev = ket.density().max_abs_diff(&c.rho).max((prob - c.prob).abs());
    let rho_dev = c.rho.max_abs_diff(&x_basis[1].density());
    check(
        table_dev <= 1e-12 && route_dev <= 1e-12 && rho_dev <= 1e-12,
        format!(
            "|Pr(SBx=-|SAx=+) - 1| = {table_dev:.2e}; ket vs trace routes {route_dev:.2e}; conditional state vs [-]_B {rho_dev:.2e}"
        ),
    )
}

fn lhv_bound() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let outcomes: &[f64] = if k % 2 == 0 { &[-1.0, 1.0] } else { &[-1.0, 0.0, 1.0] };
        let n_lambda = 1 + k % 12;
        let m = LhvModel::random(&mut r, n_lambda, outcomes);
        worst = worst.max(lhv_chsh(&m, "a", "a'", "b", "b'").map_err(fail)?.abs());
    }
    check(worst <= 2.0 + 1e-12, format!("max |CHSH| over 1000 models: {worst:.15}"))
}

fn zx_spectrum() -> Result<Vec<f64>, String> {
    let setting = ChshSetting::new([pauli::z(), pauli::x()], [pauli::z(), pauli::x()]).map_err(fail)?;
    Ok(chsh_operator_spectrum(&setting).map_err(fail)?.eigenvalues)
}

fn commuting_setting(r: &mut impl Rng, d: usize) -> Result<ChshSetting, String> {
    let diag = |r: &mut dyn rand::RngCore| {
        CMatrix::from_real_diag(&(0..d).map(|_| r.random_range(-1.0..=1.0)).collect::<Vec<_>>())
    };
    let (u, v) = (random_unitary(r, d), random_unitary(r, d));
    let conj = |w: &CMatrix, m: CMatrix| &(w * &m) * &w.adjoint();
    let a = [conj(&u, diag(r)), conj(&u, diag(r))];
    let b = [conj(&v, diag(r)), conj(&v, diag(r))];
    ChshSetting::new(
        [a[0].hermitian_part(), a[1].hermitian_part()],
        [b[0].hermitian_part(), b[1].hermitian_part()],
    )
    .map_err(fail)
}

fn operator_extremes() -> Outcome {
    let ev = zx_spectrum()?;
    let t = 2.0 * std::f64::consts::SQRT_2;
    let ext_dev = (ev[0] + t).abs().max((ev[ev.len() - 1] - t).abs());

    // Ŵ² = 4I − [Â_a, Â_a′] ⊗ [B̂_b, B̂_b′] for ±1-valued operators
    let setting = ChshSetting::new([pauli::z(), pauli::x()], [pauli::z(), pauli::x()]).map_err(fail)?;
    let w = setting.w_hat();
    let ca = &(&pauli::z() * &pauli::x()) - &(&pauli::x() * &pauli::z());
    let oracle = &CMatrix::identity(4).scale_re(4.0) - &kron(&ca, &ca).map_err(fail)?;
    let sq_dev = (&w * &w).max_abs_diff(&oracle);

    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let s = commuting_setting(&mut r, 2 + k % 3)?;
        let sp = chsh_operator_spectrum(&s).map_err(fail)?;
        worst = worst.max(sp.max_eig).max(-sp.min_eig);
    }
    check(
        ext_dev <= 1e-10 && sq_dev <= 1e-12 && worst <= 2.0 + 1e-9,
        format!(
            "extremes off ±2√2 by {ext_dev:.2e}; Ŵ² identity residual {sq_dev:.2e}; commuting settings max |eig| {worst:.12}"
        ),
    )
}

fn operator_degeneracy() -> Outcome {
    let ev = zx_spectrum()?;
    let t = 2.0 * std::f64::consts::SQRT_2;
    let plus = ev.iter().filter(|e| (*e - t).abs() <= 1e-10).count();
    let minus = ev.iter().filter(|e| (*e + t).abs() <= 1e-10).count();
    check(
        plus == 2 && minus == 2,
        format!(
            "multiplicity of +2√2: {plus}, of -2√2: {minus} (expected 2 each); spectrum {ev:.6?}"
        ),
    )
}

fn circuit_self_consistency() -> Outcome {
    let mut r = rng(5);
    let (mut route, mut def, mut ind): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let spec = CircuitSpec::random(&mut r, (2, 2), (2, 2)).map_err(fail)?;
        let t3 = joint_distribution(&spec, Route::T3).map_err(fail)?;
        let red = joint_distribution(&spec, Route::Reduced).map_err(fail)?;
        route = route.max(t3.max_abs_diff(&red));
        def = def.max(deferred_equivalence(&spec).map_err(fail)?);
        for a in 1..=2 {
            for b in 1..=2 {
                let joint = t3.ancilla_marginal(a, b).map_err(fail)?;
                let prod = spec.pr_a(a).map_err(fail)? * spec.pr_b(b).map_err(fail)?;
                ind = ind.max((joint - prod).abs());
            }
        }
    }
    check(
        route <= 1e-12 && def <= 1e-12 && ind <= 1e-12,
        format!("50 specs: routes {route:.2e}, deferred {def:.2e}, independence {ind:.2e}"),
    )
}

fn hidden_trichotomy() -> Outcome {
    let tol = 1e-10;
    let mut parts = Vec::new();
    let mut ok = true;

    let s1 = setups::von_neumann_singlet().map_err(fail)?;
    let vn = &generate_candidates(CandidateClass::VonNeumann, &s1).map_err(fail)?[0];
    let e1 = evaluate_candidate(vn, &s1, tol).map_err(fail)?;
    ok &= e1.consistent && e1.independent && !e1.factorizing;
    parts.push(format!(
        "ex1 (consistent {}, independent {}, factorizing {})",
        e1.consistent, e1.independent, e1.factorizing
    ));

    let s2 = setups::commuting_a().map_err(fail)?;
    let v2 = search(&s2, CandidateClass::LocalBasisA, tol).map_err(fail)?;
    let found = v2.outcome == SearchOutcome::Found;
    ok &= found;
    if let Some(w) = &v2.witness {
        let e = &v2.residuals[v2.candidates_examined - 1];
        let res = e
            .consistency_residual
            .max(e.independence_residual.unwrap_or(f64::INFINITY))
            .max(e.factorization_residual);
        let dist = bell_master_distribution(&s2, w, DEFAULT_CONSISTENCY_TOL).map_err(fail)?;
        let model = induced_lhv_model(&dist, 2, 2).map_err(fail)?;
        let corr: Vec<Vec<f64>> = (0..2)
            .map(|i| (0..2).map(|j| model.correlation_by_index(i, j)).collect())
            .collect();
        let chsh = max_abs_chsh(&corr).map_or(0.0, |c| c.value.abs());
        ok &= res <= tol && chsh <= 2.0 + 1e-10;
        parts.push(format!("ex2 found, residual {res:.2e}, induced |CHSH| {chsh:.12}"));
    } else {
        parts.push(format!("ex2 {:?}", v2.outcome));
    }

    let s3 = setups::tilted_singlet().map_err(fail)?;
    let v3 = search(&s3, CandidateClass::ProductGrid { resolution: 8, seed: 0 }, tol).map_err(fail)?;
    let cert3 = v3.certificate.map_or(f64::NAN, |c| c.value.abs());
    ok &= v3.outcome == SearchOutcome::Impossible && (cert3 - 2.828427).abs() <= 1e-6;
    parts.push(format!("tilted {:?}, certificate {cert3:.9}", v3.outcome));

    let file = ScenarioFile {
        name: "literal_xz".into(),
        kind: Kind::HiddenSearch,
        seed: None,
        parameters: serde_json::json!({
            "setup": "literal_xz",
            "class": { "kind": "product_grid", "resolution": 4, "seed": 0 }
        }),
    };
    let report = run_scenario(&file, &RunOptions::default()).map_err(fail)?;
    let s4 = setups::literal_xz().map_err(fail)?;
    let v4 = search(&s4, CandidateClass::ProductGrid { resolution: 4, seed: 0 }, tol).map_err(fail)?;
    let cert4 = v4.certificate.map_or(f64::NAN, |c| c.value.abs());
    let noted = report.notes.iter().any(|n| n.contains("saturates"));
    ok &= (cert4 - 2.0).abs() <= 1e-10 && noted && v4.outcome != SearchOutcome::Impossible;
    parts.push(format!(
        "literal σz/σx certificate {cert4:.12}, saturation note {noted}, verdict {:?}",
        v4.outcome
    ));
    check(ok, parts.join("; "))
}

fn einstein_locality() -> Outcome {
    let mut r = rng(7);
    let mut dev: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut invariant = true;
    for n_times in [2, 3] {
        for dims in [(2, 2, 2), (2, 3, 2)] {
            let scn = random_scenario(&mut r, dims, n_times).map_err(fail)?;
            let vs: Vec<_> = (0..12).map(|_| random_variation(&mut r, &scn)).collect();
            let rep = locality_invariance(&scn, &vs).map_err(fail)?;
            dev = dev.max(rep.max_deviation);
            dual = dual.max(rep.max_dual_form_deviation);
            invariant &= rep.consistency_invariant();
        }
    }
    check(
        dev <= 1e-12 && dual <= 1e-12 && invariant,
        format!("12 variations, 2 and 3 times: deviation {dev:.2e}, dual form {dual:.2e}, consistency invariant {invariant}"),
    )
}

fn spin_scaling() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [2, 3, 5, 9, 17, 41] {
        worst = worst.max((normalized_commutator_ratio(d).map_err(fail)? - 1.0).abs());
    }
    check(worst <= 1e-12, format!("max |ratio - 1| over dims 2..41: {worst:.2e}"))
}

fn wavepacket() -> Outcome {
    let grid = GridLine::new(64, 0.0, 1.0).map_err(fail)?;
    let psi = Projector::onto(&grid.sample(triangle_pulse(0.25, 0.75)).map_err(fail)?).map_err(fail)?;
    let norm = |lo, hi| commutator_norm(psi.matrix(), interval_projector(&grid, lo, hi).matrix());
    let cut = norm(0.0, 0.5).map_err(fail)?;
    let full = norm(0.2, 0.8).map_err(fail)?;
    check(
        cut > 0.1 && full <= 1e-12,
        format!("interior cut {cut:.6}, covering interval {full:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("1", "singlet outcome probabilities by three routes", singlet_outcomes),
        ("2", "conditioning and conditional-state routes", conditioning),
        ("3", "classical CHSH bound on 1000 local models", lhv_bound),
        ("4a", "CHSH operator extremes and commuting-pairs bound", operator_extremes),
        ("4b", "CHSH operator extremes each doubly degenerate", operator_degeneracy),
        ("5", "circuit routes, deferred measurement, ancilla independence", circuit_self_consistency),
        ("6", "hidden-variable trichotomy", hidden_trichotomy),
        ("7", "A-histories invariant under changes to C", einstein_locality),
        ("8", "normalized spin commutator scaling", spin_scaling),
        ("9", "wavepacket localization commutators", wavepacket),
    ];
    let mut failed = 0;
    for (id, title, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS criterion {id}: {title} | {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {id}: {title} | {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
