//! Executes a scenario against the library and collects a [`Report`].

use std::time::Instant;

use bellhist::chsh::{
    chsh_operator_spectrum, lhv_chsh, max_abs_chsh, normalized_commutator_ratio,
    quantum_correlation, ChshSetting, Choice, LhvModel,
};
use bellhist::circuit::{
    deferred_equivalence, joint_distribution, CircuitSpec, Route,
};
use bellhist::hidden::{
    evaluate_candidate, generate_candidates, search, setups, CandidateClass, SearchOutcome,
    IMPOSSIBILITY_THRESHOLD,
};
use bellhist::histories::{bell_master_distribution, induced_lhv_model, DEFAULT_CONSISTENCY_TOL};
use bellhist::locality::{locality_invariance, random_scenario, random_variation};
use bellhist::quantum::{
    born_probability, condition_on_outcome, conditional_ket, interval_projector, pauli, singlet,
    spin_half_ket, triangle_pulse, GridLine, Projector,
};
use bellhist::random::rng;
use bellhist::tensor::{commutator_norm, SpaceLayout};

use crate::error::{CliError, Result};
use crate::report::{Assertion, Cell, Report, ScenarioEcho, Table};
use crate::scenario::{
    ChshParams, CircuitParams, EprParams, GolfParams, HiddenSearchParams, Kind, LocalityParams,
    ScenarioFile, Setup, WavepacketParams, DEFAULT_SEED,
};

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Replaces the agreement tolerances of the scenario's assertions.
    pub tol: Option<f64>,
    pub timing: bool,
}

struct Ctx {
    seed: u64,
    tol: Option<f64>,
}

impl Ctx {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub fn run_scenario(file: &ScenarioFile, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let seed = opts.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    if let Some(t) = opts.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::field("--tol", format!("must be positive and finite, got {t}")));
        }
    }
    let ctx = Ctx { seed, tol: opts.tol };
    let echo = |parameters| ScenarioEcho {
        name: file.name.clone(),
        kind: file.kind.name().to_string(),
        seed,
        parameters,
    };
    let mut report = match file.kind {
        Kind::Epr => {
            let p: EprParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_epr(&p, &ctx, &mut r)?;
            r
        }
        Kind::Golf => {
            let p: GolfParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_golf(&p, &ctx, &mut r)?;
            r
        }
        Kind::Chsh => {
            let p: ChshParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_chsh(&p, &ctx, &mut r)?;
            r
        }
        Kind::Circuit => {
            let p: CircuitParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_circuit(&p, &ctx, &mut r)?;
            r
        }
        Kind::HiddenSearch => {
            let p: HiddenSearchParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_hidden(&p, &ctx, &mut r)?;
            r
        }
        Kind::Locality => {
            let p: LocalityParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_locality(&p, &ctx, &mut r)?;
            r
        }
        Kind::Wavepacket => {
            let p: WavepacketParams = file.params()?;
            let mut r = Report::new(echo(param_value(&p)));
            run_wavepacket(&p, &ctx, &mut r)?;
            r
        }
    };
    if opts.timing {
        report.duration_secs = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

fn param_value<T: serde::Serialize>(p: &T) -> serde_json::Value {
    serde_json::to_value(p).expect("parameters serialize")
}

const SIGNS: [&str; 2] = ["+", "-"];

fn run_epr(p: &EprParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(1e-12);
    let psi = singlet();
    let spec = CircuitSpec::qubit_axes(psi.clone(), &[p.axis], &[p.axis])?;
    let t3 = joint_distribution(&spec, Route::T3)?;
    let reduced = joint_distribution(&spec, Route::Reduced)?;
    let kets = [spin_half_ket(p.axis, 1), spin_half_ket(p.axis, -1)];

    let mut table = Table::new("outcomes", &["A", "B", "born", "circuit_t3", "circuit_reduced"]);
    let mut worst: f64 = 0.0;
    let mut borns = Vec::with_capacity(4);
    for (i, u) in kets.iter().enumerate() {
        for (j, v) in kets.iter().enumerate() {
            let born = born_probability(&psi, &Projector::onto(&u.kron(v)?)?)?;
            borns.push(born);
            let a = t3.prob(i, j, 1, 1)?;
            let b = reduced.prob(i, j, 1, 1)?;
            worst = worst.max((born - a).abs()).max((born - b).abs());
            table.push(vec![
                Cell::text(SIGNS[i]),
                Cell::text(SIGNS[j]),
                Cell::checked(born, tol),
                Cell::checked(a, tol),
                Cell::checked(b, tol),
            ]);
        }
    }
    report.table(table);
    let expected = [0.0, 0.5, 0.5, 0.0];
    let dev = borns
        .iter()
        .zip(expected)
        .map(|(b, e)| (b - e).abs())
        .fold(0.0, f64::max);
    report.assert(Assertion::at_most("born table matches (0, 1/2, 1/2, 0)", dev, tol));
    report.assert(Assertion::at_most("circuit routes match the Born table", worst, tol));

    let layout = SpaceLayout::new([("A", 2), ("B", 2)])?;
    let plus = Projector::onto(&kets[0])?;
    let cond = condition_on_outcome(&psi, &plus, &layout, "A")?;
    let pr_minus = born_probability_rho(&cond.rho, &kets[1]);
    let (prob_ket, ket) = conditional_ket(&psi, &kets[0], &layout, "A")?;
    let route_dev = ket.density().max_abs_diff(&cond.rho).max((prob_ket - cond.prob).abs());
    let mut ctable = Table::new("conditionals", &["quantity", "value"]);
    ctable.push(vec![Cell::text("Pr(A=+)"), Cell::checked(cond.prob, tol)]);
    ctable.push(vec![Cell::text("Pr(B=-|A=+)"), Cell::checked(pr_minus, tol)]);
    ctable.push(vec![Cell::text("conditional ket vs partial trace"), Cell::checked(route_dev, tol)]);
    report.table(ctable);
    report.assert(Assertion::at_most("Pr(B=-|A=+) = 1", (pr_minus - 1.0).abs(), tol));
    report.assert(Assertion::at_most("conditional-ket and partial-trace routes agree", route_dev, tol));
    Ok(())
}

fn born_probability_rho(rho: &bellhist::CMatrix, v: &bellhist::Ket) -> f64 {
    v.expectation(rho).re
}

fn run_golf(p: &GolfParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(1e-12);
    if p.dims.is_empty() {
        return Err(CliError::field("parameters.dims", "needs at least one dimension"));
    }
    let mut table = Table::new("normalized_commutator", &["dim", "j", "ratio"]);
    let mut worst: f64 = 0.0;
    for &d in &p.dims {
        let ratio = normalized_commutator_ratio(d)?;
        worst = worst.max((ratio - 1.0).abs());
        table.push(vec![
            Cell::int(d),
            Cell::num((d as f64 - 1.0) / 2.0),
            Cell::checked(ratio, tol),
        ]);
    }
    report.table(table);
    report.assert(Assertion::at_most("ratio is 1 for every dimension", worst, tol));
    Ok(())
}

fn run_chsh(p: &ChshParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let along = pauli::along;
    let setting = ChshSetting::new(
        [along(p.a), along(p.a_prime)],
        [along(p.b), along(p.b_prime)],
    )?;
    let spectrum = chsh_operator_spectrum(&setting)?;
    let mut table = Table::new("w_hat_spectrum", &["index", "eigenvalue"]);
    for (k, e) in spectrum.eigenvalues.iter().enumerate() {
        table.push(vec![Cell::int(k), Cell::num(*e)]);
    }
    report.table(table);
    let tsirelson = 2.0 * std::f64::consts::SQRT_2;
    let extreme = spectrum.max_eig.max(-spectrum.min_eig);
    report.assert(Assertion::at_most("spectrum within ±2√2", extreme, tsirelson + ctx.tol(1e-10)));
    if setting.local_pairs_commute(1e-12) {
        report.assert(Assertion::at_most("commuting pairs keep the spectrum within ±2", extreme, 2.0 + 1e-9));
    }

    let psi = singlet();
    let mut corr = Table::new("singlet_correlations", &["setting_a", "setting_b", "correlation"]);
    let names = ["a", "a'"];
    let bnames = ["b", "b'"];
    let choices = [Choice::Unprimed, Choice::Primed];
    let mut table_vals = vec![vec![0.0; 2]; 2];
    for (i, ci) in choices.iter().enumerate() {
        for (j, cj) in choices.iter().enumerate() {
            let c = quantum_correlation(&psi, &setting, *ci, *cj)?;
            table_vals[i][j] = c;
            corr.push(vec![Cell::text(names[i]), Cell::text(bnames[j]), Cell::num(c)]);
        }
    }
    report.table(corr);
    let w = table_vals[0][0] + table_vals[0][1] + table_vals[1][0] - table_vals[1][1];
    report.note(format!("singlet CHSH value for the given settings: {w:.12}"));

    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for k in 0..p.n_models {
        let outcomes: &[f64] = if k % 2 == 0 { &[-1.0, 1.0] } else { &[-1.0, 0.0, 1.0] };
        let m = LhvModel::random(&mut r, p.n_lambda.max(1), outcomes);
        worst = worst.max(lhv_chsh(&m, "a", "a'", "b", "b'")?.abs());
    }
    let mut sweep = Table::new("lhv_sweep", &["models", "max_abs_chsh"]);
    sweep.push(vec![Cell::int(p.n_models), Cell::checked(worst, 1e-12)]);
    report.table(sweep);
    report.assert(Assertion::at_most("local models obey |CHSH| <= 2", worst, 2.0 + 1e-12));
    Ok(())
}

fn run_circuit(p: &CircuitParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(1e-12);
    let mut r = rng(ctx.seed);
    let mut table = Table::new(
        "specs",
        &["index", "route_deviation", "deferred_deviation", "independence_deviation"],
    );
    let (mut w_route, mut w_def, mut w_ind): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..p.n_specs {
        let spec = CircuitSpec::random(&mut r, (p.dim_a, p.dim_b), (p.settings_a, p.settings_b))?;
        let t3 = joint_distribution(&spec, Route::T3)?;
        let red = joint_distribution(&spec, Route::Reduced)?;
        let route = t3.max_abs_diff(&red);
        let def = deferred_equivalence(&spec)?;
        let mut ind: f64 = 0.0;
        for a in 1..=p.settings_a {
            for b in 1..=p.settings_b {
                ind = ind.max((t3.ancilla_marginal(a, b)? - t3.pr_a(a)? * t3.pr_b(b)?).abs());
            }
        }
        w_route = w_route.max(route);
        w_def = w_def.max(def);
        w_ind = w_ind.max(ind);
        table.push(vec![
            Cell::int(k),
            Cell::checked(route, tol),
            Cell::checked(def, tol),
            Cell::checked(ind, tol),
        ]);
    }
    report.table(table);
    report.assert(Assertion::at_most("t3 and reduced routes agree", w_route, tol));
    report.assert(Assertion::at_most("deferred measurement gives the same statistics", w_def, tol));
    report.assert(Assertion::at_most("Pr(a,b) = Pr(a)Pr(b)", w_ind, tol));
    Ok(())
}

fn setup_spec(s: Setup) -> Result<CircuitSpec> {
    Ok(match s {
        Setup::VonNeumannSinglet => setups::von_neumann_singlet()?,
        Setup::CommutingA => setups::commuting_a()?,
        Setup::TiltedSinglet => setups::tilted_singlet()?,
        Setup::LiteralXz => setups::literal_xz()?,
    })
}

fn outcome_name(o: SearchOutcome) -> &'static str {
    match o {
        SearchOutcome::Found => "found",
        SearchOutcome::NotFoundInClass => "not_found_in_class",
        SearchOutcome::Impossible => "impossible",
    }
}

fn run_hidden(p: &HiddenSearchParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(p.tol);
    let spec = setup_spec(p.setup)?;

    let vn = &generate_candidates(CandidateClass::VonNeumann, &spec)?[0];
    let e = evaluate_candidate(vn, &spec, tol)?;
    let mut vt = Table::new(
        "von_neumann_candidate",
        &["consistent", "independent", "factorizing", "factorization_residual"],
    );
    vt.push(vec![
        Cell::flag(e.consistent),
        Cell::flag(e.independent),
        Cell::flag(e.factorizing),
        Cell::num(e.factorization_residual),
    ]);
    report.table(vt);

    let v = search(&spec, p.class, tol)?;
    let mut t = Table::new(
        "verdict",
        &["outcome", "certificate", "candidates_examined"],
    );
    t.push(vec![
        Cell::text(outcome_name(v.outcome)),
        v.certificate
            .map_or_else(|| Cell::text("none"), |c| Cell::num(c.value.abs())),
        Cell::int(v.candidates_examined),
    ]);
    report.table(t);

    let mut rt = Table::new(
        "candidate_residuals",
        &["index", "consistency", "independence", "factorization", "admissible"],
    );
    for (k, e) in v.residuals.iter().enumerate() {
        rt.push(vec![
            Cell::int(k),
            Cell::checked(e.consistency_residual, tol),
            match e.independence_residual {
                Some(x) => Cell::checked(x, tol),
                None => Cell::text("undefined"),
            },
            Cell::checked(e.factorization_residual, tol),
            Cell::flag(e.admissible()),
        ]);
    }
    report.table(rt);
    if let Some(n) = &v.note {
        report.note(n.clone());
    }

    let cert = v.certificate.map(|c| c.value.abs());
    report.assert(Assertion::holds(
        "found and impossible are exclusive",
        !(v.outcome == SearchOutcome::Found && cert.is_some_and(|c| c > IMPOSSIBILITY_THRESHOLD)),
    ));
    if let Some(expect) = p.expect {
        report.assert(Assertion::holds(
            format!("verdict is {}", outcome_name(expect)),
            v.outcome == expect,
        ));
    }
    if let (SearchOutcome::Found, Some(w)) = (v.outcome, &v.witness) {
        let dist = bell_master_distribution(&spec, w, DEFAULT_CONSISTENCY_TOL)?;
        let model = induced_lhv_model(&dist, spec.dim_a(), spec.dim_b())?;
        let corr: Vec<Vec<f64>> = (0..model.a_settings().len())
            .map(|i| (0..model.b_settings().len()).map(|j| model.correlation_by_index(i, j)).collect())
            .collect();
        let worst = max_abs_chsh(&corr).map_or(0.0, |c| c.value.abs());
        let admitted = &v.residuals[v.candidates_examined - 1];
        let residual = admitted
            .consistency_residual
            .max(admitted.independence_residual.unwrap_or(f64::INFINITY))
            .max(admitted.factorization_residual);
        report.assert(Assertion::at_most("witness residuals", residual, tol));
        report.assert(Assertion::at_most("induced local model obeys |CHSH| <= 2", worst, 2.0 + 1e-10));
    }
    if let Some(c) = cert {
        if (c - 2.0).abs() <= 1e-10 {
            report.assert(Assertion::holds(
                "saturation is reported, not treated as violation",
                v.outcome != SearchOutcome::Impossible && v.note.as_deref().is_some_and(|n| n.contains("saturates")),
            ));
        }
    }
    Ok(())
}

fn run_locality(p: &LocalityParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(1e-12);
    if p.n_variations < 2 {
        return Err(CliError::field("parameters.n_variations", "needs at least 2"));
    }
    let mut r = rng(ctx.seed);
    let dims = (p.dims[0], p.dims[1], p.dims[2]);
    let scn = random_scenario(&mut r, dims, p.n_times)?;
    let variations: Vec<_> = (0..p.n_variations).map(|_| random_variation(&mut r, &scn)).collect();
    let rep = locality_invariance(&scn, &variations)?;
    let mut t = Table::new("invariance", &["variations", "max_deviation", "max_dual_form_deviation", "consistent"]);
    t.push(vec![
        Cell::int(rep.variations),
        Cell::checked(rep.max_deviation, tol),
        Cell::checked(rep.max_dual_form_deviation, tol),
        Cell::flag(rep.consistent.first().copied().unwrap_or(false)),
    ]);
    report.table(t);
    report.assert(Assertion::at_most("A-history matrix unchanged across variations", rep.max_deviation, tol));
    report.assert(Assertion::at_most("full and reduced forms agree", rep.max_dual_form_deviation, tol));
    report.assert(Assertion::holds("consistency unchanged across variations", rep.consistency_invariant()));
    Ok(())
}

fn run_wavepacket(p: &WavepacketParams, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let tol = ctx.tol(1e-12);
    let [x1, x2] = p.support;
    if !(x1 < p.cut && p.cut < x2) {
        return Err(CliError::field("parameters.cut", "must lie strictly inside the support"));
    }
    let grid = GridLine::new(p.n_points, p.x_min, p.x_max)?;
    let psi = Projector::onto(&grid.sample(triangle_pulse(x1, x2))?)?;
    let norm = |lo: f64, hi: f64| commutator_norm(psi.matrix(), interval_projector(&grid, lo, hi).matrix());
    let cut = norm(p.x_min, p.cut)?;
    let covering = norm(x1 - 1e-9, x2 + 1e-9)?;
    let disjoint_hi = x2 + (p.x_max - x2) / 2.0;
    let disjoint = norm(disjoint_hi.min(p.x_max), p.x_max)?;
    let mut t = Table::new("commutators", &["interval", "norm"]);
    t.push(vec![Cell::text(format!("[{}, {}]", p.x_min, p.cut)), Cell::num(cut)]);
    t.push(vec![Cell::text(format!("[{x1}, {x2}]")), Cell::checked(covering, tol)]);
    t.push(vec![Cell::text(format!("[{disjoint_hi}, {}]", p.x_max)), Cell::checked(disjoint, tol)]);
    report.table(t);
    report.assert(Assertion::above("a cut inside the support does not commute", cut, 0.1));
    report.assert(Assertion::at_most("an interval covering the support commutes", covering, tol));
    report.assert(Assertion::at_most("an interval missing the support commutes", disjoint, tol));
    Ok(())
}
