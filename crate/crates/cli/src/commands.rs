//! One function per command, each turning a validated scenario into a report.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robagg_core::applications::{
    asdf, demo_dictator, demo_invariance, ellsberg_run, estimate_parameters, forward_model, james_stein_closed_form,
    james_stein_weights, james_stein_wle, monotone_acts, sdf_project, treatment_foc_root, treatment_solve,
    EstimationInput, TrueParameters, WelfareTable, BASELINE_WELFARE,
};
use robagg_core::simplex::expectation;
use robagg_core::{
    chernoff_point, entropic_minimizer, intersection_witness, kl, kl_project_to_intersection, meu_value,
    social_belief_for_act, social_utility, variational_phi_value, worst_case_tilt, Dist, Lambda, NegativeEntropy,
    Penalty, StateVector, Witness,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::report::{format_g, Cell, Report};
use crate::scenario::{dist, Command, LambdaSpec, Scenario};

/// Run-time knobs from the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub seed: u64,
    pub samples: usize,
    /// Overrides the tolerance of a command's built-in check.
    pub tol: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self { seed: 0, samples: 1000, tol: None }
    }
}

impl Options {
    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub fn execute(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    match scenario.command {
        Command::Evaluate => evaluate(scenario),
        Command::Aggregate => aggregate(scenario),
        Command::Project => project(scenario),
        Command::Chernoff => chernoff(scenario),
        Command::Treatment => treatment(scenario, opts),
        Command::Ellsberg => ellsberg(scenario),
        Command::Estimate => estimate(scenario, opts),
        Command::Asdf => pricing(scenario),
        Command::Sdf => sdf(scenario, opts),
        Command::JamesStein => james_stein(scenario, opts),
        Command::DemoInvariance => invariance(scenario, opts),
        Command::DemoDictator => dictator(scenario, opts),
    }
}

fn lambda_text(l: Lambda) -> String {
    match l {
        Lambda::Finite(v) => format_g(v, 12),
        Lambda::Infinite => "inf".into(),
    }
}

fn finite_lambda(scenario: &Scenario) -> CliResult<f64> {
    match scenario.lambda() {
        Lambda::Finite(l) => Ok(l),
        Lambda::Infinite => {
            Err(CliError::schema(format!("command \"{}\" needs a finite planner.lambda", scenario.command)))
        }
    }
}

fn header_with_states(lead: &[&str], states: &[String], prefix: &str) -> Vec<String> {
    lead.iter().map(|s| s.to_string()).chain(states.iter().map(|s| format!("{prefix}{s}"))).collect()
}

fn dist_cells(q: &Dist) -> impl Iterator<Item = Cell> + '_ {
    q.iter().map(|v| Cell::Num(*v))
}

/// State labels from the scenario when they fit, `s1..sn` otherwise.
fn labels_for(scenario: &Scenario, n: usize) -> Vec<String> {
    let declared = scenario.state_labels();
    if declared.len() == n {
        declared.to_vec()
    } else {
        (1..=n).map(|i| format!("s{i}")).collect()
    }
}

fn evaluate(scenario: &Scenario) -> CliResult<Report> {
    let profile = scenario.profile()?;
    let planner = scenario.planner()?;
    let states = scenario.state_labels();
    let mut report = Report::new(
        format!("evaluate: lambda = {}", lambda_text(planner.lambda())),
        header_with_states(&["act", "value", "meu_value"], states, "worst_"),
    );
    for act in profile.acts().keys() {
        let u0 = social_utility(profile, act)?;
        let meu = meu_value(&u0, planner.structured())?;
        let mut row: Vec<Cell> = vec![act.as_str().into()];
        match planner.penalty() {
            Penalty::Kl => {
                let (value, structured) = entropic_minimizer(&u0, &planner)?;
                let worst = match planner.lambda() {
                    Lambda::Infinite => structured,
                    Lambda::Finite(l) => worst_case_tilt(&u0, &structured, l)?,
                };
                row.extend([value.into(), meu.into()]);
                row.extend(dist_cells(&worst));
            }
            Penalty::Phi(_) => {
                let value = variational_phi_value(&u0, &planner)?;
                row.extend([value.into(), meu.into()]);
                row.extend(states.iter().map(|_| Cell::Empty));
            }
        }
        report.row(row);
    }
    Ok(report)
}

fn aggregate(scenario: &Scenario) -> CliResult<Report> {
    let profile = scenario.profile()?;
    let lambda = finite_lambda(scenario)?;
    let balls = scenario.balls()?;
    let names = scenario.agent_names();
    let mut header: Vec<String> = ["act", "state", "belief", "level"].map(String::from).to_vec();
    header.extend(names.iter().map(|n| format!("weight_{n}")));
    let mut report = Report::new(format!("aggregate: social beliefs at lambda = {}", format_g(lambda, 12)), header);
    for act in profile.acts().keys() {
        let u0 = social_utility(profile, act)?;
        let levels = profile.act_levels(act)?;
        let r = social_belief_for_act(&u0, &levels, &balls, profile.beta(), lambda)?;
        for (s, label) in scenario.state_labels().iter().enumerate() {
            let level =
                r.weights_by_level.iter().position(|l| l.states.contains(&s)).expect("levels partition the states");
            let mut row: Vec<Cell> = vec![act.as_str().into(), label.as_str().into(), r.belief[s].into()];
            row.push(Cell::Num(level as f64));
            row.extend(r.weights_by_level[level].weights.iter().map(|w| Cell::Num(*w)));
            report.row(row);
        }
        report.note(format!(
            "{act}: kkt residual {}, reconstruction residual {}, singleton {}, well conditioned {}, reference rank {}",
            format_g(r.kkt_residual, 3),
            format_g(r.reconstruction_residual, 3),
            r.singleton,
            r.well_conditioned,
            r.reference_rank
        ));
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectParams {
    p_star: Vec<f64>,
}

fn project(scenario: &Scenario) -> CliResult<Report> {
    let params: ProjectParams = scenario.params()?;
    let profile = scenario.profile()?;
    let p_star = dist(params.p_star, "command_params.p_star")?;
    let t = kl_project_to_intersection(&p_star, &scenario.balls()?, profile.beta())?;
    let states = scenario.state_labels();
    let mut report = Report::new(
        "project: relative-entropy projection of p_star onto the intersection",
        header_with_states(&["object", "weight", "kl_to_projection"], states, "q_"),
    );
    let mut row: Vec<Cell> = vec!["p_star".into(), t.sigma.into(), t.divergence.into()];
    row.extend(dist_cells(&p_star));
    report.row(row);
    let mut rebuilt: Vec<f64> = p_star.iter().map(|p| t.sigma * p).collect();
    for (agent, mu) in profile.agents().iter().zip(&t.mixture_weights) {
        let weight = (1.0 - t.sigma) * mu;
        for (acc, p) in rebuilt.iter_mut().zip(agent.reference().iter()) {
            *acc += weight * p;
        }
        let mut row: Vec<Cell> =
            vec![agent.name().into(), weight.into(), kl(agent.reference(), &t.projected)?.to_f64().into()];
        row.extend(dist_cells(agent.reference()));
        report.row(row);
    }
    let mut row: Vec<Cell> = vec!["projection".into(), Cell::Empty, 0.0.into()];
    row.extend(dist_cells(&t.projected));
    report.row(row);
    let residual = rebuilt.iter().zip(t.projected.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report.note(format!("sigma = {}, decomposition residual {}", format_g(t.sigma, 12), format_g(residual, 3)));
    Ok(report)
}

fn chernoff(scenario: &Scenario) -> CliResult<Report> {
    let profile = scenario.profile()?;
    let centers = profile.references();
    let c = chernoff_point(&centers, &NegativeEntropy)?;
    let states = scenario.state_labels();
    let mut report = Report::new(
        "chernoff: smallest common relative-entropy radius",
        header_with_states(&["object", "weight", "kl_to_point", "radius"], states, "q_"),
    );
    for ((agent, p), w) in profile.agents().iter().zip(&centers).zip(&c.weights) {
        let mut row: Vec<Cell> = vec![agent.name().into(), (*w).into(), kl(p, &c.point)?.to_f64().into(), Cell::Empty];
        row.extend(dist_cells(p));
        report.row(row);
    }
    let mut row: Vec<Cell> = vec!["chernoff_point".into(), Cell::Empty, Cell::Empty, c.radius.into()];
    row.extend(dist_cells(&c.point));
    report.row(row);
    let radii: Vec<f64> = profile.agents().iter().map(|a| a.radius()).collect();
    match intersection_witness(&centers, &radii, &NegativeEntropy)? {
        Witness::Found { excess, .. } => {
            report.note(format!("declared radii: intersection nonempty (max excess {})", format_g(excess, 3)))
        }
        Witness::Empty { min_excess } => {
            report.note(format!("declared radii: intersection empty (min max-excess {})", format_g(min_excess, 3)))
        }
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WelfareSpec {
    known: [f64; 2],
    new: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreatmentParams {
    mu: f64,
    #[serde(default)]
    welfare: Option<WelfareSpec>,
    /// Sweep of concern parameters; the planner's lambda when omitted.
    #[serde(default)]
    lambdas: Option<Vec<LambdaSpec>>,
}

fn treatment(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let params: TreatmentParams = scenario.params()?;
    let table = params.welfare.map_or(BASELINE_WELFARE, |w| WelfareTable { known: w.known, new: w.new });
    let lambdas: Vec<Lambda> =
        params.lambdas.map_or_else(|| vec![scenario.lambda()], |l| l.into_iter().map(|s| s.0).collect());
    let tol = opts.tol_or(1e-6);
    let mut report = Report::new(
        format!("treatment: share of the new treatment, mu = {}", format_g(params.mu, 12)),
        ["lambda", "mu", "beta_hat", "value", "interior", "foc_root"],
    );
    for lambda in lambdas {
        let r = treatment_solve(&table, lambda, params.mu)?;
        let root = match lambda {
            Lambda::Finite(l) if table == BASELINE_WELFARE => Some(treatment_foc_root(l, params.mu)),
            _ => None,
        };
        let lambda_cell = match lambda {
            Lambda::Finite(l) => Cell::Num(l),
            Lambda::Infinite => Cell::Num(f64::INFINITY),
        };
        report.row(vec![
            lambda_cell,
            params.mu.into(),
            r.beta_hat.into(),
            r.value.into(),
            r.interior.into(),
            root.into(),
        ]);
        if let Some(root) = root.filter(|r| *r > 0.0 && *r < 1.0) {
            report.check(
                (r.beta_hat - root).abs() <= tol,
                format!("lambda {}: beta_hat matches (lambda/3) log(2(1-mu)/mu)", lambda_text(lambda)),
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EllsbergParams {
    p1: f64,
    p2: f64,
    #[serde(default = "half")]
    mu: f64,
}

fn half() -> f64 {
    0.5
}

fn ellsberg(scenario: &Scenario) -> CliResult<Report> {
    let params: EllsbergParams = scenario.params()?;
    let lambda = scenario.lambda();
    let r = ellsberg_run(lambda, params.p1, params.p2, params.mu)?;
    let mut report = Report::new(
        format!(
            "ellsberg: lambda = {}, probability of red in the ambiguous urn = {}",
            lambda_text(lambda),
            format_g(r.red_probability, 12)
        ),
        ["bet", "value", "rank"],
    );
    for (name, value) in &r.values {
        let rank = r.ranking.iter().position(|tier| tier.contains(name)).expect("every bet is ranked") + 1;
        report.row(vec![(*name).into(), (*value).into(), Cell::Num(rank as f64)]);
    }
    report.note(format!("ranking: {}", r.ranking_string()));
    let agreement = params.p1 == params.p2;
    let disagreement = (params.p1 + params.p2 - 1.0).abs() <= 1e-12 && params.mu == 0.5;
    if agreement || disagreement {
        if lambda.is_infinite() {
            report.check(r.is_indifferent(), "all four bets indifferent at lambda = inf");
        } else {
            report.check(r.is_ambiguity_averse(), "piR ~ piB > fR ~ fB");
        }
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateParams {
    wealth: Vec<f64>,
    ce_lottery: Vec<f64>,
    ce_social_lottery: f64,
    ce_ambiguous: f64,
    #[serde(default = "default_stake")]
    stake: f64,
}

fn default_stake() -> f64 {
    100.0
}

fn estimate(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let p: EstimateParams = scenario.params()?;
    let input = EstimationInput {
        wealth: p.wealth,
        ce_lottery: p.ce_lottery,
        ce_social_lottery: p.ce_social_lottery,
        ce_ambiguous: p.ce_ambiguous,
        stake: p.stake,
    };
    let est = estimate_parameters(&input)?;
    let mut report =
        Report::new("estimate: preference parameters from certainty equivalents", ["parameter", "estimate"]);
    for (i, phi) in est.phi.iter().enumerate() {
        report.row(vec![format!("phi_{}", i + 1).into(), (*phi).into()]);
    }
    for (i, beta) in est.beta.iter().enumerate() {
        report.row(vec![format!("beta_{}", i + 1).into(), (*beta).into()]);
    }
    report.row(vec!["lambda".into(), est.lambda.as_f64().into()]);
    if est.lambda.is_infinite() {
        report.note("lambda reached the upper end of its search range and is reported as inf");
    }
    let truth = TrueParameters { phi: est.phi.clone(), beta1: est.beta[0], lambda: est.lambda };
    let back = forward_model(&truth, &input.wealth, input.stake)?;
    let residual = back
        .ce_lottery
        .iter()
        .zip(&input.ce_lottery)
        .map(|(a, b)| (a - b).abs())
        .chain([(back.ce_social_lottery - input.ce_social_lottery).abs()])
        .chain([(back.ce_ambiguous - input.ce_ambiguous).abs()].into_iter().filter(|_| !est.lambda.is_infinite()))
        .fold(0.0, f64::max);
    report.check(
        residual <= opts.tol_or(1e-6),
        format!("estimates reproduce the certainty equivalents (max residual {})", format_g(residual, 3)),
    );
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AsdfParams {
    q0: Vec<f64>,
    u0_next: Vec<f64>,
    #[serde(default = "one")]
    psi: f64,
    payoff: Vec<f64>,
    marginal_ratio: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn vector(values: Vec<f64>, what: &str) -> CliResult<StateVector> {
    StateVector::new(values).map_err(|e| CliError::schema(format!("{what}: {e}")))
}

fn pricing(scenario: &Scenario) -> CliResult<Report> {
    let p: AsdfParams = scenario.params()?;
    let q0 = dist(p.q0, "command_params.q0")?;
    let u = vector(p.u0_next, "command_params.u0_next")?;
    let payoff = vector(p.payoff, "command_params.payoff")?;
    let ratio = vector(p.marginal_ratio, "command_params.marginal_ratio")?;
    let lambda = scenario.lambda().as_f64();
    let r = asdf(&q0, &u, lambda, p.psi, &payoff, &ratio)?;
    let mut report = Report::new(
        format!("asdf: announcement-adjusted pricing at lambda = {}", lambda_text(scenario.lambda())),
        ["object", "q0", "tilt", "post_price", "value"],
    );
    for (s, label) in labels_for(scenario, q0.len()).iter().enumerate() {
        report.row(vec![label.as_str().into(), q0[s].into(), r.tilt[s].into(), r.post_prices[s].into(), Cell::Empty]);
    }
    let mean = expectation(&q0, &r.post_prices)?;
    for (name, v) in [("expected_post_price", mean), ("pre_price", r.pre_price), ("premium", r.premium)] {
        report.row(vec![name.into(), Cell::Empty, Cell::Empty, Cell::Empty, v.into()]);
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SdfParams {
    q0: Vec<f64>,
    payoff: Vec<f64>,
    target: f64,
}

fn sdf(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let p: SdfParams = scenario.params()?;
    let q0 = dist(p.q0, "command_params.q0")?;
    let payoff = vector(p.payoff, "command_params.payoff")?;
    let r = sdf_project(&q0, &payoff, p.target)?;
    let mut report = Report::new(
        format!("sdf: exponential tilt pricing the payoff at {}", format_g(p.target, 12)),
        ["object", "q0", "tilt", "payoff", "value"],
    );
    for (s, label) in labels_for(scenario, q0.len()).iter().enumerate() {
        report.row(vec![label.as_str().into(), q0[s].into(), r.tilt[s].into(), payoff[s].into(), Cell::Empty]);
    }
    let priced = expectation(&r.tilt, &payoff)?;
    report.row(vec!["ell".into(), Cell::Empty, Cell::Empty, Cell::Empty, r.ell.into()]);
    report.row(vec!["tilted_mean".into(), Cell::Empty, Cell::Empty, Cell::Empty, priced.into()]);
    report.check((priced - p.target).abs() <= opts.tol_or(1e-8), "tilted mean equals the target");
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JamesSteinParams {
    signals: Vec<f64>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

fn james_stein(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let p: JamesSteinParams = scenario.params()?;
    let estimate = james_stein_wle(&p.signals, p.weights.as_deref())?;
    let weights = match &p.weights {
        Some(w) => w.clone(),
        None => james_stein_weights(&p.signals)?,
    };
    let mut report = Report::new("jamesstein: weighted likelihood estimate", ["object", "signal", "weight", "value"]);
    for (i, (s, w)) in p.signals.iter().zip(&weights).enumerate() {
        report.row(vec![format!("s{i}").into(), (*s).into(), (*w).into(), Cell::Empty]);
    }
    report.row(vec!["estimate".into(), Cell::Empty, Cell::Empty, estimate.into()]);
    if p.weights.is_none() {
        let closed = james_stein_closed_form(&p.signals)?;
        report.row(vec!["closed_form".into(), Cell::Empty, Cell::Empty, closed.into()]);
        report.check(
            (estimate - closed).abs() <= opts.tol_or(1e-10) * (1.0 + closed.abs()),
            "preset weights reproduce the James-Stein closed form",
        );
    }
    Ok(report)
}

fn invariance(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let profile = scenario.profile()?;
    let beliefs = profile.references();
    let lambda = scenario.lambda();
    let tol = opts.tol_or(1e-8);
    let mut report = Report::new(
        format!(
            "demo-invariance: entropic value over the agents' beliefs vs {} hull samples, lambda = {}",
            opts.samples,
            lambda_text(lambda)
        ),
        ["act", "finite_value", "hull_value", "max_gap", "generator_attains"],
    );
    for act in profile.acts().keys() {
        let u0 = social_utility(profile, act)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let r = demo_invariance(&u0, &beliefs, lambda, opts.samples, &mut rng)?;
        report.row(vec![
            act.as_str().into(),
            r.finite_value.into(),
            r.hull_value.into(),
            r.max_gap.into(),
            r.minimizer_is_generator.into(),
        ]);
        report.check(
            r.max_gap <= tol && r.minimizer_is_generator,
            format!("{act}: gap {} within {}", format_g(r.max_gap, 3), format_g(tol, 3)),
        );
    }
    Ok(report)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictatorParams {
    /// Size of a seeded panel of random monotone acts; the scenario's acts
    /// are used when omitted.
    #[serde(default)]
    random_acts: Option<usize>,
}

fn dictator(scenario: &Scenario, opts: &Options) -> CliResult<Report> {
    let p: DictatorParams = scenario.params()?;
    let profile = scenario.profile()?;
    let candidates = profile.references();
    let (ids, acts): (Vec<String>, Vec<StateVector>) = match p.random_acts {
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let panel = monotone_acts(profile.states(), k, &mut rng);
            ((1..=k).map(|i| format!("m{i}")).collect(), panel)
        }
        None => {
            let ids: Vec<String> = profile.acts().keys().cloned().collect();
            let acts = ids.iter().map(|a| social_utility(profile, a)).collect::<Result<Vec<_>, _>>()?;
            (ids, acts)
        }
    };
    if let Some(i) = acts.iter().position(|a| !a.is_monotone()) {
        return Err(CliError::schema(format!("act \"{}\" is not monotone along the state order", ids[i])));
    }
    let r = demo_dictator(&candidates, &acts, scenario.lambda())?;
    let mut header: Vec<String> = vec!["agent".into(), "selected".into()];
    header.extend(ids.iter().cloned());
    let mut report =
        Report::new(format!("demo-dictator: candidate beliefs across {} monotone acts", acts.len()), header);
    for (c, agent) in profile.agents().iter().enumerate() {
        let mut row: Vec<Cell> = vec![agent.name().into(), (c == r.selected).into()];
        row.extend(r.table[c].iter().map(|v| Cell::Num(*v)));
        report.row(row);
    }
    report.note(format!("probability dictator: {}", profile.agents()[r.selected].name()));
    report.check(
        r.dominance_margin >= 0.0,
        format!("selected belief weakly dominates every candidate (margin {})", format_g(r.dominance_margin, 3)),
    );
    Ok(report)
}
