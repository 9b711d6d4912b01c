use clap::{Args, Parser, Subcommand, ValueEnum};
use pomdp_kit::apps::bandit::{gittins_index, opportunistic_with_projection, simulate_bandit, GittinsTable, Project, DEFAULT_TOL_M};
use pomdp_kit::apps::presets::{example1, example2, example3, example4, load_preset, Preset};
use pomdp_kit::apps::social::solve_social_learning_stop;
use pomdp_kit::bounds::{lp_bounds, rank1_bounds, sandwich_filter};
use pomdp_kit::filters::{expected_cost, hmm_filter_step, simulate_trajectory};
use pomdp_kit::model::{Mdp, StoppingModel};
use pomdp_kit::myopic::{
    optimize_overlap_2action, overlap_volume, percent_loss, table_csv, BoundMode, LossStart, TableRow,
};
use pomdp_kit::orders::{fosd_compare, is_tp2, mlr_compare};
use pomdp_kit::solver::exact::{solve_finite_horizon, value_iteration_discounted, Method, DEFAULT_BUDGET};
use pomdp_kit::solver::grid::{argmin_low, BeliefProblem, GridSolver, Interp};
use pomdp_kit::solver::lovejoy::lovejoy_bounds;
use pomdp_kit::spsa::{spsa_fit, SpsaHyper};
use pomdp_kit::structural::{
    compare_mdp_costs, compare_pomdp_costs, pomdp_assumption_report, stopping_assumption_report, transmission_policy_check,
    Perturbation,
};
use pomdp_kit::{fmt12, Error, Matrix, PomdpModel, Result};
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pomdp", version, about = "POMDP solvers and structural-result checks")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker thread cap (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Preset name or path to a model JSON file.
    #[arg(long)]
    model: String,
    /// Overrides the discount factor.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Ip,
    Monahan,
    Lovejoy,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareKind {
    Mdp,
    Transition,
    Observation,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a model; JSON vector sets for exact methods, CSV grids otherwise.
    Solve {
        #[command(flatten)]
        m: ModelArg,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value = "ip")]
        method: SolveMethod,
        /// Infinite-horizon value iteration to tolerance `eps`.
        #[arg(long)]
        discounted: bool,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Grid resolution for lovejoy and grid methods.
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// Report (value, action) at this belief instead of the full solution.
        #[arg(long)]
        belief: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Run the belief filter on an observation sequence (1-based).
    Filter {
        #[command(flatten)]
        m: ModelArg,
        #[arg(long)]
        observations: String,
        #[arg(long, default_value_t = 1)]
        action: usize,
        #[arg(long)]
        pi0: Option<String>,
        /// Run lower/exact/upper filters with MLR bounds on P.
        #[arg(long)]
        sandwich: bool,
        /// Use LP bounds with this epsilon instead of rank-1 bounds.
        #[arg(long)]
        lp_eps: Option<f64>,
    },
    /// Assumption reports and stochastic-order tests.
    Check {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        assumptions: bool,
        /// Compare two beliefs "a,b,..": prints MLR and FOSD verdicts.
        #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
        order: Option<Vec<String>>,
        /// TP2 test of a matrix "a,b;c,d".
        #[arg(long)]
        tp2: Option<String>,
    },
    /// Overlap volume and percent-loss tables for myopic policy bounds.
    Myopic {
        #[arg(long, group = "which")]
        table1a: bool,
        #[arg(long, group = "which")]
        table1c: bool,
        #[arg(long, group = "which")]
        table1d: bool,
        #[arg(long, group = "which")]
        table1f: bool,
        #[arg(long, group = "which")]
        model: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Comma-separated discount factors.
        #[arg(long, default_value = "0.4,0.5,0.6,0.7,0.8,0.9")]
        rho: String,
        /// Also estimate the two percent-loss columns.
        #[arg(long)]
        losses: bool,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        loss_horizon: usize,
    },
    /// Fit a linear threshold stopping policy; prints the best restart trace.
    Spsa {
        #[command(flatten)]
        m: ModelArg,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 100)]
        batch: usize,
    },
    /// Two-project bandit: Gittins-table and opportunistic rewards.
    Bandit {
        #[arg(long, default_value = "bandit")]
        model: String,
        /// Initial beliefs of the projects, "a,b;c,d".
        #[arg(long, default_value = "0.5,0.5;0.2,0.8")]
        pi0: String,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 60)]
        horizon: usize,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// Print the index of one belief instead of simulating.
        #[arg(long)]
        index: Option<String>,
    },
    /// Simulate one trajectory; CSV with 1-based states, observations and actions.
    Simulate {
        #[command(flatten)]
        m: ModelArg,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        /// exact, myopic or a fixed 1-based action.
        #[arg(long, default_value = "exact")]
        policy: String,
        #[arg(long)]
        pi0: Option<String>,
    },
    /// Check a cost ordering between two models.
    Compare {
        #[command(flatten)]
        m: ModelArg,
        /// Second model; omit to garble the first with --garble.
        #[arg(long)]
        other: Option<String>,
        /// Right factor R applied to every B(u) of the first model.
        #[arg(long)]
        garble: Option<String>,
        #[arg(long, value_enum, default_value = "observation")]
        kind: CompareKind,
        #[arg(long, default_value_t = 5)]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("bad number '{t}'"))))
        .collect()
}

fn parse_matrix(s: &str) -> Result<Matrix> {
    let rows = s.split(';').map(parse_vec).collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

fn parse_indices(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(Error::Invalid(format!("bad 1-based index '{t}'"))),
        })
        .collect()
}

fn load(name: &str, rho: Option<f64>) -> Result<Preset> {
    let path = std::path::Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{name}: {e}")))?;
        let mut m = PomdpModel::from_json(&text)?;
        if let Some(r) = rho {
            m.rho = r;
        }
        return Ok(Preset::Pomdp(m));
    }
    load_preset(name, rho)
}

fn load_pomdp(m: &ModelArg) -> Result<PomdpModel> {
    load(&m.model, m.rho)?.to_pomdp()
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn belief_or_uniform(s: &Option<String>, n: usize) -> Result<Vec<f64>> {
    let pi = s.as_deref().map(parse_vec).transpose()?.unwrap_or_else(|| uniform(n));
    pomdp_kit::model::check_belief(&pi)?;
    if pi.len() != n {
        return Err(Error::DimensionMismatch(format!("belief has {} entries, model has {n} states", pi.len())));
    }
    Ok(pi)
}

fn grid_csv<P: BeliefProblem + ?Sized>(problem: &P, resolution: usize, horizon: Option<usize>, eps: f64) -> Result<String> {
    let solver = GridSolver::new(problem, resolution, Interp::default_for(problem.num_states()));
    let sol = match horizon {
        Some(n) => solver.solve_finite(n),
        None => solver.solve_discounted(eps, 1_000_000)?,
    };
    let mut s: String = (1..=problem.num_states()).map(|i| format!("pi_{i},")).collect();
    s += "value,action\n";
    for (k, node) in solver.grid.nodes.iter().enumerate() {
        for v in node {
            s += &fmt12(*v);
            s.push(',');
        }
        s += &format!("{},{}\n", fmt12(sol.values[k]), sol.policy[k] + 1);
    }
    Ok(s)
}

fn solve_pomdp(model: &PomdpModel, horizon: Option<usize>, method: SolveMethod, discounted: bool, eps: f64, resolution: usize, belief: &Option<String>, budget: usize) -> Result<String> {
    let n = horizon.or(model.horizon);
    if !discounted && n.is_none() && matches!(method, SolveMethod::Ip | SolveMethod::Monahan | SolveMethod::Lovejoy) {
        return Err(Error::Invalid("finite-horizon solve needs --horizon (or use --discounted)".into()));
    }
    match method {
        SolveMethod::Ip | SolveMethod::Monahan => {
            let res = if discounted {
                value_iteration_discounted(model, eps, budget, 100_000)?
            } else {
                let m = if matches!(method, SolveMethod::Ip) { Method::IncrementalPruning } else { Method::Monahan };
                solve_finite_horizon(model, n.unwrap(), m, budget)?
            };
            match belief {
                Some(b) => {
                    let pi = belief_or_uniform(&Some(b.clone()), model.x)?;
                    Ok(json!({ "value": res.value(&pi), "action": res.action(0, &pi) + 1 }).to_string())
                }
                None => Ok(res.to_json().to_string()),
            }
        }
        SolveMethod::Lovejoy => {
            let lb = lovejoy_bounds(model, n.unwrap_or(1), resolution);
            if let Some(b) = belief {
                let pi = belief_or_uniform(&Some(b.clone()), model.x)?;
                return Ok(json!({ "lower": lb.lower_value(&pi), "upper": lb.upper_value(&pi) }).to_string());
            }
            let mut s: String = (1..=model.x).map(|i| format!("pi_{i},")).collect();
            s += "lower,upper\n";
            for node in &lb.solver.grid.nodes {
                for v in node {
                    s += &fmt12(*v);
                    s.push(',');
                }
                s += &format!("{},{}\n", fmt12(lb.lower_value(node)), fmt12(lb.upper_value(node)));
            }
            Ok(s)
        }
        SolveMethod::Grid => grid_csv(model, resolution, if discounted { None } else { n }, eps),
    }
}

fn cmd_solve(m: &ModelArg, horizon: Option<usize>, method: SolveMethod, discounted: bool, eps: f64, resolution: usize, belief: &Option<String>, budget: usize) -> Result<String> {
    match load(&m.model, m.rho)? {
        Preset::Pomdp(model) => solve_pomdp(&model, horizon, method, discounted, eps, resolution, belief, budget),
        Preset::Detection(q) => grid_csv(&q.model, resolution, horizon, eps),
        Preset::Sampling(s) => grid_csv(&s, resolution, horizon, eps),
        Preset::Social(p) => Ok(solve_social_learning_stop(&p, resolution + 1)?.to_csv()),
        Preset::Bandit(_) => Err(Error::Invalid("use the bandit subcommand".into())),
        Preset::Transmission(t) => {
            let (report, sol) = transmission_policy_check(&t);
            let mut s = String::from("slots_left,packets,channel,value,action\n");
            for n in 0..sol.values.len() {
                for i in 0..sol.values[n].len() {
                    for c in 0..sol.values[n][i].len() {
                        s += &format!("{},{},{},{},{}\n", n, i, c + 1, fmt12(sol.values[n][i][c]), sol.policy[n][i][c]);
                    }
                }
            }
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            Ok(s)
        }
    }
}

fn cmd_filter(m: &ModelArg, observations: &str, action: usize, pi0: &Option<String>, sandwich: bool, lp_eps: Option<f64>) -> Result<String> {
    let model = load_pomdp(m)?;
    if action == 0 || action > model.u {
        return Err(Error::Invalid(format!("action must be in 1..={}", model.u)));
    }
    let u = action - 1;
    let obs = parse_indices(observations)?;
    if let Some(&y) = obs.iter().find(|&&y| y >= model.y) {
        return Err(Error::Invalid(format!("observation {} out of range", y + 1)));
    }
    let pi0 = belief_or_uniform(pi0, model.x)?;
    if sandwich {
        let (lo, hi) = match lp_eps {
            Some(e) => lp_bounds(&model.p[u], e)?,
            None => rank1_bounds(&model.p[u])?,
        };
        return Ok(sandwich_filter(&lo, &model.p[u], &hi, &model.b[u], &obs, &pi0)?.to_csv());
    }
    let mut s = String::from("k,y");
    for i in 1..=model.x {
        s += &format!(",pi_{i}");
    }
    s += ",sigma\n";
    let row = |s: &mut String, k: usize, y: usize, pi: &[f64], sigma: f64| {
        *s += &format!("{k},{y}");
        for v in pi {
            *s += &format!(",{}", fmt12(*v));
        }
        *s += &format!(",{}\n", fmt12(sigma));
    };
    row(&mut s, 0, 0, &pi0, 1.0);
    let mut pi = pi0;
    for (k, &y) in obs.iter().enumerate() {
        let step = hmm_filter_step(&pi, y, u, &model)?;
        pi = step.posterior;
        row(&mut s, k + 1, y + 1, &pi, step.sigma);
    }
    Ok(s)
}

fn cmd_check(model: &Option<String>, rho: Option<f64>, assumptions: bool, order: &Option<Vec<String>>, tp2: &Option<String>) -> Result<String> {
    let mut out = serde_json::Map::new();
    if let Some(name) = model {
        if assumptions {
            let report = match load(name, rho)? {
                Preset::Detection(q) => stopping_assumption_report(&q.model)?,
                p => pomdp_assumption_report(&p.to_pomdp()?)?,
            };
            out.insert("assumptions".into(), report.to_json());
        }
    }
    if let Some(pair) = order {
        let (a, b) = (parse_vec(&pair[0])?, parse_vec(&pair[1])?);
        out.insert("mlr".into(), json!(mlr_compare(&a, &b)?));
        out.insert("fosd".into(), json!(fosd_compare(&a, &b)?));
    }
    if let Some(t) = tp2 {
        out.insert("tp2".into(), json!(is_tp2(&parse_matrix(t)?)));
    }
    if out.is_empty() {
        return Err(Error::Invalid("nothing to check: pass --model with --assumptions, --order or --tp2".into()));
    }
    Ok(serde_json::Value::Object(out).to_string())
}

#[allow(clippy::too_many_arguments)]
fn cmd_myopic(which: (bool, bool, bool, bool), model: &Option<String>, samples: usize, rhos: &str, losses: bool, paths: usize, loss_horizon: usize, seed: u64) -> Result<String> {
    let rhos = parse_vec(rhos)?;
    let builder: Box<dyn Fn(f64) -> Result<PomdpModel>> = match (which, model) {
        ((true, ..), _) => Box::new(example1),
        ((_, true, ..), _) => Box::new(example2),
        ((_, _, true, _), _) => Box::new(example3),
        ((.., true), _) => Box::new(|r| example4(0.2, 0.3, r)),
        (_, Some(name)) => {
            let name = name.clone();
            Box::new(move |r| load(&name, Some(r))?.to_pomdp())
        }
        _ => return Err(Error::Invalid("pick one of --table1a, --table1c, --table1d, --table1f or --model".into())),
    };
    let losses = losses || which.0;
    let mut rows = Vec::with_capacity(rhos.len());
    for rho in rhos {
        let m = builder(rho)?;
        let mode = if m.u == 2 { BoundMode::Fixed(optimize_overlap_2action(&m)?) } else { BoundMode::PerBelief };
        let (vol, vol_se) = overlap_volume(&m, &mode, samples, seed)?;
        let (l1, l2) = if losses {
            let ex = pomdp_kit::model::unit(m.x, m.x - 1);
            let l1 = percent_loss(&m, &mode, &LossStart::Fixed(ex), paths, loss_horizon, seed)?;
            let l2 = if vol < 1.0 { Some(percent_loss(&m, &mode, &LossStart::OutsideOverlap, paths, loss_horizon, seed)?) } else { None };
            (Some(l1), l2)
        } else {
            (None, None)
        };
        rows.push(TableRow { rho, vol, vol_se, l1, l2 });
    }
    Ok(table_csv(&rows))
}

fn cmd_spsa(m: &ModelArg, iterations: usize, restarts: usize, batch: usize, seed: u64) -> Result<String> {
    let model: StoppingModel = match load(&m.model, m.rho)? {
        Preset::Detection(q) => q.model,
        _ => return Err(Error::Invalid("spsa needs a stopping preset (qd-classical, qd-ph)".into())),
    };
    let h = SpsaHyper { restarts, batch, ..SpsaHyper::default() };
    let fit = spsa_fit(&model, iterations, seed, &h);
    eprintln!(
        "{}",
        json!({
            "theta": fit.theta,
            "best_restart": fit.best + 1,
            "final_costs": fit.final_costs,
            "hyper": { "delta": h.delta, "gamma": h.gamma, "eps": h.eps, "zeta": h.zeta, "s": h.s, "batch": h.batch, "horizon": h.horizon },
        })
    );
    Ok(fit.traces[fit.best].to_csv())
}

fn cmd_bandit(model: &str, pi0: &str, episodes: usize, horizon: usize, points: usize, resolution: usize, index: &Option<String>, seed: u64) -> Result<String> {
    let project: Project = match load(model, None)? {
        Preset::Bandit(p) => p,
        _ => return Err(Error::Invalid("bandit needs a bandit preset".into())),
    };
    if let Some(b) = index {
        let pi = belief_or_uniform(&Some(b.clone()), project.r.len())?;
        return Ok(json!({ "index": gittins_index(&project, &pi, DEFAULT_TOL_M)? }).to_string());
    }
    let pi0 = parse_matrix(pi0)?.to_rows();
    for p in &pi0 {
        pomdp_kit::model::check_belief(p)?;
    }
    let table = GittinsTable::build(&project, points, DEFAULT_TOL_M, resolution)?;
    let gittins = |b: &[Vec<f64>]| {
        let idx: Vec<f64> = b.iter().map(|p| -table.value(p)).collect();
        argmin_low(&idx)
    };
    let (gm, gs) = simulate_bandit(&project, &pi0, &gittins, episodes, horizon, seed);
    let (om, os) = simulate_bandit(&project, &pi0, &opportunistic_with_projection, episodes, horizon, seed);
    Ok(format!("rule,mean,se\ngittins,{},{}\nopportunistic,{},{}\n", fmt12(gm), fmt12(gs), fmt12(om), fmt12(os)))
}

fn cmd_simulate(m: &ModelArg, horizon: usize, policy: &str, pi0: &Option<String>, seed: u64) -> Result<String> {
    let model = load_pomdp(m)?;
    let pi0 = belief_or_uniform(pi0, model.x)?;
    let traj = match policy {
        "exact" => {
            let res = solve_finite_horizon(&model, horizon, Method::IncrementalPruning, DEFAULT_BUDGET)?;
            simulate_trajectory(&model, &pi0, &|k, pi| res.action(k, pi), horizon, seed)?
        }
        "myopic" => {
            let pol = |_: usize, pi: &[f64]| argmin_low(&(0..model.u).map(|u| expected_cost(&model, pi, u)).collect::<Vec<_>>());
            simulate_trajectory(&model, &pi0, &pol, horizon, seed)?
        }
        fixed => match fixed.parse::<usize>() {
            Ok(a) if (1..=model.u).contains(&a) => simulate_trajectory(&model, &pi0, &|_, _| a - 1, horizon, seed)?,
            _ => return Err(Error::Invalid(format!("policy must be exact, myopic or an action in 1..={}", model.u))),
        },
    };
    Ok(traj.to_csv())
}

fn to_mdp(m: &PomdpModel) -> Result<Mdp> {
    Mdp::new(m.p.clone(), m.c.clone(), m.rho, m.terminal_cost())
}

fn cmd_compare(m: &ModelArg, other: &Option<String>, garble: &Option<String>, kind: CompareKind, horizon: usize, samples: usize, seed: u64) -> Result<String> {
    let first = load_pomdp(m)?;
    let second = match (other, garble) {
        (Some(name), _) => load(name, m.rho)?.to_pomdp()?,
        (None, Some(r)) => {
            let r = parse_matrix(r)?;
            let b = first.b.iter().map(|b| b.mul(&r)).collect();
            PomdpModel::new(first.p.clone(), b, first.c.clone(), first.rho)?
        }
        (None, None) => return Err(Error::Invalid("pass --other or --garble".into())),
    };
    let cmp = match kind {
        CompareKind::Mdp => compare_mdp_costs(&to_mdp(&first)?, &to_mdp(&second)?, horizon)?,
        CompareKind::Transition => compare_pomdp_costs(&first, &second, Perturbation::Transition, horizon, samples, seed)?,
        CompareKind::Observation => compare_pomdp_costs(&first, &second, Perturbation::Observation, horizon, samples, seed)?,
    };
    Ok(serde_json::to_string(&cmp).expect("comparison serializes"))
}

fn run(cli: &Cli) -> Result<String> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Solve { m, horizon, method, discounted, eps, resolution, belief, budget } => {
            cmd_solve(m, *horizon, *method, *discounted, *eps, *resolution, belief, *budget)
        }
        Cmd::Filter { m, observations, action, pi0, sandwich, lp_eps } => cmd_filter(m, observations, *action, pi0, *sandwich, *lp_eps),
        Cmd::Check { model, rho, assumptions, order, tp2 } => cmd_check(model, *rho, *assumptions, order, tp2),
        Cmd::Myopic { table1a, table1c, table1d, table1f, model, samples, rho, losses, paths, loss_horizon } => {
            cmd_myopic((*table1a, *table1c, *table1d, *table1f), model, *samples, rho, *losses, *paths, *loss_horizon, seed)
        }
        Cmd::Spsa { m, iterations, restarts, batch } => cmd_spsa(m, *iterations, *restarts, *batch, seed),
        Cmd::Bandit { model, pi0, episodes, horizon, points, resolution, index } => {
            cmd_bandit(model, pi0, *episodes, *horizon, *points, *resolution, index, seed)
        }
        Cmd::Simulate { m, horizon, policy, pi0 } => cmd_simulate(m, *horizon, policy, pi0, seed),
        Cmd::Compare { m, other, garble, kind, horizon, samples } => cmd_compare(m, other, garble, *kind, *horizon, *samples, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().ok();
    }
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
