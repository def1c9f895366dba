use std::path::Path;

use coexist_core::optimizer::{build_lp, delivery_ceiling, solve, solve_point, sweep_delta, CurvePoint};
use coexist_core::policy_metrics::{evaluate, mse_from_error_rate, psnr_with_convention, PolicyFile};
use coexist_core::simulator::{self, mse_throughput_scatter, LinkModel, SimConfig};
use coexist_core::{GopChain, LinkFailureProbs, MseModelParams, Policy, PsnrConvention, SolverOptions};

use crate::config::{resolve_model, resolve_mse, LinkSource, Model, RunConfig};
use crate::error::CliError;
use crate::output::{csv_sink, sig};
use crate::{Cli, Command, Family, PolicyArgs};

struct Context {
    file: RunConfig,
    model: Model,
    mse: MseModelParams,
    psnr: PsnrConvention,
    seed: u64,
    digits: usize,
}

impl Context {
    fn fmt(&self, x: f64) -> String {
        sig(x, self.digits)
    }

    fn resolved_config(&self) -> RunConfig {
        RunConfig {
            model: self.model.to_config(),
            mse: Some(self.mse),
            psnr_convention: Some(self.psnr),
            seed: Some(self.seed),
            ..self.file.clone()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let model = resolve_model(&file.model, &cli.model)?;
    let mse = resolve_mse(file.mse.as_ref(), &cli.mse)?;
    let mut ctx = Context {
        psnr: cli.psnr_convention.or(file.psnr_convention).unwrap_or_default(),
        seed: cli.seed.or(file.seed).unwrap_or(1),
        digits: cli.precision,
        file,
        model,
        mse,
    };

    if let Command::Channel { .. } = cli.command {
        // The written config carries the derived probabilities.
        if let Some(path) = &cli.write_config {
            let LinkSource::Channel(_, probs) = ctx.model.link else {
                return Err(missing_channel());
            };
            let mut cfg = ctx.resolved_config();
            cfg.model = Model { link: LinkSource::Direct(probs), ..ctx.model.clone() }.to_config();
            cfg.save(path)?;
        }
    } else if let Some(path) = &cli.write_config {
        ctx.resolved_config().save(path)?;
    }

    match cli.command {
        Command::Channel { sample_fading } => cmd_channel(&ctx, sample_fading),
        Command::Solve { delta, sweep, out_policy, out_curve, list_states } => {
            cmd_solve(&mut ctx, delta, sweep, out_policy.as_deref(), out_curve.as_deref(), list_states)
        }
        Command::Evaluate { policy } => cmd_evaluate(&ctx, &policy),
        Command::Simulate { policy, slots, replications, sample_fading, out } => {
            cmd_simulate(&ctx, &policy, slots, replications, sample_fading, out.as_deref())
        }
        Command::Trace { policy, frames, force_loss, no_channel_loss, out } => {
            cmd_trace(&ctx, &policy, frames, &force_loss, no_channel_loss, out.as_deref())
        }
        Command::Scatter { p_grid, families, slots, out } => {
            cmd_scatter(&ctx, &p_grid, &families, slots, out.as_deref())
        }
    }
}

fn missing_channel() -> CliError {
    CliError::Usage("channel parameters required: --p-l, --p-d, --sigma2-l, --sigma2-d, --gamma (or a config with a channel section)".into())
}

fn cmd_channel(ctx: &Context, sample_fading: Option<u64>) -> Result<(), CliError> {
    let LinkSource::Channel(params, probs) = ctx.model.link else {
        return Err(missing_channel());
    };
    let closed = [("rho_l0", probs.rho_l0), ("rho_l1", probs.rho_l1), ("rho_d1", probs.rho_d1)];
    for (name, value) in closed {
        println!("{name} = {}", ctx.fmt(value));
    }
    if let Some(draws) = sample_fading {
        let est = simulator::sample_failure_probs(&params, draws, ctx.seed)?;
        for ((name, value), e) in closed.iter().zip([est.rho_l0, est.rho_l1, est.rho_d1]) {
            println!(
                "sampled {name} = {} stderr = {} z = {}",
                ctx.fmt(e.mean),
                ctx.fmt(e.stderr),
                ctx.fmt(e.z_score(*value))
            );
        }
    }
    Ok(())
}

/// Inclusive `start:stop:step` grid, or a comma-separated list.
pub fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("{what}: {msg} in '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("cannot parse '{s}'")));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if ![a, b, step].iter().all(|v| v.is_finite()) || step <= 0.0 || b < a {
                return Err(bad("expected start <= stop and step > 0"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()
        }
        [_] => text.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected start:stop:step")),
    };
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(bad("values must lie in [0, 1]"));
    }
    Ok(values)
}

const CURVE_HEADER: [&str; 7] =
    ["delta", "t_d2d", "d_lte_achieved", "p_tx_iframe", "p_tx_dframe_irx1", "p_tx_dframe_irx0", "feasible"];

fn write_curve(ctx: &Context, points: &[CurvePoint], path: Option<&Path>) -> Result<(), CliError> {
    let mut w = csv_sink(path)?;
    w.write_record(CURVE_HEADER)?;
    for p in points {
        w.write_record([
            ctx.fmt(p.delta),
            ctx.fmt(p.t_d2d),
            ctx.fmt(p.d_lte_achieved),
            ctx.fmt(p.p_tx_iframe),
            ctx.fmt(p.p_tx_dframe_irx1),
            ctx.fmt(p.p_tx_dframe_irx0),
            p.feasible.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e))?;
    Ok(())
}

fn write_policy(chain: &GopChain, policy: &Policy, path: &Path) -> Result<(), CliError> {
    let file = PolicyFile::from_policy(chain, policy)?;
    std::fs::write(path, file.to_json() + "\n").map_err(|e| CliError::io(path, e))
}

fn cmd_solve(
    ctx: &mut Context,
    delta: Option<f64>,
    sweep: Option<String>,
    out_policy: Option<&Path>,
    out_curve: Option<&Path>,
    list_states: bool,
) -> Result<(), CliError> {
    let chain = ctx.model.chain()?;
    if list_states {
        eprint!("{}", chain.describe());
    }
    let section = ctx.file.solve.clone().unwrap_or_default();
    let opts = SolverOptions::default();
    let (delta, sweep) = match (delta, sweep) {
        (None, None) => (section.delta, section.sweep),
        given => given,
    };
    match (delta, sweep) {
        (Some(delta), None) => {
            if !(0.0..=1.0).contains(&delta) {
                return Err(CliError::Usage(format!("--delta must lie in [0, 1], got {delta}")));
            }
            let point = solve_point(&chain, delta, &opts)?;
            if let Some(path) = out_curve {
                write_curve(ctx, std::slice::from_ref(&point), Some(path))?;
            }
            let Some(sol) = &point.solution else {
                let ceiling = delivery_ceiling(&chain, &opts)?;
                return Err(CliError::Infeasible(format!(
                    "delta {} is infeasible: the largest achievable delivery rate is {}",
                    ctx.fmt(delta),
                    ctx.fmt(ceiling)
                )));
            };
            if let Some(path) = out_policy {
                write_policy(&chain, &sol.policy, path)?;
            }
            println!("delta = {}", ctx.fmt(delta));
            println!("t_d2d = {}", ctx.fmt(sol.objective));
            println!("d_lte = {}", ctx.fmt(sol.d_lte));
            println!("p_tx_iframe = {}", ctx.fmt(point.p_tx_iframe));
            println!("p_tx_dframe_irx1 = {}", ctx.fmt(point.p_tx_dframe_irx1));
            println!("p_tx_dframe_irx0 = {}", ctx.fmt(point.p_tx_dframe_irx0));
            println!("balance_residual = {}", ctx.fmt(sol.residuals.balance));
            println!("normalization_residual = {}", ctx.fmt(sol.residuals.normalization));
            println!("delivery_slack = {}", ctx.fmt(sol.residuals.delivery_slack));
            println!("iterations = {}", sol.iterations);
            Ok(())
        }
        (None, Some(spec)) => {
            let deltas = parse_grid(&spec, "--sweep")?;
            let points = sweep_delta(&chain, &deltas, &opts)?;
            write_curve(ctx, &points, out_curve)?;
            if let Some(dir) = out_policy {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                for p in &points {
                    if let Some(sol) = &p.solution {
                        write_policy(
                            &chain,
                            &sol.policy,
                            &dir.join(format!("policy_delta_{}.json", ctx.fmt(p.delta))),
                        )?;
                    }
                }
            }
            let feasible = points.iter().filter(|p| p.feasible).count();
            eprintln!("{feasible} of {} delta values feasible", points.len());
            if feasible == 0 {
                let ceiling = delivery_ceiling(&chain, &opts)?;
                return Err(CliError::Infeasible(format!(
                    "every delta in the sweep is infeasible: the largest achievable delivery rate is {}",
                    ctx.fmt(ceiling)
                )));
            }
            Ok(())
        }
        _ => Err(CliError::Usage("solve needs --delta or --sweep".into())),
    }
}

/// The chain and policy named by the policy flags, or `default` if none is
/// given.
fn resolve_policy(ctx: &Context, args: &PolicyArgs, default: Option<Policy>) -> Result<(GopChain, Policy), CliError> {
    let check = |p: f64, flag: &str| {
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(CliError::Usage(format!("{flag} must lie in [0, 1], got {p}")))
        }
    };
    if let Some(path) = &args.policy {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file = PolicyFile::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let (chain, policy) =
            file.to_chain_and_policy().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let configured = ctx.model.chain()?;
        if configured.failure_probs() != chain.failure_probs() || configured.gop() != chain.gop() {
            eprintln!("note: using the model stored in {}", path.display());
        }
        return Ok((chain, policy));
    }
    let chain = ctx.model.chain()?;
    let policy = if let Some(p) = args.const_p {
        Policy::constant(check(p, "--const-p")?)
    } else if let Some(p) = args.heuristic_p {
        Policy::heuristic(check(p, "--heuristic-p")?)
    } else if let Some(p) = args.heuristic_aggressive_p {
        Policy::heuristic_aggressive(check(p, "--heuristic-aggressive-p")?)
    } else if let Some(delta) = args.optimal_delta {
        solve(&build_lp(&chain, delta)?, &SolverOptions::default())?.policy
    } else if let Some(p) = default {
        p
    } else {
        return Err(CliError::Usage(
            "a policy is required: --policy, --const-p, --heuristic-p, --heuristic-aggressive-p or --optimal-delta"
                .into(),
        ));
    };
    Ok((chain, policy))
}

fn cmd_evaluate(ctx: &Context, args: &PolicyArgs) -> Result<(), CliError> {
    let (chain, policy) = resolve_policy(ctx, args, None)?;
    let report = evaluate(&chain, &policy)?;
    let p_err = (1.0 - report.d_lte).clamp(0.0, 1.0);
    let mse = mse_from_error_rate(p_err, &ctx.mse)?;
    println!("policy = {}", policy.kind().as_str());
    println!("d_lte = {}", ctx.fmt(report.d_lte));
    println!("t_d2d = {}", ctx.fmt(report.t_d2d));
    println!("frame_error_rate = {}", ctx.fmt(p_err));
    println!("mse = {}", ctx.fmt(mse));
    println!("psnr_db = {}", ctx.fmt(psnr_with_convention(mse, ctx.mse.w, ctx.psnr)?));
    Ok(())
}

fn cmd_simulate(
    ctx: &Context,
    args: &PolicyArgs,
    slots: Option<u64>,
    replications: Option<usize>,
    sample_fading: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (chain, policy) = resolve_policy(ctx, args, None)?;
    let section = ctx.file.simulate.clone().unwrap_or_default();
    let mut config = SimConfig::new(&chain, &policy, slots.or(section.slots).unwrap_or(1_000_000), ctx.seed);
    config.replications = replications.or(section.replications).unwrap_or(1);
    if sample_fading {
        let LinkSource::Channel(params, _) = ctx.model.link else {
            return Err(missing_channel());
        };
        config.link = LinkModel::Fading(params);
    }
    let report = simulator::run(&config)?;
    let mut w = csv_sink(out)?;
    w.write_record(["replication", "slots", "complete_gops", "d_lte", "t_d2d"])?;
    for (k, r) in report.replications.iter().enumerate() {
        w.write_record([
            k.to_string(),
            r.slots.to_string(),
            r.complete_gops.to_string(),
            ctx.fmt(r.d_lte),
            ctx.fmt(r.t_d2d),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))?;

    let analytic = evaluate(&chain, &policy)?;
    for (name, est, target) in [("d_lte", report.d_lte, analytic.d_lte), ("t_d2d", report.t_d2d, analytic.t_d2d)] {
        eprintln!(
            "{name}: mean {} stderr {} analytic {} z {}",
            ctx.fmt(est.mean),
            ctx.fmt(est.stderr),
            ctx.fmt(target),
            ctx.fmt(est.z_score(target))
        );
    }
    Ok(())
}

/// `121-144, 241-264` style listing.
fn ranges(slots: &[u64]) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut iter = slots.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap();
        }
        out.push(if start == end { start.to_string() } else { format!("{start}-{end}") });
    }
    if out.is_empty() {
        "none".into()
    } else {
        out.join(", ")
    }
}

fn cmd_trace(
    ctx: &Context,
    args: &PolicyArgs,
    frames: u64,
    force_loss: &[u64],
    no_channel_loss: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (chain, policy) = resolve_policy(ctx, args, Some(Policy::constant(0.0)))?;
    let chain = if no_channel_loss {
        coexist_core::gop_model::build_chain(chain.gop().clone(), LinkFailureProbs::new(0.0, 0.0, 0.0)?)?
    } else {
        chain
    };
    let config = SimConfig::new(&chain, &policy, frames, ctx.seed);
    let forced = (!force_loss.is_empty()).then_some(force_loss);
    let records = simulator::trace(&config, &ctx.mse, forced)?;
    let mut w = csv_sink(out)?;
    w.write_record([
        "slot",
        "frame_kind",
        "gop_index",
        "lte_delivered",
        "d2d_action",
        "d2d_delivered",
        "frame_corrupted",
        "mse",
    ])?;
    for r in &records {
        w.write_record([
            r.slot.to_string(),
            r.frame_kind.as_str().to_string(),
            r.gop_index.to_string(),
            r.lte_delivered.to_string(),
            r.d2d_action.to_string(),
            r.d2d_delivered.to_string(),
            r.frame_corrupted.to_string(),
            ctx.fmt(r.mse),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))?;
    let corrupted: Vec<u64> = records.iter().filter(|r| r.frame_corrupted).map(|r| r.slot).collect();
    eprintln!("{} of {} frames corrupted: {}", corrupted.len(), records.len(), ranges(&corrupted));
    Ok(())
}

fn cmd_scatter(ctx: &Context, grid: &str, families: &[Family], slots: u64, out: Option<&Path>) -> Result<(), CliError> {
    let chain = ctx.model.chain()?;
    let grid = parse_grid(grid, "--p-grid")?;
    let policies: Vec<Policy> = families
        .iter()
        .flat_map(|f| {
            grid.iter().map(move |&p| match f {
                Family::Constant => Policy::constant(p),
                Family::Heuristic => Policy::heuristic(p),
                Family::HeuristicAggressive => Policy::heuristic_aggressive(p),
            })
        })
        .collect();
    let points = mse_throughput_scatter(&chain, &policies, &ctx.mse, slots, ctx.seed)?;
    let mut w = csv_sink(out)?;
    w.write_record(["policy_kind", "p_tx", "t_d2d", "mean_mse", "stderr_mse"])?;
    for p in &points {
        w.write_record([
            p.policy.kind().as_str().to_string(),
            ctx.fmt(p.policy.p_tx().unwrap_or(f64::NAN)),
            ctx.fmt(p.t_d2d),
            ctx.fmt(p.mean_mse),
            ctx.fmt(p.stderr_mse),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))?;
    eprintln!("{} policies, {slots} slots each, seed {}", points.len(), ctx.seed);
    Ok(())
}
