//! Command-line interface: minimal forms of statistical experiments and
//! postprocessing decisions for discrete POVMs, reading JSON files and
//! writing deterministic reports to stdout (diagnostics and timing on
//! stderr).

use clap::{Args, Parser, Subcommand};
use minexp::experiment::{
    check_coarse_graining, conditional_expectation_for, experiments_isomorphic,
    minimal_form_with, SearchOptions, StatisticalExperiment,
};
use minexp::io::{ExperimentFile, MatrixData, PovmFile, Report};
use minexp::numerics::{ComplexMatrix, Tolerances};
use minexp::povm::{
    fully_quantum_dilation, kernel_minimal_check, postprocessing_leq, qc_channel,
    relabeling_minimal_form, t_statistic, DiscretePovm, StochasticKernel,
};
use minexp::superop::Superoperator;
use minexp::{Error, Result};
use serde_json::json;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "minexp",
    about = "Minimal sufficient forms of quantum statistical experiments and POVM postprocessing order",
    version
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Override the feasibility tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cocycle grid size for the minimal-subalgebra construction.
    #[arg(long = "t-grid", global = true, default_value_t = 8)]
    t_grid: usize,
    /// Random starts for feasibility searches.
    #[arg(long, global = true, default_value_t = 20)]
    starts: usize,
    /// Iteration budget per start.
    #[arg(long = "max-iter", global = true, default_value_t = 5000)]
    max_iter: usize,
    /// Seed for every randomized ingredient.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit the report as JSON (default).
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Emit the report as readable text.
    #[arg(long, global = true)]
    text: bool,
    /// Worker threads (searches currently run sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Koashi-Imoto decomposition and minimal form of an experiment.
    Minimize { experiment: String },
    /// Decide isomorphism of the minimal forms of two experiments.
    Equiv { a: String, b: String },
    /// Coarse-graining certificates between two experiments, both ways.
    Coarse { a: String, b: String },
    /// Postprocessing order between two POVMs, both ways.
    PovmOrder { m: String, n: String },
    /// Relabeling-minimal form of a POVM.
    PovmMinimize {
        m: String,
        /// Also emit the fully quantum dilation of the minimal form.
        #[arg(long)]
        dilate: bool,
    },
    /// Kernel minimality LP for a POVM.
    PovmKernelCheck { m: String },
    /// Fully quantum dilation of a POVM.
    Dilate { m: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = run(&cli);
    eprintln!("timing_ms: {}", started.elapsed().as_millis());
    match result {
        Ok(report) => {
            if cli.common.text {
                print!("{}", report.render_text());
            } else {
                println!("{}", report.render_json());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn tolerances(common: &Common) -> Tolerances {
    let mut tols = Tolerances::default();
    if let Some(tol) = common.tol {
        tols.feas_tol = tol;
    }
    tols
}

fn search_options(common: &Common) -> SearchOptions {
    SearchOptions {
        starts: common.starts,
        max_iter: common.max_iter,
        seed: common.seed,
    }
}

fn load(path: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read '{path}': {e}")))
}

fn load_experiment(path: &str, tols: &Tolerances) -> Result<StatisticalExperiment> {
    let file: ExperimentFile = serde_json::from_str(&load(path)?)
        .map_err(|e| Error::InvalidInput(format!("{path}: {e}")))?;
    file.into_experiment(tols)
}

fn load_povm(path: &str, tols: &Tolerances) -> Result<DiscretePovm> {
    let file: PovmFile = serde_json::from_str(&load(path)?)
        .map_err(|e| Error::InvalidInput(format!("{path}: {e}")))?;
    file.into_povm(tols)
}

fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixData::from_matrix(m)).expect("matrix serialization")
}

fn superop_json(s: &Superoperator) -> serde_json::Value {
    json!({
        "in_dim": s.in_dim(),
        "out_dim": s.out_dim(),
        "action": matrix_json(s.action()),
    })
}

fn kernel_json(k: &StochasticKernel) -> serde_json::Value {
    json!({
        "rows": k.rows(),
        "cols": k.cols(),
        "matrix": k.matrix,
        "convention": "entry [i][j] is kappa(i|j); columns are distributions",
    })
}

fn run(cli: &Cli) -> Result<Report> {
    let common = &cli.common;
    if common.threads > 1 {
        eprintln!("note: searches run sequentially; --threads > 1 has no effect");
    }
    let tols = tolerances(common);
    tols.validate()?;
    match &cli.command {
        Command::Minimize { experiment } => cmd_minimize(common, &tols, experiment),
        Command::Equiv { a, b } => cmd_equiv(common, &tols, a, b),
        Command::Coarse { a, b } => cmd_coarse(common, &tols, a, b),
        Command::PovmOrder { m, n } => cmd_povm_order(common, &tols, m, n),
        Command::PovmMinimize { m, dilate } => cmd_povm_minimize(common, &tols, m, *dilate),
        Command::PovmKernelCheck { m } => cmd_povm_kernel_check(common, &tols, m),
        Command::Dilate { m } => cmd_dilate(common, &tols, m),
    }
}

fn cmd_minimize(common: &Common, tols: &Tolerances, path: &str) -> Result<Report> {
    let exp = load_experiment(path, tols)?;
    let (minimal, ki) = minimal_form_with(&exp, tols, common.seed, common.t_grid)?;
    let expectation = conditional_expectation_for(&exp, &ki, tols)?;

    let mut report = Report::new("minimize", &[path], tols, common.seed).with_verdict("ok");
    report.push_residual("reconstruction", ki.reconstruction_residual(&exp));
    report.push_residual(
        "expectation_idempotency",
        expectation
            .compose(&expectation)?
            .action_dist(&expectation),
    );
    report.push_residual(
        "expectation_unitality",
        expectation
            .apply(&ComplexMatrix::identity(exp.dim()))?
            .fro_dist(&ComplexMatrix::identity(exp.dim())),
    );
    report.push_residual(
        "expectation_choi_min_eig",
        expectation.choi_min_eigenvalue(tols)?,
    );
    let preservation = exp
        .states()
        .iter()
        .map(|(_, rho)| {
            expectation
                .predual_apply(rho)
                .map(|mapped| mapped.fro_dist(rho))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.push_residual("state_preservation", preservation);

    let blocks: Vec<serde_json::Value> = ki
        .blocks
        .iter()
        .enumerate()
        .map(|(alpha, kb)| {
            json!({
                "d": kb.block.d,
                "m": kb.block.m,
                "isometry": matrix_json(&ki.lifted_isometry(alpha)),
                "omega": matrix_json(&kb.omega),
                "weights": ki.labels.iter().zip(&kb.weights)
                    .map(|(l, w)| json!({"label": l, "q": w}))
                    .collect::<Vec<_>>(),
                "states": kb.states.iter().map(matrix_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    report.payload = json!({
        "support_dim": ki.support_dim(),
        "algebra_dim": ki.algebra.dim(),
        "blocks": blocks,
        "minimal": serde_json::to_value(ExperimentFile::from_experiment(&minimal)).unwrap(),
        "expectation": superop_json(&expectation),
    });
    Ok(report)
}

fn cmd_equiv(common: &Common, tols: &Tolerances, a: &str, b: &str) -> Result<Report> {
    let ea = load_experiment(a, tols)?;
    let eb = load_experiment(b, tols)?;
    let (ma, _) = minimal_form_with(&ea, tols, common.seed, common.t_grid)?;
    let (mb, _) = minimal_form_with(&eb, tols, common.seed ^ 1, common.t_grid)?;
    let opts = search_options(common);
    let mut report = Report::new("equiv", &[a, b], tols, common.seed);
    match experiments_isomorphic(&ma, &mb, &opts, tols) {
        Ok(Some(witness)) => {
            report = report.with_verdict("isomorphic");
            report.push_residual("conjugation", witness.residual);
            report.payload = json!({
                "block_dims_a": ma.effective_block_dims(),
                "block_dims_b": mb.effective_block_dims(),
                "block_map": witness.block_map,
                "unitaries": witness.unitaries.iter().map(matrix_json).collect::<Vec<_>>(),
            });
        }
        Ok(None) => {
            report = report.with_verdict("not-isomorphic");
            report.payload = json!({
                "block_dims_a": ma.effective_block_dims(),
                "block_dims_b": mb.effective_block_dims(),
            });
        }
        Err(Error::NotMinimalForm) => {
            report = report.with_verdict("inconclusive");
            report.payload = json!({
                "reason": "a computed minimal form admits a non-identity fixing channel",
            });
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn cmd_coarse(common: &Common, tols: &Tolerances, a: &str, b: &str) -> Result<Report> {
    let ea = load_experiment(a, tols)?;
    let eb = load_experiment(b, tols)?;
    let opts = search_options(common);
    let fwd = check_coarse_graining(&ea, &eb, &opts, tols)?;
    let bwd = check_coarse_graining(&eb, &ea, &opts, tols)?;
    let verdict = match (&fwd, &bwd) {
        (Some(_), Some(_)) => "equivalent",
        (Some(_), None) => "a-coarser-than-b",
        (None, Some(_)) => "b-coarser-than-a",
        (None, None) => "no-certificate",
    };
    let mut report = Report::new("coarse", &[a, b], tols, common.seed).with_verdict(verdict);
    report.payload = json!({
        "a_from_b": fwd.as_ref().map(superop_json),
        "b_from_a": bwd.as_ref().map(superop_json),
        "note": "negative directions are budget-limited evidence, not certificates",
    });
    Ok(report)
}

fn cmd_povm_order(common: &Common, tols: &Tolerances, m: &str, n: &str) -> Result<Report> {
    let pm = load_povm(m, tols)?;
    let pn = load_povm(n, tols)?;
    let fwd = postprocessing_leq(&pm, &pn, tols)?;
    let bwd = postprocessing_leq(&pn, &pm, tols)?;
    let verdict = match (&fwd, &bwd) {
        (Some(_), Some(_)) => "equivalent",
        (Some(_), None) => "m-coarser-than-n",
        (None, Some(_)) => "n-coarser-than-m",
        (None, None) => "incomparable",
    };
    let mut report = Report::new("povm-order", &[m, n], tols, common.seed).with_verdict(verdict);
    if let Some(k) = &fwd {
        report.push_residual("kernel_m_from_n", k.postprocessing_residual(&pm, &pn)?);
    }
    if let Some(k) = &bwd {
        report.push_residual("kernel_n_from_m", k.postprocessing_residual(&pn, &pm)?);
    }
    report.payload = json!({
        "m_from_n": fwd.as_ref().map(kernel_json),
        "n_from_m": bwd.as_ref().map(kernel_json),
        "note": "verdicts are exact LP certificates in both directions",
    });
    Ok(report)
}

fn cmd_povm_minimize(
    common: &Common,
    tols: &Tolerances,
    m: &str,
    dilate: bool,
) -> Result<Report> {
    let povm = load_povm(m, tols)?;
    let (minimal, map) = relabeling_minimal_form(&povm, tols)?;
    let t_stats = t_statistic(&povm)?;
    let mut report = Report::new("povm-minimize", &[m], tols, common.seed).with_verdict(
        if minimal.len() == povm.len() {
            "already-minimal"
        } else {
            "merged"
        },
    );
    let mut payload = json!({
        "minimal": serde_json::to_value(PovmFile::from_povm(&minimal)).unwrap(),
        "merge_map": map,
        "t_statistic": t_stats,
    });
    if dilate {
        let (gamma, pinching) = fully_quantum_dilation(&minimal, tols)?;
        payload["dilation"] = json!({
            "gamma": superop_json(&gamma),
            "pinching": superop_json(&pinching),
        });
    }
    report.payload = payload;
    Ok(report)
}

fn cmd_povm_kernel_check(common: &Common, tols: &Tolerances, m: &str) -> Result<Report> {
    let povm = load_povm(m, tols)?;
    let (minimal, lp_value) = kernel_minimal_check(&povm, tols)?;
    let mut report = Report::new("povm-kernel-check", &[m], tols, common.seed)
        .with_verdict(if minimal { "minimal" } else { "not-minimal" });
    report.push_residual("lp_value", lp_value);
    report.payload = json!({
        "kernel_minimal": minimal,
        "lp_value": lp_value,
    });
    Ok(report)
}

fn cmd_dilate(common: &Common, tols: &Tolerances, m: &str) -> Result<Report> {
    let povm = load_povm(m, tols)?;
    let (gamma, pinching) = fully_quantum_dilation(&povm, tols)?;
    let qc = {
        let (kept, _) = povm.drop_zero_effects(tols);
        qc_channel(&kept)?
    };
    let composed = qc.compose(&pinching)?;
    let mut report = Report::new("dilate", &[m], tols, common.seed).with_verdict("ok");
    report.push_residual("factorization", gamma.action_dist(&composed));
    report.push_residual("diagonal_restriction", gamma.action_dist(&qc));
    report.payload = json!({
        "gamma": superop_json(&gamma),
        "pinching": superop_json(&pinching),
    });
    Ok(report)
}
