use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{load_config, ConfigEcho, ConfigError, ExperimentConfig, Gates, Overrides};
use super::output::{read_json, write_json, CsvTable, OutputError};
use super::{Command, EXIT_GATE_FAILED, EXIT_OK};
use crate::limit::{limit_covariance_matrix, sample_limit_fdd};
use crate::renewal::FddPlan;
use crate::rng::RngStream;
use crate::verifier::{
    campbell_oracle, karamata_report, lemma_variance_ratio, run_fdd_experiment, simulate_fdd,
    CampbellMoments, ExperimentReport, FddExperiment, KaramataRow,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{0}")]
    Report(String),
}

const PROBE_POINTS: usize = 64;
const RATIO_PAIRS: [(f64, f64); 3] = [(0.5, 0.0), (0.5, 0.2), (1.0, 0.0)];
const RATIO_TIMES: [f64; 4] = [1e3, 1e6, 1e9, 1e12];
const KARAMATA_TIMES: [f64; 5] = [1e2, 1e4, 1e6, 1e8, 1e10];

pub(super) fn dispatch(command: &Command) -> Result<u8, CliError> {
    match command {
        Command::Simulate(a) => simulate(&load_config(&a.config, &a.overrides())?),
        Command::Verify(a) => verify(&load_config(&a.config, &a.overrides())?),
        Command::LimitSample(a) => limit_sample(&load_config(&a.config, &a.overrides())?),
        Command::KernelProbe(a) => kernel_probe(&load_config(&a.config, &a.overrides())?),
        Command::Report(a) => {
            let dir = match (&a.out, &a.config) {
                (Some(out), _) => out.clone(),
                (None, Some(path)) => load_config(path, &Overrides::default())?.output_dir,
                (None, None) => unreachable!("clap requires --config or --out"),
            };
            report(&dir)
        }
    }
}

fn plan(config: &ExperimentConfig) -> Result<FddPlan, CliError> {
    Ok(FddPlan::new(
        config.jump.clone(),
        config.kernel.clone(),
        config.t,
        config.u_grid.clone(),
        config.scaling,
    )?)
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn simulate(config: &ExperimentConfig) -> Result<u8, CliError> {
    let plan = plan(config)?;
    let batch = simulate_fdd(&plan, config.replications, config.master_seed, config.workers);
    let mut csv = CsvTable::new("samples", &config.hash(), &["replication_index", "u", "Z"]);
    for (r, row) in batch.samples.chunks(batch.dim).enumerate() {
        for (u, z) in config.u_grid.iter().zip(row) {
            csv.row(&[r.to_string(), format!("{u:e}"), format!("{z:e}")]);
        }
    }
    announce(&csv.write(&config.output_dir, "samples.csv")?);
    Ok(EXIT_OK)
}

fn limit_sample(config: &ExperimentConfig) -> Result<u8, CliError> {
    let hash = config.hash();
    let mut csv = CsvTable::new("limit_samples", &hash, &["replication", "u", "X"]);
    for r in 0..config.replications {
        let draw = sample_limit_fdd(&config.u_grid, &mut RngStream::new(config.master_seed, r))?;
        for (u, x) in draw.u_grid.iter().zip(&draw.values) {
            csv.row(&[r.to_string(), format!("{u:e}"), format!("{x:e}")]);
        }
    }
    announce(&csv.write(&config.output_dir, "limit_samples.csv")?);
    #[derive(Serialize)]
    struct LimitCovariance<'a> {
        config_hash: &'a str,
        u_grid: &'a [f64],
        covariance: Vec<Vec<f64>>,
    }
    let cov = LimitCovariance {
        config_hash: &hash,
        u_grid: &config.u_grid,
        covariance: limit_covariance_matrix(&config.u_grid),
    };
    announce(&write_json(&config.output_dir, "limit_covariance.json", &cov)?);
    Ok(EXIT_OK)
}

/// `k = 1..=64` points `t_min (t / t_min)^{k/64}`.
fn probe_grid(t_min: f64, t: f64) -> Vec<f64> {
    let span = (t / t_min).ln();
    (1..=PROBE_POINTS)
        .map(|k| t_min * (span * k as f64 / PROBE_POINTS as f64).exp())
        .collect()
}

fn kernel_probe(config: &ExperimentConfig) -> Result<u8, CliError> {
    let kernel = &config.kernel;
    let g_columns: Vec<String> = config.u_grid.iter().map(|u| format!("g_u={u}")).collect();
    let mut columns = vec!["t", "h", "H", "m"];
    columns.extend(g_columns.iter().map(String::as_str));
    let mut csv = CsvTable::new("kernel_probe", &config.hash(), &columns);
    for t in probe_grid(kernel.t_min(), config.t) {
        let mut row = vec![t, kernel.h(t), kernel.h_primitive(t), kernel.m(t)];
        row.extend(
            config
                .u_grid
                .iter()
                .map(|&u| kernel.scaling(config.scaling, t, u).unwrap_or(f64::NAN)),
        );
        csv.numeric_row(&row);
    }
    announce(&csv.write(&config.output_dir, "kernel_probe.csv")?);
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRatioRow {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub ratio: f64,
    /// `|ratio − (1 − a)|`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl GateOutcome {
    fn at_most(name: String, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub config: ConfigEcho,
    pub experiment: ExperimentReport,
    /// Exact for exponential jumps only (Poisson arrivals).
    pub campbell: CampbellMoments,
    pub variance_ratio_table: Vec<VarianceRatioRow>,
    pub karamata_table: Vec<KaramataRow>,
    pub gates: Vec<GateOutcome>,
    pub failed: Vec<String>,
    pub pass: bool,
}

fn evaluate_gates(report: &ExperimentReport, gates: &Gates) -> Vec<GateOutcome> {
    let mut out = vec![GateOutcome::at_most(
        "covariance_max_abs_deviation".into(),
        report.max_abs_deviation,
        gates.max_covariance_deviation,
    )];
    for (u, stats) in report.u_grid.iter().zip(&report.marginal_normality) {
        let Some(s) = stats.as_ref().filter(|s| !s.degenerate) else {
            continue;
        };
        out.push(GateOutcome::at_most(
            format!("marginal_skewness[u={u}]"),
            s.skewness.abs(),
            gates.max_abs_skewness,
        ));
        out.push(GateOutcome::at_most(
            format!("marginal_excess_kurtosis[u={u}]"),
            s.excess_kurtosis.abs(),
            gates.max_abs_excess_kurtosis,
        ));
    }
    for p in &report.projections {
        out.push(GateOutcome::at_most(
            format!("projection_variance[alphas={:?}]", p.alphas),
            (p.sample_variance - p.target_variance).abs(),
            gates.projection_variance_tolerance,
        ));
    }
    if let Some(exact) = &report.poisson_covariance {
        let k = report.u_grid.len();
        for i in 0..k {
            for j in i..k {
                let se = report.covariance_se[i][j];
                let dev = (report.covariance[i][j] - exact[i][j]).abs();
                out.push(GateOutcome::at_most(
                    format!("poisson_covariance_se_multiple[{i},{j}]"),
                    if se > 0.0 { dev / se } else { dev },
                    gates.poisson_se_multiple,
                ));
            }
        }
    }
    out
}

fn variance_ratio_table(config: &ExperimentConfig) -> Result<Vec<VarianceRatioRow>, CliError> {
    let kernel = &config.kernel;
    let mut rows = Vec::new();
    for &(a, b) in &RATIO_PAIRS {
        for &t in RATIO_TIMES.iter().filter(|&&t| t > kernel.t_min()) {
            let ratio = lemma_variance_ratio(kernel, t, a, b)?;
            rows.push(VarianceRatioRow {
                a,
                b,
                t,
                ratio,
                error: (ratio - (1.0 - a)).abs(),
            });
        }
    }
    Ok(rows)
}

/// Runs the verification experiment with the config's settings.
pub fn build_verify_report(config: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let exp = FddExperiment {
        plan: plan(config)?,
        replications: config.replications,
        seed: config.master_seed,
        workers: config.workers,
        projections: config.alphas.clone().into_iter().collect(),
    };
    let experiment = run_fdd_experiment(&exp)?;
    let gates = evaluate_gates(&experiment, &config.gates);
    let failed: Vec<String> = gates.iter().filter(|g| !g.pass).map(|g| g.name.clone()).collect();
    let karamata_times: Vec<f64> = KARAMATA_TIMES
        .iter()
        .copied()
        .filter(|&t| t > config.kernel.t_min())
        .collect();
    Ok(VerifyReport {
        config_hash: config.hash(),
        config: config.echo(),
        campbell: campbell_oracle(&config.kernel, config.t),
        variance_ratio_table: variance_ratio_table(config)?,
        karamata_table: karamata_report(&config.kernel, &karamata_times),
        pass: failed.is_empty(),
        failed,
        gates,
        experiment,
    })
}

fn verify(config: &ExperimentConfig) -> Result<u8, CliError> {
    let report = build_verify_report(config)?;
    let dir = &config.output_dir;
    let hash = &report.config_hash;

    let mut ratios = CsvTable::new("variance_ratios", hash, &["a", "b", "t", "ratio", "error"]);
    for r in &report.variance_ratio_table {
        ratios.numeric_row(&[r.a, r.b, r.t, r.ratio, r.error]);
    }
    announce(&ratios.write(dir, "variance_ratios.csv")?);

    let mut karamata = CsvTable::new(
        "karamata",
        hash,
        &["t", "m", "integral_ratio", "edge_ratio", "target", "normalization_ratio"],
    );
    for r in &report.karamata_table {
        karamata.numeric_row(&[
            r.t,
            r.m,
            r.integral_ratio,
            r.edge_ratio,
            r.target,
            r.normalization_ratio.unwrap_or(f64::NAN),
        ]);
    }
    announce(&karamata.write(dir, "karamata.csv")?);
    announce(&write_json(dir, "report.json", &report)?);

    print_gates(&report.gates);
    if report.pass {
        println!("all gates passed");
        Ok(EXIT_OK)
    } else {
        println!("failed gates: {}", report.failed.join(", "));
        Ok(EXIT_GATE_FAILED)
    }
}

fn print_gates(gates: &[GateOutcome]) {
    for g in gates {
        println!(
            "[{}] {} = {:.4} (threshold {})",
            if g.pass { "PASS" } else { "FAIL" },
            g.name,
            g.value,
            g.threshold
        );
    }
}

fn report(dir: &Path) -> Result<u8, CliError> {
    let path: PathBuf = dir.join("report.json");
    let v = read_json(&path)?;
    let missing = |field: &str| CliError::Report(format!("{}: missing `{field}`", path.display()));
    let gates: Vec<GateOutcome> = v
        .get("gates")
        .and_then(|g| g.as_array())
        .ok_or_else(|| missing("gates"))?
        .iter()
        .map(|g| GateOutcome {
            name: g["name"].as_str().unwrap_or("?").to_string(),
            value: g["value"].as_f64().unwrap_or(f64::NAN),
            threshold: g["threshold"].as_f64().unwrap_or(f64::NAN),
            pass: g["pass"].as_bool().unwrap_or(false),
        })
        .collect();
    let exp = v.get("experiment").ok_or_else(|| missing("experiment"))?;
    println!("config_hash: {}", v["config_hash"].as_str().unwrap_or("?"));
    println!(
        "t = {}, replications = {}, workers = {}",
        exp["t"], exp["replications"], exp["workers"]
    );
    println!("max |cov - limit| = {} (se {})", exp["max_abs_deviation"], exp["max_abs_deviation_se"]);
    print_gates(&gates);
    let pass = v["pass"].as_bool().ok_or_else(|| missing("pass"))?;
    println!("{}", if pass { "all gates passed" } else { "some gates failed" });
    Ok(EXIT_OK)
}
