//! Command-line surface. Every run is a pure function of [`RunConfig`];
//! JSON outputs embed the config so a run can be replayed from its output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::model::ModelParams;
use crate::simulator::{admission_weights, simulate_conditional, simulate_stationary};
use crate::spectrum::{
    asymp_critical_window, asymp_for, asymp_subcritical, asymp_supercritical, delta_h_spectrum, eigen_spectrum,
    theta_s_exact, theta_s_via_delta_h, AsymptoticEstimate, Regime,
};
use crate::time_domain::{
    geometric_grid, invert_solution, ode_evolve, spectral_expand, Quantity, TimeGridSolution,
};
use crate::transform::{conditional_moments, resolvent_solve, transform_theorem21};

pub const THREADS_ENV: &str = "PS_SOJOURN_THREADS";

#[derive(Parser, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(name = "ps-sojourn", version, about = "Sojourn times in the finite-capacity M/M/1 processor-sharing queue")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; `theta-s` and `simulate` default to json, the rest to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write a gnuplot script next to `--output`.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformChoice {
    Theorem21,
    Resolvent,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumChoice {
    Eigen,
    #[value(name = "deltah")]
    DeltaH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityChoice {
    Ode,
    Spectral,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeChoice {
    Sub,
    Critical,
    Super,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Transform vector p̂_n(θ), n = 0..K-1.
    Transform {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Imaginary part of θ (resolvent only).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta_im: f64,
        #[arg(long, value_enum, default_value_t = TransformChoice::Both)]
        method: TransformChoice,
    },
    /// Full pole list.
    Spectrum {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        #[arg(long, value_enum, default_value_t = SpectrumChoice::Eigen)]
        method: SpectrumChoice,
    },
    /// Exact θ_s against every applicable large-K expansion.
    ThetaS {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        /// Half-width of the critical window in η.
        #[arg(long, default_value_t = 3.0)]
        window: f64,
    },
    /// Convergence table of one expansion over a capacity sweep.
    Table {
        #[arg(long, value_enum)]
        regime: RegimeChoice,
        /// Fixed load (sub and super regimes, or critical with fixed ρ).
        #[arg(long)]
        rho: Option<f64>,
        /// Fixed η for the critical regime; ρ = 1 + η K^{-2/3} per row.
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        capacities: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        window: f64,
    },
    /// Density and survival curves on a geometric time grid.
    Density {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        /// Single component; all components when absent.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = DensityChoice::Ode)]
        method: DensityChoice,
        #[arg(long, default_value_t = 1e-2)]
        t_min: f64,
        /// Defaults to 10/|θ_s|.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Monte Carlo sojourns with a summary.
    Simulate {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        /// Others found on arrival; stationary admitted arrivals when absent.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV dump of the individual sojourns.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Cross-method residual report; exit status 1 if any check fails.
    Compare {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        capacity: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 1.0, 3.0])]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Everything a run produces; `run` writes it out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub body: String,
    pub extra_files: Vec<(PathBuf, String)>,
    pub exit_code: i32,
}

/// Shortest round-trip digits of `x`; a string when 16 or more are needed.
pub fn json_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    let repr = format!("{x:e}");
    let mantissa = repr.split('e').next().unwrap_or("");
    let digits = mantissa
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect::<String>()
        .trim_start_matches('0')
        .len();
    if digits >= 16 {
        Value::String(repr)
    } else {
        json!(x)
    }
}

fn json_numbers(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json_number(x)).collect())
}

/// CSV field with 17 significant digits.
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn params(rho: f64, capacity: usize) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(rho, capacity)?)
}

fn provenance(config: &RunConfig) -> Value {
    json!({
        "tool": "ps-sojourn",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).expect("config serializes"),
    })
}

fn json_body(config: &RunConfig, payload: Value) -> String {
    let mut obj = match payload {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("provenance".into(), provenance(config));
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
    s.push('\n');
    s
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("csv");
        for r in &self.rows {
            w.write_record(r).expect("csv");
        }
        String::from_utf8(w.into_inner().expect("csv")).expect("utf8")
    }

    fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| {
                            let val = match v.parse::<f64>() {
                                Ok(x) if !v.is_empty() => json_number(x),
                                _ => Value::String(v.clone()),
                            };
                            (h.clone(), val)
                        })
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

fn emit_table(config: &RunConfig, table: &Table, default: Format, extra: Value) -> String {
    match config.format.unwrap_or(default) {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut payload = match extra {
                Value::Object(m) => m,
                _ => serde_json::Map::new(),
            };
            payload.insert("rows".into(), table.to_json_rows());
            json_body(config, Value::Object(payload))
        }
    }
}

fn gnuplot_script(data: &Path, columns: &[String], logscale_x: bool, logscale_y: bool, x_col: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    if logscale_x {
        let _ = writeln!(s, "set logscale x");
    }
    if logscale_y {
        let _ = writeln!(s, "set logscale y");
    }
    let plots: Vec<String> = (0..columns.len())
        .filter(|&c| c != x_col)
        .map(|c| format!("'{}' using {}:{} with lines", data.display(), x_col + 1, c + 1))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

fn estimate_json(exact: f64, est: &AsymptoticEstimate) -> Value {
    json!({
        "regime": est.regime,
        "eta": json_number(est.eta),
        "terms": json_numbers(&est.terms),
        "theta_s_estimate": json_number(est.theta_s_estimate),
        "abs_err": json_number((exact - est.theta_s_estimate).abs()),
    })
}

fn regime_of(choice: RegimeChoice) -> Regime {
    match choice {
        RegimeChoice::Sub => Regime::Sub,
        RegimeChoice::Critical => Regime::Critical,
        RegimeChoice::Super => Regime::Super,
    }
}

/// Rows of the convergence table: `(K, exact, estimate)`.
pub fn table_rows(
    regime: RegimeChoice,
    rho: Option<f64>,
    eta: Option<f64>,
    capacities: &[usize],
    window: f64,
) -> Result<Vec<(usize, f64, f64)>, CliError> {
    if !capacities.windows(2).all(|w| w[1] > w[0]) {
        return Err(CliError::Usage("capacities must be strictly ascending".into()));
    }
    let load = |k: usize| -> Result<f64, CliError> {
        match (regime, rho, eta) {
            (_, Some(r), None) => Ok(r),
            (RegimeChoice::Critical, None, Some(e)) => Ok(1.0 + e * (k as f64).powf(-2.0 / 3.0)),
            (RegimeChoice::Critical, _, _) => Err(CliError::Usage("critical table needs exactly one of --rho, --eta".into())),
            _ => Err(CliError::Usage("sub and super tables need --rho (and no --eta)".into())),
        }
    };
    capacities
        .par_iter()
        .map(|&k| {
            let p = params(load(k)?, k)?;
            let exact = theta_s_exact(&p);
            let est = match regime {
                RegimeChoice::Critical => asymp_critical_window(&p, window)?,
                r => asymp_for(&p, regime_of(r))?,
            };
            Ok((k, exact, est.theta_s_estimate))
        })
        .collect()
}

fn density_solution(
    p: &ModelParams,
    method: DensityChoice,
    grid: &[f64],
) -> Result<TimeGridSolution, CliError> {
    Ok(match method {
        DensityChoice::Ode => ode_evolve(p, grid, Quantity::Both)?,
        DensityChoice::Spectral => spectral_expand(p, grid)?,
        DensityChoice::Invert => invert_solution(p, grid)?,
    })
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

struct Check {
    name: String,
    residual: Option<f64>,
    tolerance: f64,
    note: String,
}

impl Check {
    fn status(&self) -> &'static str {
        match self.residual {
            None => "skipped",
            Some(r) if r <= self.tolerance => "pass",
            Some(_) => "fail",
        }
    }
}

fn compare_checks(p: &ModelParams, thetas: &[f64], t_max: f64, points: usize) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let k = p.capacity();

    let r0 = resolvent_solve(p, Complex64::new(0.0, 0.0))?;
    checks.push(Check {
        name: "normalization".into(),
        residual: Some(r0.values.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max)),
        tolerance: 1e-12,
        note: String::new(),
    });

    let per_theta: Vec<Check> = thetas
        .par_iter()
        .map(|&theta| -> Result<Check, CliError> {
            let name = format!("theorem21_vs_resolvent@theta={theta}");
            let r = resolvent_solve(p, Complex64::new(theta, 0.0))?;
            match transform_theorem21(p, theta) {
                Ok(t) => {
                    let rel = t
                        .values
                        .iter()
                        .zip(&r.values)
                        .map(|(a, b)| (a - b).norm() / b.norm())
                        .fold(0.0, f64::max);
                    Ok(Check {
                        name,
                        residual: Some(rel),
                        tolerance: 1e-8,
                        note: String::new(),
                    })
                }
                Err(e @ Error::DegenerateAlpha { .. }) => Ok(Check {
                    name,
                    residual: None,
                    tolerance: 1e-8,
                    note: e.to_string(),
                }),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_, _>>()?;
    checks.extend(per_theta);

    let exact = theta_s_exact(p);
    checks.push(if k <= 200 {
        let via = theta_s_via_delta_h(p)?;
        Check {
            name: "theta_s_eigen_vs_deltaH".into(),
            residual: Some((via - exact).abs()),
            tolerance: 1e-8,
            note: String::new(),
        }
    } else {
        Check {
            name: "theta_s_eigen_vs_deltaH".into(),
            residual: None,
            tolerance: 1e-8,
            note: "capacity above 200".into(),
        }
    });

    let grid: Vec<f64> = (0..points).map(|j| t_max * j as f64 / (points - 1).max(1) as f64).collect();
    let ode = ode_evolve(p, &grid, Quantity::Both)?;
    let inv = invert_solution(p, &grid)?;
    checks.push(Check {
        name: "density_ode_vs_inversion".into(),
        residual: Some(max_abs_diff(&ode.density, &inv.density)),
        tolerance: 1e-6,
        note: String::new(),
    });
    checks.push(Check {
        name: "survival_ode_vs_inversion".into(),
        residual: Some(max_abs_diff(&ode.survival, &inv.survival)),
        tolerance: 1e-6,
        note: String::new(),
    });
    match spectral_expand(p, &grid) {
        Ok(sp) => {
            checks.push(Check {
                name: "density_ode_vs_spectral".into(),
                residual: Some(max_abs_diff(&ode.density, &sp.density)),
                tolerance: 1e-6,
                note: String::new(),
            });
            checks.push(Check {
                name: "density_spectral_vs_inversion".into(),
                residual: Some(max_abs_diff(&sp.density, &inv.density)),
                tolerance: 1e-6,
                note: String::new(),
            });
        }
        Err(e @ Error::IllConditioned { .. }) => checks.push(Check {
            name: "density_ode_vs_spectral".into(),
            residual: None,
            tolerance: 1e-6,
            note: e.to_string(),
        }),
        Err(e) => return Err(e.into()),
    }
    let min_density = ode.density.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "density_positivity".into(),
        residual: Some((-min_density).max(0.0)),
        tolerance: 1e-10,
        note: String::new(),
    });
    Ok(checks)
}

/// Executes a run and returns its outputs without touching the filesystem.
pub fn render(config: &RunConfig) -> Result<RunOutput, CliError> {
    let mut extra_files = Vec::new();
    let mut exit_code = 0;
    let mut gnuplot: Option<(Vec<String>, bool, bool)> = None;

    let body = match &config.command {
        Command::Transform {
            rho,
            capacity,
            theta,
            theta_im,
            method,
        } => {
            let p = params(*rho, *capacity)?;
            let z = Complex64::new(*theta, *theta_im);
            if *theta_im != 0.0 && *method != TransformChoice::Resolvent {
                return Err(CliError::Usage("complex theta needs --method resolvent".into()));
            }
            let mut table = match method {
                TransformChoice::Both => Table::new(&["n", "theorem21", "resolvent", "rel_diff"]),
                TransformChoice::Resolvent if *theta_im != 0.0 => Table::new(&["n", "re", "im"]),
                _ => Table::new(&["n", "p_hat"]),
            };
            match method {
                TransformChoice::Theorem21 => {
                    let t = transform_theorem21(&p, *theta)?;
                    for (n, v) in t.values.iter().enumerate() {
                        table.rows.push(vec![n.to_string(), csv_number(v.re)]);
                    }
                }
                TransformChoice::Resolvent => {
                    let r = resolvent_solve(&p, z)?;
                    for (n, v) in r.values.iter().enumerate() {
                        let mut row = vec![n.to_string(), csv_number(v.re)];
                        if *theta_im != 0.0 {
                            row.push(csv_number(v.im));
                        }
                        table.rows.push(row);
                    }
                }
                TransformChoice::Both => {
                    let t = transform_theorem21(&p, *theta)?;
                    let r = resolvent_solve(&p, z)?;
                    for (n, (a, b)) in t.values.iter().zip(&r.values).enumerate() {
                        table.rows.push(vec![
                            n.to_string(),
                            csv_number(a.re),
                            csv_number(b.re),
                            csv_number((a - b).norm() / b.norm()),
                        ]);
                    }
                }
            }
            gnuplot = Some((table.header.clone(), false, false));
            emit_table(config, &table, Format::Csv, json!({}))
        }

        Command::Spectrum { rho, capacity, method } => {
            let p = params(*rho, *capacity)?;
            let spec = match method {
                SpectrumChoice::Eigen => eigen_spectrum(&p),
                SpectrumChoice::DeltaH => delta_h_spectrum(&p)?,
            };
            let mut table = Table::new(&["index", "eigenvalue"]);
            for (j, e) in spec.eigenvalues.iter().enumerate() {
                table.rows.push(vec![j.to_string(), csv_number(*e)]);
            }
            gnuplot = Some((table.header.clone(), false, false));
            emit_table(
                config,
                &table,
                Format::Csv,
                json!({ "theta_s": json_number(spec.theta_s), "method": spec.method }),
            )
        }

        Command::ThetaS { rho, capacity, window } => {
            let p = params(*rho, *capacity)?;
            let exact = theta_s_exact(&p);
            let mut estimates = Vec::new();
            if *rho < 1.0 {
                estimates.push(asymp_subcritical(&p)?);
            }
            if p.eta().abs() <= *window {
                estimates.push(asymp_critical_window(&p, *window)?);
            }
            if *rho > 1.0 {
                estimates.push(asymp_supercritical(&p)?);
            }
            match config.format.unwrap_or(Format::Json) {
                Format::Json => json_body(
                    config,
                    json!({
                        "rho": json_number(*rho),
                        "capacity": capacity,
                        "eta": json_number(p.eta()),
                        "theta_s_exact": json_number(exact),
                        "estimates": estimates.iter().map(|e| estimate_json(exact, e)).collect::<Vec<_>>(),
                    }),
                ),
                Format::Csv => {
                    let mut table = Table::new(&["regime", "term1", "term2", "term3", "term4", "theta_s_asymp", "theta_s_exact", "abs_err"]);
                    for e in &estimates {
                        let mut row = vec![serde_json::to_value(e.regime).unwrap().as_str().unwrap().to_string()];
                        for j in 0..4 {
                            row.push(e.terms.get(j).map(|&x| csv_number(x)).unwrap_or_default());
                        }
                        row.push(csv_number(e.theta_s_estimate));
                        row.push(csv_number(exact));
                        row.push(csv_number((exact - e.theta_s_estimate).abs()));
                        table.rows.push(row);
                    }
                    table.to_csv()
                }
            }
        }

        Command::Table {
            regime,
            rho,
            eta,
            capacities,
            window,
        } => {
            let rows = table_rows(*regime, *rho, *eta, capacities, *window)?;
            let mut table = Table::new(&["K", "theta_s_exact", "theta_s_asymp", "abs_err", "implied_order"]);
            let mut prev: Option<(usize, f64)> = None;
            for (k, exact, est) in rows {
                let err = (exact - est).abs();
                let order = prev
                    .map(|(pk, pe)| csv_number(-(err / pe).ln() / (k as f64 / pk as f64).ln()))
                    .unwrap_or_default();
                table
                    .rows
                    .push(vec![k.to_string(), csv_number(exact), csv_number(est), csv_number(err), order]);
                prev = Some((k, err));
            }
            gnuplot = Some((table.header.clone(), true, true));
            emit_table(config, &table, Format::Csv, json!({}))
        }

        Command::Density {
            rho,
            capacity,
            n,
            method,
            t_min,
            t_max,
            points,
        } => {
            let p = params(*rho, *capacity)?;
            if let Some(n) = n {
                if *n >= *capacity {
                    return Err(Error::InvalidInitial { n: *n, capacity: *capacity }.into());
                }
            }
            let t_max = t_max.unwrap_or_else(|| 10.0 / theta_s_exact(&p).abs());
            if !(*t_min > 0.0 && t_max > *t_min && *points >= 1) {
                return Err(CliError::Usage("need 0 < t-min < t-max and points >= 1".into()));
            }
            let grid = geometric_grid(*t_min, t_max, *points);
            let sol = density_solution(&p, *method, &grid)?;
            let comps: Vec<usize> = match n {
                Some(n) => vec![*n],
                None => (0..*capacity).collect(),
            };
            let mut header = vec!["t".to_string()];
            header.extend(comps.iter().map(|c| format!("p_{c}")));
            header.extend(comps.iter().map(|c| format!("q_{c}")));
            let mut table = Table {
                header,
                rows: Vec::new(),
            };
            for (j, t) in sol.t_grid.iter().enumerate() {
                let mut row = vec![csv_number(*t)];
                row.extend(comps.iter().map(|&c| csv_number(sol.density[j][c])));
                row.extend(comps.iter().map(|&c| csv_number(sol.survival[j][c])));
                table.rows.push(row);
            }
            gnuplot = Some((table.header.clone(), false, true));
            emit_table(config, &table, Format::Csv, json!({ "method": method }))
        }

        Command::Simulate {
            rho,
            capacity,
            n,
            count,
            seed,
            samples,
        } => {
            let p = params(*rho, *capacity)?;
            let s = match n {
                Some(n) => simulate_conditional(&p, *n, *count, *seed)?,
                None => simulate_stationary(&p, *count, *seed)?,
            };
            let st = s.stats();
            let means = conditional_moments(&p, 1)?;
            let exact_mean = match n {
                Some(n) => means[*n],
                None => admission_weights(&p).iter().zip(&means).map(|(w, m)| w * m).sum(),
            };
            if let Some(path) = samples {
                let mut buf = Vec::new();
                s.write_csv(&mut buf)?;
                extra_files.push((path.clone(), String::from_utf8(buf).expect("utf8")));
            }
            let payload = json!({
                "count": st.count,
                "mean": json_number(st.mean),
                "variance": json_number(st.variance()),
                "std_error": json_number(st.std_error()),
                "exact_mean": json_number(exact_mean),
                "z_score": json_number((st.mean - exact_mean) / st.std_error()),
                "blocked_count": s.blocked_count,
                "occupancy_histogram": s.occupancy_histogram,
                "n_initial": s.n_initial,
                "seed": s.seed,
            });
            match config.format.unwrap_or(Format::Json) {
                Format::Json => json_body(config, payload),
                Format::Csv => {
                    let mut table = Table::new(&["count", "mean", "std_error", "exact_mean", "blocked_count"]);
                    table.rows.push(vec![
                        st.count.to_string(),
                        csv_number(st.mean),
                        csv_number(st.std_error()),
                        csv_number(exact_mean),
                        s.blocked_count.to_string(),
                    ]);
                    table.to_csv()
                }
            }
        }

        Command::Compare {
            rho,
            capacity,
            thetas,
            t_max,
            points,
        } => {
            let p = params(*rho, *capacity)?;
            if *points < 2 || !(*t_max > 0.0) {
                return Err(CliError::Usage("compare needs points >= 2 and t-max > 0".into()));
            }
            let checks = compare_checks(&p, thetas, *t_max, *points)?;
            if checks.iter().any(|c| c.status() == "fail") {
                exit_code = 1;
            }
            let mut table = Table::new(&["check", "residual", "tolerance", "status", "note"]);
            for c in &checks {
                table.rows.push(vec![
                    c.name.clone(),
                    c.residual.map(csv_number).unwrap_or_default(),
                    csv_number(c.tolerance),
                    c.status().to_string(),
                    c.note.clone(),
                ]);
            }
            emit_table(config, &table, Format::Csv, json!({ "exit_code": exit_code }))
        }
    };

    if config.gnuplot {
        let out = config
            .output
            .as_ref()
            .ok_or_else(|| CliError::Usage("--gnuplot needs --output".into()))?;
        let (cols, lx, ly) = gnuplot.ok_or_else(|| CliError::Usage("--gnuplot is not available for this subcommand".into()))?;
        if config.format == Some(Format::Json) {
            return Err(CliError::Usage("--gnuplot needs csv output".into()));
        }
        let mut script_path = out.clone().into_os_string();
        script_path.push(".gp");
        extra_files.push((PathBuf::from(script_path), gnuplot_script(out, &cols, lx, ly, 0)));
    }

    Ok(RunOutput {
        body,
        extra_files,
        exit_code,
    })
}

/// Runs with the thread cap from `PS_SOJOURN_THREADS`, writes all outputs
/// and returns the exit status.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    let out = with_thread_cap(|| render(config))??;
    match &config.output {
        Some(path) => std::fs::write(path, &out.body)?,
        None => print!("{}", out.body),
    }
    for (path, text) in &out.extra_files {
        std::fs::write(path, text)?;
    }
    Ok(out.exit_code)
}

/// Runs `f` inside a pool capped by `PS_SOJOURN_THREADS` when it is set.
pub fn with_thread_cap<T: Send, F: FnOnce() -> T + Send>(f: F) -> Result<T, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Entry point shared by the binary: parse, run, map errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        let mut v = vec!["ps-sojourn"];
        v.extend_from_slice(args);
        RunConfig::try_parse_from(v).unwrap()
    }

    #[test]
    fn json_number_rule() {
        assert_eq!(json_number(0.5), json!(0.5));
        assert_eq!(json_number(-0.05259375), json!(-0.05259375));
        assert!(json_number(0.1 + 0.2).is_string());
        assert!(json_number(std::f64::consts::PI).is_string());
        assert_eq!(json_number(f64::NAN), json!("NaN"));
        let s = json_number(1.0 / 3.0);
        let back: f64 = s.as_str().unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn csv_number_has_17_digits() {
        assert_eq!(csv_number(0.1), "1.0000000000000001e-1");
        assert_eq!(csv_number(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn table_header_is_exact() {
        let out = render(&cfg(&["table", "--regime", "super", "--rho", "2", "--capacities", "25,50"])).unwrap();
        assert_eq!(out.body.lines().next().unwrap(), "K,theta_s_exact,theta_s_asymp,abs_err,implied_order");
        assert_eq!(out.body.lines().count(), 3);
    }

    #[test]
    fn theta_s_json_has_terms() {
        let out = render(&cfg(&["theta-s", "--rho", "2", "--capacity", "20"])).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        let est = &v["estimates"][0];
        assert_eq!(est["regime"], "super");
        let value = match &est["theta_s_estimate"] {
            Value::String(s) => s.parse::<f64>().unwrap(),
            other => other.as_f64().unwrap(),
        };
        assert!((value + 0.05259375).abs() < 1e-15);
        assert_eq!(est["terms"].as_array().unwrap().len(), 4);
        let back: RunConfig = serde_json::from_value(v["provenance"]["config"].clone()).unwrap();
        assert_eq!(back, cfg(&["theta-s", "--rho", "2", "--capacity", "20"]));
    }

    #[test]
    fn transform_both_discrepancy() {
        let out = render(&cfg(&["transform", "--rho", "0.8", "--capacity", "10", "--theta", "0.3", "--method", "both"])).unwrap();
        let mut lines = out.body.lines();
        assert_eq!(lines.next().unwrap(), "n,theorem21,resolvent,rel_diff");
        let mut count = 0;
        for l in lines {
            let rel: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
            assert!(rel < 1e-8);
            count += 1;
        }
        assert_eq!(count, 10);
    }

    #[test]
    fn density_single_room() {
        let out = render(&cfg(&["density", "--rho", "1", "--capacity", "1", "--n", "0", "--method", "ode", "--t-max", "10", "--points", "50"])).unwrap();
        for l in out.body.lines().skip(1) {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((f[1] - (-f[0]).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_output() {
        let c = cfg(&["simulate", "--rho", "0.9", "--capacity", "5", "--n", "2", "--count", "2000", "--seed", "3"]);
        assert_eq!(render(&c).unwrap(), render(&c).unwrap());
    }

    #[test]
    fn usage_errors() {
        assert!(RunConfig::try_parse_from(["ps-sojourn", "transform", "--rho", "1"]).is_err());
        let e = render(&cfg(&["table", "--regime", "sub", "--capacities", "10,20"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = render(&cfg(&["table", "--regime", "sub", "--rho", "0.5", "--capacities", "20,10"])).unwrap_err();
        assert!(matches!(e, CliError::Usage(_)));
    }

    #[test]
    fn check_status() {
        let c = |residual| Check { name: String::new(), residual, tolerance: 1e-8, note: String::new() };
        assert_eq!(c(Some(1e-9)).status(), "pass");
        assert_eq!(c(Some(1e-8)).status(), "pass");
        assert_eq!(c(Some(2e-8)).status(), "fail");
        assert_eq!(c(Some(f64::NAN)).status(), "fail");
        assert_eq!(c(None).status(), "skipped");
    }
}
