//! Command-line interface: config resolution, subcommand dispatch, and
//! deterministic CSV/JSON emission. Data goes to stdout or --output; logs go
//! to stderr.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::kinetics::{
    amplification, assemble_rate_matrix, pumping_beta, spin_polarization, steady_state,
    thermal_populations, Populations,
};
use crate::resonance::{
    mw_coupling_default, nv_orientation_angles, resonant_fields, CrystalMount, TransitionSpec,
};
use crate::spectra::{
    auto_initial_peaks, baseline_correct, fit_multipeak, hyperfine_field_spacing, integrate,
    linewidth_to_t2star, synthesize, FitResult, PeakModel, Spectrum, SpectrumKind,
};
use crate::spin_model::{eigensolve, mixing_at_field, FieldVector, Manifold};
use crate::{NvError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// Config or input CSV failed to parse or validate.
pub const EXIT_PARSE: i32 = 2;
/// No resonant fields anywhere in the window (header still emitted).
pub const EXIT_NO_ROOTS: i32 = 3;
/// Fit did not converge (report still emitted).
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// Couplings below this are treated as forbidden and omitted from output.
pub const COUPLING_FLOOR: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "nvkin", about = "NV-center spin kinetics and ESR spectrum toolkit", version)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: GlobalOverrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the JSON config; flags win.
#[derive(Debug, Clone, Args)]
pub struct GlobalOverrides {
    /// Config file (JSON); falls back to $NVKIN_CONFIG, then defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for sweeps (default: number of processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Microwave frequency, Hz.
    #[arg(long, global = true)]
    pub mw_frequency: Option<f64>,
    /// Field search window, T (low high).
    #[arg(long, global = true, num_args = 2, value_names = ["LOW_T", "HIGH_T"])]
    pub window: Option<Vec<f64>>,
    /// Fixed polar angle, degrees.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Fixed laser intensity, W/m^2.
    #[arg(long, global = true)]
    pub intensity: Option<f64>,
    /// Lorentzian fwhm for synthetic spectra, T.
    #[arg(long, global = true)]
    pub linewidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    /// Sweep the polar angle at fixed intensity.
    Theta,
    /// Sweep the laser intensity at fixed angle.
    Power,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonant fields and couplings per angle and transition.
    Resonances,
    /// Steady-state polarization and amplification over a grid.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
    },
    /// Synthetic ESR spectrum at one operating point.
    Spectrum {
        /// Emit the field derivative instead of absorption.
        #[arg(long)]
        differential: bool,
        /// Override the number of field samples.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Fit Lorentzian peaks to a 2-column CSV spectrum.
    Fit {
        input: PathBuf,
        /// Input is a differential spectrum; integrate before fitting.
        #[arg(long)]
        differential: bool,
        /// Subtract a polynomial baseline before fitting.
        #[arg(long)]
        baseline: bool,
        /// Baseline polynomial degree (<= 3).
        #[arg(long, default_value_t = 1)]
        baseline_degree: usize,
        /// Treat each feature as a hyperfine triplet with one shared amplitude.
        #[arg(long)]
        triplet: bool,
        /// Free per-component amplitudes (drop the equal-magnitude constraint).
        #[arg(long)]
        free_amplitudes: bool,
        /// Peak-detection threshold as a fraction of the extremal signal.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        /// Explicit initial guess "center_T,fwhm_T,amplitude"; repeatable.
        #[arg(long = "peak")]
        peaks: Vec<String>,
        /// MW coupling C_ij for polarization extraction.
        #[arg(long)]
        coupling: Option<f64>,
        /// Reference (thermal) peak area.
        #[arg(long)]
        ref_area: Option<f64>,
        /// Reference (thermal) spin polarization.
        #[arg(long)]
        ref_pol: Option<f64>,
    },
    /// NV-axis angles versus crystal rotation about the mount axis.
    Geometry {
        /// Rotation step, degrees.
        #[arg(long, default_value_t = 1.0)]
        step_deg: f64,
    },
}

fn apply_overrides(mut cfg: RunConfig, o: &GlobalOverrides) -> Result<RunConfig> {
    if let Some(f) = o.mw_frequency {
        cfg.mw_frequency = f;
    }
    if let Some(w) = &o.window {
        cfg.field_window = (w[0], w[1]);
    }
    if let Some(t) = o.theta {
        cfg.theta_deg = t;
    }
    if let Some(p) = o.intensity {
        cfg.intensity = p;
    }
    if let Some(l) = o.linewidth {
        cfg.linewidth = l;
    }
    if o.jobs.is_some() {
        cfg.jobs = o.jobs;
    }
    if o.output.is_some() {
        cfg.output_path = o.output.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| NvError::Io(std::io::Error::other(format!("cannot write {}: {e}", path.display())))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(NvError::Io)
        }
    }
}

/// Steady-state solution at one operating point for one transition.
struct PointSolution {
    coupling: f64,
    s_z: f64,
    thermal_s_z: f64,
}

/// Solve at the first resonant field in the window, if any.
fn solve_point(
    cfg: &RunConfig,
    theta_deg: f64,
    intensity: f64,
    t: &TransitionSpec,
) -> Result<Option<PointSolution>> {
    let theta = theta_deg.to_radians();
    let roots = resonant_fields(&cfg.spin, cfg.mw_frequency, theta, t, cfg.field_window)?;
    match roots.first() {
        Some(&b) => solve_point_at(cfg, theta_deg, intensity, t, b).map(Some),
        None => Ok(None),
    }
}

fn run_in_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| NvError::Io(std::io::Error::other(format!("worker pool: {e}"))))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn cmd_resonances(cfg: &RunConfig) -> Result<i32> {
    use rayon::prelude::*;
    let grid = cfg.theta_grid_deg.clone();
    let rows: Vec<Result<String>> = run_in_pool(cfg.jobs, || {
        grid.par_iter()
            .map(|&theta_deg| {
                let theta = theta_deg.to_radians();
                let mut block = String::new();
                for t in TransitionSpec::all() {
                    let roots =
                        resonant_fields(&cfg.spin, cfg.mw_frequency, theta, &t, cfg.field_window)?;
                    for b in roots {
                        let field = FieldVector::new(b, theta)?;
                        let eig =
                            eigensolve(&crate::spin_model::build_hamiltonian(
                                &cfg.spin,
                                &field,
                                Manifold::Ground,
                                false,
                            )?)?;
                        let c = mw_coupling_default(&eig, &t)?;
                        if c < COUPLING_FLOOR {
                            continue;
                        }
                        block.push_str(&format!("{theta_deg:.8e},{t},{b:.8e},{c:.8e}\n"));
                    }
                }
                Ok(block)
            })
            .collect()
    })?;

    let mut text = String::from("theta_deg,transition,field_T,coupling\n");
    let mut any = false;
    for r in rows {
        let block = r?;
        any |= !block.is_empty();
        text.push_str(&block);
    }
    emit(cfg, &text)?;
    if !any {
        eprintln!("warning: no resonances in window ({}, {}) T", cfg.field_window.0, cfg.field_window.1);
        return Ok(EXIT_NO_ROOTS);
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(cfg: &RunConfig, mode: SweepMode) -> Result<i32> {
    use rayon::prelude::*;
    let (header, grid): (&str, Vec<(f64, f64)>) = match mode {
        SweepMode::Theta => (
            "theta_deg,transition,s_z,amplification\n",
            cfg.theta_grid_deg.iter().map(|&t| (t, cfg.intensity)).collect(),
        ),
        SweepMode::Power => (
            "intensity_W_m2,transition,s_z,amplification\n",
            cfg.intensity_grid.iter().map(|&p| (cfg.theta_deg, p)).collect(),
        ),
    };
    let rows: Vec<String> = run_in_pool(cfg.jobs, || {
        grid.par_iter()
            .map(|&(theta_deg, intensity)| {
                let sweep_value = match mode {
                    SweepMode::Theta => theta_deg,
                    SweepMode::Power => intensity,
                };
                let mut block = String::new();
                for t in TransitionSpec::all() {
                    match solve_point(cfg, theta_deg, intensity, &t) {
                        Ok(Some(p)) => {
                            let amp = amplification(p.s_z, p.thermal_s_z).unwrap_or(f64::NAN);
                            block.push_str(&format!(
                                "{sweep_value:.8e},{t},{:.8e},{amp:.8e}\n",
                                p.s_z
                            ));
                        }
                        Ok(None) => {
                            eprintln!(
                                "warning: no {t} resonance in window at theta = {theta_deg} deg"
                            );
                        }
                        Err(e) => {
                            // Failed point: marked row, run continues.
                            eprintln!(
                                "warning: {t} at theta = {theta_deg} deg, intensity = {intensity}: {e}"
                            );
                            block.push_str(&format!(
                                "{sweep_value:.8e},{t},{:.8e},{:.8e}\n",
                                f64::NAN,
                                f64::NAN
                            ));
                        }
                    }
                }
                block
            })
            .collect()
    })?;

    let mut text = String::from(header);
    for block in rows {
        text.push_str(&block);
    }
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(cfg: &RunConfig, differential: bool, points: Option<usize>) -> Result<i32> {
    let mut peaks = Vec::new();
    for t in TransitionSpec::all() {
        let theta = cfg.theta_deg.to_radians();
        let roots = resonant_fields(&cfg.spin, cfg.mw_frequency, theta, &t, cfg.field_window)?;
        for b in roots {
            let sol = solve_point_at(cfg, cfg.theta_deg, cfg.intensity, &t, b)?;
            if sol.coupling < COUPLING_FLOOR {
                continue;
            }
            peaks.push(PeakModel {
                center: b,
                fwhm: cfg.linewidth,
                amplitude: sol.s_z * sol.coupling,
                hyperfine_splitting: hyperfine_field_spacing(
                    cfg.spin.hyperfine_par,
                    cfg.spin.g_factor,
                ),
                n_hyperfine: 3,
            });
        }
    }
    if peaks.is_empty() {
        eprintln!("warning: no resonances in window; emitting header only");
        emit(cfg, "field_T,signal\n")?;
        return Ok(EXIT_NO_ROOTS);
    }
    let n = points.unwrap_or(cfg.spectrum_points).max(2);
    let (lo, hi) = cfg.field_window;
    let axis: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let kind = if differential {
        SpectrumKind::Differential
    } else {
        SpectrumKind::Absorption
    };
    let s = synthesize(&peaks, &axis, kind)?;
    emit(cfg, &s.to_csv())?;
    Ok(EXIT_OK)
}

/// Like solve_point but at a caller-supplied resonance field.
fn solve_point_at(
    cfg: &RunConfig,
    theta_deg: f64,
    intensity: f64,
    t: &TransitionSpec,
    b: f64,
) -> Result<PointSolution> {
    let field = FieldVector::new(b, theta_deg.to_radians())?;
    let (eig_gs, mix_gs) = mixing_at_field(&cfg.spin, &field, Manifold::Ground)?;
    let (_, mix_es) = mixing_at_field(&cfg.spin, &field, Manifold::Excited)?;
    let beta = pumping_beta(intensity, &cfg.rates)?;
    let rm = assemble_rate_matrix(&mix_gs, &mix_es, &cfg.rates, beta)?;
    let n_dark = thermal_populations(&eig_gs.energies, cfg.spin.temperature)?;
    let n: Populations = steady_state(&rm, &n_dark)?;
    let (i, j) = (t.lower as usize, t.upper as usize);
    Ok(PointSolution {
        coupling: mw_coupling_default(&eig_gs, t)?,
        s_z: spin_polarization(&n, i, j)?,
        thermal_s_z: spin_polarization(&n_dark, i, j)?,
    })
}

/// Per-peak record of the fit report.
#[derive(serde::Serialize)]
struct PeakReport {
    #[serde(rename = "center_T")]
    center: f64,
    #[serde(rename = "fwhm_T")]
    fwhm: f64,
    amplitude: f64,
    area: f64,
    t2star_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    polarization: Option<f64>,
}

#[derive(serde::Serialize)]
struct FitReport {
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    peaks: Vec<PeakReport>,
    /// Mean adjacent spacing of fitted centers when they form a regular
    /// multiplet, T.
    #[serde(rename = "hyperfine_spacing_T", skip_serializing_if = "Option::is_none")]
    hyperfine_spacing: Option<f64>,
}

fn parse_peak_flag(s: &str) -> Result<PeakModel> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(NvError::Malformed(format!(
            "--peak expects center_T,fwhm_T,amplitude, got {s:?}"
        )));
    }
    let nums: Result<Vec<f64>> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| NvError::Malformed(format!("--peak {s:?}: {e}")))
        })
        .collect();
    let nums = nums?;
    Ok(PeakModel::single(nums[0], nums[1], nums[2]))
}

/// Cluster single-peak seeds within 1.6x the expected splitting into one
/// triplet seed with a shared amplitude.
fn cluster_into_triplets(mut singles: Vec<PeakModel>, splitting: f64) -> Vec<PeakModel> {
    singles.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut out: Vec<PeakModel> = Vec::new();
    let mut cluster: Vec<PeakModel> = Vec::new();
    let flush = |cluster: &mut Vec<PeakModel>, out: &mut Vec<PeakModel>| {
        if cluster.is_empty() {
            return;
        }
        let n = cluster.len() as f64;
        let center = cluster.iter().map(|p| p.center).sum::<f64>() / n;
        let amplitude = cluster.iter().map(|p| p.amplitude).sum::<f64>() / n;
        let fwhm = cluster.iter().map(|p| p.fwhm).sum::<f64>() / n;
        out.push(PeakModel {
            center,
            fwhm,
            amplitude,
            hyperfine_splitting: splitting,
            n_hyperfine: 3,
        });
        cluster.clear();
    };
    for p in singles {
        if let Some(last) = cluster.last() {
            if p.center - last.center > 1.6 * splitting {
                flush(&mut cluster, &mut out);
            }
        }
        cluster.push(p);
    }
    flush(&mut cluster, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    cfg: &RunConfig,
    input: &PathBuf,
    differential: bool,
    baseline: bool,
    baseline_degree: usize,
    triplet: bool,
    free_amplitudes: bool,
    threshold: f64,
    peak_flags: &[String],
    coupling: Option<f64>,
    ref_area: Option<f64>,
    ref_pol: Option<f64>,
) -> Result<i32> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| NvError::Malformed(format!("cannot read {}: {e}", input.display())))?;
    let kind = if differential {
        SpectrumKind::Differential
    } else {
        SpectrumKind::Absorption
    };
    let mut s = Spectrum::from_csv(&text, kind)?;
    if differential {
        s = integrate(&s)?;
    }

    let explicit: Result<Vec<PeakModel>> = peak_flags.iter().map(|f| parse_peak_flag(f)).collect();
    let explicit = explicit?;
    let mut seeds = if explicit.is_empty() {
        auto_initial_peaks(&s, threshold)
    } else {
        explicit.clone()
    };
    if seeds.is_empty() {
        return Err(NvError::Malformed("no peaks detected in input".into()));
    }
    if baseline {
        let windows: Vec<(f64, f64)> = seeds
            .iter()
            .map(|p| (p.center - 15.0 * p.fwhm, p.center + 15.0 * p.fwhm))
            .collect();
        s = baseline_correct(&s, &windows, baseline_degree)?;
        if explicit.is_empty() {
            seeds = auto_initial_peaks(&s, threshold);
            if seeds.is_empty() {
                return Err(NvError::Malformed("no peaks detected after baseline removal".into()));
            }
        }
    }
    let splitting = hyperfine_field_spacing(cfg.spin.hyperfine_par, cfg.spin.g_factor);
    if triplet {
        seeds = cluster_into_triplets(seeds, splitting);
    }

    let fit: FitResult = fit_multipeak(&s, &seeds, !free_amplitudes)?;

    let mut centers: Vec<f64> = fit.peaks.iter().map(|p| p.center).collect();
    centers.sort_by(f64::total_cmp);
    let spacing = if triplet {
        Some(splitting)
    } else if centers.len() >= 2 {
        let gaps: Vec<f64> = centers.windows(2).map(|w| w[1] - w[0]).collect();
        // Regular multiplet: all gaps within 3x the expected hyperfine spacing.
        if gaps.iter().all(|&g| g < 3.0 * splitting) {
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        } else {
            None
        }
    } else {
        None
    };

    let refs = match (coupling, ref_area, ref_pol) {
        (Some(c), Some(a), Some(p)) => Some((c, a, p)),
        (None, None, None) => None,
        _ => {
            return Err(NvError::InvalidParameter(
                "--coupling, --ref-area, --ref-pol must be given together".into(),
            ));
        }
    };
    let peaks: Result<Vec<PeakReport>> = fit
        .peaks
        .iter()
        .map(|p| {
            let polarization = match refs {
                Some((c, a, rp)) => Some(
                    crate::spectra::extract_polarization(p.area(), c, a, rp)?.value,
                ),
                None => None,
            };
            Ok(PeakReport {
                center: p.center,
                fwhm: p.fwhm,
                amplitude: p.amplitude(),
                area: p.area(),
                t2star_s: linewidth_to_t2star(p.fwhm, cfg.spin.g_factor),
                polarization,
            })
        })
        .collect();
    let report = FitReport {
        converged: fit.converged,
        iterations: fit.iterations,
        residual_norm: fit.residual_norm,
        peaks: peaks?,
        hyperfine_spacing: spacing,
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| NvError::Io(std::io::Error::other(format!("report serialization: {e}"))))?;
    json.push('\n');
    emit(cfg, &json)?;
    if !fit.converged {
        eprintln!("warning: fit did not converge after {} iterations", fit.iterations);
        return Ok(EXIT_NO_CONVERGENCE);
    }
    Ok(EXIT_OK)
}

fn cmd_geometry(cfg: &RunConfig, step_deg: f64) -> Result<i32> {
    if !(step_deg > 0.0) {
        return Err(NvError::InvalidParameter(format!(
            "step must be positive, got {step_deg}"
        )));
    }
    let mut text = String::from("rotation_deg,theta1_deg,theta2_deg,theta3_deg,theta4_deg\n");
    let steps = (360.0 / step_deg).round() as usize;
    for i in 0..=steps {
        let deg = i as f64 * step_deg;
        let mount = CrystalMount::new(deg.to_radians());
        let angles = nv_orientation_angles(&mount);
        text.push_str(&format!(
            "{deg:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            angles[0].to_degrees(),
            angles[1].to_degrees(),
            angles[2].to_degrees(),
            angles[3].to_degrees()
        ));
    }
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}

/// Dispatch a parsed invocation; the return value is the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match RunConfig::resolve(cli.overrides.config.as_deref())
        .and_then(|c| apply_overrides(c, &cli.overrides))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_PARSE;
        }
    };
    let outcome = match &cli.command {
        Command::Resonances => cmd_resonances(&cfg),
        Command::Sweep { mode } => cmd_sweep(&cfg, *mode),
        Command::Spectrum {
            differential,
            points,
        } => cmd_spectrum(&cfg, *differential, *points),
        Command::Fit {
            input,
            differential,
            baseline,
            baseline_degree,
            triplet,
            free_amplitudes,
            threshold,
            peaks,
            coupling,
            ref_area,
            ref_pol,
        } => cmd_fit(
            &cfg,
            input,
            *differential,
            *baseline,
            *baseline_degree,
            *triplet,
            *free_amplitudes,
            *threshold,
            peaks,
            *coupling,
            *ref_area,
            *ref_pol,
        ),
        Command::Geometry { step_deg } => cmd_geometry(&cfg, *step_deg),
    };
    match outcome {
        Ok(code) => code,
        Err(e @ NvError::Malformed(_)) => {
            eprintln!("error: {e}");
            EXIT_PARSE
        }
        Err(e @ NvError::NonConvergence { .. }) => {
            eprintln!("error: {e}");
            EXIT_NO_CONVERGENCE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cfg = RunConfig::default();
        let o = GlobalOverrides {
            config: None,
            output: None,
            jobs: Some(2),
            mw_frequency: Some(9.0e9),
            window: Some(vec![0.1, 0.3]),
            theta: Some(20.0),
            intensity: Some(1e3),
            linewidth: None,
        };
        let cfg = apply_overrides(cfg, &o).unwrap();
        assert_eq!(cfg.mw_frequency, 9.0e9);
        assert_eq!(cfg.field_window, (0.1, 0.3));
        assert_eq!(cfg.theta_deg, 20.0);
        assert_eq!(cfg.intensity, 1e3);
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.linewidth, RunConfig::default().linewidth);
    }

    #[test]
    fn bad_override_rejected() {
        let o = GlobalOverrides {
            config: None,
            output: None,
            jobs: None,
            mw_frequency: Some(-1.0),
            window: None,
            theta: None,
            intensity: None,
            linewidth: None,
        };
        assert!(apply_overrides(RunConfig::default(), &o).is_err());
    }

    #[test]
    fn peak_flag_parsing() {
        let p = parse_peak_flag("0.2,1e-4,-0.5").unwrap();
        assert_eq!(p.center, 0.2);
        assert_eq!(p.fwhm, 1e-4);
        assert_eq!(p.amplitude, -0.5);
        assert!(parse_peak_flag("0.2,1e-4").is_err());
        assert!(parse_peak_flag("a,b,c").is_err());
    }

    #[test]
    fn triplet_clustering() {
        let split = 77e-6;
        let singles = vec![
            PeakModel::single(0.3 - split, 2e-6, 1.0),
            PeakModel::single(0.3, 2e-6, 1.2),
            PeakModel::single(0.3 + split, 2e-6, 1.1),
            PeakModel::single(0.44, 2e-6, -0.9),
        ];
        let clustered = cluster_into_triplets(singles, split);
        assert_eq!(clustered.len(), 2);
        assert!((clustered[0].center - 0.3).abs() < 1e-9);
        assert_eq!(clustered[0].n_hyperfine, 3);
        assert!((clustered[1].center - 0.44).abs() < 1e-9);
    }

    #[test]
    fn cli_parses() {
        use clap::Parser as _;
        let cli = Cli::try_parse_from([
            "nvkin",
            "sweep",
            "--mode",
            "power",
            "--theta",
            "0",
            "--jobs",
            "4",
        ])
        .unwrap();
        assert!(matches!(
            cli.command,
            Command::Sweep {
                mode: SweepMode::Power
            }
        ));
        assert_eq!(cli.overrides.theta, Some(0.0));
    }
}
