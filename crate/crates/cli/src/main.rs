use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use tn_gsee::dmrg::{self, DmrgConfig};
use tn_gsee::gsee::{self, GseeOptions};
use tn_gsee::{container, filter, lp, Error, Result};
use tn_gsee_cli::pipeline::{self, GseeReport, InitReport, Until};
use tn_gsee_cli::{compare_runs, exit_code, io, ModelSpec, RunConfig};

#[derive(Parser)]
#[command(name = "tn-gsee", version, about = "Ground-state energy estimation with Chebyshev moments of matrix product states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// tfim1d, tfim2d or pauli_file
    #[arg(long, default_value = "tfim1d")]
    model: String,
    /// Chain length, or lattice side for tfim2d
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long = "J", default_value_t = 1.0)]
    j: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Pauli-sum text file
    #[arg(long)]
    path: Option<PathBuf>,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            model: self.model.clone(),
            l: self.l,
            j: self.j,
            h: self.h,
            path: self.path.clone(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// DMRG guiding state: writes init.tnc and init.json
    PrepareInit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        chi_init: usize,
        #[arg(long, default_value_t = 10)]
        sweeps: usize,
        #[arg(long, default_value_t = 1e-10)]
        conv_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chebyshev coefficients of a smoothed step filter
    FilterPoly {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Guiding state and Chebyshev moments for a run configuration
    Moments {
        #[arg(long)]
        config: PathBuf,
    },
    /// Extends a moments table by linear prediction
    Extrapolate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n_fit: usize,
        /// Tikhonov parameter; defaults to a small multiple of the normal-matrix trace
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long)]
        d_target: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Energy estimate from a moments table
    Gsee {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        chi: f64,
        #[arg(long)]
        delta: f64,
        /// Defaults to the largest available degree
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        /// Factor converting normalized energies to model units
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact ground energy, overlap and moments from dense linear algebra
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Guiding-state container
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compares two run directories
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn args_hash(cmd: &Command) -> String {
    let digest = Sha256::digest(format!("{cmd:?}").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load_config(path: &Path) -> Result<(RunConfig, Option<PathBuf>)> {
    let cfg = RunConfig::from_file(path)?;
    let base = path.parent().map(Path::to_path_buf);
    Ok((cfg, base))
}

fn execute(cmd: Command) -> Result<()> {
    let hash = args_hash(&cmd);
    let short = &hash[..16];
    match cmd {
        Command::PrepareInit {
            model,
            chi_init,
            sweeps,
            conv_tol,
            out,
        } => {
            let cfg = DmrgConfig {
                chi_init,
                sweeps,
                conv_tol,
                ..Default::default()
            };
            cfg.validate()?;
            let h = model.spec().build(None)?;
            let res = dmrg::dmrg_ground(&h, &cfg)?;
            let chi = if h.n_sites() <= tn_gsee::dense_limit() {
                let sys = tn_gsee::oracle::DenseSystem::new(&h)?;
                Some(tn_gsee::oracle::overlap_chi(&res.state, &sys)?)
            } else {
                None
            };
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            container::save_mps(&res.state, out.join(pipeline::INIT_STATE))?;
            let report = InitReport {
                config_hash: hash.clone(),
                source: "dmrg".into(),
                n_sites: h.n_sites(),
                bond_dims: res.state.bond_dims(),
                energy: res.energy,
                energy_raw: res.energy * h.scale,
                sweep_energies: res.sweep_energies,
                converged: res.converged,
                chi,
            };
            io::write_json(&out.join(pipeline::INIT_META), &report)?;
            print_json(&report)
        }
        Command::FilterPoly {
            c,
            delta,
            eta,
            degree,
            out,
        } => {
            let f = filter::shifted_sign_cheb(c, delta, eta, degree)?;
            if let Some(w) = f.meta.as_ref().and_then(|m| m.quality_warning.as_ref()) {
                log::warn!("{w}");
            }
            let rows: Vec<Vec<String>> = f
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| vec![k.to_string(), io::num(*a)])
                .collect();
            io::write_file(&out.join("filter.csv"), io::table_csv(short, &["k", "a_k"], &rows).as_bytes())?;
            let meta = serde_json::json!({ "config_hash": hash, "meta": f.meta });
            io::write_json(&out.join("filter.json"), &meta)?;
            print_json(&meta)
        }
        Command::Moments { config } => {
            let (cfg, base) = load_config(&config)?;
            let summary = pipeline::run_until(&cfg, base.as_deref(), Until::Moments)?;
            println!(
                "{} moments written to {}",
                summary.moments.moments.len(),
                summary.out_dir.join(pipeline::MOMENTS).display()
            );
            Ok(())
        }
        Command::Extrapolate {
            input,
            n_fit,
            ridge,
            d_target,
            out,
        } => {
            let seq = io::read_moments(&input)?;
            let model = lp::stabilize(&lp::fit_lp(&seq, n_fit, ridge)?)?;
            let ext = lp::extrapolate(&seq, &model, d_target)?;
            io::write_file(&out, io::extrapolated_csv(&ext, short).as_bytes())?;
            let mut meta = out.clone().into_os_string();
            meta.push(".lp.json");
            let report = serde_json::json!({ "config_hash": hash, "model": model });
            io::write_json(Path::new(&meta), &report)?;
            print_json(&serde_json::json!({
                "n_fit": model.n_fit,
                "ridge": model.ridge,
                "reflected_roots": model.reflected_roots,
                "residual_rms": model.residual_rms,
                "degree": ext.degree(),
            }))
        }
        Command::Gsee {
            input,
            chi,
            delta,
            degree,
            eta,
            scale,
            out,
        } => {
            let seq = io::read_moments(&input)?;
            let opts = GseeOptions {
                chi,
                delta,
                degree: degree.unwrap_or(seq.degree()),
                eta,
                scale_back: scale,
            };
            let res = gsee::estimate_energy_with(&seq, &opts)?;
            io::write_file(
                &out.join(pipeline::CUMULATIVE),
                io::cumulative_csv(&res.c_trace, short).as_bytes(),
            )?;
            let report = GseeReport::new(&res, &hash, "argument", seq.split_index(), None);
            io::write_json(&out.join(pipeline::GSEE), &report)?;
            print_json(&report)
        }
        Command::Oracle {
            model,
            state,
            degree,
            out,
        } => {
            let h = model.spec().build(None)?;
            let psi = state.map(dmrg::load_guiding_state).transpose()?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let report = pipeline::run_oracle(&h, psi.as_ref(), degree, &hash, &out)?;
            print_json(&report)
        }
        Command::Run { config } => {
            let (cfg, base) = load_config(&config)?;
            let summary = pipeline::run_pipeline(&cfg, base.as_deref())?;
            match &summary.gsee {
                Some(g) => print_json(g),
                None => Ok(()),
            }
        }
        Command::Compare { run_a, run_b, out } => {
            let report = compare_runs(&run_a, &run_b)?;
            report.write(&out)?;
            println!(
                "{} moments compared: max |diff| {:e}, median {:e}",
                report.degree + 1,
                report.max_abs_diff,
                report.median_abs_diff
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
