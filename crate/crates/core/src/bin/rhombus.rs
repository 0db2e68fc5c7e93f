use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use rhombus::circuit::JunctionSet;
use rhombus::config::RunConfig;
use rhombus::fit::{fit, DeviceParams, TransitionDataset};
use rhombus::hilbert::{assemble_rhombus, ChargeBasis, ResonatorModel};
use rhombus::noise::{coherence_table, write_coherence_csv};
use rhombus::observables::{
    asymmetry_scan, classical_minima, delta_wavefunction, prohibited_charge_weight, support_overlap, to_phase_grid,
    write_asymmetry_csv, Parity,
};
use rhombus::solver::{alpha_sweep, charge_sweep, eigensolve, flux_sweep, SpectrumResult};
use rhombus::{Error, Result};

#[derive(Parser)]
#[command(name = "rhombus", version, about = "Spectra and coherence budget of the rhombus qubit")]
struct Cli {
    /// Run configuration (JSON); built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "RHOMBUS_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Charge truncation n_max.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// External flux in Φ0 (bias point; replaces flux grids).
    #[arg(long, global = true, allow_negative_numbers = true)]
    flux: Option<f64>,
    /// Junction asymmetry E_J4 / mean(E_J1..3).
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, PartialEq, Eq)]
enum Command {
    /// Reduced circuit parameters (ec, E_J, β, α).
    Quantize,
    /// Levels over the flux grid.
    Spectrum,
    /// Levels over an offset-charge grid.
    Charge,
    /// Levels and figures of merit over the asymmetry grid.
    Alpha,
    /// Charge- and phase-space wavefunctions at the bias point.
    Wavefunction,
    /// Relaxation and dephasing budget over the coherence flux grid.
    Coherence,
    /// Fit device parameters to a transition dataset.
    Fit {
        /// Dataset CSV (overrides the config).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Quantize => "quantize",
            Command::Spectrum => "spectrum",
            Command::Charge => "charge",
            Command::Alpha => "alpha",
            Command::Wavefunction => "wavefunction",
            Command::Coherence => "coherence",
            Command::Fit { .. } => "fit",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rhombus {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Load the config, apply flag overrides and validate everything up front.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    } else if cli.config.is_some() {
        cfg.output_dir = cfg.resolve(&cfg.output_dir);
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(n) = cli.nmax {
        cfg.basis.n_max = n;
        cfg.basis.max_n_max = cfg.basis.max_n_max.max(n);
        cfg.wavefunction.grid = cfg.wavefunction.grid.max(2 * n + 1);
    }
    if cli.flux.is_some() || cli.alpha.is_some() {
        let mut circuit = cfg.circuit_config()?;
        if let Some(f) = cli.flux {
            circuit.flux_phi0 = f;
            cfg.sweeps.flux = rhombus::config::Grid::Values(vec![f]);
            cfg.sweeps.coherence = rhombus::config::Grid::Values(vec![f]);
            cfg.sweeps.alpha.flux_phi0 = Some(f);
        }
        if let Some(a) = cli.alpha {
            let e = circuit.junctions_ghz;
            circuit.junctions_ghz = JunctionSet::with_alpha([e[0], e[1], e[2]], a)?.energies();
        }
        cfg.circuit = Some(circuit);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Output {
    dir: PathBuf,
    header: Vec<(String, String)>,
}

impl Output {
    fn new(cfg: &RunConfig, command: &Command) -> Result<Self> {
        // Where and how wide the run executes does not change its results.
        let hashed = RunConfig { workers: 0, output_dir: PathBuf::new(), ..cfg.clone() };
        let canonical = serde_json::to_vec(&json!({
            "config": hashed,
            "circuit": cfg.circuit_config()?,
        }))?;
        let hash = hex::encode(Sha256::digest(&canonical));
        let header = vec![
            ("tool".to_string(), format!("rhombus {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), command.name().to_string()),
            ("config_sha256".to_string(), hash),
            ("n_max".to_string(), cfg.basis.n_max.to_string()),
            ("gauge".to_string(), cfg.basis.gauge.name().to_string()),
        ];
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self { dir: cfg.output_dir.clone(), header })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn comment_header<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.header {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    fn metadata(&self) -> serde_json::Value {
        self.header.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>().into()
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    fn write_spectrum(&self, stem: &str, result: &SpectrumResult) -> Result<()> {
        let mut w = self.create(&format!("{stem}.csv"))?;
        result.write_csv(&mut w, &self.header)?;
        w.flush()?;
        self.write_json(&format!("{stem}.json"), &result.to_json(false, self.metadata()))?;
        report(&self.dir.join(format!("{stem}.csv")));
        Ok(())
    }
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = effective_config(cli)?;
    let out = Output::new(&cfg, &cli.command)?;
    let circuit = cfg.reduced_circuit()?;
    let sweep = cfg.basis.sweep(cfg.workers);
    match &cli.command {
        Command::Quantize => {
            let doc = json!({
                "metadata": out.metadata(),
                "circuit": circuit,
                "alpha": circuit.junctions.alpha(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            report(&out.write_json("circuit.json", &doc)?);
        }
        Command::Spectrum => {
            let r = flux_sweep(&circuit, &cfg.sweeps.flux.values()?, &sweep)?;
            out.write_spectrum("spectrum", &r)?;
        }
        Command::Charge => {
            let mode = cfg.sweeps.charge.mode - 1;
            let r = charge_sweep(&circuit, mode, &cfg.sweeps.charge.grid.values()?, &sweep)?;
            out.write_spectrum("charge", &r)?;
        }
        Command::Alpha => {
            let alphas = cfg.sweeps.alpha.grid.values()?;
            let phi = cfg.sweeps.alpha.flux_phi0.unwrap_or(circuit.phi_ext);
            let r = alpha_sweep(&circuit, &alphas, phi, &sweep)?;
            out.write_spectrum("alpha", &r)?;
            let e = circuit.junctions.energies();
            let basis = ChargeBasis::rhombus(cfg.basis.n_max)?;
            let rows = asymmetry_scan(&circuit.with_flux(phi), [e[0], e[1], e[2]], &alphas, &basis, &sweep.solver, cfg.workers)?;
            let mut w = out.create("alpha_observables.csv")?;
            write_asymmetry_csv(&mut w, &rows, &out.header)?;
            w.flush()?;
            report(&out.dir.join("alpha_observables.csv"));
        }
        Command::Wavefunction => wavefunction(&cfg, &out, &circuit)?,
        Command::Coherence => {
            let basis = ChargeBasis::rhombus(cfg.basis.n_max)?;
            let rows = coherence_table(
                &circuit,
                &cfg.sweeps.coherence.values()?,
                &basis,
                &cfg.noise,
                cfg.resonator.as_ref(),
                &sweep.solver,
                cfg.workers,
            )?;
            let mut w = out.create("coherence.csv")?;
            write_coherence_csv(&mut w, &rows, &out.header)?;
            w.flush()?;
            report(&out.dir.join("coherence.csv"));
            out.write_json("coherence.json", &json!({ "metadata": out.metadata(), "rows": rows }))?;
        }
        Command::Fit { dataset } => {
            let path = match (dataset, &cfg.fit.dataset) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => cfg.resolve(p),
                (None, None) => return Err(Error::InvalidInput("fit needs a dataset (--dataset or fit.dataset)".into())),
            };
            let data = TransitionDataset::read_csv(File::open(&path)?)?;
            let problem = cfg.fit.problem(cfg.workers);
            problem.validate()?;
            let initial = DeviceParams {
                circuit,
                resonator: cfg.resonator.unwrap_or_else(ResonatorModel::fitted_device),
            };
            let r = fit(&problem, &data, &initial)?;
            let doc = json!({ "metadata": out.metadata(), "dataset": path, "report": r });
            report(&out.write_json("fit_report.json", &doc)?);
            println!("cost {:.6e} -> {:.6e} after {} evaluations", r.initial_cost, r.final_cost, r.evaluations);
            if !r.converged {
                return Err(Error::NonConvergence { iterations: r.evaluations, residual: r.final_cost });
            }
        }
    }
    Ok(())
}

fn wavefunction(cfg: &RunConfig, out: &Output, circuit: &rhombus::circuit::ReducedCircuit) -> Result<()> {
    let wf = &cfg.wavefunction;
    let basis = ChargeBasis::rhombus(cfg.basis.n_max)?;
    let h = assemble_rhombus(circuit, &basis, cfg.basis.gauge)?;
    let eig = eigensolve(&h, wf.levels.max(2), &cfg.basis.solver())?;
    let mut grids = Vec::new();
    for level in 0..wf.levels {
        let v = &eig.vectors[level];
        let parity = match level {
            0 => Some(Parity::Ground),
            1 => Some(Parity::Excited),
            _ => None,
        };
        let name = format!("wavefunction_charge_{level}.csv");
        let mut w = out.create(&name)?;
        out.comment_header(&mut w)?;
        writeln!(w, "n1,n2,n3,re,im,prob,delta_approx")?;
        for (i, a) in v.iter().enumerate() {
            let n = basis.charges(i);
            let delta = parity.map(|p| format!("{:.6}", delta_wavefunction(n, p))).unwrap_or_default();
            writeln!(w, "{},{},{},{:.12e},{:.12e},{:.12e},{delta}", n[0], n[1], n[2], a.re, a.im, a.norm_sqr())?;
        }
        w.flush()?;
        report(&out.dir.join(&name));

        let grid = to_phase_grid(v, &basis, wf.grid)?;
        let name = format!("wavefunction_phase_{level}.csv");
        let mut w = out.create(&name)?;
        out.comment_header(&mut w)?;
        grid.write_slice(&mut w, wf.slice_axis - 1, wf.slice_value)?;
        w.flush()?;
        report(&out.dir.join(&name));
        if wf.full_grid {
            let name = format!("wavefunction_grid_{level}.csv");
            let mut w = out.create(&name)?;
            out.comment_header(&mut w)?;
            grid.write_text(&mut w)?;
            w.flush()?;
        }
        grids.push(grid);
    }
    let overlap = if grids.len() >= 2 { Some(support_overlap(&grids[0], &grids[1])?) } else { None };
    let minima = classical_minima(circuit);
    let summary = json!({
        "metadata": out.metadata(),
        "flux_phi0": circuit.phi_ext,
        "energies_ghz": eig.energies,
        "f01_ghz": eig.f01(),
        "support_overlap_01": overlap,
        "prohibited_weight_ground": prohibited_charge_weight(&eig.vectors[0], &basis, Parity::Ground)?,
        "prohibited_weight_excited": prohibited_charge_weight(&eig.vectors[1], &basis, Parity::Excited)?,
        "classical_minima": minima,
    });
    report(&out.write_json("wavefunction_summary.json", &summary)?);
    Ok(())
}
