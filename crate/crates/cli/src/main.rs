use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use effstab::diophantine::{check_strong_diophantine, liouville_certificate, seq_1d, Resonance, Side};
use effstab::normalize::{step, Region, Split};
use effstab::pseries::{Ball, Domain, MAX_DIM};
use effstab::scan::{self, ScanConfig};
use effstab::{Error, Result};

#[derive(Parser)]
#[command(name = "effstab", version, about = "Effective stability times near spin-orbit resonances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the model Hamiltonian of a scan configuration.
    Build { config: PathBuf },
    /// Normalize around one grid point and print remainder norms and the harmonic inventory.
    Normalize {
        config: PathBuf,
        /// Grid point index.
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
    /// Print a 1D frequency sequence with its certificates as CSV.
    Sequence {
        /// Resonance "num:den".
        #[arg(long)]
        resonance: Resonance,
        /// Scale as a fraction d/w or a decimal.
        #[arg(long)]
        s: String,
        #[arg(long, value_enum, default_value = "below")]
        side: SideArg,
        #[arg(long, default_value_t = 2)]
        z_min: i64,
        #[arg(long, default_value_t = 100)]
        z_max: i64,
        #[arg(long, default_value_t = 1000)]
        k_cap: u32,
    },
    /// Run a scan and write the configured outputs.
    Scan { config: PathBuf },
    /// Integrate the original Hamiltonian from one initial condition.
    Verify {
        config: PathBuf,
        /// Initial actions, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<f64>,
        /// Initial angles; zero by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
        #[arg(long)]
        bound: f64,
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
    },
    /// Write the resonance lines of a scan configuration as CSV.
    EmitResonances {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SideArg {
    Below,
    Above,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Build { config } => {
            let cfg = ScanConfig::load(&config)?;
            let (h, r) = cfg.model.build()?;
            writeln!(out, "quadratic = {:?}", h.quadratic)?;
            writeln!(out, "linear = {:?}", h.linear)?;
            writeln!(out, "offset = {:e}", h.offset)?;
            write!(out, "{r}")?;
        }
        Cmd::Normalize { config, point } => normalize(&ScanConfig::load(&config)?, point, &mut out)?,
        Cmd::Sequence { resonance, s, side, z_min, z_max, k_cap } => {
            let (d, w) = fraction(&s)?;
            let side = match side {
                SideArg::Below => Side::Below,
                SideArg::Above => Side::Above,
            };
            let mut wr = csv::Writer::from_writer(out);
            wr.write_record(["z", "omega", "A2", "A1", "A0", "c_bound", "lattice_min", "pass"]).map_err(Error::from)?;
            for z in z_min..=z_max {
                if z == 0 {
                    continue;
                }
                let w1 = seq_1d(&resonance, d as f64 / w as f64, z, side)?[0];
                let c = liouville_certificate(&resonance, d, w, z, side)?;
                let (min, pass) = check_strong_diophantine(w1, c.c_bound, k_cap);
                wr.write_record([
                    z.to_string(),
                    format!("{w1:.16e}"),
                    c.a2.to_string(),
                    c.a1.to_string(),
                    c.a0.to_string(),
                    format!("{:.16e}", c.c_bound),
                    format!("{min:.16e}"),
                    pass.to_string(),
                ])
                .map_err(Error::from)?;
            }
            wr.flush()?;
        }
        Cmd::Scan { config } => {
            let cfg = ScanConfig::load(&config)?;
            let res = scan::run_scan(&cfg)?;
            let o = &cfg.output;
            if o.csv.is_none() && o.json.is_none() {
                scan::write_csv(&mut out, &res.records, cfg.model.n())?;
            }
            scan::write_outputs(&cfg, &res)?;
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for r in &res.records {
                *counts.entry(r.status.to_string()).or_default() += 1;
            }
            eprintln!("{} points: {counts:?}", res.records.len());
            for v in &res.verified {
                eprintln!(
                    "verified z={} deviation={:e} bound={:e} within={} drift={:e}",
                    v.z, v.result.max_deviation, v.bound, v.result.within_bound, v.result.energy_drift
                );
            }
        }
        Cmd::Verify { config, p, q, bound, horizon } => {
            let cfg = ScanConfig::load(&config)?;
            let q = if q.is_empty() { vec![0.0; p.len()] } else { q };
            let v = scan::verify_integration(&cfg.model, &p, &q, bound, horizon)?;
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
        Cmd::EmitResonances { config, out: path } => {
            let cfg = ScanConfig::load(&config)?;
            let lines = scan::resonance_lines(&cfg)?;
            match path {
                Some(p) => scan::write_lines_csv(std::fs::File::create(p)?, &lines, cfg.model.n())?,
                None => scan::write_lines_csv(&mut out, &lines, cfg.model.n())?,
            }
        }
    }
    Ok(())
}

/// "d/w" or a decimal, as a reduced fraction.
fn fraction(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Config(format!("bad scale {s:?}"));
    let (d, w) = match s.split_once('/') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
            let w = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
            (format!("{int}{frac}").parse::<i64>().map_err(|_| bad())?, w)
        }
    };
    if w == 0 || d == 0 {
        return Err(bad());
    }
    let g = gcd(d.abs(), w.abs());
    Ok((d / g, w / g))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn normalize(cfg: &ScanConfig, point: usize, out: &mut impl Write) -> Result<()> {
    let points = cfg.grid.points()?;
    let pt = points
        .get(point)
        .ok_or_else(|| Error::Config(format!("grid has {} points", points.len())))?;
    let (h, r) = cfg.model.build()?;
    let mut split = Split::new(h, r);
    let mut center = [0.0; MAX_DIM];
    for j in 0..split.h.n() {
        if split.h.quadratic[j] != 0.0 {
            center[j] = (pt.omega[j] - split.h.linear[j]) / split.h.quadratic[j];
        }
    }
    let mut region = Region::new(vec![Ball { center, radius: cfg.ball_radius }]);
    let c = cfg.normalize_controls();
    writeln!(out, "# point z={} omega={:?}", pt.z, pt.omega)?;
    writeln!(out, "step,terms,harmonics,max_order,norm,ball_radius,fate")?;
    let report = |s: &Split, region: &Region, out: &mut dyn Write| -> Result<()> {
        let norm = s.r.ball_norms(&region.active())?.first().copied().unwrap_or(f64::NAN);
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:?}",
            s.step,
            s.r.term_count(),
            s.r.len(),
            s.r.max_order(),
            norm,
            region.balls[0].radius,
            region.fate[0]
        )?;
        Ok(())
    };
    report(&split, &region, out)?;
    for _ in 0..cfg.j {
        let (next, _, _) = step(&split, &c, &mut region)?;
        split = next;
        report(&split, &region, out)?;
    }
    let dom = Domain { balls: region.balls.clone() };
    writeln!(out, "# harmonics of the last remainder")?;
    writeln!(out, "k,sup")?;
    for k in split.r.entries().keys() {
        let one = split.r.filter(|q| q == k);
        writeln!(out, "{:?},{:e}", &k[..split.h.n()], one.sup_bound(&dom)?)?;
    }
    Ok(())
}
