use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use m0n_core::combinat::{enumerate_strata, Permutation};
use m0n_core::keel::{Basis, Limits, RelationSpace, DEFAULT_MAX_STRATA};
use m0n_core::pullback::{is_supported, DynamicsContext, PullbackMatrix};
use m0n_core::spectral::spectral_radius;
use m0n_core::verify::{sweep, verify_table, ContextPool, Scope, TableId, TableReport};
use serde_json::json;

/// Exact cohomology pullbacks and dynamical degrees on M_{0,n}.
///
/// Every flag can also be set through an environment variable with the
/// prefix `M0N_` (for example `M0N_FORMAT=json`); flags take precedence.
#[derive(Parser, Debug)]
#[command(name = "m0n", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text, env = "M0N_FORMAT")]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true, env = "M0N_OUT")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and table checks (0 picks the core count).
    #[arg(long, global = true, default_value_t = 0, env = "M0N_JOBS")]
    jobs: usize,

    /// Directory holding cached relation spaces.
    #[arg(long, global = true, env = "M0N_CACHE")]
    cache: Option<PathBuf>,

    /// Ceiling on echelon storage, in megabytes.
    #[arg(long = "mem-limit", global = true, env = "M0N_MEM_LIMIT")]
    mem_limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MapKind {
    G,
    S,
    F,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dimension of H^{k,k} and the number of codimension-k strata.
    Dims {
        #[arg(long, env = "M0N_N")]
        n: usize,
        #[arg(long, default_value_t = 1, env = "M0N_K")]
        k: usize,
    },
    /// The ordered basis used for pullback matrices.
    Basis {
        #[arg(long, env = "M0N_N")]
        n: usize,
        #[arg(long, default_value_t = 1, env = "M0N_K")]
        k: usize,
    },
    /// Matrix of g_rho^*, s^* or f_rho^* in basis coordinates.
    Pullback {
        #[arg(long, env = "M0N_N")]
        n: usize,
        #[arg(long, default_value_t = 1, env = "M0N_K")]
        k: usize,
        /// Disjoint cycles, e.g. "(1 3)(2 4 5)"; empty for the identity.
        #[arg(long, default_value = "", env = "M0N_PERM")]
        perm: String,
        #[arg(long, value_enum, default_value_t = MapKind::F)]
        map: MapKind,
    },
    /// Characteristic polynomial of f_rho^* and its spectral radius.
    Dyndeg {
        #[arg(long, env = "M0N_N")]
        n: usize,
        #[arg(long, default_value_t = 1, env = "M0N_K")]
        k: usize,
        #[arg(long, default_value = "", env = "M0N_PERM")]
        perm: String,
    },
    /// Degrees of every map in scope, grouped by characteristic polynomial.
    Sweep {
        #[arg(long, env = "M0N_N")]
        n: usize,
        #[arg(long, default_value_t = 1, env = "M0N_K")]
        k: usize,
        #[arg(long, default_value = "all", env = "M0N_SCOPE")]
        scope: String,
        /// Allow the full 40320-map sweep at n = 8.
        #[arg(long)]
        full: bool,
        /// Include one line per permutation in the output.
        #[arg(long)]
        entries: bool,
    },
    /// Recompute tabulated rows and check them.
    Verify {
        /// T1, T_N3, T_N4, T_N5 or all.
        #[arg(long, default_value = "all", env = "M0N_TABLE")]
        table: String,
    },
}

impl Global {
    fn limits(&self) -> Limits {
        Limits {
            max_strata: DEFAULT_MAX_STRATA,
            mem_limit_bytes: self.mem_limit.map(|mb| mb << 20),
        }
    }

    fn pool(&self) -> ContextPool {
        ContextPool::new(self.limits(), self.cache.clone())
    }

    fn context(&self, n: usize, k: usize) -> Result<DynamicsContext> {
        Ok(DynamicsContext::with_options(n, k, &self.limits(), self.cache.as_deref())?)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
            None => {
                let mut out = std::io::stdout().lock();
                let written = out.write_all(text.as_bytes()).and_then(|_| {
                    if text.ends_with('\n') {
                        Ok(())
                    } else {
                        out.write_all(b"\n")
                    }
                });
                // a closed pipe (e.g. `| head`) is not an error
                match written {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn parse_perm(n: usize, text: &str) -> Result<Permutation> {
    Permutation::parse_cycles(n, text).with_context(|| format!("permutation {text:?}"))
}

fn check_dynamics(n: usize, k: usize) -> Result<()> {
    if !is_supported(n, k) {
        return Err(m0n_core::Error::UnsupportedDegree { n, k }.into());
    }
    Ok(())
}

fn cmd_dims(g: &Global, n: usize, k: usize) -> Result<bool> {
    if !(1..=2).contains(&k) || (k == 2 && n < 5) {
        return Err(m0n_core::Error::UnsupportedDegree { n, k }.into());
    }
    let rel = RelationSpace::load_or_build(n, k, &g.limits(), g.cache.as_deref())?;
    let strata = enumerate_strata(n, k).len();
    let dim = rel.corank();
    let mut notes = Vec::new();
    if n == 5 {
        notes.push(
            "note: the tabulated strata counts for n = 5 (5 in codimension 1, 1 in codimension 2) \
             disagree with the enumeration (10 divisors, 15 points); that row repeats the cohomology dimensions"
                .to_string(),
        );
    }
    let text = match g.format {
        Format::Text => {
            let mut s = format!("n={n} k={k} dim={dim} strata={strata}\n");
            for note in &notes {
                s.push_str(note);
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&json!({
            "n": n, "k": k, "dim": dim, "strata": strata, "notes": notes,
        }))?,
        Format::Csv => format!("n,k,dim,strata\n{n},{k},{dim},{strata}\n"),
    };
    g.emit(&text)?;
    Ok(true)
}

fn cmd_basis(g: &Global, n: usize, k: usize) -> Result<bool> {
    let basis = if is_supported(n, k) {
        g.context(n, k)?.basis().clone()
    } else if k == 1 && n >= 4 {
        Basis::b1(n)?
    } else if k == 2 && n >= 5 {
        RelationSpace::load_or_build(n, k, &g.limits(), g.cache.as_deref())?.standard_basis()
    } else {
        return Err(m0n_core::Error::UnsupportedDegree { n, k }.into());
    };
    let text = match g.format {
        Format::Text => {
            let mut s = format!("basis {:?} n={n} k={k} size={}\n", basis.tag(), basis.len());
            for (i, z) in basis.elements().iter().enumerate() {
                s.push_str(&format!("{:>4} {z}\n", i + 1));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&json!({
            "n": n, "k": k, "tag": basis.tag(),
            "elements": basis.elements().iter().map(|z| z.descriptor()).collect::<Vec<_>>(),
        }))?,
        Format::Csv => {
            let mut s = String::from("index,stratum\n");
            for (i, z) in basis.elements().iter().enumerate() {
                s.push_str(&format!("{},\"{z}\"\n", i + 1));
            }
            s
        }
    };
    g.emit(&text)?;
    Ok(true)
}

fn matrix_text(m: &PullbackMatrix, sep: &str) -> String {
    let mut s = String::new();
    for i in 0..m.dim() {
        let row: Vec<String> = m.entries.row(i).iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(sep));
        s.push('\n');
    }
    s
}

fn cmd_pullback(g: &Global, n: usize, k: usize, perm: &str, map: MapKind) -> Result<bool> {
    check_dynamics(n, k)?;
    let rho = parse_perm(n, perm)?;
    let ctx = g.context(n, k)?;
    let m = match map {
        MapKind::G => ctx.g_pullback(&rho)?,
        MapKind::S => ctx.s_pullback(),
        MapKind::F => ctx.f_pullback(&rho)?,
    };
    let text = match g.format {
        Format::Text => format!(
            "{:?} n={n} k={k} perm={rho} dim={}\n{}",
            m.provenance,
            m.dim(),
            matrix_text(&m, " ")
        ),
        Format::Json => serde_json::to_string_pretty(&ctx.dump(&m))?,
        Format::Csv => matrix_text(&m, ","),
    };
    g.emit(&text)?;
    Ok(true)
}

fn cmd_dyndeg(g: &Global, n: usize, k: usize, perm: &str) -> Result<bool> {
    check_dynamics(n, k)?;
    let rho = parse_perm(n, perm)?;
    let ctx = g.context(n, k)?;
    let f = ctx.f_pullback(&rho)?;
    let res = spectral_radius(&f.entries)?;
    let text = match g.format {
        Format::Text => format!(
            "n={n} k={k} perm={rho}\nchar poly: {}\ncoefficients: {}\nspectral radius: {:.8}\n",
            res.poly.pretty(),
            res.poly,
            res.spectral_radius
        ),
        Format::Json => serde_json::to_string_pretty(&json!({
            "n": n, "k": k, "perm": rho.to_string(),
            "char_poly": res.char_poly,
            "spectral_radius": res.spectral_radius,
        }))?,
        Format::Csv => format!(
            "n,k,perm,spectral_radius,char_poly\n{n},{k},\"{rho}\",{:.8},\"{}\"\n",
            res.spectral_radius, res.poly
        ),
    };
    g.emit(&text)?;
    Ok(true)
}

fn cmd_sweep(g: &Global, n: usize, k: usize, scope: &str, full: bool, entries: bool) -> Result<bool> {
    let scope: Scope = scope.parse()?;
    let pool = g.pool();
    let report = sweep(n, k, scope, full, &pool)?;
    let text = match g.format {
        Format::Text => {
            let mut s = report.to_text();
            if entries {
                for e in &report.entries {
                    s.push_str(&format!("{:<24} {:.9}\n", e.cycles, e.spectral_radius));
                }
            }
            s
        }
        Format::Json => {
            let mut v = serde_json::to_value(&report)?;
            if !entries {
                v.as_object_mut().unwrap().remove("entries");
            }
            serde_json::to_string_pretty(&v)?
        }
        Format::Csv => {
            let mut s = String::from("cycles,spectral_radius,match,char_poly\n");
            for e in &report.entries {
                let m = match &e.matched {
                    m0n_core::verify::Match::Trivial => "trivial".to_string(),
                    m0n_core::verify::Match::Matched(key) => key.clone(),
                    m0n_core::verify::Match::Unmatched => "unmatched".to_string(),
                };
                s.push_str(&format!(
                    "\"{}\",{:.9},{m},\"{}\"\n",
                    e.cycles,
                    e.spectral_radius,
                    e.char_poly.join(",")
                ));
            }
            s
        }
    };
    g.emit(&text)?;
    match report.check() {
        Ok(()) => Ok(true),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(false)
        }
    }
}

fn cmd_verify(g: &Global, table: &str) -> Result<bool> {
    let ids: Vec<TableId> = if table.eq_ignore_ascii_case("all") {
        TableId::ALL.to_vec()
    } else {
        vec![table.parse()?]
    };
    let pool = g.pool();
    let reports: Vec<TableReport> = ids
        .into_iter()
        .map(|t| verify_table(t, &pool))
        .collect::<m0n_core::Result<_>>()?;
    let ok = reports.iter().all(|r| r.all_pass());
    let text = match g.format {
        Format::Text => reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n"),
        Format::Json => serde_json::to_string_pretty(&reports)?,
        Format::Csv => {
            let mut s = String::from("table,key,cycles,k,listed,computed,error,certificate,pass\n");
            for r in &reports {
                for row in &r.rows {
                    s.push_str(&format!(
                        "{},{},\"{}\",{},{},{:.9},{:.3e},{:?},{}\n",
                        r.table,
                        row.key,
                        row.cycles,
                        row.k,
                        row.approx,
                        row.spectral_radius,
                        row.radius_error,
                        row.certificate,
                        row.pass
                    ));
                }
            }
            s
        }
    };
    g.emit(&text)?;
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    if cli.global.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Dims { n, k } => cmd_dims(g, *n, *k),
        Command::Basis { n, k } => cmd_basis(g, *n, *k),
        Command::Pullback { n, k, perm, map } => cmd_pullback(g, *n, *k, perm, *map),
        Command::Dyndeg { n, k, perm } => cmd_dyndeg(g, *n, *k, perm),
        Command::Sweep {
            n,
            k,
            scope,
            full,
            entries,
        } => cmd_sweep(g, *n, *k, scope, *full, *entries),
        Command::Verify { table } => {
            if table.is_empty() {
                bail!("empty table name");
            }
            cmd_verify(g, table)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
