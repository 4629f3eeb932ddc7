use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use griffiths_core::algebra::{ExactPoly, Mode};
use griffiths_core::chernoff::{chernoff_table, normalization_constant, KernelSpec, DEFAULT_NODES};
use griffiths_core::gaussian::{check_gaussian_griffiths, gaussian_moment, trotter_compare, FerroMatrix};
use griffiths_core::griffiths::{check_second, write_counterexample, GriffithsReport, Verdict};
use griffiths_core::heat::{cone_warnings, correlation_flow, dirichlet, heat_evolve, uniform_grid, FLOW_SLACK};
use griffiths_core::io::{couplings_from_json, float_poly_to_value, matrix_from_json, poly_from_json, poly_to_value};
use griffiths_core::mc::{estimate_gaussian, estimate_sphere, MCEstimate};
use griffiths_core::moments::{interacting_moment, Couplings, SphereMoments, DEFAULT_ORDER};
use griffiths_core::rational::{format_rational, to_decimal, to_f64};
use griffiths_core::suite::{run_suite, Scale, SuiteConfig};
use griffiths_core::Error;

#[derive(Parser)]
#[command(
    name = "griffiths",
    version,
    about = "Exact and numerical checks of Griffiths inequalities for O(n) rotors and Gaussian spins"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact expectation of a sphere polynomial, optionally under couplings
    Moment {
        #[arg(long)]
        input: PathBuf,
        /// Couplings file; reports the truncated interacting expectation
        #[arg(long = "J")]
        couplings: Option<PathBuf>,
        /// Taylor order for the interacting expectation
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Second inequality E[fg] >= E[f] E[g] for two cone polynomials
    Griffiths {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Where a violating pair is written
        #[arg(long, default_value = "counterexample.json")]
        counterexample: PathBuf,
    },
    /// Heat semigroup e^{tL} applied to a polynomial
    Evolve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: f64,
        /// Report negative coefficients of the evolved polynomial
        #[arg(long)]
        check_cone: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Dirichlet form E[grad f . grad h]
    Dirichlet {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Correlation flow h(t) = E[f e^{tL} g] over a time grid
    Flow {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        /// `start:step:stop` or a comma-separated list
        #[arg(long)]
        t_grid: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value = "counterexample.json")]
        counterexample: PathBuf,
    },
    /// Chernoff powers of the heat-kernel approximant on one harmonic
    Chernoff {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128,256")]
        m: Vec<u32>,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Kernel normalization constant against its small-t asymptote
    Normalization {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1e-1,1e-2,1e-3")]
        t_grid: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Gaussian ferromagnet checks
    Gaussian {
        #[command(subcommand)]
        action: GaussianAction,
    },
    /// Monte Carlo estimate next to the exact value
    Mc {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Couplings file (sphere mode)
        #[arg(long = "J")]
        couplings: Option<PathBuf>,
        /// Ferromagnetic matrix file (gaussian mode)
        #[arg(long = "F")]
        ferro: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: u32,
    },
    /// Run the acceptance bundle: `quick` or `full`
    Suite {
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum GaussianAction {
    /// Exact Isserlis moment
    Moment {
        #[arg(long = "F")]
        ferro: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Second inequality under the Gaussian measure
    Griffiths {
        #[arg(long = "F")]
        ferro: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value = "counterexample.json")]
        counterexample: PathBuf,
    },
    /// Trotter splitting error against the exact semigroup
    Trotter {
        #[arg(long = "F")]
        ferro: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128,256")]
        m: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

enum Failure {
    Core(Error),
    Read(PathBuf, std::io::Error),
    Write(PathBuf, std::io::Error),
    /// A checked property failed; the message says what and where the evidence went.
    Violated(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Violated(_) => 1,
            Failure::Core(Error::Input(_)) | Failure::Read(..) => 2,
            Failure::Core(_) | Failure::Write(..) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Read(p, e) => format!("input error: cannot read {}: {e}", p.display()),
            Failure::Write(p, e) => format!("cannot write {}: {e}", p.display()),
            Failure::Violated(m) => m.clone(),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Read(path.to_path_buf(), e))
}

fn load_poly(path: &Path) -> std::result::Result<ExactPoly, Failure> {
    poly_from_json(&read(path)?).map_err(|e| Failure::Core(Error::Input(format!("{}: {}", path.display(), inner(&e)))))
}

fn load_ferro(path: &Path) -> std::result::Result<FerroMatrix, Failure> {
    let m = matrix_from_json(&read(path)?)?;
    Ok(FerroMatrix::new(m)?)
}

fn load_couplings(path: &Path, sites: usize) -> std::result::Result<Couplings, Failure> {
    let (declared, c) = couplings_from_json(&read(path)?)?;
    if declared != sites {
        return Err(Error::Input(format!("couplings declare N={declared} but the polynomial has N={sites}")).into());
    }
    Ok(c)
}

fn inner(e: &Error) -> String {
    match e {
        Error::Input(m) | Error::Resource(m) | Error::Numeric(m) => m.clone(),
    }
}

fn require_mode(p: &ExactPoly, mode: Mode, hint: &str) -> std::result::Result<(), Failure> {
    if p.mode() != mode {
        return Err(Error::Input(format!("expected a {mode}-mode polynomial; {hint}")).into());
    }
    Ok(())
}

fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, Failure> {
    let number =
        |s: &str| s.trim().parse::<f64>().map_err(|_| Failure::Core(Error::Input(format!("bad number '{s}' in grid"))));
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => uniform_grid(number(start)?, number(step)?, number(stop)?)?,
        [_] => text.split(',').map(number).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err(Error::Input(format!("grid '{text}' is neither start:step:stop nor a list")).into()),
    };
    if grid.is_empty() {
        return Err(Error::Input("empty grid".into()).into());
    }
    Ok(grid)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json")
}

fn exact_line(r: &num_rational::BigRational) -> String {
    format!("{} ({})", format_rational(r), to_decimal(r, 15))
}

fn render_report(report: &GriffithsReport, format: Format) -> String {
    match format {
        Format::Json => pretty(&report.to_json()),
        _ => report.to_string(),
    }
}

fn finish_griffiths(f: &ExactPoly, g: &ExactPoly, report: GriffithsReport, format: Format, out: &Path) -> Outcome {
    let text = render_report(&report, format);
    if report.verdict == Verdict::Violated {
        write_counterexample(out, f, g, &report).map_err(|e| Failure::Write(out.to_path_buf(), e))?;
        return Err(Failure::Violated(format!("{text}\ncounterexample written to {}", out.display())));
    }
    Ok(text)
}

fn moment(input: &Path, couplings: Option<&Path>, order: u32, format: Format) -> Outcome {
    let p = load_poly(input)?;
    let couplings = couplings.map(|c| load_couplings(c, p.dims().sites)).transpose()?;
    require_mode(&p, Mode::Sphere, "use `gaussian moment` for gaussian polynomials")?;
    let mut engine = SphereMoments::new(p.dims().n);
    let Some(c) = couplings else {
        let value = engine.moment(&p)?;
        return Ok(match format {
            Format::Json => pretty(&json!({"exact": format_rational(&value), "decimal": to_decimal(&value, 15)})),
            _ => exact_line(&value),
        });
    };
    let r = interacting_moment(&mut engine, &p, &c, order)?;
    Ok(match format {
        Format::Json => pretty(&json!({
            "order": r.order,
            "numerator": format_rational(&r.numerator),
            "partition": format_rational(&r.partition),
            "ratio": format_rational(&r.ratio),
            "ratio_decimal": to_decimal(&r.ratio, 15),
            "gap": r.gap,
            "lower_bound": r.lower_bound(),
        })),
        _ => format!(
            "order {}\nratio       = {}\ngap        <= {:e}\nlower bound = {}",
            r.order,
            exact_line(&r.ratio),
            r.gap,
            r.lower_bound()
        ),
    })
}

fn griffiths(f: &Path, g: &Path, format: Format, out: &Path) -> Outcome {
    let (fp, gp) = (load_poly(f)?, load_poly(g)?);
    require_mode(&fp, Mode::Sphere, "use `gaussian griffiths` for gaussian polynomials")?;
    let report = check_second(&mut SphereMoments::new(fp.dims().n), &fp, &gp)?;
    finish_griffiths(&fp, &gp, report, format, out)
}

fn evolve(input: &Path, t: f64, check_cone: bool, format: Format) -> Outcome {
    let p = load_poly(input)?;
    let evolved = heat_evolve(&p, t)?;
    let warnings = if check_cone { cone_warnings(&evolved, FLOW_SLACK) } else { Vec::new() };
    // With N <= n the formal coefficients are unique, so a negative one is a real failure.
    let binding = p.dims().sites <= p.dims().n;
    let text = match format {
        Format::Json => pretty(&json!({
            "t": t,
            "polynomial": float_poly_to_value(&evolved),
            "cone_warnings": warnings.iter().map(|w| json!({"monomial": w.monomial.to_string(), "coeff": w.coeff})).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = evolved.to_string();
            for w in &warnings {
                let _ = write!(s, "\nwarning: coefficient {:e} on {}", w.coeff, w.monomial);
            }
            s
        }
    };
    if binding && !warnings.is_empty() {
        return Err(Failure::Violated(format!("{text}\ncone not preserved")));
    }
    Ok(text)
}

fn dirichlet_cmd(f: &Path, h: &Path, format: Format) -> Outcome {
    let (fp, hp) = (load_poly(f)?, load_poly(h)?);
    require_mode(&fp, Mode::Sphere, "the Dirichlet form is defined for sphere polynomials")?;
    let value = dirichlet(&mut SphereMoments::new(fp.dims().n), &fp, &hp)?;
    Ok(match format {
        Format::Json => pretty(&json!({"dirichlet": format_rational(&value), "decimal": to_decimal(&value, 15)})),
        _ => exact_line(&value),
    })
}

fn flow(f: &Path, g: &Path, grid: &str, format: Format, out: &Path) -> Outcome {
    let (fp, gp) = (load_poly(f)?, load_poly(g)?);
    let grid = parse_grid(grid)?;
    require_mode(&fp, Mode::Sphere, "the heat flow is defined for sphere polynomials")?;
    let report = correlation_flow(&mut SphereMoments::new(fp.dims().n), &fp, &gp, &grid)?;
    let text = match format {
        Format::Json => pretty(&json!({
            "points": report.points.iter().map(|p| json!({"t": p.t, "h": p.h, "monotone_ok": p.monotone_ok})).collect::<Vec<_>>(),
            "monotone": report.monotone,
            "limit": format_rational(&report.limit),
            "limit_gap": report.limit_gap,
        })),
        _ => {
            let mut s = String::from("t,h,monotone_ok");
            for p in &report.points {
                let _ = write!(s, "\n{},{:.17e},{}", p.t, p.h, p.monotone_ok);
            }
            s
        }
    };
    if !report.monotone {
        let doc = json!({"f": poly_to_value(&fp), "g": poly_to_value(&gp), "grid": grid, "h": report.points.iter().map(|p| p.h).collect::<Vec<_>>()});
        std::fs::write(out, pretty(&doc)).map_err(|e| Failure::Write(out.to_path_buf(), e))?;
        return Err(Failure::Violated(format!("{text}\nflow increased; counterexample written to {}", out.display())));
    }
    Ok(text)
}

fn chernoff(n: usize, l: usize, t: f64, ms: &[u32], nodes: usize, format: Format) -> Outcome {
    let table = chernoff_table(&KernelSpec::new(n, t, nodes)?, l, ms)?;
    Ok(match format {
        Format::Json => pretty(&json!(table
            .iter()
            .map(|p| json!({"m": p.m, "approx": p.approx, "reference": p.reference, "error": p.error}))
            .collect::<Vec<_>>())),
        _ => {
            let mut s = String::from("m,approx,reference,error");
            for p in &table {
                let _ = write!(s, "\n{},{:.17e},{:.17e},{:.6e}", p.m, p.approx, p.reference, p.error);
            }
            s
        }
    })
}

fn normalization(n: usize, grid: &str, nodes: usize, format: Format) -> Outcome {
    let grid = parse_grid(grid)?;
    let rows = grid
        .iter()
        .map(|&t| normalization_constant(&KernelSpec::new(n, t, nodes)?))
        .collect::<griffiths_core::Result<Vec<_>>>()?;
    Ok(match format {
        Format::Json => pretty(&json!(rows
            .iter()
            .map(|r| json!({"t": r.t, "c": r.c, "ratio_minus_one": r.ratio_minus_one()}))
            .collect::<Vec<_>>())),
        _ => {
            let mut s = String::from("t,c,ratio_minus_one");
            for r in &rows {
                let _ = write!(s, "\n{},{:.17e},{:.6e}", r.t, r.c, r.ratio_minus_one());
            }
            s
        }
    })
}

fn gaussian(action: &GaussianAction) -> Outcome {
    match action {
        GaussianAction::Moment { ferro, input, format } => {
            let (f, p) = (load_ferro(ferro)?, load_poly(input)?);
            require_mode(&p, Mode::Gaussian, "use `moment` for sphere polynomials")?;
            let value = gaussian_moment(&p, &f)?;
            Ok(match format {
                Format::Json => pretty(&json!({"exact": format_rational(&value), "decimal": to_decimal(&value, 15)})),
                _ => exact_line(&value),
            })
        }
        GaussianAction::Griffiths { ferro, f, g, format, counterexample } => {
            let (m, fp, gp) = (load_ferro(ferro)?, load_poly(f)?, load_poly(g)?);
            require_mode(&fp, Mode::Gaussian, "use `griffiths` for sphere polynomials")?;
            let report = check_gaussian_griffiths(&fp, &gp, &m)?;
            finish_griffiths(&fp, &gp, report, *format, counterexample)
        }
        GaussianAction::Trotter { ferro, input, t, m, format } => {
            let (f, p) = (load_ferro(ferro)?, load_poly(input)?);
            require_mode(&p, Mode::Gaussian, "Trotter splitting is defined for gaussian polynomials")?;
            let report = trotter_compare(&p, &f, *t, m)?;
            let cone_ok = report.rows.iter().all(|r| r.cone_preserved());
            let text = match format {
                Format::Json => pretty(&json!({
                    "t": report.t,
                    "basis_size": report.basis_size,
                    "rows": report.rows.iter().map(|r| json!({
                        "m": r.m, "error": r.error, "min_factor_entry": r.min_factor_entry, "min_iterate_coeff": r.min_iterate_coeff,
                    })).collect::<Vec<_>>(),
                    "equilibrium": {
                        "t": report.equilibrium.t,
                        "expected": format_rational(&report.equilibrium.expected),
                        "deviation": report.equilibrium.deviation,
                    },
                })),
                _ => {
                    let mut s = String::from("m,error,min_factor_entry,min_iterate_coeff");
                    for r in &report.rows {
                        let _ = write!(
                            s,
                            "\n{},{:.6e},{:.6e},{:.6e}",
                            r.m, r.error, r.min_factor_entry, r.min_iterate_coeff
                        );
                    }
                    s
                }
            };
            if !cone_ok {
                return Err(Failure::Violated(format!("{text}\na Trotter factor left the cone")));
            }
            Ok(text)
        }
    }
}

fn mc(input: &Path, samples: u64, seed: u64, couplings: Option<&Path>, ferro: Option<&Path>, order: u32) -> Outcome {
    let p = load_poly(input)?;
    let couplings = couplings.map(|c| load_couplings(c, p.dims().sites)).transpose()?;
    let ferro = ferro.map(load_ferro).transpose()?;
    let (est, exact, gap): (MCEstimate, f64, f64) = match (p.mode(), ferro) {
        (Mode::Sphere, None) => {
            let mut engine = SphereMoments::new(p.dims().n);
            match &couplings {
                Some(c) => {
                    let r = interacting_moment(&mut engine, &p, c, order)?;
                    (estimate_sphere(&p, samples, seed, Some(c))?, to_f64(&r.ratio), r.gap)
                }
                None => (estimate_sphere(&p, samples, seed, None)?, to_f64(&engine.moment(&p)?), 0.0),
            }
        }
        (Mode::Gaussian, Some(f)) => {
            if couplings.is_some() {
                return Err(Error::Input("--J applies to sphere polynomials only".into()).into());
            }
            (estimate_gaussian(&p, &f, samples, seed)?, to_f64(&gaussian_moment(&p, &f)?), 0.0)
        }
        (Mode::Sphere, Some(_)) => return Err(Error::Input("--F applies to gaussian polynomials only".into()).into()),
        (Mode::Gaussian, None) => return Err(Error::Input("gaussian polynomials need --F".into()).into()),
    };
    let mut doc = json!({
        "mean": est.mean,
        "stderr": est.stderr,
        "exact": exact,
        "sigmas": est.sigmas(exact),
        "samples": est.samples,
        "seed": est.seed,
    });
    if couplings.is_some() {
        doc["truncation_gap"] = json!(gap);
    }
    Ok(pretty(&doc))
}

fn suite(name: &str, seed: u64, format: Format) -> Outcome {
    let scale: Scale = name.parse()?;
    let results = run_suite(&SuiteConfig { scale, seed })?;
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let text = match format {
        Format::Json => pretty(&json!({"scale": scale, "seed": seed, "criteria": results, "failed": failed})),
        _ => {
            let mut s = String::new();
            for r in &results {
                let _ = writeln!(s, "{r}");
            }
            let _ = write!(s, "{} of {} passed", results.len() - failed.len(), results.len());
            s
        }
    };
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(Failure::Violated(format!("{text}\nfailed: {failed:?}")))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Moment { input, couplings, order, format } => moment(&input, couplings.as_deref(), order, format),
        Command::Griffiths { f, g, format, counterexample } => griffiths(&f, &g, format, &counterexample),
        Command::Evolve { input, t, check_cone, format } => evolve(&input, t, check_cone, format),
        Command::Dirichlet { f, h, format } => dirichlet_cmd(&f, &h, format),
        Command::Flow { f, g, t_grid, format, counterexample } => flow(&f, &g, &t_grid, format, &counterexample),
        Command::Chernoff { n, l, t, m, nodes, format } => chernoff(n, l, t, &m, nodes, format),
        Command::Normalization { n, t_grid, nodes, format } => normalization(n, &t_grid, nodes, format),
        Command::Gaussian { action } => gaussian(&action),
        Command::Mc { input, samples, seed, couplings, ferro, order } => {
            mc(&input, samples, seed, couplings.as_deref(), ferro.as_deref(), order)
        }
        Command::Suite { name, seed, format } => suite(&name, seed, format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            match &failure {
                Failure::Violated(text) => println!("{text}"),
                other => eprintln!("error: {}", other.message()),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
