//! Command-line front end.
//!
//! Exit codes: 0 success, 1 diagnostics with errors, 2 usage error,
//! 3 solver or boundedness error. Output files are written only on success,
//! each through a temporary file renamed into place.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::aadl::{validate_architecture, ArchitectureModel};
use crate::analysis::{
    analyze, Analysis, AnalysisError, AnalysisOptions, Mttf, DEFAULT_BOUND, DEFAULT_TOLERANCE,
};
use crate::dependency::unmatched_out_propagations;
use crate::diagnostic::{has_errors, sort_by_position, Diagnostic};
use crate::emit::{emit_dot, emit_generic_xml, emit_pnml};
use crate::format_real;
use crate::parser::parse_model;
use crate::transform::{lone_fixed_occurrences, transform, TransformError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "adapt-kit",
    version,
    about = "Architecture error models to GSPNs and dependability measures"
)]
struct Cli {
    /// Print only errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a model, then lint its propagations.
    Check { model: PathBuf },
    /// Transform a model into a GSPN and write it out.
    Transform {
        model: PathBuf,
        #[arg(long)]
        pnml: PathBuf,
        #[arg(long)]
        xml: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Compute availability, reliability and MTTF.
    Analyze {
        model: PathBuf,
        /// Comma-separated reliability times in hours.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

struct Console<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    quiet: bool,
}

impl Console<'_> {
    fn diagnostics(&mut self, diags: &[Diagnostic]) {
        for d in diags {
            if d.is_error() || !self.quiet {
                let _ = writeln!(self.err, "{d}");
            }
        }
    }

    fn error(&mut self, message: impl std::fmt::Display) {
        let _ = writeln!(self.err, "error: {message}");
    }

    fn info(&mut self, text: &str) {
        if !self.quiet {
            let _ = self.out.write_all(text.as_bytes());
        }
    }
}

/// Run the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut console = Console {
        out: stdout,
        err: stderr,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Check { model } => check(&mut console, &model),
        Command::Transform {
            model,
            pnml,
            xml,
            dot,
        } => transform_cmd(&mut console, &model, &pnml, xml.as_deref(), dot.as_deref()),
        Command::Analyze {
            model,
            times,
            tol,
            bound,
            report,
        } => {
            let times = times.unwrap_or_else(|| crate::analysis::DEFAULT_TIMES.to_vec());
            if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                console.error(format!(
                    "invalid value '{t}' for '--times': times must be finite and non-negative"
                ));
                return EXIT_USAGE;
            }
            if !(tol.is_finite() && tol > 0.0) {
                console.error(format!(
                    "invalid value '{tol}' for '--tol': must be positive"
                ));
                return EXIT_USAGE;
            }
            if bound == 0 {
                console.error("invalid value '0' for '--bound': must be at least 1");
                return EXIT_USAGE;
            }
            let options = AnalysisOptions { times, tol, bound };
            analyze_cmd(&mut console, &model, &options, report.as_deref())
        }
    }
}

/// Validation diagnostics plus propagation lints, sorted by position.
pub fn diagnose(model: &ArchitectureModel) -> Vec<Diagnostic> {
    let mut diags = validate_architecture(model);
    if has_errors(&diags) {
        sort_by_position(&mut diags);
        return diags;
    }
    for (owner, prop) in unmatched_out_propagations(model) {
        diags.push(Diagnostic::warning(
            format!("unmatched propagation: out propagation {prop} of {owner} reaches no receiver"),
            model.component(&owner).map(|c| c.span.clone()),
        ));
    }
    diags.extend(lone_fixed_occurrences(model));
    if let Ok(t) = transform(model) {
        diags.extend(t.warnings);
    }
    sort_by_position(&mut diags);
    diags
}

/// Parse and validate, printing diagnostics. `Err` carries the exit code.
fn load(
    console: &mut Console<'_>,
    path: &Path,
) -> Result<(ArchitectureModel, Vec<Diagnostic>), i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            console.error(format!("cannot read {}: {e}", path.display()));
            return Err(EXIT_DIAGNOSTICS);
        }
    };
    let model = match parse_model(&text, &path.display().to_string()) {
        Ok(m) => m,
        Err(mut diags) => {
            sort_by_position(&mut diags);
            console.diagnostics(&diags);
            return Err(EXIT_DIAGNOSTICS);
        }
    };
    let diags = diagnose(&model);
    console.diagnostics(&diags);
    if has_errors(&diags) {
        return Err(EXIT_DIAGNOSTICS);
    }
    Ok((model, diags))
}

fn check(console: &mut Console<'_>, path: &Path) -> i32 {
    match load(console, path) {
        Ok((_, diags)) => {
            console.info(&format!(
                "{}: ok ({} warning{})\n",
                path.display(),
                diags.len(),
                if diags.len() == 1 { "" } else { "s" }
            ));
            EXIT_OK
        }
        Err(code) => code,
    }
}

/// Write every `(path, contents)` pair atomically, or none if preparing any
/// temporary file fails.
fn write_outputs(outputs: &[(&Path, String)]) -> std::io::Result<()> {
    let mut staged = Vec::new();
    for (path, contents) in outputs {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.flush()?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| e.error)?;
    }
    Ok(())
}

fn transform_error_code(e: &TransformError) -> i32 {
    match e {
        TransformError::NothingToTransform | TransformError::Resolve(_) => EXIT_DIAGNOSTICS,
    }
}

fn transform_cmd(
    console: &mut Console<'_>,
    path: &Path,
    pnml: &Path,
    xml: Option<&Path>,
    dot: Option<&Path>,
) -> i32 {
    let (model, _) = match load(console, path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let t = match transform(&model) {
        Ok(t) => t,
        Err(e) => {
            console.error(&e);
            return transform_error_code(&e);
        }
    };
    let mut outputs = Vec::new();
    match emit_pnml(&t.net) {
        Ok(s) => outputs.push((pnml, s)),
        Err(e) => {
            console.error(e);
            return EXIT_SOLVER;
        }
    }
    if let Some(x) = xml {
        match emit_generic_xml(&t.net, &t.trace) {
            Ok(s) => outputs.push((x, s)),
            Err(e) => {
                console.error(e);
                return EXIT_SOLVER;
            }
        }
    }
    if let Some(d) = dot {
        outputs.push((d, emit_dot(&t.net)));
    }
    if let Err(e) = write_outputs(&outputs) {
        console.error(format!("cannot write output: {e}"));
        return EXIT_DIAGNOSTICS;
    }
    console.info(&format!(
        "{}: {} places, {} transitions, {} arcs\n",
        path.display(),
        t.net.places.len(),
        t.net.transitions.len(),
        t.net.arcs.len()
    ));
    EXIT_OK
}

fn analysis_error_code(e: &AnalysisError) -> i32 {
    match e {
        AnalysisError::Transform(t) => transform_error_code(t),
        AnalysisError::InvalidTime(_) | AnalysisError::InvalidTolerance(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

/// Plain-text `key = value` report with a fixed key order.
pub fn render_report(model_name: &str, options: &AnalysisOptions, a: &Analysis) -> String {
    let r = &a.report;
    let mut s = String::new();
    s.push_str("# adapt-kit dependability report\n");
    s.push_str("# times in hours, rates per hour\n");
    writeln!(s, "model = {model_name}").unwrap();
    writeln!(s, "tolerance = {}", format_real(options.tol)).unwrap();
    writeln!(s, "bound = {}", options.bound).unwrap();
    writeln!(s, "places = {}", a.transformed.net.places.len()).unwrap();
    writeln!(s, "transitions = {}", a.transformed.net.transitions.len()).unwrap();
    writeln!(s, "tangible_states = {}", a.ctmc.len()).unwrap();
    writeln!(s, "vanishing_markings = {}", a.vanishing_count()).unwrap();
    match r.steady_availability {
        Some(v) => writeln!(s, "steady_availability = {v:.15}").unwrap(),
        None => {
            s.push_str("# the chain has absorbing states\n");
            s.push_str("steady_availability = none\n");
        }
    }
    match r.steady_iterations {
        Some(n) => writeln!(s, "steady_iterations = {n}").unwrap(),
        None => s.push_str("steady_iterations = none\n"),
    }
    match r.steady_residual {
        Some(v) => writeln!(s, "steady_residual = {}", format_real(v)).unwrap(),
        None => s.push_str("steady_residual = none\n"),
    }
    for (t, rel) in &r.reliability {
        writeln!(s, "reliability[{}] = {rel:.15}", format_real(*t)).unwrap();
    }
    match r.mttf {
        Mttf::Hours(h) => writeln!(s, "mttf = {h:.9}").unwrap(),
        Mttf::Infinite => {
            s.push_str("# failure is avoided forever with positive probability\n");
            s.push_str("mttf = inf\n");
        }
    }
    s
}

fn analyze_cmd(
    console: &mut Console<'_>,
    path: &Path,
    options: &AnalysisOptions,
    report: Option<&Path>,
) -> i32 {
    let (model, _) = match load(console, path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let analysis = match analyze(&model, options) {
        Ok(a) => a,
        Err(e) => {
            console.error(&e);
            return analysis_error_code(&e);
        }
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = render_report(&name, options, &analysis);
    if let Some(out) = report {
        if let Err(e) = write_outputs(&[(out, text.clone())]) {
            console.error(format!("cannot write report: {e}"));
            return EXIT_DIAGNOSTICS;
        }
    }
    console.info(&text);
    EXIT_OK
}
