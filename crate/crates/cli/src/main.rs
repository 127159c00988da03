use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpst_core::codegen::{generate_protocol, ApiOptions, ImportMap};
use mpst_core::compose::{compose_check, DEFAULT_BUFFER_BOUND};
use mpst_core::validate::{check_well_formed, has_errors, project_error_code};
use mpst_core::{export_dot, export_efsm_json, parse_module, project, split_labels, to_efsm, ScribbleModule};

/// Scribble protocol toolchain.
#[derive(Parser)]
#[command(name = "mpst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a module for well-formedness.
    Check { file: PathBuf },
    /// Project a protocol onto a role and print its state machine.
    Project {
        file: PathBuf,
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        role: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate typestate APIs and message types.
    Generate {
        file: PathBuf,
        #[arg(long)]
        protocol: String,
        /// Roles to generate (repeatable); all roles when omitted.
        #[arg(long)]
        role: Vec<String>,
        #[arg(long)]
        import_map: Option<PathBuf>,
        /// Directory for the module's subdirectory.
        #[arg(short, long)]
        output: PathBuf,
        /// Override the module directory name.
        #[arg(long)]
        module: Option<String>,
    },
    /// Explore the product of all roles' state machines for defects.
    Compose {
        file: PathBuf,
        #[arg(long)]
        protocol: String,
        #[arg(long, default_value_t = DEFAULT_BUFFER_BOUND)]
        bound: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

/// Exit statuses: 1 for problems with the protocol, 2 for I/O and syntax.
enum Failure {
    Invalid,
    Io,
}

fn load(file: &Path) -> Result<ScribbleModule, Failure> {
    let text = fs::read_to_string(file).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", file.display());
        Failure::Io
    })?;
    parse_module(&text).map_err(|e| {
        println!(
            "error[PARSE] {}:{}:{} {}",
            file.display(),
            e.span.line,
            e.span.column,
            e
        );
        Failure::Io
    })
}

/// Loads and validates; prints diagnostics and fails on errors.
fn load_checked(file: &Path) -> Result<ScribbleModule, Failure> {
    let m = load(file)?;
    let diags = check_well_formed(&m);
    let name = file.display().to_string();
    for d in &diags {
        if d.is_error() {
            println!("{}", d.render(&name));
        } else {
            eprintln!("{}", d.render(&name));
        }
    }
    if has_errors(&diags) {
        return Err(Failure::Invalid);
    }
    Ok(m)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            Failure::Io
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|_| Failure::Io)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { file } => {
            let m = load(&file)?;
            let diags = check_well_formed(&m);
            let name = file.display().to_string();
            for d in &diags {
                println!("{}", d.render(&name));
            }
            log::info!("{} diagnostics", diags.len());
            if has_errors(&diags) {
                Err(Failure::Invalid)
            } else {
                Ok(())
            }
        }
        Command::Project {
            file,
            protocol,
            role,
            format,
            output,
        } => {
            let m = load(&file)?;
            let lt = project(&m, &protocol, &role).map_err(|e| {
                let at = match e.span() {
                    Some(s) => format!("{}:{}:{}", file.display(), s.line, s.column),
                    None => file.display().to_string(),
                };
                println!("error[{}] {at} {e}", project_error_code(&e));
                Failure::Invalid
            })?;
            log::debug!("{role}@{protocol}: {lt}");
            let efsm = split_labels(&to_efsm(&lt, &protocol, &role));
            let text = match format {
                Format::Json => export_efsm_json(&efsm),
                Format::Dot => export_dot(&efsm),
            };
            emit(output.as_deref(), &text)
        }
        Command::Generate {
            file,
            protocol,
            role,
            import_map,
            output,
            module,
        } => {
            let m = load_checked(&file)?;
            let imports = match import_map {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| {
                        eprintln!("error: cannot read {}: {e}", p.display());
                        Failure::Io
                    })?;
                    Some(ImportMap::from_json(&text).map_err(|e| {
                        println!("error[IMPORT_MAP] {}: {e}", p.display());
                        Failure::Invalid
                    })?)
                }
                None => None,
            };
            let opts = match module {
                Some(dir) => ApiOptions::new(dir),
                None => ApiOptions::for_module(&m),
            };
            let art = generate_protocol(&m, &protocol, &role, imports.as_ref(), &opts).map_err(|e| {
                let code = match &e {
                    mpst_core::codegen::CodegenError::UnknownAlias(_) => "UNKNOWN_ALIAS",
                    mpst_core::codegen::CodegenError::Project(p) => project_error_code(p),
                    _ => "CODEGEN",
                };
                println!("error[{code}] {}: {e}", file.display());
                Failure::Invalid
            })?;
            let written = art.write_to(&output).map_err(|e| {
                eprintln!("error: cannot write to {}: {e}", output.display());
                Failure::Io
            })?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Compose { file, protocol, bound } => {
            let m = load_checked(&file)?;
            match compose_check(&m, &protocol, bound) {
                Ok(report) => {
                    println!("{} ({} states)", report.result.name(), report.explored_states);
                    for step in report.result.trace() {
                        println!("  {step}");
                    }
                    if report.result.is_ok() {
                        Ok(())
                    } else {
                        Err(Failure::Invalid)
                    }
                }
                Err(e) => {
                    println!("error[COMPOSE] {}: {e}", file.display());
                    Err(Failure::Invalid)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MPST_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid) => ExitCode::from(1),
        Err(Failure::Io) => ExitCode::from(2),
    }
}
