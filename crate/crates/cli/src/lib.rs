//! The `semcodec` command-line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod preprocess;

pub use commands::exit_code;
pub use config::{BackendKind, Resolved, Settings};

#[derive(Debug, Parser)]
#[command(name = "semcodec", version, about = "Text-based semantic image compression")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress images to .smc containers.
    Encode(InputArgs),
    /// Generate images from .smc containers.
    Decode(InputArgs),
    /// Encode then decode, in separate sessions.
    Roundtrip(InputArgs),
    /// Run the reflection loop on an existing image.
    Reflect(ReflectArgs),
    /// Print a container's header and text without contacting a backend.
    Inspect {
        file: PathBuf,
    },
    /// Rate table across containers.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Reference file (e.g. a JPEG of the same image); its size gives the ratio column.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct ReflectArgs {
    pub image: PathBuf,
    /// The description the image should match.
    #[arg(long, conflicts_with = "description_file", required_unless_present = "description_file")]
    pub description: Option<String>,
    #[arg(long)]
    pub description_file: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    commands::dispatch(cli, out, err)
}
