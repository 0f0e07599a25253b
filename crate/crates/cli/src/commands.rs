//! Command implementations. Each per-file command returns the stdout lines
//! for that file; errors are reported per file and mapped to exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use semcodec::backends::{HttpBackend, HttpConfig};
use semcodec::metrics::RateRecord;
use semcodec::pipeline::{EncodeResult, SessionContext, SessionRole, SessionTranscript};
use semcodec::reflection::{run_reflection, IterationImages};
use semcodec::textcodec::{from_symbols, CONTAINER_MAGIC, CONTAINER_VERSION};
use semcodec::{
    decode_container, encode_image, roundtrip, Backend, BitrateReport, CodecError, ImageRef, MockBackend,
    PipelineError, SemanticContainer,
};

use crate::config::{BackendKind, Resolved, Settings};
use crate::preprocess::{center_crop, TARGET_SIDE};
use crate::{Cli, Command, InputArgs, ReflectArgs};

/// 2 for a strict-mode alphabet violation, 3 for a malformed container, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        let codec = match cause.downcast_ref::<PipelineError>() {
            Some(PipelineError::Codec(c)) => Some(c),
            _ => cause.downcast_ref::<CodecError>(),
        };
        match codec {
            Some(CodecError::IllegalSymbol { .. }) => return 2,
            Some(c) if c.is_container_error() => return 3,
            _ => {}
        }
    }
    1
}

pub(crate) fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Inspect { file } => inspect(&file, out),
        Command::Report { files, baseline } => report(&files, baseline.as_deref(), out, err),
        Command::Encode(args) => per_input(cli.config.as_deref(), args, out, err, encode_one),
        Command::Decode(args) => per_input(cli.config.as_deref(), args, out, err, decode_one),
        Command::Roundtrip(args) => per_input(cli.config.as_deref(), args, out, err, roundtrip_one),
        Command::Reflect(args) => reflect(cli.config.as_deref(), args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn resolve(config: Option<&Path>, flags: Settings) -> Result<Resolved> {
    let file = match config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let resolved = Resolved::from_settings(flags.over(file).over(Settings::defaults()))?;
    fs::create_dir_all(&resolved.out).with_context(|| format!("creating {}", resolved.out.display()))?;
    Ok(resolved)
}

fn make_backend(r: &Resolved) -> Result<Box<dyn Backend>> {
    Ok(match r.backend {
        BackendKind::Mock => match &r.fixtures {
            Some(dir) => Box::new(
                MockBackend::from_fixture_dir(dir).with_context(|| format!("loading fixtures from {}", dir.display()))?,
            ),
            None => Box::new(MockBackend::new(Default::default())),
        },
        BackendKind::Http => Box::new(HttpBackend::new(HttpConfig::from_env()?)?),
    })
}

struct Run<'a> {
    settings: &'a Resolved,
    backend: &'a dyn Backend,
}

impl Run<'_> {
    fn path(&self, input: &Path, suffix: &str) -> PathBuf {
        self.settings.out.join(format!("{}{suffix}", stem(input)))
    }

    fn write(&self, input: &Path, suffix: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(input, suffix);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_image(&self, input: &Path, suffix: &str, image: &ImageRef) -> Result<PathBuf> {
        let path = self.path(input, suffix);
        image
            .save_png(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_transcript(&self, input: &Path, suffix: &str, t: &SessionTranscript) -> Result<PathBuf> {
        self.write(input, suffix, t.to_json() + "\n")
    }

    fn write_reflection_images(&self, input: &Path, images: &[IterationImages]) -> Result<()> {
        for (i, it) in images.iter().enumerate() {
            self.write_image(input, &format!(".reflect_{}_pre.png", i + 1), &it.pre)?;
            self.write_image(input, &format!(".reflect_{}_post.png", i + 1), &it.post)?;
        }
        Ok(())
    }

    fn write_encoding(&self, input: &Path, enc: &EncodeResult) -> Result<()> {
        self.write(input, ".smc", &enc.container)?;
        self.write_transcript(input, ".encode.transcript.json", &enc.transcript)?;
        self.write(input, ".report.txt", format!("file: {}\n{}", input.display(), enc.report.table()))?;
        Ok(())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string())
}

fn summary(input: &Path, report: &BitrateReport) -> String {
    format!(
        "{}: symbols={}, µbpp={:.2}, region={}",
        input.display(),
        report.symbols,
        report.microbpp,
        report.region
    )
}

fn load_input(path: &Path) -> Result<(ImageRef, semcodec::pipeline::CropRecord)> {
    let image = ImageRef::load(path).with_context(|| format!("reading image {}", path.display()))?;
    Ok(center_crop(&image, TARGET_SIDE))
}

fn read_container(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn encode_one(run: &Run, input: &Path) -> Result<Vec<String>> {
    let (image, crop) = load_input(input)?;
    let mut enc = encode_image(&image, &run.settings.pipeline, run.backend)?;
    enc.transcript.preprocess = Some(crop);
    run.write_encoding(input, &enc)?;
    Ok(vec![summary(input, &enc.report)])
}

fn decode_one(run: &Run, input: &Path) -> Result<Vec<String>> {
    let bytes = read_container(input)?;
    let dec = decode_container(&bytes, &run.settings.pipeline, run.backend)?;
    let image = run.write_image(input, ".decoded.png", &dec.image)?;
    run.write_transcript(input, ".decode.transcript.json", &dec.transcript)?;
    run.write_reflection_images(input, &dec.reflection_images)?;
    Ok(vec![format!(
        "{}: wrote {} ({} reflection iteration(s))",
        input.display(),
        image.display(),
        dec.reflection_images.len()
    )])
}

fn roundtrip_one(run: &Run, input: &Path) -> Result<Vec<String>> {
    let (image, crop) = load_input(input)?;
    let (mut enc, dec) = roundtrip(&image, &run.settings.pipeline, run.backend)?;
    enc.transcript.preprocess = Some(crop);
    run.write_encoding(input, &enc)?;
    run.write_image(input, ".decoded.png", &dec.image)?;
    run.write_transcript(input, ".decode.transcript.json", &dec.transcript)?;
    run.write_reflection_images(input, &dec.reflection_images)?;
    Ok(vec![summary(input, &enc.report)])
}

type PerInput = fn(&Run, &Path) -> Result<Vec<String>>;

fn per_input(config: Option<&Path>, args: InputArgs, out: &mut dyn Write, err: &mut dyn Write, f: PerInput) -> Result<i32> {
    let settings = resolve(config, args.settings)?;
    let backend = make_backend(&settings)?;
    let run = Run {
        settings: &settings,
        backend: backend.as_ref(),
    };
    let results: Vec<Result<Vec<String>>> = if settings.jobs > 1 && args.inputs.len() > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()?
            .install(|| args.inputs.par_iter().map(|p| f(&run, p)).collect())
    } else {
        args.inputs.iter().map(|p| f(&run, p)).collect()
    };

    let mut code = 0;
    for (input, result) in args.inputs.iter().zip(results) {
        match result {
            Ok(lines) => {
                for line in lines {
                    writeln!(out, "{line}")?;
                }
            }
            Err(e) => {
                writeln!(err, "error: {}: {e:#}", input.display())?;
                if code == 0 {
                    code = exit_code(&e);
                }
            }
        }
    }
    Ok(code)
}

fn reflect(config: Option<&Path>, args: ReflectArgs, out: &mut dyn Write) -> Result<i32> {
    let settings = resolve(config, args.settings)?;
    let backend = make_backend(&settings)?;
    let run = Run {
        settings: &settings,
        backend: backend.as_ref(),
    };
    let description = match (&args.description, &args.description_file) {
        (Some(d), _) => d.clone(),
        (None, Some(path)) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, None) => return Err(anyhow!("a description is required")),
    };
    let description = description.trim();
    let image = ImageRef::load(&args.image).with_context(|| format!("reading image {}", args.image.display()))?;

    let id = format!("reflect-{}", image.content_hash().short());
    let mut ctx = SessionContext::new(id, SessionRole::Decoder, run.backend, settings.pipeline.timestamps);
    // The image stands in for one this session generated, so edits apply to it.
    ctx.session.push_assistant_image(image.clone());
    let result = run_reflection(&mut ctx, &image, description, &settings.pipeline, run.backend)?;
    ctx.transcript.reflection = Some(result.trace);

    let input = args.image.as_path();
    let path = run.write_image(input, ".reflected.png", &result.final_image)?;
    run.write_transcript(input, ".reflect.transcript.json", &ctx.transcript)?;
    run.write_reflection_images(input, &result.images)?;
    writeln!(
        out,
        "{}: wrote {} ({} reflection iteration(s))",
        input.display(),
        path.display(),
        result.images.len()
    )?;
    Ok(0)
}

fn inspect(file: &Path, out: &mut dyn Write) -> Result<i32> {
    let bytes = read_container(file)?;
    let c = SemanticContainer::from_bytes(&bytes)?;
    let report = BitrateReport::for_symbols(c.symbols.len() as u64, c.width as u32, c.height as u32)?;
    let rows = [
        ("magic", String::from_utf8_lossy(&CONTAINER_MAGIC[..]).into_owned()),
        ("version", CONTAINER_VERSION.to_string()),
        ("width", c.width.to_string()),
        ("height", c.height.to_string()),
        ("symbol_count", c.symbols.len().to_string()),
        ("text", from_symbols(&c.symbols)),
        ("payload_bits", report.bits.to_string()),
        ("payload_µbpp", format!("{:.2}", report.microbpp)),
        ("total_bits", report.total_bits.to_string()),
        ("total_µbpp", format!("{:.2}", report.total_microbpp())),
        ("region", report.region.to_string()),
    ];
    for (k, v) in rows {
        writeln!(out, "{k}: {v}")?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct ReportRow {
    file: String,
    #[serde(flatten)]
    rate: RateRecord,
}

fn report(files: &[PathBuf], baseline: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let baseline_bits = match baseline {
        Some(p) => Some(
            fs::metadata(p)
                .with_context(|| format!("reading baseline {}", p.display()))?
                .len()
                * 8,
        ),
        None => None,
    };

    let mut rows = Vec::new();
    for file in files {
        let parsed = read_container(file).and_then(|bytes| {
            let c = SemanticContainer::from_bytes(&bytes)?;
            let mut r = BitrateReport::for_symbols(c.symbols.len() as u64, c.width as u32, c.height as u32)?;
            if let Some(b) = baseline_bits {
                if r.bits > 0 {
                    r = r.with_baseline(b)?;
                }
            }
            Ok(r)
        });
        match parsed {
            Ok(r) => rows.push((file.display().to_string(), r)),
            Err(e) => writeln!(err, "error: {}: {e:#}", file.display())?,
        }
    }
    rows.sort_by(|a, b| b.1.bpp.total_cmp(&a.1.bpp).then_with(|| a.0.cmp(&b.0)));

    let mut table: Vec<Vec<String>> = vec![["file", "symbols", "bits", "µbpp", "region"]
        .iter()
        .map(|s| s.to_string())
        .collect()];
    if baseline_bits.is_some() {
        table[0].push("ratio".into());
    }
    for (name, r) in &rows {
        let mut row = vec![
            name.clone(),
            r.symbols.to_string(),
            r.bits.to_string(),
            format!("{:.2}", r.microbpp),
            r.region.to_string(),
        ];
        if baseline_bits.is_some() {
            row.push(r.baseline_ratio.map_or("-".into(), |x| format!("{x:.2}x")));
        }
        table.push(row);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|i| table.iter().map(|row| row[i].chars().count()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end())?;
    }

    let records: Vec<ReportRow> = rows
        .iter()
        .map(|(file, r)| ReportRow {
            file: file.clone(),
            rate: r.record(),
        })
        .collect();
    writeln!(out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&records)?)?;
    Ok(0)
}
