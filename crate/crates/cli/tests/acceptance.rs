//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Run with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::collection::vec;
use proptest::test_runner::{Config, TestRunner};

use common::{run_with, snapshot, Workspace, BOAT};
use semcodec::backends::{Backend, BackendCapabilities, BackendError, BackendSession, ImageRef, MockBackend, TextTask};
use semcodec::metrics::{baseline_ratio, classify_region, Region};
use semcodec::pipeline::{
    encode_image, shared_context, PipelineConfig, SessionContext, SessionRole, SessionTranscript, TimestampMode,
    Warning,
};
use semcodec::reflection::{gate, run_reflection};
use semcodec::textcodec::{
    devowel_oracle, encode_container, pack, to_symbols, unpack, RepairPolicy, SemanticContainer, SymbolString,
};
use semcodec::{BitrateReport, Exact, ExactBitrateReport, ExactRegionThresholds, RegionThresholds};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

fn bitrate_anchor() -> Outcome {
    let start = Instant::now();
    let exact = ExactBitrateReport::for_symbols(25, 1024, 1024).map_err(|e| e.to_string())?;
    let float = BitrateReport::for_symbols(25, 1024, 1024).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(exact.bits == 100, format!("bits = {}", exact.bits))?;
    check(
        exact.microbpp == Exact::new(100_000_000, 1_048_576),
        format!("exact µbpp = {}", exact.microbpp),
    )?;
    check(float.microbpp == 95.367431640625, format!("µbpp = {}", float.microbpp))?;
    let table = float.table();
    check(table.contains("95.37 (≈100 µbpp)"), format!("table lacks the ≈100 note:\n{table}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("100 bits, {} µbpp, in {elapsed:?}", float.microbpp))
}

fn ratio_anchor() -> Outcome {
    let baseline_bits = 1024 * 1024;
    let exact: Exact = baseline_ratio(100, baseline_bits).map_err(|e| e.to_string())?;
    check(exact == Exact::new(1_048_576, 100), format!("exact ratio = {exact}"))?;
    let float: f64 = baseline_ratio(100, baseline_bits).map_err(|e| e.to_string())?;
    check(float == 10485.76, format!("ratio = {float}"))?;
    check(float >= 10_000.0, "ratio below 10,000x")?;
    Ok(format!("{float}x (exact {exact})"))
}

fn region_anchor() -> Outcome {
    let t = RegionThresholds::default();
    let cases = [(1.0, Region::Structural), (5e-3, Region::Mixed), (9.5e-5, Region::Semantic)];
    for (bpp, want) in cases {
        let got = classify_region(bpp, &t);
        check(got == want, format!("{bpp} bpp classified {got}, expected {want}"))?;
    }
    let te = ExactRegionThresholds::default();
    let exact_cases = [
        (Exact::from_integer(1), Region::Structural),
        (Exact::new(5, 1000), Region::Mixed),
        (Exact::new(95, 1_000_000), Region::Semantic),
    ];
    for (bpp, want) in exact_cases {
        check(classify_region(bpp, &te) == want, format!("exact {bpp} misclassified"))?;
    }
    Ok("1.0 structural, 5e-3 mixed, 9.5e-5 semantic".into())
}

fn codec_properties() -> Outcome {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (vec(0u8..16, 0..200), 1u32..=u16::MAX as u32, 1u32..=u16::MAX as u32);
    runner
        .run(&strategy, |(indices, w, h)| {
            let s = SymbolString::from_indices(&indices).unwrap();
            let packed = pack(&s);
            assert_eq!(unpack(&packed, s.len() as u64).unwrap(), s);
            let c = SemanticContainer::new(s, w, h).unwrap();
            assert_eq!(SemanticContainer::from_bytes(&c.to_bytes()).unwrap(), c);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(2))?;

    let empty = encode_container(&SymbolString::new(), 1024, 1024).map_err(|e| e.to_string())?;
    let header = [b'S', b'M', b'C', b'1', 1, 0x04, 0x00, 0x04, 0x00, 0, 0, 0, 0];
    check(empty == header, format!("empty container bytes {empty:02x?}"))?;
    let s = to_symbols("bt strn", &RepairPolicy::strict()).map_err(|e| e.to_string())?;
    let bt = encode_container(&s, 1024, 1024).map_err(|e| e.to_string())?;
    let mut want = header.to_vec();
    want[12] = 7;
    want.extend_from_slice(&[0xD2, 0x03, 0x24, 0x10]);
    check(bt == want, format!("\"bt strn\" container bytes {bt:02x?}"))?;
    Ok(format!("10000 round-trips in {elapsed:?}, golden bytes match"))
}

fn oracle_anchor() -> Outcome {
    let got = devowel_oracle("indian traditional arch", &RepairPolicy::repair());
    check(got == "ndn trdtnl rch", format!("got {got:?}"))?;
    Ok(format!("{got:?}"))
}

fn reflection_contract() -> Outcome {
    let backend = MockBackend::new(Default::default());
    let mut config = PipelineConfig::default();
    check(config.reflection_iterations == 2, "default R is not 2")?;
    config.timestamps = TimestampMode::Logical;
    let mut ctx = SessionContext::new("accept".into(), SessionRole::Decoder, &backend, TimestampMode::Logical);
    let description = "large white boat wooden stern calm blue water rocky shore";
    let image = backend
        .generate(&mut ctx.session, &config.prompts.generate, description)
        .map_err(|e| e.to_string())?;
    let run = run_reflection(&mut ctx, &image, description, &config, &backend).map_err(|e| e.to_string())?;
    check(run.trace.iterations.len() == 2, format!("trace length {}", run.trace.iterations.len()))?;
    check(run.trace.verify_chain(image.content_hash()), "hash chain broken")?;
    check(!gate(100, 1024, 1024, &config), "gate(100 bits) should be false")?;
    check(gate(840, 1024, 1024, &config), "gate(840 bits) should be true")?;
    Ok("trace length 2, chain verified, gate(100)=false, gate(840)=true".into())
}

fn transcripts(dir: &std::path::Path) -> Result<(SessionTranscript, SessionTranscript), String> {
    let load = |name: &str| {
        let text = fs::read_to_string(dir.join(name)).map_err(|e| e.to_string())?;
        SessionTranscript::from_json(&text).map_err(|e| e.to_string())
    };
    Ok((load("boat.encode.transcript.json")?, load("boat.decode.transcript.json")?))
}

fn determinism(ws: &Workspace) -> Outcome {
    let img = ws.path("boat.png");
    let start = Instant::now();
    for run in ["run1", "run2"] {
        let r = run_with("roundtrip", &[&img], &ws.flags(&ws.out(run)), &["--words", "40"]);
        check(r.code == 0, format!("roundtrip exited {}: {}", r.code, r.stderr))?;
    }
    let elapsed = start.elapsed();
    let (a, b) = (snapshot(&ws.out("run1")), snapshot(&ws.out("run2")));
    check(a == b, "outputs differ between runs")?;
    let kinds = [".smc", ".transcript.json", ".png"];
    for kind in kinds {
        check(a.iter().any(|(n, _)| n.ends_with(kind)), format!("no {kind} output"))?;
    }
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{} files byte-identical, two runs in {elapsed:?}", a.len()))
}

fn session_hygiene(ws: &Workspace) -> Outcome {
    let (enc, dec) = transcripts(&ws.out("run1"))?;
    let leaks = shared_context(&enc, &dec);
    check(leaks.is_empty(), format!("shared text: {leaks:?}"))?;
    let description = enc.stages[0].output.as_text().unwrap_or_default().to_string();
    check(dec.texts().all(|t| !t.contains(&description)), "decoder saw the description")?;
    Ok(format!(
        "{} encoder and {} decoder stages, no shared text beyond the payload",
        enc.stages.len(),
        dec.stages.len()
    ))
}

/// Mock with a fixed Word Select answer of `n` words.
struct FixedSelect {
    inner: MockBackend,
    n: usize,
}

impl Backend for FixedSelect {
    fn name(&self) -> &str {
        "fixed-select"
    }
    fn capabilities(&self) -> BackendCapabilities {
        self.inner.capabilities()
    }
    fn describe(&self, s: &mut BackendSession, image: &ImageRef, prompt: &str) -> Result<String, BackendError> {
        self.inner.describe(s, image, prompt)
    }
    fn transform(&self, s: &mut BackendSession, t: &TextTask, i: &str, p: &str) -> Result<String, BackendError> {
        match t {
            TextTask::WordSelect { .. } => Ok((0..self.n).map(|k| format!("word{k}")).collect::<Vec<_>>().join(" ")),
            _ => self.inner.transform(s, t, i, p),
        }
    }
    fn generate(&self, s: &mut BackendSession, i: &str, d: &str) -> Result<ImageRef, BackendError> {
        self.inner.generate(s, i, d)
    }
    fn regenerate(&self, s: &mut BackendSession, i: &str, e: &str) -> Result<ImageRef, BackendError> {
        self.inner.regenerate(s, i, e)
    }
}

fn tolerance_contract(ws: &Workspace) -> Outcome {
    let image = ImageRef::load(&ws.path("boat.png")).map_err(|e| e.to_string())?;
    let inner = MockBackend::from_fixture_dir(&ws.fixtures()).map_err(|e| e.to_string())?;
    let config = PipelineConfig::default().with_words(30);
    let mut backend = FixedSelect { inner, n: 0 };
    for n in [26usize, 27, 30, 33, 34, 40] {
        backend.n = n;
        let enc = encode_image(&image, &config, &backend).map_err(|e| e.to_string())?;
        let warned = enc
            .transcript
            .warnings()
            .any(|w| matches!(w, Warning::WordBudgetViolation { actual, .. } if *actual == n));
        let expect = !(27..=33).contains(&n);
        check(warned == expect, format!("K=30, {n} words: warning={warned}, expected {expect}"))?;
    }
    Ok("K=30: 27..=33 words silent, 26/34/40 warn".into())
}

fn main() -> ExitCode {
    let ws = Workspace::new();
    ws.image("boat.png", 1024, 1024, 1, BOAT);

    let results: Vec<(&str, Outcome)> = vec![
        ("bitrate anchor", bitrate_anchor()),
        ("ratio anchor", ratio_anchor()),
        ("region anchor", region_anchor()),
        ("codec properties", codec_properties()),
        ("oracle anchor", oracle_anchor()),
        ("reflection contract", reflection_contract()),
        ("determinism", determinism(&ws)),
        ("session hygiene", session_hygiene(&ws)),
        ("tolerance contract", tolerance_contract(&ws)),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL ({why})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
