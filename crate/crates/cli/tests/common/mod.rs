#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use semcodec::textcodec::{encode_container, to_symbols, RepairPolicy};
use semcodec::ImageRef;
use semcodec_cli::preprocess::{center_crop, TARGET_SIDE};
use tempfile::TempDir;

pub const BOAT: &str = "A large white boat with a curved wooden stern floats on calm blue water \
near a rocky shore. The boat has a red interior, two small oars, and a tall mast with a folded \
cream sail. Behind the boat, green pine trees cover huge grey cliffs under a pale morning sky.";

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("semcodec").chain(args.iter().copied());
    let code = semcodec_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// A scratch directory with a fixture table and input images.
pub struct Workspace {
    pub dir: TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::create_dir_all(ws.fixtures().join("descriptions")).unwrap();
        ws
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn fixtures(&self) -> PathBuf {
        self.path("fixtures")
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.path(name)
    }

    /// Writes a `w`×`h` PNG and registers `description` for its cropped form.
    pub fn image(&self, name: &str, w: u32, h: u32, seed: u8, description: &str) -> PathBuf {
        let img = RgbImage::from_fn(w, h, |x, y| Rgb([(x / 3) as u8 ^ seed, (y / 5) as u8, ((x + y) / 7) as u8]));
        let path = self.path(name);
        img.save(&path).unwrap();
        let (cropped, _) = center_crop(&ImageRef::load(&path).unwrap(), TARGET_SIDE);
        self.describe(&cropped, description);
        path
    }

    pub fn describe(&self, img: &ImageRef, description: &str) {
        let file = self
            .fixtures()
            .join("descriptions")
            .join(format!("{}.txt", img.content_hash().as_str()));
        fs::write(file, description).unwrap();
    }

    pub fn container(&self, name: &str, text: &str) -> PathBuf {
        let s = to_symbols(text, &RepairPolicy::strict()).unwrap();
        let path = self.path(name);
        fs::write(&path, encode_container(&s, 1024, 1024).unwrap()).unwrap();
        path
    }

    /// Common flags for the mock backend rooted in this workspace.
    pub fn flags<'a>(&'a self, out: &'a Path) -> Vec<String> {
        vec![
            "--backend".into(),
            "mock".into(),
            "--fixtures".into(),
            self.fixtures().display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ]
    }
}

pub fn run_with(cmd: &str, inputs: &[&Path], flags: &[String], extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![cmd.to_string()];
    args.extend(inputs.iter().map(|p| p.display().to_string()));
    args.extend(flags.iter().cloned());
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cli(&refs)
}

/// Every file in `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// A 210-symbol legal text.
pub fn text_of_len(n: usize) -> String {
    "ndntrdtnlrchvndvltshdv".chars().cycle().take(n).collect()
}
