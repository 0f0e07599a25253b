//! Deterministic offline backend.
//!
//! Every operation is a pure function of the fixtures and its inputs:
//!
//! * `describe` looks the image up by content hash in a [`FixtureTable`]. Images
//!   the mock generated itself carry a [`MockImageStamp`] and are described by
//!   the text stamped into their pixels.
//! * Word Select keeps the first K tokens that are not [`STOPWORDS`].
//! * Word Compress is [`devowel_oracle`] under the default repair policy.
//! * Word Decompress looks each token up in a [`ReverseDictionary`].
//! * Compare names the first content word of the original description missing
//!   from the new one (`"add <word>"`), or [`NO_CHANGE`].
//! * `generate` renders a solid image stamped with `sha256(prompt)`. The
//!   "drawn" content keeps two of every three content words of the
//!   description, so reflection has something to fix.
//! * `regenerate` stamps `sha256(previous_hash || edit)` and adds the edit's
//!   words to the drawn content.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use image::{Rgb, RgbImage};
use sha2::{Digest, Sha256};

use super::{
    edit_target, render_generate, render_regenerate, require_nonempty, Backend, BackendCapabilities, BackendError,
    BackendSession, ContentHash, ImageRef, TextTask,
};
use crate::textcodec::{canonicalize, devowel_oracle, RepairPolicy};

pub const MOCK_IMAGE_SIZE: u32 = 1024;
pub const NO_CHANGE: &str = "no change";

const STAMP_MAGIC: &[u8; 4] = b"SMCK";
const BUNDLED_WORDS: &str = include_str!("../../data/words.txt");

pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "across", "after", "against", "all", "along", "also", "among", "an", "and", "any", "are",
    "around", "as", "at", "be", "been", "behind", "being", "below", "beneath", "beside", "between", "beyond", "both",
    "but", "by", "can", "could", "do", "does", "each", "either", "for", "from", "has", "have", "he", "her", "here",
    "his", "how", "i", "if", "in", "inside", "into", "is", "it", "its", "itself", "just", "me", "near", "neither",
    "nor", "of", "off", "on", "onto", "or", "other", "our", "out", "outside", "over", "she", "so", "some", "such",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "through", "to",
    "toward", "towards", "under", "until", "up", "upon", "us", "very", "was", "we", "were", "what", "which", "while",
    "who", "whose", "will", "with", "within", "without", "would", "you", "your",
];

fn is_stopword(lower: &str) -> bool {
    STOPWORDS.binary_search(&lower).is_ok()
}

/// Content words of `text`, canonicalized.
fn content_words(text: &str) -> Vec<String> {
    canonicalize(text)
        .split(' ')
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .map(str::to_string)
        .collect()
}

/// First `k` non-stopword tokens of `text`, punctuation trimmed, case kept.
pub fn mock_word_select(text: &str, k: usize) -> String {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty() && !is_stopword(&t.to_lowercase()))
        .take(k)
        .collect::<Vec<_>>()
        .join(" ")
}

/// First content word of `original` absent from `new_description`.
pub fn mock_compare(new_description: &str, original: &str) -> String {
    let present: HashSet<String> = content_words(new_description).into_iter().collect();
    content_words(original)
        .into_iter()
        .find(|w| !present.contains(w))
        .map_or_else(|| NO_CHANGE.to_string(), |w| format!("add {w}"))
}

/// Devoweled form → word. Ties go to the alphabetically first word.
#[derive(Debug, Clone, Default)]
pub struct ReverseDictionary {
    map: BTreeMap<String, String>,
}

impl ReverseDictionary {
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let policy = RepairPolicy::repair();
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for raw in words {
            let word = raw.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            let word = canonicalize(word);
            let key = devowel_oracle(&word, &policy);
            if key.is_empty() || key.contains(' ') {
                continue;
            }
            map.entry(key)
                .and_modify(|w| {
                    if word < *w {
                        *w = word.clone();
                    }
                })
                .or_insert(word);
        }
        Self { map }
    }

    /// The word list shipped with the crate (10,000 common English words).
    pub fn bundled() -> Self {
        Self::from_words(BUNDLED_WORDS.lines())
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::from_words(fs::read_to_string(path)?.lines()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lookup(&self, token: &str) -> Option<&str> {
        self.map.get(token).map(String::as_str)
    }

    /// Expands each token; unknown tokens pass through unchanged.
    pub fn decompress(&self, text: &str) -> String {
        text.split_whitespace()
            .map(|t| self.lookup(t).unwrap_or(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Image hash → description.
///
/// On disk: a directory with one `<64-hex-hash>.txt` file per image, each
/// holding the description text. Other files are ignored.
#[derive(Debug, Clone, Default)]
pub struct FixtureTable {
    descriptions: HashMap<ContentHash, String>,
}

impl FixtureTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, hash: ContentHash, description: impl Into<String>) {
        self.descriptions.insert(hash, description.into());
    }

    pub fn get(&self, hash: &ContentHash) -> Option<&str> {
        self.descriptions.get(hash).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut table = Self::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(hash) = path.file_stem().and_then(|s| s.to_str()).and_then(ContentHash::parse) else {
                continue;
            };
            table.insert(hash, fs::read_to_string(&path)?.trim().to_string());
        }
        Ok(table)
    }
}

/// What the mock writes into the pixels of the images it generates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockImageStamp {
    pub seed: [u8; 32],
    /// The content the mock "drew", returned by `describe`.
    pub drawn: String,
}

impl MockImageStamp {
    pub fn render(&self) -> ImageRef {
        let fill = Rgb([self.seed[0], self.seed[1], self.seed[2]]);
        let mut img = RgbImage::from_pixel(MOCK_IMAGE_SIZE, MOCK_IMAGE_SIZE, fill);
        let raw: &mut [u8] = &mut img;
        let capacity = raw.len() - STAMP_MAGIC.len() - 32 - 4;
        let mut text = self.drawn.as_str();
        while text.len() > capacity {
            let mut cut = capacity.min(text.len() - 1);
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            text = &text[..cut];
        }
        let mut stream = Vec::with_capacity(40 + text.len());
        stream.extend_from_slice(STAMP_MAGIC);
        stream.extend_from_slice(&self.seed);
        stream.extend_from_slice(&(text.len() as u32).to_be_bytes());
        stream.extend_from_slice(text.as_bytes());
        raw[..stream.len()].copy_from_slice(&stream);
        ImageRef::new(img)
    }

    /// Reads a stamp back; `None` for images the mock did not produce.
    pub fn read(image: &ImageRef) -> Option<Self> {
        let raw = image.pixels().as_raw();
        if raw.len() < 40 || &raw[..4] != STAMP_MAGIC {
            return None;
        }
        let seed: [u8; 32] = raw[4..36].try_into().ok()?;
        let len = u32::from_be_bytes(raw[36..40].try_into().ok()?) as usize;
        let text = raw.get(40..40 + len)?;
        Some(Self {
            seed,
            drawn: String::from_utf8(text.to_vec()).ok()?,
        })
    }
}

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Seed for a freshly generated image.
pub(crate) fn generate_seed(prompt: &str) -> [u8; 32] {
    sha256(&[prompt.as_bytes()])
}

/// Seed for an edit of the image with hash `previous`.
pub(crate) fn regenerate_seed(previous: &ContentHash, edit: &str) -> [u8; 32] {
    sha256(&[previous.as_str().as_bytes(), edit.as_bytes()])
}

/// Keeps two of every three content words.
fn partial_drawing(description: &str) -> String {
    content_words(description)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % 3 != 2)
        .map(|(_, w)| w)
        .collect::<Vec<_>>()
        .join(" ")
}

fn apply_edit(drawn: &str, edit: &str) -> String {
    if canonicalize(edit) == NO_CHANGE {
        return drawn.to_string();
    }
    let edit = canonicalize(edit);
    let added = edit.strip_prefix("add ").unwrap_or(&edit);
    [drawn, added]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    fixtures: FixtureTable,
    dictionary: ReverseDictionary,
    policy: RepairPolicy,
    capabilities: BackendCapabilities,
}

impl MockBackend {
    pub fn new(fixtures: FixtureTable) -> Self {
        Self {
            fixtures,
            dictionary: ReverseDictionary::bundled(),
            policy: RepairPolicy::repair(),
            capabilities: BackendCapabilities {
                supports_session_edit: true,
            },
        }
    }

    /// Loads `<dir>/descriptions/*.txt` and, if present, `<dir>/words.txt`.
    pub fn from_fixture_dir(dir: &Path) -> io::Result<Self> {
        let descriptions = dir.join("descriptions");
        let fixtures = if descriptions.is_dir() {
            FixtureTable::load_dir(&descriptions)?
        } else {
            FixtureTable::new()
        };
        let mut mock = Self::new(fixtures);
        let words = dir.join("words.txt");
        if words.is_file() {
            mock.dictionary = ReverseDictionary::load(&words)?;
        }
        Ok(mock)
    }

    pub fn with_dictionary(mut self, dictionary: ReverseDictionary) -> Self {
        self.dictionary = dictionary;
        self
    }

    pub fn with_session_edit(mut self, supported: bool) -> Self {
        self.capabilities.supports_session_edit = supported;
        self
    }

    pub fn fixtures(&self) -> &FixtureTable {
        &self.fixtures
    }

    pub fn dictionary(&self) -> &ReverseDictionary {
        &self.dictionary
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn capabilities(&self) -> BackendCapabilities {
        self.capabilities
    }

    fn describe(&self, session: &mut BackendSession, image: &ImageRef, prompt: &str) -> Result<String, BackendError> {
        require_nonempty("describe prompt", prompt)?;
        let description = match MockImageStamp::read(image) {
            Some(stamp) => stamp.drawn,
            None => self
                .fixtures
                .get(image.content_hash())
                .map(str::to_string)
                .ok_or_else(|| BackendError::FixtureMissing(image.content_hash().clone()))?,
        };
        session.push_user(prompt, Some(image));
        session.push_assistant_text(description.clone());
        Ok(description)
    }

    fn transform(
        &self,
        session: &mut BackendSession,
        task: &TextTask,
        instruction: &str,
        payload: &str,
    ) -> Result<String, BackendError> {
        require_nonempty("instruction", instruction)?;
        require_nonempty("payload", payload)?;
        let out = match task {
            TextTask::WordSelect { target_words } => mock_word_select(payload, *target_words),
            TextTask::WordCompress => devowel_oracle(&canonicalize(payload), &self.policy),
            TextTask::WordDecompress => self.dictionary.decompress(&canonicalize(payload)),
            TextTask::ReflectCompare { original } => mock_compare(payload, original),
        };
        session.push_user(task.render(instruction, payload), None);
        session.push_assistant_text(out.clone());
        Ok(out)
    }

    fn generate(
        &self,
        session: &mut BackendSession,
        instruction: &str,
        description: &str,
    ) -> Result<ImageRef, BackendError> {
        require_nonempty("generate instruction", instruction)?;
        require_nonempty("description", description)?;
        let prompt = render_generate(instruction, description);
        let image = MockImageStamp {
            seed: generate_seed(&prompt),
            drawn: partial_drawing(description),
        }
        .render();
        session.push_user(prompt, None);
        session.push_assistant_image(image.clone());
        Ok(image)
    }

    fn regenerate(&self, session: &mut BackendSession, instruction: &str, edit: &str) -> Result<ImageRef, BackendError> {
        let previous = edit_target(self.capabilities, session)?;
        require_nonempty("regenerate instruction", instruction)?;
        let drawn = MockImageStamp::read(&previous).map(|s| s.drawn).unwrap_or_default();
        let image = MockImageStamp {
            seed: regenerate_seed(previous.content_hash(), edit),
            drawn: apply_edit(&drawn, edit),
        }
        .render();
        session.push_user(render_regenerate(instruction, edit), None);
        session.push_assistant_image(image.clone());
        Ok(image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcodec::{to_symbols, RepairPolicy};

    fn fixture_image() -> ImageRef {
        let mut img = RgbImage::new(64, 64);
        for (x, y, p) in img.enumerate_pixels_mut() {
            *p = Rgb([(x * 4) as u8, (y * 4) as u8, 128]);
        }
        ImageRef::new(img)
    }

    fn mock_with_fixture() -> (MockBackend, ImageRef) {
        let img = fixture_image();
        let mut table = FixtureTable::new();
        table.insert(img.content_hash().clone(), "A large white boat on calm water.");
        (MockBackend::new(table), img)
    }

    #[test]
    fn stopwords_sorted_for_binary_search() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn describe_is_a_fixture_lookup() {
        let (mock, img) = mock_with_fixture();
        let mut s = BackendSession::new("enc");
        let a = mock.describe(&mut s, &img, "describe").unwrap();
        let b = mock.describe(&mut s, &img, "describe").unwrap();
        assert_eq!(a, "A large white boat on calm water.");
        assert_eq!(a, b);
        assert_eq!(s.history().len(), 4);
    }

    #[test]
    fn describe_unknown_hash_names_it() {
        let mock = MockBackend::new(FixtureTable::new());
        let img = fixture_image();
        let err = mock.describe(&mut BackendSession::new("x"), &img, "describe").unwrap_err();
        assert_eq!(err, BackendError::FixtureMissing(img.content_hash().clone()));
        assert!(err.to_string().contains(img.content_hash().as_str()));
    }

    #[test]
    fn word_select_example() {
        assert_eq!(mock_word_select("a large white boat on calm water", 3), "large white boat");
        assert_eq!(mock_word_select("The boat, on the lake.", 5), "boat lake");
    }

    #[test]
    fn word_compress_example() {
        let (mock, _) = mock_with_fixture();
        let mut s = BackendSession::new("enc");
        let out = mock.transform(&mut s, &TextTask::WordCompress, "compress", "large white boat").unwrap();
        assert_eq!(out, "lrg vht bt");
        assert!(to_symbols(&out, &RepairPolicy::strict()).is_ok());
    }

    #[test]
    fn word_decompress_uses_reverse_dictionary() {
        let dict = ReverseDictionary::from_words(["boat", "water", "window"]);
        assert_eq!(dict.decompress("bt"), "boat");
        assert_eq!(dict.decompress("bt xyz vtr"), "boat xyz water");
        assert_eq!(dict.lookup("vndv"), Some("window"));
    }

    #[test]
    fn reverse_dictionary_ties_go_alphabetical() {
        let dict = ReverseDictionary::from_words(["boat", "bait", "beat"]);
        assert_eq!(dict.lookup("bt"), Some("bait"));
        let bundled = ReverseDictionary::bundled();
        assert!(bundled.len() > 3_000);
        // Every bundled word devowels to a key that maps back to a word with the same key.
        let policy = RepairPolicy::repair();
        for w in ["traditional", "shadow", "window", "arch"] {
            let key = devowel_oracle(w, &policy);
            let back = bundled.lookup(&key).unwrap();
            assert_eq!(devowel_oracle(back, &policy), key);
        }
    }

    #[test]
    fn compare_rule() {
        assert_eq!(mock_compare("white boat", "large white boat"), "add large");
        assert_eq!(mock_compare("large white boat", "a large white boat"), NO_CHANGE);
    }

    #[test]
    fn generate_is_hash_of_prompt() {
        let (mock, _) = mock_with_fixture();
        let mut s1 = BackendSession::new("a");
        let mut s2 = BackendSession::new("b");
        let a = mock.generate(&mut s1, "Generate:", "large white boat").unwrap();
        let b = mock.generate(&mut s2, "Generate:", "large white boat").unwrap();
        let c = mock.generate(&mut s2, "Generate:", "small red boat").unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!((a.width(), a.height()), (1024, 1024));
        let stamp = MockImageStamp::read(&a).unwrap();
        assert_eq!(stamp.seed, generate_seed(&render_generate("Generate:", "large white boat")));
        assert_eq!(stamp.drawn, "large white");
    }

    #[test]
    fn regenerate_chains_hashes() {
        let (mock, _) = mock_with_fixture();
        let mut s = BackendSession::new("dec");
        let first = mock.generate(&mut s, "Generate:", "large white boat").unwrap();
        let second = mock.regenerate(&mut s, "Change:", "add boat").unwrap();
        let expected = MockImageStamp {
            seed: regenerate_seed(first.content_hash(), "add boat"),
            drawn: "large white boat".into(),
        }
        .render();
        assert_eq!(second.content_hash(), expected.content_hash());
        assert_eq!(s.last_image().unwrap(), &second);
    }

    #[test]
    fn regenerate_preconditions() {
        let (mock, _) = mock_with_fixture();
        let mut fresh = BackendSession::new("fresh");
        assert_eq!(
            mock.regenerate(&mut fresh, "Change:", "x"),
            Err(BackendError::NoPriorImage("fresh".into()))
        );
        let no_edit = mock.clone().with_session_edit(false);
        let mut s = BackendSession::new("s");
        no_edit.generate(&mut s, "Generate:", "boat").unwrap();
        assert_eq!(no_edit.regenerate(&mut s, "Change:", "x"), Err(BackendError::EditUnsupported));
        assert_eq!(s.history().len(), 2);
    }

    #[test]
    fn empty_inputs_rejected() {
        let (mock, img) = mock_with_fixture();
        let mut s = BackendSession::new("s");
        assert!(matches!(mock.describe(&mut s, &img, " "), Err(BackendError::InvalidRequest(_))));
        assert!(matches!(
            mock.transform(&mut s, &TextTask::WordCompress, "x", ""),
            Err(BackendError::InvalidRequest(_))
        ));
        assert!(s.history().is_empty());
    }

    #[test]
    fn fixture_dir_loads() {
        let dir = tempfile::tempdir().unwrap();
        let desc = dir.path().join("descriptions");
        fs::create_dir(&desc).unwrap();
        let img = fixture_image();
        fs::write(desc.join(format!("{}.txt", img.content_hash())), "a boat\n").unwrap();
        fs::write(desc.join("README.md"), "ignored").unwrap();
        fs::write(dir.path().join("words.txt"), "# comment\nboat\n").unwrap();
        let mock = MockBackend::from_fixture_dir(dir.path()).unwrap();
        assert_eq!(mock.fixtures().get(img.content_hash()), Some("a boat"));
        assert_eq!(mock.dictionary().len(), 1);
    }
}
