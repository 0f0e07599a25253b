use std::fs;
use std::io;
use std::path::Path;

use super::PipelineError;

pub const K_PLACEHOLDER: &str = "{K}";

/// Template names, also the file stems (`<name>.txt`) in a prompt directory.
pub const TEMPLATE_NAMES: [&str; 7] = [
    "describe",
    "word_select",
    "word_compress",
    "word_decompress",
    "generate",
    "reflect_compare",
    "reflect_generate",
];

/// The prompt templates used by every stage.
///
/// `describe` is shared by the encoder and by reflection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub describe: String,
    pub word_select: String,
    pub word_compress: String,
    pub word_decompress: String,
    pub generate: String,
    pub reflect_compare: String,
    pub reflect_generate: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::bundled()
    }
}

impl PromptSet {
    pub fn bundled() -> Self {
        Self {
            describe: include_str!("../../prompts/describe.txt").trim().to_string(),
            word_select: include_str!("../../prompts/word_select.txt").trim().to_string(),
            word_compress: include_str!("../../prompts/word_compress.txt").trim().to_string(),
            word_decompress: include_str!("../../prompts/word_decompress.txt").trim().to_string(),
            generate: include_str!("../../prompts/generate.txt").trim().to_string(),
            reflect_compare: include_str!("../../prompts/reflect_compare.txt").trim().to_string(),
            reflect_generate: include_str!("../../prompts/reflect_generate.txt").trim().to_string(),
        }
    }

    /// Word Select with the target word count filled in.
    pub fn word_select_for(&self, k: usize) -> String {
        self.word_select.replace(K_PLACEHOLDER, &k.to_string())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        Some(match name {
            "describe" => &self.describe,
            "word_select" => &self.word_select,
            "word_compress" => &self.word_compress,
            "word_decompress" => &self.word_decompress,
            "generate" => &self.generate,
            "reflect_compare" => &self.reflect_compare,
            "reflect_generate" => &self.reflect_generate,
            _ => return None,
        })
    }

    /// Writes the set as one `<name>.txt` per template.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for name in TEMPLATE_NAMES {
            fs::write(dir.join(format!("{name}.txt")), format!("{}\n", self.get(name).unwrap_or_default()))?;
        }
        Ok(())
    }
}

/// Loads a prompt directory: one `<name>.txt` per entry of [`TEMPLATE_NAMES`].
pub fn load_prompts(dir: &Path) -> Result<PromptSet, PipelineError> {
    let read = |name: &'static str| -> Result<String, PipelineError> {
        let path = dir.join(format!("{name}.txt"));
        match fs::read_to_string(&path) {
            Ok(text) if !text.trim().is_empty() => Ok(text.trim().to_string()),
            Ok(_) => Err(PipelineError::MissingTemplate(name.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(PipelineError::MissingTemplate(name.to_string())),
            Err(e) => Err(PipelineError::Io(format!("{}: {e}", path.display()))),
        }
    };
    let set = PromptSet {
        describe: read("describe")?,
        word_select: read("word_select")?,
        word_compress: read("word_compress")?,
        word_decompress: read("word_decompress")?,
        generate: read("generate")?,
        reflect_compare: read("reflect_compare")?,
        reflect_generate: read("reflect_generate")?,
    };
    if !set.word_select.contains(K_PLACEHOLDER) {
        return Err(PipelineError::MissingPlaceholder {
            template: "word_select".into(),
            placeholder: K_PLACEHOLDER.into(),
        });
    }
    Ok(set)
}
