//! The three generation prompts.
//!
//! Templates are stored verbatim under `prompts/` with the placeholder
//! `#ROUTINE#`; line wrapping is normalised to single spaces. The
//! Fortran-based mode appends the reference source after a blank line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::routine::Routine;

pub const PLACEHOLDER: &str = "#ROUTINE#";

const NAME_TO_C: &str = include_str!("../prompts/name_to_c.txt");
const NAME_TO_OPT_C: &str = include_str!("../prompts/name_to_opt_c.txt");
const FORTRAN_TO_OPT_C: &str = include_str!("../prompts/fortran_to_opt_c.txt");

/// Separator between the prompt text and an attached Fortran source.
pub const ATTACHMENT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    NameToCcode,
    NameToOptCcode,
    FrtcodeToOptCcode,
}

impl PromptMode {
    pub const ALL: [PromptMode; 3] = [PromptMode::NameToCcode, PromptMode::NameToOptCcode, PromptMode::FrtcodeToOptCcode];

    pub fn name(self) -> &'static str {
        match self {
            PromptMode::NameToCcode => "NameToCcode",
            PromptMode::NameToOptCcode => "NameToOptCcode",
            PromptMode::FrtcodeToOptCcode => "FrtcodeToOptCcode",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            PromptMode::NameToCcode => NAME_TO_C,
            PromptMode::NameToOptCcode => NAME_TO_OPT_C,
            PromptMode::FrtcodeToOptCcode => FORTRAN_TO_OPT_C,
        }
    }

    pub fn needs_attachment(self) -> bool {
        self == PromptMode::FrtcodeToOptCcode
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptMode {
    type Err = PromptError;

    /// Accepts the mode name (any case) or its number 1–3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        PromptMode::ALL
            .iter()
            .copied()
            .enumerate()
            .find(|(i, m)| m.name().eq_ignore_ascii_case(t) || t == (i + 1).to_string())
            .map(|(_, m)| m)
            .ok_or_else(|| PromptError::UnknownMode(t.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{0} needs a Fortran reference attachment")]
    MissingAttachment(PromptMode),
    #[error("unknown routine `{0}`")]
    UnknownRoutine(String),
    #[error("unknown prompt mode `{0}`")]
    UnknownMode(String),
    #[error("cannot read attachment {path}: {message}")]
    Attachment { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub routine: Routine,
    pub text: String,
    pub attachment: Option<String>,
}

/// Fills in the template for `routine`; the Fortran mode requires `attachment`.
/// Attachments given to the other modes are ignored.
pub fn build_prompt(routine: Routine, mode: PromptMode, attachment: Option<&str>) -> Result<PromptBundle, PromptError> {
    let mut text = mode.template().replace(PLACEHOLDER, routine.name());
    let attachment = if mode.needs_attachment() {
        let src = attachment.ok_or(PromptError::MissingAttachment(mode))?;
        text.push_str(ATTACHMENT_SEPARATOR);
        text.push_str(src);
        Some(src.to_string())
    } else {
        None
    };
    Ok(PromptBundle { mode, routine, text, attachment })
}

/// [`build_prompt`] taking the routine by name.
pub fn build_prompt_named(routine: &str, mode: PromptMode, attachment: Option<&str>) -> Result<PromptBundle, PromptError> {
    let r: Routine = routine.parse().map_err(|_| PromptError::UnknownRoutine(routine.to_string()))?;
    build_prompt(r, mode, attachment)
}

/// Reads `<dir>/<routine>.f` for the Fortran mode.
pub fn load_attachment(dir: &Path, routine: Routine) -> Result<String, PromptError> {
    let path = dir.join(format!("{}.f", routine.name()));
    std::fs::read_to_string(&path).map_err(|e| PromptError::Attachment { path, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPT: &str = "Thread parallelization, SIMD vectorization, and cache blocking should be considered for speed-up.";

    #[test]
    fn templates_carry_the_contract_sentences() {
        for m in PromptMode::ALL {
            let t = m.template();
            assert_eq!(t.matches(PLACEHOLDER).count(), if m.needs_attachment() { 1 } else { 2 }, "{m}");
            assert!(t.contains(r#"Insert printf("[gptblas]"); at the beginning of the routine."#));
            assert!(t.contains(r#"Function name must be "GPTBLAS_#ROUTINE#"."#));
            assert!(!t.contains('\n'));
        }
        assert!(!NAME_TO_C.contains(OPT));
        assert!(NAME_TO_OPT_C.contains(OPT) && FORTRAN_TO_OPT_C.contains(OPT));
        assert!(FORTRAN_TO_OPT_C.contains(r#"it must be named "xerbla""#));
        assert!(FORTRAN_TO_OPT_C.contains(r#"Use macros named "MIN()""#));
    }

    #[test]
    fn substitution_touches_only_the_placeholder() {
        let b = build_prompt(Routine::Dgemm, PromptMode::NameToCcode, None).unwrap();
        assert!(b.text.starts_with("Implement dgemm routine in BLAS in C language."));
        assert_eq!(b.text.len() + 2 * (PLACEHOLDER.len() - "dgemm".len()), NAME_TO_C.len());
        assert_eq!(b.attachment, None);
    }

    #[test]
    fn fortran_mode_requires_and_appends_attachment() {
        assert_eq!(
            build_prompt(Routine::Dsymm, PromptMode::FrtcodeToOptCcode, None),
            Err(PromptError::MissingAttachment(PromptMode::FrtcodeToOptCcode))
        );
        let b = build_prompt(Routine::Dsymm, PromptMode::FrtcodeToOptCcode, Some("*> SRC\n")).unwrap();
        assert!(b.text.ends_with("\n\n*> SRC\n"));
        assert_eq!(b.attachment.as_deref(), Some("*> SRC\n"));
    }

    #[test]
    fn names_and_numbers_parse() {
        assert!("namettoccode".parse::<PromptMode>().is_err());
        assert_eq!("nametoccode".parse::<PromptMode>().unwrap(), PromptMode::NameToCcode);
        assert_eq!("3".parse::<PromptMode>().unwrap(), PromptMode::FrtcodeToOptCcode);
        assert!(matches!(build_prompt_named("dfoo", PromptMode::NameToCcode, None), Err(PromptError::UnknownRoutine(_))));
    }
}
