//! Recoding of Thyroid0387 diagnosis strings.
//!
//! Raw diagnoses look like `K`, `A|K`, `-` and may carry a trailing record
//! id in brackets (`GK[840803046]`). Only the conditions below are kept:
//!
//! | letters    | class            |
//! |------------|------------------|
//! | K          | 0 (healthy)      |
//! | A, B, C, D | 1 (hyperthyroid) |
//! | E, F, G, H | 2 (hypothyroid)  |

pub const CLASS_NAMES: [&str; 3] = ["healthy", "hyperthyroid", "hypothyroid"];

fn letter_class(token: &str) -> Option<usize> {
    match token {
        "K" => Some(0),
        "A" | "B" | "C" | "D" => Some(1),
        "E" | "F" | "G" | "H" => Some(2),
        _ => None,
    }
}

/// Maps a diagnosis to a class index, or `None` when the record is skipped.
///
/// For `X|Y` the more likely `Y` wins when it is a considered letter,
/// otherwise `X` is used when valid. A side is valid only when it is exactly
/// one considered letter.
pub fn recode_thyroid_diagnosis(raw: &str) -> Option<usize> {
    let raw = raw.trim();
    let raw = match raw.find('[') {
        Some(i) => &raw[..i],
        None => raw,
    };
    match raw.split_once('|') {
        Some((x, y)) => letter_class(y.trim()).or_else(|| letter_class(x.trim())),
        None => letter_class(raw),
    }
}
