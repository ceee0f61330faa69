use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::corpus::Span;
use crate::date::Date;

pub const SNIPPET_RADIUS_CHARS: usize = 120;

/// A window of entry text around one mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSnippet {
    /// Index into the corpus entries.
    pub entry: usize,
    pub volume_id: String,
    pub date: Date,
    pub text: String,
    /// Byte range of the mention within `text`.
    pub highlight: Span,
}

/// `text[span]` widened by up to `radius` characters on each side.
pub fn window(text: &str, span: Span, radius: usize) -> (String, Span) {
    let start = text[..span.start]
        .char_indices()
        .rev()
        .nth(radius.saturating_sub(1))
        .map_or(0, |(i, _)| i);
    let start = if radius == 0 { span.start } else { start };
    let end = text[span.end..]
        .char_indices()
        .nth(radius)
        .map_or(text.len(), |(i, _)| span.end + i);
    (
        text[start..end].into(),
        Span::new(span.start - start, span.end - start),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_respects_char_boundaries() {
        let text = "ééé Cowley ééé";
        let span = Span::new(7, 13);
        assert_eq!(span.slice(text), "Cowley");
        let (w, h) = window(text, span, 2);
        assert_eq!(w, "é Cowley é");
        assert_eq!(h.slice(&w), "Cowley");
        let (w, _) = window(text, span, 500);
        assert_eq!(w, text);
        let (w, _) = window(text, span, 0);
        assert_eq!(w, "Cowley");
    }
}
