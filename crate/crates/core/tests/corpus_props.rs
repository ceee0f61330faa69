use capta_core::corpus::{parse_diary, DateGrammar, Span, WarningKind};
use capta_core::Date;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Piece {
    Heading(u32),
    Long(u32),
    Impossible,
    Body(String),
    Blank,
}

fn piece() -> impl Strategy<Value = Piece> {
    prop_oneof![
        (0u32..400).prop_map(Piece::Heading),
        (0u32..400).prop_map(Piece::Long),
        Just(Piece::Impossible),
        "[A-Za-z ,.;é]{1,30}".prop_map(Piece::Body),
        Just(Piece::Blank),
    ]
}

fn render(pieces: &[Piece], crlf: bool, trailing_newline: bool) -> String {
    let start = Date::new(1891, 1, 1).unwrap();
    let weekdays = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"];
    let months = [
        "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
        "November", "December",
    ];
    let lines: Vec<String> = pieces
        .iter()
        .map(|p| match p {
            Piece::Heading(d) => {
                let date = start.add_days(i64::from(*d));
                format!("{:04}-{:02}-{:02}", date.year(), date.month(), date.day())
            }
            Piece::Long(d) => {
                let date = start.add_days(i64::from(*d));
                format!(
                    "{} {} {} {}",
                    weekdays[(*d % 7) as usize],
                    date.day(),
                    months[date.month() as usize - 1],
                    date.year()
                )
            }
            Piece::Impossible => "1891-02-30".to_string(),
            // Leading text keeps a body line from being read as a heading.
            Piece::Body(s) => format!("x {s}"),
            Piece::Blank => String::new(),
        })
        .collect();
    let sep = if crlf { "\r\n" } else { "\n" };
    let mut out = lines.join(sep);
    if trailing_newline {
        out.push_str(sep);
    }
    out
}

proptest! {
    #[test]
    fn spans_tile_the_source(pieces in prop::collection::vec(piece(), 0..40), crlf: bool, nl: bool) {
        let source = render(&pieces, crlf, nl);
        let parsed = parse_diary(&source, "v", &DateGrammar::default());
        let mut spans: Vec<Span> = parsed.entries.iter().map(|e| e.source_span).collect();
        spans.extend(parsed.discarded.iter().copied());
        spans.sort();
        let mut rebuilt = String::new();
        let mut cursor = 0;
        for s in &spans {
            prop_assert_eq!(s.start, cursor);
            rebuilt.push_str(s.slice(&source));
            cursor = s.end;
        }
        prop_assert_eq!(rebuilt, source);
    }

    #[test]
    fn parsing_is_deterministic(pieces in prop::collection::vec(piece(), 0..40), crlf: bool) {
        let source = render(&pieces, crlf, true);
        let g = DateGrammar::default();
        prop_assert_eq!(parse_diary(&source, "v", &g), parse_diary(&source, "v", &g));
    }

    #[test]
    fn one_entry_per_heading_with_text(days in prop::collection::vec((0u32..400, any::<bool>()), 0..30)) {
        let mut pieces = Vec::new();
        for (d, long) in &days {
            pieces.push(if *long { Piece::Long(*d) } else { Piece::Heading(*d) });
            pieces.push(Piece::Body("went out".into()));
        }
        let source = render(&pieces, false, true);
        let parsed = parse_diary(&source, "v", &DateGrammar::default());
        prop_assert_eq!(parsed.entries.len(), days.len());
        prop_assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn every_valid_heading_is_an_entry_or_warned(pieces in prop::collection::vec(piece(), 0..40)) {
        let source = render(&pieces, false, true);
        let parsed = parse_diary(&source, "v", &DateGrammar::default());
        let headings = pieces.iter().filter(|p| matches!(p, Piece::Heading(_) | Piece::Long(_))).count();
        let empty = parsed
            .warnings
            .iter()
            .filter(|w| matches!(w.kind, WarningKind::EmptyEntry { .. }))
            .count();
        prop_assert_eq!(parsed.entries.len() + empty, headings);
    }
}
