//! Tokenizer and statement parser.

use super::units::{lookup, split_number, to_si};
use super::{Argument, Diagnostic, Keyword, SequenceSource, Statement};

/// Whitespace-separated words of a line with their 1-based char columns.
fn words(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut col = 0;
    for (byte, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push((c, &line[b..byte]));
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push((c, &line[b..]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_line(text: &str, line: usize, diags: &mut Vec<Diagnostic>) -> Option<Statement> {
    let ws = words(strip_comment(text));
    let (&(col0, head), rest) = ws.split_first()?;
    let Some(keyword) = Keyword::parse(head) else {
        diags.push(Diagnostic::error(line, col0, format!("unknown keyword '{head}'")));
        return None;
    };
    let mut stmt = Statement {
        keyword,
        args: Vec::new(),
        words: Vec::new(),
        line,
        column: col0,
    };
    let mut ok = true;
    let mut i = 0;
    while i < rest.len() {
        let (col, word) = rest[i];
        i += 1;
        let Some(eq) = word.find('=') else {
            if keyword == Keyword::Mode {
                stmt.words.push((word.to_string(), col));
            } else {
                diags.push(Diagnostic::error(line, col, format!("expected key=value, found '{word}'")));
                ok = false;
            }
            continue;
        };
        let key = &word[..eq];
        let value_text = &word[eq + 1..];
        let value_col = col + key.chars().count() + 1;
        if key.is_empty() {
            diags.push(Diagnostic::error(line, col, "missing argument name before '='"));
            ok = false;
            continue;
        }
        if value_text.is_empty() {
            diags.push(Diagnostic::error(line, col, format!("missing value for '{key}'")));
            ok = false;
            continue;
        }
        let Some((mantissa, exponent, attached)) = split_number(value_text) else {
            diags.push(Diagnostic::error(line, value_col, format!("malformed number '{value_text}'")));
            ok = false;
            continue;
        };
        if attached.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == '+' || c == '-') {
            diags.push(Diagnostic::error(line, value_col, format!("malformed number '{value_text}'")));
            ok = false;
            continue;
        }
        // A unit is either glued to the number or the next bare word.
        let unit_text = if !attached.is_empty() {
            Some(attached)
        } else if i < rest.len() && !rest[i].1.contains('=') {
            i += 1;
            Some(rest[i - 1].1)
        } else {
            None
        };
        let unit = match unit_text {
            Some(u) => match lookup(u) {
                Some(unit) => Some(unit),
                None => {
                    diags.push(Diagnostic::error(line, value_col, format!("unknown unit '{u}'")));
                    ok = false;
                    continue;
                }
            },
            None => None,
        };
        let Some(value) = to_si(mantissa, exponent, unit.as_ref()) else {
            diags.push(Diagnostic::error(line, value_col, format!("number out of range '{value_text}'")));
            ok = false;
            continue;
        };
        if stmt.args.iter().any(|a| a.key == key) {
            diags.push(Diagnostic::error(line, col, format!("duplicate argument '{key}'")));
            ok = false;
            continue;
        }
        stmt.args.push(Argument {
            key: key.to_string(),
            key_column: col,
            value,
            value_column: value_col,
            unit,
        });
    }
    ok.then_some(stmt)
}

/// Statements in file order, or every diagnostic found.
pub fn parse_sequence(src: &SequenceSource) -> Result<Vec<Statement>, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut stmts = Vec::new();
    for (i, text) in src.text.lines().enumerate() {
        if let Some(s) = parse_line(text, i + 1, &mut diags) {
            stmts.push(s);
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    if stmts.is_empty() {
        return Err(vec![Diagnostic::error(1, 1, "no statements")]);
    }
    Ok(stmts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Statement>, Vec<Diagnostic>> {
        parse_sequence(&SequenceSource::inline(text))
    }

    fn first_error(text: &str) -> Diagnostic {
        parse(text).unwrap_err().remove(0)
    }

    #[test]
    fn empty_and_comment_only() {
        for text in ["", "   \n\n", "# nothing here\n   # still nothing"] {
            let e = first_error(text);
            assert_eq!((e.message.as_str(), e.line, e.column), ("no statements", 1, 1));
        }
    }

    #[test]
    fn error_table() {
        let cases = [
            ("lattice_hold T_B=1.0 xyz", "unknown unit 'xyz'", 1, 18),
            ("lattice_hold T_B=1.0xyz", "unknown unit 'xyz'", 1, 18),
            ("frobnicate x=1", "unknown keyword 'frobnicate'", 1, 1),
            ("bragg_pair T=1ms T=2ms", "duplicate argument 'T'", 1, 18),
            ("launch v0=fast", "malformed number 'fast'", 1, 11),
            ("launch v0=1.2.3", "malformed number '1.2.3'", 1, 11),
            ("launch v0=", "missing value for 'v0'", 1, 8),
            ("launch =3", "missing argument name before '='", 1, 8),
            ("launch v0 3", "expected key=value, found 'v0'", 1, 8),
            ("launch v0=1e999", "number out of range '1e999'", 1, 11),
            ("\n\n  atom mass=1 kgs", "unknown unit 'kgs'", 3, 13),
        ];
        for (text, msg, line, col) in cases {
            let e = first_error(text);
            assert_eq!((e.message.as_str(), e.line, e.column), (msg, line, col), "{text}");
        }
    }

    #[test]
    fn units_attached_or_separate() {
        let s = parse("bragg_pair T=10ms delta_v=1 mm/s # note").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].arg("T").unwrap().value, 10e-3);
        assert_eq!(s[0].arg("delta_v").unwrap().value, 1e-3);
        let hz = parse("clock_pulse omega=1 Hz").unwrap();
        assert_eq!(hz[0].arg("omega").unwrap().value, 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn mode_takes_a_word() {
        let s = parse("mode reduced\n").unwrap();
        assert_eq!(s[0].keyword, Keyword::Mode);
        assert_eq!(s[0].words, vec![("reduced".to_string(), 6)]);
    }

    #[test]
    fn columns_count_characters() {
        let e = first_error("atom  mass=1 µq");
        assert_eq!((e.line, e.column), (1, 12));
        let ok = parse("lattice_hold T_B=2 µs").unwrap();
        assert_eq!(ok[0].arg("T_B").unwrap().value, 2e-6);
    }

    #[test]
    fn all_errors_are_collected() {
        let e = parse("foo\nbar\nlaunch v0=1 m/s").unwrap_err();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].line, 2);
    }
}
