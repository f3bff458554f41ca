use crate::Loc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    LBrace,
    RBrace,
    Colon,
    Equals,
    DotDot,
    Str(String),
    /// Any run of name, number, dotted-path or address characters.
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub loc: Loc,
    pub message: String,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | '+')
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(LexError { loc, message: "unterminated block comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        match c {
            '{' => {
                bump!();
                out.push(Token { tok: Tok::LBrace, loc });
            }
            '}' => {
                bump!();
                out.push(Token { tok: Tok::RBrace, loc });
            }
            ':' => {
                bump!();
                out.push(Token { tok: Tok::Colon, loc });
            }
            '=' => {
                bump!();
                out.push(Token { tok: Tok::Equals, loc });
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(LexError { loc, message: "unterminated string literal".into() })
                        }
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            match chars.get(i) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                _ => {
                                    return Err(LexError {
                                        loc: Loc { line, col },
                                        message: "unknown escape in string literal".into(),
                                    })
                                }
                            }
                            bump!();
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), loc });
            }
            '.' if chars.get(i + 1) == Some(&'.') => {
                bump!();
                bump!();
                out.push(Token { tok: Tok::DotDot, loc });
            }
            c if is_word_char(c) => {
                let mut w = String::new();
                while i < chars.len() && is_word_char(chars[i]) {
                    // `a..b` splits into a word, a range marker and a word
                    if chars[i] == '.' && chars.get(i + 1) == Some(&'.') {
                        break;
                    }
                    w.push(chars[i]);
                    bump!();
                }
                out.push(Token { tok: Tok::Word(w), loc });
            }
            other => {
                return Err(LexError { loc, message: format!("unexpected character {other:?}") });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn range_splits_words() {
        assert_eq!(
            words("40msec..60msec"),
            vec![Tok::Word("40msec".into()), Tok::DotDot, Tok::Word("60msec".into())]
        );
    }

    #[test]
    fn address_is_one_word() {
        assert_eq!(words("IP 192.168.1.201"), vec![Tok::Word("IP".into()), Tok::Word("192.168.1.201".into())]);
    }

    #[test]
    fn comments_and_strings() {
        let toks = words("// hi\nPATH \"a \\\"b\\\"\" /* x */ }");
        assert_eq!(toks, vec![Tok::Word("PATH".into()), Tok::Str("a \"b\"".into()), Tok::RBrace]);
    }

    #[test]
    fn locations_track_lines() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].loc, Loc { line: 2, col: 3 });
    }

    #[test]
    fn bad_character() {
        let err = tokenize("a ; b").unwrap_err();
        assert_eq!(err.loc, Loc { line: 1, col: 3 });
    }
}
