use crate::diagnostic::{Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Real(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Dot,
    /// `->`
    Arrow,
    /// `=>`
    FatArrow,
    /// `-[`
    TransOpen,
    /// `]->`
    TransClose,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Real(_) => "number".to_string(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::FatArrow => "'=>'".into(),
            Tok::TransOpen => "'-['".into(),
            Tok::TransClose => "']->'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn tokenize(text: &str, file: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let span = |len: usize| SourceSpan::new(file, start.0, start.1, len);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            let len = i - begin;
            col += len;
            tokens.push(Token {
                tok: Tok::Ident(word),
                span: span(len),
            });
            continue;
        }
        let negative_number = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_number {
            let begin = i;
            if negative_number {
                i += 1;
            }
            let digits = |i: &mut usize| {
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
            };
            digits(&mut i);
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                digits(&mut i);
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                let mut j = i + 1;
                if matches!(chars.get(j), Some('+' | '-')) {
                    j += 1;
                }
                if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                    i = j;
                    digits(&mut i);
                }
            }
            // A number running into letters, dots or a dangling exponent,
            // e.g. `1.0e-` or `2.5.1`, is one malformed literal.
            let glued = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '.';
            if chars.get(i).is_some_and(|&c| glued(c)) {
                while i < chars.len()
                    && (glued(chars[i])
                        || (matches!(chars[i], '+' | '-') && matches!(chars[i - 1], 'e' | 'E')))
                {
                    i += 1;
                }
                let literal: String = chars[begin..i].iter().collect();
                return Err(Diagnostic::error(
                    format!("lexical error: malformed number '{literal}'"),
                    Some(span(i - begin)),
                ));
            }
            let literal: String = chars[begin..i].iter().collect();
            let len = i - begin;
            col += len;
            let value = literal.parse::<f64>().map_err(|_| {
                Diagnostic::error(
                    format!("lexical error: malformed number '{literal}'"),
                    Some(span(len)),
                )
            })?;
            tokens.push(Token {
                tok: Tok::Real(value),
                span: span(len),
            });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('-', Some('[')) => (Tok::TransOpen, 2),
            ('=', Some('>')) => (Tok::FatArrow, 2),
            (']', Some('-')) if chars.get(i + 2) == Some(&'>') => (Tok::TransClose, 3),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            _ => {
                return Err(Diagnostic::error(
                    format!("lexical error: unexpected character {c:?}"),
                    Some(span(1)),
                ))
            }
        };
        i += len;
        col += len;
        tokens.push(Token {
            tok,
            span: span(len),
        });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(file, line, col, 0),
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, "t")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn transition_arrows() {
        assert_eq!(
            toks("A -[in X]-> B"),
            vec![
                Tok::Ident("A".into()),
                Tok::TransOpen,
                Tok::Ident("in".into()),
                Tok::Ident("X".into()),
                Tok::TransClose,
                Tok::Ident("B".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn reals_with_exponent_and_sign() {
        assert_eq!(toks("1.0e-3")[0], Tok::Real(1.0e-3));
        assert_eq!(toks("-2")[0], Tok::Real(-2.0));
        assert_eq!(toks("7E+2")[0], Tok::Real(700.0));
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// c\n  foo", "f.adm").unwrap();
        assert_eq!(t[0].span.line, 2);
        assert_eq!(t[0].span.column, 3);
    }

    #[test]
    fn unexpected_character() {
        let d = tokenize("system @", "f").unwrap_err();
        assert!(d.message.starts_with("lexical error:"));
        assert_eq!(d.span.unwrap().column, 8);
    }
}
