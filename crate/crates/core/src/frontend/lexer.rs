use std::fmt;

/// Lexical category of a [`Token`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    IntLiteral,
    DoubleLiteral,
    Identifier,
    KwInt,
    KwDouble,
    KwReturn,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::IntLiteral => "integer literal",
            TokenKind::DoubleLiteral => "double literal",
            TokenKind::Identifier => "identifier",
            TokenKind::KwInt => "`int`",
            TokenKind::KwDouble => "`double`",
            TokenKind::KwReturn => "`return`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Comma => "`,`",
            TokenKind::Assign => "`=`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Percent => "`%`",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 1-based column (in characters) of the first character.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct LexError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

/// Tokenizes raw bytes, reporting invalid UTF-8 as a [`LexError`] at the first bad byte.
pub fn tokenize_bytes(source: &[u8]) -> Result<Vec<Token>, LexError> {
    match std::str::from_utf8(source) {
        Ok(text) => tokenize(text),
        Err(e) => {
            let valid = std::str::from_utf8(&source[..e.valid_up_to()]).unwrap_or_default();
            let (line, column) = position_after(valid);
            Err(LexError {
                message: "invalid UTF-8".into(),
                line,
                column,
            })
        }
    }
}

fn position_after(text: &str) -> (usize, usize) {
    let line = text.matches('\n').count() + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Splits `source` into tokens using maximal munch. Whitespace and `//`
/// line comments are skipped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next()?;
        if next.1 == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(next)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn error(&self, message: impl Into<String>, line: usize, column: usize) -> LexError {
        LexError {
            message: message.into(),
            line,
            column,
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut tokens = Vec::new();
        while let Some(c) = self.peek() {
            let (line, column) = (self.line, self.column);
            let start = self.offset();
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '/' && self.src[start..].starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }

            let kind = if c.is_ascii_digit() {
                self.number(line, column)?
            } else if c.is_ascii_alphabetic() || c == '_' {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                match &self.src[start..self.offset()] {
                    "int" => TokenKind::KwInt,
                    "double" => TokenKind::KwDouble,
                    "return" => TokenKind::KwReturn,
                    _ => TokenKind::Identifier,
                }
            } else {
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ',' => TokenKind::Comma,
                    '=' => TokenKind::Assign,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '%' => TokenKind::Percent,
                    other => return Err(self.error(format!("unexpected character `{other}`"), line, column)),
                };
                self.bump();
                kind
            };
            tokens.push(Token {
                kind,
                lexeme: self.src[start..self.offset()].to_string(),
                line,
                column,
            });
        }
        Ok(tokens)
    }

    fn digits(&mut self) -> usize {
        let mut n = 0;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
            n += 1;
        }
        n
    }

    fn number(&mut self, line: usize, column: usize) -> Result<TokenKind, LexError> {
        let start = self.offset();
        self.digits();
        let kind = if self.peek() == Some('.') {
            self.bump();
            if self.digits() == 0 {
                return Err(self.error("malformed number: expected digits after `.`", line, column));
            }
            TokenKind::DoubleLiteral
        } else {
            if self.src[start..self.offset()].parse::<i64>().is_err() {
                return Err(self.error("integer literal does not fit in 64 bits", line, column));
            }
            TokenKind::IntLiteral
        };
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
            return Err(self.error("malformed number", line, column));
        }
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn sample_line() {
        use TokenKind::*;
        let got = kinds("int A1 = (5 + 7) * 14");
        let want: Vec<(TokenKind, String)> = [
            (KwInt, "int"),
            (Identifier, "A1"),
            (Assign, "="),
            (LParen, "("),
            (IntLiteral, "5"),
            (Plus, "+"),
            (IntLiteral, "7"),
            (RParen, ")"),
            (Star, "*"),
            (IntLiteral, "14"),
        ]
        .into_iter()
        .map(|(k, s)| (k, s.to_string()))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn doubles_and_lone_dot() {
        assert_eq!(kinds("3.14"), vec![(TokenKind::DoubleLiteral, "3.14".into())]);
        let err = tokenize("3 .14").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
        assert!(tokenize("3.").is_err());
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn int_overflow_is_an_error() {
        assert!(tokenize("9223372036854775807").is_ok());
        assert!(tokenize("9223372036854775808").is_err());
    }

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("// header\n  return x // trailing\n").unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!((toks[0].line, toks[0].column), (2, 3));
        assert_eq!((toks[1].line, toks[1].column), (2, 10));
    }

    #[test]
    fn invalid_character_position() {
        let err = tokenize("int x = @").unwrap_err();
        assert_eq!((err.line, err.column), (1, 9));
    }

    #[test]
    fn invalid_utf8() {
        let err = tokenize_bytes(b"int x\n = \xff").unwrap_err();
        assert_eq!((err.line, err.column), (2, 4));
    }
}
