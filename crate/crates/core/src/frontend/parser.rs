//! Recursive-descent parser for the toy language.
//!
//! ```text
//! program   := stmt* ;
//! stmt      := funcdecl | vardecl | return | exprstmt ;
//! funcdecl  := type IDENT "(" [param ("," param)*] ")" "{" stmt* "}" ;
//! param     := type IDENT ;
//! vardecl   := type IDENT "=" expr ;
//! return    := "return" expr ;
//! exprstmt  := expr ;
//! type      := "int" | "double" ;
//! expr      := IDENT "=" expr | additive ;
//! additive  := multiplicative (("+"|"-") multiplicative)* ;
//! multiplicative := unary (("*"|"/"|"%") unary)* ;
//! unary     := "-" unary | primary ;
//! primary   := INT | DOUBLE | IDENT "(" [expr ("," expr)*] ")" | IDENT | "(" expr ")" ;
//! ```
//!
//! Statements have no terminator. A `-` written directly in front of a
//! numeric literal produces a negative literal rather than a negation node.

use std::fmt;

use super::lexer::{Token, TokenKind};
use crate::ast::{BinOp, Expr, FuncDecl, Param, Program, Stmt, TypeTag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<TokenKind>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            let names: Vec<&str> = self.expected.iter().map(|k| k.describe()).collect();
            write!(f, " (expected {})", names.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Builds a [`Program`] from tokens produced by [`super::tokenize`].
pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut statements = Vec::new();
    while !p.at_end() {
        statements.push(p.stmt(true)?);
    }
    Ok(Program::new(statements))
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

const TYPE_START: [TokenKind; 2] = [TokenKind::KwInt, TokenKind::KwDouble];
const EXPR_START: [TokenKind; 5] = [
    TokenKind::IntLiteral,
    TokenKind::DoubleLiteral,
    TokenKind::Identifier,
    TokenKind::LParen,
    TokenKind::Minus,
];

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn peek_kind_at(&self, offset: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| t.kind)
    }

    fn advance(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    /// Position of the current token, or just past the last one at end of input.
    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.column),
            None => match self.tokens.last() {
                Some(t) => (t.line, t.column + t.lexeme.chars().count()),
                None => (1, 1),
            },
        }
    }

    fn error(&self, message: impl Into<String>, expected: &[TokenKind]) -> ParseError {
        let (line, column) = self.here();
        let found = match self.peek() {
            Some(t) => format!("found `{}`", t.lexeme),
            None => "found end of input".to_string(),
        };
        ParseError {
            message: format!("{}, {found}", message.into()),
            line,
            column,
            expected: expected.to_vec(),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&'t Token, ParseError> {
        if self.peek_kind() == Some(kind) {
            Ok(self.advance())
        } else {
            Err(self.error(format!("expected {what}"), &[kind]))
        }
    }

    fn type_tag(&mut self) -> Result<TypeTag, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::KwInt) => {
                self.advance();
                Ok(TypeTag::Int)
            }
            Some(TokenKind::KwDouble) => {
                self.advance();
                Ok(TypeTag::Double)
            }
            _ => Err(self.error("expected a type", &TYPE_START)),
        }
    }

    fn stmt(&mut self, top_level: bool) -> Result<Stmt, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::KwInt | TokenKind::KwDouble) => self.declaration(top_level),
            Some(TokenKind::KwReturn) => {
                self.advance();
                Ok(Stmt::Return(self.expr()?))
            }
            _ => Ok(Stmt::ExprStmt(self.expr()?)),
        }
    }

    fn declaration(&mut self, top_level: bool) -> Result<Stmt, ParseError> {
        let tag = self.type_tag()?;
        let name = self.expect(TokenKind::Identifier, "a name")?.lexeme.clone();
        match self.peek_kind() {
            Some(TokenKind::Assign) => {
                self.advance();
                let init = self.expr()?;
                Ok(Stmt::VarDecl { tag, name, init })
            }
            Some(TokenKind::LParen) if !top_level => Err(self.error(
                "function declarations are only allowed at top level",
                &[TokenKind::Assign],
            )),
            Some(TokenKind::LParen) => {
                self.advance();
                let params = self.params()?;
                self.expect(TokenKind::LBrace, "`{` to open the function body")?;
                let mut body = Vec::new();
                while self.peek_kind() != Some(TokenKind::RBrace) {
                    if self.at_end() {
                        let mut expected = vec![TokenKind::RBrace, TokenKind::KwReturn];
                        expected.extend(TYPE_START);
                        expected.extend(EXPR_START);
                        return Err(self.error("unterminated function body", &expected));
                    }
                    body.push(self.stmt(false)?);
                }
                self.advance();
                Ok(Stmt::FuncDecl(FuncDecl {
                    ret: tag,
                    name,
                    params,
                    body,
                }))
            }
            _ => {
                let expected = if top_level {
                    vec![TokenKind::Assign, TokenKind::LParen]
                } else {
                    vec![TokenKind::Assign]
                };
                Err(self.error("expected `=` or a parameter list", &expected))
            }
        }
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut params = Vec::new();
        if self.peek_kind() == Some(TokenKind::RParen) {
            self.advance();
            return Ok(params);
        }
        loop {
            if !matches!(self.peek_kind(), Some(TokenKind::KwInt | TokenKind::KwDouble)) {
                let expected = if params.is_empty() {
                    vec![TokenKind::KwInt, TokenKind::KwDouble, TokenKind::RParen]
                } else {
                    TYPE_START.to_vec()
                };
                return Err(self.error("expected a parameter", &expected));
            }
            let tag = self.type_tag()?;
            let name = self.expect(TokenKind::Identifier, "a parameter name")?.lexeme.clone();
            params.push(Param { tag, name });
            match self.peek_kind() {
                Some(TokenKind::Comma) => {
                    self.advance();
                }
                Some(TokenKind::RParen) => {
                    self.advance();
                    return Ok(params);
                }
                _ => {
                    return Err(self.error(
                        "expected `,` or `)` in parameter list",
                        &[TokenKind::Comma, TokenKind::RParen],
                    ))
                }
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek_kind() == Some(TokenKind::Identifier) && self.peek_kind_at(1) == Some(TokenKind::Assign) {
            let target = self.advance().lexeme.clone();
            self.advance();
            let value = self.expr()?;
            return Ok(Expr::assign(target, value));
        }
        self.additive()
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                Some(TokenKind::Percent) => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_kind() != Some(TokenKind::Minus) {
            return self.primary();
        }
        self.advance();
        match self.peek_kind() {
            Some(TokenKind::IntLiteral) => {
                let t = self.advance();
                // The lexer guarantees the digits fit in i64, so negation cannot overflow.
                Ok(Expr::IntLiteral(-literal_int(t)))
            }
            Some(TokenKind::DoubleLiteral) => {
                let t = self.advance();
                Ok(Expr::DoubleLiteral(-literal_double(t)))
            }
            _ => Ok(Expr::negate(self.unary()?)),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::IntLiteral) => Ok(Expr::IntLiteral(literal_int(self.advance()))),
            Some(TokenKind::DoubleLiteral) => Ok(Expr::DoubleLiteral(literal_double(self.advance()))),
            Some(TokenKind::Identifier) => {
                let name = self.advance().lexeme.clone();
                if self.peek_kind() != Some(TokenKind::LParen) {
                    return Ok(Expr::Identifier(name));
                }
                self.advance();
                let mut args = Vec::new();
                if self.peek_kind() == Some(TokenKind::RParen) {
                    self.advance();
                    return Ok(Expr::call(name, args));
                }
                loop {
                    args.push(self.expr()?);
                    match self.peek_kind() {
                        Some(TokenKind::Comma) => {
                            self.advance();
                        }
                        Some(TokenKind::RParen) => {
                            self.advance();
                            return Ok(Expr::call(name, args));
                        }
                        _ => {
                            return Err(self.error(
                                "expected `,` or `)` in argument list",
                                &[TokenKind::Comma, TokenKind::RParen],
                            ))
                        }
                    }
                }
            }
            Some(TokenKind::LParen) => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("expected an expression", &EXPR_START)),
        }
    }
}

fn literal_int(t: &Token) -> i64 {
    t.lexeme.parse().expect("lexer validated integer literal")
}

fn literal_double(t: &Token) -> f64 {
    t.lexeme.parse().expect("lexer validated double literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::tokenize;

    fn parse_str(src: &str) -> Result<Program, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn precedence() {
        let p = parse_str("return 1 + 2 * 3").unwrap();
        let want = Stmt::Return(Expr::binary(
            BinOp::Add,
            Expr::int(1),
            Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3)),
        ));
        assert_eq!(p.statements, vec![want]);
    }

    #[test]
    fn left_associative() {
        let p = parse_str("10 - 3 - 2").unwrap();
        let want = Expr::binary(
            BinOp::Sub,
            Expr::binary(BinOp::Sub, Expr::int(10), Expr::int(3)),
            Expr::int(2),
        );
        assert_eq!(p.statements, vec![Stmt::ExprStmt(want)]);
    }

    #[test]
    fn truncated_function() {
        let err = parse_str("int f(").unwrap_err();
        assert_eq!(
            err.expected,
            vec![TokenKind::KwInt, TokenKind::KwDouble, TokenKind::RParen]
        );
        assert_eq!((err.line, err.column), (1, 7));
    }

    #[test]
    fn truncated_declaration() {
        let err = parse_str("int x =").unwrap_err();
        assert_eq!((err.line, err.column), (1, 8));
        assert_eq!(err.expected, EXPR_START.to_vec());
    }

    #[test]
    fn juxtaposed_statements() {
        let p = parse_str("int a = 1  a = a + 2  return a").unwrap();
        assert_eq!(p.statements.len(), 3);
        assert!(matches!(&p.statements[1], Stmt::ExprStmt(Expr::Assignment { .. })));
    }

    #[test]
    fn negative_literals_and_negation() {
        let p = parse_str("return -5 * -x - -(2)").unwrap();
        let want = Expr::binary(
            BinOp::Sub,
            Expr::binary(BinOp::Mul, Expr::int(-5), Expr::negate(Expr::ident("x"))),
            Expr::negate(Expr::int(2)),
        );
        assert_eq!(p.statements, vec![Stmt::Return(want)]);
    }

    #[test]
    fn nested_function_is_rejected() {
        assert!(parse_str("int f() { int g() { return 1 } }").is_err());
    }

    #[test]
    fn trailing_semicolon_is_not_part_of_the_language() {
        assert!(tokenize("return 1;").is_err());
    }
}
