//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := base ('^' exponent)?          // '^' right-associative
//! base     := number | symbol | function '(' expr ')' | '(' expr ')' | '-' factor
//! number   := integer | decimal
//! function := sqrt | exp | log
//! ```
//!
//! Exponents must normalise to exact rational constants. The token `p` is an
//! ordinary symbol here; callers treat it as the reserved slope symbol.

use super::{Expression, Rational};
use num::BigInt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown function `{name}` at byte {position}")]
    UnknownFunction { position: usize, name: String },
    #[error("exponent at byte {position} is not an exact rational constant")]
    NonRationalExponent { position: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(usize, Tok), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((start, Tok::Eof));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let mut frac_digits = 0usize;
            if self.pos < self.src.len() && self.src[self.pos] == b'.' {
                self.pos += 1;
                let frac_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                frac_digits = self.pos - frac_start;
                if frac_digits == 0 {
                    return Err(ParseError::Syntax {
                        position: self.pos,
                        message: "expected digits after decimal point".into(),
                    });
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let digits: String = text.chars().filter(|c| *c != '.').collect();
            let numer: BigInt = digits.parse().unwrap();
            let denom = num::pow::pow(BigInt::from(10), frac_digits);
            return Ok((start, Tok::Number(Rational::new(numer, denom))));
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric())
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok((start, Tok::Ident(text.to_string())));
        }
        Err(ParseError::Syntax {
            position: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].1
    }

    fn peek_pos(&self) -> usize {
        self.tokens[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].1.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                position: self.peek_pos(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expression::sum(terms))
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    factors.push(self.factor()?.recip());
                }
                _ => break,
            }
        }
        Ok(Expression::product(factors))
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            let caret_pos = self.peek_pos();
            self.bump();
            let exp_expr = self.factor()?;
            match exp_expr {
                Expression::Rational(q) => Ok(Expression::pow(base, q)),
                _ => Err(ParseError::NonRationalExponent {
                    position: caret_pos,
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expression, ParseError> {
        let pos = self.peek_pos();
        match self.bump() {
            Tok::Number(q) => Ok(Expression::Rational(q)),
            Tok::Minus => Ok(self.factor()?.neg()),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    match name.as_str() {
                        "sqrt" => Ok(Expression::sqrt(arg)),
                        "exp" => Ok(Expression::exp(arg)),
                        "log" => Ok(Expression::log(arg)),
                        _ => Err(ParseError::UnknownFunction {
                            position: pos,
                            name,
                        }),
                    }
                } else {
                    Ok(Expression::symbol(name.as_str()))
                }
            }
            _ => Err(ParseError::Syntax {
                position: pos,
                message: "expected a number, symbol, function call or `(`".into(),
            }),
        }
    }
}

/// Parses the grammar above into a normalised [`Expression`].
pub fn parse_expression(text: &str) -> Result<Expression, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (pos, tok) = lexer.next_token()?;
        let end = tok == Tok::Eof;
        tokens.push((pos, tok));
        if end {
            break;
        }
    }
    let mut p = Parser { tokens, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(ParseError::Syntax {
            position: p.peek_pos(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;

    fn p(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    fn sym(s: &str) -> Expression {
        Expression::symbol(s)
    }

    #[test]
    fn parses_sums_and_products() {
        let e = p("y^3 + 3*y*p");
        let want = sym("y").powi(3) + Expression::integer(3) * sym("y") * sym("p");
        assert_eq!(e, want);
    }

    #[test]
    fn parses_division_as_negative_power() {
        let e = p("k1/y");
        let want = sym("k1") * sym("y").powi(-1);
        assert_eq!(e, want);
    }

    #[test]
    fn folds_rational_literals() {
        assert_eq!(p("2/4"), Expression::rational(1, 2));
        assert_eq!(p("0.25"), Expression::rational(1, 4));
    }

    #[test]
    fn caret_binds_tighter_than_star_and_is_right_associative() {
        let e = p("2*x^3");
        assert_eq!(e, Expression::integer(2) * sym("x").powi(3));
        // x^3^2 = x^(3^2) = x^9
        assert_eq!(p("x^3^2"), sym("x").powi(9));
        // -x^2 = -(x^2)
        assert_eq!(p("-x^2"), -sym("x").powi(2));
    }

    #[test]
    fn parses_functions() {
        assert_eq!(p("sqrt(x)"), Expression::sqrt(sym("x")));
        assert_eq!(p("exp(2*x)"), Expression::exp(Expression::integer(2) * sym("x")));
        assert_eq!(p("log(x)"), Expression::log(sym("x")));
    }

    #[test]
    fn rejects_unknown_functions_with_position() {
        let err = parse_expression("2 + sin(x)").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownFunction {
                position: 4,
                name: "sin".into()
            }
        );
    }

    #[test]
    fn rejects_syntax_errors_with_position() {
        let err = parse_expression("x + ").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { position: 4, .. }));
        let err = parse_expression("x y").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { position: 2, .. }));
    }

    #[test]
    fn rejects_symbolic_exponents() {
        let err = parse_expression("2^x").unwrap_err();
        assert!(matches!(err, ParseError::NonRationalExponent { position: 1 }));
    }

    #[test]
    fn fractional_exponents_parse() {
        assert_eq!(p("x^(1/2)"), Expression::sqrt(sym("x")));
        assert_eq!(p("x^-2"), sym("x").powi(-2));
    }
}
