//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?            right associative, -x^2 = -(x^2)
//! atom    := number | 'x' | 'pi' | param | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | ln | abs | sign | sgn | tanh | sqrt | sinh | cosh | asinh
//! ```
//!
//! `sqrt`, `sinh`, `cosh` and `asinh` are expanded into the core node kinds.
//! Exponents must not depend on `x`.

use super::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => return self.number(),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", c as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self) -> Result<(Tok, usize)> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            while lx.pos < lx.bytes.len() && lx.bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                digits(self);
            } else {
                // `2exp` style: leave the `e` for the identifier lexer.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let at = self.pos();
            let exponent = self.unary()?;
            if exponent.depends_on_x() {
                return Err(Error::Syntax {
                    pos: at,
                    msg: "exponent must not depend on x".into(),
                });
            }
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
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
                    return apply_function(&name, arg, at);
                }
                match name.as_str() {
                    "x" => Ok(Expr::x()),
                    "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                    "inf" => Ok(Expr::constant(f64::INFINITY)),
                    "nan" => Ok(Expr::constant(f64::NAN)),
                    _ if self.params.contains(&name.as_str()) => Ok(Expr::param(&name)),
                    _ => Err(Error::UnknownIdentifier { name, pos: at }),
                }
            }
            Tok::End => Err(Error::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
            t => Err(Error::Syntax {
                pos: at,
                msg: format!("unexpected token {t:?}"),
            }),
        }
    }
}

fn apply_function(name: &str, arg: Expr, pos: usize) -> Result<Expr> {
    Ok(match name {
        "exp" => arg.exp(),
        "log" | "ln" => arg.log(),
        "abs" => arg.abs(),
        "sign" | "sgn" => arg.sign(),
        "tanh" => arg.tanh(),
        "sqrt" => arg.sqrt(),
        "sinh" => (arg.exp() - (-arg).exp()) / 2.0,
        "cosh" => (arg.exp() + (-arg).exp()) / 2.0,
        "asinh" => (arg.clone() + (arg.powi(2) + 1.0).sqrt()).log(),
        _ => {
            return Err(Error::UnknownFunction {
                name: name.to_string(),
                pos,
            })
        }
    })
}

/// Parses `text`, treating the identifiers in `params` as symbolic parameters.
pub fn parse(text: &str, params: &[&str]) -> Result<Expr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}
