//! Small complex-valued expression language for user-supplied Gauss maps.
//!
//! Grammar (usual precedence, `^` right-associative, binding tighter than
//! unary minus):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'u' | 'v' | 'i' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | atan | sinh | cosh | tanh | exp | ln
//! ```

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {ch:?} at offset {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected {found} at offset {pos}, expected {expected}")]
    Unexpected {
        found: String,
        expected: &'static str,
        pos: usize,
    },
    #[error("unknown identifier {name:?} at offset {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("invalid number {text:?} at offset {pos}")]
    BadNumber { text: String, pos: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Atan => z.atan(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Tanh => z.tanh(),
            Func::Exp => z.exp(),
            Func::Ln => z.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    U,
    V,
    I,
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some((tok, pos)) => Err(ExprError::Unexpected {
                found: tok.to_string(),
                expected: "end of input",
                pos,
            }),
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> Complex64 {
        match self {
            Expr::Num(x) => Complex64::new(*x, 0.0),
            Expr::U => Complex64::new(u, 0.0),
            Expr::V => Complex64::new(v, 0.0),
            Expr::I => Complex64::i(),
            Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Neg(a) => -a.eval(u, v),
            Expr::Call(f, a) => f.apply(a.eval(u, v)),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(u, v), b.eval(u, v));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => pow(x, y),
                }
            }
        }
    }
}

/// Integer real exponents go through repeated multiplication so that
/// polynomials stay exact on the real axis.
fn pow(base: Complex64, exp: Complex64) -> Complex64 {
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= i32::MAX as f64 {
        base.powi(exp.re as i32)
    } else {
        base.powc(exp)
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::U => write!(f, "u"),
            Expr::V => write!(f, "v"),
            Expr::I => write!(f, "i"),
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(x) => write!(f, "number {x}"),
            Token::Ident(s) => write!(f, "identifier {s:?}"),
            Token::Op(c) => write!(f, "{c:?}"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (pos, ch) = chars[k];
        if ch.is_whitespace() {
            k += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                k += 1;
            }
            // exponent part: 1e-3, 2.5E+4
            if k < chars.len() && matches!(chars[k].1, 'e' | 'E') {
                let mut m = k + 1;
                if m < chars.len() && matches!(chars[m].1, '+' | '-') {
                    m += 1;
                }
                if m < chars.len() && chars[m].1.is_ascii_digit() {
                    k = m;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let end = chars.get(k).map_or(src.len(), |c| c.0);
            let text = &src[pos..end];
            let x = text.parse::<f64>().map_err(|_| ExprError::BadNumber {
                text: text.to_string(),
                pos,
            })?;
            out.push((Token::Num(x), chars[start].0));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while k < chars.len() && (chars[k].1.is_ascii_alphanumeric() || chars[k].1 == '_') {
                k += 1;
            }
            let end = chars.get(k).map_or(src.len(), |c| c.0);
            out.push((Token::Ident(src[pos..end].to_string()), pos));
        } else {
            let tok = match ch {
                '+' | '-' | '*' | '/' | '^' => Token::Op(ch),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => return Err(ExprError::UnexpectedChar { ch, pos }),
            };
            out.push((tok, pos));
            k += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(&Token, usize)> {
        self.tokens.get(self.pos).map(|(t, p)| (t, *p))
    }

    fn end_pos(&self) -> usize {
        self.tokens.last().map_or(0, |(_, p)| p + 1)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some((Token::Op(c), _)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Some((Token::RParen, _)) => {
                self.pos += 1;
                Ok(())
            }
            Some((tok, pos)) => Err(ExprError::Unexpected {
                found: tok.to_string(),
                expected: "')'",
                pos,
            }),
            None => Err(ExprError::Unexpected {
                found: "end of input".into(),
                expected: "')'",
                pos: self.end_pos(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some((tok, pos)) = self.peek() else {
            return Err(ExprError::Unexpected {
                found: "end of input".into(),
                expected: "an operand",
                pos: self.end_pos(),
            });
        };
        let tok = tok.clone();
        self.pos += 1;
        match tok {
            Token::Num(x) => Ok(Expr::Num(x)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "u" => Ok(Expr::U),
                "v" => Ok(Expr::V),
                "i" => Ok(Expr::I),
                "pi" => Ok(Expr::Pi),
                _ => {
                    let func = Func::from_name(&name)
                        .ok_or(ExprError::UnknownIdent { name, pos })?;
                    match self.peek() {
                        Some((Token::LParen, _)) => self.pos += 1,
                        Some((tok, pos)) => {
                            return Err(ExprError::Unexpected {
                                found: tok.to_string(),
                                expected: "'(' after function name",
                                pos,
                            })
                        }
                        None => {
                            return Err(ExprError::Unexpected {
                                found: "end of input".into(),
                                expected: "'(' after function name",
                                pos: self.end_pos(),
                            })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            other => Err(ExprError::Unexpected {
                found: other.to_string(),
                expected: "an operand",
                pos,
            }),
        }
    }
}
