//! Arithmetic expressions in one free variable.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right-associative
//! atom    := number | 'pi' | VAR | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | tanh | cosh | sinh | sqrt
//! ```
//!
//! `^` binds tighter than unary minus, so `-r^2` is `-(r^2)` and `r^-1` is
//! `r^(-1)`. Numbers accept an optional fraction and decimal exponent
//! (`2`, `0.5`, `.5`, `1e-3`). The free variable name is fixed at parse time.

use std::fmt;

use super::jet::Jet;
use super::ProfileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Tanh,
    Cosh,
    Sinh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Log, Func::Tanh, Func::Cosh, Func::Sinh, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree node. Numeric literals are never negative; negation is
/// always an explicit [`Node::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    Var,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(op, ..) => op.precedence(),
            Node::Neg(_) => PREC_NEG,
            _ => PREC_ATOM,
        }
    }

    /// True when the subtree does not mention the free variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Node::Num(_) | Node::Pi => true,
            Node::Var => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn write(&self, var: &str, out: &mut String) {
        match self {
            Node::Num(x) => out.push_str(&format!("{x}")),
            Node::Pi => out.push_str("pi"),
            Node::Var => out.push_str(var),
            Node::Neg(a) => {
                out.push('-');
                a.write_wrapped(var, a.precedence() < PREC_NEG, out);
            }
            Node::Call(func, a) => {
                out.push_str(func.name());
                out.push('(');
                a.write(var, out);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                let (left_paren, right_paren) = match op {
                    // exponent is parsed as a unary operand
                    BinOp::Pow => (a.precedence() <= p, b.precedence() < PREC_NEG),
                    _ => (a.precedence() < p, b.precedence() <= p),
                };
                a.write_wrapped(var, left_paren, out);
                out.push(op.symbol());
                b.write_wrapped(var, right_paren, out);
            }
        }
    }

    fn write_wrapped(&self, var: &str, paren: bool, out: &mut String) {
        if paren {
            out.push('(');
            self.write(var, out);
            out.push(')');
        } else {
            self.write(var, out);
        }
    }

    pub(crate) fn eval(&self, t: f64, var: &str) -> Result<Jet, ProfileError> {
        let fail = |kind: &'static str, node: &Node, arg: f64| ProfileError::Eval {
            kind,
            expr: node.to_text(var),
            arg,
        };
        Ok(match self {
            Node::Num(x) => Jet::constant(*x),
            Node::Pi => Jet::constant(std::f64::consts::PI),
            Node::Var => Jet::variable(t),
            Node::Neg(a) => -a.eval(t, var)?,
            Node::Call(func, a) => {
                let x = a.eval(t, var)?;
                match func {
                    Func::Exp => x.exp(),
                    Func::Tanh => x.tanh(),
                    Func::Cosh => x.cosh(),
                    Func::Sinh => x.sinh(),
                    Func::Log if x.value <= 0.0 => return Err(fail("log of non-positive", self, t)),
                    Func::Log => x.ln(),
                    Func::Sqrt if x.value < 0.0 => return Err(fail("sqrt of negative", self, t)),
                    Func::Sqrt if x.value == 0.0 => {
                        return Err(fail("sqrt not differentiable at zero", self, t))
                    }
                    Func::Sqrt => x.sqrt(),
                }
            }
            Node::Binary(op, a, b) => {
                let x = a.eval(t, var)?;
                match op {
                    BinOp::Add => x + b.eval(t, var)?,
                    BinOp::Sub => x - b.eval(t, var)?,
                    BinOp::Mul => x * b.eval(t, var)?,
                    BinOp::Div => {
                        let y = b.eval(t, var)?;
                        if y.value == 0.0 {
                            return Err(fail("division by zero", self, t));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let y = b.eval(t, var)?;
                        if b.is_constant() {
                            let p = y.value;
                            if p.fract() == 0.0 && p.abs() < f64::from(i32::MAX) {
                                if x.value == 0.0 && p < 0.0 {
                                    return Err(fail("division by zero", self, t));
                                }
                                x.powi(p as i32)
                            } else if x.value > 0.0 {
                                x.powf(p)
                            } else {
                                return Err(fail("non-integer power of non-positive base", self, t));
                            }
                        } else if x.value > 0.0 {
                            (y * x.ln()).exp()
                        } else {
                            return Err(fail("variable power of non-positive base", self, t));
                        }
                    }
                }
            }
        })
    }

    fn to_text(&self, var: &str) -> String {
        let mut s = String::new();
        self.write(var, &mut s);
        s
    }
}

/// A parsed expression together with the name of its free variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionAst {
    pub root: Node,
    pub var: String,
}

impl ExpressionAst {
    pub fn parse(text: &str, var: &str) -> Result<Self, ProfileError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, var };
        let root = p.expr()?;
        match p.peek() {
            None => Ok(Self { root, var: var.to_string() }),
            Some(tok) => Err(ProfileError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", tok.kind.describe()),
            }),
        }
    }

    /// Evaluates the second-order jet at `t` without any domain check.
    pub fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        self.root.eval(t, &self.var)
    }
}

impl fmt::Display for ExpressionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root.to_text(&self.var))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(x) => format!("number {x}"),
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Op(c) => format!("'{c}'"),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ProfileError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // decimal exponent: e[+-]digits
            if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    while j < chars.len() && chars[j].1.is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
            let lit = &text[pos..end];
            let value: f64 = lit.parse().map_err(|_| ProfileError::Syntax {
                pos,
                msg: format!("malformed number '{lit}'"),
            })?;
            out.push(Token { kind: TokenKind::Num(value), pos });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
            out.push(Token { kind: TokenKind::Ident(text[pos..end].to_string()), pos });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            _ => {
                return Err(ProfileError::Syntax {
                    pos,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push(Token { kind, pos });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_pos(&self) -> usize {
        // position just past the last token, used for "unexpected end" errors
        self.tokens.last().map_or(0, |t| {
            t.pos
                + match &t.kind {
                    TokenKind::Ident(s) => s.len(),
                    _ => 1,
                }
        })
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokenKind::Op(c), .. }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node, ProfileError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ProfileError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ProfileError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ProfileError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ProfileError> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(ProfileError::Syntax {
                pos: self.end_pos(),
                msg: "unexpected end of expression".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(x) => Ok(Node::Num(x)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(tok.pos)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if name == self.var {
                    return Ok(Node::Var);
                }
                if let Some(func) = Func::from_name(&name) {
                    match self.peek() {
                        Some(Token { kind: TokenKind::LParen, pos }) => {
                            let open = *pos;
                            self.pos += 1;
                            let arg = self.expr()?;
                            self.expect_rparen(open)?;
                            return Ok(Node::Call(func, Box::new(arg)));
                        }
                        _ => {
                            return Err(ProfileError::Syntax {
                                pos: tok.pos + name.len(),
                                msg: format!("expected '(' after function '{name}'"),
                            })
                        }
                    }
                }
                if name == "pi" {
                    return Ok(Node::Pi);
                }
                Err(ProfileError::UnknownIdentifier { name, pos: tok.pos })
            }
            other => Err(ProfileError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ProfileError> {
        match self.peek() {
            Some(Token { kind: TokenKind::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(ProfileError::Syntax {
                pos: tok.pos,
                msg: format!("expected ')' to close '(' at {open}, found {}", tok.kind.describe()),
            }),
            None => Err(ProfileError::Syntax {
                pos: self.end_pos(),
                msg: format!("unclosed '(' at {open}"),
            }),
        }
    }
}
