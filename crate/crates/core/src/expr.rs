//! Utility and complexity expressions.
//!
//! ```text
//! expr    := "if" expr "then" expr "else" expr | or
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := sum (("==" | "!=" | "<" | "<=" | ">" | ">=") sum)?
//! sum     := term (("+" | "-") term)*
//! term    := unary ("*" unary)*
//! unary   := "-" unary | atom
//! atom    := INT ("/" INT)? | STRING | "true" | "false" | VAR
//!          | "isBot" "(" expr ")" | "rot" "(" expr ")" | "(" expr ")"
//! ```
//!
//! `STRING` is a double-quoted word such as `"0"` or `"101"`. Variables depend
//! on the [`Scope`]:
//!
//! * utility scope: `t0` (nature's type), `t1..tm` (types), `a1..am`
//!   (actions, possibly BOT), `c1..cm` (complexities), and in mediated games
//!   `bitsSent1..bitsSentm`;
//! * complexity scope: `steps`, `coinBits`, `inputBits`, `outputLen`,
//!   `stateCount`, `bitsSent` (numbers) and `randomized` (boolean).
//!
//! `rot(x)` maps `"0" -> "1" -> "2" -> "0"` and leaves every other word (and
//! BOT) unchanged. Expressions are type-checked when parsed, so evaluation of
//! a parsed expression cannot fail.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::bits::Action;
use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Steps,
    CoinBits,
    InputBits,
    OutputLen,
    StateCount,
    BitsSent,
    Randomized,
}

impl Metric {
    const ALL: [(Metric, &'static str); 7] = [
        (Metric::Steps, "steps"),
        (Metric::CoinBits, "coinBits"),
        (Metric::InputBits, "inputBits"),
        (Metric::OutputLen, "outputLen"),
        (Metric::StateCount, "stateCount"),
        (Metric::BitsSent, "bitsSent"),
        (Metric::Randomized, "randomized"),
    ];

    fn name(self) -> &'static str {
        Metric::ALL.iter().find(|(m, _)| *m == self).expect("listed").1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// `t0` is nature's type, `ti` player i's.
    Type(usize),
    Action(usize),
    Cost(usize),
    BitsSent(usize),
    Metric(Metric),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Type(i) => write!(f, "t{i}"),
            Var::Action(i) => write!(f, "a{i}"),
            Var::Cost(i) => write!(f, "c{i}"),
            Var::BitsSent(i) => write!(f, "bitsSent{i}"),
            Var::Metric(m) => f.write_str(m.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Q),
    Word(String),
    Bool(bool),
    Var(Var),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    IsBot(Box<Expr>),
    Rot(Box<Expr>),
}

/// Prints fully parenthesized; `parse(print(e)) == e` for parsed expressions.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(q) => write!(f, "{q}"),
            Expr::Word(w) => write!(f, "\"{w}\""),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Not(e) => write!(f, "not ({e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::If(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
            Expr::IsBot(e) => write!(f, "isBot({e})"),
            Expr::Rot(e) => write!(f, "rot({e})"),
        }
    }
}

/// Which variables an expression may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Utility { players: usize, mediated: bool },
    Complexity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Num,
    Word,
    Bool,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(String),
    Str(String),
    Ident(String),
    Sym(&'static str),
}

const SYMBOLS: [&str; 13] = ["==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "(", ")", ","];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Int(chars[start..i].iter().collect()), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if c == '"' {
            let start = i;
            i += 1;
            let word_start = i;
            while i < chars.len() && chars[i] != '"' {
                if !chars[i].is_ascii_alphanumeric() {
                    return Err(Error::Parse {
                        position: i,
                        message: format!("{:?} is not allowed in a word literal", chars[i]),
                    });
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(Error::Parse {
                    position: start,
                    message: "unterminated string".into(),
                });
            }
            out.push((Tok::Str(chars[word_start..i].iter().collect()), start));
            i += 1;
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push((Tok::Sym(s), i));
                    i += s.len();
                }
                None => {
                    return Err(Error::Parse {
                        position: i,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    scope: Scope,
}

const KEYWORDS: [&str; 10] = ["if", "then", "else", "and", "or", "not", "true", "false", "isBot", "rot"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.here(),
            message: message.into(),
        })
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(t)) if *t == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(t)) if t == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)));
        }
        self.or()
    }

    fn or(&mut self) -> Result<Expr> {
        let mut lhs = self.and()?;
        while self.eat_kw("or") {
            let rhs = self.and()?;
            lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut lhs = self.not()?;
        while self.eat_kw("and") {
            let rhs = self.not()?;
            lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        const OPS: [(&str, BinOp); 6] = [
            ("==", BinOp::Eq),
            ("!=", BinOp::Ne),
            ("<=", BinOp::Le),
            (">=", BinOp::Ge),
            ("<", BinOp::Lt),
            (">", BinOp::Gt),
        ];
        for (s, op) in OPS {
            if self.eat_sym(s) {
                let rhs = self.sum()?;
                return Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_sym("*") {
            let rhs = self.unary()?;
            lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym("-") {
            return Ok(match self.unary()? {
                Expr::Num(q) => Expr::Num(-q),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.atom()
    }

    fn int(&mut self) -> Result<Q> {
        match self.peek().cloned() {
            Some(Tok::Int(digits)) => {
                self.pos += 1;
                Ok(Q::from_integer(digits.parse().expect("lexed digits")))
            }
            _ => self.err("expected an integer"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(_)) => {
                let num = self.int()?;
                if self.eat_sym("/") {
                    let den = self.int()?;
                    if den.is_zero() {
                        return Err(Error::Parse {
                            position: start,
                            message: "zero denominator".into(),
                        });
                    }
                    return Ok(Expr::Num(num / den));
                }
                Ok(Expr::Num(num))
            }
            Some(Tok::Str(w)) => {
                self.pos += 1;
                Ok(Expr::Word(w))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => Ok(Expr::Bool(true)),
                    "false" => Ok(Expr::Bool(false)),
                    "isBot" | "rot" => {
                        self.expect_sym("(")?;
                        let arg = Box::new(self.expr()?);
                        self.expect_sym(")")?;
                        Ok(if name == "rot" { Expr::Rot(arg) } else { Expr::IsBot(arg) })
                    }
                    kw if KEYWORDS.contains(&kw) => {
                        self.pos -= 1;
                        self.err(format!("unexpected keyword `{kw}`"))
                    }
                    _ => self.variable(&name, start).map(Expr::Var),
                }
            }
            Some(Tok::Sym(s)) => self.err(format!("unexpected `{s}`")),
            None => self.err("unexpected end of input"),
        }
    }

    fn variable(&self, name: &str, position: usize) -> Result<Var> {
        let unknown = || Error::UnknownVariable {
            name: name.to_string(),
            position,
        };
        match self.scope {
            Scope::Complexity => Metric::ALL
                .iter()
                .find(|(_, n)| *n == name)
                .map(|(m, _)| Var::Metric(*m))
                .ok_or_else(unknown),
            Scope::Utility { players, mediated } => {
                let indexed = |prefix: &str| -> Option<usize> {
                    let digits = name.strip_prefix(prefix)?;
                    if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
                        return None;
                    }
                    digits.parse().ok()
                };
                let player = |i: usize| (1..=players).contains(&i);
                if let Some(i) = indexed("bitsSent") {
                    return if mediated && player(i) { Ok(Var::BitsSent(i)) } else { Err(unknown()) };
                }
                if let Some(i) = indexed("t") {
                    return if i == 0 || player(i) { Ok(Var::Type(i)) } else { Err(unknown()) };
                }
                if let Some(i) = indexed("a").filter(|&i| player(i)) {
                    return Ok(Var::Action(i));
                }
                if let Some(i) = indexed("c").filter(|&i| player(i)) {
                    return Ok(Var::Cost(i));
                }
                Err(unknown())
            }
        }
    }
}

fn var_type(v: &Var) -> Ty {
    match v {
        Var::Type(_) | Var::Action(_) => Ty::Word,
        Var::Metric(Metric::Randomized) => Ty::Bool,
        _ => Ty::Num,
    }
}

fn type_of(e: &Expr) -> std::result::Result<Ty, String> {
    let want = |e: &Expr, ty: Ty| -> std::result::Result<(), String> {
        let got = type_of(e)?;
        if got == ty {
            Ok(())
        } else {
            Err(format!("expected {ty:?}, found {got:?} in `{e}`"))
        }
    };
    Ok(match e {
        Expr::Num(_) => Ty::Num,
        Expr::Word(_) => Ty::Word,
        Expr::Bool(_) => Ty::Bool,
        Expr::Var(v) => var_type(v),
        Expr::Neg(x) => {
            want(x, Ty::Num)?;
            Ty::Num
        }
        Expr::Not(x) => {
            want(x, Ty::Bool)?;
            Ty::Bool
        }
        Expr::IsBot(x) => {
            want(x, Ty::Word)?;
            Ty::Bool
        }
        Expr::Rot(x) => {
            want(x, Ty::Word)?;
            Ty::Word
        }
        Expr::If(c, t, f) => {
            want(c, Ty::Bool)?;
            let ty = type_of(t)?;
            want(f, ty)?;
            ty
        }
        Expr::Bin(op, l, r) => match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                want(l, Ty::Num)?;
                want(r, Ty::Num)?;
                Ty::Num
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                want(l, Ty::Num)?;
                want(r, Ty::Num)?;
                Ty::Bool
            }
            BinOp::Eq | BinOp::Ne => {
                let ty = type_of(l)?;
                want(r, ty)?;
                Ty::Bool
            }
            BinOp::And | BinOp::Or => {
                want(l, Ty::Bool)?;
                want(r, Ty::Bool)?;
                Ty::Bool
            }
        },
    })
}

/// Parses and type-checks a numeric expression in `scope`.
pub fn parse_expression(text: &str, scope: Scope) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        scope,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    match type_of(&e) {
        Ok(Ty::Num) => Ok(e),
        Ok(ty) => Err(Error::Parse {
            position: 0,
            message: format!("expression has type {ty:?}, expected a number"),
        }),
        Err(message) => Err(Error::Parse { position: 0, message }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Num(Q),
    Word(Action),
    Bool(bool),
}

/// Supplies variable values during evaluation.
pub trait Env {
    fn get(&self, v: &Var) -> Value;
}

pub fn rot(a: &Action) -> Action {
    match a.as_word() {
        Some("0") => Action::word("1"),
        Some("1") => Action::word("2"),
        Some("2") => Action::word("0"),
        _ => a.clone(),
    }
}

impl Expr {
    /// Evaluates a type-checked expression.
    pub fn eval(&self, env: &dyn Env) -> Value {
        match self {
            Expr::Num(q) => Value::Num(q.clone()),
            Expr::Word(w) => Value::Word(Action::word(w.clone())),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(v) => env.get(v),
            Expr::Neg(x) => Value::Num(-x.num(env)),
            Expr::Not(x) => Value::Bool(!x.bool(env)),
            Expr::IsBot(x) => Value::Bool(x.word(env).is_bot()),
            Expr::Rot(x) => Value::Word(rot(&x.word(env))),
            Expr::If(c, t, f) => {
                if c.bool(env) {
                    t.eval(env)
                } else {
                    f.eval(env)
                }
            }
            Expr::Bin(op, l, r) => match op {
                BinOp::Add => Value::Num(l.num(env) + r.num(env)),
                BinOp::Sub => Value::Num(l.num(env) - r.num(env)),
                BinOp::Mul => Value::Num(l.num(env) * r.num(env)),
                BinOp::Lt => Value::Bool(l.num(env) < r.num(env)),
                BinOp::Le => Value::Bool(l.num(env) <= r.num(env)),
                BinOp::Gt => Value::Bool(l.num(env) > r.num(env)),
                BinOp::Ge => Value::Bool(l.num(env) >= r.num(env)),
                BinOp::Eq => Value::Bool(l.eval(env) == r.eval(env)),
                BinOp::Ne => Value::Bool(l.eval(env) != r.eval(env)),
                BinOp::And => Value::Bool(l.bool(env) && r.bool(env)),
                BinOp::Or => Value::Bool(l.bool(env) || r.bool(env)),
            },
        }
    }

    pub fn num(&self, env: &dyn Env) -> Q {
        match self.eval(env) {
            Value::Num(q) => q,
            other => panic!("type-checked numeric expression produced {other:?}"),
        }
    }

    fn bool(&self, env: &dyn Env) -> bool {
        match self.eval(env) {
            Value::Bool(b) => b,
            other => panic!("type-checked boolean expression produced {other:?}"),
        }
    }

    fn word(&self, env: &dyn Env) -> Action {
        match self.eval(env) {
            Value::Word(a) => a,
            other => panic!("type-checked word expression produced {other:?}"),
        }
    }

    /// Variables mentioned, in first-occurrence order.
    pub fn variables(&self) -> Vec<Var> {
        fn walk(e: &Expr, out: &mut Vec<Var>) {
            match e {
                Expr::Num(_) | Expr::Word(_) | Expr::Bool(_) => {}
                Expr::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v);
                    }
                }
                Expr::Neg(x) | Expr::Not(x) | Expr::IsBot(x) | Expr::Rot(x) => walk(x, out),
                Expr::Bin(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Expr::If(c, t, f) => {
                    walk(c, out);
                    walk(t, out);
                    walk(f, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Evaluates a complexity model, rejecting negative results.
    pub fn complexity(&self, env: &dyn Env) -> Result<Q> {
        let c = self.num(env);
        if c.is_negative() {
            return Err(Error::Eval {
                branch: format!("complexity `{self}`"),
                message: format!("negative complexity {c}"),
            });
        }
        Ok(c)
    }
}
