//! Boolean decision functions over named subtasks.
//!
//! Grammar (keywords are case-insensitive, identifiers are not):
//!
//! ```text
//! expr    := and_expr ( OR and_expr )*
//! and_expr:= unary ( AND unary )*
//! unary   := NOT unary | primary
//! primary := IDENT | '(' expr ')'
//! ```
//!
//! Besides boolean evaluation, an expression compiles to a numeric form in
//! which `A AND B -> A*B`, `A OR B -> 1-(1-A)(1-B)` and `NOT A -> 1-A`. The
//! compiled tape evaluates that form and its exact partial derivatives with
//! one reverse sweep.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionExpr {
    /// Thresholded output of the subtask in this dataset column.
    Leaf(usize),
    Not(Box<DecisionExpr>),
    And(Box<DecisionExpr>, Box<DecisionExpr>),
    Or(Box<DecisionExpr>, Box<DecisionExpr>),
}

impl DecisionExpr {
    pub fn negate(e: DecisionExpr) -> Self {
        DecisionExpr::Not(Box::new(e))
    }

    pub fn and(a: DecisionExpr, b: DecisionExpr) -> Self {
        DecisionExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: DecisionExpr, b: DecisionExpr) -> Self {
        DecisionExpr::Or(Box::new(a), Box::new(b))
    }

    /// `s0 OR s1 OR ... OR s{n-1}`.
    pub fn or_chain(n: usize) -> Self {
        assert!(n > 0, "or_chain needs at least one subtask");
        (1..n).fold(DecisionExpr::Leaf(0), |acc, i| {
            DecisionExpr::or(acc, DecisionExpr::Leaf(i))
        })
    }

    /// `NOT s0 AND NOT s1 AND ... AND NOT s{n-1}`.
    pub fn not_and_chain(n: usize) -> Self {
        assert!(n > 0, "not_and_chain needs at least one subtask");
        (1..n).fold(DecisionExpr::negate(DecisionExpr::Leaf(0)), |acc, i| {
            DecisionExpr::and(acc, DecisionExpr::negate(DecisionExpr::Leaf(i)))
        })
    }

    /// Largest leaf index referenced.
    pub fn max_leaf(&self) -> usize {
        match self {
            DecisionExpr::Leaf(i) => *i,
            DecisionExpr::Not(a) => a.max_leaf(),
            DecisionExpr::And(a, b) | DecisionExpr::Or(a, b) => a.max_leaf().max(b.max_leaf()),
        }
    }

    /// Distinct subtask indices in ascending order.
    pub fn subtasks(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            DecisionExpr::Leaf(i) => out.push(*i),
            DecisionExpr::Not(a) => a.collect_leaves(out),
            DecisionExpr::And(a, b) | DecisionExpr::Or(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Standard boolean semantics. `bits` is indexed by subtask column.
    pub fn eval_boolean(&self, bits: &[bool]) -> bool {
        match self {
            DecisionExpr::Leaf(i) => bits[*i],
            DecisionExpr::Not(a) => !a.eval_boolean(bits),
            DecisionExpr::And(a, b) => a.eval_boolean(bits) && b.eval_boolean(bits),
            DecisionExpr::Or(a, b) => a.eval_boolean(bits) || b.eval_boolean(bits),
        }
    }

    /// Numeric value and `d value / d values[i]` for every subtask column.
    ///
    /// Repeated leaves accumulate their contributions.
    pub fn eval_numeric_with_partials(&self, values: &[f64]) -> (f64, Vec<f64>) {
        let compiled = CompiledExpr::compile(self);
        let local: Vec<f64> = compiled.leaves.iter().map(|&i| values[i]).collect();
        let mut scratch = compiled.scratch();
        let mut local_partials = vec![0.0; compiled.leaves.len()];
        let value = compiled.eval_with_partials(&local, &mut scratch, &mut local_partials);
        let mut partials = vec![0.0; values.len()];
        for (&i, &p) in compiled.leaves.iter().zip(&local_partials) {
            partials[i] += p;
        }
        (value, partials)
    }

    /// Renders the expression back to DSL text with minimal parentheses.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.render(names, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            DecisionExpr::Or(..) => 1,
            DecisionExpr::And(..) => 2,
            DecisionExpr::Not(_) => 3,
            DecisionExpr::Leaf(_) => 4,
        }
    }

    fn render(&self, names: &[String], out: &mut String) {
        let wrap = |child: &DecisionExpr, paren: bool, out: &mut String| {
            if paren {
                out.push('(');
            }
            child.render(names, out);
            if paren {
                out.push(')');
            }
        };
        match self {
            DecisionExpr::Leaf(i) => match names.get(*i) {
                Some(name) => out.push_str(name),
                None => {
                    out.push('s');
                    out.push_str(&i.to_string());
                }
            },
            DecisionExpr::Not(a) => {
                out.push_str("NOT ");
                wrap(a, a.precedence() < 3, out);
            }
            DecisionExpr::And(a, b) | DecisionExpr::Or(a, b) => {
                let p = self.precedence();
                wrap(a, a.precedence() < p, out);
                out.push_str(if p == 1 { " OR " } else { " AND " });
                wrap(b, b.precedence() <= p, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
}

/// Flattened post-order tape of a [`DecisionExpr`].
///
/// Inputs are addressed by *local* leaf slot; `leaves()[slot]` gives the
/// dataset column feeding that slot.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    leaves: Vec<usize>,
}

/// Reusable buffers for tape evaluation.
#[derive(Debug, Clone)]
pub struct TapeScratch {
    values: Vec<f64>,
    adjoints: Vec<f64>,
}

impl CompiledExpr {
    pub fn compile(expr: &DecisionExpr) -> Self {
        let leaves = expr.subtasks();
        let mut ops = Vec::new();
        Self::emit(expr, &leaves, &mut ops);
        Self { ops, leaves }
    }

    fn emit(expr: &DecisionExpr, leaves: &[usize], ops: &mut Vec<Op>) -> usize {
        let op = match expr {
            DecisionExpr::Leaf(i) => Op::Leaf(leaves.binary_search(i).expect("leaf collected")),
            DecisionExpr::Not(a) => Op::Not(Self::emit(a, leaves, ops)),
            DecisionExpr::And(a, b) => {
                let a = Self::emit(a, leaves, ops);
                Op::And(a, Self::emit(b, leaves, ops))
            }
            DecisionExpr::Or(a, b) => {
                let a = Self::emit(a, leaves, ops);
                Op::Or(a, Self::emit(b, leaves, ops))
            }
        };
        ops.push(op);
        ops.len() - 1
    }

    /// Dataset columns read by the expression, ascending.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn scratch(&self) -> TapeScratch {
        TapeScratch {
            values: vec![0.0; self.ops.len()],
            adjoints: vec![0.0; self.ops.len()],
        }
    }

    /// Forward evaluation of the numeric form.
    pub fn eval(&self, inputs: &[f64], scratch: &mut TapeScratch) -> f64 {
        let vals = &mut scratch.values;
        for (k, op) in self.ops.iter().enumerate() {
            vals[k] = match *op {
                Op::Leaf(l) => inputs[l],
                Op::Not(a) => 1.0 - vals[a],
                Op::And(a, b) => vals[a] * vals[b],
                Op::Or(a, b) => 1.0 - (1.0 - vals[a]) * (1.0 - vals[b]),
            };
        }
        vals[self.ops.len() - 1]
    }

    /// Forward value plus reverse-mode partials written into `partials`
    /// (one slot per local leaf, overwritten).
    pub fn eval_with_partials(
        &self,
        inputs: &[f64],
        scratch: &mut TapeScratch,
        partials: &mut [f64],
    ) -> f64 {
        let value = self.eval(inputs, scratch);
        let vals = &scratch.values;
        let adj = &mut scratch.adjoints;
        adj.fill(0.0);
        partials.fill(0.0);
        let last = self.ops.len() - 1;
        adj[last] = 1.0;
        for k in (0..self.ops.len()).rev() {
            let g = adj[k];
            if g == 0.0 {
                continue;
            }
            match self.ops[k] {
                Op::Leaf(l) => partials[l] += g,
                Op::Not(a) => adj[a] -= g,
                Op::And(a, b) => {
                    adj[a] += g * vals[b];
                    adj[b] += g * vals[a];
                }
                Op::Or(a, b) => {
                    adj[a] += g * (1.0 - vals[b]);
                    adj[b] += g * (1.0 - vals[a]);
                }
            }
        }
        value
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        if c.is_ascii_whitespace() {
            k += 1;
        } else if c == b'(' {
            out.push((k, Tok::LParen));
            k += 1;
        } else if c == b')' {
            out.push((k, Tok::RParen));
            k += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = k;
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            let word = &text[start..k];
            let tok = if word.eq_ignore_ascii_case("and") {
                Tok::And
            } else if word.eq_ignore_ascii_case("or") {
                Tok::Or
            } else if word.eq_ignore_ascii_case("not") {
                Tok::Not
            } else {
                Tok::Ident(word.to_string())
            };
            out.push((start, tok));
        } else {
            let ch = text[k..].chars().next().unwrap_or('?');
            return Err(Error::Syntax {
                position: k,
                expected: vec!["identifier", "NOT", "(", ")", "AND", "OR"],
                found: alloc::format!("character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn error(&self, expected: Vec<&'static str>) -> Error {
        let (position, found) = match self.tokens.get(self.pos) {
            Some((p, t)) => (*p, describe(t)),
            None => (self.end, "end of input".to_string()),
        };
        Error::Syntax {
            position,
            expected,
            found,
        }
    }

    fn expr(&mut self) -> Result<DecisionExpr> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = DecisionExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<DecisionExpr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = DecisionExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<DecisionExpr> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            return Ok(DecisionExpr::negate(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<DecisionExpr> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.names.iter().position(|n| *n == name) {
                    Some(i) => Ok(DecisionExpr::Leaf(i)),
                    None => Err(Error::UnknownSubtask(name)),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error(vec![")", "AND", "OR"]));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.error(vec!["identifier", "NOT", "("])),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => alloc::format!("identifier `{s}`"),
        Tok::And => "AND".to_string(),
        Tok::Or => "OR".to_string(),
        Tok::Not => "NOT".to_string(),
        Tok::LParen => "`(`".to_string(),
        Tok::RParen => "`)`".to_string(),
    }
}

/// Parses `text` and resolves every identifier to its index in `subtask_names`.
pub fn parse_and_bind<S: AsRef<str>>(text: &str, subtask_names: &[S]) -> Result<DecisionExpr> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(Error::EmptyExpression);
    }
    let names: Vec<String> = subtask_names
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect();
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        names: &names,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error(vec!["AND", "OR", "end of input"]));
    }
    Ok(expr)
}
