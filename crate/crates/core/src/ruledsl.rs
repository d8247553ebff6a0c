//! Hand-written classification rules.
//!
//! A rule is a Boolean expression over named features and character/word
//! counters:
//!
//! ```text
//! rule    := or ;
//! or      := and { "OR" and } ;
//! and     := not { "AND" not } ;
//! not     := "NOT" not | atom ;
//! atom    := "(" or ")" | countcmp | IDENT ;
//! countcmp:= COUNTER OPR INT ;
//! COUNTER := "punct_count" | "word_count" | "char_length" ;
//! OPR     := "<" | "<=" | ">" | ">=" | "==" ;
//! IDENT   := [a-z][a-z0-9_]* ;  INT := [0-9]+ ;
//! ```
//!
//! Keywords are case-insensitive. A [`RuleSet`] is an ordered list of
//! `condition => verdict` clauses with a default verdict; the first clause
//! whose condition holds decides.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label};
use crate::textfeat::{self, FeatureSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown feature {name:?}")]
    UnknownFeature { name: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleSetError {
    #[error("line {line}, column {column}: expected {expected}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
    },
    #[error("line {line}: expected `condition => spam|non-spam`")]
    MissingArrow { line: usize },
    #[error("line {line}: bad verdict {value:?} (expected spam or non-spam)")]
    BadVerdict { line: usize, value: String },
    #[error("line {line}: clause after the default line")]
    ClauseAfterDefault { line: usize },
    #[error("rule set has no `default => ...` line")]
    MissingDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counter {
    PunctCount,
    WordCount,
    CharLength,
}

impl Counter {
    pub fn keyword(self) -> &'static str {
        match self {
            Counter::PunctCount => "punct_count",
            Counter::WordCount => "word_count",
            Counter::CharLength => "char_length",
        }
    }

    fn from_keyword(word: &str) -> Option<Counter> {
        match word {
            "punct_count" => Some(Counter::PunctCount),
            "word_count" => Some(Counter::WordCount),
            "char_length" => Some(Counter::CharLength),
            _ => None,
        }
    }

    pub fn measure(self, text: &str) -> u64 {
        let n = match self {
            Counter::PunctCount => textfeat::punct_count(text),
            Counter::WordCount => textfeat::tokenize(text).len(),
            Counter::CharLength => text.chars().count(),
        };
        n as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }

    pub fn apply(self, lhs: u64, rhs: u64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RuleExpr {
    Pred {
        feature: String,
    },
    Not {
        child: Box<RuleExpr>,
    },
    And {
        left: Box<RuleExpr>,
        right: Box<RuleExpr>,
    },
    Or {
        left: Box<RuleExpr>,
        right: Box<RuleExpr>,
    },
    CountCmp {
        counter: Counter,
        op: CmpOp,
        bound: u64,
    },
}

impl RuleExpr {
    pub fn pred(name: &str) -> RuleExpr {
        RuleExpr::Pred {
            feature: name.to_string(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: RuleExpr) -> RuleExpr {
        RuleExpr::Not {
            child: Box::new(child),
        }
    }

    pub fn and(left: RuleExpr, right: RuleExpr) -> RuleExpr {
        RuleExpr::And {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn or(left: RuleExpr, right: RuleExpr) -> RuleExpr {
        RuleExpr::Or {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn count(counter: Counter, op: CmpOp, bound: u64) -> RuleExpr {
        RuleExpr::CountCmp { counter, op, bound }
    }

    /// Feature names referenced by the expression, in first-use order.
    pub fn feature_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            RuleExpr::Pred { feature } => {
                if !out.contains(&feature.as_str()) {
                    out.push(feature);
                }
            }
            RuleExpr::Not { child } => child.collect_names(out),
            RuleExpr::And { left, right } | RuleExpr::Or { left, right } => {
                left.collect_names(out);
                right.collect_names(out);
            }
            RuleExpr::CountCmp { .. } => {}
        }
    }

    /// Fails on the first feature name that `features` does not define.
    pub fn check(&self, features: &FeatureSet) -> Result<(), RuleError> {
        match self
            .feature_names()
            .into_iter()
            .find(|n| features.get(n).is_none())
        {
            Some(name) => Err(RuleError::UnknownFeature {
                name: name.to_string(),
            }),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, text: &str, features: &FeatureSet) -> Result<bool, RuleError> {
        self.check(features)?;
        Ok(self.eval_checked(text, features))
    }

    fn eval_checked(&self, text: &str, features: &FeatureSet) -> bool {
        match self {
            RuleExpr::Pred { feature } => features
                .get(feature)
                .expect("feature names checked before evaluation")
                .eval(text),
            RuleExpr::Not { child } => !child.eval_checked(text, features),
            RuleExpr::And { left, right } => {
                left.eval_checked(text, features) && right.eval_checked(text, features)
            }
            RuleExpr::Or { left, right } => {
                left.eval_checked(text, features) || right.eval_checked(text, features)
            }
            RuleExpr::CountCmp { counter, op, bound } => op.apply(counter.measure(text), *bound),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RuleExpr::Or { .. } => 1,
            RuleExpr::And { .. } => 2,
            RuleExpr::Not { .. } => 3,
            RuleExpr::Pred { .. } | RuleExpr::CountCmp { .. } => 4,
        }
    }

    /// Canonical source text; parsing it gives back the same expression.
    pub fn pretty_print(&self) -> String {
        self.to_string()
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &RuleExpr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        match self {
            RuleExpr::Pred { feature } => f.write_str(feature),
            RuleExpr::CountCmp { counter, op, bound } => {
                write!(f, "{} {} {}", counter.keyword(), op.symbol(), bound)
            }
            RuleExpr::Not { child } => {
                f.write_str("NOT ")?;
                write_operand(f, child, child.precedence() < prec)
            }
            RuleExpr::And { left, right } | RuleExpr::Or { left, right } => {
                // Left-associative: a right operand of equal precedence needs parentheses.
                write_operand(f, left, left.precedence() < prec)?;
                f.write_str(if prec == 1 { " OR " } else { " AND " })?;
                write_operand(f, right, right.precedence() <= prec)
            }
        }
    }
}

pub fn pretty_print(expr: &RuleExpr) -> String {
    expr.pretty_print()
}

pub fn evaluate(expr: &RuleExpr, text: &str, features: &FeatureSet) -> Result<bool, RuleError> {
    expr.evaluate(text, features)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Ident(String),
    Counter(Counter),
    Op(CmpOp),
    Int(u64),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

fn syntax(position: usize, expected: &str) -> RuleError {
    RuleError::Syntax {
        position,
        expected: expected.to_string(),
    }
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
        }
    }

    fn peek_char(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn next_token(&mut self) -> Result<Token, RuleError> {
        while self.peek_char(0).is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek_char(0) else {
            return Ok(Token {
                kind: TokenKind::Eof,
                pos: start,
            });
        };
        let kind = match c {
            '(' => {
                self.pos += 1;
                TokenKind::LParen
            }
            ')' => {
                self.pos += 1;
                TokenKind::RParen
            }
            '<' | '>' => {
                let with_eq = self.peek_char(1) == Some('=');
                self.pos += 1 + with_eq as usize;
                TokenKind::Op(match (c, with_eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                })
            }
            '=' => {
                if self.peek_char(1) != Some('=') {
                    return Err(syntax(start, "'=='"));
                }
                self.pos += 2;
                TokenKind::Op(CmpOp::Eq)
            }
            c if c.is_ascii_digit() => {
                while self.peek_char(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let digits: String = self.chars[start..self.pos].iter().collect();
                let value = digits
                    .parse::<u64>()
                    .map_err(|_| syntax(start, "an integer that fits in 64 bits"))?;
                TokenKind::Int(value)
            }
            c if c.is_ascii_alphabetic() => {
                while self
                    .peek_char(0)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                if word.eq_ignore_ascii_case("not") {
                    TokenKind::Not
                } else if word.eq_ignore_ascii_case("and") {
                    TokenKind::And
                } else if word.eq_ignore_ascii_case("or") {
                    TokenKind::Or
                } else if let Some(counter) = Counter::from_keyword(&word) {
                    TokenKind::Counter(counter)
                } else if textfeat::is_valid_name(&word) {
                    TokenKind::Ident(word)
                } else {
                    return Err(syntax(start, "a lowercase feature name"));
                }
            }
            _ => return Err(syntax(start, "a feature name, counter, NOT or '('")),
        };
        Ok(Token { kind, pos: start })
    }
}

struct Parser {
    lexer: Lexer,
    lookahead: Token,
}

impl Parser {
    fn new(source: &str) -> Result<Self, RuleError> {
        let mut lexer = Lexer::new(source);
        let lookahead = lexer.next_token()?;
        Ok(Parser { lexer, lookahead })
    }

    fn advance(&mut self) -> Result<Token, RuleError> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn parse_or(&mut self) -> Result<RuleExpr, RuleError> {
        let mut left = self.parse_and()?;
        while self.lookahead.kind == TokenKind::Or {
            self.advance()?;
            left = RuleExpr::or(left, self.parse_and()?);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<RuleExpr, RuleError> {
        let mut left = self.parse_not()?;
        while self.lookahead.kind == TokenKind::And {
            self.advance()?;
            left = RuleExpr::and(left, self.parse_not()?);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<RuleExpr, RuleError> {
        if self.lookahead.kind == TokenKind::Not {
            self.advance()?;
            return Ok(RuleExpr::not(self.parse_not()?));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<RuleExpr, RuleError> {
        let pos = self.lookahead.pos;
        match self.lookahead.kind.clone() {
            TokenKind::LParen => {
                self.advance()?;
                let inner = self.parse_or()?;
                if self.lookahead.kind != TokenKind::RParen {
                    return Err(syntax(self.lookahead.pos, "')', AND or OR"));
                }
                self.advance()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.advance()?;
                Ok(RuleExpr::Pred { feature: name })
            }
            TokenKind::Counter(counter) => {
                self.advance()?;
                let TokenKind::Op(op) = self.lookahead.kind else {
                    return Err(syntax(self.lookahead.pos, "a comparison operator"));
                };
                self.advance()?;
                let TokenKind::Int(bound) = self.lookahead.kind else {
                    return Err(syntax(self.lookahead.pos, "an integer"));
                };
                self.advance()?;
                Ok(RuleExpr::count(counter, op, bound))
            }
            _ => Err(syntax(pos, "a feature name, counter, NOT or '('")),
        }
    }
}

/// Parses one rule expression. Error positions are 0-based character offsets.
pub fn parse_rule(source: &str) -> Result<RuleExpr, RuleError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.parse_or()?;
    if parser.lookahead.kind != TokenKind::Eof {
        return Err(syntax(parser.lookahead.pos, "AND, OR or end of input"));
    }
    Ok(expr)
}

impl std::str::FromStr for RuleExpr {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rule(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub condition: RuleExpr,
    pub verdict: Label,
}

/// Ordered `condition => verdict` clauses with a fallback verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub clauses: Vec<Clause>,
    pub default: Label,
}

impl RuleSet {
    /// A rule set with no clauses: every subject gets `default`.
    pub fn null(default: Label) -> RuleSet {
        RuleSet {
            clauses: Vec::new(),
            default,
        }
    }

    /// Parses the line-oriented rule file format. `#` starts a comment; blank
    /// lines are skipped; the last rule line must be `default => ...`.
    pub fn parse(source: &str) -> Result<RuleSet, RuleSetError> {
        let mut clauses = Vec::new();
        let mut default = None;
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or_default();
            if content.trim().is_empty() {
                continue;
            }
            if default.is_some() {
                return Err(RuleSetError::ClauseAfterDefault { line });
            }
            let (condition, verdict) = content
                .rsplit_once("=>")
                .ok_or(RuleSetError::MissingArrow { line })?;
            let verdict = verdict
                .trim()
                .parse::<Label>()
                .map_err(|value| RuleSetError::BadVerdict { line, value })?;
            if condition.trim().eq_ignore_ascii_case("default") {
                default = Some(verdict);
                continue;
            }
            let condition = parse_rule(condition).map_err(|e| match e {
                RuleError::Syntax { position, expected } => RuleSetError::Syntax {
                    line,
                    column: position,
                    expected,
                },
                RuleError::UnknownFeature { .. } => unreachable!("parsing never resolves features"),
            })?;
            clauses.push(Clause { condition, verdict });
        }
        Ok(RuleSet {
            clauses,
            default: default.ok_or(RuleSetError::MissingDefault)?,
        })
    }

    pub fn check(&self, features: &FeatureSet) -> Result<(), RuleError> {
        self.clauses
            .iter()
            .try_for_each(|c| c.condition.check(features))
    }

    /// Index of the first clause whose condition holds, if any.
    pub fn matching_clause(&self, text: &str, features: &FeatureSet) -> Result<Option<usize>, RuleError> {
        self.check(features)?;
        Ok(self.first_match(text, features))
    }

    fn first_match(&self, text: &str, features: &FeatureSet) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| c.condition.eval_checked(text, features))
    }

    pub fn classify(&self, text: &str, features: &FeatureSet) -> Result<Label, RuleError> {
        Ok(self
            .matching_clause(text, features)?
            .map_or(self.default, |i| self.clauses[i].verdict))
    }

    pub fn apply(&self, corpus: &Corpus, features: &FeatureSet) -> Result<Vec<Label>, RuleError> {
        self.check(features)?;
        Ok(corpus
            .iter()
            .map(|item| {
                self.first_match(&item.text, features)
                    .map_or(self.default, |i| self.clauses[i].verdict)
            })
            .collect())
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for clause in &self.clauses {
            writeln!(f, "{} => {}", clause.condition, clause.verdict)?;
        }
        writeln!(f, "default => {}", self.default)
    }
}

pub fn apply_ruleset(rules: &RuleSet, corpus: &Corpus, features: &FeatureSet) -> Result<Vec<Label>, RuleError> {
    rules.apply(corpus, features)
}
