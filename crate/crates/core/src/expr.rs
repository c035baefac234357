//! A small expression language for user-defined happiness functions.
//!
//! Grammar (binary operators are left-associative, `*` `/` bind tighter than
//! `+` `-`, unary minus tighter still):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | primary
//! primary := NUMBER
//!          | IDENT
//!          | '(' expr ')'
//!          | 'ind' '(' expr CMP expr ')'
//!          | 'eq' '(' IDENT ',' STRING ')'
//! CMP     := '<' | '<=' | '==' | '>=' | '>'
//! ```
//!
//! Identifiers are the builtin `yhat`, `y`, `z` or a numeric feature name
//! from the schema.  Categorical features may only appear as the first
//! argument of `eq`, which tests membership in a named category.  `ind`
//! evaluates to 1 when its comparison holds and 0 otherwise.
//!
//! Parsing is schema-checked: unknown identifiers, categorical misuse, and
//! unknown categories are rejected up front so evaluation over conforming
//! samples cannot hit a name error.

use crate::dataset::{FeatureKind, FeatureSchema, FeatureValue};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("type error at offset {offset}: {message}")]
    Type { offset: usize, message: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("feature `{0}` is missing from the evaluation schema")]
    MissingFeature(String),
    #[error("feature `{0}` does not have the kind the expression expects")]
    WrongKind(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Eq => a == b,
            Cmp::Ge => a >= b,
            Cmp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HappinessExpr {
    /// A nonnegative literal; negative values are spelled with unary minus.
    Number(f64),
    /// `yhat`, `y`, `z`, or a numeric feature.
    Ident(String),
    Neg(Box<HappinessExpr>),
    Binary(BinOp, Box<HappinessExpr>, Box<HappinessExpr>),
    /// `ind(a CMP b)`: 1 if the comparison holds, else 0.
    Ind(Box<HappinessExpr>, Cmp, Box<HappinessExpr>),
    /// `eq(feature, "category")`: 1 if the categorical feature takes the
    /// named category, else 0.
    EqCat { feature: String, category: String },
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Cmp(Cmp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                tokens.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                tokens.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                tokens.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                tokens.push((Tok::Slash, i));
                i += 1;
            }
            b'(' => {
                tokens.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                tokens.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                tokens.push((Tok::Comma, i));
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push((Tok::Cmp(Cmp::Le), i));
                    i += 2;
                } else {
                    tokens.push((Tok::Cmp(Cmp::Lt), i));
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push((Tok::Cmp(Cmp::Ge), i));
                    i += 2;
                } else {
                    tokens.push((Tok::Cmp(Cmp::Gt), i));
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push((Tok::Cmp(Cmp::Eq), i));
                    i += 2;
                } else {
                    return Err(ExprError::Syntax {
                        offset: i,
                        message: "expected `==`".into(),
                    });
                }
            }
            b'"' => {
                let start = i;
                i += 1;
                let content_start = i;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
                if i == bytes.len() {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: "unterminated string literal".into(),
                    });
                }
                tokens.push((Tok::Str(src[content_start..i].to_string()), start));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                        return Err(ExprError::Syntax {
                            offset: i,
                            message: "expected digits after decimal point".into(),
                        });
                    }
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if bytes.get(j).is_some_and(u8::is_ascii_digit) {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("invalid number `{text}`"),
                })?;
                tokens.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", &src[i..].chars().next().unwrap()),
                });
            }
        }
    }
    tokens.push((Tok::Eof, src.trim_end().len()));
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    schema: &'a FeatureSchema,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &(Tok, usize) {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, ExprError> {
        let (tok, offset) = self.advance();
        if &tok == want {
            Ok(offset)
        } else {
            Err(ExprError::Syntax {
                offset,
                message: format!("expected {what}, found {}", tok.describe()),
            })
        }
    }

    fn parse_expr(&mut self) -> Result<HappinessExpr, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_term()?;
            lhs = HappinessExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<HappinessExpr, ExprError> {
        let mut lhs = self.parse_factor()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_factor()?;
            lhs = HappinessExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<HappinessExpr, ExprError> {
        if self.peek().0 == Tok::Minus {
            self.advance();
            let inner = self.parse_factor()?;
            return Ok(HappinessExpr::Neg(Box::new(inner)));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<HappinessExpr, ExprError> {
        let (tok, offset) = self.advance();
        match tok {
            Tok::Num(n) => Ok(HappinessExpr::Number(n)),
            Tok::LParen => {
                let inner = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "ind" => self.parse_ind(),
                "eq" => self.parse_eq(),
                _ => self.resolve_ident(name, offset),
            },
            other => Err(ExprError::Syntax {
                offset,
                message: format!("expected an expression, found {}", other.describe()),
            }),
        }
    }

    fn parse_ind(&mut self) -> Result<HappinessExpr, ExprError> {
        self.expect(&Tok::LParen, "`(` after `ind`")?;
        let lhs = self.parse_expr()?;
        let (tok, offset) = self.advance();
        let cmp = match tok {
            Tok::Cmp(c) => c,
            other => {
                return Err(ExprError::Syntax {
                    offset,
                    message: format!("expected a comparison operator, found {}", other.describe()),
                });
            }
        };
        let rhs = self.parse_expr()?;
        self.expect(&Tok::RParen, "`)`")?;
        Ok(HappinessExpr::Ind(Box::new(lhs), cmp, Box::new(rhs)))
    }

    fn parse_eq(&mut self) -> Result<HappinessExpr, ExprError> {
        self.expect(&Tok::LParen, "`(` after `eq`")?;
        let (tok, offset) = self.advance();
        let feature = match tok {
            Tok::Ident(name) => name,
            other => {
                return Err(ExprError::Syntax {
                    offset,
                    message: format!("expected a feature name, found {}", other.describe()),
                });
            }
        };
        let categories = match self.schema.kind_of(&feature) {
            Some(FeatureKind::Categorical(cats)) => cats,
            Some(FeatureKind::Numeric) => {
                return Err(ExprError::Type {
                    offset,
                    message: format!("`eq` requires a categorical feature, `{feature}` is numeric"),
                });
            }
            None => {
                return Err(ExprError::UnknownIdentifier { name: feature, offset });
            }
        };
        self.expect(&Tok::Comma, "`,`")?;
        let (tok, str_offset) = self.advance();
        let category = match tok {
            Tok::Str(s) => s,
            other => {
                return Err(ExprError::Syntax {
                    offset: str_offset,
                    message: format!("expected a quoted category, found {}", other.describe()),
                });
            }
        };
        if !categories.iter().any(|c| c == &category) {
            return Err(ExprError::Type {
                offset: str_offset,
                message: format!("feature `{feature}` has no category \"{category}\""),
            });
        }
        self.expect(&Tok::RParen, "`)`")?;
        Ok(HappinessExpr::EqCat { feature, category })
    }

    fn resolve_ident(&self, name: String, offset: usize) -> Result<HappinessExpr, ExprError> {
        if matches!(name.as_str(), "yhat" | "y" | "z") {
            return Ok(HappinessExpr::Ident(name));
        }
        match self.schema.kind_of(&name) {
            Some(FeatureKind::Numeric) => Ok(HappinessExpr::Ident(name)),
            Some(FeatureKind::Categorical(_)) => Err(ExprError::Type {
                offset,
                message: format!(
                    "categorical feature `{name}` can only be used as eq({name}, \"...\")"
                ),
            }),
            None => Err(ExprError::UnknownIdentifier { name, offset }),
        }
    }
}

/// Parses `text` against `schema`, rejecting unknown identifiers and
/// categorical misuse.
pub fn parse_happiness_expr(
    text: &str,
    schema: &FeatureSchema,
) -> Result<HappinessExpr, ExprError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, schema };
    let expr = parser.parse_expr()?;
    let (tok, offset) = parser.advance();
    if tok != Tok::Eof {
        return Err(ExprError::Syntax {
            offset,
            message: format!("unexpected {} after expression", tok.describe()),
        });
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Rendering

/// Prints the expression with minimal parentheses so that
/// `parse_happiness_expr(render(e), schema) == e`.
pub fn render(expr: &HappinessExpr) -> String {
    let mut out = String::new();
    render_prec(expr, 0, &mut out);
    out
}

fn render_prec(expr: &HappinessExpr, min_prec: u8, out: &mut String) {
    match expr {
        HappinessExpr::Number(n) => {
            debug_assert!(n.is_finite() && n.is_sign_positive(), "literals are nonnegative");
            out.push_str(&format!("{n}"));
        }
        HappinessExpr::Ident(name) => out.push_str(name),
        HappinessExpr::Neg(inner) => {
            let wrap = min_prec > 3;
            if wrap {
                out.push('(');
            }
            out.push('-');
            render_prec(inner, 3, out);
            if wrap {
                out.push(')');
            }
        }
        HappinessExpr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let wrap = prec < min_prec;
            if wrap {
                out.push('(');
            }
            render_prec(lhs, prec, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_prec(rhs, prec + 1, out);
            if wrap {
                out.push(')');
            }
        }
        HappinessExpr::Ind(lhs, cmp, rhs) => {
            out.push_str("ind(");
            render_prec(lhs, 0, out);
            out.push(' ');
            out.push_str(cmp.symbol());
            out.push(' ');
            render_prec(rhs, 0, out);
            out.push(')');
        }
        HappinessExpr::EqCat { feature, category } => {
            out.push_str("eq(");
            out.push_str(feature);
            out.push_str(", \"");
            out.push_str(category);
            out.push_str("\")");
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Variable bindings for one evaluation: a sample's features plus the
/// builtins.  Labels are passed as their index in the label space.
pub struct EvalInput<'a> {
    pub schema: &'a FeatureSchema,
    pub features: &'a [FeatureValue],
    pub yhat: f64,
    pub y: f64,
    pub z: f64,
}

pub fn eval(expr: &HappinessExpr, input: &EvalInput) -> Result<f64, EvalError> {
    let v = eval_inner(expr, input)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_inner(expr: &HappinessExpr, input: &EvalInput) -> Result<f64, EvalError> {
    match expr {
        HappinessExpr::Number(n) => Ok(*n),
        HappinessExpr::Ident(name) => match name.as_str() {
            "yhat" => Ok(input.yhat),
            "y" => Ok(input.y),
            "z" => Ok(input.z),
            _ => {
                let idx = input
                    .schema
                    .index_of(name)
                    .ok_or_else(|| EvalError::MissingFeature(name.clone()))?;
                input.features[idx]
                    .as_numeric()
                    .ok_or_else(|| EvalError::WrongKind(name.clone()))
            }
        },
        HappinessExpr::Neg(inner) => Ok(-eval_inner(inner, input)?),
        HappinessExpr::Binary(op, lhs, rhs) => {
            let a = eval_inner(lhs, input)?;
            let b = eval_inner(rhs, input)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::DivisionByZero)
                    } else {
                        Ok(a / b)
                    }
                }
            }
        }
        HappinessExpr::Ind(lhs, cmp, rhs) => {
            let a = eval_inner(lhs, input)?;
            let b = eval_inner(rhs, input)?;
            Ok(if cmp.holds(a, b) { 1.0 } else { 0.0 })
        }
        HappinessExpr::EqCat { feature, category } => {
            let idx = input
                .schema
                .index_of(feature)
                .ok_or_else(|| EvalError::MissingFeature(feature.clone()))?;
            let cats = match input.schema.kind(idx) {
                FeatureKind::Categorical(cats) => cats,
                FeatureKind::Numeric => return Err(EvalError::WrongKind(feature.clone())),
            };
            let value = input.features[idx]
                .as_category()
                .ok_or_else(|| EvalError::WrongKind(feature.clone()))?;
            Ok(if cats.get(value).map(String::as_str) == Some(category.as_str()) {
                1.0
            } else {
                0.0
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureKind;
    use proptest::prelude::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            ("loan_requested".into(), FeatureKind::Numeric),
            ("hours_per_week".into(), FeatureKind::Numeric),
            (
                "education".into(),
                FeatureKind::Categorical(vec!["Bachelors".into(), "Masters".into()]),
            ),
        ])
        .unwrap()
    }

    fn input<'a>(
        schema: &'a FeatureSchema,
        features: &'a [FeatureValue],
        yhat: f64,
    ) -> EvalInput<'a> {
        EvalInput { schema, features, yhat, y: 1.0, z: 0.0 }
    }

    #[test]
    fn parses_products_of_identifiers() {
        let expr = parse_happiness_expr("yhat * loan_requested", &schema()).unwrap();
        assert_eq!(
            expr,
            HappinessExpr::Binary(
                BinOp::Mul,
                Box::new(HappinessExpr::Ident("yhat".into())),
                Box::new(HappinessExpr::Ident("loan_requested".into())),
            )
        );
    }

    #[test]
    fn parses_linear_combinations() {
        let expr = parse_happiness_expr("100 * yhat - hours_per_week", &schema()).unwrap();
        assert_eq!(
            expr,
            HappinessExpr::Binary(
                BinOp::Sub,
                Box::new(HappinessExpr::Binary(
                    BinOp::Mul,
                    Box::new(HappinessExpr::Number(100.0)),
                    Box::new(HappinessExpr::Ident("yhat".into())),
                )),
                Box::new(HappinessExpr::Ident("hours_per_week".into())),
            )
        );
    }

    #[test]
    fn parses_indicators_and_category_tests() {
        let expr = parse_happiness_expr("ind(hours_per_week >= 40)", &schema()).unwrap();
        assert!(matches!(expr, HappinessExpr::Ind(_, Cmp::Ge, _)));

        let expr = parse_happiness_expr("eq(education, \"Masters\")", &schema()).unwrap();
        assert_eq!(
            expr,
            HappinessExpr::EqCat { feature: "education".into(), category: "Masters".into() }
        );
    }

    #[test]
    fn truncated_input_reports_end_offset() {
        let err = parse_happiness_expr("yhat * (1 + ", &schema()).unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                offset: 11,
                message: "expected an expression, found end of input".into()
            }
        );
    }

    #[test]
    fn unknown_identifier_is_reported_with_offset() {
        let err = parse_happiness_expr("yhat * bonus", &schema()).unwrap_err();
        assert_eq!(err, ExprError::UnknownIdentifier { name: "bonus".into(), offset: 7 });
    }

    #[test]
    fn categorical_feature_cannot_be_used_numerically() {
        let err = parse_happiness_expr("education + 1", &schema()).unwrap_err();
        assert!(matches!(err, ExprError::Type { offset: 0, .. }));
    }

    #[test]
    fn unknown_category_is_a_type_error() {
        let err = parse_happiness_expr("eq(education, \"Doctorate\")", &schema()).unwrap_err();
        assert!(matches!(err, ExprError::Type { .. }));
    }

    #[test]
    fn precedence_follows_usual_rules() {
        let s = schema();
        let feats = [
            FeatureValue::Numeric(10.0),
            FeatureValue::Numeric(40.0),
            FeatureValue::Categorical(1),
        ];
        let e = parse_happiness_expr("1 + 2 * 3", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), 7.0);
        let e = parse_happiness_expr("(1 + 2) * 3", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), 9.0);
        let e = parse_happiness_expr("2 - 3 - 4", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), -5.0);
        let e = parse_happiness_expr("-2 * 3", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), -6.0);
    }

    #[test]
    fn evaluation_binds_sample_values() {
        let s = schema();
        let feats = [
            FeatureValue::Numeric(250_000.0),
            FeatureValue::Numeric(50.0),
            FeatureValue::Categorical(1),
        ];
        let e = parse_happiness_expr("yhat * loan_requested", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), 250_000.0);
        assert_eq!(eval(&e, &input(&s, &feats, 0.0)).unwrap(), 0.0);

        let e = parse_happiness_expr("eq(education, \"Masters\")", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)).unwrap(), 1.0);
        let other = [
            FeatureValue::Numeric(0.0),
            FeatureValue::Numeric(0.0),
            FeatureValue::Categorical(0),
        ];
        assert_eq!(eval(&e, &input(&s, &other, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let s = schema();
        let feats = [
            FeatureValue::Numeric(1.0),
            FeatureValue::Numeric(0.0),
            FeatureValue::Categorical(0),
        ];
        let e = parse_happiness_expr("yhat / hours_per_week", &s).unwrap();
        assert_eq!(eval(&e, &input(&s, &feats, 1.0)), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn render_produces_canonical_text() {
        let s = schema();
        for text in [
            "yhat * loan_requested",
            "100 * yhat - hours_per_week",
            "ind(hours_per_week >= 40)",
            "eq(education, \"Masters\")",
            "-(yhat + 1) * 2",
            "1 - (2 - 3)",
            "yhat / (loan_requested * 2)",
        ] {
            let expr = parse_happiness_expr(text, &s).unwrap();
            assert_eq!(render(&expr), text);
        }
    }

    // Strategies generate only schema-conforming expressions so the
    // round-trip property can re-parse against the same schema.
    fn literal() -> impl Strategy<Value = HappinessExpr> {
        prop_oneof![
            (0u32..10_000).prop_map(|n| HappinessExpr::Number(n as f64)),
            (0u32..10_000).prop_map(|n| HappinessExpr::Number(n as f64 / 64.0)),
            prop_oneof![
                Just("yhat"),
                Just("y"),
                Just("z"),
                Just("loan_requested"),
                Just("hours_per_week")
            ]
            .prop_map(|s| HappinessExpr::Ident(s.into())),
            prop_oneof![Just("Bachelors"), Just("Masters")].prop_map(|c| {
                HappinessExpr::EqCat { feature: "education".into(), category: c.into() }
            }),
        ]
    }

    fn expr_strategy() -> impl Strategy<Value = HappinessExpr> {
        literal().prop_recursive(4, 64, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| HappinessExpr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| HappinessExpr::Binary(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Cmp::Lt),
                        Just(Cmp::Le),
                        Just(Cmp::Eq),
                        Just(Cmp::Ge),
                        Just(Cmp::Gt)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(c, a, b)| HappinessExpr::Ind(Box::new(a), c, Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(expr in expr_strategy()) {
            let text = render(&expr);
            let reparsed = parse_happiness_expr(&text, &schema()).unwrap();
            prop_assert_eq!(reparsed, expr);
        }
    }
}
