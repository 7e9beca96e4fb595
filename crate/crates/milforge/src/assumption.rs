//! Bag-labeling assumptions and their boolean expression DSL.
//!
//! A bag of instances receives a single binary label from an
//! [`Assumption`]:
//!
//! * `standard:<c>` — positive iff class `c` appears in the bag,
//! * `presence:<a>,<b>` — positive iff any class of the set appears,
//! * `absence:<a>,<b>` — positive iff no class of the set appears,
//! * arbitrary boolean expressions over class-presence predicates, e.g.
//!   the outfit rules `(0|2|3|4|6)&1&(6|7|9)`.
//!
//! Expression grammar (whitespace ignored, `!` binds tighter than `&`
//! tighter than `|`):
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := '!' factor | '(' expr ')' | digit
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::source::{SourceName, MAX_CLASSES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DslError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("class id {0} is outside 0..=9")]
    ClassOutOfRange(u8),
    #[error("presence/absence class set must not be empty")]
    EmptyClassSet,
    #[error("and/or needs at least two operands")]
    TooFewOperands,
    #[error("cannot label an empty bag")]
    EmptyBag,
    #[error("no canonical suite for source `{0}`")]
    UnknownSource(SourceName),
    #[error("unknown assumption name `{0}`")]
    UnknownName(String),
}

/// Set of class ids 0..=9, packed into a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassSet(u16);

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);

    /// All 1024 possible sets, for exhaustive truth-table checks.
    pub fn all() -> impl Iterator<Item = ClassSet> {
        (0u16..1 << MAX_CLASSES).map(ClassSet)
    }

    pub fn from_labels(labels: &[u8]) -> ClassSet {
        let mut set = ClassSet::EMPTY;
        for &label in labels {
            set.insert(label);
        }
        set
    }

    pub fn insert(&mut self, class: u8) {
        debug_assert!((class as usize) < MAX_CLASSES);
        self.0 |= 1 << class;
    }

    pub fn contains(self, class: u8) -> bool {
        (class as usize) < MAX_CLASSES && self.0 & (1 << class) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersects(self, other: ClassSet) -> bool {
        self.0 & other.0 != 0
    }
}

impl FromIterator<u8> for ClassSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut set = ClassSet::EMPTY;
        for class in iter {
            set.insert(class);
        }
        set
    }
}

/// Boolean expression over class-presence predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssumptionExpr {
    Present(u8),
    Not(Box<AssumptionExpr>),
    And(Vec<AssumptionExpr>),
    Or(Vec<AssumptionExpr>),
}

impl AssumptionExpr {
    /// Check the structural invariants: class ids in range, n-ary nodes
    /// with at least two children. Parser output always satisfies them.
    pub fn validate(&self) -> Result<(), DslError> {
        match self {
            AssumptionExpr::Present(c) if (*c as usize) >= MAX_CLASSES => {
                Err(DslError::ClassOutOfRange(*c))
            }
            AssumptionExpr::Present(_) => Ok(()),
            AssumptionExpr::Not(inner) => inner.validate(),
            AssumptionExpr::And(children) | AssumptionExpr::Or(children) => {
                if children.len() < 2 {
                    return Err(DslError::TooFewOperands);
                }
                children.iter().try_for_each(AssumptionExpr::validate)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            AssumptionExpr::Or(_) => 0,
            AssumptionExpr::And(_) => 1,
            AssumptionExpr::Not(_) => 2,
            AssumptionExpr::Present(_) => 3,
        }
    }
}

/// Render in the DSL syntax. `parse_expr` of the output reproduces the
/// AST exactly; nested nodes of equal precedence keep their parentheses.
impl fmt::Display for AssumptionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, node: &AssumptionExpr, parent: u8, strict: bool) -> fmt::Result {
            let wrap = if strict { node.precedence() <= parent } else { node.precedence() < parent };
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "{node}")?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }

        match self {
            AssumptionExpr::Present(c) => write!(f, "{c}"),
            AssumptionExpr::Not(inner) => {
                write!(f, "!")?;
                child(f, inner, self.precedence(), false)
            }
            AssumptionExpr::And(children) | AssumptionExpr::Or(children) => {
                let sep = if matches!(self, AssumptionExpr::And(_)) { '&' } else { '|' };
                for (i, node) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    child(f, node, self.precedence(), true)?;
                }
                Ok(())
            }
        }
    }
}

/// Evaluate an expression against the set of classes present in a bag.
pub fn evaluate(expr: &AssumptionExpr, present: ClassSet) -> bool {
    match expr {
        AssumptionExpr::Present(c) => present.contains(*c),
        AssumptionExpr::Not(inner) => !evaluate(inner, present),
        AssumptionExpr::And(children) => children.iter().all(|c| evaluate(c, present)),
        AssumptionExpr::Or(children) => children.iter().any(|c| evaluate(c, present)),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_whitespace(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_whitespace();
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError::Parse { offset: self.pos, message: message.into() }
    }

    fn expr(&mut self) -> Result<AssumptionExpr, DslError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { AssumptionExpr::Or(terms) })
    }

    fn term(&mut self) -> Result<AssumptionExpr, DslError> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(b'&') {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { AssumptionExpr::And(factors) })
    }

    fn factor(&mut self) -> Result<AssumptionExpr, DslError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(AssumptionExpr::Not(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(d @ b'0'..=b'9') => {
                self.pos += 1;
                Ok(AssumptionExpr::Present(d - b'0'))
            }
            Some(other) => Err(self.error(format!("unexpected `{}`", other as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parse the expression DSL; errors carry the byte offset of the fault.
pub fn parse_expr(text: &str) -> Result<AssumptionExpr, DslError> {
    let mut parser = Parser::new(text);
    let expr = parser.expr()?;
    if let Some(trailing) = parser.peek() {
        return Err(parser.error(format!("unexpected `{}` after expression", trailing as char)));
    }
    Ok(expr)
}

/// The `(top) & trousers & (shoes)` rule; coats and dresses count as tops.
pub fn basic_outfit() -> AssumptionExpr {
    parse_expr("(0|2|3|4|6)&1&(6|7|9)").expect("fixed expression parses")
}

/// The stricter two-branch rule: shirt-with-trousers or dress-with-bag.
pub fn multi_outfit() -> AssumptionExpr {
    parse_expr("((0|6)&1&(7|9))|(3&8&(5|9))").expect("fixed expression parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssumptionFamily {
    Standard,
    Presence,
    Absence,
    Complex,
}

impl fmt::Display for AssumptionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssumptionFamily::Standard => "standard",
            AssumptionFamily::Presence => "presence",
            AssumptionFamily::Absence => "absence",
            AssumptionFamily::Complex => "complex",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssumptionKind {
    Standard(u8),
    Presence(BTreeSet<u8>),
    Absence(BTreeSet<u8>),
    Complex(AssumptionExpr),
}

/// A named bag-labeling rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assumption {
    kind: AssumptionKind,
    name: String,
}

impl Assumption {
    pub fn standard(class: u8) -> Result<Assumption, DslError> {
        if class as usize >= MAX_CLASSES {
            return Err(DslError::ClassOutOfRange(class));
        }
        Ok(Assumption { name: format!("standard:{class}"), kind: AssumptionKind::Standard(class) })
    }

    pub fn presence(classes: impl IntoIterator<Item = u8>) -> Result<Assumption, DslError> {
        let set = validated_set(classes)?;
        Ok(Assumption { name: format!("presence:{}", join_classes(&set)), kind: AssumptionKind::Presence(set) })
    }

    pub fn absence(classes: impl IntoIterator<Item = u8>) -> Result<Assumption, DslError> {
        let set = validated_set(classes)?;
        Ok(Assumption { name: format!("absence:{}", join_classes(&set)), kind: AssumptionKind::Absence(set) })
    }

    /// Complex rule with an explicit display name (e.g. `outfit:basic`).
    pub fn complex(name: impl Into<String>, expr: AssumptionExpr) -> Result<Assumption, DslError> {
        expr.validate()?;
        Ok(Assumption { name: name.into(), kind: AssumptionKind::Complex(expr) })
    }

    /// Complex rule named after its own rendering, `expr:<text>`.
    pub fn from_expr(expr: AssumptionExpr) -> Result<Assumption, DslError> {
        expr.validate()?;
        Ok(Assumption { name: format!("expr:{expr}"), kind: AssumptionKind::Complex(expr) })
    }

    /// Parse a canonical selector: `standard:<c>`, `presence:<a>,<b>,...`,
    /// `absence:<a>,<b>,...`, `outfit:basic`, `outfit:multi` or
    /// `expr:<expression>`.
    pub fn parse_name(text: &str) -> Result<Assumption, DslError> {
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| DslError::UnknownName(text.to_string()))?;
        let parse_classes = |s: &str| -> Result<Vec<u8>, DslError> {
            s.split(',')
                .map(|part| {
                    part.trim()
                        .parse::<u8>()
                        .map_err(|_| DslError::UnknownName(text.to_string()))
                })
                .collect()
        };
        match head {
            "standard" => {
                let class = rest.trim().parse::<u8>().map_err(|_| DslError::UnknownName(text.to_string()))?;
                Assumption::standard(class)
            }
            "presence" => Assumption::presence(parse_classes(rest)?),
            "absence" => Assumption::absence(parse_classes(rest)?),
            "outfit" => match rest {
                "basic" => Assumption::complex("outfit:basic", basic_outfit()),
                "multi" => Assumption::complex("outfit:multi", multi_outfit()),
                _ => Err(DslError::UnknownName(text.to_string())),
            },
            "expr" => Assumption::from_expr(parse_expr(rest)?),
            _ => Err(DslError::UnknownName(text.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &AssumptionKind {
        &self.kind
    }

    pub fn family(&self) -> AssumptionFamily {
        match self.kind {
            AssumptionKind::Standard(_) => AssumptionFamily::Standard,
            AssumptionKind::Presence(_) => AssumptionFamily::Presence,
            AssumptionKind::Absence(_) => AssumptionFamily::Absence,
            AssumptionKind::Complex(_) => AssumptionFamily::Complex,
        }
    }

    /// Label a bag from the class ids of its instances.
    pub fn label_bag(&self, labels: &[u8]) -> Result<bool, DslError> {
        if labels.is_empty() {
            return Err(DslError::EmptyBag);
        }
        let present = ClassSet::from_labels(labels);
        Ok(match &self.kind {
            AssumptionKind::Standard(class) => present.contains(*class),
            AssumptionKind::Presence(set) => present.intersects(set.iter().copied().collect()),
            AssumptionKind::Absence(set) => !present.intersects(set.iter().copied().collect()),
            AssumptionKind::Complex(expr) => evaluate(expr, present),
        })
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn validated_set(classes: impl IntoIterator<Item = u8>) -> Result<BTreeSet<u8>, DslError> {
    let set: BTreeSet<u8> = classes.into_iter().collect();
    if set.is_empty() {
        return Err(DslError::EmptyClassSet);
    }
    if let Some(&bad) = set.iter().find(|&&c| c as usize >= MAX_CLASSES) {
        return Err(DslError::ClassOutOfRange(bad));
    }
    Ok(set)
}

fn join_classes(set: &BTreeSet<u8>) -> String {
    set.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

/// Ten standard assumptions, one per class.
pub fn standard_suite() -> Vec<Assumption> {
    (0..MAX_CLASSES as u8).map(|c| Assumption::standard(c).unwrap()).collect()
}

/// Nine presence assumptions over the adjacent pairs (0,1)..(8,9).
pub fn presence_suite() -> Vec<Assumption> {
    (0..MAX_CLASSES as u8 - 1).map(|c| Assumption::presence([c, c + 1]).unwrap()).collect()
}

/// Nine absence assumptions over the same adjacent pairs.
pub fn absence_suite() -> Vec<Assumption> {
    (0..MAX_CLASSES as u8 - 1).map(|c| Assumption::absence([c, c + 1]).unwrap()).collect()
}

/// The two outfit rules (fashion only).
pub fn outfit_suite() -> Vec<Assumption> {
    vec![
        Assumption::complex("outfit:basic", basic_outfit()).unwrap(),
        Assumption::complex("outfit:multi", multi_outfit()).unwrap(),
    ]
}

/// The canonical benchmark suite of a source: 10 standard + 9 presence +
/// 9 absence assumptions, plus the two outfits for fashion.
pub fn canonical_suites(source: SourceName) -> Result<Vec<Assumption>, DslError> {
    let mut suite = standard_suite();
    suite.extend(presence_suite());
    suite.extend(absence_suite());
    match source {
        SourceName::Mnist | SourceName::Cifar10 => Ok(suite),
        SourceName::Fashion => {
            suite.extend(outfit_suite());
            Ok(suite)
        }
        SourceName::Synthetic => Err(DslError::UnknownSource(source)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AssumptionExpr::{And, Not, Or, Present};

    #[test]
    fn parse_basic_outfit_shape() {
        let expr = parse_expr("(0|2|3|4|6)&(1)&(6|7|9)").unwrap();
        let expected = And(vec![
            Or(vec![Present(0), Present(2), Present(3), Present(4), Present(6)]),
            Present(1),
            Or(vec![Present(6), Present(7), Present(9)]),
        ]);
        assert_eq!(expr, expected);
    }

    #[test]
    fn parse_single_literal() {
        assert_eq!(parse_expr("3").unwrap(), Present(3));
    }

    #[test]
    fn parse_precedence_and_binds_tighter() {
        let expr = parse_expr("0|1&2").unwrap();
        assert_eq!(expr, Or(vec![Present(0), And(vec![Present(1), Present(2)])]));
    }

    #[test]
    fn parse_whitespace_ignored() {
        assert_eq!(parse_expr(" 0 | 1 & !2 ").unwrap(), parse_expr("0|1&!2").unwrap());
    }

    #[test]
    fn parse_errors_carry_byte_offset() {
        match parse_expr("(0|1") {
            Err(DslError::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_expr("0|1)2") {
            Err(DslError::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_expr(""), Err(DslError::Parse { offset: 0, .. })));
        assert!(matches!(parse_expr("0|a"), Err(DslError::Parse { offset: 2, .. })));
    }

    #[test]
    fn evaluate_basic_outfit_membership() {
        let expr = basic_outfit();
        assert!(evaluate(&expr, ClassSet::from_labels(&[3, 1, 9])));
        assert!(!evaluate(&expr, ClassSet::EMPTY));
        assert!(!evaluate(&expr, ClassSet::from_labels(&[3, 1])));
    }

    #[test]
    fn evaluate_multi_outfit_dress_branch() {
        let expr = multi_outfit();
        assert!(evaluate(&expr, ClassSet::from_labels(&[3, 8, 5])));
        assert!(!evaluate(&expr, ClassSet::from_labels(&[3, 8])));
    }

    #[test]
    fn label_bag_families() {
        let standard = Assumption::standard(0).unwrap();
        assert!(standard.label_bag(&[3, 0, 7]).unwrap());
        assert!(!standard.label_bag(&[3, 4, 7]).unwrap());

        let presence = Assumption::presence([1, 2]).unwrap();
        let absence = Assumption::absence([1, 2]).unwrap();
        assert!(!presence.label_bag(&[3, 4, 5]).unwrap());
        assert!(absence.label_bag(&[3, 4, 5]).unwrap());

        let multi = Assumption::complex("outfit:multi", multi_outfit()).unwrap();
        assert!(multi.label_bag(&[3, 8, 5]).unwrap());
    }

    #[test]
    fn label_bag_rejects_empty() {
        let standard = Assumption::standard(0).unwrap();
        assert_eq!(standard.label_bag(&[]), Err(DslError::EmptyBag));
    }

    #[test]
    fn suites_have_canonical_sizes_and_order() {
        let mnist = canonical_suites(SourceName::Mnist).unwrap();
        assert_eq!(mnist.len(), 28);
        let fashion = canonical_suites(SourceName::Fashion).unwrap();
        assert_eq!(fashion.len(), 30);
        let cifar = canonical_suites(SourceName::Cifar10).unwrap();
        assert_eq!(cifar.len(), 28);
        assert!(canonical_suites(SourceName::Synthetic).is_err());

        assert_eq!(mnist[0].name(), "standard:0");
        assert_eq!(mnist[9].name(), "standard:9");
        assert_eq!(mnist[10].name(), "presence:0,1");
        assert_eq!(mnist[18].name(), "presence:8,9");
        assert_eq!(mnist[19].name(), "absence:0,1");
        assert_eq!(mnist[27].name(), "absence:8,9");
        assert_eq!(fashion[28].name(), "outfit:basic");
        assert_eq!(fashion[29].name(), "outfit:multi");
    }

    #[test]
    fn parse_name_round_trips_canonical_selectors() {
        for name in ["standard:3", "presence:0,1", "absence:8,9", "outfit:basic", "outfit:multi"] {
            let assumption = Assumption::parse_name(name).unwrap();
            assert_eq!(assumption.name(), name);
        }
        let custom = Assumption::parse_name("expr:(0|1)&!2").unwrap();
        assert_eq!(custom.name(), "expr:(0|1)&!2");
        assert!(Assumption::parse_name("threshold:3").is_err());
        assert!(Assumption::parse_name("standard:x").is_err());
        assert!(Assumption::parse_name("presence:").is_err());
    }

    #[test]
    fn display_round_trips_fixed_expressions() {
        for expr in [basic_outfit(), multi_outfit(), parse_expr("0|1&2").unwrap(), parse_expr("!!0").unwrap()] {
            let printed = expr.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), expr, "printed `{printed}`");
        }
    }

    #[test]
    fn display_parenthesizes_programmatic_nesting() {
        // Parser never produces Or-in-Or, but printing must still
        // round-trip such trees exactly.
        let nested = Or(vec![Or(vec![Present(0), Present(1)]), Present(2)]);
        assert_eq!(nested.to_string(), "(0|1)|2");
        assert_eq!(parse_expr(&nested.to_string()).unwrap(), nested);

        let not_chain = Not(Box::new(Not(Box::new(Present(0)))));
        assert_eq!(not_chain.to_string(), "!!0");
        assert_eq!(parse_expr(&not_chain.to_string()).unwrap(), not_chain);
    }

    #[test]
    fn validate_rejects_malformed_trees() {
        assert!(And(vec![Present(0)]).validate().is_err());
        assert!(Present(10).validate().is_err());
        assert!(Or(vec![Present(0), Present(11)]).validate().is_err());
        assert!(multi_outfit().validate().is_ok());
    }
}
