//! Recursive-descent parser for queries and constraints.
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := [coef '*'] 'P{' event (',' event)* '}'
//! event   := VAR outcomeArgs? '=' INT
//! args    := '(' arg (',' arg)* ')'
//! arg     := VAR '=' INT | VAR args
//! ```

use num_traits::{One, Zero};

use super::{
    AtomicQuery, CounterfactualOperand, EventKind, Intervention, InterventionValue, LinearForm,
    OutcomeEvent, OutcomeTerm, QueryExpr, Relation, UserConstraint,
};
use crate::error::ParseError;
use crate::model::CausalGraph;
use crate::rational::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), column });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Number(chars[start..i].iter().collect()), column });
        } else {
            let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = match two.as_str() {
                ">=" => Some(">="),
                "<=" => Some("<="),
                "==" => Some("=="),
                _ => None,
            };
            if let Some(s) = sym {
                out.push(Spanned { tok: Tok::Sym(s), column });
                i += 2;
                continue;
            }
            let s = match c {
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '/' => "/",
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                ',' => ",",
                '=' => "=",
                _ => return Err(ParseError::syntax(1, column, format!("unexpected character `{c}`"))),
            };
            out.push(Spanned { tok: Tok::Sym(s), column });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'g> {
    toks: Vec<Spanned>,
    pos: usize,
    end_column: usize,
    graph: &'g CausalGraph,
}

impl<'g> Parser<'g> {
    fn new(text: &str, graph: &'g CausalGraph) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, end_column: text.chars().count() + 1, graph })
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::syntax(1, self.column(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{sym}`")))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn variable(&mut self) -> Result<usize, ParseError> {
        let column = self.column();
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.graph
                    .lookup(&name)
                    .ok_or(ParseError::UnknownVariable { name, line: 1, column })
            }
            _ => Err(self.error("expected a variable name")),
        }
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) if n.chars().all(|c| c.is_ascii_digit()) => {
                self.pos += 1;
                n.parse().map_err(|_| self.error("integer too large"))
            }
            _ => Err(self.error("expected an integer value")),
        }
    }

    fn value_for(&mut self, var: usize) -> Result<u32, ParseError> {
        let v = self.integer()?;
        let card = self.graph.cardinality(var);
        if v >= u64::from(card) {
            return Err(ParseError::ValueOutOfRange {
                variable: self.graph.name(var).to_string(),
                value: v,
                cardinality: card,
            });
        }
        Ok(v as u32)
    }

    /// `NUM`, `NUM/NUM` or a decimal.
    fn number(&mut self) -> Result<Rational, ParseError> {
        let Some(Tok::Number(n)) = self.peek().cloned() else {
            return Err(self.error("expected a number"));
        };
        self.pos += 1;
        let mut text = n;
        if self.eat("/") {
            match self.peek().cloned() {
                Some(Tok::Number(d)) => {
                    self.pos += 1;
                    text = format!("{text}/{d}");
                }
                _ => return Err(self.error("expected a denominator")),
            }
        }
        parse_rational(&text).ok_or_else(|| self.error(format!("invalid number `{text}`")))
    }

    /// Parses the argument list after `VAR(`.
    fn outcome_args(&mut self, variable: usize) -> Result<OutcomeTerm, ParseError> {
        let mut interventions = Vec::new();
        if !self.eat(")") {
            loop {
                let target = self.variable()?;
                let value = if self.eat("=") {
                    InterventionValue::Fixed(self.value_for(target)?)
                } else if self.eat("(") {
                    InterventionValue::Nested(self.outcome_args(target)?)
                } else {
                    return Err(self.error("expected `=` or `(` after intervention target"));
                };
                interventions.push(Intervention { target, value });
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(OutcomeTerm { variable, interventions })
    }

    fn event(&mut self) -> Result<OutcomeEvent, ParseError> {
        let variable = self.variable()?;
        let kind = if self.eat("(") {
            EventKind::Potential(self.outcome_args(variable)?)
        } else {
            EventKind::Factual
        };
        self.expect("=")?;
        let value = self.value_for(variable)?;
        Ok(OutcomeEvent { variable, value, kind })
    }

    fn atomic(&mut self) -> Result<AtomicQuery, ParseError> {
        match self.peek() {
            Some(Tok::Ident(p)) if p == "P" => self.pos += 1,
            _ => return Err(self.error("expected `P{`")),
        }
        self.expect("{")?;
        let mut events = vec![self.event()?];
        while self.eat(",") {
            events.push(self.event()?);
        }
        self.expect("}")?;
        Ok(AtomicQuery { events })
    }

    fn starts_probability(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(p)) if p == "P")
            && matches!(self.peek_at(1), Some(Tok::Sym("{")))
    }

    /// Linear combination of `P{...}` terms and numeric constants.
    fn linear(&mut self) -> Result<LinearForm, ParseError> {
        let mut terms = Vec::new();
        let mut constant = Rational::zero();
        let mut first = true;
        loop {
            let mut sign = Rational::one();
            if self.eat("-") {
                sign = -sign;
            } else if !self.eat("+") && !first {
                break;
            }
            first = false;
            if self.starts_probability() {
                terms.push((sign, self.atomic()?));
            } else {
                let c = self.number()?;
                if self.eat("*") {
                    terms.push((sign * c, self.atomic()?));
                } else {
                    constant += sign * c;
                }
            }
            if !matches!(self.peek(), Some(Tok::Sym("+" | "-"))) {
                break;
            }
        }
        Ok(LinearForm { terms, constant })
    }

    fn relation(&mut self) -> Result<Relation, ParseError> {
        if self.eat(">=") {
            Ok(Relation::Ge)
        } else if self.eat("<=") {
            Ok(Relation::Le)
        } else if self.eat("==") || self.eat("=") {
            Ok(Relation::Eq)
        } else {
            Err(self.error("expected `>=`, `<=` or `=`"))
        }
    }

    fn cf_operand(&mut self) -> Result<CounterfactualOperand, ParseError> {
        if let Some(Tok::Number(_)) = self.peek() {
            let v = self.integer()?;
            return u32::try_from(v)
                .map(CounterfactualOperand::Constant)
                .map_err(|_| self.error("constant too large"));
        }
        let var = self.variable()?;
        self.expect("(")?;
        Ok(CounterfactualOperand::Term(self.outcome_args(var)?))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }
}

/// Parses a query such as `P{Y(X=1)=1} - P{Y(X=0)=1}`.
pub fn parse_query(text: &str, g: &CausalGraph) -> Result<QueryExpr, ParseError> {
    let mut p = Parser::new(text, g)?;
    if p.at_end() {
        return Err(p.error("empty query"));
    }
    let form = p.linear()?;
    p.finish()?;
    if !form.constant.is_zero() {
        return Err(ParseError::syntax(1, 1, "queries cannot contain constant terms"));
    }
    if form.terms.is_empty() {
        return Err(ParseError::syntax(1, 1, "query needs at least one P{...} term"));
    }
    Ok(QueryExpr { terms: form.terms })
}

/// Parses a user constraint: either a unit-level counterfactual inequality
/// (`Y2(Y=1) >= Y2(Y=0)`) or a linear relation between probabilities.
pub fn parse_constraint(text: &str, g: &CausalGraph) -> Result<UserConstraint, ParseError> {
    let mut p = Parser::new(text, g)?;
    let counterfactual = matches!(p.peek(), Some(Tok::Ident(n)) if n != "P" || !p.starts_probability())
        && matches!(p.peek_at(1), Some(Tok::Sym("(")));
    let c = if counterfactual {
        let var = p.variable()?;
        p.expect("(")?;
        let lhs = p.outcome_args(var)?;
        let relation = p.relation()?;
        let rhs = p.cf_operand()?;
        UserConstraint::Counterfactual { lhs, relation, rhs }
    } else {
        let lhs = p.linear()?;
        let relation = p.relation()?;
        let rhs = p.linear()?;
        UserConstraint::Linear { lhs, relation, rhs }
    };
    p.finish()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;
    use crate::rational::ratio;

    fn xy() -> CausalGraph {
        parse_graph("var X : 3\nvar Y : 2\nedge X -> Y\nconfound U { X, Y }").unwrap()
    }

    #[test]
    fn risk_difference() {
        let g = xy();
        let q = parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap();
        assert_eq!(q.terms.len(), 2);
        assert_eq!(q.terms[0].0, ratio(1, 1));
        assert_eq!(q.terms[1].0, ratio(-1, 1));
        let EventKind::Potential(t) = &q.terms[1].1.events[0].kind else { panic!() };
        assert_eq!(t.interventions, vec![Intervention { target: 0, value: InterventionValue::Fixed(0) }]);
    }

    #[test]
    fn joint_events_and_decimals() {
        let g = xy();
        let q = parse_query("P{Y(X=1)=1, Y(X=0)=0}", &g).unwrap();
        assert_eq!(q.terms[0].1.events.len(), 2);
        let q = parse_query("0.5*P{Y(X=1)=1} + 0.5*P{Y(X=2)=1}", &g).unwrap();
        assert_eq!(q.terms[0].0, ratio(1, 2));
        assert_eq!(q.terms[1].0, ratio(1, 2));
        let q = parse_query("-2/3 * P{Y=1}", &g).unwrap();
        assert_eq!(q.terms[0].0, ratio(-2, 3));
        assert_eq!(q.terms[0].1.events[0].kind, EventKind::Factual);
    }

    #[test]
    fn nested() {
        let g = parse_graph("var W1:2\nvar W2:2\nvar W3:2\nedge W1->W2->W3\nedge W1->W3").unwrap();
        let q = parse_query("P{W3(W2(W1=0), W1=1)=1}", &g).unwrap();
        let EventKind::Potential(t) = &q.terms[0].1.events[0].kind else { panic!() };
        assert_eq!(t.interventions.len(), 2);
        assert!(matches!(t.interventions[0].value, InterventionValue::Nested(_)));
    }

    #[test]
    fn errors_carry_positions() {
        let g = xy();
        match parse_query("P{Y(X=1)=1} - P{Q(X=0)=1}", &g).unwrap_err() {
            ParseError::UnknownVariable { name, column, .. } => {
                assert_eq!(name, "Q");
                assert_eq!(column, 17);
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            parse_query("P{Y(X=3)=1}", &g).unwrap_err(),
            ParseError::ValueOutOfRange { value: 3, .. }
        ));
        assert!(matches!(parse_query("P{Y(X=1)=1", &g).unwrap_err(), ParseError::Syntax { column: 11, .. }));
        assert!(parse_query("P{Y=1} + 1", &g).is_err());
        assert!(parse_query("", &g).is_err());
    }

    #[test]
    fn constraints() {
        let g = parse_graph("var X:2 left\nvar Y:2\nvar Y2:2\nedge X->Y->Y2\nunobserved Y").unwrap();
        let c = parse_constraint("Y2(Y=1) >= Y2(Y=0)", &g).unwrap();
        assert!(matches!(c, UserConstraint::Counterfactual { relation: Relation::Ge, .. }));
        let c = parse_constraint("P{Y(X=1)=1} <= 0.9", &g).unwrap();
        let UserConstraint::Linear { rhs, relation, .. } = c else { panic!() };
        assert_eq!(relation, Relation::Le);
        assert_eq!(rhs.constant, ratio(9, 10));
    }
}
