use super::{Aggregation, CompareOp, CqlQuery, Literal, QueryCondition, QueryError};
use crate::storage::AggregateFunction;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    text: &'a str,
    tokens: Vec<(Tok, usize)>,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn syntax(text: &str, offset: usize, message: String) -> QueryError {
    let (line, column) = position(text, offset);
    QueryError::Syntax { line, column, message }
}

impl<'a> Lexer<'a> {
    fn run(text: &'a str) -> Result<Vec<(Tok, usize)>, QueryError> {
        let mut lx = Lexer {
            text,
            tokens: Vec::new(),
        };
        let mut chars = text.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c.is_alphabetic() || c == '_' {
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                lx.tokens.push((Tok::Ident(text[i..end].to_owned()), i));
            } else if c.is_ascii_digit() || (c == '-' && text[i + 1..].starts_with(|d: char| d.is_ascii_digit())) {
                let mut end = i + 1;
                chars.next();
                let mut seen_dot = false;
                while let Some(&(j, d)) = chars.peek() {
                    // a dot followed by a digit continues the number
                    if d.is_ascii_digit()
                        || (d == '.' && !seen_dot && text[j + 1..].starts_with(|x: char| x.is_ascii_digit()))
                    {
                        seen_dot |= d == '.';
                        end = j + 1;
                        chars.next();
                    } else {
                        break;
                    }
                }
                lx.tokens.push((Tok::Num(text[i..end].to_owned()), i));
            } else if c == '"' || c == '\'' {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, d)) = chars.next() {
                    match d {
                        '\\' => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => break,
                        },
                        d if d == c => {
                            closed = true;
                            break;
                        }
                        d => s.push(d),
                    }
                }
                if !closed {
                    return Err(syntax(text, i, "unterminated string literal".into()));
                }
                lx.tokens.push((Tok::Str(s), i));
            } else if "().,=<>".contains(c) {
                chars.next();
                lx.tokens.push((Tok::Sym(c), i));
            } else {
                return Err(syntax(text, i, format!("unexpected character `{c}`")));
            }
        }
        lx.tokens.push((Tok::End, lx.text.len()));
        Ok(lx.tokens)
    }
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> QueryError {
        syntax(
            self.text,
            self.offset(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(kw))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), QueryError> {
        if *self.peek() == Tok::Sym(c) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn literal(&mut self) -> Result<Literal, QueryError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::Text(s))
            }
            Tok::Num(n) => {
                self.advance();
                Literal::number(&n).ok_or_else(|| syntax(self.text, offset, format!("invalid number {n}")))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("true") || s.eq_ignore_ascii_case("false") => {
                self.advance();
                Ok(Literal::Bool(s.eq_ignore_ascii_case("true")))
            }
            _ => Err(self.error("a literal")),
        }
    }

    fn query(&mut self) -> Result<CqlQuery, QueryError> {
        self.keyword("AGGREGATE")?;
        let fn_offset = self.offset();
        let fname = self.ident("an aggregation function")?;
        let function = AggregateFunction::parse(&fname).ok_or_else(|| {
            syntax(
                self.text,
                fn_offset,
                format!("unknown aggregation function `{fname}` (expected sum, count, avg, min or max)"),
            )
        })?;
        self.sym('(')?;
        let measure = match self.peek() {
            Tok::Ident(_) => Some(self.ident("a measure")?),
            _ => None,
        };
        self.sym(')')?;
        self.keyword("FROM")?;
        let fact = self.ident("a fact relationship")?;
        let mut q = CqlQuery {
            name: None,
            fact_relationship: fact,
            rollups: Default::default(),
            conditions: Vec::new(),
            aggregation: Aggregation { function, measure },
        };
        while self.is_keyword("ROLLUP") {
            self.advance();
            let dim_offset = self.offset();
            let dim = self.ident("a dimension")?;
            self.keyword("TO")?;
            let level = self.ident("a level")?;
            if q.rollups.insert(dim.clone(), level).is_some() {
                return Err(syntax(
                    self.text,
                    dim_offset,
                    format!("dimension `{dim}` is rolled up twice"),
                ));
            }
        }
        if self.is_keyword("WHERE") {
            self.advance();
            loop {
                q.conditions.push(self.condition()?);
                if self.is_keyword("AND") {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        if *self.peek() != Tok::End {
            return Err(self.error(if q.conditions.is_empty() {
                "ROLLUP, WHERE or end of query"
            } else {
                "AND or end of query"
            }));
        }
        Ok(q)
    }

    fn condition(&mut self) -> Result<QueryCondition, QueryError> {
        let level = self.ident("a level")?;
        self.sym('.')?;
        let property = self.ident("a property")?;
        let (operator, values) = match self.peek() {
            Tok::Sym('=') => {
                self.advance();
                (CompareOp::Equals, vec![self.literal()?])
            }
            Tok::Sym('<') => {
                self.advance();
                (CompareOp::LessThan, vec![self.literal()?])
            }
            Tok::Sym('>') => {
                self.advance();
                (CompareOp::GreaterThan, vec![self.literal()?])
            }
            _ if self.is_keyword("IN") => {
                self.advance();
                self.sym('(')?;
                let mut vs = vec![self.literal()?];
                while *self.peek() == Tok::Sym(',') {
                    self.advance();
                    vs.push(self.literal()?);
                }
                self.sym(')')?;
                (CompareOp::In, vs)
            }
            _ => return Err(self.error("`=`, `<`, `>` or IN")),
        };
        Ok(QueryCondition {
            level,
            property,
            operator,
            values,
        })
    }
}

/// Parses CQL text. Names are not resolved here.
pub fn parse_cql(text: &str) -> Result<CqlQuery, QueryError> {
    let tokens = Lexer::run(text)?;
    Parser { text, tokens, pos: 0 }.query()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_example_query() {
        let q = parse_cql(r#"AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Weekend WHERE Venue.name = "Whistler Olympic Park""#)
            .unwrap();
        assert_eq!(q.fact_relationship, "Attends");
        assert_eq!(q.aggregation.function, AggregateFunction::Sum);
        assert_eq!(q.aggregation.measure.as_deref(), Some("TicketPrice"));
        assert_eq!(q.rollups["Date"], "Weekend");
        assert_eq!(q.conditions[0].values, [Literal::text("Whistler Olympic Park")]);
    }

    #[test]
    fn count_without_measure() {
        let q = parse_cql("aggregate COUNT() from Attends").unwrap();
        assert_eq!(q.aggregation.measure, None);
        assert!(q.rollups.is_empty() && q.conditions.is_empty());
    }

    #[test]
    fn in_lists_and_comparisons() {
        let q = parse_cql("AGGREGATE max(P) FROM F WHERE L.a IN (1, 2.50, 'x') AND L.b < -4 AND L.c > TRUE").unwrap();
        assert_eq!(q.conditions[0].operator, CompareOp::In);
        assert_eq!(
            q.conditions[0].values,
            [
                Literal::Number("1".into()),
                Literal::Number("2.5".into()),
                Literal::text("x")
            ]
        );
        assert_eq!(q.conditions[1].values, [Literal::Number("-4".into())]);
        assert_eq!(q.conditions[2].values, [Literal::Bool(true)]);
    }

    #[test]
    fn display_round_trips() {
        let text = r#"AGGREGATE avg(M) FROM F ROLLUP A TO X ROLLUP B TO Y WHERE X.n IN ("a\"b", 3) AND Y.k > 2"#;
        let q = parse_cql(text).unwrap();
        assert_eq!(parse_cql(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_cql("AGGREGATE sum(x) FROM F ROLLUP D Weekend") {
            Err(QueryError::Syntax {
                line: 1,
                column,
                message,
            }) => {
                assert_eq!(column, 34);
                assert!(message.contains("expected TO"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_cql("AGGREGATE median(x) FROM F"),
            Err(QueryError::Syntax { .. })
        ));
        assert!(matches!(
            parse_cql("AGGREGATE sum(x) FROM F WHERE L.p = \"open"),
            Err(QueryError::Syntax { .. })
        ));
        assert!(matches!(
            parse_cql(""),
            Err(QueryError::Syntax { line: 1, column: 1, .. })
        ));
    }
}
