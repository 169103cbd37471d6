//! Parser for the LP text format subset used by mechanism exports:
//! `Minimize`/`Maximize`, `Subject To` with named `<=`/`>=`/`=` rows,
//! `Bounds`, `End`. Lines may wrap; `\` starts a comment.

use std::collections::HashMap;

use crate::LpcheckError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub minimize: bool,
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Default)]
struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    match lower.as_str() {
        "minimize" | "maximize" | "min" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Parses a linear expression from tokens, consuming until an operator or
/// the end. Returns the terms and the position of the first unconsumed
/// token.
fn parse_expr(
    tokens: &[String],
    mut pos: usize,
    vars: &mut VarTable,
) -> Result<(Vec<(usize, f64)>, usize), LpcheckError> {
    let mut terms: Vec<(usize, f64)> = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while pos < tokens.len() {
        let t = tokens[pos].as_str();
        match t {
            "+" => {
                sign = 1.0;
                pos += 1;
            }
            "-" => {
                sign = -sign;
                pos += 1;
            }
            "<=" | ">=" | "=" | "<" | ">" => break,
            _ => {
                if let Ok(v) = t.parse::<f64>() {
                    if coef.is_some() {
                        return Err(LpcheckError::Parse(format!(
                            "two consecutive numbers near {t:?}"
                        )));
                    }
                    coef = Some(v);
                    pos += 1;
                } else {
                    let idx = vars.intern(t);
                    terms.push((idx, sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                    pos += 1;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(LpcheckError::Parse("dangling coefficient".into()));
    }
    Ok((terms, pos))
}

fn parse_cmp(token: &str) -> Result<Cmp, LpcheckError> {
    match token {
        "<=" | "<" => Ok(Cmp::Le),
        ">=" | ">" => Ok(Cmp::Ge),
        "=" => Ok(Cmp::Eq),
        other => Err(LpcheckError::Parse(format!(
            "expected comparison, got {other:?}"
        ))),
    }
}

pub fn parse_str(text: &str) -> Result<LpProblem, LpcheckError> {
    let mut minimize = true;
    let mut section = Section::Preamble;
    let mut objective_tokens: Vec<String> = Vec::new();
    let mut constraint_tokens: Vec<String> = Vec::new();
    let mut bounds_lines: Vec<String> = Vec::new();

    for raw in text.lines() {
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            if s == Section::Objective {
                let l = line.trim().to_ascii_lowercase();
                minimize = l.starts_with("min");
            }
            section = s;
            if s == Section::End {
                break;
            }
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(LpcheckError::Parse(format!(
                    "content before the objective section: {:?}",
                    line.trim()
                )))
            }
            Section::Objective => {
                objective_tokens.extend(line.split_whitespace().map(str::to_string))
            }
            Section::Constraints => {
                constraint_tokens.extend(line.split_whitespace().map(str::to_string))
            }
            Section::Bounds => bounds_lines.push(line.trim().to_string()),
            Section::End => {}
        }
    }

    let mut vars = VarTable::default();

    // Objective: optional "name:" then one expression.
    let mut pos = 0;
    if let Some(first) = objective_tokens.first() {
        if first.ends_with(':') {
            pos = 1;
        } else if objective_tokens.get(1).map(String::as_str) == Some(":") {
            pos = 2;
        }
    }
    let (objective_terms, end) = parse_expr(&objective_tokens, pos, &mut vars)?;
    if end != objective_tokens.len() {
        return Err(LpcheckError::Parse("trailing tokens in objective".into()));
    }

    // Constraints: repeated "name: expr cmp rhs".
    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < constraint_tokens.len() {
        let name_token = &constraint_tokens[pos];
        let name = if let Some(stripped) = name_token.strip_suffix(':') {
            pos += 1;
            stripped.to_string()
        } else {
            format!("r{}", rows.len())
        };
        let (terms, next) = parse_expr(&constraint_tokens, pos, &mut vars)?;
        if next >= constraint_tokens.len() {
            return Err(LpcheckError::Parse(format!(
                "row {name} has no comparison operator"
            )));
        }
        let cmp = parse_cmp(&constraint_tokens[next])?;
        let rhs_token = constraint_tokens.get(next + 1).ok_or_else(|| {
            LpcheckError::Parse(format!("row {name} has no right-hand side"))
        })?;
        let rhs: f64 = rhs_token
            .parse()
            .map_err(|_| LpcheckError::Parse(format!("bad right-hand side {rhs_token:?}")))?;
        rows.push(Row {
            name,
            terms,
            cmp,
            rhs,
        });
        pos = next + 2;
    }

    // Bounds: the forms "v >= n", "v <= n", "n <= v", "n <= v <= n", "v free".
    let mut lower = vec![0.0; vars.names.len()];
    let mut upper = vec![f64::INFINITY; vars.names.len()];
    let ensure = |vars: &mut VarTable, name: &str, lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
        let i = vars.intern(name);
        if i >= lower.len() {
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        i
    };
    for line in &bounds_lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            [v, "free"] => {
                let i = ensure(&mut vars, v, &mut lower, &mut upper);
                lower[i] = f64::NEG_INFINITY;
            }
            [v, op, num] if num.parse::<f64>().is_ok() => {
                let i = ensure(&mut vars, v, &mut lower, &mut upper);
                let num: f64 = num.parse().expect("checked");
                match parse_cmp(op)? {
                    Cmp::Ge => lower[i] = num,
                    Cmp::Le => upper[i] = num,
                    Cmp::Eq => {
                        lower[i] = num;
                        upper[i] = num;
                    }
                }
            }
            [num, op, v] if num.parse::<f64>().is_ok() => {
                let i = ensure(&mut vars, v, &mut lower, &mut upper);
                let num: f64 = num.parse().expect("checked");
                match parse_cmp(op)? {
                    Cmp::Le => lower[i] = num,
                    Cmp::Ge => upper[i] = num,
                    Cmp::Eq => {
                        lower[i] = num;
                        upper[i] = num;
                    }
                }
            }
            [lo, "<=", v, "<=", hi] => {
                let i = ensure(&mut vars, v, &mut lower, &mut upper);
                lower[i] = lo
                    .parse()
                    .map_err(|_| LpcheckError::Parse(format!("bad bound {lo:?}")))?;
                upper[i] = hi
                    .parse()
                    .map_err(|_| LpcheckError::Parse(format!("bad bound {hi:?}")))?;
            }
            _ => {
                return Err(LpcheckError::Parse(format!(
                    "unsupported bounds line {line:?}"
                )))
            }
        }
    }

    let mut objective = vec![0.0; vars.names.len()];
    for (i, c) in objective_terms {
        objective[i] += c;
    }
    // Rows may have interned new variables after the objective was sized.
    objective.resize(vars.names.len(), 0.0);
    lower.resize(vars.names.len(), 0.0);
    upper.resize(vars.names.len(), f64::INFINITY);

    Ok(LpProblem {
        minimize,
        var_names: vars.names,
        objective,
        rows,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_small_program() {
        let text = "\\ comment\nMinimize\n obj: 0.5 x + 0.25 y\nSubject To\n r1: x - 2 y <= 0\n r2: x + y = 1\nBounds\n x >= 0\n y >= 0\nEnd\n";
        let lp = parse_str(text).unwrap();
        assert!(lp.minimize);
        assert_eq!(lp.var_names, vec!["x", "y"]);
        assert_eq!(lp.objective, vec![0.5, 0.25]);
        assert_eq!(lp.rows.len(), 2);
        assert_eq!(lp.rows[0].cmp, Cmp::Le);
        assert_eq!(lp.rows[0].terms, vec![(0, 1.0), (1, -2.0)]);
        assert_eq!(lp.rows[1].cmp, Cmp::Eq);
        assert_eq!(lp.rows[1].rhs, 1.0);
        assert_eq!(lp.lower, vec![0.0, 0.0]);
    }

    #[test]
    fn handles_wrapped_rows() {
        let text = "Minimize\n obj: x\n   + y\nSubject To\n r: x + y\n   + z = 3\nEnd\n";
        let lp = parse_str(text).unwrap();
        assert_eq!(lp.objective, vec![1.0, 1.0, 0.0]);
        assert_eq!(lp.rows[0].terms.len(), 3);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_str("Minimize\n obj: 1 2 x\nEnd\n").is_err());
        assert!(parse_str("stuff\nMinimize\n obj: x\nEnd\n").is_err());
    }
}
