use super::{Formula, PlainQuery, Query, Temporal, Term, VarRef};

fn shift_term(t: &Term, by: i64) -> Term {
    match t {
        Term::Var(v) => Term::Var(VarRef { name: v.name.clone(), offset: v.offset + by }),
        other => other.clone(),
    }
}

/// Expand interval operators, placing every reference at its absolute
/// offset from the evaluation step.
fn expand(f: &Formula, base: i64) -> Formula {
    match f {
        Formula::Const(b) => Formula::Const(*b),
        Formula::Var(v) => Formula::Var(VarRef { name: v.name.clone(), offset: v.offset + base }),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, shift_term(a, base), shift_term(b, base)),
        Formula::Not(x) => Formula::Not(Box::new(expand(x, base))),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| expand(x, base)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| expand(x, base)).collect()),
        Formula::Implies(a, b) => Formula::Implies(Box::new(expand(a, base)), Box::new(expand(b, base))),
        Formula::Interval(op, window, body) => {
            let mut parts: Vec<Formula> = window.offsets().into_iter().map(|o| expand(body, base + i64::from(o))).collect();
            match (parts.len(), op) {
                (0, Temporal::All) => Formula::Const(true),
                (0, Temporal::Some) => Formula::Const(false),
                (1, _) => parts.pop().unwrap(),
                (_, Temporal::All) => Formula::And(parts),
                (_, Temporal::Some) => Formula::Or(parts),
            }
        }
    }
}

/// Unfold X/F without shifting; the result may still look forward
/// (`next_q`) and is not evaluable as is.
pub fn expand_intervals(q: &Query) -> PlainQuery {
    PlainQuery { system: q.system.clone(), formula: expand(&q.formula, 0), shift: 0, assumptions: q.assumptions.clone() }
}

/// Unfold X/F into conjunctions/disjunctions over their offsets, then move
/// the whole formula into the past by its largest forward offset.
pub fn unfold(q: &Query) -> PlainQuery {
    let expanded = expand(&q.formula, 0);
    let shift = expanded.vars().iter().map(|v| v.offset).max().unwrap_or(0).max(0);
    PlainQuery {
        system: q.system.clone(),
        formula: expand(&expanded, -shift),
        shift: shift as u32,
        assumptions: q.assumptions.clone(),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn unfolded(src: &str) -> String {
        unfold(&parse_query(src, Some(1_000_000)).unwrap()).formula.to_string()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(unfolded("(query s (=> p X[0,2][q]))"), "(=> prev2_p (and prev2_q prev_q q))");
        assert_eq!(unfolded("(query s (=> p F[0,2][q]))"), "(=> prev2_p (or prev2_q prev_q q))");
        assert_eq!(unfolded("(query s X[0,0][q])"), "q");
        assert_eq!(unfolded("(query s (=> p X[0sec,2sec][q]))"), "(=> prev2_p (and prev2_q prev_q q))");
    }

    #[test]
    fn forward_form_before_shifting() {
        let q = parse_query("(query sys (=> p X[0,2][q]))", Some(1_000_000)).unwrap();
        assert_eq!(expand_intervals(&q).to_string(), "(query sys (=> p (and q next_q next2_q)))");
        assert_eq!(unfold(&q).to_string(), "(query sys (=> prev2_p (and prev2_q prev_q q)))");
    }

    #[test]
    fn bracket_inclusivity() {
        assert_eq!(unfolded("(query s X(0,2][q])"), "(and prev_q q)");
        assert_eq!(unfolded("(query s F[0,2)[q])"), "(or prev_q q)");
        assert_eq!(unfolded("(query s X(1,2)[q])"), "true");
        assert_eq!(unfolded("(query s F(1,2)[q])"), "false");
    }

    #[test]
    fn single_step_lookahead() {
        assert_eq!(
            unfolded("(query afs_function (=> (= bat_level 19) X[1,1][(not (= AFS_State 0))]))"),
            "(=> (= prev_bat_level 19) (not (= AFS_State 0)))"
        );
    }

    #[test]
    fn nested_offsets_add_up() {
        assert_eq!(unfolded("(query s X[1,1][X[2,2][q]])"), "q");
        assert_eq!(unfolded("(query s (and p X[0,1][F[0,1][q]]))"), "(and prev2_p (and (or prev2_q prev_q) (or prev_q q)))");
    }
}
