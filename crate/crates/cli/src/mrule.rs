//! Clause-count rules such as `C*n*log(n)*(n/l)^(k/2-1)/eps^2`.
//!
//! Variables `n`, `k`, `eps` and `l` (the Kikuchi level) are floats, so
//! `k/2` is not truncated. `log` and `ln` are natural logarithms; `sqrt` and
//! `exp` are also available, as are user constants.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes,
    EvalexprError, Function, HashMapContext, Node, Value,
};

use crate::error::{CliError, CliResult};

pub struct MRule {
    source: String,
    tree: Node<DefaultNumericTypes>,
    constants: Vec<(String, f64)>,
}

const RESERVED: [&str; 4] = ["n", "k", "eps", "l"];

fn unary(f: fn(f64) -> f64) -> Function<DefaultNumericTypes> {
    Function::new(move |arg: &Value<DefaultNumericTypes>| Ok(Value::Float(f(arg.as_number()?))))
}

impl MRule {
    /// Parses `source`; `constants` are `NAME=VALUE` strings.
    pub fn parse(source: &str, constants: &[String]) -> CliResult<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| CliError::usage(format!("m-rule `{source}`: {e}")))?;
        let mut parsed = Vec::new();
        for c in constants {
            let (name, value) = c
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("constant `{c}` is not NAME=VALUE")))?;
            let name = name.trim();
            if RESERVED.contains(&name) {
                return Err(CliError::usage(format!("constant name `{name}` is reserved")));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| CliError::usage(format!("constant `{c}`: {e}")))?;
            parsed.push((name.to_string(), value));
        }
        Ok(MRule {
            source: source.to_string(),
            tree,
            constants: parsed,
        })
    }

    /// `⌈rule(n, k, eps, l)⌉`, which must be a finite count ≥ 1.
    pub fn eval(&self, n: usize, k: usize, eps: f64, ell: usize) -> CliResult<usize> {
        let err = |e: EvalexprError<DefaultNumericTypes>| CliError::usage(format!("m-rule `{}`: {e}", self.source));
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (name, f) in [("log", f64::ln as fn(f64) -> f64), ("ln", f64::ln), ("sqrt", f64::sqrt), ("exp", f64::exp)] {
            ctx.set_function(name.into(), unary(f)).map_err(err)?;
        }
        for (name, v) in [("n", n as f64), ("k", k as f64), ("eps", eps), ("l", ell as f64)] {
            ctx.set_value(name.into(), Value::Float(v)).map_err(err)?;
        }
        for (name, v) in &self.constants {
            ctx.set_value(name.clone(), Value::Float(*v)).map_err(err)?;
        }
        let m = self.tree.eval_number_with_context(&ctx).map_err(err)?;
        if !m.is_finite() || !(1.0..=1e12).contains(&m) {
            return Err(CliError::usage(format!(
                "m-rule `{}` gives m = {m} at n = {n}, eps = {eps}",
                self.source
            )));
        }
        Ok(m.ceil() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_count_rule() {
        let rule = MRule::parse("C*n*log(n)*(n/l)^(k/2-1)/eps^2", &["C=2".into()]).unwrap();
        // k = 2 removes the (n/l) factor
        let want = (2.0 * 100.0 * 100f64.ln() / 0.25f64).ceil() as usize;
        assert_eq!(rule.eval(100, 2, 0.5, 1).unwrap(), want);
        // k = 3 keeps a square-root factor instead of truncating k/2
        let want = (2.0 * 100.0 * 100f64.ln() * 50f64.sqrt() / 0.25).ceil() as usize;
        assert_eq!(rule.eval(100, 3, 0.5, 2).unwrap(), want);
    }

    #[test]
    fn bad_rules_are_usage_errors() {
        assert!(MRule::parse("n*", &[]).and_then(|r| r.eval(10, 2, 0.1, 1)).is_err());
        assert!(MRule::parse("(n", &[]).is_err());
        assert!(MRule::parse("n", &["n=3".into()]).is_err());
        assert!(MRule::parse("C*n", &[]).unwrap().eval(10, 2, 0.1, 1).is_err());
        assert!(MRule::parse("n-100", &[]).unwrap().eval(10, 2, 0.1, 1).is_err());
    }
}
