use doflab_core::{format_rational, Rational};
use num_traits::ToPrimitive;

pub fn tuple(values: &[Rational]) -> String {
    format!("({})", values.iter().map(format_rational).collect::<Vec<_>>().join(", "))
}

pub fn strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

/// `p/q`, with a decimal approximation when the value is not an integer.
pub fn approx(q: &Rational) -> String {
    if q.is_integer() {
        return format_rational(q);
    }
    match q.to_f64() {
        Some(x) => format!("{} ({x:.4})", format_rational(q)),
        None => format_rational(q),
    }
}
