//! CPLEX LP text writer.

use std::fmt::Write;

use num_traits::{One, Signed, Zero};

use super::{LinTerm, MilpModel, Rational, Sense};

const TERMS_PER_LINE: usize = 8;

/// Decimal rendering; exact when the denominator has only factors 2 and 5.
fn format_number(r: Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut d = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d == 1 {
        let digits = twos.max(fives);
        if let Some(scale) = 10i64.checked_pow(digits) {
            let scaled = r * Rational::from_integer(scale);
            if scaled.is_integer() {
                let v = scaled.to_integer();
                let sign = if v < 0 { "-" } else { "" };
                let v = v.unsigned_abs();
                let s = scale as u64;
                return format!("{sign}{}.{:0width$}", v / s, v % s, width = digits as usize);
            }
        }
    }
    let f = *r.numer() as f64 / *r.denom() as f64;
    format!("{f:e}")
}

fn write_terms(out: &mut String, model: &MilpModel, term: &LinTerm) {
    if term.terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, (c, v)) in term.terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = model.variables()[*v].name();
        let sign = if c.is_negative() { "-" } else { "+" };
        let abs = c.abs();
        if k == 0 && sign == "+" {
            // leading plus is omitted
        } else {
            write!(out, " {sign}").unwrap();
        }
        if abs.is_one() {
            write!(out, " {name}").unwrap();
        } else {
            write!(out, " {} {name}", format_number(abs)).unwrap();
        }
    }
}

/// Renders `model` in CPLEX LP format. Output is deterministic: variables
/// and rows appear in declaration order.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ boundfa 0/1 model\n");
    out.push_str(match model.sense() {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let obj = model.objective();
    out.push_str(" obj:");
    if obj.terms.is_empty() {
        write!(out, " {}", format_number(obj.constant)).unwrap();
    } else {
        write_terms(&mut out, model, obj);
        if !obj.constant.is_zero() {
            let sign = if obj.constant.is_negative() { "-" } else { "+" };
            write!(out, " {sign} {}", format_number(obj.constant.abs())).unwrap();
        }
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for c in model.constraints() {
        write!(out, " {}:", c.name).unwrap();
        write_terms(&mut out, model, &c.lhs);
        let rhs = c.rhs - c.lhs.constant;
        writeln!(out, " {} {}", c.relation.symbol(), format_number(rhs)).unwrap();
    }

    out.push_str("Bounds\n");
    for v in model.variables() {
        writeln!(out, " 0 <= {v} <= 1").unwrap();
    }
    out.push_str("Binaries\n");
    for chunk in model.variables().chunks(TERMS_PER_LINE) {
        let names: Vec<String> = chunk.iter().map(|v| v.name()).collect();
        writeln!(out, " {}", names.join(" ")).unwrap();
    }
    out.push_str("End\n");
    out
}
