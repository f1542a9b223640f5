//! Tiny polynomial expression language for config files.
//!
//! Sums of products of numbers and powered variables: `"x1^2*x2 - 0.5*x3 + 2"`.
//! Variables are `x1..xd` (or `e1..ed`); the univariate form uses `z`.
//! No parentheses and no implicit multiplication.

use bernsim_core::Polynomial;

/// Named test functions. `random-grid` is a lattice function, not a polynomial.
pub const BUILTINS: &[&str] = &["square", "cube", "mixed-cubic", "random-grid"];

/// `square = x1^2`, `cube = x1^3`, `mixed-cubic = x1^2 x2`.
pub fn builtin(name: &str, d: usize) -> Option<Polynomial> {
    let mut e = vec![0u32; d];
    match name {
        "square" => e[0] = 2,
        "cube" => e[0] = 3,
        "mixed-cubic" => {
            e[0] = 2;
            e[1] = 1;
        }
        _ => return None,
    }
    Some(Polynomial::monomial(d, e, 1.0))
}

pub fn parse_polynomial(text: &str, d: usize) -> Result<Polynomial, String> {
    parse(text, d, &|name| {
        let digits = name
            .strip_prefix('x')
            .or_else(|| name.strip_prefix('e'))
            .ok_or_else(|| format!("unknown variable `{name}`; use x1..x{d}"))?;
        let digits = digits.strip_prefix('_').unwrap_or(digits);
        let i: usize = digits
            .parse()
            .map_err(|_| format!("unknown variable `{name}`; use x1..x{d}"))?;
        if i == 0 || i > d {
            return Err(format!("variable `{name}` is out of range for d = {d}"));
        }
        Ok(i - 1)
    })
}

/// Polynomial in the single variable `z`.
pub fn parse_univariate(text: &str) -> Result<Polynomial, String> {
    parse(text, 1, &|name| {
        if name == "z" {
            Ok(0)
        } else {
            Err(format!("unknown variable `{name}`; use z"))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Var(String),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1
            }
            '-' => {
                out.push(Token::Minus);
                i += 1
            }
            '*' => {
                out.push(Token::Star);
                i += 1
            }
            '^' => {
                out.push(Token::Caret);
                i += 1
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part only when a digit follows
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token::Num(
                    s.parse().map_err(|_| format!("bad number `{s}`"))?,
                ));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Var(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

fn parse(
    text: &str,
    d: usize,
    var: &dyn Fn(&str) -> Result<usize, String>,
) -> Result<Polynomial, String> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Polynomial::zero(d);
    let mut pos = 0;
    let mut first = true;
    while pos < tokens.len() {
        let mut sign = 1.0;
        match tokens[pos] {
            Token::Plus => pos += 1,
            Token::Minus => {
                sign = -1.0;
                pos += 1
            }
            _ if first => {}
            _ => return Err("expected `+` or `-` between terms".into()),
        }
        first = false;
        let mut coef = sign;
        let mut exps = vec![0u32; d];
        loop {
            match tokens.get(pos) {
                Some(Token::Num(v)) => {
                    coef *= v;
                    pos += 1;
                }
                Some(Token::Var(name)) => {
                    let i = var(name)?;
                    pos += 1;
                    let mut power = 1u32;
                    if tokens.get(pos) == Some(&Token::Caret) {
                        match tokens.get(pos + 1) {
                            Some(Token::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= 64.0 => {
                                power = *v as u32;
                                pos += 2;
                            }
                            _ => {
                                return Err(format!(
                                    "`{name}^` needs a small non-negative integer power"
                                ))
                            }
                        }
                    }
                    exps[i] += power;
                }
                _ => return Err("expected a number or variable".into()),
            }
            if tokens.get(pos) == Some(&Token::Star) {
                pos += 1;
            } else {
                break;
            }
        }
        p.add_term(exps, coef);
    }
    Ok(p)
}
