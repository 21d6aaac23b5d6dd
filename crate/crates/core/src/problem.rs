//! Riccati problem data, validation, manifests and the finite-difference
//! convection-diffusion generator.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::kernels::SparseLu;
use crate::matrix_market::{load_dense, load_matrix_market};
use crate::sparse::SparseMatrix;
use crate::{CMat, Cplx, Error, Result};

/// `(A, E, B, C)` for `A^H X E + E^H X A + C^H C - E^H X B B^H X E = 0`.
/// `E = None` stands for the identity.
#[derive(Clone, Debug)]
pub struct CareProblem {
    pub a: SparseMatrix,
    pub e: Option<SparseMatrix>,
    /// `n x m`
    pub b: CMat,
    /// `p x n`
    pub c: CMat,
}

/// A problem whose dimensions have been checked and whose `E` (if any) has
/// been factorized.
#[derive(Clone, Debug)]
pub struct CheckedProblem {
    problem: CareProblem,
    e_lu: Option<Arc<SparseLu>>,
    n: usize,
    m: usize,
    p: usize,
}

impl CareProblem {
    pub fn new(a: SparseMatrix, e: Option<SparseMatrix>, b: CMat, c: CMat) -> Self {
        Self { a, e, b, c }
    }

    pub fn validate(self) -> Result<CheckedProblem> {
        let n = self.a.nrows();
        if !self.a.is_square() {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, self.a.ncols())));
        }
        if let Some(e) = &self.e {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::DimensionMismatch(format!("E is {}x{}, A is {n}x{n}", e.nrows(), e.ncols())));
            }
        }
        if self.b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, A has order {n}", self.b.nrows())));
        }
        if self.c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, A has order {n}", self.c.ncols())));
        }
        let (m, p) = (self.b.ncols(), self.c.nrows());
        if m == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!("B has {m} columns and C has {p} rows; both must be positive")));
        }
        if 10 * p > n || 10 * m > n {
            log::warn!("p = {p}, m = {m} are not small compared with n = {n}");
        }
        let e_lu = match &self.e {
            None => None,
            Some(e) => match SparseLu::new(e)? {
                Some(lu) => Some(Arc::new(lu)),
                None => return Err(Error::SingularE { rcond: 0.0 }),
            },
        };
        Ok(CheckedProblem {
            problem: self,
            e_lu,
            n,
            m,
            p,
        })
    }
}

impl CheckedProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.problem.a
    }

    pub fn e(&self) -> Option<&SparseMatrix> {
        self.problem.e.as_ref()
    }

    pub fn b(&self) -> &CMat {
        &self.problem.b
    }

    pub fn c(&self) -> &CMat {
        &self.problem.c
    }

    pub fn problem(&self) -> &CareProblem {
        &self.problem
    }

    /// `E^H x`, or `x` when `E` is the identity.
    pub fn apply_eh(&self, x: &CMat) -> CMat {
        match &self.problem.e {
            Some(e) => e.adjoint_mul_dense(x),
            None => x.clone(),
        }
    }

    /// `E^{-H} x`, or `x` when `E` is the identity.
    pub fn solve_eh(&self, x: &CMat) -> CMat {
        match &self.e_lu {
            Some(lu) => lu.solve_adjoint(x),
            None => x.clone(),
        }
    }

    /// `E^{-1} x`, or `x` when `E` is the identity.
    pub fn solve_e(&self, x: &CMat) -> CMat {
        match &self.e_lu {
            Some(lu) => lu.solve(x),
            None => x.clone(),
        }
    }

    /// `||C C^H||_F`, which equals `||C^H C||_F`.
    pub fn cch_norm(&self) -> f64 {
        let c = &self.problem.c;
        (c * c.adjoint()).norm()
    }
}

/// A scalar coefficient `f(x)` or `f(y)` written as an arithmetic expression,
/// e.g. `10*x` or `100*y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    source: String,
    expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(e) => -e.eval(x, y),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(x, y), r.eval(x, y));
                match op {
                    '+' => l + r,
                    '-' => l - r,
                    '*' => l * r,
                    '/' => l / r,
                    _ => l.powf(r),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(x, y);
                match f.as_str() {
                    "sin" => v.sin(),
                    "cos" => v.cos(),
                    "exp" => v.exp(),
                    "sqrt" => v.sqrt(),
                    _ => v.abs(),
                }
            }
        }
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::InvalidArgument(format!(
            "coefficient '{}': {msg} at offset {}",
            String::from_utf8_lossy(self.src),
            self.pos
        ))
    }

    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op as char, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let ch = self.src[self.pos];
                    let exp_sign = (ch == b'+' || ch == b'-')
                        && self.pos > start
                        && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if ch.is_ascii_digit() || ch == b'.' || ch == b'e' || ch == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                text.parse::<f64>().map(Expr::Num).map_err(|_| self.err("bad number"))
            }
            Some(ch) if ch.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default().to_string();
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" | "cos" | "exp" | "sqrt" | "abs" => {
                        if self.peek() != Some(b'(') {
                            return Err(self.err("expected '(' after function name"));
                        }
                        Ok(Expr::Call(name, Box::new(self.atom()?)))
                    }
                    _ => Err(self.err(&format!("unknown identifier '{name}'"))),
                }
            }
            _ => Err(self.err("unexpected input")),
        }
    }
}

impl Coefficient {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = ExprParser {
            src: source.as_bytes(),
            pos: 0,
        };
        let expr = p.sum()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(Self {
            source: source.trim().to_string(),
            expr,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.expr.eval(x, y)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl std::str::FromStr for Coefficient {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Interval of the unit line with open or closed ends, written as
/// `(0.1,0.3]` or `.1<x<=.3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse interval '{s}'"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let out = if t.starts_with('(') || t.starts_with('[') {
            let lo_closed = t.starts_with('[');
            let hi_closed = match t.chars().last() {
                Some(']') => true,
                Some(')') => false,
                _ => return Err(bad()),
            };
            let (lo, hi) = t[1..t.len() - 1].split_once(',').ok_or_else(bad)?;
            Self {
                lo: num(lo)?,
                hi: num(hi)?,
                lo_closed,
                hi_closed,
            }
        } else {
            // lo<x<=hi form
            let split = |part: &str| -> Option<(String, bool)> {
                part.strip_prefix('=').map(|r| (r.to_string(), true)).or(Some((part.to_string(), false)))
            };
            let (lo_txt, rest) = t.split_once('<').ok_or_else(bad)?;
            let (var_txt, hi_txt) = rest.split_once('<').ok_or_else(bad)?;
            let lo_closed = var_txt.starts_with('=');
            let var = var_txt.trim_start_matches('=');
            if var != "x" && var != "y" {
                return Err(bad());
            }
            let (hi_txt, hi_closed) = split(hi_txt).ok_or_else(bad)?;
            Self {
                lo: num(lo_txt)?,
                hi: num(&hi_txt)?,
                lo_closed,
                hi_closed,
            }
        };
        if !(out.lo < out.hi) {
            return Err(bad());
        }
        Ok(out)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

fn default_fx() -> String {
    "10*x".into()
}
fn default_fy() -> String {
    "100*y".into()
}
fn default_b_range() -> String {
    "(0.1,0.3]".into()
}
fn default_c_range() -> String {
    "(0.7,0.9]".into()
}

/// Parameters of the finite-difference generator as they appear in manifests
/// and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdmSpec {
    pub grid: usize,
    #[serde(default = "default_fx")]
    pub fx: String,
    #[serde(default = "default_fy")]
    pub fy: String,
    #[serde(default = "default_b_range")]
    pub b_range: String,
    #[serde(default = "default_c_range")]
    pub c_range: String,
}

impl FdmSpec {
    pub fn new(grid: usize) -> Self {
        Self {
            grid,
            fx: default_fx(),
            fy: default_fy(),
            b_range: default_b_range(),
            c_range: default_c_range(),
        }
    }

    /// Parses `G[,FX,FY,BRANGE,CRANGE]`. Commas inside brackets belong to the
    /// interval and do not separate fields.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        for ch in s.chars() {
            match ch {
                '(' | '[' => depth += 1,
                ')' | ']' => depth -= 1,
                _ => {}
            }
            if ch == ',' && depth == 0 {
                parts.push(std::mem::take(&mut cur));
            } else {
                cur.push(ch);
            }
        }
        parts.push(cur);
        if parts.len() > 5 {
            return Err(Error::InvalidArgument(format!("too many fields in generator spec '{s}'")));
        }
        let grid = parts[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad grid size in '{s}'")))?;
        let mut spec = Self::new(grid);
        let slots = [&mut spec.fx, &mut spec.fy, &mut spec.b_range, &mut spec.c_range];
        for (slot, part) in slots.into_iter().zip(parts.iter().skip(1)) {
            if !part.trim().is_empty() {
                *slot = part.trim().to_string();
            }
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<CareProblem> {
        fdm_2d_problem(
            self.grid,
            &Coefficient::parse(&self.fx)?,
            &Coefficient::parse(&self.fy)?,
            Interval::parse(&self.b_range)?,
            Interval::parse(&self.c_range)?,
        )
    }
}

/// Finite-difference discretization of
/// `-Δu + f_x(x) u_x + f_y(y) u_y` on the unit square with homogeneous
/// Dirichlet boundary on a `g x g` interior grid, `h = 1/(g+1)`, x index
/// running fastest. The returned `A` is the negated discrete operator, so the
/// diffusion part is negative definite and `A` is stable. `B` and `C^H` are
/// 0/1 indicators of the nodes whose x-coordinate lies in the given ranges.
pub fn fdm_2d_problem(
    grid: usize,
    convection_x: &Coefficient,
    convection_y: &Coefficient,
    b_range: Interval,
    c_range: Interval,
) -> Result<CareProblem> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid size {grid} is below 2")));
    }
    let g = grid;
    let n = g * g;
    let h = 1.0 / (g as f64 + 1.0);
    let h2 = h * h;
    let idx = |i: usize, j: usize| j * g + i;
    let mut trip = Vec::with_capacity(5 * n);
    for j in 0..g {
        let y = (j + 1) as f64 * h;
        for i in 0..g {
            let x = (i + 1) as f64 * h;
            let fx = convection_x.eval(x, y);
            let fy = convection_y.eval(x, y);
            let k = idx(i, j);
            trip.push((k, k, Cplx::new(-4.0 / h2, 0.0)));
            let west = 1.0 / h2 + fx / (2.0 * h);
            let east = 1.0 / h2 - fx / (2.0 * h);
            let south = 1.0 / h2 + fy / (2.0 * h);
            let north = 1.0 / h2 - fy / (2.0 * h);
            if i > 0 {
                trip.push((k, idx(i - 1, j), Cplx::new(west, 0.0)));
            }
            if i + 1 < g {
                trip.push((k, idx(i + 1, j), Cplx::new(east, 0.0)));
            }
            if j > 0 {
                trip.push((k, idx(i, j - 1), Cplx::new(south, 0.0)));
            }
            if j + 1 < g {
                trip.push((k, idx(i, j + 1), Cplx::new(north, 0.0)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, trip)?;
    let indicator = |range: Interval| -> Result<CMat> {
        let v = CMat::from_fn(n, 1, |k, _| {
            let x = (k % g + 1) as f64 * h;
            Cplx::new(if range.contains(x) { 1.0 } else { 0.0 }, 0.0)
        });
        if v.iter().all(|z| z.re == 0.0) {
            return Err(Error::EmptyIndicator(range.to_string()));
        }
        Ok(v)
    };
    let b = indicator(b_range)?;
    let c = indicator(c_range)?.adjoint();
    Ok(CareProblem { a, e: None, b, c })
}

/// A problem manifest: either four Matrix Market paths (relative to the
/// manifest) or a generator description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<String>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub fdm: FdmSpec,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<CareProblem> {
        let path = path.as_ref();
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        manifest.resolve(path.parent().unwrap_or_else(|| Path::new(".")))
    }

    pub fn resolve(&self, base: &Path) -> Result<CareProblem> {
        if let Some(g) = &self.generator {
            return g.fdm.build();
        }
        let need = |v: &Option<String>, name: &str| -> Result<std::path::PathBuf> {
            v.as_ref()
                .map(|p| base.join(p))
                .ok_or_else(|| Error::InvalidArgument(format!("manifest lacks '{name}' and a generator")))
        };
        let a = load_matrix_market(need(&self.a, "A")?)?;
        let e = match &self.e {
            Some(p) => Some(load_matrix_market(base.join(p))?),
            None => None,
        };
        let b = load_dense(need(&self.b, "B")?)?;
        let c = load_dense(need(&self.c, "C")?)?;
        Ok(CareProblem { a, e, b, c })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Cplx {
        Cplx::new(re, 0.0)
    }

    fn scalar_problem(e: Option<SparseMatrix>) -> CareProblem {
        let a = SparseMatrix::from_triplets(5, 5, (0..5).map(|i| (i, i, c(-1.0 - i as f64)))).unwrap();
        CareProblem::new(a, e, CMat::from_element(5, 1, c(1.0)), CMat::from_element(1, 5, c(1.0)))
    }

    #[test]
    fn validate_accepts_consistent_dims() {
        let p = scalar_problem(None).validate().unwrap();
        assert_eq!((p.n(), p.m(), p.p()), (5, 1, 1));
    }

    #[test]
    fn validate_rejects_row_conflict() {
        let mut prob = scalar_problem(None);
        prob.b = CMat::from_element(4, 1, c(1.0));
        assert!(matches!(prob.validate(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn validate_rejects_singular_e() {
        let a = SparseMatrix::identity(2);
        let prob = CareProblem::new(
            a,
            Some(SparseMatrix::zeros(2, 2)),
            CMat::from_element(2, 1, c(1.0)),
            CMat::from_element(1, 2, c(1.0)),
        );
        assert!(matches!(prob.validate(), Err(Error::SingularE { .. })));
    }

    #[test]
    fn coefficient_expressions() {
        let f = Coefficient::parse("10*x").unwrap();
        assert_eq!(f.eval(0.5, 0.0), 5.0);
        let g = Coefficient::parse("1/2 + -y^2*3").unwrap();
        assert!((g.eval(0.0, 2.0) - (0.5 - 12.0)).abs() < 1e-15);
        assert_eq!(Coefficient::parse("0").unwrap().eval(0.3, 0.7), 0.0);
        assert!((Coefficient::parse("1.5e-1*sin(pi*x)").unwrap().eval(0.5, 0.0) - 0.15).abs() < 1e-15);
        assert!(Coefficient::parse("10*z").is_err());
        assert!(Coefficient::parse("(1+x").is_err());
    }

    #[test]
    fn interval_forms() {
        let a = Interval::parse("(0.1,0.3]").unwrap();
        let b = Interval::parse(".1<x<=.3").unwrap();
        assert_eq!(a, b);
        assert!(!a.contains(0.1) && a.contains(0.3) && a.contains(0.2));
        assert!(Interval::parse("[0.5,0.2]").is_err());
    }

    #[test]
    fn fdm_small_grid() {
        let prob = FdmSpec::new(3).build().unwrap();
        assert_eq!(prob.a.nrows(), 9);
        // h = 1/4, so the diffusion diagonal is 4/h^2 = 64 in magnitude.
        for k in 0..9 {
            assert_eq!(prob.a.get(k, k), c(-64.0));
        }
    }

    #[test]
    fn fdm_empty_indicator() {
        let err = FdmSpec {
            b_range: "(0.01,0.02]".into(),
            ..FdmSpec::new(3)
        }
        .build()
        .unwrap_err();
        assert!(matches!(err, Error::EmptyIndicator(_)));
    }

    #[test]
    fn fdm_spec_parsing() {
        let s = FdmSpec::parse("20,5*x,0,(0.2,0.4],[0.6,0.8)").unwrap();
        assert_eq!(s.grid, 20);
        assert_eq!(s.fx, "5*x");
        assert_eq!(s.fy, "0");
        assert_eq!(s.b_range, "(0.2,0.4]");
        assert_eq!(s.c_range, "[0.6,0.8)");
        assert_eq!(FdmSpec::parse("7").unwrap(), FdmSpec::new(7));
    }
}
