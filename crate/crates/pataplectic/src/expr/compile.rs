use super::{Atom, Expr, Func};
use num_traits::ToPrimitive;

#[derive(Clone, Debug)]
enum CAtom {
    Sym(usize),
    Func(Func, Box<Compiled>),
    Base(Box<Compiled>),
}

/// Floating-point evaluation plan for an [`Expr`]; constants are converted once.
#[derive(Clone, Debug)]
pub struct Compiled {
    terms: Vec<(f64, Vec<(CAtom, i32)>)>,
}

impl Compiled {
    pub fn new(e: &Expr) -> Self {
        let terms = e
            .terms()
            .map(|(m, c)| {
                let fs = m
                    .factors()
                    .iter()
                    .map(|(a, k)| {
                        let ca = match a {
                            Atom::Sym(s) => CAtom::Sym(*s as usize),
                            Atom::Func(f, x) => CAtom::Func(*f, Box::new(Compiled::new(x))),
                            Atom::Base(x) => CAtom::Base(Box::new(Compiled::new(x))),
                        };
                        (ca, *k)
                    })
                    .collect();
                (c.to_f64().unwrap_or(f64::NAN), fs)
            })
            .collect();
        Compiled { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, fs) in &self.terms {
            let mut t = *c;
            for (a, k) in fs {
                let v = match a {
                    CAtom::Sym(s) => point[*s],
                    CAtom::Func(f, x) => {
                        let v = x.eval(point);
                        match f {
                            Func::Exp => v.exp(),
                            Func::Sin => v.sin(),
                            Func::Cos => v.cos(),
                            Func::Sqrt => v.sqrt(),
                        }
                    }
                    CAtom::Base(x) => x.eval(point),
                };
                t *= if *k == 1 { v } else { v.powi(*k) };
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_evaluation() {
        let x = Expr::sym(0);
        let y = Expr::sym(1);
        let e = &(&x.pow(3) * &y.cos()) + &(&x + &y).recip();
        let pt = [0.7, -0.3];
        assert!((e.compile().eval(&pt) - e.eval(&pt)).abs() < 1e-15);
    }
}
