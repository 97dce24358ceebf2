use harmcoord::poly::{rational, Monomial};
use harmcoord::Polynomial;
use proptest::prelude::*;

/// Random polynomial in `vars` variables with total degree at most `max_deg`
/// and small rational coefficients.
pub fn poly(vars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let term = (prop::collection::vec(0..=max_deg, vars), -20i64..=20, 1i64..=6);
    prop::collection::vec(term, 0..6).prop_map(move |terms| {
        Polynomial::from_terms(terms.into_iter().map(|(mut e, n, d)| {
            while e.iter().sum::<u32>() > max_deg {
                let i = e.iter().position(|&x| x > 0).unwrap();
                e[i] -= 1;
            }
            (Monomial::from_exponents(e), rational(n, d))
        }))
    })
}
