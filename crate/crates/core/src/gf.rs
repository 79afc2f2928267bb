//! Just enough finite-field arithmetic to build Paley conference matrices:
//! GF(p^k) elements, subtraction and the quadratic character.

/// Splits `q` as `p^k` with `p` prime, or returns `None`.
pub(crate) fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0 || d * d > q).map(|d| if q % d == 0 { d } else { q })?;
    let mut rest = q;
    let mut k = 0;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

/// GF(p^k) with elements encoded as integers `0..q` (base-`p` digits are the
/// polynomial coefficients, lowest degree first).
pub(crate) struct Field {
    p: u64,
    k: usize,
    q: u64,
    /// Monic irreducible modulus, coefficients of degree 0..k (leading 1 implied).
    modulus: Vec<u64>,
    /// `chi[a]` is the quadratic character of element `a`.
    chi: Vec<i8>,
}

impl Field {
    pub(crate) fn new(q: u64) -> Option<Self> {
        let (p, k) = prime_power(q)?;
        let k = k as usize;
        let modulus = if k == 1 { vec![0] } else { find_irreducible(p, k) };
        let mut field = Field { p, k, q, modulus, chi: Vec::new() };
        let mut chi = vec![-1i8; q as usize];
        chi[0] = 0;
        for a in 1..q {
            let sq = field.mul(a, a);
            chi[sq as usize] = 1;
        }
        field.chi = chi;
        Some(field)
    }

    pub(crate) fn order(&self) -> u64 {
        self.q
    }

    fn digits(&self, mut a: u64) -> Vec<u64> {
        let mut d = vec![0; self.k];
        for slot in d.iter_mut() {
            *slot = a % self.p;
            a /= self.p;
        }
        d
    }

    fn encode(&self, d: &[u64]) -> u64 {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub(crate) fn sub(&self, a: u64, b: u64) -> u64 {
        let (da, db) = (self.digits(a), self.digits(b));
        let d: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + self.p - y) % self.p).collect();
        self.encode(&d)
    }

    pub(crate) fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = poly_mul(&self.digits(a), &self.digits(b), self.p);
        self.encode(&poly_rem_monic(&prod, &self.modulus, self.p))
    }

    pub(crate) fn chi(&self, a: u64) -> i8 {
        self.chi[a as usize]
    }
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

/// Remainder of `a` modulo the monic polynomial `x^k + modulus(x)`.
fn poly_rem_monic(a: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let k = modulus.len();
    let mut r = a.to_vec();
    for deg in (k..r.len()).rev() {
        let c = r[deg];
        if c == 0 {
            continue;
        }
        r[deg] = 0;
        // x^deg = x^(deg-k) * x^k = -x^(deg-k) * modulus(x)
        for (i, &m) in modulus.iter().enumerate() {
            let idx = deg - k + i;
            r[idx] = (r[idx] + p - (c * m) % p) % p;
        }
    }
    r.truncate(k);
    r.resize(k, 0);
    r
}

/// First monic irreducible polynomial of degree `k` over GF(p), by trial
/// division with every monic polynomial of degree 1..=k/2.
fn find_irreducible(p: u64, k: usize) -> Vec<u64> {
    let count = p.pow(k as u32);
    (0..count)
        .map(|code| {
            let mut c = code;
            (0..k)
                .map(|_| {
                    let d = c % p;
                    c /= p;
                    d
                })
                .collect::<Vec<u64>>()
        })
        .find(|low| {
            (1..=k / 2).all(|deg| {
                (0..p.pow(deg as u32)).all(|code| {
                    let mut c = code;
                    let divisor: Vec<u64> = (0..deg)
                        .map(|_| {
                            let d = c % p;
                            c /= p;
                            d
                        })
                        .collect();
                    let mut full = low.clone();
                    full.push(1);
                    poly_rem_monic(&full, &divisor, p).iter().any(|&x| x != 0)
                })
            })
        })
        .expect("irreducible polynomials exist for every degree")
}
